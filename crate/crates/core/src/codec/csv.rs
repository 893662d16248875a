//! Delimited-text ingestion for vendor-flavored measurement report traces.
//!
//! Some base stations export already-decoded reports as CSV rather than
//! raw records. The schema here is one row per report with the neighbor
//! group repeated up to eight times; non-applicable cells stay empty.

use std::str::FromStr;

use crate::model::{
    validate_report, BandIndicator, CellIdentity, Cgi, MeasurementReport, NeighborResult, Plmn,
    RatType, SignalMeasurement, MAX_NEIGHBORS,
};

use super::CodecError;

const FIXED_COLUMNS: [&str; 7] = [
    "timestamp_ms",
    "collector_pci",
    "collector_earfcn",
    "meas_id",
    "pcell_rsrp",
    "pcell_rsrq",
    "nbr_rat",
];

const NEIGHBOR_COLUMNS: [&str; 11] = [
    "pci_or_arfcn",
    "band",
    "ncc",
    "bcc",
    "rsrp",
    "rsrq",
    "rssi",
    "mcc",
    "mnc",
    "lac",
    "ci",
];

/// The normative header row for CSV traces.
pub fn trace_csv_header() -> String {
    let mut cols: Vec<String> = FIXED_COLUMNS.iter().map(|c| c.to_string()).collect();
    for i in 1..=MAX_NEIGHBORS {
        for col in NEIGHBOR_COLUMNS {
            cols.push(format!("nbr{i}_{col}"));
        }
    }
    cols.join(",")
}

/// Parse a CSV trace into reports, one per data row.
///
/// The header must match [`trace_csv_header`] exactly. Rows that fail
/// report validation are rejected with their line number.
pub fn parse_csv_trace(text: &str) -> Result<Vec<MeasurementReport>, CodecError> {
    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes());

    let expected = trace_csv_header();
    let found = reader
        .headers()
        .map_err(|e| CodecError::RowParse {
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if found != expected {
        return Err(CodecError::HeaderMismatch { expected, found });
    }

    let mut reports = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| CodecError::RowParse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        reports.push(parse_row(&record, line)?);
    }
    Ok(reports)
}

fn parse_row(record: &::csv::StringRecord, line: u64) -> Result<MeasurementReport, CodecError> {
    let fail = |message: String| CodecError::RowParse { line, message };

    let cell = |idx: usize| record.get(idx).unwrap_or("").trim();
    let timestamp_ms: u64 = parse_field(cell(0), "timestamp_ms", line)?;
    let collector_pci: u16 = parse_field(cell(1), "collector_pci", line)?;
    let collector_earfcn: u32 = parse_field(cell(2), "collector_earfcn", line)?;
    let meas_id: u8 = parse_field(cell(3), "meas_id", line)?;
    let pcell_rsrp: u8 = parse_field(cell(4), "pcell_rsrp", line)?;
    let pcell_rsrq: u8 = parse_field(cell(5), "pcell_rsrq", line)?;
    let rat_text = cell(6);

    let mut neighbors = Vec::new();
    for i in 0..MAX_NEIGHBORS {
        let base = FIXED_COLUMNS.len() + i * NEIGHBOR_COLUMNS.len();
        let id_cell = cell(base);
        if id_cell.is_empty() {
            continue;
        }
        let rat: RatType = rat_text
            .parse()
            .map_err(|e| fail(format!("nbr_rat: {e}")))?;
        neighbors.push(parse_neighbor(record, base, rat, line)?);
    }
    if !neighbors.is_empty() && rat_text.is_empty() {
        return Err(fail("nbr_rat empty but neighbors present".into()));
    }

    let report = MeasurementReport {
        timestamp_ms,
        collector_pci,
        collector_earfcn,
        meas_id,
        pcell: SignalMeasurement::eutra(pcell_rsrp, pcell_rsrq),
        neighbors,
    };
    let violations = validate_report(&report);
    if !violations.is_empty() {
        return Err(fail(
            violations
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("; "),
        ));
    }
    Ok(report)
}

fn parse_neighbor(
    record: &::csv::StringRecord,
    base: usize,
    rat: RatType,
    line: u64,
) -> Result<NeighborResult, CodecError> {
    let fail = |message: String| CodecError::RowParse { line, message };
    let cell = |offset: usize| record.get(base + offset).unwrap_or("").trim();
    let group = (base - FIXED_COLUMNS.len()) / NEIGHBOR_COLUMNS.len() + 1;
    let name = |offset: usize| format!("nbr{group}_{}", NEIGHBOR_COLUMNS[offset]);

    let require_empty = |offset: usize| -> Result<(), CodecError> {
        if cell(offset).is_empty() {
            Ok(())
        } else {
            Err(fail(format!("{} must be empty for {rat}", name(offset))))
        }
    };
    let optional = |offset: usize| -> Result<Option<u64>, CodecError> {
        let text = cell(offset);
        if text.is_empty() {
            return Ok(None);
        }
        text.parse::<u64>()
            .map(Some)
            .map_err(|e| fail(format!("{}: {e}", name(offset))))
    };
    let required = |offset: usize| -> Result<u64, CodecError> {
        optional(offset)?.ok_or_else(|| fail(format!("{} is required for {rat}", name(offset))))
    };

    let cgi = {
        let mcc = cell(7);
        let mnc = cell(8);
        let lac = optional(9)?;
        let ci = optional(10)?;
        match (mcc.is_empty(), mnc.is_empty(), lac, ci) {
            (true, true, None, None) => None,
            (false, false, Some(lac), Some(ci)) => {
                let plmn = Plmn::parse(mcc, mnc).map_err(&fail)?;
                let lac =
                    u16::try_from(lac).map_err(|_| fail(format!("{}: out of range", name(9))))?;
                let ci = u32::try_from(ci).unwrap();
                Some(Cgi::new(plmn, lac, ci))
            }
            _ => {
                return Err(fail(format!(
                    "cgi columns for nbr{group} must be all present or all empty"
                )))
            }
        }
    };

    match rat {
        RatType::Eutra => {
            require_empty(1)?;
            require_empty(2)?;
            require_empty(3)?;
            require_empty(6)?;
            let pci = u16::try_from(required(0)?)
                .map_err(|_| fail(format!("{}: out of range", name(0))))?;
            let rsrp_coded = optional(4)?.map(|v| v as u8);
            let rsrq_coded = optional(5)?.map(|v| v as u8);
            // The schema carries no per-neighbor frequency; E-UTRA
            // neighbors are measured on the collector's carrier.
            let collector_earfcn: u32 = record
                .get(2)
                .unwrap_or("")
                .trim()
                .parse()
                .map_err(|e| fail(format!("collector_earfcn: {e}")))?;
            Ok(NeighborResult {
                identity: CellIdentity::Eutra {
                    pci,
                    earfcn: collector_earfcn,
                    cgi,
                },
                signal: SignalMeasurement {
                    rsrp_coded,
                    rsrq_coded,
                    ..Default::default()
                },
            })
        }
        RatType::Gera => {
            require_empty(4)?;
            require_empty(5)?;
            let arfcn = u16::try_from(required(0)?)
                .map_err(|_| fail(format!("{}: out of range", name(0))))?;
            let band =
                BandIndicator::from_str(cell(1)).map_err(|e| fail(format!("{}: {e}", name(1))))?;
            let ncc = required(2)? as u8;
            let bcc = required(3)? as u8;
            let rssi_coded = optional(6)?.map(|v| v as u8);
            Ok(NeighborResult {
                identity: CellIdentity::Gera {
                    arfcn,
                    band,
                    ncc,
                    bcc,
                    cgi,
                },
                signal: SignalMeasurement {
                    rssi_coded,
                    ..Default::default()
                },
            })
        }
        other => Err(fail(format!("{other} neighbors are not supported"))),
    }
}

fn parse_field<T: FromStr>(text: &str, field: &str, line: u64) -> Result<T, CodecError>
where
    T::Err: std::fmt::Display,
{
    text.parse().map_err(|e| CodecError::RowParse {
        line,
        message: format!("{field}: {e}"),
    })
}
