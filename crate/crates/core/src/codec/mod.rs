//! Bit-exact binary trace format (MRTF) for measurement reports, plus a
//! delimited-text ingestion path for vendor-flavored traces.
//!
//! An MRTF file is the 4-byte magic `MRT1`, a big-endian u32 record count,
//! then that many bit-packed records, each zero-padded to a byte boundary
//! and prefixed with a big-endian u16 byte count.
//!
//! Record bit layout, MSB-first within each byte:
//!
//! ```text
//! timestampMs:64 | collectorPci:9 | collectorEarfcn:18 | (measId-1):5 |
//! pcellRsrp:7 | pcellRsrq:6 | neighborsPresent:1 |
//! if neighborsPresent:
//!   ratTag:2 (0=EUTRA, 1=GERA, 2-3 reserved) | (count-1):3 | entries:
//!     EUTRA: pci:9 | rsrpPresent:1 | rsrqPresent:1 | [rsrp:7] | [rsrq:6]
//!     GERA:  arfcn:10 | band:1 (0=dcs1800, 1=pcs1900) | ncc:3 | bcc:3 |
//!            cgiPresent:1 | [mccDigit*3:4 each | mncIs3Digit:1 |
//!            mncDigit*(2|3):4 each | lac:16 | cellIdentity:16] | rssi:6
//! ```
//!
//! Padding is canonical: encoders emit zero pad bits and decoders reject
//! anything else, so no two distinct byte strings decode to the same
//! report.

mod bits;
mod csv;

pub use csv::{parse_csv_trace, trace_csv_header};

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::model::{
    validate_report, BandIndicator, CellIdentity, Cgi, MeasurementReport, NeighborResult, Plmn,
    RatType, SignalMeasurement, Violation, MAX_NEIGHBORS, PCI_MAX, RSRP_CODED_MAX, RSRQ_CODED_MAX,
};

use bits::{BitReader, BitWriter};

/// File magic for the binary trace container.
pub const MRTF_MAGIC: [u8; 4] = *b"MRT1";

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("report fails validation: {}", format_violations(.0))]
    InvalidReport(Vec<Violation>),
    #[error("{0} is not supported by the trace codec")]
    UnsupportedRat(RatType),
    #[error("E-UTRA neighbor CGI has no slot in the record layout")]
    CgiNotEncodable,
    #[error(
        "E-UTRA neighbor earfcn {neighbor} differs from collector earfcn {collector}; \
         the record layout carries intra-frequency neighbor lists only"
    )]
    FrequencyNotEncodable { neighbor: u32, collector: u32 },
    #[error("record truncated")]
    Truncated,
    #[error("reserved RAT tag {0}")]
    ReservedTag(u8),
    #[error("{field} value {value} out of range")]
    RangeViolation { field: &'static str, value: u64 },
    #[error("non-zero padding bits at end of record")]
    NonZeroPadding,
    #[error("record has {0} byte(s) past its encoded content")]
    TrailingBytes(usize),
    #[error("bad magic {0:02x?}, expected \"MRT1\"")]
    BadMagic([u8; 4]),
    #[error("container declares {declared} record(s) but holds {found}")]
    CountMismatch { declared: u32, found: u32 },
    #[error("record {index}: {source}")]
    Record {
        index: usize,
        #[source]
        source: Box<CodecError>,
    },
    #[error("header mismatch: expected `{expected}`, got `{found}`")]
    HeaderMismatch { expected: String, found: String },
    #[error("row at line {line}: {message}")]
    RowParse { line: u64, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Encode one valid report into its bit-packed record, zero-padded to a
/// whole byte.
///
/// The report must pass [`validate_report`]; neighbor lists must be E-UTRA
/// or GERAN. E-UTRA neighbors carrying a CGI or measured on a different
/// carrier than the collector are rejected because the layout has no
/// fields for them.
pub fn encode_report(report: &MeasurementReport) -> Result<Vec<u8>, CodecError> {
    let violations = validate_report(report);
    if !violations.is_empty() {
        return Err(CodecError::InvalidReport(violations));
    }
    if let Some(rat) = report.neighbor_rat() {
        if rat == RatType::Utra || rat == RatType::Nr {
            return Err(CodecError::UnsupportedRat(rat));
        }
    }

    let mut w = BitWriter::new();
    w.put(report.timestamp_ms, 64);
    w.put(u64::from(report.collector_pci), 9);
    w.put(u64::from(report.collector_earfcn), 18);
    w.put(u64::from(report.meas_id - 1), 5);
    w.put(u64::from(report.pcell.rsrp_coded.unwrap()), 7);
    w.put(u64::from(report.pcell.rsrq_coded.unwrap()), 6);

    if report.neighbors.is_empty() {
        w.put(0, 1);
        return Ok(w.finish());
    }
    w.put(1, 1);
    let rat = report.neighbor_rat().unwrap();
    w.put(if rat == RatType::Eutra { 0 } else { 1 }, 2);
    w.put(report.neighbors.len() as u64 - 1, 3);

    for neighbor in &report.neighbors {
        match neighbor.identity {
            CellIdentity::Eutra { pci, earfcn, cgi } => {
                if cgi.is_some() {
                    return Err(CodecError::CgiNotEncodable);
                }
                if earfcn != report.collector_earfcn {
                    return Err(CodecError::FrequencyNotEncodable {
                        neighbor: earfcn,
                        collector: report.collector_earfcn,
                    });
                }
                w.put(u64::from(pci), 9);
                w.put(u64::from(neighbor.signal.rsrp_coded.is_some()), 1);
                w.put(u64::from(neighbor.signal.rsrq_coded.is_some()), 1);
                if let Some(v) = neighbor.signal.rsrp_coded {
                    w.put(u64::from(v), 7);
                }
                if let Some(v) = neighbor.signal.rsrq_coded {
                    w.put(u64::from(v), 6);
                }
            }
            CellIdentity::Gera {
                arfcn,
                band,
                ncc,
                bcc,
                cgi,
            } => {
                w.put(u64::from(arfcn), 10);
                w.put(if band == BandIndicator::Dcs1800 { 0 } else { 1 }, 1);
                w.put(u64::from(ncc), 3);
                w.put(u64::from(bcc), 3);
                match cgi {
                    None => w.put(0, 1),
                    Some(cgi) => {
                        w.put(1, 1);
                        for digit in cgi.plmn.mcc_digits() {
                            w.put(u64::from(digit), 4);
                        }
                        w.put(u64::from(cgi.plmn.mnc_is_3digit), 1);
                        for digit in cgi.plmn.mnc_digits() {
                            w.put(u64::from(digit), 4);
                        }
                        w.put(u64::from(cgi.lac), 16);
                        w.put(u64::from(cgi.cell_identity), 16);
                    }
                }
                w.put(u64::from(neighbor.signal.rssi_coded.unwrap_or(0)), 6);
            }
            CellIdentity::Utra | CellIdentity::Nr => unreachable!("rejected above"),
        }
    }
    Ok(w.finish())
}

/// Decode one record. Inverse of [`encode_report`] on its image; trailing
/// pad bits must be zero and nothing may follow them.
pub fn decode_report(bytes: &[u8]) -> Result<MeasurementReport, CodecError> {
    let mut r = BitReader::new(bytes);
    let need = |v: Option<u64>| v.ok_or(CodecError::Truncated);

    let timestamp_ms = need(r.get(64))?;
    let collector_pci = need(r.get(9))? as u16;
    if collector_pci > PCI_MAX {
        return Err(CodecError::RangeViolation {
            field: "collector_pci",
            value: u64::from(collector_pci),
        });
    }
    let collector_earfcn = need(r.get(18))? as u32;
    let meas_id = need(r.get(5))? as u8 + 1;
    let pcell_rsrp = checked_coded(need(r.get(7))?, RSRP_CODED_MAX, "pcell_rsrp")?;
    let pcell_rsrq = checked_coded(need(r.get(6))?, RSRQ_CODED_MAX, "pcell_rsrq")?;
    let neighbors_present = need(r.get(1))? == 1;

    let mut neighbors = Vec::new();
    if neighbors_present {
        let tag = need(r.get(2))?;
        let rat = match tag {
            0 => RatType::Eutra,
            1 => RatType::Gera,
            other => return Err(CodecError::ReservedTag(other as u8)),
        };
        let count = need(r.get(3))? as usize + 1;
        debug_assert!(count <= MAX_NEIGHBORS);
        for _ in 0..count {
            neighbors.push(decode_neighbor(&mut r, rat, collector_earfcn)?);
        }
    }

    let rem = r.remaining_bits();
    if rem >= 8 {
        return Err(CodecError::TrailingBytes(rem / 8));
    }
    if !r.padding_is_canonical() {
        return Err(CodecError::NonZeroPadding);
    }

    Ok(MeasurementReport {
        timestamp_ms,
        collector_pci,
        collector_earfcn,
        meas_id,
        pcell: SignalMeasurement::eutra(pcell_rsrp, pcell_rsrq),
        neighbors,
    })
}

fn decode_neighbor(
    r: &mut BitReader<'_>,
    rat: RatType,
    collector_earfcn: u32,
) -> Result<NeighborResult, CodecError> {
    let need = |v: Option<u64>| v.ok_or(CodecError::Truncated);
    match rat {
        RatType::Eutra => {
            let pci = need(r.get(9))? as u16;
            if pci > PCI_MAX {
                return Err(CodecError::RangeViolation {
                    field: "neighbor_pci",
                    value: u64::from(pci),
                });
            }
            let rsrp_present = need(r.get(1))? == 1;
            let rsrq_present = need(r.get(1))? == 1;
            let rsrp_coded = if rsrp_present {
                Some(checked_coded(
                    need(r.get(7))?,
                    RSRP_CODED_MAX,
                    "neighbor_rsrp",
                )?)
            } else {
                None
            };
            let rsrq_coded = if rsrq_present {
                Some(checked_coded(
                    need(r.get(6))?,
                    RSRQ_CODED_MAX,
                    "neighbor_rsrq",
                )?)
            } else {
                None
            };
            Ok(NeighborResult {
                identity: CellIdentity::Eutra {
                    pci,
                    // Neighbors measured on the serving carrier; the layout
                    // carries no per-neighbor frequency.
                    earfcn: collector_earfcn,
                    cgi: None,
                },
                signal: SignalMeasurement {
                    rsrp_coded,
                    rsrq_coded,
                    ..Default::default()
                },
            })
        }
        RatType::Gera => {
            let arfcn = need(r.get(10))? as u16;
            let band = if need(r.get(1))? == 0 {
                BandIndicator::Dcs1800
            } else {
                BandIndicator::Pcs1900
            };
            let ncc = need(r.get(3))? as u8;
            let bcc = need(r.get(3))? as u8;
            let cgi = if need(r.get(1))? == 1 {
                let mut mcc = 0u16;
                for _ in 0..3 {
                    mcc = mcc * 10 + checked_digit(need(r.get(4))?)? as u16;
                }
                let mnc_is_3digit = need(r.get(1))? == 1;
                let digits = if mnc_is_3digit { 3 } else { 2 };
                let mut mnc = 0u16;
                for _ in 0..digits {
                    mnc = mnc * 10 + checked_digit(need(r.get(4))?)? as u16;
                }
                let lac = need(r.get(16))? as u16;
                let cell_identity = need(r.get(16))? as u32;
                Some(Cgi::new(
                    Plmn::new(mcc, mnc, mnc_is_3digit),
                    lac,
                    cell_identity,
                ))
            } else {
                None
            };
            let rssi = need(r.get(6))? as u8;
            Ok(NeighborResult {
                identity: CellIdentity::Gera {
                    arfcn,
                    band,
                    ncc,
                    bcc,
                    cgi,
                },
                signal: SignalMeasurement::gera(rssi),
            })
        }
        other => Err(CodecError::UnsupportedRat(other)),
    }
}

fn checked_coded(value: u64, max: u8, field: &'static str) -> Result<u8, CodecError> {
    if value > u64::from(max) {
        return Err(CodecError::RangeViolation { field, value });
    }
    Ok(value as u8)
}

fn checked_digit(value: u64) -> Result<u8, CodecError> {
    if value > 9 {
        return Err(CodecError::RangeViolation {
            field: "plmn_digit",
            value,
        });
    }
    Ok(value as u8)
}

/// Serialize a full trace container to bytes.
pub fn encode_trace(reports: &[MeasurementReport]) -> Result<Vec<u8>, CodecError> {
    let mut out = Vec::with_capacity(8 + reports.len() * 24);
    out.extend_from_slice(&MRTF_MAGIC);
    out.extend_from_slice(&(reports.len() as u32).to_be_bytes());
    for (index, report) in reports.iter().enumerate() {
        let record = encode_report(report).map_err(|source| CodecError::Record {
            index,
            source: Box::new(source),
        })?;
        out.extend_from_slice(&(record.len() as u16).to_be_bytes());
        out.extend_from_slice(&record);
    }
    Ok(out)
}

/// Split a container into its raw length-prefixed records without decoding
/// them.
pub fn split_records(bytes: &[u8]) -> Result<Vec<&[u8]>, CodecError> {
    if bytes.len() < 8 {
        return Err(CodecError::Truncated);
    }
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    if magic != MRTF_MAGIC {
        return Err(CodecError::BadMagic(magic));
    }
    let declared = u32::from_be_bytes(bytes[4..8].try_into().unwrap());
    let mut records = Vec::with_capacity(declared as usize);
    let mut cursor = 8usize;
    for index in 0..declared {
        if cursor + 2 > bytes.len() {
            return Err(CodecError::CountMismatch {
                declared,
                found: index,
            });
        }
        let len = u16::from_be_bytes(bytes[cursor..cursor + 2].try_into().unwrap()) as usize;
        cursor += 2;
        if cursor + len > bytes.len() {
            return Err(CodecError::Record {
                index: index as usize,
                source: Box::new(CodecError::Truncated),
            });
        }
        records.push(&bytes[cursor..cursor + len]);
        cursor += len;
    }
    if cursor != bytes.len() {
        return Err(CodecError::TrailingBytes(bytes.len() - cursor));
    }
    Ok(records)
}

/// Decode a full trace container, failing on the first bad record.
pub fn decode_trace(bytes: &[u8]) -> Result<Vec<MeasurementReport>, CodecError> {
    split_records(bytes)?
        .into_iter()
        .enumerate()
        .map(|(index, record)| {
            decode_report(record).map_err(|source| CodecError::Record {
                index,
                source: Box::new(source),
            })
        })
        .collect()
}

/// Reports that decoded plus the records that failed, by record index.
pub type LenientDecode = (Vec<MeasurementReport>, Vec<(usize, CodecError)>);

/// Decode a trace container, skipping undecodable records and returning
/// them with their indices. Container-level corruption still fails.
pub fn decode_trace_lenient(bytes: &[u8]) -> Result<LenientDecode, CodecError> {
    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    for (index, record) in split_records(bytes)?.into_iter().enumerate() {
        match decode_report(record) {
            Ok(report) => reports.push(report),
            Err(err) => skipped.push((index, err)),
        }
    }
    Ok((reports, skipped))
}

/// Write a trace file; all reports must be valid.
pub fn write_trace<P: AsRef<Path>>(
    path: P,
    reports: &[MeasurementReport],
) -> Result<(), CodecError> {
    let bytes = encode_trace(reports)?;
    fs::write(path, bytes)?;
    Ok(())
}

/// Read a trace file back; order is preserved.
pub fn read_trace<P: AsRef<Path>>(path: P) -> Result<Vec<MeasurementReport>, CodecError> {
    let bytes = fs::read(path)?;
    decode_trace(&bytes)
}

/// Lenient variant of [`read_trace`]; see [`decode_trace_lenient`].
pub fn read_trace_lenient<P: AsRef<Path>>(path: P) -> Result<LenientDecode, CodecError> {
    let bytes = fs::read(path)?;
    decode_trace_lenient(&bytes)
}
