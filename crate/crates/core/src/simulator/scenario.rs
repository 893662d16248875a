//! Scenario file parsing.
//!
//! A scenario is sectioned key-value text: one `[scenario]` block,
//! an optional `[propagation]` block, and repeatable `[cell]`, `[ue]`
//! and `[measurement]` blocks. See the repository README for the full
//! key reference.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::model::{
    BandIndicator, CellIdentity, Cgi, MeasEntry, MeasObject, MeasurementConfig, Plmn, RatType,
    ReportAmount, ReportConfig, ReportPurpose, ReportTrigger, ARFCN_MAX, EARFCN_MAX, MAX_NEIGHBORS,
    MEAS_ID_MAX, PCI_MAX,
};
use crate::sections::{Document, Section, SectionError};
use crate::topology::TopologyCell;

use super::{PropagationParams, Scenario, ScenarioCell, UeConfig, UeMovement};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Syntax(#[from] SectionError),
    #[error("missing `[{0}]` section")]
    MissingSection(&'static str),
    #[error("section at line {line}: missing key `{key}`")]
    MissingKey { line: usize, key: &'static str },
    #[error("line {line}: `{key}`: {message}")]
    BadValue {
        line: usize,
        key: String,
        message: String,
    },
    #[error("{0}")]
    Invalid(String),
}

/// Parse a scenario file.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let doc = Document::parse(text)?;

    let scenario_section = doc
        .sections_named("scenario")
        .next()
        .ok_or(ScenarioError::MissingSection("scenario"))?;
    let get = Getter::new(scenario_section);
    let seed: u64 = get.optional("seed")?.unwrap_or(0);
    let duration_ms: u64 = get.required("duration_ms")?;
    let tick_ms: u64 = get.required("tick_ms")?;
    let capture_margin_db = get
        .optional_db("capture_margin_db")?
        .unwrap_or(f64::INFINITY);
    let detection_floor_dbm: f64 = get.optional("detection_floor_dbm")?.unwrap_or(-110.0);

    let propagation = match doc.sections_named("propagation").next() {
        None => PropagationParams::default(),
        Some(section) => {
            let get = Getter::new(section);
            PropagationParams {
                gamma: get.optional("gamma")?.unwrap_or(3.5),
                pl0_db: get.optional("pl0_db")?.unwrap_or(32.0),
                shadow_sigma_db: get.optional("shadow_sigma_db")?.unwrap_or(0.0),
            }
        }
    };

    let mut cells = Vec::new();
    let mut uids = BTreeSet::new();
    for section in doc.sections_named("cell") {
        let cell = parse_cell(section)?;
        if !uids.insert(cell.cell.cell_uid.clone()) {
            return Err(ScenarioError::Invalid(format!(
                "duplicate cell uid `{}`",
                cell.cell.cell_uid
            )));
        }
        cells.push(cell);
    }

    let mut ues = Vec::new();
    for section in doc.sections_named("ue") {
        ues.push(parse_ue(section)?);
    }

    let mut entries = Vec::new();
    let mut meas_ids = BTreeSet::new();
    for section in doc.sections_named("measurement") {
        let entry = parse_measurement(section)?;
        if !meas_ids.insert(entry.meas_id) {
            return Err(ScenarioError::Invalid(format!(
                "duplicate meas_id {}",
                entry.meas_id
            )));
        }
        entries.push(entry);
    }

    Ok(Scenario {
        seed,
        duration_ms,
        tick_ms,
        cells,
        ues,
        meas_config: MeasurementConfig { entries },
        propagation,
        capture_margin_db,
        detection_floor_dbm,
    })
}

fn parse_cell(section: &Section) -> Result<ScenarioCell, ScenarioError> {
    let get = Getter::new(section);
    let uid: String = get.required("uid")?;
    let rat: RatType = get.required("rat")?;
    let plmn = Plmn::parse(
        &get.required::<String>("mcc")?,
        &get.required::<String>("mnc")?,
    )
    .map_err(|message| ScenarioError::BadValue {
        line: section.line,
        key: "mcc/mnc".to_string(),
        message,
    })?;
    let tac_or_lac: u16 = get.optional("tac_lac")?.unwrap_or(1);
    let cell_identity: Option<u32> = get.optional("cell_identity")?;
    let cgi = cell_identity.map(|ci| Cgi::new(plmn, tac_or_lac, ci));

    let identity = match rat {
        RatType::Eutra => {
            let pci: u16 = get.required("pci")?;
            let earfcn: u32 = get.required("earfcn")?;
            if pci > PCI_MAX || earfcn > EARFCN_MAX {
                return Err(get.bad("pci", format!("pci {pci} / earfcn {earfcn} out of range")));
            }
            CellIdentity::Eutra { pci, earfcn, cgi }
        }
        RatType::Gera => {
            let arfcn: u16 = get.required("arfcn")?;
            let band: BandIndicator = get.required("band")?;
            let ncc: u8 = get.required("ncc")?;
            let bcc: u8 = get.required("bcc")?;
            if arfcn > ARFCN_MAX || ncc > 7 || bcc > 7 {
                return Err(get.bad("arfcn", "arfcn or colour code out of range".to_string()));
            }
            CellIdentity::Gera {
                arfcn,
                band,
                ncc,
                bcc,
                cgi,
            }
        }
        other => {
            return Err(get.bad("rat", format!("{other} cells cannot be simulated")));
        }
    };

    let x: f64 = get.required("x")?;
    let y: f64 = get.required("y")?;
    let tx_power_dbm: f64 = get.optional("tx_power_dbm")?.unwrap_or(43.0);
    let is_false = get.optional_bool("false")?.unwrap_or(false);
    let ho_neighbors = get
        .raw("ho_neighbors")
        .map(|text| {
            text.split(';')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect()
        })
        .unwrap_or_default();
    let active_windows = match get.raw("active") {
        None => Vec::new(),
        Some(text) => parse_windows(text).map_err(|message| get.bad("active", message))?,
    };

    Ok(ScenarioCell {
        cell: TopologyCell {
            cell_uid: uid,
            identity,
            plmn,
            tac_or_lac,
            location: Some((x, y)),
            ho_neighbors,
        },
        tx_power_dbm,
        is_false,
        active_windows,
    })
}

fn parse_windows(text: &str) -> Result<Vec<(u64, u64)>, String> {
    let mut windows = Vec::new();
    for part in text.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let (from, to) = part
            .split_once(':')
            .ok_or_else(|| format!("window `{part}` must be from:to"))?;
        let from: u64 = from.trim().parse().map_err(|e| format!("{e}"))?;
        let to: u64 = to.trim().parse().map_err(|e| format!("{e}"))?;
        if from >= to {
            return Err(format!("window `{part}` is empty"));
        }
        windows.push((from, to));
    }
    Ok(windows)
}

fn parse_ue(section: &Section) -> Result<UeConfig, ScenarioError> {
    let get = Getter::new(section);
    let x: f64 = get.required("x")?;
    let y: f64 = get.required("y")?;
    let speed_mps: f64 = get.optional("speed_mps")?.unwrap_or(0.0);

    let movement = match (get.raw("waypoints"), get.raw("walk_box")) {
        (Some(_), Some(_)) => {
            return Err(get.bad(
                "waypoints",
                "waypoints and walk_box are mutually exclusive".to_string(),
            ))
        }
        (Some(text), None) => {
            let mut points = Vec::new();
            for part in text.split(';').map(str::trim).filter(|s| !s.is_empty()) {
                points.push(parse_point(part).map_err(|m| get.bad("waypoints", m))?);
            }
            UeMovement::Waypoints(points)
        }
        (None, Some(text)) => {
            let values: Vec<f64> = text
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| get.bad("walk_box", format!("{e}")))?;
            let [x0, y0, x1, y1] = values[..] else {
                return Err(get.bad("walk_box", "expected x0,y0,x1,y1".to_string()));
            };
            UeMovement::RandomWalk {
                min: (x0.min(x1), y0.min(y1)),
                max: (x0.max(x1), y0.max(y1)),
            }
        }
        (None, None) => UeMovement::Stationary,
    };

    Ok(UeConfig {
        start: (x, y),
        movement,
        speed_mps,
    })
}

fn parse_point(text: &str) -> Result<(f64, f64), String> {
    let (x, y) = text
        .split_once(',')
        .ok_or_else(|| format!("point `{text}` must be x,y"))?;
    Ok((
        x.trim().parse().map_err(|e| format!("{e}"))?,
        y.trim().parse().map_err(|e| format!("{e}"))?,
    ))
}

fn parse_measurement(section: &Section) -> Result<MeasEntry, ScenarioError> {
    let get = Getter::new(section);
    let meas_id: u8 = get.required("meas_id")?;
    if meas_id == 0 || meas_id > MEAS_ID_MAX {
        return Err(get.bad("meas_id", format!("{meas_id} out of range 1..=32")));
    }
    let rat: RatType = get.required("rat")?;

    let object = match rat {
        RatType::Eutra => MeasObject::Eutra {
            carrier_freq: get.required("carrier_freq")?,
        },
        RatType::Gera => {
            let starting_arfcn: u16 = get.required("starting_arfcn")?;
            let band: BandIndicator = get.required("band")?;
            let following_arfcns = match get.raw("following_arfcns") {
                None => Vec::new(),
                Some(text) => text
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|v| v.parse::<u16>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| get.bad("following_arfcns", format!("{e}")))?,
            };
            let ncc_permitted = match get.raw("ncc_permitted") {
                None => 0xff,
                Some(text) => parse_ncc_mask(text).map_err(|m| get.bad("ncc_permitted", m))?,
            };
            let cell_for_which_to_report_cgi = match (
                get.optional("report_cgi_ncc")?,
                get.optional("report_cgi_bcc")?,
            ) {
                (None, None) => None,
                (Some(ncc), Some(bcc)) => Some((ncc, bcc)),
                _ => {
                    return Err(get.bad(
                        "report_cgi_ncc",
                        "both report_cgi_ncc and report_cgi_bcc are needed".to_string(),
                    ))
                }
            };
            MeasObject::Gera {
                starting_arfcn,
                band,
                following_arfcns,
                ncc_permitted,
                cell_for_which_to_report_cgi,
            }
        }
        RatType::Utra => MeasObject::Utra,
        RatType::Nr => MeasObject::Nr,
    };

    let trigger = match get.required::<String>("trigger")?.as_str() {
        "periodic" => ReportTrigger::Periodic {
            purpose: ReportPurpose::Normal,
        },
        "periodic_cgi" => ReportTrigger::Periodic {
            purpose: ReportPurpose::ReportCgi,
        },
        "a3" => {
            let a3_offset_coded: i8 = get.required("a3_offset")?;
            let hysteresis_coded: u8 = get.required("hysteresis")?;
            if !(-30..=30).contains(&a3_offset_coded) || hysteresis_coded > 30 {
                return Err(get.bad("a3_offset", "coded offsets must be within 30".to_string()));
            }
            ReportTrigger::EventA3 {
                a3_offset_coded,
                hysteresis_coded,
                time_to_trigger_ms: get.required("time_to_trigger_ms")?,
            }
        }
        other => {
            return Err(get.bad(
                "trigger",
                format!("`{other}` must be periodic, periodic_cgi, or a3"),
            ))
        }
    };

    let max_report_cells: u8 = get.optional("max_report_cells")?.unwrap_or(4);
    if max_report_cells == 0 || usize::from(max_report_cells) > MAX_NEIGHBORS {
        return Err(get.bad(
            "max_report_cells",
            format!("{max_report_cells} out of range 1..=8"),
        ));
    }
    let report_interval_ms: u64 = get.required("report_interval_ms")?;
    if report_interval_ms == 0 {
        return Err(get.bad("report_interval_ms", "must be > 0".to_string()));
    }
    let report_amount = match get.raw("report_amount") {
        None | Some("inf") | Some("infinity") => ReportAmount::Infinite,
        Some(text) => {
            let n: u32 = text
                .parse()
                .map_err(|e| get.bad("report_amount", format!("{e}")))?;
            if n == 0 {
                return Err(get.bad("report_amount", "must be >= 1 or inf".to_string()));
            }
            ReportAmount::Times(n)
        }
    };

    Ok(MeasEntry {
        meas_id,
        object,
        report: ReportConfig {
            trigger,
            max_report_cells,
            report_interval_ms,
            report_amount,
        },
    })
}

/// An NCC-permitted mask is either an 8-character bit string (MSB is
/// NCC 7) or a decimal byte.
fn parse_ncc_mask(text: &str) -> Result<u8, String> {
    let trimmed = text.trim();
    if trimmed.len() == 8 && trimmed.bytes().all(|b| b == b'0' || b == b'1') {
        return u8::from_str_radix(trimmed, 2).map_err(|e| format!("{e}"));
    }
    trimmed.parse().map_err(|e| format!("{e}"))
}

/// Typed access to one section's entries with line-carrying errors.
struct Getter<'a> {
    section: &'a Section,
}

impl<'a> Getter<'a> {
    fn new(section: &'a Section) -> Self {
        Getter { section }
    }

    fn raw(&self, key: &str) -> Option<&'a str> {
        self.section.get(key)
    }

    fn bad(&self, key: &str, message: String) -> ScenarioError {
        let line = self
            .section
            .entry(key)
            .map_or(self.section.line, |e| e.line);
        ScenarioError::BadValue {
            line,
            key: key.to_string(),
            message,
        }
    }

    fn required<T: std::str::FromStr>(&self, key: &'static str) -> Result<T, ScenarioError>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Err(ScenarioError::MissingKey {
                line: self.section.line,
                key,
            }),
            Some(text) => text
                .parse()
                .map_err(|e: T::Err| self.bad(key, e.to_string())),
        }
    }

    fn optional<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ScenarioError>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(text) => text
                .parse()
                .map(Some)
                .map_err(|e: T::Err| self.bad(key, e.to_string())),
        }
    }

    /// Like [`Getter::optional`] for dB values, accepting `inf`.
    fn optional_db(&self, key: &str) -> Result<Option<f64>, ScenarioError> {
        match self.raw(key) {
            None => Ok(None),
            Some("inf") | Some("infinity") => Ok(Some(f64::INFINITY)),
            Some(text) => text
                .parse()
                .map(Some)
                .map_err(|e: std::num::ParseFloatError| self.bad(key, e.to_string())),
        }
    }

    fn optional_bool(&self, key: &str) -> Result<Option<bool>, ScenarioError> {
        match self.raw(key) {
            None => Ok(None),
            Some("true") | Some("yes") | Some("1") => Ok(Some(true)),
            Some("false") | Some("no") | Some("0") => Ok(Some(false)),
            Some(other) => Err(self.bad(key, format!("`{other}` is not a boolean"))),
        }
    }
}
