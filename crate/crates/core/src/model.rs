//! Domain types for cells, identities, and measurement reporting.
//!
//! Covers the radio identities a UE can report (PCI/EARFCN for 4G,
//! ARFCN/BSIC for 2G, optional CGI), coded signal values with their
//! physical-unit conversions, and the measurement configuration and
//! report structures exchanged between UE and network.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Highest valid E-UTRA physical cell identity.
pub const PCI_MAX: u16 = 503;
/// Highest valid E-UTRA channel number.
pub const EARFCN_MAX: u32 = 262_143;
/// Highest valid GSM channel number.
pub const ARFCN_MAX: u16 = 1023;
/// Highest valid coded RSRP value.
pub const RSRP_CODED_MAX: u8 = 97;
/// Highest valid coded RSRQ value.
pub const RSRQ_CODED_MAX: u8 = 34;
/// Highest valid coded RSSI value.
pub const RSSI_CODED_MAX: u8 = 63;
/// Neighbor entries carried per report.
pub const MAX_NEIGHBORS: usize = 8;
/// Measurement identifier range is 1..=32.
pub const MEAS_ID_MAX: u8 = 32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("{quantity} coded value {value} exceeds {max}")]
    OutOfRange {
        quantity: &'static str,
        value: u8,
        max: u8,
    },
}

/// Radio access technology per network generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RatType {
    /// 2G: GSM EDGE Radio Access.
    Gera,
    /// 3G: Universal Terrestrial Radio Access.
    Utra,
    /// 4G: Evolved UTRA.
    Eutra,
    /// 5G: New Radio.
    Nr,
}

impl fmt::Display for RatType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RatType::Gera => "GERA",
            RatType::Utra => "UTRA",
            RatType::Eutra => "EUTRA",
            RatType::Nr => "NR",
        };
        f.write_str(s)
    }
}

impl FromStr for RatType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "GERA" => Ok(RatType::Gera),
            "UTRA" => Ok(RatType::Utra),
            "EUTRA" => Ok(RatType::Eutra),
            "NR" => Ok(RatType::Nr),
            other => Err(format!("unknown RAT `{other}`")),
        }
    }
}

/// GSM frequency band indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BandIndicator {
    Dcs1800,
    Pcs1900,
}

impl fmt::Display for BandIndicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BandIndicator::Dcs1800 => f.write_str("dcs1800"),
            BandIndicator::Pcs1900 => f.write_str("pcs1900"),
        }
    }
}

impl FromStr for BandIndicator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dcs1800" => Ok(BandIndicator::Dcs1800),
            "pcs1900" => Ok(BandIndicator::Pcs1900),
            other => Err(format!("unknown band indicator `{other}`")),
        }
    }
}

/// Public Land Mobile Network identity: MCC plus a 2- or 3-digit MNC.
///
/// The MNC digit count is significant: MNC 01 and MNC 001 identify
/// different networks, so it is preserved rather than normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Plmn {
    /// Mobile country code, three decimal digits (0..=999).
    pub mcc: u16,
    /// Mobile network code value (0..=99 or 0..=999 depending on length).
    pub mnc: u16,
    /// True when the MNC has three digits.
    pub mnc_is_3digit: bool,
}

impl Plmn {
    pub fn new(mcc: u16, mnc: u16, mnc_is_3digit: bool) -> Self {
        Plmn {
            mcc,
            mnc,
            mnc_is_3digit,
        }
    }

    /// Parse from decimal strings, taking the MNC length from the text
    /// ("01" is a 2-digit MNC, "001" a 3-digit one).
    pub fn parse(mcc: &str, mnc: &str) -> Result<Self, String> {
        let mcc_s = mcc.trim();
        let mnc_s = mnc.trim();
        if mcc_s.len() != 3 || !mcc_s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("mcc `{mcc_s}` must be exactly 3 decimal digits"));
        }
        if !(mnc_s.len() == 2 || mnc_s.len() == 3) || !mnc_s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("mnc `{mnc_s}` must be 2 or 3 decimal digits"));
        }
        Ok(Plmn {
            mcc: mcc_s.parse().unwrap(),
            mnc: mnc_s.parse().unwrap(),
            mnc_is_3digit: mnc_s.len() == 3,
        })
    }

    pub fn is_valid(&self) -> bool {
        self.mcc <= 999
            && if self.mnc_is_3digit {
                self.mnc <= 999
            } else {
                self.mnc <= 99
            }
    }

    pub fn mcc_digits(&self) -> [u8; 3] {
        [
            (self.mcc / 100 % 10) as u8,
            (self.mcc / 10 % 10) as u8,
            (self.mcc % 10) as u8,
        ]
    }

    pub fn mnc_digits(&self) -> Vec<u8> {
        if self.mnc_is_3digit {
            vec![
                (self.mnc / 100 % 10) as u8,
                (self.mnc / 10 % 10) as u8,
                (self.mnc % 10) as u8,
            ]
        } else {
            vec![(self.mnc / 10 % 10) as u8, (self.mnc % 10) as u8]
        }
    }
}

impl fmt::Display for Plmn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.mnc_is_3digit {
            write!(f, "{:03}-{:03}", self.mcc, self.mnc)
        } else {
            write!(f, "{:03}-{:02}", self.mcc, self.mnc)
        }
    }
}

/// Cell Global Identifier: PLMN plus area code and cell identity.
///
/// The cell identity is 16 bits wide for GERAN cells and 28 bits for
/// E-UTRA; width is checked where the owning RAT is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cgi {
    pub plmn: Plmn,
    /// Location area code (GERAN) or tracking area code (E-UTRA).
    pub lac: u16,
    pub cell_identity: u32,
}

impl Cgi {
    pub fn new(plmn: Plmn, lac: u16, cell_identity: u32) -> Self {
        Cgi {
            plmn,
            lac,
            cell_identity,
        }
    }
}

/// Radio identity of a single cell as observable by a UE.
///
/// UTRA and NR are representable so that observations can name them, but
/// they carry no identifiers and are rejected by the codec and simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CellIdentity {
    Eutra {
        pci: u16,
        earfcn: u32,
        cgi: Option<Cgi>,
    },
    Gera {
        arfcn: u16,
        band: BandIndicator,
        ncc: u8,
        bcc: u8,
        cgi: Option<Cgi>,
    },
    Utra,
    Nr,
}

impl CellIdentity {
    pub fn rat(&self) -> RatType {
        match self {
            CellIdentity::Eutra { .. } => RatType::Eutra,
            CellIdentity::Gera { .. } => RatType::Gera,
            CellIdentity::Utra => RatType::Utra,
            CellIdentity::Nr => RatType::Nr,
        }
    }

    pub fn cgi(&self) -> Option<Cgi> {
        match self {
            CellIdentity::Eutra { cgi, .. } | CellIdentity::Gera { cgi, .. } => *cgi,
            _ => None,
        }
    }

    pub fn pci(&self) -> Option<u16> {
        match self {
            CellIdentity::Eutra { pci, .. } => Some(*pci),
            _ => None,
        }
    }
}

impl fmt::Display for CellIdentity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellIdentity::Eutra { pci, earfcn, .. } => {
                write!(f, "EUTRA pci {pci} earfcn {earfcn}")
            }
            CellIdentity::Gera {
                arfcn,
                band,
                ncc,
                bcc,
                ..
            } => write!(f, "GERA arfcn {arfcn} {band} bsic {ncc}-{bcc}"),
            CellIdentity::Utra => f.write_str("UTRA"),
            CellIdentity::Nr => f.write_str("NR"),
        }
    }
}

/// Per-cell signal readings, stored in their coded on-air form.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SignalMeasurement {
    /// Coded RSRP, 0..=97 (E-UTRA).
    pub rsrp_coded: Option<u8>,
    /// Coded RSRQ, 0..=34 (E-UTRA).
    pub rsrq_coded: Option<u8>,
    /// Coded RSSI, 0..=63 (GERAN).
    pub rssi_coded: Option<u8>,
    /// Signal-to-interference-plus-noise ratio in dB. Informational only;
    /// not carried by the binary trace format.
    pub sinr_db: Option<f64>,
}

impl SignalMeasurement {
    pub fn eutra(rsrp_coded: u8, rsrq_coded: u8) -> Self {
        SignalMeasurement {
            rsrp_coded: Some(rsrp_coded),
            rsrq_coded: Some(rsrq_coded),
            ..Default::default()
        }
    }

    pub fn gera(rssi_coded: u8) -> Self {
        SignalMeasurement {
            rssi_coded: Some(rssi_coded),
            ..Default::default()
        }
    }

    /// RSRP in dBm, when present and in range.
    pub fn rsrp_dbm(&self) -> Option<f64> {
        self.rsrp_coded.and_then(|c| rsrp_coded_to_dbm(c).ok())
    }

    /// RSRQ in dB, when present and in range.
    pub fn rsrq_db(&self) -> Option<f64> {
        self.rsrq_coded.and_then(|c| rsrq_coded_to_db(c).ok())
    }

    /// RSSI in dBm, when present and in range.
    pub fn rssi_dbm(&self) -> Option<f64> {
        self.rssi_coded.and_then(|c| rssi_coded_to_dbm(c).ok())
    }
}

/// One measured neighbor cell inside a report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborResult {
    pub identity: CellIdentity,
    pub signal: SignalMeasurement,
}

/// A single UE measurement report as received by a collecting cell.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementReport {
    /// Milliseconds since the Unix epoch (or scenario start for simulated
    /// traces).
    pub timestamp_ms: u64,
    /// PCI of the E-UTRA cell that collected the report.
    pub collector_pci: u16,
    /// EARFCN of the collecting cell.
    pub collector_earfcn: u32,
    /// Measurement identifier linking back to the configuration, 1..=32.
    pub meas_id: u8,
    /// Serving-cell measurement; RSRP and RSRQ are mandatory.
    pub pcell: SignalMeasurement,
    /// Neighbor results, all of one RAT, at most [`MAX_NEIGHBORS`].
    pub neighbors: Vec<NeighborResult>,
}

impl MeasurementReport {
    /// RAT of the neighbor list, when any neighbors are present.
    pub fn neighbor_rat(&self) -> Option<RatType> {
        self.neighbors.first().map(|n| n.identity.rat())
    }
}

/// Periodic reporting purpose.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportPurpose {
    Normal,
    /// One-shot acquisition of a target cell's global identity.
    ReportCgi,
}

/// What triggers a UE to send a report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReportTrigger {
    Periodic {
        purpose: ReportPurpose,
    },
    /// Event A3: a neighbor becomes offset-better than the serving cell.
    EventA3 {
        /// Coded A3 offset, -30..=30, in 0.5 dB steps.
        a3_offset_coded: i8,
        /// Coded hysteresis, 0..=30, in 0.5 dB steps.
        hysteresis_coded: u8,
        /// How long the entering condition must hold before reporting.
        time_to_trigger_ms: u64,
    },
}

/// Number of reports to send once triggered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportAmount {
    Times(u32),
    Infinite,
}

impl ReportAmount {
    pub fn allows(&self, already_sent: u32) -> bool {
        match self {
            ReportAmount::Times(n) => already_sent < *n,
            ReportAmount::Infinite => true,
        }
    }
}

/// Reporting criteria and format for one measurement configuration entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportConfig {
    pub trigger: ReportTrigger,
    /// 1..=8 cells per report.
    pub max_report_cells: u8,
    pub report_interval_ms: u64,
    pub report_amount: ReportAmount,
}

/// Radio resources a UE is asked to measure.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasObject {
    Eutra {
        carrier_freq: u32,
    },
    Gera {
        starting_arfcn: u16,
        band: BandIndicator,
        following_arfcns: Vec<u16>,
        /// Bitmask of permitted network colour codes; bit `n` covers NCC `n`.
        ncc_permitted: u8,
        /// Request the CGI of the cell with this (NCC, BCC).
        cell_for_which_to_report_cgi: Option<(u8, u8)>,
    },
    Utra,
    Nr,
}

impl MeasObject {
    pub fn rat(&self) -> RatType {
        match self {
            MeasObject::Eutra { .. } => RatType::Eutra,
            MeasObject::Gera { .. } => RatType::Gera,
            MeasObject::Utra => RatType::Utra,
            MeasObject::Nr => RatType::Nr,
        }
    }
}

/// A measurement object linked to a reporting configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasEntry {
    pub meas_id: u8,
    pub object: MeasObject,
    pub report: ReportConfig,
}

/// The full measurement configuration pushed to a UE.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeasurementConfig {
    pub entries: Vec<MeasEntry>,
}

/// Convert coded RSRP to dBm (bin lower edge; coded 0 means "below -140 dBm").
pub fn rsrp_coded_to_dbm(coded: u8) -> Result<f64, ModelError> {
    if coded > RSRP_CODED_MAX {
        return Err(ModelError::OutOfRange {
            quantity: "rsrp",
            value: coded,
            max: RSRP_CODED_MAX,
        });
    }
    Ok(f64::from(coded) - 141.0)
}

/// Convert coded RSRQ to dB in 0.5 dB steps from -20 dB.
pub fn rsrq_coded_to_db(coded: u8) -> Result<f64, ModelError> {
    if coded > RSRQ_CODED_MAX {
        return Err(ModelError::OutOfRange {
            quantity: "rsrq",
            value: coded,
            max: RSRQ_CODED_MAX,
        });
    }
    Ok(f64::from(coded) / 2.0 - 20.0)
}

/// Convert coded RSSI (GSM RXLEV style) to dBm.
pub fn rssi_coded_to_dbm(coded: u8) -> Result<f64, ModelError> {
    if coded > RSSI_CODED_MAX {
        return Err(ModelError::OutOfRange {
            quantity: "rssi",
            value: coded,
            max: RSSI_CODED_MAX,
        });
    }
    Ok(f64::from(coded) - 111.0)
}

/// Inverse of [`rsrp_coded_to_dbm`], clamped to the codable range.
pub fn rsrp_dbm_to_coded(dbm: f64) -> u8 {
    ((dbm + 141.0).floor()).clamp(0.0, f64::from(RSRP_CODED_MAX)) as u8
}

/// Inverse of [`rsrq_coded_to_db`], clamped to the codable range.
pub fn rsrq_db_to_coded(db: f64) -> u8 {
    (((db + 20.0) * 2.0).floor()).clamp(0.0, f64::from(RSRQ_CODED_MAX)) as u8
}

/// Inverse of [`rssi_coded_to_dbm`], clamped to the codable range.
pub fn rssi_dbm_to_coded(dbm: f64) -> u8 {
    ((dbm + 111.0).floor()).clamp(0.0, f64::from(RSSI_CODED_MAX)) as u8
}

/// A single invariant violation found by [`validate_report`].
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Violation {
    #[error("collector pci {0} out of range 0..=503")]
    CollectorPciOutOfRange(u16),
    #[error("collector earfcn {0} out of range 0..=262143")]
    CollectorEarfcnOutOfRange(u32),
    #[error("meas id {0} out of range 1..=32")]
    MeasIdOutOfRange(u8),
    #[error("pcell rsrp missing")]
    PcellRsrpMissing,
    #[error("pcell rsrq missing")]
    PcellRsrqMissing,
    #[error("pcell carries rssi, which is a GERAN-only quantity")]
    PcellCarriesRssi,
    #[error("neighbor {index}: pci {pci} out of range 0..=503")]
    PciOutOfRange { index: usize, pci: u16 },
    #[error("neighbor {index}: earfcn {earfcn} out of range 0..=262143")]
    EarfcnOutOfRange { index: usize, earfcn: u32 },
    #[error("neighbor {index}: arfcn {arfcn} out of range 0..=1023")]
    ArfcnOutOfRange { index: usize, arfcn: u16 },
    #[error("neighbor {index}: colour code {value} out of range 0..=7")]
    ColourCodeOutOfRange { index: usize, value: u8 },
    #[error("neighbor {index}: {quantity} coded value {value} exceeds {max}")]
    SignalOutOfRange {
        index: usize,
        quantity: &'static str,
        value: u8,
        max: u8,
    },
    #[error("neighbor {index}: {quantity} not valid for {rat}")]
    SignalWrongRat {
        index: usize,
        quantity: &'static str,
        rat: RatType,
    },
    #[error("heterogeneous neighbor RAT: {found} after {first}")]
    HeterogeneousNeighborRat { first: RatType, found: RatType },
    #[error("too many neighbors: {0} > 8")]
    TooManyNeighbors(usize),
    #[error("neighbor {index}: invalid plmn {mcc}/{mnc}")]
    InvalidPlmn { index: usize, mcc: u16, mnc: u16 },
    #[error("neighbor {index}: cgi cell identity {value} exceeds 16-bit GERAN width")]
    CgiIdentityTooWide { index: usize, value: u32 },
}

/// Check every report invariant and return all violations found.
///
/// An empty result means the report is valid. Violations are ordinary
/// values so callers can collect, count, or render them.
pub fn validate_report(report: &MeasurementReport) -> Vec<Violation> {
    let mut out = Vec::new();

    if report.collector_pci > PCI_MAX {
        out.push(Violation::CollectorPciOutOfRange(report.collector_pci));
    }
    if report.collector_earfcn > EARFCN_MAX {
        out.push(Violation::CollectorEarfcnOutOfRange(
            report.collector_earfcn,
        ));
    }
    if report.meas_id == 0 || report.meas_id > MEAS_ID_MAX {
        out.push(Violation::MeasIdOutOfRange(report.meas_id));
    }

    match report.pcell.rsrp_coded {
        None => out.push(Violation::PcellRsrpMissing),
        Some(v) if v > RSRP_CODED_MAX => out.push(Violation::SignalOutOfRange {
            index: usize::MAX,
            quantity: "pcell rsrp",
            value: v,
            max: RSRP_CODED_MAX,
        }),
        _ => {}
    }
    match report.pcell.rsrq_coded {
        None => out.push(Violation::PcellRsrqMissing),
        Some(v) if v > RSRQ_CODED_MAX => out.push(Violation::SignalOutOfRange {
            index: usize::MAX,
            quantity: "pcell rsrq",
            value: v,
            max: RSRQ_CODED_MAX,
        }),
        _ => {}
    }
    if report.pcell.rssi_coded.is_some() {
        out.push(Violation::PcellCarriesRssi);
    }

    if report.neighbors.len() > MAX_NEIGHBORS {
        out.push(Violation::TooManyNeighbors(report.neighbors.len()));
    }

    let mut first_rat: Option<RatType> = None;
    for (index, neighbor) in report.neighbors.iter().enumerate() {
        let rat = neighbor.identity.rat();
        match first_rat {
            None => first_rat = Some(rat),
            Some(first) if first != rat => {
                out.push(Violation::HeterogeneousNeighborRat { first, found: rat });
            }
            _ => {}
        }
        validate_neighbor(index, neighbor, &mut out);
    }

    out
}

fn validate_neighbor(index: usize, neighbor: &NeighborResult, out: &mut Vec<Violation>) {
    let signal = &neighbor.signal;
    match neighbor.identity {
        CellIdentity::Eutra { pci, earfcn, cgi } => {
            if pci > PCI_MAX {
                out.push(Violation::PciOutOfRange { index, pci });
            }
            if earfcn > EARFCN_MAX {
                out.push(Violation::EarfcnOutOfRange { index, earfcn });
            }
            if let Some(cgi) = cgi {
                validate_cgi(index, &cgi, RatType::Eutra, out);
            }
            if signal.rssi_coded.is_some() {
                out.push(Violation::SignalWrongRat {
                    index,
                    quantity: "rssi",
                    rat: RatType::Eutra,
                });
            }
            if let Some(v) = signal.rsrp_coded {
                if v > RSRP_CODED_MAX {
                    out.push(Violation::SignalOutOfRange {
                        index,
                        quantity: "rsrp",
                        value: v,
                        max: RSRP_CODED_MAX,
                    });
                }
            }
            if let Some(v) = signal.rsrq_coded {
                if v > RSRQ_CODED_MAX {
                    out.push(Violation::SignalOutOfRange {
                        index,
                        quantity: "rsrq",
                        value: v,
                        max: RSRQ_CODED_MAX,
                    });
                }
            }
        }
        CellIdentity::Gera {
            arfcn,
            ncc,
            bcc,
            cgi,
            ..
        } => {
            if arfcn > ARFCN_MAX {
                out.push(Violation::ArfcnOutOfRange { index, arfcn });
            }
            if ncc > 7 {
                out.push(Violation::ColourCodeOutOfRange { index, value: ncc });
            }
            if bcc > 7 {
                out.push(Violation::ColourCodeOutOfRange { index, value: bcc });
            }
            if let Some(cgi) = cgi {
                validate_cgi(index, &cgi, RatType::Gera, out);
            }
            if signal.rsrp_coded.is_some() {
                out.push(Violation::SignalWrongRat {
                    index,
                    quantity: "rsrp",
                    rat: RatType::Gera,
                });
            }
            if signal.rsrq_coded.is_some() {
                out.push(Violation::SignalWrongRat {
                    index,
                    quantity: "rsrq",
                    rat: RatType::Gera,
                });
            }
            if let Some(v) = signal.rssi_coded {
                if v > RSSI_CODED_MAX {
                    out.push(Violation::SignalOutOfRange {
                        index,
                        quantity: "rssi",
                        value: v,
                        max: RSSI_CODED_MAX,
                    });
                }
            }
        }
        CellIdentity::Utra | CellIdentity::Nr => {}
    }
}

fn validate_cgi(index: usize, cgi: &Cgi, rat: RatType, out: &mut Vec<Violation>) {
    if !cgi.plmn.is_valid() {
        out.push(Violation::InvalidPlmn {
            index,
            mcc: cgi.plmn.mcc,
            mnc: cgi.plmn.mnc,
        });
    }
    let width = match rat {
        RatType::Gera => 16,
        _ => 28,
    };
    if width == 16 && cgi.cell_identity > u32::from(u16::MAX) {
        out.push(Violation::CgiIdentityTooWide {
            index,
            value: cgi.cell_identity,
        });
    }
}
