//! End-to-end analysis pipeline: map reports to observations, run the
//! rule chain against per-collector expected views, aggregate False
//! verdicts into alerts, render reports, and score against ground truth.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::model::{CellIdentity, MeasurementReport, RatType};
use crate::rules::{evaluate_chain, Observation, Outcome, RuleSet, TimeOfDay, Verdict};
use crate::topology::{build_expected_view, CellTopology, ExpectedView};

/// Evidence flags kept per alert.
pub const ALERT_SAMPLE_LIMIT: usize = 5;

/// Normative header of the alert CSV schema.
pub const ALERT_CSV_HEADER: &str =
    "rat,frequency,pci_or_bsic,count,first_seen_ms,last_seen_ms,rule_ids,collectors";

/// Normative header of the ground-truth CSV schema.
pub const TRUTH_CSV_HEADER: &str = "rat,frequency,pci_or_bsic,active_from_ms,active_to_ms";

#[derive(Debug, Error)]
pub enum AnalyzerError {
    #[error("no unique topology cell with pci {pci} on earfcn {earfcn}")]
    UnknownCollector { pci: u16, earfcn: u32 },
    #[error("header mismatch: expected `{expected}`, got `{found}`")]
    HeaderMismatch { expected: String, found: String },
    #[error("row at line {line}: {message}")]
    RowParse { line: u64, message: String },
}

/// Aggregation key for flags and alerts: RAT, frequency, and the
/// over-the-air identity (PCI or BSIC).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AlertKey {
    Eutra { earfcn: u32, pci: u16 },
    Gera { arfcn: u16, ncc: u8, bcc: u8 },
}

impl AlertKey {
    /// Key of an observed identity; UTRA/NR observations have no keyable
    /// identity.
    pub fn from_identity(identity: &CellIdentity) -> Option<AlertKey> {
        match *identity {
            CellIdentity::Eutra { pci, earfcn, .. } => Some(AlertKey::Eutra { earfcn, pci }),
            CellIdentity::Gera {
                arfcn, ncc, bcc, ..
            } => Some(AlertKey::Gera { arfcn, ncc, bcc }),
            CellIdentity::Utra | CellIdentity::Nr => None,
        }
    }

    pub fn rat(&self) -> RatType {
        match self {
            AlertKey::Eutra { .. } => RatType::Eutra,
            AlertKey::Gera { .. } => RatType::Gera,
        }
    }

    pub fn frequency(&self) -> u32 {
        match self {
            AlertKey::Eutra { earfcn, .. } => *earfcn,
            AlertKey::Gera { arfcn, .. } => u32::from(*arfcn),
        }
    }

    /// The PCI as digits, or the BSIC as `ncc-bcc`.
    pub fn identity_label(&self) -> String {
        match self {
            AlertKey::Eutra { pci, .. } => pci.to_string(),
            AlertKey::Gera { ncc, bcc, .. } => format!("{ncc}-{bcc}"),
        }
    }

    /// Parse from the CSV triplet (rat, frequency, pci_or_bsic).
    pub fn parse_parts(rat: &str, frequency: &str, label: &str) -> Result<AlertKey, String> {
        let rat: RatType = rat.parse()?;
        match rat {
            RatType::Eutra => Ok(AlertKey::Eutra {
                earfcn: frequency
                    .trim()
                    .parse()
                    .map_err(|e| format!("frequency: {e}"))?,
                pci: label.trim().parse().map_err(|e| format!("pci: {e}"))?,
            }),
            RatType::Gera => {
                let (ncc, bcc) = label
                    .trim()
                    .split_once('-')
                    .ok_or_else(|| format!("bsic `{label}` must be ncc-bcc"))?;
                Ok(AlertKey::Gera {
                    arfcn: frequency
                        .trim()
                        .parse()
                        .map_err(|e| format!("frequency: {e}"))?,
                    ncc: ncc.parse().map_err(|e| format!("ncc: {e}"))?,
                    bcc: bcc.parse().map_err(|e| format!("bcc: {e}"))?,
                })
            }
            other => Err(format!("{other} keys are not supported")),
        }
    }
}

impl fmt::Display for AlertKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlertKey::Eutra { earfcn, pci } => write!(f, "EUTRA earfcn {earfcn} pci {pci}"),
            AlertKey::Gera { arfcn, ncc, bcc } => {
                write!(f, "GERA arfcn {arfcn} bsic {ncc}-{bcc}")
            }
        }
    }
}

/// One observation the rule chain judged False.
#[derive(Debug, Clone, PartialEq)]
pub struct Flag {
    pub observation: Observation,
    /// The rule that decided.
    pub rule_id: String,
    pub report_timestamp_ms: u64,
    pub collector_uid: String,
}

/// Aggregated flags for one key within one window.
#[derive(Debug, Clone, PartialEq)]
pub struct Alert {
    pub key: AlertKey,
    pub count: usize,
    pub first_seen_ms: u64,
    pub last_seen_ms: u64,
    pub collectors: BTreeSet<String>,
    pub rule_ids: BTreeSet<String>,
    /// Up to [`ALERT_SAMPLE_LIMIT`] evidence flags.
    pub sample_flags: Vec<Flag>,
}

/// Tunable thresholds of an analysis run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisParams {
    /// Neighbor expansion depth N (allowed cells sit within N+1 hops).
    pub hops: u32,
    /// Flags needed within one window before a key becomes an alert.
    pub min_observations: u32,
    /// Tumbling aggregation window width.
    pub window_ms: u64,
    /// Offset applied to derive local time-of-day for time-window rules.
    pub utc_offset_minutes: i32,
    /// When set, overrides the rule file's default verdict.
    pub default_verdict: Option<Outcome>,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        AnalysisParams {
            hops: 1,
            min_observations: 1,
            window_ms: 3_600_000,
            utc_offset_minutes: 0,
            default_verdict: None,
        }
    }
}

impl AnalysisParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.min_observations == 0 {
            return Err("min_observations must be >= 1".into());
        }
        if self.window_ms == 0 {
            return Err("window_ms must be > 0".into());
        }
        Ok(())
    }
}

/// Counters describing one analysis run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunStats {
    pub report_count: usize,
    pub observation_count: usize,
    /// Distinct E-UTRA PCIs seen anywhere in the input (collectors and
    /// neighbors alike).
    pub unique_pci_count: usize,
    /// Reports whose collector could not be resolved in the topology.
    pub quarantined_count: usize,
}

/// Unpack one report into per-neighbor observations.
///
/// The collector is resolved by its (pci, earfcn) against the topology;
/// reports whose collector is missing or ambiguous are quarantined by
/// [`analyze`].
pub fn reports_to_observations(
    report: &MeasurementReport,
    topology: &CellTopology,
) -> Result<Vec<Observation>, AnalyzerError> {
    let mut candidates = topology.resolve_eutra(report.collector_pci, report.collector_earfcn);
    let collector_uid = match (candidates.next(), candidates.next()) {
        (Some(uid), None) => uid.clone(),
        _ => {
            return Err(AnalyzerError::UnknownCollector {
                pci: report.collector_pci,
                earfcn: report.collector_earfcn,
            })
        }
    };

    Ok(report
        .neighbors
        .iter()
        .enumerate()
        .map(|(index, neighbor)| Observation {
            identity: neighbor.identity,
            signal: neighbor.signal,
            timestamp_ms: report.timestamp_ms,
            collector_uid: collector_uid.clone(),
            co_reported: report
                .neighbors
                .iter()
                .enumerate()
                .filter(|(other, _)| *other != index)
                .map(|(_, sibling)| sibling.identity)
                .collect(),
        })
        .collect())
}

/// Run the rule chain over every observation in a batch of reports.
///
/// Expected views are built once per collector at `params.hops`. Reports
/// with unresolvable collectors are counted and skipped.
pub fn analyze(
    reports: &[MeasurementReport],
    topology: &CellTopology,
    ruleset: &RuleSet,
    params: &AnalysisParams,
) -> (Vec<Flag>, RunStats) {
    let effective_ruleset = match params.default_verdict {
        Some(outcome) => {
            let mut rs = ruleset.clone();
            rs.default_verdict = outcome;
            rs
        }
        None => ruleset.clone(),
    };

    let mut stats = RunStats {
        report_count: reports.len(),
        ..RunStats::default()
    };
    let mut unique_pcis: BTreeSet<u16> = BTreeSet::new();
    let mut views: BTreeMap<String, ExpectedView> = BTreeMap::new();
    let mut flags = Vec::new();

    for report in reports {
        unique_pcis.insert(report.collector_pci);
        for neighbor in &report.neighbors {
            if let Some(pci) = neighbor.identity.pci() {
                unique_pcis.insert(pci);
            }
        }

        let observations = match reports_to_observations(report, topology) {
            Ok(observations) => observations,
            Err(AnalyzerError::UnknownCollector { .. }) => {
                stats.quarantined_count += 1;
                continue;
            }
            Err(_) => unreachable!("resolution yields only UnknownCollector"),
        };
        stats.observation_count += observations.len();

        for obs in observations {
            if !views.contains_key(&obs.collector_uid) {
                let view = build_expected_view(topology, &obs.collector_uid, params.hops)
                    .expect("collector resolved from this topology");
                views.insert(obs.collector_uid.clone(), view);
            }
            let view = &views[&obs.collector_uid];
            let time = TimeOfDay::from_timestamp_ms(obs.timestamp_ms, params.utc_offset_minutes);
            let verdict = evaluate_chain(&effective_ruleset, &obs, Some(view), time)
                .expect("expected view is always supplied");
            if let Verdict::False { rule_id } = verdict {
                flags.push(Flag {
                    report_timestamp_ms: obs.timestamp_ms,
                    collector_uid: obs.collector_uid.clone(),
                    observation: obs,
                    rule_id,
                });
            }
        }
    }

    stats.unique_pci_count = unique_pcis.len();
    (flags, stats)
}

/// Group flags into alerts by key within tumbling windows.
///
/// Windows are aligned to multiples of `params.window_ms`; groups reaching
/// `params.min_observations` become alerts, sorted by count descending
/// then first occurrence.
pub fn aggregate(flags: &[Flag], params: &AnalysisParams) -> Vec<Alert> {
    let mut groups: BTreeMap<(AlertKey, u64), Vec<&Flag>> = BTreeMap::new();
    for flag in flags {
        let Some(key) = AlertKey::from_identity(&flag.observation.identity) else {
            continue;
        };
        let window = flag.report_timestamp_ms / params.window_ms;
        groups.entry((key, window)).or_default().push(flag);
    }

    let mut alerts: Vec<Alert> = groups
        .into_iter()
        .filter(|(_, group)| group.len() >= params.min_observations as usize)
        .map(|((key, _), group)| Alert {
            key,
            count: group.len(),
            first_seen_ms: group.iter().map(|f| f.report_timestamp_ms).min().unwrap(),
            last_seen_ms: group.iter().map(|f| f.report_timestamp_ms).max().unwrap(),
            collectors: group.iter().map(|f| f.collector_uid.clone()).collect(),
            rule_ids: group.iter().map(|f| f.rule_id.clone()).collect(),
            sample_flags: group
                .iter()
                .take(ALERT_SAMPLE_LIMIT)
                .map(|f| (*f).clone())
                .collect(),
        })
        .collect();

    alerts.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then(a.first_seen_ms.cmp(&b.first_seen_ms))
            .then(a.key.cmp(&b.key))
    });
    alerts
}

/// Output format for [`render_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
}

/// Render alerts and run statistics deterministically.
pub fn render_report(alerts: &[Alert], stats: &RunStats, format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => render_text(alerts, stats),
        ReportFormat::Csv => render_csv(alerts),
    }
}

fn render_text(alerts: &[Alert], stats: &RunStats) -> String {
    let mut out = String::new();
    out.push_str(&format!("reports analyzed:    {}\n", stats.report_count));
    out.push_str(&format!(
        "observations:        {}\n",
        stats.observation_count
    ));
    out.push_str(&format!(
        "unique pcis:         {}\n",
        stats.unique_pci_count
    ));
    out.push_str(&format!(
        "quarantined reports: {}\n",
        stats.quarantined_count
    ));
    out.push('\n');
    out.push_str(&format!("{} alerts\n", alerts.len()));
    for alert in alerts {
        let rules: Vec<&str> = alert.rule_ids.iter().map(String::as_str).collect();
        let collectors: Vec<&str> = alert.collectors.iter().map(String::as_str).collect();
        out.push_str(&format!(
            "  {}: {} observation(s) between {} and {} ms, rules [{}], collectors [{}]\n",
            alert.key,
            alert.count,
            alert.first_seen_ms,
            alert.last_seen_ms,
            rules.join(", "),
            collectors.join(", "),
        ));
        for flag in &alert.sample_flags {
            out.push_str(&format!(
                "    seen by {} at {} ms via rule {}\n",
                flag.collector_uid, flag.report_timestamp_ms, flag.rule_id
            ));
        }
    }
    out
}

fn render_csv(alerts: &[Alert]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(ALERT_CSV_HEADER.split(','))
        .expect("write to memory");
    for alert in alerts {
        let rule_ids: Vec<&str> = alert.rule_ids.iter().map(String::as_str).collect();
        let collectors: Vec<&str> = alert.collectors.iter().map(String::as_str).collect();
        writer
            .write_record([
                alert.key.rat().to_string(),
                alert.key.frequency().to_string(),
                alert.key.identity_label(),
                alert.count.to_string(),
                alert.first_seen_ms.to_string(),
                alert.last_seen_ms.to_string(),
                rule_ids.join(";"),
                collectors.join(";"),
            ])
            .expect("write to memory");
    }
    String::from_utf8(writer.into_inner().expect("flush to memory")).expect("utf8 csv")
}

/// Parse an alert CSV back into alerts (evidence samples are not part of
/// the schema and come back empty).
pub fn parse_alerts_csv(text: &str) -> Result<Vec<Alert>, AnalyzerError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    check_header(&mut reader, ALERT_CSV_HEADER)?;

    let mut alerts = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| AnalyzerError::RowParse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let fail = |message: String| AnalyzerError::RowParse { line, message };
        let cell = |idx: usize| record.get(idx).unwrap_or("").trim();

        let key = AlertKey::parse_parts(cell(0), cell(1), cell(2)).map_err(fail)?;
        let split_set = |text: &str| -> BTreeSet<String> {
            text.split(';')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect()
        };
        alerts.push(Alert {
            key,
            count: cell(3).parse().map_err(|e| fail(format!("count: {e}")))?,
            first_seen_ms: cell(4)
                .parse()
                .map_err(|e| fail(format!("first_seen_ms: {e}")))?,
            last_seen_ms: cell(5)
                .parse()
                .map_err(|e| fail(format!("last_seen_ms: {e}")))?,
            rule_ids: split_set(cell(6)),
            collectors: split_set(cell(7)),
            sample_flags: Vec::new(),
        });
    }
    Ok(alerts)
}

/// One false cell's activity span in a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruthEntry {
    pub key: AlertKey,
    pub active_from_ms: u64,
    /// Exclusive end of the activity window.
    pub active_to_ms: u64,
}

/// Render ground truth to its CSV schema.
pub fn render_truth_csv(truth: &[TruthEntry]) -> String {
    let mut out = String::from(TRUTH_CSV_HEADER);
    out.push('\n');
    for entry in truth {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            entry.key.rat(),
            entry.key.frequency(),
            entry.key.identity_label(),
            entry.active_from_ms,
            entry.active_to_ms,
        ));
    }
    out
}

/// Parse a ground-truth CSV.
pub fn parse_truth_csv(text: &str) -> Result<Vec<TruthEntry>, AnalyzerError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    check_header(&mut reader, TRUTH_CSV_HEADER)?;

    let mut truth = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| AnalyzerError::RowParse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let fail = |message: String| AnalyzerError::RowParse { line, message };
        let cell = |idx: usize| record.get(idx).unwrap_or("").trim();
        truth.push(TruthEntry {
            key: AlertKey::parse_parts(cell(0), cell(1), cell(2)).map_err(fail)?,
            active_from_ms: cell(3)
                .parse()
                .map_err(|e| fail(format!("active_from_ms: {e}")))?,
            active_to_ms: cell(4)
                .parse()
                .map_err(|e| fail(format!("active_to_ms: {e}")))?,
        });
    }
    Ok(truth)
}

fn check_header(reader: &mut csv::Reader<&[u8]>, expected: &str) -> Result<(), AnalyzerError> {
    let found = reader
        .headers()
        .map_err(|e| AnalyzerError::RowParse {
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if found != expected {
        return Err(AnalyzerError::HeaderMismatch {
            expected: expected.to_string(),
            found,
        });
    }
    Ok(())
}

/// Precision/recall of alerts against scenario ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutcome {
    pub precision: f64,
    pub recall: f64,
    pub true_positive_alerts: usize,
    pub false_positive_alerts: usize,
    pub truth_keys_total: usize,
    pub truth_keys_detected: usize,
    /// Truth keys no alert covered.
    pub missed: Vec<AlertKey>,
    /// Keys of alerts matching no truth entry.
    pub spurious: Vec<AlertKey>,
}

impl fmt::Display for EvalOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "precision {:.3}", self.precision)?;
        writeln!(f, "recall    {:.3}", self.recall)?;
        writeln!(
            f,
            "alerts: {} true positive, {} false positive",
            self.true_positive_alerts, self.false_positive_alerts
        )?;
        writeln!(
            f,
            "truth keys: {} total, {} detected",
            self.truth_keys_total, self.truth_keys_detected
        )?;
        if !self.missed.is_empty() {
            let labels: Vec<String> = self.missed.iter().map(|k| k.to_string()).collect();
            writeln!(f, "missed: {}", labels.join(", "))?;
        }
        if !self.spurious.is_empty() {
            let labels: Vec<String> = self.spurious.iter().map(|k| k.to_string()).collect();
            writeln!(f, "spurious: {}", labels.join(", "))?;
        }
        Ok(())
    }
}

/// Score alerts against ground truth.
///
/// An alert is a true positive when its key matches a truth entry whose
/// activity window overlaps the alert's time span. Precision is computed
/// over alerts, recall over distinct truth keys; the empty/empty case
/// defines both as 1.0.
pub fn evaluate_against_truth(alerts: &[Alert], truth: &[TruthEntry]) -> EvalOutcome {
    let truth_keys: BTreeSet<AlertKey> = truth.iter().map(|t| t.key).collect();
    let mut detected: BTreeSet<AlertKey> = BTreeSet::new();
    let mut spurious: Vec<AlertKey> = Vec::new();
    let mut true_positive_alerts = 0usize;

    for alert in alerts {
        let matched = truth.iter().any(|t| {
            t.key == alert.key
                && alert.first_seen_ms < t.active_to_ms
                && alert.last_seen_ms >= t.active_from_ms
        });
        if matched {
            true_positive_alerts += 1;
            detected.insert(alert.key);
        } else {
            spurious.push(alert.key);
        }
    }

    let false_positive_alerts = alerts.len() - true_positive_alerts;
    let precision = if alerts.is_empty() {
        1.0
    } else {
        true_positive_alerts as f64 / alerts.len() as f64
    };
    let recall = if truth_keys.is_empty() {
        1.0
    } else {
        detected.len() as f64 / truth_keys.len() as f64
    };
    let missed: Vec<AlertKey> = truth_keys.difference(&detected).copied().collect();

    EvalOutcome {
        precision,
        recall,
        true_positive_alerts,
        false_positive_alerts,
        truth_keys_total: truth_keys.len(),
        truth_keys_detected: detected.len(),
        missed,
        spurious,
    }
}
