//! Configurable ordered rule chain over single neighbor observations.
//!
//! Each rule pairs a predicate with two configurable outcomes: one for a
//! match and one for a miss. The chain evaluates rules in file order and
//! stops at the first Legitimate or False verdict; observations lacking
//! the field a rule inspects fall through with Continue so partial
//! reports still flow down the chain.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::model::{CellIdentity, RatType, SignalMeasurement, PCI_MAX};
use crate::sections::{Document, Section, SectionError};
use crate::topology::{is_allowed, ExpectedView};

/// One reported neighbor cell, unpacked for rule evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub identity: CellIdentity,
    pub signal: SignalMeasurement,
    pub timestamp_ms: u64,
    /// Topology uid of the cell that collected the report.
    pub collector_uid: String,
    /// The other neighbors listed in the same report.
    pub co_reported: Vec<CellIdentity>,
}

/// Minutes since local midnight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct TimeOfDay {
    minutes: u16,
}

impl TimeOfDay {
    pub fn new(hours: u16, minutes: u16) -> Result<Self, String> {
        if hours >= 24 || minutes >= 60 {
            return Err(format!("invalid time of day {hours:02}:{minutes:02}"));
        }
        Ok(TimeOfDay {
            minutes: hours * 60 + minutes,
        })
    }

    /// Local time-of-day of a timestamp given a fixed UTC offset.
    pub fn from_timestamp_ms(timestamp_ms: u64, utc_offset_minutes: i32) -> Self {
        let total = (timestamp_ms / 60_000) as i64 + i64::from(utc_offset_minutes);
        TimeOfDay {
            minutes: total.rem_euclid(24 * 60) as u16,
        }
    }

    /// Parse `"HH:MM"`.
    pub fn parse(text: &str) -> Result<Self, String> {
        let (h, m) = text
            .split_once(':')
            .ok_or_else(|| format!("expected HH:MM, got `{text}`"))?;
        let hours: u16 = h.parse().map_err(|_| format!("bad hour in `{text}`"))?;
        let minutes: u16 = m.parse().map_err(|_| format!("bad minute in `{text}`"))?;
        TimeOfDay::new(hours, minutes)
    }
}

impl fmt::Display for TimeOfDay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}:{:02}", self.minutes / 60, self.minutes % 60)
    }
}

/// Half-open daily window `[from, to)`. A window whose start is after its
/// end wraps over midnight; `[t, t)` matches nothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeWindow {
    pub from: TimeOfDay,
    pub to: TimeOfDay,
}

impl TimeWindow {
    pub fn contains(&self, t: TimeOfDay) -> bool {
        if self.from == self.to {
            false
        } else if self.from < self.to {
            self.from <= t && t < self.to
        } else {
            t >= self.from || t < self.to
        }
    }

    /// Parse `"HH:MM-HH:MM"`.
    pub fn parse(text: &str) -> Result<Self, String> {
        let (from, to) = text
            .split_once('-')
            .ok_or_else(|| format!("expected HH:MM-HH:MM, got `{text}`"))?;
        Ok(TimeWindow {
            from: TimeOfDay::parse(from)?,
            to: TimeOfDay::parse(to)?,
        })
    }
}

/// Direction of a threshold comparison (strict).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    Below,
    Above,
}

impl Comparison {
    fn holds(&self, value: f64, threshold: f64) -> bool {
        match self {
            Comparison::Below => value < threshold,
            Comparison::Above => value > threshold,
        }
    }
}

/// Rule predicate plus its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum RuleKind {
    /// Matches PCIs inside `[min, max]`; in-range cells are the expected
    /// ones.
    PciRangeWhitelist { min: u16, max: u16 },
    /// Matches PCIs inside `[min, max]`; in-range cells are known-bad.
    PciRangeBlacklist { min: u16, max: u16 },
    /// Matches observations co-reported alongside any listed lone-cell
    /// PCI, which should never have reportable neighbors.
    LoneCellCoreport { pcis: BTreeSet<u16> },
    /// Matches PCIs outside the allowed set seen inside a daily window.
    TimeWindowPci {
        window: TimeWindow,
        allowed_pcis: BTreeSet<u16>,
    },
    /// Matches when RSRP compares against the threshold as configured.
    RsrpThreshold {
        threshold_dbm: f64,
        direction: Comparison,
    },
    /// Matches when RSRQ compares against the threshold as configured.
    RsrqThreshold {
        threshold_db: f64,
        direction: Comparison,
    },
    /// Matches observations whose RAT is in the set.
    RatBlacklist { rats: BTreeSet<RatType> },
    /// Matches observations carrying a CGI whose MNC is outside the set.
    PlmnWhitelist { mncs: BTreeSet<u16> },
    /// Matches observations not covered by the collector's expected view.
    TopologyNeighbor,
}

impl RuleKind {
    pub fn name(&self) -> &'static str {
        match self {
            RuleKind::PciRangeWhitelist { .. } => "pci_range_whitelist",
            RuleKind::PciRangeBlacklist { .. } => "pci_range_blacklist",
            RuleKind::LoneCellCoreport { .. } => "lone_cell_coreport",
            RuleKind::TimeWindowPci { .. } => "time_window_pci",
            RuleKind::RsrpThreshold { .. } => "rsrp_threshold",
            RuleKind::RsrqThreshold { .. } => "rsrq_threshold",
            RuleKind::RatBlacklist { .. } => "rat_blacklist",
            RuleKind::PlmnWhitelist { .. } => "plmn_whitelist",
            RuleKind::TopologyNeighbor => "topology_neighbor",
        }
    }

    /// Default outcome pair (on match, on no-match) reproducing the
    /// customary semantics of each rule shape.
    pub fn default_outcomes(&self) -> (Outcome, Outcome) {
        match self {
            RuleKind::PciRangeWhitelist { .. } => (Outcome::Legitimate, Outcome::False),
            RuleKind::PciRangeBlacklist { .. } => (Outcome::False, Outcome::Legitimate),
            RuleKind::LoneCellCoreport { .. } => (Outcome::False, Outcome::Continue),
            RuleKind::TimeWindowPci { .. } => (Outcome::False, Outcome::Continue),
            RuleKind::RsrpThreshold { .. } => (Outcome::Legitimate, Outcome::False),
            RuleKind::RsrqThreshold { .. } => (Outcome::False, Outcome::Legitimate),
            RuleKind::RatBlacklist { .. } => (Outcome::False, Outcome::Continue),
            RuleKind::PlmnWhitelist { .. } => (Outcome::False, Outcome::Continue),
            RuleKind::TopologyNeighbor => (Outcome::False, Outcome::Continue),
        }
    }
}

/// Configurable outcome of a rule match or miss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Legitimate,
    False,
    Continue,
}

impl Outcome {
    pub fn parse(text: &str) -> Result<Self, String> {
        match text.trim().to_ascii_lowercase().as_str() {
            "legitimate" => Ok(Outcome::Legitimate),
            "false" => Ok(Outcome::False),
            "continue" => Ok(Outcome::Continue),
            other => Err(format!("unknown verdict `{other}`")),
        }
    }
}

/// The decision for one observation. Terminal verdicts carry the id of
/// the rule that decided.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Legitimate { rule_id: String },
    False { rule_id: String },
    Continue,
}

impl Verdict {
    pub fn is_false(&self) -> bool {
        matches!(self, Verdict::False { .. })
    }

    pub fn rule_id(&self) -> Option<&str> {
        match self {
            Verdict::Legitimate { rule_id } | Verdict::False { rule_id } => Some(rule_id),
            Verdict::Continue => None,
        }
    }
}

/// One configured rule in the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub id: String,
    pub kind: RuleKind,
    pub on_match: Outcome,
    pub on_no_match: Outcome,
}

impl Rule {
    pub fn new(id: impl Into<String>, kind: RuleKind) -> Self {
        let (on_match, on_no_match) = kind.default_outcomes();
        Rule {
            id: id.into(),
            kind,
            on_match,
            on_no_match,
        }
    }
}

/// Ordered rules plus the verdict applied when the whole chain continues.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
    /// Legitimate or False; applied with rule id `"default"`.
    pub default_verdict: Outcome,
}

impl Default for RuleSet {
    fn default() -> Self {
        RuleSet {
            rules: Vec::new(),
            default_verdict: Outcome::Legitimate,
        }
    }
}

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("rule `{rule_id}` needs an expected view but none was supplied")]
    MissingView { rule_id: String },
}

/// Evaluate one rule against one observation.
///
/// `view` is required only by `topology_neighbor`; `time_of_day` is the
/// observation's local clock time.
pub fn evaluate_rule(
    rule: &Rule,
    obs: &Observation,
    view: Option<&ExpectedView>,
    time_of_day: TimeOfDay,
) -> Result<Verdict, RuleError> {
    let matched: Option<bool> = match &rule.kind {
        RuleKind::PciRangeWhitelist { min, max } | RuleKind::PciRangeBlacklist { min, max } => {
            obs.identity.pci().map(|pci| *min <= pci && pci <= *max)
        }
        RuleKind::LoneCellCoreport { pcis } => Some(
            obs.co_reported
                .iter()
                .filter_map(|identity| identity.pci())
                .any(|pci| pcis.contains(&pci)),
        ),
        RuleKind::TimeWindowPci {
            window,
            allowed_pcis,
        } => obs
            .identity
            .pci()
            .map(|pci| window.contains(time_of_day) && !allowed_pcis.contains(&pci)),
        RuleKind::RsrpThreshold {
            threshold_dbm,
            direction,
        } => obs
            .signal
            .rsrp_dbm()
            .map(|dbm| direction.holds(dbm, *threshold_dbm)),
        RuleKind::RsrqThreshold {
            threshold_db,
            direction,
        } => obs
            .signal
            .rsrq_db()
            .map(|db| direction.holds(db, *threshold_db)),
        RuleKind::RatBlacklist { rats } => Some(rats.contains(&obs.identity.rat())),
        RuleKind::PlmnWhitelist { mncs } => {
            obs.identity.cgi().map(|cgi| !mncs.contains(&cgi.plmn.mnc))
        }
        RuleKind::TopologyNeighbor => {
            let view = view.ok_or_else(|| RuleError::MissingView {
                rule_id: rule.id.clone(),
            })?;
            Some(!is_allowed(view, &obs.identity).is_allowed())
        }
    };

    let outcome = match matched {
        None => return Ok(Verdict::Continue),
        Some(true) => rule.on_match,
        Some(false) => rule.on_no_match,
    };
    Ok(match outcome {
        Outcome::Legitimate => Verdict::Legitimate {
            rule_id: rule.id.clone(),
        },
        Outcome::False => Verdict::False {
            rule_id: rule.id.clone(),
        },
        Outcome::Continue => Verdict::Continue,
    })
}

/// Run the chain in order and return the first terminal verdict, or the
/// default verdict (rule id `"default"`) when every rule continues.
pub fn evaluate_chain(
    ruleset: &RuleSet,
    obs: &Observation,
    view: Option<&ExpectedView>,
    time_of_day: TimeOfDay,
) -> Result<Verdict, RuleError> {
    for rule in &ruleset.rules {
        let verdict = evaluate_rule(rule, obs, view, time_of_day)?;
        if verdict != Verdict::Continue {
            return Ok(verdict);
        }
    }
    Ok(match ruleset.default_verdict {
        Outcome::False => Verdict::False {
            rule_id: "default".to_string(),
        },
        _ => Verdict::Legitimate {
            rule_id: "default".to_string(),
        },
    })
}

#[derive(Debug, Error)]
pub enum RuleConfigError {
    #[error(transparent)]
    Syntax(#[from] SectionError),
    #[error("rule `{rule}`: unknown kind `{kind}`")]
    UnknownRuleKind { rule: String, kind: String },
    #[error("rule `{rule}`: bad `{field}`: {message}")]
    BadParam {
        rule: String,
        field: String,
        message: String,
    },
    #[error("duplicate rule id `{0}`")]
    DuplicateRuleId(String),
    #[error("rule section at line {line} is missing `{key}`")]
    MissingKey { line: usize, key: &'static str },
    #[error("top-level `{key}`: {message}")]
    BadTopLevel { key: String, message: String },
}

/// Analysis parameters a rule file may set; command-line flags win over
/// these when both are given.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParamOverrides {
    pub hops: Option<u32>,
    pub min_observations: Option<u32>,
    pub window_ms: Option<u64>,
    pub utc_offset_minutes: Option<i32>,
}

/// A parsed rule file: the chain plus optional analysis parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedRules {
    pub ruleset: RuleSet,
    pub overrides: ParamOverrides,
}

/// Load a rule chain from sectioned key-value text.
///
/// Top-level keys: `default_verdict`, `hops`, `min_observations`,
/// `window_ms`, `utc_offset_minutes`. Each `[rule]` section needs `id`
/// and `kind`, kind-specific `param.*` keys, and may override `on_match`
/// / `on_no_match`.
pub fn load_ruleset(text: &str) -> Result<LoadedRules, RuleConfigError> {
    let doc = Document::parse(text)?;

    let mut ruleset = RuleSet::default();
    let mut overrides = ParamOverrides::default();
    for entry in &doc.top_level {
        let bad = |message: String| RuleConfigError::BadTopLevel {
            key: entry.key.clone(),
            message,
        };
        match entry.key.as_str() {
            "default_verdict" => {
                let outcome = Outcome::parse(&entry.value).map_err(bad)?;
                if outcome == Outcome::Continue {
                    return Err(bad("default verdict must be legitimate or false".into()));
                }
                ruleset.default_verdict = outcome;
            }
            "hops" => overrides.hops = Some(entry.value.parse().map_err(|e| bad(format!("{e}")))?),
            "min_observations" => {
                let n: u32 = entry.value.parse().map_err(|e| bad(format!("{e}")))?;
                if n == 0 {
                    return Err(bad("must be >= 1".into()));
                }
                overrides.min_observations = Some(n);
            }
            "window_ms" => {
                let ms: u64 = entry.value.parse().map_err(|e| bad(format!("{e}")))?;
                if ms == 0 {
                    return Err(bad("must be > 0".into()));
                }
                overrides.window_ms = Some(ms);
            }
            "utc_offset_minutes" => {
                overrides.utc_offset_minutes =
                    Some(entry.value.parse().map_err(|e| bad(format!("{e}")))?)
            }
            other => {
                return Err(RuleConfigError::BadTopLevel {
                    key: other.to_string(),
                    message: "unknown key".into(),
                })
            }
        }
    }

    let mut seen_ids = BTreeSet::new();
    for section in doc.sections_named("rule") {
        let rule = parse_rule_section(section)?;
        if !seen_ids.insert(rule.id.clone()) {
            return Err(RuleConfigError::DuplicateRuleId(rule.id));
        }
        ruleset.rules.push(rule);
    }

    Ok(LoadedRules { ruleset, overrides })
}

fn parse_rule_section(section: &Section) -> Result<Rule, RuleConfigError> {
    let id = section
        .get("id")
        .ok_or(RuleConfigError::MissingKey {
            line: section.line,
            key: "id",
        })?
        .to_string();
    let kind_name = section.get("kind").ok_or(RuleConfigError::MissingKey {
        line: section.line,
        key: "kind",
    })?;

    let bad = |field: &str, message: String| RuleConfigError::BadParam {
        rule: id.clone(),
        field: field.to_string(),
        message,
    };
    let param = |key: &str| section.get(&format!("param.{key}"));
    let required = |key: &'static str| {
        param(key).ok_or_else(|| bad(&format!("param.{key}"), "missing".into()))
    };

    let kind = match kind_name {
        "pci_range_whitelist" | "pci_range_blacklist" => {
            let min: u16 = required("min")?
                .parse()
                .map_err(|e| bad("param.min", format!("{e}")))?;
            let max: u16 = required("max")?
                .parse()
                .map_err(|e| bad("param.max", format!("{e}")))?;
            if min > max {
                return Err(bad("param.min", format!("{min} > max {max}")));
            }
            if max > PCI_MAX {
                return Err(bad("param.max", format!("{max} exceeds pci range")));
            }
            if kind_name == "pci_range_whitelist" {
                RuleKind::PciRangeWhitelist { min, max }
            } else {
                RuleKind::PciRangeBlacklist { min, max }
            }
        }
        "lone_cell_coreport" => RuleKind::LoneCellCoreport {
            pcis: parse_u16_set(required("pcis")?).map_err(|e| bad("param.pcis", e))?,
        },
        "time_window_pci" => RuleKind::TimeWindowPci {
            window: TimeWindow::parse(required("window")?).map_err(|e| bad("param.window", e))?,
            allowed_pcis: match param("allowed_pcis") {
                Some(text) if !text.is_empty() => {
                    parse_u16_set(text).map_err(|e| bad("param.allowed_pcis", e))?
                }
                _ => BTreeSet::new(),
            },
        },
        "rsrp_threshold" => {
            let (threshold_dbm, direction) =
                parse_threshold(required("threshold")?, param("direction"), "dBm")
                    .map_err(|e| bad("param.threshold", e))?;
            RuleKind::RsrpThreshold {
                threshold_dbm,
                direction,
            }
        }
        "rsrq_threshold" => {
            let (threshold_db, direction) =
                parse_threshold(required("threshold")?, param("direction"), "dB")
                    .map_err(|e| bad("param.threshold", e))?;
            RuleKind::RsrqThreshold {
                threshold_db,
                direction,
            }
        }
        "rat_blacklist" => {
            let mut rats = BTreeSet::new();
            for part in split_list(required("rats")?) {
                rats.insert(part.parse::<RatType>().map_err(|e| bad("param.rats", e))?);
            }
            if rats.is_empty() {
                return Err(bad("param.rats", "empty set".into()));
            }
            RuleKind::RatBlacklist { rats }
        }
        "plmn_whitelist" => {
            let mncs = parse_u16_set(required("mncs")?).map_err(|e| bad("param.mncs", e))?;
            if mncs.iter().any(|mnc| *mnc > 999) {
                return Err(bad("param.mncs", "mnc exceeds 3 digits".into()));
            }
            RuleKind::PlmnWhitelist { mncs }
        }
        "topology_neighbor" => RuleKind::TopologyNeighbor,
        other => {
            return Err(RuleConfigError::UnknownRuleKind {
                rule: id,
                kind: other.to_string(),
            })
        }
    };

    let mut rule = Rule::new(id.clone(), kind);
    if let Some(text) = section.get("on_match") {
        rule.on_match = Outcome::parse(text).map_err(|e| bad("on_match", e))?;
    }
    if let Some(text) = section.get("on_no_match") {
        rule.on_no_match = Outcome::parse(text).map_err(|e| bad("on_no_match", e))?;
    }

    let known_params = expected_params(rule.kind.name());
    for entry in &section.entries {
        match entry.key.as_str() {
            "id" | "kind" | "on_match" | "on_no_match" => {}
            key if key.starts_with("param.") && known_params.contains(&&key[6..]) => {}
            other => return Err(bad(other, "unknown key".into())),
        }
    }

    Ok(rule)
}

fn expected_params(kind: &str) -> &'static [&'static str] {
    match kind {
        "pci_range_whitelist" | "pci_range_blacklist" => &["min", "max"],
        "lone_cell_coreport" => &["pcis"],
        "time_window_pci" => &["window", "allowed_pcis"],
        "rsrp_threshold" | "rsrq_threshold" => &["threshold", "direction"],
        "rat_blacklist" => &["rats"],
        "plmn_whitelist" => &["mncs"],
        _ => &[],
    }
}

fn split_list(text: &str) -> impl Iterator<Item = &str> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_u16_set(text: &str) -> Result<BTreeSet<u16>, String> {
    let mut out = BTreeSet::new();
    for part in split_list(text) {
        out.insert(part.parse::<u16>().map_err(|e| format!("`{part}`: {e}"))?);
    }
    Ok(out)
}

/// Parse a threshold like `-60 dBm`. The unit tag must match the quantity
/// the rule inspects.
fn parse_threshold(
    text: &str,
    direction: Option<&str>,
    expected_unit: &str,
) -> Result<(f64, Comparison), String> {
    let mut parts = text.split_whitespace();
    let value: f64 = parts
        .next()
        .ok_or("empty threshold")?
        .parse()
        .map_err(|e| format!("{e}"))?;
    let unit = parts
        .next()
        .ok_or_else(|| format!("threshold `{text}` is missing its unit tag `{expected_unit}`"))?;
    if unit != expected_unit {
        return Err(format!("unit `{unit}` must be `{expected_unit}`"));
    }
    if parts.next().is_some() {
        return Err(format!("trailing text after `{value} {unit}`"));
    }
    let direction = match direction {
        None => return Err("param.direction is required (below or above)".into()),
        Some("below") => Comparison::Below,
        Some("above") => Comparison::Above,
        Some(other) => return Err(format!("direction `{other}` must be below or above")),
    };
    Ok((value, direction))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BandIndicator, Cgi, Plmn};

    fn eutra_obs(pci: u16) -> Observation {
        Observation {
            identity: CellIdentity::Eutra {
                pci,
                earfcn: 100,
                cgi: None,
            },
            signal: SignalMeasurement::eutra(41, 2),
            timestamp_ms: 0,
            collector_uid: "c1".to_string(),
            co_reported: Vec::new(),
        }
    }

    fn gera_obs() -> Observation {
        Observation {
            identity: CellIdentity::Gera {
                arfcn: 12,
                band: BandIndicator::Dcs1800,
                ncc: 7,
                bcc: 3,
                cgi: None,
            },
            signal: SignalMeasurement::gera(63),
            ..eutra_obs(0)
        }
    }

    fn noon() -> TimeOfDay {
        TimeOfDay::new(12, 0).unwrap()
    }

    fn eval(rule: &Rule, obs: &Observation) -> Verdict {
        evaluate_rule(rule, obs, None, noon()).unwrap()
    }

    #[test]
    fn pci_whitelist_decides_both_ways() {
        let rule = Rule::new("w", RuleKind::PciRangeWhitelist { min: 0, max: 450 });
        assert!(matches!(
            eval(&rule, &eutra_obs(204)),
            Verdict::Legitimate { .. }
        ));
        assert!(eval(&rule, &eutra_obs(460)).is_false());
        // A GERAN observation has no PCI for this rule to inspect.
        assert_eq!(eval(&rule, &gera_obs()), Verdict::Continue);
    }

    #[test]
    fn pci_blacklist_decides_both_ways() {
        let rule = Rule::new("b", RuleKind::PciRangeBlacklist { min: 400, max: 410 });
        assert!(eval(&rule, &eutra_obs(405)).is_false());
        assert!(matches!(
            eval(&rule, &eutra_obs(399)),
            Verdict::Legitimate { .. }
        ));
    }

    #[test]
    fn lone_cell_coreport_flags_companions() {
        let rule = Rule::new(
            "l",
            RuleKind::LoneCellCoreport {
                pcis: BTreeSet::from([312, 313, 314]),
            },
        );
        let mut obs = eutra_obs(77);
        obs.co_reported.push(CellIdentity::Eutra {
            pci: 312,
            earfcn: 100,
            cgi: None,
        });
        assert!(eval(&rule, &obs).is_false());

        let mut unrelated = eutra_obs(77);
        unrelated.co_reported.push(CellIdentity::Eutra {
            pci: 100,
            earfcn: 100,
            cgi: None,
        });
        assert_eq!(eval(&rule, &unrelated), Verdict::Continue);
    }

    #[test]
    fn time_window_respects_overnight_wrap() {
        let rule = Rule::new(
            "t",
            RuleKind::TimeWindowPci {
                window: TimeWindow::parse("18:00-08:00").unwrap(),
                allowed_pcis: BTreeSet::from([263]),
            },
        );
        let two_am = TimeOfDay::new(2, 0).unwrap();
        let noon = TimeOfDay::new(12, 0).unwrap();
        let v = evaluate_rule(&rule, &eutra_obs(500), None, two_am).unwrap();
        assert!(v.is_false());
        let v = evaluate_rule(&rule, &eutra_obs(263), None, two_am).unwrap();
        assert_eq!(v, Verdict::Continue);
        let v = evaluate_rule(&rule, &eutra_obs(500), None, noon).unwrap();
        assert_eq!(v, Verdict::Continue);
    }

    #[test]
    fn empty_window_matches_nothing() {
        let w = TimeWindow::parse("06:30-06:30").unwrap();
        assert!(!w.contains(TimeOfDay::new(6, 30).unwrap()));
        assert!(!w.contains(TimeOfDay::new(6, 29).unwrap()));
        let wrap = TimeWindow::parse("18:00-08:00").unwrap();
        assert!(wrap.contains(TimeOfDay::new(18, 0).unwrap()));
        assert!(wrap.contains(TimeOfDay::new(7, 59).unwrap()));
        assert!(!wrap.contains(TimeOfDay::new(8, 0).unwrap()));
        assert!(!wrap.contains(TimeOfDay::new(12, 0).unwrap()));
    }

    #[test]
    fn rsrp_threshold_decides_both_ways() {
        let rule = Rule::new(
            "r",
            RuleKind::RsrpThreshold {
                threshold_dbm: -60.0,
                direction: Comparison::Below,
            },
        );
        // coded 41 = -100 dBm < -60 -> legitimate
        assert!(matches!(
            eval(&rule, &eutra_obs(1)),
            Verdict::Legitimate { .. }
        ));
        // coded 91 = -50 dBm -> false
        let mut strong = eutra_obs(1);
        strong.signal = SignalMeasurement::eutra(91, 2);
        assert!(eval(&rule, &strong).is_false());
        // missing rsrp -> continue
        let mut missing = eutra_obs(1);
        missing.signal = SignalMeasurement::default();
        assert_eq!(eval(&rule, &missing), Verdict::Continue);
    }

    #[test]
    fn rsrq_threshold_decides_both_ways() {
        let rule = Rule::new(
            "q",
            RuleKind::RsrqThreshold {
                threshold_db: -9.0,
                direction: Comparison::Above,
            },
        );
        // coded 34 = -3 dB > -9 -> false
        let mut high = eutra_obs(1);
        high.signal = SignalMeasurement::eutra(41, 34);
        assert!(eval(&rule, &high).is_false());
        // coded 2 = -19 dB -> legitimate
        assert!(matches!(
            eval(&rule, &eutra_obs(1)),
            Verdict::Legitimate { .. }
        ));
    }

    #[test]
    fn rat_blacklist_matches_gera() {
        let rule = Rule::new(
            "g",
            RuleKind::RatBlacklist {
                rats: BTreeSet::from([RatType::Gera]),
            },
        );
        assert!(eval(&rule, &gera_obs()).is_false());
        assert_eq!(eval(&rule, &eutra_obs(1)), Verdict::Continue);
    }

    #[test]
    fn plmn_whitelist_passes_members_and_flags_outsiders() {
        let rule = Rule::new(
            "p",
            RuleKind::PlmnWhitelist {
                mncs: BTreeSet::from([11, 12, 13]),
            },
        );
        let with_mnc = |mnc: u16| {
            let mut obs = gera_obs();
            if let CellIdentity::Gera { cgi, .. } = &mut obs.identity {
                *cgi = Some(Cgi::new(Plmn::new(111, mnc, false), 1, 111));
            }
            obs
        };
        assert_eq!(eval(&rule, &with_mnc(11)), Verdict::Continue);
        assert!(eval(&rule, &with_mnc(14)).is_false());
        assert_eq!(eval(&rule, &gera_obs()), Verdict::Continue);
    }

    #[test]
    fn topology_neighbor_requires_view() {
        let rule = Rule::new("topo", RuleKind::TopologyNeighbor);
        assert!(matches!(
            evaluate_rule(&rule, &eutra_obs(1), None, noon()),
            Err(RuleError::MissingView { .. })
        ));
    }

    #[test]
    fn chain_returns_first_terminal_verdict() {
        let ruleset = RuleSet {
            rules: vec![
                Rule::new(
                    "no-2g",
                    RuleKind::RatBlacklist {
                        rats: BTreeSet::from([RatType::Gera]),
                    },
                ),
                Rule::new("black", RuleKind::PciRangeBlacklist { min: 400, max: 410 }),
            ],
            default_verdict: Outcome::Legitimate,
        };
        let v = evaluate_chain(&ruleset, &eutra_obs(405), None, noon()).unwrap();
        assert_eq!(v.rule_id(), Some("black"));
        assert!(v.is_false());

        let v = evaluate_chain(&ruleset, &gera_obs(), None, noon()).unwrap();
        assert_eq!(v.rule_id(), Some("no-2g"));
    }

    #[test]
    fn rat_check_falls_through_to_topology_check() {
        use crate::topology::{build_expected_view, CellTopology, TopologyCell};

        let collector = TopologyCell {
            cell_uid: "c1".to_string(),
            identity: CellIdentity::Eutra {
                pci: 1,
                earfcn: 100,
                cgi: None,
            },
            plmn: Plmn::new(262, 1, false),
            tac_or_lac: 1,
            location: None,
            ho_neighbors: Vec::new(),
        };
        let topo = CellTopology::from_cells(vec![collector]).unwrap().0;
        let view = build_expected_view(&topo, "c1", 1).unwrap();

        let ruleset = RuleSet {
            rules: vec![
                Rule::new(
                    "no-2g",
                    RuleKind::RatBlacklist {
                        rats: BTreeSet::from([RatType::Gera]),
                    },
                ),
                Rule::new("topo", RuleKind::TopologyNeighbor),
            ],
            default_verdict: Outcome::Legitimate,
        };
        // E-UTRA observation passes the RAT check and is caught by the
        // expected-view check.
        let v = evaluate_chain(&ruleset, &eutra_obs(204), Some(&view), noon()).unwrap();
        assert!(v.is_false());
        assert_eq!(v.rule_id(), Some("topo"));
    }

    #[test]
    fn empty_chain_yields_default() {
        let ruleset = RuleSet::default();
        let v = evaluate_chain(&ruleset, &eutra_obs(1), None, noon()).unwrap();
        assert_eq!(
            v,
            Verdict::Legitimate {
                rule_id: "default".to_string()
            }
        );
    }

    #[test]
    fn loads_single_whitelist_rule() {
        let loaded = load_ruleset(
            "[rule]\nid = region\nkind = pci_range_whitelist\nparam.min = 0\nparam.max = 450\n",
        )
        .unwrap();
        assert_eq!(loaded.ruleset.rules.len(), 1);
        assert_eq!(
            loaded.ruleset.rules[0].kind,
            RuleKind::PciRangeWhitelist { min: 0, max: 450 }
        );
    }

    #[test]
    fn wrong_unit_tag_is_bad_param() {
        let err = load_ruleset(
            "[rule]\nid = r\nkind = rsrp_threshold\nparam.threshold = -60 dB\nparam.direction = below\n",
        )
        .unwrap_err();
        assert!(
            matches!(err, RuleConfigError::BadParam { field, .. } if field == "param.threshold")
        );
    }

    #[test]
    fn unknown_kind_and_duplicate_id_are_rejected() {
        let err = load_ruleset("[rule]\nid = x\nkind = sorcery\n").unwrap_err();
        assert!(matches!(err, RuleConfigError::UnknownRuleKind { .. }));

        let err = load_ruleset(
            "[rule]\nid = x\nkind = topology_neighbor\n[rule]\nid = x\nkind = topology_neighbor\n",
        )
        .unwrap_err();
        assert!(matches!(err, RuleConfigError::DuplicateRuleId(id) if id == "x"));
    }

    #[test]
    fn top_level_overrides_are_parsed() {
        let loaded =
            load_ruleset("default_verdict = false\nhops = 2\nmin_observations = 3\n").unwrap();
        assert_eq!(loaded.ruleset.default_verdict, Outcome::False);
        assert_eq!(loaded.overrides.hops, Some(2));
        assert_eq!(loaded.overrides.min_observations, Some(3));
        assert_eq!(loaded.overrides.window_ms, None);
    }

    #[test]
    fn outcome_overrides_apply() {
        let loaded = load_ruleset(
            "[rule]\nid = g\nkind = rat_blacklist\nparam.rats = GERA\non_no_match = legitimate\n",
        )
        .unwrap();
        assert_eq!(loaded.ruleset.rules[0].on_no_match, Outcome::Legitimate);
    }
}
