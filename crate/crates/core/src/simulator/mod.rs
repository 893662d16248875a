//! Deterministic radio-environment simulator: legitimate cells, planted
//! false base stations, moving UEs, log-distance propagation, periodic
//! and event-triggered reporting, and UE capture.
//!
//! A scenario run emits per-collector traces in the binary trace format,
//! the legitimate-cell topology CSV, and ground truth for every planted
//! false cell. Identical scenarios (seed included) produce bit-identical
//! outputs.

mod scenario;

pub use scenario::{parse_scenario, ScenarioError};

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::analyzer::{AlertKey, TruthEntry};
use crate::model::{
    rsrp_dbm_to_coded, rsrq_db_to_coded, rssi_dbm_to_coded, validate_report, CellIdentity,
    MeasEntry, MeasObject, MeasurementConfig, MeasurementReport, NeighborResult, RatType,
    ReportPurpose, ReportTrigger, SignalMeasurement, MAX_NEIGHBORS,
};
use crate::topology::{render_topology_csv, TopologyCell};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("measurement objects for {0} are not supported")]
    UnsupportedRat(RatType),
    #[error("scenario cell `{0}` is {1}, which cannot be simulated")]
    UnsupportedCellRat(String, RatType),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

/// Log-distance path-loss model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationParams {
    /// Path-loss exponent.
    pub gamma: f64,
    /// Loss at the 1 m reference distance, dB.
    pub pl0_db: f64,
    /// Log-normal shadowing standard deviation, dB; 0 disables shadowing.
    pub shadow_sigma_db: f64,
}

impl Default for PropagationParams {
    fn default() -> Self {
        PropagationParams {
            gamma: 3.5,
            pl0_db: 32.0,
            shadow_sigma_db: 0.0,
        }
    }
}

/// One radio cell in the simulated world.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioCell {
    /// Topology fields; `location` is the flat (x, y) position in meters.
    pub cell: TopologyCell,
    pub tx_power_dbm: f64,
    pub is_false: bool,
    /// Half-open [from, to) activity windows; empty means always on.
    pub active_windows: Vec<(u64, u64)>,
}

impl ScenarioCell {
    pub fn position(&self) -> (f64, f64) {
        self.cell.location.unwrap_or((0.0, 0.0))
    }

    pub fn active_at(&self, t: u64) -> bool {
        self.active_windows.is_empty()
            || self
                .active_windows
                .iter()
                .any(|&(from, to)| from <= t && t < to)
    }
}

/// UE mobility pattern.
#[derive(Debug, Clone, PartialEq)]
pub enum UeMovement {
    Stationary,
    /// Visit each point in turn at the configured speed, then stop.
    Waypoints(Vec<(f64, f64)>),
    /// Random direction each tick, reflected into the box.
    RandomWalk {
        min: (f64, f64),
        max: (f64, f64),
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct UeConfig {
    pub start: (f64, f64),
    pub movement: UeMovement,
    pub speed_mps: f64,
}

/// Full simulated-world description.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub seed: u64,
    pub duration_ms: u64,
    pub tick_ms: u64,
    pub cells: Vec<ScenarioCell>,
    pub ues: Vec<UeConfig>,
    pub meas_config: MeasurementConfig,
    pub propagation: PropagationParams,
    /// A UE is captured while the strongest false cell is at least this
    /// many dB above its would-be serving cell. `INFINITY` disables
    /// capture.
    pub capture_margin_db: f64,
    /// Cells weaker than this at the UE are not measurable.
    pub detection_floor_dbm: f64,
}

/// Everything a scenario run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    /// Reports grouped by the collecting cell's uid.
    pub traces: BTreeMap<String, Vec<MeasurementReport>>,
    /// Legitimate cells only, in the topology CSV schema.
    pub topology_csv: String,
    pub ground_truth: Vec<TruthEntry>,
}

impl SimOutput {
    pub fn report_count(&self) -> usize {
        self.traces.values().map(Vec::len).sum()
    }
}

/// Log-distance path loss; distances below 1 m clamp to the reference.
pub fn path_loss_db(distance_m: f64, params: &PropagationParams, rng: &mut ChaCha8Rng) -> f64 {
    let d = distance_m.max(1.0);
    let mut loss = params.pl0_db + 10.0 * params.gamma * d.log10();
    if params.shadow_sigma_db > 0.0 {
        let shadow = Normal::new(0.0, params.shadow_sigma_db).expect("sigma checked > 0");
        loss += shadow.sample(rng);
    }
    loss
}

/// Received power at a UE from a transmitter `distance_m` away.
pub fn received_power_dbm(
    tx_power_dbm: f64,
    distance_m: f64,
    params: &PropagationParams,
    rng: &mut ChaCha8Rng,
) -> f64 {
    tx_power_dbm - path_loss_db(distance_m, params, rng)
}

/// Event A3 entering condition: the neighbor is offset-better than the
/// serving cell. Coded offset and hysteresis are in 0.5 dB steps.
pub fn a3_condition(
    neighbor_dbm: f64,
    serving_dbm: f64,
    a3_offset_coded: i8,
    hysteresis_coded: u8,
) -> bool {
    let offset_db = f64::from(a3_offset_coded) * 0.5;
    let hysteresis_db = f64::from(hysteresis_coded) * 0.5;
    neighbor_dbm - hysteresis_db > serving_dbm + offset_db
}

/// Whether a UE is lured onto the strongest false cell and therefore
/// stops reporting to the legitimate network.
pub fn capture_check(
    strongest_false_dbm: f64,
    serving_legit_dbm: f64,
    capture_margin_db: f64,
) -> bool {
    strongest_false_dbm >= serving_legit_dbm + capture_margin_db
}

#[derive(Debug, Default)]
struct EntryState {
    /// Reports emitted (per trigger event for A3, total for periodic).
    emitted: u32,
    /// Consecutive ticks each candidate has held the A3 condition.
    hold: BTreeMap<String, u32>,
    triggered: bool,
    last_report_ms: Option<u64>,
}

struct UeState {
    pos: (f64, f64),
    next_waypoint: usize,
    entries: Vec<EntryState>,
}

/// Run a scenario tick by tick.
///
/// Per tick: move UEs, compute received powers for active cells, apply
/// the capture check, serve each free UE on its strongest legitimate
/// E-UTRA cell, and evaluate every measurement configuration entry for
/// reports. See the module docs for the emitted artifacts.
pub fn run_scenario(scenario: &Scenario) -> Result<SimOutput, SimError> {
    validate_scenario(scenario)?;

    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let mut ues: Vec<UeState> = scenario
        .ues
        .iter()
        .map(|ue| UeState {
            pos: ue.start,
            next_waypoint: 0,
            entries: scenario
                .meas_config
                .entries
                .iter()
                .map(|_| EntryState::default())
                .collect(),
        })
        .collect();
    let mut traces: BTreeMap<String, Vec<MeasurementReport>> = BTreeMap::new();

    let mut t = 0u64;
    while t < scenario.duration_ms {
        for (ue, config) in ues.iter_mut().zip(&scenario.ues) {
            move_ue(ue, config, scenario.tick_ms, &mut rng);
        }

        for ue in ues.iter_mut() {
            // Received power for every active cell, in scenario cell order.
            let rx: Vec<Option<f64>> = scenario
                .cells
                .iter()
                .map(|cell| {
                    cell.active_at(t).then(|| {
                        received_power_dbm(
                            cell.tx_power_dbm,
                            distance(ue.pos, cell.position()),
                            &scenario.propagation,
                            &mut rng,
                        )
                    })
                })
                .collect();

            let serving = strongest(&scenario.cells, &rx, |cell| {
                !cell.is_false && cell.cell.identity.rat() == RatType::Eutra
            })
            .filter(|&(_, dbm)| dbm >= scenario.detection_floor_dbm);
            let Some((serving_index, serving_dbm)) = serving else {
                continue;
            };
            let strongest_false = strongest(&scenario.cells, &rx, |cell| cell.is_false);

            if let Some((_, false_dbm)) = strongest_false {
                if capture_check(false_dbm, serving_dbm, scenario.capture_margin_db) {
                    // Camped on the false cell: no reporting, and any
                    // pending event timers lapse.
                    for entry_state in &mut ue.entries {
                        entry_state.hold.clear();
                        entry_state.triggered = false;
                    }
                    continue;
                }
            }

            let serving_cell = &scenario.cells[serving_index];
            for (entry, entry_state) in scenario
                .meas_config
                .entries
                .iter()
                .zip(ue.entries.iter_mut())
            {
                let candidates =
                    collect_candidates(scenario, &rx, serving_index, serving_cell, &entry.object)?;
                if let Some(report) = evaluate_entry(
                    entry,
                    entry_state,
                    &candidates,
                    serving_cell,
                    serving_dbm,
                    t,
                    scenario.tick_ms,
                ) {
                    traces
                        .entry(serving_cell.cell.cell_uid.clone())
                        .or_default()
                        .push(report);
                }
            }
        }
        t += scenario.tick_ms;
    }

    Ok(SimOutput {
        traces,
        topology_csv: render_topology_csv(
            scenario
                .cells
                .iter()
                .filter(|c| !c.is_false)
                .map(|c| &c.cell),
        ),
        ground_truth: ground_truth(scenario),
    })
}

fn validate_scenario(scenario: &Scenario) -> Result<(), SimError> {
    if scenario.duration_ms == 0 {
        return Err(SimError::Invalid("duration_ms must be > 0".into()));
    }
    if scenario.tick_ms == 0 {
        return Err(SimError::Invalid("tick_ms must be > 0".into()));
    }
    for entry in &scenario.meas_config.entries {
        match entry.object.rat() {
            RatType::Eutra | RatType::Gera => {}
            other => return Err(SimError::UnsupportedRat(other)),
        }
    }
    for cell in &scenario.cells {
        match cell.cell.identity.rat() {
            RatType::Eutra | RatType::Gera => {}
            other => {
                return Err(SimError::UnsupportedCellRat(
                    cell.cell.cell_uid.clone(),
                    other,
                ))
            }
        }
        if cell.cell.location.is_none() {
            return Err(SimError::Invalid(format!(
                "cell `{}` has no position",
                cell.cell.cell_uid
            )));
        }
    }
    Ok(())
}

fn distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

fn move_ue(ue: &mut UeState, config: &UeConfig, tick_ms: u64, rng: &mut ChaCha8Rng) {
    let step = config.speed_mps * (tick_ms as f64 / 1000.0);
    if step <= 0.0 {
        return;
    }
    match &config.movement {
        UeMovement::Stationary => {}
        UeMovement::Waypoints(points) => {
            let mut budget = step;
            while budget > 0.0 {
                let Some(&target) = points.get(ue.next_waypoint) else {
                    break;
                };
                let gap = distance(ue.pos, target);
                if gap <= budget {
                    ue.pos = target;
                    ue.next_waypoint += 1;
                    budget -= gap;
                } else {
                    let f = budget / gap;
                    ue.pos = (
                        ue.pos.0 + (target.0 - ue.pos.0) * f,
                        ue.pos.1 + (target.1 - ue.pos.1) * f,
                    );
                    budget = 0.0;
                }
            }
        }
        UeMovement::RandomWalk { min, max } => {
            let angle = rng.random::<f64>() * std::f64::consts::TAU;
            let next = (
                (ue.pos.0 + step * angle.cos()).clamp(min.0, max.0),
                (ue.pos.1 + step * angle.sin()).clamp(min.1, max.1),
            );
            ue.pos = next;
        }
    }
}

fn strongest(
    cells: &[ScenarioCell],
    rx: &[Option<f64>],
    eligible: impl Fn(&ScenarioCell) -> bool,
) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (index, (cell, dbm)) in cells.iter().zip(rx).enumerate() {
        let Some(dbm) = dbm else { continue };
        if !eligible(cell) {
            continue;
        }
        if best.is_none_or(|(_, best_dbm)| *dbm > best_dbm) {
            best = Some((index, *dbm));
        }
    }
    best
}

/// A measurable neighbor cell this tick.
struct Candidate<'a> {
    cell: &'a ScenarioCell,
    dbm: f64,
}

fn collect_candidates<'a>(
    scenario: &'a Scenario,
    rx: &[Option<f64>],
    serving_index: usize,
    serving_cell: &ScenarioCell,
    object: &MeasObject,
) -> Result<Vec<Candidate<'a>>, SimError> {
    let mut out: Vec<Candidate<'a>> = Vec::new();
    match object {
        MeasObject::Eutra { carrier_freq } => {
            // The trace format carries intra-frequency E-UTRA lists only;
            // entries for other carriers never fire on this serving cell.
            let CellIdentity::Eutra { earfcn, .. } = serving_cell.cell.identity else {
                return Ok(out);
            };
            if earfcn != *carrier_freq {
                return Ok(out);
            }
            for (index, (cell, dbm)) in scenario.cells.iter().zip(rx).enumerate() {
                let Some(dbm) = *dbm else { continue };
                if index == serving_index || dbm < scenario.detection_floor_dbm {
                    continue;
                }
                if let CellIdentity::Eutra { earfcn, .. } = cell.cell.identity {
                    if earfcn == *carrier_freq {
                        out.push(Candidate { cell, dbm });
                    }
                }
            }
        }
        MeasObject::Gera {
            starting_arfcn,
            following_arfcns,
            ncc_permitted,
            ..
        } => {
            for (cell, dbm) in scenario.cells.iter().zip(rx) {
                let Some(dbm) = *dbm else { continue };
                if dbm < scenario.detection_floor_dbm {
                    continue;
                }
                if let CellIdentity::Gera { arfcn, ncc, .. } = cell.cell.identity {
                    let on_carrier = arfcn == *starting_arfcn || following_arfcns.contains(&arfcn);
                    let permitted = (ncc_permitted >> ncc) & 1 == 1;
                    if on_carrier && permitted {
                        out.push(Candidate { cell, dbm });
                    }
                }
            }
        }
        MeasObject::Utra => return Err(SimError::UnsupportedRat(RatType::Utra)),
        MeasObject::Nr => return Err(SimError::UnsupportedRat(RatType::Nr)),
    }
    // Strongest first; scenario order breaks exact ties.
    out.sort_by(|a, b| b.dbm.partial_cmp(&a.dbm).expect("rx is never NaN"));
    Ok(out)
}

fn evaluate_entry(
    entry: &MeasEntry,
    state: &mut EntryState,
    candidates: &[Candidate<'_>],
    serving_cell: &ScenarioCell,
    serving_dbm: f64,
    t: u64,
    tick_ms: u64,
) -> Option<MeasurementReport> {
    match entry.report.trigger {
        ReportTrigger::Periodic { purpose } => {
            let boundary = t == 0
                || (t / entry.report.report_interval_ms)
                    != ((t - tick_ms) / entry.report.report_interval_ms);
            if !boundary || !entry.report.report_amount.allows(state.emitted) {
                return None;
            }
            if purpose == ReportPurpose::ReportCgi && !cgi_target_heard(entry, candidates) {
                // CGI acquisition waits for the target; the report budget
                // is not spent on empty reports.
                return None;
            }
            state.emitted += 1;
            Some(build_report(
                entry,
                candidates,
                serving_cell,
                serving_dbm,
                t,
            ))
        }
        ReportTrigger::EventA3 {
            a3_offset_coded,
            hysteresis_coded,
            time_to_trigger_ms,
        } => {
            let need = time_to_trigger_ms.div_ceil(tick_ms).max(1) as u32;
            let mut held = BTreeMap::new();
            for candidate in candidates {
                if a3_condition(
                    candidate.dbm,
                    serving_dbm,
                    a3_offset_coded,
                    hysteresis_coded,
                ) {
                    let uid = candidate.cell.cell.cell_uid.clone();
                    let count = state.hold.get(&uid).copied().unwrap_or(0) + 1;
                    held.insert(uid, count);
                }
            }
            state.hold = held;
            let entered = state.hold.values().any(|&count| count >= need);

            if !entered {
                state.triggered = false;
                state.emitted = 0;
                return None;
            }
            if !state.triggered {
                state.triggered = true;
                state.emitted = 0;
                state.last_report_ms = None;
            }
            let due = match state.last_report_ms {
                None => true,
                Some(last) => t.saturating_sub(last) >= entry.report.report_interval_ms,
            };
            if !due || !entry.report.report_amount.allows(state.emitted) {
                return None;
            }
            state.emitted += 1;
            state.last_report_ms = Some(t);
            Some(build_report(
                entry,
                candidates,
                serving_cell,
                serving_dbm,
                t,
            ))
        }
    }
}

fn cgi_target_heard(entry: &MeasEntry, candidates: &[Candidate<'_>]) -> bool {
    let target = match &entry.object {
        MeasObject::Gera {
            cell_for_which_to_report_cgi,
            ..
        } => *cell_for_which_to_report_cgi,
        _ => None,
    };
    match target {
        Some((ncc, bcc)) => candidates.iter().any(|c| {
            matches!(
                c.cell.cell.identity,
                CellIdentity::Gera { ncc: n, bcc: b, .. } if n == ncc && b == bcc
            )
        }),
        None => !candidates.is_empty(),
    }
}

fn build_report(
    entry: &MeasEntry,
    candidates: &[Candidate<'_>],
    serving_cell: &ScenarioCell,
    serving_dbm: f64,
    t: u64,
) -> MeasurementReport {
    let CellIdentity::Eutra {
        pci: collector_pci,
        earfcn: collector_earfcn,
        ..
    } = serving_cell.cell.identity
    else {
        unreachable!("serving cells are E-UTRA");
    };

    let take = usize::from(entry.report.max_report_cells).min(MAX_NEIGHBORS);
    let neighbors = candidates
        .iter()
        .take(take)
        .map(|candidate| neighbor_entry(entry, candidate))
        .collect();

    let report = MeasurementReport {
        timestamp_ms: t,
        collector_pci,
        collector_earfcn,
        meas_id: entry.meas_id,
        pcell: eutra_signal(serving_dbm),
        neighbors,
    };
    debug_assert!(validate_report(&report).is_empty());
    report
}

fn neighbor_entry(entry: &MeasEntry, candidate: &Candidate<'_>) -> NeighborResult {
    match candidate.cell.cell.identity {
        CellIdentity::Eutra { pci, earfcn, .. } => NeighborResult {
            identity: CellIdentity::Eutra {
                pci,
                earfcn,
                cgi: None,
            },
            signal: eutra_signal(candidate.dbm),
        },
        CellIdentity::Gera {
            arfcn,
            band,
            ncc,
            bcc,
            cgi,
        } => {
            let requested = matches!(
                &entry.object,
                MeasObject::Gera { cell_for_which_to_report_cgi: Some((n, b)), .. }
                    if *n == ncc && *b == bcc
            );
            NeighborResult {
                identity: CellIdentity::Gera {
                    arfcn,
                    band,
                    ncc,
                    bcc,
                    cgi: if requested { cgi } else { None },
                },
                signal: SignalMeasurement::gera(rssi_dbm_to_coded(candidate.dbm)),
            }
        }
        CellIdentity::Utra | CellIdentity::Nr => unreachable!("filtered by candidate collection"),
    }
}

fn eutra_signal(dbm: f64) -> SignalMeasurement {
    // Quality stand-in: scaled from strength, since interference is not
    // modeled.
    let rsrp = rsrp_dbm_to_coded(dbm);
    let rsrq_db = -20.0 + f64::from(rsrp) * 17.0 / 97.0;
    SignalMeasurement::eutra(rsrp, rsrq_db_to_coded(rsrq_db))
}

fn ground_truth(scenario: &Scenario) -> Vec<TruthEntry> {
    let mut truth = Vec::new();
    for cell in scenario.cells.iter().filter(|c| c.is_false) {
        let Some(key) = AlertKey::from_identity(&cell.cell.identity) else {
            continue;
        };
        let windows: Vec<(u64, u64)> = if cell.active_windows.is_empty() {
            vec![(0, scenario.duration_ms)]
        } else {
            cell.active_windows.clone()
        };
        for (from, to) in windows {
            truth.push(TruthEntry {
                key,
                active_from_ms: from,
                active_to_ms: to,
            });
        }
    }
    truth
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BandIndicator, Plmn, ReportAmount, ReportConfig};

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0)
    }

    #[test]
    fn path_loss_matches_log_distance_model() {
        let params = PropagationParams::default();
        assert_eq!(path_loss_db(1.0, &params, &mut rng()), 32.0);
        let at_100m = path_loss_db(100.0, &params, &mut rng());
        assert!((at_100m - 102.0).abs() < 1e-9, "32 + 35*log10(100) = 102");
        assert_eq!(
            path_loss_db(0.5, &params, &mut rng()),
            32.0,
            "clamps to 1 m"
        );
    }

    #[test]
    fn received_power_subtracts_path_loss() {
        let params = PropagationParams::default();
        let at_100m = received_power_dbm(43.0, 100.0, &params, &mut rng());
        assert!((at_100m - -59.0).abs() < 1e-9);
        let at_1m = received_power_dbm(43.0, 1.0, &params, &mut rng());
        assert!((at_1m - 11.0).abs() < 1e-9);
    }

    #[test]
    fn a3_condition_examples() {
        // Offset coded -6 = -3 dB, hysteresis coded 2 = 1 dB.
        assert!(a3_condition(-90.0, -95.0, -6, 2));
        assert!(!a3_condition(-95.0, -95.0, 0, 0), "strict inequality");
        assert!(!a3_condition(-98.0, -95.0, -6, 2));
    }

    #[test]
    fn capture_check_examples() {
        assert!(capture_check(-50.0, -80.0, 10.0));
        assert!(!capture_check(-80.0, -80.0, 10.0));
        assert!(!capture_check(-50.0, -80.0, f64::INFINITY));
    }

    fn tiny_scenario() -> Scenario {
        let eutra_cell = |uid: &str, pci: u16, pos: (f64, f64), is_false: bool| ScenarioCell {
            cell: TopologyCell {
                cell_uid: uid.to_string(),
                identity: CellIdentity::Eutra {
                    pci,
                    earfcn: 100,
                    cgi: None,
                },
                plmn: Plmn::new(262, 1, false),
                tac_or_lac: 500,
                location: Some(pos),
                ho_neighbors: Vec::new(),
            },
            tx_power_dbm: 43.0,
            is_false,
            active_windows: Vec::new(),
        };
        Scenario {
            seed: 7,
            duration_ms: 5_000,
            tick_ms: 1_000,
            cells: vec![
                eutra_cell("legit-a", 101, (0.0, 0.0), false),
                eutra_cell("legit-b", 102, (400.0, 0.0), false),
                eutra_cell("rogue", 204, (100.0, 50.0), true),
            ],
            ues: vec![UeConfig {
                start: (50.0, 0.0),
                movement: UeMovement::Stationary,
                speed_mps: 0.0,
            }],
            meas_config: MeasurementConfig {
                entries: vec![MeasEntry {
                    meas_id: 1,
                    object: MeasObject::Eutra { carrier_freq: 100 },
                    report: ReportConfig {
                        trigger: ReportTrigger::Periodic {
                            purpose: ReportPurpose::Normal,
                        },
                        max_report_cells: 4,
                        report_interval_ms: 1_000,
                        report_amount: ReportAmount::Infinite,
                    },
                }],
            },
            propagation: PropagationParams::default(),
            capture_margin_db: f64::INFINITY,
            detection_floor_dbm: -110.0,
        }
    }

    #[test]
    fn runs_are_bit_identical() {
        let scenario = tiny_scenario();
        let a = run_scenario(&scenario).unwrap();
        let b = run_scenario(&scenario).unwrap();
        assert_eq!(a, b);
        let bytes_a: Vec<Vec<u8>> = a
            .traces
            .values()
            .map(|reports| crate::codec::encode_trace(reports).unwrap())
            .collect();
        let bytes_b: Vec<Vec<u8>> = b
            .traces
            .values()
            .map(|reports| crate::codec::encode_trace(reports).unwrap())
            .collect();
        assert_eq!(bytes_a, bytes_b);
    }

    #[test]
    fn random_walk_runs_stay_deterministic() {
        let mut scenario = tiny_scenario();
        scenario.ues[0].movement = UeMovement::RandomWalk {
            min: (0.0, 0.0),
            max: (300.0, 100.0),
        };
        scenario.ues[0].speed_mps = 10.0;
        let a = run_scenario(&scenario).unwrap();
        let b = run_scenario(&scenario).unwrap();
        assert_eq!(a, b);
        assert!(a.report_count() > 0);
    }

    #[test]
    fn zero_ues_give_empty_traces_but_valid_truth() {
        let mut scenario = tiny_scenario();
        scenario.ues.clear();
        let out = run_scenario(&scenario).unwrap();
        assert_eq!(out.report_count(), 0);
        assert_eq!(out.ground_truth.len(), 1);
        assert_eq!(
            out.ground_truth[0].key,
            AlertKey::Eutra {
                earfcn: 100,
                pci: 204
            }
        );
    }

    #[test]
    fn rogue_neighbor_appears_in_reports() {
        let out = run_scenario(&tiny_scenario()).unwrap();
        let reports = &out.traces["legit-a"];
        assert_eq!(reports.len(), 5, "one periodic report per tick");
        assert!(reports
            .iter()
            .any(|r| r.neighbors.iter().any(|n| n.identity.pci() == Some(204))));
    }

    #[test]
    fn every_emitted_label_maps_to_one_scenario_cell() {
        let scenario = tiny_scenario();
        let out = run_scenario(&scenario).unwrap();
        let key_of = |identity: &CellIdentity| AlertKey::from_identity(identity).unwrap();

        for report in out.traces.values().flatten() {
            for neighbor in &report.neighbors {
                let owners: Vec<_> = scenario
                    .cells
                    .iter()
                    .filter(|c| key_of(&c.cell.identity) == key_of(&neighbor.identity))
                    .collect();
                assert_eq!(owners.len(), 1, "neighbor {} has one owner", neighbor.identity);
            }
        }
        let truth_keys: std::collections::BTreeSet<AlertKey> =
            out.ground_truth.iter().map(|t| t.key).collect();
        let false_keys: std::collections::BTreeSet<AlertKey> = scenario
            .cells
            .iter()
            .filter(|c| c.is_false)
            .map(|c| key_of(&c.cell.identity))
            .collect();
        assert_eq!(truth_keys, false_keys, "truth marks exactly the false cells");
    }

    #[test]
    fn emitted_rsrp_matches_inverse_conversion() {
        let scenario = tiny_scenario();
        let out = run_scenario(&scenario).unwrap();
        let mut rng = rng();
        // UE at (50, 0): serving legit-a at 50 m.
        let expected_serving = received_power_dbm(43.0, 50.0, &scenario.propagation, &mut rng);
        let report = &out.traces["legit-a"][0];
        assert_eq!(
            report.pcell.rsrp_coded,
            Some(rsrp_dbm_to_coded(expected_serving))
        );
        // Rogue at distance sqrt(50^2+50^2) from the UE.
        let rogue_dbm = received_power_dbm(
            43.0,
            (50.0f64.powi(2) * 2.0).sqrt(),
            &scenario.propagation,
            &mut rng,
        );
        let rogue = report
            .neighbors
            .iter()
            .find(|n| n.identity.pci() == Some(204))
            .unwrap();
        assert_eq!(rogue.signal.rsrp_coded, Some(rsrp_dbm_to_coded(rogue_dbm)));
    }

    #[test]
    fn capture_silences_reporting() {
        let mut scenario = tiny_scenario();
        scenario.capture_margin_db = 0.0;
        scenario.cells[2].tx_power_dbm = 80.0;
        let out = run_scenario(&scenario).unwrap();
        assert_eq!(
            out.report_count(),
            0,
            "overwhelming false cell captures the UE"
        );
    }

    #[test]
    fn capture_margin_is_monotone_in_report_count() {
        let mut scenario = tiny_scenario();
        scenario.cells[2].tx_power_dbm = 60.0;
        let mut last = 0usize;
        for margin in [0.0, 20.0, 40.0, f64::INFINITY] {
            scenario.capture_margin_db = margin;
            let count = run_scenario(&scenario).unwrap().report_count();
            assert!(count >= last, "margin {margin} decreased reports");
            last = count;
        }
    }

    #[test]
    fn utra_meas_object_is_rejected() {
        let mut scenario = tiny_scenario();
        scenario.meas_config.entries[0].object = MeasObject::Utra;
        assert!(matches!(
            run_scenario(&scenario),
            Err(SimError::UnsupportedRat(RatType::Utra))
        ));
    }

    #[test]
    fn inactive_cells_are_invisible() {
        let mut scenario = tiny_scenario();
        scenario.cells[2].active_windows = vec![(2_000, 3_000)];
        let out = run_scenario(&scenario).unwrap();
        for report in &out.traces["legit-a"] {
            let has_rogue = report
                .neighbors
                .iter()
                .any(|n| n.identity.pci() == Some(204));
            assert_eq!(has_rogue, report.timestamp_ms == 2_000);
        }
        assert_eq!(out.ground_truth[0].active_from_ms, 2_000);
        assert_eq!(out.ground_truth[0].active_to_ms, 3_000);
    }

    #[test]
    fn gera_neighbor_carries_cgi_only_when_requested() {
        let mut scenario = tiny_scenario();
        let plmn = Plmn::new(111, 11, false);
        scenario.cells.push(ScenarioCell {
            cell: TopologyCell {
                cell_uid: "bts".to_string(),
                identity: CellIdentity::Gera {
                    arfcn: 12,
                    band: BandIndicator::Dcs1800,
                    ncc: 7,
                    bcc: 3,
                    cgi: Some(crate::model::Cgi::new(plmn, 1, 111)),
                },
                plmn,
                tac_or_lac: 1,
                location: Some((60.0, 10.0)),
                ho_neighbors: Vec::new(),
            },
            tx_power_dbm: 30.0,
            is_false: true,
            active_windows: Vec::new(),
        });
        scenario.meas_config.entries.push(MeasEntry {
            meas_id: 3,
            object: MeasObject::Gera {
                starting_arfcn: 12,
                band: BandIndicator::Dcs1800,
                following_arfcns: Vec::new(),
                ncc_permitted: 0xff,
                cell_for_which_to_report_cgi: Some((7, 3)),
            },
            report: ReportConfig {
                trigger: ReportTrigger::Periodic {
                    purpose: ReportPurpose::ReportCgi,
                },
                max_report_cells: 1,
                report_interval_ms: 1_000,
                report_amount: ReportAmount::Times(1),
            },
        });
        let out = run_scenario(&scenario).unwrap();
        let gera_reports: Vec<_> = out.traces["legit-a"]
            .iter()
            .filter(|r| r.meas_id == 3)
            .collect();
        assert_eq!(gera_reports.len(), 1, "reportAmount r1 acquires once");
        let neighbor = &gera_reports[0].neighbors[0];
        assert_eq!(neighbor.identity.cgi().unwrap().plmn, plmn);

        // Without the CGI request the same neighbor reports bare.
        if let MeasObject::Gera {
            cell_for_which_to_report_cgi,
            ..
        } = &mut scenario.meas_config.entries[1].object
        {
            *cell_for_which_to_report_cgi = None;
        }
        let out = run_scenario(&scenario).unwrap();
        let report = out.traces["legit-a"]
            .iter()
            .find(|r| r.meas_id == 3)
            .unwrap();
        assert_eq!(report.neighbors[0].identity.cgi(), None);
    }
}
