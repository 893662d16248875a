//! Whole-pipeline properties: flag monotonicity in the hop count,
//! deterministic rendering, and alert/flag conservation.

use std::collections::BTreeSet;

use proptest::collection::vec;
use proptest::prelude::*;

use fbsd_core::analyzer::{aggregate, analyze, render_report, AnalysisParams, ReportFormat};
use fbsd_core::model::{CellIdentity, MeasurementReport, NeighborResult, Plmn, SignalMeasurement};
use fbsd_core::rules::{Outcome, Rule, RuleKind, RuleSet};
use fbsd_core::topology::{CellTopology, TopologyCell};

fn topo_ruleset() -> RuleSet {
    RuleSet {
        rules: vec![Rule::new("expected-neighbor", RuleKind::TopologyNeighbor)],
        default_verdict: Outcome::Legitimate,
    }
}

#[derive(Debug)]
struct World {
    topology: CellTopology,
    reports: Vec<MeasurementReport>,
}

/// A random line-shaped topology (so hop distances vary) plus reports
/// whose neighbors mix topology cells and rogue PCIs.
fn arb_world() -> impl Strategy<Value = World> {
    (2usize..12).prop_flat_map(|nodes| {
        let reports = vec(
            (0..nodes, vec((0u16..20, 0u8..=97), 0..6), 0u64..100_000),
            0..40,
        );
        reports.prop_map(move |raw| {
            let cells: Vec<TopologyCell> = (0..nodes)
                .map(|i| TopologyCell {
                    cell_uid: format!("n{i}"),
                    identity: CellIdentity::Eutra {
                        pci: i as u16,
                        earfcn: 100,
                        cgi: None,
                    },
                    plmn: Plmn::new(262, 1, false),
                    tac_or_lac: 1,
                    location: None,
                    ho_neighbors: if i + 1 < nodes {
                        vec![format!("n{}", i + 1)]
                    } else {
                        Vec::new()
                    },
                })
                .collect();
            let topology = CellTopology::from_cells(cells).unwrap().0;
            let reports = raw
                .into_iter()
                .map(|(collector, neighbors, ts)| MeasurementReport {
                    timestamp_ms: ts,
                    collector_pci: collector as u16,
                    collector_earfcn: 100,
                    meas_id: 1,
                    pcell: SignalMeasurement::eutra(41, 33),
                    neighbors: neighbors
                        .into_iter()
                        .take(8)
                        .map(|(pci, rsrp)| NeighborResult {
                            identity: CellIdentity::Eutra {
                                pci,
                                earfcn: 100,
                                cgi: None,
                            },
                            signal: SignalMeasurement::eutra(rsrp, 2),
                        })
                        .collect(),
                })
                .collect();
            World { topology, reports }
        })
    })
}

proptest! {
    #[test]
    fn flag_count_is_non_increasing_in_hops(world in arb_world()) {
        let ruleset = topo_ruleset();
        let mut last = usize::MAX;
        for hops in 0..6 {
            let params = AnalysisParams { hops, ..AnalysisParams::default() };
            let (flags, _) = analyze(&world.reports, &world.topology, &ruleset, &params);
            prop_assert!(flags.len() <= last, "hops {} grew flags", hops);
            last = flags.len();
        }
    }

    #[test]
    fn rendered_reports_are_deterministic(world in arb_world(), hops in 0u32..4) {
        let ruleset = topo_ruleset();
        let params = AnalysisParams { hops, ..AnalysisParams::default() };
        let render = || {
            let (flags, stats) = analyze(&world.reports, &world.topology, &ruleset, &params);
            let alerts = aggregate(&flags, &params);
            render_report(&alerts, &stats, ReportFormat::Csv)
        };
        prop_assert_eq!(render(), render());
    }

    #[test]
    fn alerts_conserve_flags(
        world in arb_world(),
        min_observations in 1u32..4,
        window_ms in prop_oneof![Just(1_000u64), Just(10_000u64), Just(3_600_000u64)],
    ) {
        let ruleset = topo_ruleset();
        let params = AnalysisParams {
            min_observations,
            window_ms,
            ..AnalysisParams::default()
        };
        let (flags, _) = analyze(&world.reports, &world.topology, &ruleset, &params);
        let alerts = aggregate(&flags, &params);

        let total: usize = alerts.iter().map(|a| a.count).sum();
        prop_assert!(total <= flags.len(), "alert counts exceed flags");
        for alert in &alerts {
            prop_assert!(alert.count >= min_observations as usize);
            prop_assert!(alert.first_seen_ms <= alert.last_seen_ms);
        }
        // Within one window a key appears at most once.
        let mut keys: BTreeSet<(String, u64)> = BTreeSet::new();
        for alert in &alerts {
            let window = alert.first_seen_ms / window_ms;
            prop_assert!(keys.insert((alert.key.to_string(), window)));
        }
    }
}
