//! Network-side false base station detection.
//!
//! UEs routinely report the cells they hear to the network; an operator
//! knows which cells it actually runs. This crate compares the two: it
//! decodes measurement-report traces, builds per-collector expected views
//! from the operator's cell topology, runs observations through a
//! configurable rule chain, and aggregates deviations into alerts. A
//! deterministic scenario simulator regenerates lab-style and
//! operator-scale workloads for testing the pipeline end to end.
//!
//! Modules follow the pipeline:
//!
//! - [`model`]: domain types for cells, identities, signals, and reports
//! - [`codec`]: the bit-exact binary trace format plus CSV ingestion
//! - [`topology`]: handover graph, N-hop expansion, expected views
//! - [`rules`]: the ordered detection rule chain
//! - [`analyzer`]: observation mapping, flagging, alert aggregation,
//!   report rendering, precision/recall scoring
//! - [`simulator`]: deterministic radio scenario simulation

pub mod analyzer;
pub mod codec;
pub mod model;
pub mod rules;
pub mod sections;
pub mod simulator;
pub mod topology;

pub use analyzer::{
    aggregate, analyze, evaluate_against_truth, render_report, Alert, AlertKey, AnalysisParams,
    Flag, ReportFormat, RunStats, TruthEntry,
};
pub use codec::{decode_report, encode_report, read_trace, write_trace, CodecError};
pub use model::{
    CellIdentity, MeasurementConfig, MeasurementReport, NeighborResult, Plmn, RatType,
    SignalMeasurement,
};
pub use rules::{evaluate_chain, load_ruleset, Observation, Rule, RuleKind, RuleSet, Verdict};
pub use simulator::{parse_scenario, run_scenario, Scenario, SimOutput};
pub use topology::{build_expected_view, is_allowed, load_topology, CellTopology, ExpectedView};
