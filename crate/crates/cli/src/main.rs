//! `fbsd`: batch frontend for the false base station detection pipeline.
//!
//! Exit codes are stable: 0 success (or no alerts for `analyze`),
//! 1 alerts raised (`analyze` only), 2 usage error, 3 input/parse error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use fbsd_core::analyzer::{
    aggregate, analyze, evaluate_against_truth, parse_alerts_csv, parse_truth_csv, render_report,
    render_truth_csv, AnalysisParams, ReportFormat,
};
use fbsd_core::codec::{
    decode_report, encode_report, read_trace_lenient, split_records, write_trace,
};
use fbsd_core::model::MeasurementReport;
use fbsd_core::rules::load_ruleset;
use fbsd_core::simulator::parse_scenario;
use fbsd_core::topology::{build_expected_view, load_topology, CellTopology};

const EXIT_ALERTS_RAISED: u8 = 1;
const EXIT_INPUT_ERROR: u8 = 3;

#[derive(Parser)]
#[command(
    name = "fbsd",
    version,
    about = "Network-side false base station detection toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and emit traces, topology, and ground truth.
    Simulate {
        /// Scenario description file.
        #[arg(long)]
        scenario: PathBuf,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
    },
    /// Analyze traces against a topology and rule chain.
    Analyze {
        /// Trace files or directories containing *.mrtf files.
        #[arg(long, num_args = 1.., required = true)]
        traces: Vec<PathBuf>,
        /// Topology CSV.
        #[arg(long)]
        topology: PathBuf,
        /// Rule chain file.
        #[arg(long)]
        rules: PathBuf,
        /// Neighbor expansion depth N (wins over the rule file).
        #[arg(long)]
        hops: Option<u32>,
        /// Flags needed per window before alerting.
        #[arg(long = "min-obs", value_parser = clap::value_parser!(u32).range(1..))]
        min_obs: Option<u32>,
        /// Aggregation window in milliseconds.
        #[arg(long = "window", value_parser = clap::value_parser!(u64).range(1..))]
        window_ms: Option<u64>,
        /// Minutes added to UTC for time-of-day rules.
        #[arg(long = "utc-offset", allow_hyphen_values = true)]
        utc_offset: Option<i32>,
        /// Verdict when the whole chain continues (wins over the rule
        /// file).
        #[arg(long = "default-verdict", value_enum)]
        default_verdict: Option<VerdictArg>,
        #[arg(long, value_enum, default_value_t = FormatArg::Text)]
        format: FormatArg,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Topology inspection tools.
    Topo {
        #[command(subcommand)]
        command: TopoCommand,
    },
    /// Trace file inspection tools.
    Codec {
        #[command(subcommand)]
        command: CodecCommand,
    },
    /// Score an alert CSV against ground truth.
    Eval {
        #[arg(long)]
        alerts: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
}

#[derive(Subcommand)]
enum TopoCommand {
    /// Print the expected view of one collector.
    Expand {
        #[arg(long)]
        topology: PathBuf,
        /// Collector cell uid.
        #[arg(long)]
        cell: String,
        #[arg(long, default_value_t = 1)]
        hops: u32,
    },
}

#[derive(Subcommand)]
enum CodecCommand {
    /// Decode a trace file and print its records.
    Dump {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Decode, re-encode, and verify bit equality of every record.
    Roundtrip {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum VerdictArg {
    Legitimate,
    False,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_INPUT_ERROR)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Simulate { scenario, out } => cmd_simulate(&scenario, &out),
        Command::Analyze {
            traces,
            topology,
            rules,
            hops,
            min_obs,
            window_ms,
            utc_offset,
            default_verdict,
            format,
            out,
        } => cmd_analyze(
            &traces,
            &topology,
            &rules,
            hops,
            min_obs,
            window_ms,
            utc_offset,
            default_verdict,
            format,
            out,
        ),
        Command::Topo {
            command:
                TopoCommand::Expand {
                    topology,
                    cell,
                    hops,
                },
        } => cmd_topo_expand(&topology, &cell, hops),
        Command::Codec { command } => match command {
            CodecCommand::Dump { input } => cmd_codec_dump(&input),
            CodecCommand::Roundtrip { input } => cmd_codec_roundtrip(&input),
        },
        Command::Eval { alerts, truth } => cmd_eval(&alerts, &truth),
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn cmd_simulate(scenario_path: &Path, out_dir: &Path) -> Result<u8> {
    let text = read_to_string(scenario_path)?;
    let scenario = parse_scenario(&text)
        .with_context(|| format!("parsing scenario {}", scenario_path.display()))?;
    let output = fbsd_core::simulator::run_scenario(&scenario).context("running scenario")?;

    let traces_dir = out_dir.join("traces");
    fs::create_dir_all(&traces_dir)
        .with_context(|| format!("creating {}", traces_dir.display()))?;
    for (collector, reports) in &output.traces {
        let path = traces_dir.join(format!("{collector}.mrtf"));
        write_trace(&path, reports).with_context(|| format!("writing {}", path.display()))?;
    }
    let topology_path = out_dir.join("topology.csv");
    fs::write(&topology_path, &output.topology_csv)
        .with_context(|| format!("writing {}", topology_path.display()))?;
    let truth_path = out_dir.join("truth.csv");
    fs::write(&truth_path, render_truth_csv(&output.ground_truth))
        .with_context(|| format!("writing {}", truth_path.display()))?;

    println!(
        "simulated {} ms: {} cells ({} false), {} ues",
        scenario.duration_ms,
        scenario.cells.len(),
        scenario.cells.iter().filter(|c| c.is_false).count(),
        scenario.ues.len(),
    );
    println!(
        "wrote {} report(s) across {} collector trace(s), topology.csv, truth.csv",
        output.report_count(),
        output.traces.len(),
    );
    Ok(0)
}

/// Expand `--traces` arguments: directories contribute their *.mrtf files
/// in name order.
fn collect_trace_paths(args: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for arg in args {
        if arg.is_dir() {
            let mut found = Vec::new();
            for entry in fs::read_dir(arg).with_context(|| format!("reading {}", arg.display()))? {
                let path = entry?.path();
                if path.extension().is_some_and(|ext| ext == "mrtf") {
                    found.push(path);
                }
            }
            found.sort();
            if found.is_empty() {
                bail!("no .mrtf files in {}", arg.display());
            }
            paths.extend(found);
        } else {
            paths.push(arg.clone());
        }
    }
    Ok(paths)
}

#[allow(clippy::too_many_arguments)]
fn cmd_analyze(
    traces: &[PathBuf],
    topology_path: &Path,
    rules_path: &Path,
    hops: Option<u32>,
    min_obs: Option<u32>,
    window_ms: Option<u64>,
    utc_offset: Option<i32>,
    default_verdict: Option<VerdictArg>,
    format: FormatArg,
    out: Option<PathBuf>,
) -> Result<u8> {
    let topology = load_topology_file(topology_path)?;
    let loaded = load_ruleset(&read_to_string(rules_path)?)
        .with_context(|| format!("parsing rules {}", rules_path.display()))?;

    // Precedence: defaults, then rule-file overrides, then flags.
    let mut params = AnalysisParams::default();
    let overrides = loaded.overrides;
    params.hops = hops.or(overrides.hops).unwrap_or(params.hops);
    params.min_observations = min_obs
        .or(overrides.min_observations)
        .unwrap_or(params.min_observations);
    params.window_ms = window_ms
        .or(overrides.window_ms)
        .unwrap_or(params.window_ms);
    params.utc_offset_minutes = utc_offset
        .or(overrides.utc_offset_minutes)
        .unwrap_or(params.utc_offset_minutes);
    params.default_verdict = default_verdict.map(|v| match v {
        VerdictArg::Legitimate => fbsd_core::rules::Outcome::Legitimate,
        VerdictArg::False => fbsd_core::rules::Outcome::False,
    });
    params
        .validate()
        .map_err(|message| anyhow::anyhow!(message))?;

    let mut reports: Vec<MeasurementReport> = Vec::new();
    for path in collect_trace_paths(traces)? {
        let (decoded, skipped) = read_trace_lenient(&path)
            .with_context(|| format!("reading trace {}", path.display()))?;
        if !skipped.is_empty() {
            eprintln!(
                "warning: {}: skipped {} undecodable record(s), first at index {}: {}",
                path.display(),
                skipped.len(),
                skipped[0].0,
                skipped[0].1,
            );
        }
        reports.extend(decoded);
    }

    let (flags, stats) = analyze(&reports, &topology, &loaded.ruleset, &params);
    let alerts = aggregate(&flags, &params);
    let rendered = render_report(
        &alerts,
        &stats,
        match format {
            FormatArg::Text => ReportFormat::Text,
            FormatArg::Csv => ReportFormat::Csv,
        },
    );

    match out {
        Some(path) => {
            fs::write(&path, rendered).with_context(|| format!("writing {}", path.display()))?;
            println!(
                "wrote report to {} ({} alerts)",
                path.display(),
                alerts.len()
            );
        }
        None => print!("{rendered}"),
    }

    Ok(if alerts.is_empty() {
        0
    } else {
        EXIT_ALERTS_RAISED
    })
}

fn load_topology_file(path: &Path) -> Result<CellTopology> {
    let load = load_topology(&read_to_string(path)?)
        .with_context(|| format!("parsing topology {}", path.display()))?;
    for dangling in &load.dangling {
        eprintln!("warning: {dangling}");
    }
    Ok(load.topology)
}

fn cmd_topo_expand(topology_path: &Path, cell: &str, hops: u32) -> Result<u8> {
    let topology = load_topology_file(topology_path)?;
    let view = build_expected_view(&topology, cell, hops)
        .with_context(|| format!("expanding `{cell}`"))?;

    println!(
        "expected view for {cell} at N={hops} (handover distance <= {})",
        hops + 1
    );
    for (earfcn, pcis) in &view.allowed_pcis {
        let pcis: Vec<String> = pcis.iter().map(|p| p.to_string()).collect();
        println!("  EUTRA earfcn {earfcn}: pci {}", pcis.join(", "));
    }
    for (arfcn, codes) in &view.allowed_geran {
        let codes: Vec<String> = codes.iter().map(|(n, b)| format!("{n}-{b}")).collect();
        println!("  GERA arfcn {arfcn}: bsic {}", codes.join(", "));
    }
    let rats: Vec<String> = view.legitimate_rats.iter().map(|r| r.to_string()).collect();
    let plmns: Vec<String> = view
        .legitimate_plmns
        .iter()
        .map(|p| p.to_string())
        .collect();
    println!("  legitimate rats: {}", rats.join(", "));
    println!("  legitimate plmns: {}", plmns.join(", "));
    Ok(0)
}

fn cmd_codec_dump(input: &Path) -> Result<u8> {
    let bytes = fs::read(input).with_context(|| format!("reading {}", input.display()))?;
    let records = split_records(&bytes).context("walking container")?;
    println!("{} records", records.len());
    for (index, record) in records.iter().enumerate() {
        let report = decode_report(record).with_context(|| format!("decoding record {index}"))?;
        println!(
            "[{index}] t={} ms collector pci {} earfcn {} measId {} pcell rsrp {} rsrq {}",
            report.timestamp_ms,
            report.collector_pci,
            report.collector_earfcn,
            report.meas_id,
            report.pcell.rsrp_coded.unwrap_or_default(),
            report.pcell.rsrq_coded.unwrap_or_default(),
        );
        for neighbor in &report.neighbors {
            let signal = match (
                neighbor.signal.rsrp_coded,
                neighbor.signal.rsrq_coded,
                neighbor.signal.rssi_coded,
            ) {
                (Some(p), Some(q), _) => format!("rsrp {p} rsrq {q}"),
                (Some(p), None, _) => format!("rsrp {p}"),
                (None, Some(q), _) => format!("rsrq {q}"),
                (None, None, Some(r)) => format!("rssi {r}"),
                _ => "no signal".to_string(),
            };
            match neighbor.identity.cgi() {
                Some(cgi) => println!(
                    "    {} {signal} cgi {} lac {} ci {}",
                    neighbor.identity, cgi.plmn, cgi.lac, cgi.cell_identity
                ),
                None => println!("    {} {signal}", neighbor.identity),
            }
        }
    }
    Ok(0)
}

fn cmd_codec_roundtrip(input: &Path) -> Result<u8> {
    let bytes = fs::read(input).with_context(|| format!("reading {}", input.display()))?;
    let records = split_records(&bytes).context("walking container")?;
    let total = records.len();
    for (index, record) in records.into_iter().enumerate() {
        let report = decode_report(record).with_context(|| format!("decoding record {index}"))?;
        let reencoded =
            encode_report(&report).with_context(|| format!("re-encoding record {index}"))?;
        if reencoded != record {
            bail!("record {index} re-encodes to different bytes");
        }
    }
    println!("{total} records round-trip bit-exactly");
    Ok(0)
}

fn cmd_eval(alerts_path: &Path, truth_path: &Path) -> Result<u8> {
    let alerts = parse_alerts_csv(&read_to_string(alerts_path)?)
        .with_context(|| format!("parsing alerts {}", alerts_path.display()))?;
    let truth = parse_truth_csv(&read_to_string(truth_path)?)
        .with_context(|| format!("parsing truth {}", truth_path.display()))?;
    let outcome = evaluate_against_truth(&alerts, &truth);
    print!("{outcome}");
    Ok(0)
}
