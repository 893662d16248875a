//! Exit-code and surface behavior of every subcommand.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn fbsd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fbsd"))
        .args(args)
        .output()
        .expect("spawn fbsd")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

fn s(path: &Path) -> String {
    path.to_str().unwrap().to_string()
}

#[test]
fn missing_required_flag_is_usage_error() {
    assert_eq!(code(&fbsd(&["simulate"])), 2);
    assert_eq!(code(&fbsd(&["analyze"])), 2);
}

#[test]
fn negative_hops_is_usage_error() {
    let output = fbsd(&[
        "analyze",
        "--traces",
        "x",
        "--topology",
        "y",
        "--rules",
        "z",
        "--hops",
        "-1",
    ]);
    assert_eq!(code(&output), 2);
}

#[test]
fn unknown_subcommand_is_usage_error() {
    assert_eq!(code(&fbsd(&["frobnicate"])), 2);
}

#[test]
fn unreadable_scenario_is_input_error() {
    let output = fbsd(&[
        "simulate",
        "--scenario",
        "/nonexistent.scenario",
        "--out",
        "/tmp/x",
    ]);
    assert_eq!(code(&output), 3);
}

#[test]
fn scenario_parse_failure_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.scenario");
    fs::write(&bad, "[scenario]\nduration_ms = ten\ntick_ms = 1\n").unwrap();
    let output = fbsd(&["simulate", "--scenario", &s(&bad), "--out", &s(dir.path())]);
    assert_eq!(code(&output), 3);
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("line 2"), "{stderr}");
}

#[test]
fn unwritable_output_dir_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "a file, not a directory").unwrap();
    let out = blocker.join("sub");
    let output = fbsd(&[
        "simulate",
        "--scenario",
        &s(&fixture("lab.scenario")),
        "--out",
        &s(&out),
    ]);
    assert_eq!(code(&output), 3);
}

#[test]
fn simulate_is_deterministic_across_runs() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    for dir in [&dir_a, &dir_b] {
        let output = fbsd(&[
            "simulate",
            "--scenario",
            &s(&fixture("lab.scenario")),
            "--out",
            &s(dir.path()),
        ]);
        assert_eq!(code(&output), 0);
    }
    let mut names: Vec<String> = fs::read_dir(dir_a.path().join("traces"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert!(!names.is_empty());
    for name in names {
        let a = fs::read(dir_a.path().join("traces").join(&name)).unwrap();
        let b = fs::read(dir_b.path().join("traces").join(&name)).unwrap();
        assert_eq!(a, b, "trace {name} differs between identical runs");
    }
    let topo_a = fs::read(dir_a.path().join("topology.csv")).unwrap();
    let topo_b = fs::read(dir_b.path().join("topology.csv")).unwrap();
    assert_eq!(topo_a, topo_b);
}

#[test]
fn analyze_exit_code_tracks_alert_presence() {
    let dir = tempfile::tempdir().unwrap();
    fbsd(&[
        "simulate",
        "--scenario",
        &s(&fixture("nn_chain.scenario")),
        "--out",
        &s(dir.path()),
    ]);
    let base = [
        "analyze".to_string(),
        "--traces".to_string(),
        s(&dir.path().join("traces")),
        "--topology".to_string(),
        s(&dir.path().join("topology.csv")),
        "--rules".to_string(),
        s(&fixture("topo_only.rules")),
    ];
    // Distance-3 cells flag at N=0; everything is expected at N=2.
    let with_hops = |hops: &str| {
        let mut args: Vec<String> = base.to_vec();
        args.push("--hops".to_string());
        args.push(hops.to_string());
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        fbsd(&args)
    };
    assert_eq!(code(&with_hops("0")), 1);
    assert_eq!(code(&with_hops("2")), 0);
}

#[test]
fn flags_win_over_rule_file_parameters() {
    let dir = tempfile::tempdir().unwrap();
    fbsd(&[
        "simulate",
        "--scenario",
        &s(&fixture("nn_chain.scenario")),
        "--out",
        &s(dir.path()),
    ]);
    // Rule file pins hops = 2 (everything expected, no alerts).
    let rules = dir.path().join("deep.rules");
    fs::write(
        &rules,
        "hops = 2\n\n[rule]\nid = topo\nkind = topology_neighbor\n",
    )
    .unwrap();
    let base = [
        "analyze".to_string(),
        "--traces".to_string(),
        s(&dir.path().join("traces")),
        "--topology".to_string(),
        s(&dir.path().join("topology.csv")),
        "--rules".to_string(),
        s(&rules),
    ];
    let run = |extra: &[&str]| {
        let mut args: Vec<String> = base.to_vec();
        args.extend(extra.iter().map(|a| a.to_string()));
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        fbsd(&args)
    };
    assert_eq!(code(&run(&[])), 0, "rule-file hops 2 expects everything");
    assert_eq!(code(&run(&["--hops", "0"])), 1, "flag overrides to hops 0");
    // An inverted default verdict flags even the expected neighbors.
    assert_eq!(
        code(&run(&["--hops", "2", "--default-verdict", "false"])),
        1
    );
}

#[test]
fn analyze_missing_topology_is_input_error() {
    let output = fbsd(&[
        "analyze",
        "--traces",
        "/nonexistent",
        "--topology",
        "/nonexistent.csv",
        "--rules",
        &s(&fixture("topo_only.rules")),
    ]);
    assert_eq!(code(&output), 3);
}

#[test]
fn topo_expand_lists_chain_neighborhood() {
    let dir = tempfile::tempdir().unwrap();
    fbsd(&[
        "simulate",
        "--scenario",
        &s(&fixture("nn_chain.scenario")),
        "--out",
        &s(dir.path()),
    ]);
    let topology = s(&dir.path().join("topology.csv"));
    let output = fbsd(&[
        "topo",
        "expand",
        "--topology",
        &topology,
        "--cell",
        "cell-a",
        "--hops",
        "1",
    ]);
    assert_eq!(code(&output), 0);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("pci 10, 20, 30"), "{stdout}");

    let unknown = fbsd(&[
        "topo",
        "expand",
        "--topology",
        &topology,
        "--cell",
        "ghost",
        "--hops",
        "1",
    ]);
    assert_eq!(code(&unknown), 3);

    let zero_hops = fbsd(&[
        "topo",
        "expand",
        "--topology",
        &topology,
        "--cell",
        "cell-a",
        "--hops",
        "0",
    ]);
    let stdout = String::from_utf8_lossy(&zero_hops.stdout);
    assert!(stdout.contains("pci 10, 20"), "{stdout}");
    assert!(!stdout.contains("30"), "{stdout}");
}

#[test]
fn codec_dump_and_roundtrip_cover_container_states() {
    let dir = tempfile::tempdir().unwrap();

    // Empty container: magic + zero count.
    let empty = dir.path().join("empty.mrtf");
    let mut bytes = b"MRT1".to_vec();
    bytes.extend_from_slice(&0u32.to_be_bytes());
    fs::write(&empty, &bytes).unwrap();
    let output = fbsd(&["codec", "dump", "--in", &s(&empty)]);
    assert_eq!(code(&output), 0);
    assert!(String::from_utf8_lossy(&output.stdout).contains("0 records"));
    assert_eq!(code(&fbsd(&["codec", "roundtrip", "--in", &s(&empty)])), 0);

    // Real trace from the lab scenario.
    fbsd(&[
        "simulate",
        "--scenario",
        &s(&fixture("lab.scenario")),
        "--out",
        &s(dir.path()),
    ]);
    let trace = fs::read_dir(dir.path().join("traces"))
        .unwrap()
        .next()
        .unwrap()
        .unwrap()
        .path();
    assert_eq!(code(&fbsd(&["codec", "roundtrip", "--in", &s(&trace)])), 0);
    let dump = fbsd(&["codec", "dump", "--in", &s(&trace)]);
    assert_eq!(code(&dump), 0);

    // Truncated file fails with record context.
    let full = fs::read(&trace).unwrap();
    let cut = dir.path().join("cut.mrtf");
    fs::write(&cut, &full[..full.len() - 3]).unwrap();
    let output = fbsd(&["codec", "dump", "--in", &s(&cut)]);
    assert_eq!(code(&output), 3);

    // Wrong magic.
    let mut bad = full.clone();
    bad[0..4].copy_from_slice(b"XXXX");
    let bad_path = dir.path().join("bad.mrtf");
    fs::write(&bad_path, &bad).unwrap();
    let output = fbsd(&["codec", "dump", "--in", &s(&bad_path)]);
    assert_eq!(code(&output), 3);
    assert!(String::from_utf8_lossy(&output.stderr).contains("magic"));
}

#[test]
fn eval_handles_empty_inputs_and_bad_csv() {
    let dir = tempfile::tempdir().unwrap();
    let alerts = dir.path().join("alerts.csv");
    let truth = dir.path().join("truth.csv");
    fs::write(
        &alerts,
        "rat,frequency,pci_or_bsic,count,first_seen_ms,last_seen_ms,rule_ids,collectors\n",
    )
    .unwrap();
    fs::write(
        &truth,
        "rat,frequency,pci_or_bsic,active_from_ms,active_to_ms\n",
    )
    .unwrap();
    let output = fbsd(&["eval", "--alerts", &s(&alerts), "--truth", &s(&truth)]);
    assert_eq!(code(&output), 0);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("precision 1.000"), "{stdout}");
    assert!(stdout.contains("recall    1.000"), "{stdout}");

    fs::write(&truth, "wrong,header\n1,2\n").unwrap();
    let output = fbsd(&["eval", "--alerts", &s(&alerts), "--truth", &s(&truth)]);
    assert_eq!(code(&output), 3);
}

#[test]
fn analyze_skips_undecodable_records_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    fbsd(&[
        "simulate",
        "--scenario",
        &s(&fixture("nn_chain.scenario")),
        "--out",
        &s(dir.path()),
    ]);
    let trace = dir.path().join("traces/cell-a.mrtf");
    let mut bytes = fs::read(&trace).unwrap();
    // Corrupt the final record's padding; earlier records stay intact.
    let last = bytes.len() - 1;
    bytes[last] ^= 0x01;
    fs::write(&trace, &bytes).unwrap();

    let output = fbsd(&[
        "analyze",
        "--traces",
        &s(&trace),
        "--topology",
        &s(&dir.path().join("topology.csv")),
        "--rules",
        &s(&fixture("topo_only.rules")),
        "--hops",
        "2",
    ]);
    assert_eq!(code(&output), 0);
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("skipped 1 undecodable record"), "{stderr}");
}
