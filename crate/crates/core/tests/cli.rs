use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use graph_cpd::snapshot_io::{write_sequence, SnapshotReader};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_graph-cpd"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = "\
# small planted scenario
num_nodes = 10
community_size = 3
p0 = 0.2
p1 = 0.9
change_point = 3
horizon = 5
";

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.cfg");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn simulate_writes_consecutive_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("s.txt");
    let o = run(&["simulate", "--config", &cfg, "--seed", "4", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let blocks: Vec<&str> = text.split("\n\n").filter(|b| !b.trim().is_empty()).collect();
    let headers: Vec<&str> = blocks.iter().map(|b| b.lines().next().unwrap()).collect();
    assert_eq!(headers, ["1 10", "2 10", "3 10", "4 10", "5 10"]);
    let graphs = SnapshotReader::new(text.as_bytes()).read_all().unwrap();
    assert_eq!(graphs.len(), 5);
    // p1 = 0.9 on {0,1,2}: the community is visibly denser from block 3 on
    let within: Vec<usize> = graphs
        .iter()
        .map(|g| graph_cpd::graph::edge_count_within(g, &[0, 1, 2]).unwrap())
        .collect();
    assert!(within[2..].iter().sum::<usize>() >= 6, "{within:?}");

    let mut again = Vec::new();
    write_sequence(&mut again, &graphs).unwrap();
    assert_eq!(again, text.as_bytes());
}

#[test]
fn detect_cusum_echoes_the_community_and_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("horizon = 5", "horizon = 40"));
    let stream = dir.path().join("s.txt");
    assert!(run(&["simulate", "--config", &cfg, "--seed", "1", "--out", stream.to_str().unwrap()])
        .status
        .success());
    let o = run(&[
        "detect",
        "--config",
        &cfg,
        "--input",
        stream.to_str().unwrap(),
        "--detector",
        "cusum",
        "--threshold",
        "6",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let log = String::from_utf8(o.stdout).unwrap();
    let last = log.lines().last().unwrap();
    assert!(last.starts_with("# alarm t="), "{last}");
    assert!(last.contains("v_hat=0,1,2"), "{last}");
    let step = log.lines().rev().nth(1).unwrap();
    let fields: Vec<&str> = step.split(' ').collect();
    assert_eq!(fields.len(), 5);
    assert_eq!(fields[2], "1");
    assert_eq!(fields[4], "0,1,2");
}

#[test]
fn detect_without_alarm_exits_zero_and_reads_stdin() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("change_point = 3", "change_point = inf"));
    let sim = run(&["simulate", "--config", &cfg, "--seed", "2"]);
    let mut child = bin()
        .args(["detect", "--config", &cfg, "--threshold", "500", "--set", "min_lookback=2"])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    use std::io::Write;
    child.stdin.take().unwrap().write_all(&sim.stdout).unwrap();
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let log = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = log.lines().collect();
    assert_eq!(lines[0], "1 - 0 - -");
    assert!(lines[1].starts_with("2 "));
    assert!(lines.last().unwrap().starts_with("# no alarm t=5"));
}

#[test]
fn malformed_stream_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.txt");
    fs::write(&input, "1 10\n0 1\n5 2\n\n").unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = run(&["detect", "--config", &cfg, "--threshold", "3", "--input", input.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn config_errors_are_precise() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "num_nodes = 10\ncommunity_size = 12\n");
    let o = run(&["simulate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("config line 2"), "{}", stderr(&o));
    let o = run(&["simulate", "--set", "p0=2"]);
    assert!(stderr(&o).contains("--set p0"), "{}", stderr(&o));
    let o = run(&["simulate", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["detect", "--threshold", "3", "--alpha", "0.1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_lists_every_subcommand() {
    let o = run(&["--help"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for cmd in ["simulate", "detect", "calibrate", "evaluate", "localize"] {
        assert!(text.contains(cmd), "{cmd}");
        assert!(run(&[cmd, "--help"]).status.success());
    }
}

#[test]
fn localize_finds_the_planted_set() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("horizon = 5", "horizon = 20"));
    let stream = dir.path().join("s.txt");
    run(&["simulate", "--config", &cfg, "--seed", "3", "--out", stream.to_str().unwrap()]);
    let o = run(&["localize", "--config", &cfg, "--input", stream.to_str().unwrap(), "--k", "3", "--t", "20"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let line = String::from_utf8(o.stdout).unwrap();
    assert!(line.starts_with("3 20 0,1,2 "), "{line}");
}

#[test]
fn calibrate_and_evaluate_write_csv() {
    let o = run(&[
        "calibrate",
        "--set",
        "num_nodes=10",
        "--set",
        "community_size=3",
        "--set",
        "max_lookback=20",
        "--alpha",
        "0.05",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().nth(1).unwrap(), "glr,0.05,20,11.4721,,,,,,");

    let o = run(&[
        "evaluate",
        "--set",
        "num_nodes=10",
        "--set",
        "community_size=3",
        "--set",
        "replications=30",
        "--set",
        "horizon=500",
        "--detectors",
        "cusum,glr",
        "--thresholds",
        "3",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "detector,b,arl,arl_se,edd,edd_se,reps_arl,reps_edd,censored_frac");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("cusum,3,"));
    assert!(lines[2].starts_with("glr-exhaustive,3,"));
}
