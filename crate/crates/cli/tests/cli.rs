//! End-to-end tests of the command-line interface: golden outputs,
//! exit codes, and cross-invocation determinism of the written files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const THREE_NODE: &str = r#"{
    "nodes": 3,
    "origin": 0,
    "destination": 2,
    "edges": [
        {"source": 0, "target": 1, "dist": {"kind": "deterministic", "value": 1.0}},
        {"source": 1, "target": 2, "dist": {"kind": "deterministic", "value": 2.0}},
        {"source": 0, "target": 2, "dist": {"kind": "deterministic", "value": 4.0}}
    ]
}"#;

const SINGLE_EDGE: &str = r#"{
    "nodes": 2,
    "origin": 0,
    "destination": 1,
    "edges": [
        {"source": 0, "target": 1, "dist": {"kind": "deterministic", "value": 5.0}}
    ]
}"#;

fn sspbandit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sspbandit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_graph(dir: &TempDir, document: &str) -> PathBuf {
    let path = dir.path().join("graph.json");
    fs::write(&path, document).unwrap();
    path
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap()
}

#[test]
fn oracle_prints_value_and_path() {
    let dir = TempDir::new().unwrap();
    let graph = write_graph(&dir, THREE_NODE);
    let out = sspbandit(&["oracle", "--graph", graph.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "V*=3.000000, path: 0 -> 1 -> 2\n");
}

#[test]
fn oracle_full_appends_the_value_table() {
    let dir = TempDir::new().unwrap();
    let graph = write_graph(&dir, THREE_NODE);
    let out = sspbandit(&["oracle", "--graph", graph.to_str().unwrap(), "--full"]);
    assert!(out.status.success());
    assert_eq!(
        stdout(&out),
        "V*=3.000000, path: 0 -> 1 -> 2\nnode,value\n0,3.000000\n1,2.000000\n2,0.000000\n"
    );
}

#[test]
fn oracle_rejects_malformed_documents_with_exit_1() {
    let dir = TempDir::new().unwrap();
    let graph = write_graph(&dir, "{\"nodes\": 2");
    let out = sspbandit(&["oracle", "--graph", graph.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error:"));

    let missing = dir.path().join("absent.json");
    let out = sspbandit(&["oracle", "--graph", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn generate_is_deterministic_and_solvable() {
    let dir = TempDir::new().unwrap();
    let first = dir.path().join("a.json");
    let second = dir.path().join("b.json");
    for out_path in [&first, &second] {
        let out = sspbandit(&[
            "generate",
            "--nodes",
            "12",
            "--seed",
            "3",
            "--out",
            out_path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        assert!(stdout(&out).starts_with(&format!("wrote {} (12 nodes, ", out_path.display())));
    }
    assert_eq!(read(&first), read(&second));

    let out = sspbandit(&["oracle", "--graph", first.to_str().unwrap()]);
    assert!(out.status.success(), "generated networks are solvable");
    assert!(stdout(&out).starts_with("V*="));
}

#[test]
fn generate_rejects_fewer_than_two_nodes_with_exit_2() {
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().join("never.json");
    let out = sspbandit(&["generate", "--nodes", "1", "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_path.exists());
}

#[test]
fn unknown_algorithm_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let graph = write_graph(&dir, THREE_NODE);
    let out = sspbandit(&[
        "run",
        "--graph",
        graph.to_str().unwrap(),
        "--algo",
        "dijkstra",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("rtdp-ucb"), "error names the valid tokens: {stderr}");
}

#[test]
fn run_writes_the_golden_single_episode_files() {
    let dir = TempDir::new().unwrap();
    let graph = write_graph(&dir, SINGLE_EDGE);
    let out_dir = dir.path().join("results");
    let out = sspbandit(&[
        "run",
        "--graph",
        graph.to_str().unwrap(),
        "--algo",
        "rtdp-ucb",
        "--runs",
        "1",
        "--episodes",
        "1",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("rtdp-ucb: 1 runs x 1 episodes, mean final avg regret 0.000000"));

    assert_eq!(
        read(&out_dir.join("episodes.csv")),
        "run,episode,regret,cumulative_regret,average_regret,v_origin,steps,truncated,price_of_optimism,bellman_error\n\
         0,1,0.000000,0.000000,0.000000,5.000000,1,false,1000000000.000000,-5.000000\n"
    );
    assert_eq!(
        read(&out_dir.join("edges.csv")),
        "run,edge_index,source,target,samples\n0,0,0,1,1\n"
    );
    let summary = read(&out_dir.join("summary.csv"));
    let mut lines = summary.lines();
    assert_eq!(
        lines.next().unwrap(),
        "algo,runs,episodes,mean_final_avg_regret,std_final_avg_regret,mean_v_origin,mean_wall_clock_s"
    );
    assert!(lines.next().unwrap().starts_with("rtdp-ucb,1,1,0.000000,0.000000,5.000000,"));
    assert_eq!(lines.next(), None);
}

#[test]
fn repeated_runs_write_identical_results() {
    let dir = TempDir::new().unwrap();
    let graph = write_graph(&dir, THREE_NODE);
    let args = |out_dir: &Path| {
        vec![
            "run".to_string(),
            "--graph".into(),
            graph.to_str().unwrap().into(),
            "--algo".into(),
            "rtdp-eps".into(),
            "--runs".into(),
            "3".into(),
            "--episodes".into(),
            "40".into(),
            "--seed".into(),
            "11".into(),
            "--out-dir".into(),
            out_dir.to_str().unwrap().into(),
        ]
    };
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    for out_dir in [&first, &second] {
        let out = Command::new(env!("CARGO_BIN_EXE_sspbandit"))
            .args(args(out_dir))
            .output()
            .unwrap();
        assert!(out.status.success());
    }
    assert_eq!(read(&first.join("episodes.csv")), read(&second.join("episodes.csv")));
    assert_eq!(read(&first.join("edges.csv")), read(&second.join("edges.csv")));
    // summary.csv differs only in the wall-clock column.
    let strip_wall = |text: String| {
        text.lines()
            .map(|line| line.rsplit_once(',').unwrap().0.to_string())
            .collect::<Vec<_>>()
    };
    assert_eq!(
        strip_wall(read(&first.join("summary.csv"))),
        strip_wall(read(&second.join("summary.csv")))
    );
}

#[test]
fn compare_tabulates_all_four_algorithms() {
    let dir = TempDir::new().unwrap();
    let graph = write_graph(&dir, THREE_NODE);
    let out_dir = dir.path().join("cmp");
    let out = sspbandit(&[
        "compare",
        "--graph",
        graph.to_str().unwrap(),
        "--runs",
        "2",
        "--episodes",
        "20",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("algo"));
    assert!(text.contains("Est. V(origin)"));

    let summary = read(&out_dir.join("summary.csv"));
    let algos: Vec<&str> = summary
        .lines()
        .skip(1)
        .map(|line| line.split(',').next().unwrap())
        .collect();
    assert_eq!(algos, ["rtdp-standard", "rtdp-eps", "vi-ucb", "rtdp-ucb"]);
}

#[test]
fn export_dot_scales_widths_from_run_output() {
    let dir = TempDir::new().unwrap();
    let graph = write_graph(&dir, THREE_NODE);
    let out_dir = dir.path().join("results");
    let out = sspbandit(&[
        "run",
        "--graph",
        graph.to_str().unwrap(),
        "--algo",
        "rtdp-standard",
        "--runs",
        "2",
        "--episodes",
        "25",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());

    let dot_path = dir.path().join("network.dot");
    let out = sspbandit(&[
        "export-dot",
        "--graph",
        graph.to_str().unwrap(),
        "--edges",
        out_dir.join("edges.csv").to_str().unwrap(),
        "--out",
        dot_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let dot = read(&dot_path);
    assert!(dot.starts_with("digraph network {"));
    assert!(dot.contains("0 [shape=doublecircle, label=\"0 (origin)\"]"));
    assert!(dot.contains("penwidth=8.000"), "the most-sampled edge gets the maximum width");

    // An edges file from a different graph must be rejected.
    let mismatched = "run,edge_index,source,target,samples\n0,0,1,0,3\n";
    let bad_edges = dir.path().join("bad_edges.csv");
    fs::write(&bad_edges, mismatched).unwrap();
    let out = sspbandit(&[
        "export-dot",
        "--graph",
        graph.to_str().unwrap(),
        "--edges",
        bad_edges.to_str().unwrap(),
        "--out",
        dot_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[cfg(unix)]
#[test]
fn closed_stdout_pipe_does_not_panic() {
    use std::process::Stdio;

    let dir = TempDir::new().unwrap();
    let graph_path = dir.path().join("big.json");
    let out = sspbandit(&[
        "generate",
        "--nodes",
        "6000",
        "--connectivity",
        "1.5",
        "--seed",
        "1",
        "--out",
        graph_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());

    // The value table exceeds the pipe buffer; dropping the read end
    // forces EPIPE mid-stream. The process must die quietly, as under
    // `oracle --full | head`.
    let mut child = Command::new(env!("CARGO_BIN_EXE_sspbandit"))
        .args(["oracle", "--graph", graph_path.to_str().unwrap(), "--full"])
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    drop(child.stdout.take());
    let output = child.wait_with_output().unwrap();
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(!stderr.contains("panicked"), "stderr: {stderr}");
}

#[test]
fn generated_network_round_trips_through_run() {
    let dir = TempDir::new().unwrap();
    let graph_path = dir.path().join("net.json");
    let out = sspbandit(&[
        "generate",
        "--nodes",
        "8",
        "--connectivity",
        "2.5",
        "--seed",
        "42",
        "--out",
        graph_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let out_dir = dir.path().join("results");
    let out = sspbandit(&[
        "run",
        "--graph",
        graph_path.to_str().unwrap(),
        "--algo",
        "vi-ucb",
        "--runs",
        "2",
        "--episodes",
        "30",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let episodes = read(&out_dir.join("episodes.csv"));
    assert_eq!(episodes.lines().count(), 1 + 2 * 30);
}
