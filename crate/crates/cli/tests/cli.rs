//! End-to-end tests of the command surface: determinism, file formats,
//! exit codes, resume behavior.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nalbn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nalbn"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "command failed: stdout={} stderr={}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Strips the wall_time_ms column (index 10) from a results CSV so runs can
/// be compared; timing is the one measured, non-derived field.
fn without_wall_time(csv: &str) -> String {
    csv.lines()
        .map(|line| {
            let fields: Vec<&str> = line.split(',').collect();
            fields
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != 10)
                .map(|(_, f)| *f)
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn shd_of_a_network_with_itself_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = nalbn(dir.path(), &["shd", "discrete8", "discrete8"]);
    assert_success(&out);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "0");
}

#[test]
fn shd_between_structure_files() {
    let dir = tempfile::tempdir().unwrap();
    let chain = r#"{
      "nodes": [
        {"name": "X", "type": "gaussian"},
        {"name": "Y", "type": "gaussian"},
        {"name": "Z", "type": "gaussian"}
      ],
      "arcs": [["X", "Y"], ["Y", "Z"]]
    }"#;
    let empty = r#"{
      "nodes": [
        {"name": "X", "type": "gaussian"},
        {"name": "Y", "type": "gaussian"},
        {"name": "Z", "type": "gaussian"}
      ],
      "arcs": []
    }"#;
    fs::write(dir.path().join("chain.json"), chain).unwrap();
    fs::write(dir.path().join("empty.json"), empty).unwrap();
    let out = nalbn(dir.path(), &["shd", "chain.json", "empty.json"]);
    assert_success(&out);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "2");
}

#[test]
fn sample_zero_rows_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = nalbn(dir.path(), &["sample", "cg8", "-n", "0", "-o", "empty.csv"]);
    assert_success(&out);
    let text = fs::read_to_string(dir.path().join("empty.csv")).unwrap();
    assert_eq!(text, "A,B,C,D,X,Y,Z,W\n");
}

#[test]
fn learn_is_deterministic_for_a_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    assert_success(&nalbn(
        dir.path(),
        &["sample", "discrete8", "-n", "1000", "--seed", "3", "-o", "d.csv"],
    ));
    assert_success(&nalbn(
        dir.path(),
        &["inject", "d.csv", "--schema", "discrete8", "--beta", "0.1", "--seed", "4", "-o", "dm.csv"],
    ));
    for out_name in ["a.json", "b.json"] {
        assert_success(&nalbn(
            dir.path(),
            &[
                "learn", "dm.csv", "--schema", "discrete8", "--algorithm", "tabu",
                "--penalty", "alpha:0.25", "--seed", "7", "-o", out_name,
            ],
        ));
    }
    let a = fs::read_to_string(dir.path().join("a.json")).unwrap();
    let b = fs::read_to_string(dir.path().join("b.json")).unwrap();
    assert_eq!(a, b, "learned networks must be byte-identical");

    let meta_a: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a.json.meta.json")).unwrap())
            .unwrap();
    let meta_b: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("b.json.meta.json")).unwrap())
            .unwrap();
    for key in ["algorithm", "penalty", "seed", "score", "score_calls", "iterations", "converged"] {
        assert_eq!(meta_a[key], meta_b[key], "sidecar field {key} differs");
    }
}

#[test]
fn learn_order_exact_uses_the_ordering_file() {
    let dir = tempfile::tempdir().unwrap();
    assert_success(&nalbn(
        dir.path(),
        &["sample", "gaussian8", "-n", "2000", "--seed", "5", "-o", "g.csv"],
    ));
    fs::write(
        dir.path().join("order.txt"),
        "X1\nX2\nX3\nX4\nX5\nX6\nX7\nX8\n",
    )
    .unwrap();
    assert_success(&nalbn(
        dir.path(),
        &[
            "learn", "g.csv", "--schema", "gaussian8", "--algorithm", "order-exact",
            "--order-file", "order.txt", "--penalty", "bic", "-o", "g.json",
        ],
    ));
    let out = nalbn(dir.path(), &["shd", "g.json", "gaussian8"]);
    assert_success(&out);
    // order-exact with the true ordering at n = 2000 recovers this network
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "0");

    // missing --order-file is a usage error
    let out = nalbn(
        dir.path(),
        &["learn", "g.csv", "--schema", "gaussian8", "--algorithm", "order-exact", "-o", "x.json"],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn fit_writes_parameters_for_a_given_structure() {
    let dir = tempfile::tempdir().unwrap();
    assert_success(&nalbn(
        dir.path(),
        &["sample", "cg8", "-n", "3000", "--seed", "11", "-o", "c.csv"],
    ));
    // strip the parameters by using the structure loader path
    let bn_text = fs::read_to_string("/root/crate/networks/cg8.json").unwrap();
    fs::write(dir.path().join("structure.json"), bn_text).unwrap();
    assert_success(&nalbn(
        dir.path(),
        &["fit", "structure.json", "c.csv", "-o", "fitted.json"],
    ));
    let fitted = fs::read_to_string(dir.path().join("fitted.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&fitted).unwrap();
    assert!(parsed["parameters"]["Z"]["2"]["variance"].as_f64().unwrap() > 0.0);
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    // usage: unknown subcommand
    assert_eq!(nalbn(dir.path(), &["frobnicate"]).status.code(), Some(1));
    // usage: bad penalty spec
    assert_success(&nalbn(
        dir.path(),
        &["sample", "discrete8", "-n", "10", "-o", "t.csv"],
    ));
    let out = nalbn(
        dir.path(),
        &[
            "learn", "t.csv", "--schema", "discrete8", "--algorithm", "tabu",
            "--penalty", "alpha:nope", "-o", "t.json",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    // data: beta out of range
    let out = nalbn(
        dir.path(),
        &["inject", "t.csv", "--schema", "discrete8", "--beta", "1.5", "-o", "u.csv"],
    );
    assert_eq!(out.status.code(), Some(2));
    // data: missing file
    let out = nalbn(
        dir.path(),
        &["learn", "absent.csv", "--schema", "discrete8", "--algorithm", "tabu", "-o", "v.json"],
    );
    assert_eq!(out.status.code(), Some(2));
    // --help exits 0
    assert_eq!(nalbn(dir.path(), &["--help"]).status.code(), Some(0));
}

fn small_experiment_config() -> &'static str {
    r#"{
      "network": "discrete8",
      "replicates": 1,
      "k_grid": [10],
      "beta_grid": [0.1],
      "penalties": ["alpha:0.25"],
      "algorithms": ["tabu"],
      "base_seed": 42
    }"#
}

#[test]
fn experiment_single_cell_emits_one_row() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("exp.json"), small_experiment_config()).unwrap();
    assert_success(&nalbn(dir.path(), &["experiment", "exp.json", "-o", "res.csv"]));
    let text = fs::read_to_string(dir.path().join("res.csv")).unwrap();
    let lines: Vec<&str> = text.trim_end().lines().collect();
    assert_eq!(lines.len(), 2, "header plus exactly one result row:\n{text}");
    assert!(lines[0].starts_with("network,algorithm,penalty,k,n,beta"));
    assert!(lines[1].starts_with("discrete8,tabu,alpha:0.25,10,320,0.1,0,"));
}

#[test]
fn experiment_flags_override_config_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
      "network": "discrete8",
      "replicates": 5,
      "k_grid": [10],
      "beta_grid": [0.1],
      "penalties": ["bic"],
      "algorithms": ["tabu"],
      "base_seed": 42
    }"#;
    fs::write(dir.path().join("exp.json"), cfg).unwrap();
    assert_success(&nalbn(
        dir.path(),
        &["experiment", "exp.json", "-o", "res.csv", "--replicates", "1", "--penalties", "aic"],
    ));
    let text = fs::read_to_string(dir.path().join("res.csv")).unwrap();
    let lines: Vec<&str> = text.trim_end().lines().collect();
    assert_eq!(lines.len(), 2, "one replicate only:\n{text}");
    assert!(lines[1].contains(",aic,"));
}

#[test]
fn experiment_reruns_are_identical_up_to_timing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
      "network": "cg8",
      "replicates": 2,
      "k_grid": [10],
      "beta_grid": [0.0, 0.2],
      "penalties": ["alpha:0.25", "bic"],
      "algorithms": ["order-exact", "tabu"],
      "base_seed": 7
    }"#;
    fs::write(dir.path().join("exp.json"), cfg).unwrap();
    assert_success(&nalbn(dir.path(), &["experiment", "exp.json", "-o", "r1.csv"]));
    assert_success(&nalbn(dir.path(), &["experiment", "exp.json", "-o", "r2.csv"]));
    let r1 = fs::read_to_string(dir.path().join("r1.csv")).unwrap();
    let r2 = fs::read_to_string(dir.path().join("r2.csv")).unwrap();
    assert_eq!(without_wall_time(&r1), without_wall_time(&r2));

    // a completed file is resumable: nothing is appended
    let out = nalbn(dir.path(), &["experiment", "exp.json", "-o", "r1.csv"]);
    assert_success(&out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("appended 0 rows"));
    let r1_again = fs::read_to_string(dir.path().join("r1.csv")).unwrap();
    assert_eq!(r1, r1_again);
}

#[test]
fn experiment_resumes_from_a_partial_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
      "network": "discrete8",
      "replicates": 2,
      "k_grid": [10],
      "beta_grid": [0.1],
      "penalties": ["bic"],
      "algorithms": ["tabu"],
      "base_seed": 13
    }"#;
    fs::write(dir.path().join("exp.json"), cfg).unwrap();
    assert_success(&nalbn(dir.path(), &["experiment", "exp.json", "-o", "full.csv"]));
    let full = fs::read_to_string(dir.path().join("full.csv")).unwrap();
    let lines: Vec<&str> = full.trim_end().lines().collect();
    assert_eq!(lines.len(), 3);

    // keep the header and the first row, then resume
    fs::write(dir.path().join("part.csv"), format!("{}\n{}\n", lines[0], lines[1])).unwrap();
    let out = nalbn(dir.path(), &["experiment", "exp.json", "-o", "part.csv"]);
    assert_success(&out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("appended 1 rows"));
    let resumed = fs::read_to_string(dir.path().join("part.csv")).unwrap();
    assert_eq!(without_wall_time(&resumed), without_wall_time(&full));
}

#[test]
fn summarize_aggregates_and_ratios() {
    let dir = tempfile::tempdir().unwrap();
    let results = "\
network,algorithm,penalty,k,n,beta,replicate,shd,scaled_shd,score_calls,wall_time_ms,learned_arcs,em_iterations
netx,tabu,alpha:0.25,10,320,0.1,0,0,0.000000,100,5,9,
netx,tabu,alpha:0.25,10,320,0.1,1,1,1.000000,200,7,11,
netx,sem,bic,10,320,0.1,0,4,0.500000,400,50,10,3
netx,sem,bic,10,320,0.1,1,5,0.500000,500,60,10,4
nety,tabu,bic,50,1600,0.2,0,2,0.250000,300,9,8,
";
    fs::write(dir.path().join("res.csv"), results).unwrap();
    let out = nalbn(dir.path(), &["summarize", "res.csv"]);
    assert_success(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = text.trim_end().lines().collect();
    assert_eq!(lines.len(), 4); // header + 3 groups

    // single-row group: aggregates equal the row
    let single = lines.iter().find(|l| l.starts_with("nety,")).unwrap();
    let fields: Vec<&str> = single.split(',').collect();
    assert_eq!(fields[7], "2.000000"); // mean shd
    assert_eq!(fields[8], "0.250000"); // mean scaled shd
    assert_eq!(fields[9], "0.250000"); // median
    assert_eq!(fields[13], ""); // no sem counterpart -> empty ratio

    // mean of {0, 1} is 0.5, and equal means give a 1.0 ratio line
    let tabu = lines.iter().find(|l| l.starts_with("netx,tabu")).unwrap();
    let fields: Vec<&str> = tabu.split(',').collect();
    assert_eq!(fields[7], "0.500000"); // mean shd of {0, 1}
    assert_eq!(fields[8], "0.500000"); // mean scaled shd
    assert_eq!(fields[13], "1.000000"); // equals the sem mean -> ratio 1.0
}
