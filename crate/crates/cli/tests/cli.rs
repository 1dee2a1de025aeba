use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn seqproc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seqproc")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_target_round_trips_through_bound() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("q3.toml");
    let o = seqproc(&["gen-target", "qubit3", "--out", path(&file)]);
    assert!(o.status.success());
    let printed = stdout(&o);
    assert_eq!(printed.lines().count(), 4);
    assert_eq!(printed.lines().next().unwrap().split_whitespace().count(), 16);

    let o = seqproc(&["bound", path(&file)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("lower bound 8 errors => max classical correlation 1/4"));
}

#[test]
fn bound_of_qutrit4() {
    let o = seqproc(&["bound", "qutrit4"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("lower bound 16 errors => max classical correlation 3/8"));
}

#[test]
fn oracle_writes_a_witness_that_reaches_the_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("witness.toml");
    let o = seqproc(&["oracle", "qubit3", "--out", path(&file)]);
    assert!(o.status.success());
    let witness = fs::read_to_string(&file).unwrap();
    assert!(witness.contains("seqproc-strategy/1"));
    let o = seqproc(&["oracle", "qubit3"]);
    assert!(stdout(&o).contains("1/4"));
}

#[test]
fn same_seed_gives_identical_output() {
    let run = |workers: &str| {
        stdout(&seqproc(&[
            "anneal",
            "--target",
            "qubit3",
            "--seed",
            "7",
            "--restarts",
            "4",
            "--sweeps",
            "300",
            "--workers",
            workers,
        ]))
    };
    let a = run("1");
    assert!(a.contains("\"errors\": 8"), "{a}");
    assert_eq!(a, run("3"));

    let sim = || stdout(&seqproc(&["simulate", "qubit3", "--shots", "5000", "--seed", "3"]));
    assert_eq!(sim(), sim());
}

#[test]
fn config_keys_override_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "shots = 3000\nsubset_size = 500\n").unwrap();
    let o = seqproc(&["simulate", "qubit3", "--shots", "85000", "--config", path(&cfg)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let subsets = text.lines().skip(1).take_while(|l| !l.starts_with('#')).count();
    assert_eq!(subsets, 3000 / 500);
}

#[test]
fn lowrank_on_a_matrix_file() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.txt");
    fs::write(&m, "mat 3 3\n1 1 1\n1 1 -1\n-1 -1 -1\n").unwrap();
    let o = seqproc(&["lowrank", path(&m), "--k", "2"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("# distance 1"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // Parse error.
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "not a matrix\n").unwrap();
    assert_eq!(seqproc(&["lowrank", path(&bad), "--k", "2"]).status.code(), Some(2));
    // Contract violation: k = 0.
    let m = dir.path().join("m.txt");
    fs::write(&m, "mat 1 1\n1\n").unwrap();
    assert_eq!(seqproc(&["lowrank", path(&m), "--k", "0"]).status.code(), Some(2));
    // Too large for the exact method.
    let big = dir.path().join("big.txt");
    let row = ["1"; 4].join(" ");
    fs::write(&big, format!("mat 17 4\n{}", format!("{row}\n").repeat(17))).unwrap();
    assert_eq!(seqproc(&["lowrank", path(&big), "--k", "2"]).status.code(), Some(3));
    // Missing file.
    let missing = dir.path().join("missing.txt");
    assert_eq!(seqproc(&["lowrank", path(&missing), "--k", "2"]).status.code(), Some(4));
}
