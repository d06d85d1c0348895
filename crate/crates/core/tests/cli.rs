//! End-to-end runs of the `dftmc` binary.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use dftmc::dft::fixtures;
use dftmc::io::galileo;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dftmc"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn run_stdin(args: &[&str], input: &[u8]) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input).unwrap();
    child.wait_with_output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("../../scenarios/{name}.toml"))
}

fn write_tree(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

/// synth | rewrite | check, all through stdout/stdin.
fn pipeline(name: &str) -> Vec<u8> {
    let synth = run(&["synth", scenario(name).to_str().unwrap()]);
    assert_eq!(code(&synth), 0, "{}", String::from_utf8_lossy(&synth.stderr));
    let rw = run_stdin(&["rewrite", "-"], &synth.stdout);
    assert_eq!(code(&rw), 0, "{}", String::from_utf8_lossy(&rw.stderr));
    let check = run_stdin(
        &["check", "-", "-m", "unreliability,mttf,ffa,mtdf", "-t", "10000"],
        &rw.stdout,
    );
    assert_eq!(code(&check), 0, "{}", String::from_utf8_lossy(&check.stderr));
    check.stdout
}

#[test]
fn pipeline_is_byte_identical_across_runs() {
    let a = pipeline("sc2-arch-b");
    let b = pipeline("sc2-arch-b");
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "measure,time,value,complement,lower,upper");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("unreliability,10000.0,"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let and = write_tree(dir.path(), "and.dft", &galileo::serialize(&fixtures::f_and()));
    let pand = write_tree(dir.path(), "pand.dft", &galileo::serialize(&fixtures::f_pand()));
    let broken = write_tree(dir.path(), "broken.dft", "toplevel \"T\";\n\"T\" and \"X\";\n");

    let ok = run(&["check", &and, "-m", "mttf"]);
    assert_eq!(code(&ok), 0);
    let v: f64 = String::from_utf8(ok.stdout).unwrap().lines().nth(1).unwrap().split(',').nth(2)
        .unwrap().parse().unwrap();
    assert!((v - 7.0 / 6.0).abs() < 1e-9);

    assert_eq!(code(&run(&["check", &broken, "-m", "mttf"])), 2);
    assert_eq!(code(&run(&["check", &and, "-m", "nonsense"])), 2);
    assert_eq!(code(&run(&["check", &and, "-m", "mttf", "--param", "nope=1"])), 2);
    assert_eq!(code(&run(&["check", &and, "-m", "unreliability", "-t", "-1"])), 2);
    assert_eq!(code(&run(&["check", &pand, "-m", "mttf"])), 3);
    assert_eq!(code(&run(&["check", &and, "-m", "mdr", "-t", "1"])), 3);
    assert_eq!(code(&run(&["approx", &pand, "-m", "mttf"])), 3);
    assert_eq!(code(&run(&["check", "/nonexistent/tree.dft", "-m", "mttf"])), 1);
    assert_eq!(code(&run(&["check", &and, "-m", "mttf", "--max-states", "2"])), 1);
}

#[test]
fn approx_writes_bounds_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let sc = run(&["synth", scenario("sc2-arch-b").to_str().unwrap()]);
    let tree = write_tree(dir.path(), "sc.dft", std::str::from_utf8(&sc.stdout).unwrap());
    let trace = dir.path().join("trace.csv");
    let o = run(&[
        "approx", &tree, "-m", "unreliability", "--initial-budget", "50", "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let row = String::from_utf8(o.stdout).unwrap();
    let cols: Vec<&str> = row.lines().nth(1).unwrap().split(',').collect();
    let (lo, hi): (f64, f64) = (cols[4].parse().unwrap(), cols[5].parse().unwrap());
    assert!(lo <= hi && hi - lo <= 0.01 * lo);
    let t = fs::read_to_string(trace).unwrap();
    assert!(t.starts_with("measure,iteration,elapsed_s,states_explored,lower,upper\n"));

    let capped = run(&[
        "approx", &tree, "-m", "unreliability", "--initial-budget", "1", "--max-states", "5",
        "--rel-err", "1e-9",
    ]);
    assert_eq!(code(&capped), 4);
    assert!(String::from_utf8(capped.stdout).unwrap().lines().count() == 2);
}

#[test]
fn export_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let and = write_tree(dir.path(), "and.dft", &galileo::serialize(&fixtures::f_and()));
    let list = run(&["export", &and, "--ctmc", "list"]);
    assert_eq!(code(&list), 0);
    let dot = run(&["export", &and, "--ctmc", "dot"]);
    assert!(String::from_utf8(dot.stdout).unwrap().starts_with("digraph"));

    let p = write_tree(
        dir.path(),
        "param.dft",
        "param \"l\" = 1.0;\ntoplevel \"A\";\n\"A\" lambda=l;\n",
    );
    let s = run(&["sweep", &p, "-m", "unreliability", "-t", "1", "--param", "l=1,2"]);
    assert_eq!(code(&s), 0, "{}", String::from_utf8_lossy(&s.stderr));
    let out = String::from_utf8(s.stdout).unwrap();
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("l,measure"));
    let v: f64 = lines[2].split(',').nth(3).unwrap().parse().unwrap();
    assert!((v - (1.0 - (-2f64).exp())).abs() < 1e-9);
}
