use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dpplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpplab")).args(args).output().unwrap()
}

fn run(dir: &Path, name: &str, text: &str, extra: &[&str]) -> Output {
    let path = dir.join(format!("{name}.conf"));
    std::fs::write(&path, text).unwrap();
    let out = dir.join(name);
    let mut args = vec!["run", path.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    dpplab(&args)
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const SOLVE: &str = "run = solve\ngame.kind = random-walk\ngame.epsilon = 0.2\ndomain.spacing = 0.05\nboundary = y1\nsolve.tol = 1e-9\n";

const SIMULATE: &str = "run = simulate\nseed = 4\ngame.kind = tug-of-war\ngame.epsilon = 0.2\nboundary = indicator-halfspace\n\
sim.start = 0.1, 0.2\nsim.player1 = pull-toward:2,0\nsim.player2 = pull-away:2,0\nsim.episodes = 400\nsim.log_episode = 3\n";

const CONTROL: &str = "run = certify\nseed = 1\ncmp.c = 1\ncertify.samples = 200\ncertify.inequalities = I\n";

#[test]
fn minimal_solve_writes_field_and_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "solve", SOLVE, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("solve/field.csv")).unwrap();
    assert!(csv.starts_with("x1,x2,value\n"));
    let d = json(dir.path().join("solve/diagnostics.json"));
    let diag = &d["result"]["diagnostics"];
    assert!(diag["converged"].as_bool().unwrap());
    assert!(diag["final_residual"].as_f64().unwrap() <= 1e-9);
    assert_eq!(d["config"]["game.epsilon"], "0.2");
    assert_eq!(d["config"]["solve.max_iter"], "100000");
}

#[test]
fn negative_control_reports_negative_margins() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "control", CONTROL, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(dir.path().join("control/certificate.json"));
    assert!(r["result"]["summary"][0]["negative_count"].as_u64().unwrap() > 0);
    assert_eq!(r["seed"], 1);
}

#[test]
fn missing_epsilon_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "bad", &SOLVE.replace("game.epsilon = 0.2\n", ""), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("game.epsilon"));
}

#[test]
fn malformed_and_unknown_input_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("noeq", "run solve\n".to_string()),
        ("typo", format!("{SOLVE}game.epsiln = 0.1\n")),
        ("expr", SOLVE.replace("boundary = y1", "boundary = y1 +")),
        ("dim", SOLVE.replace("boundary = y1", "boundary = y3")),
        ("kind", SOLVE.replace("random-walk", "chess")),
        ("noseed", SIMULATE.replace("seed = 4\n", "")),
    ];
    for (name, text) in cases {
        let o = run(dir.path(), name, &text, &[]);
        assert_eq!(o.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(dpplab(&["run", "/nonexistent/file.conf"]).status.code(), Some(2));
    assert_eq!(dpplab(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn runtime_failures_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    // lattice play must start on a lattice point
    let text = SIMULATE.replace("sim.start = 0.1, 0.2", "sim.start = 0.01234, 0.2") + "sim.arena = lattice\n";
    let o = run(dir.path(), "offlattice", &text, &[]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text, files) in [
        ("sim", SIMULATE, vec!["outcome.json", "episodes.csv"]),
        ("cert", CONTROL, vec!["certificate.json"]),
    ] {
        let a = run(dir.path(), &format!("{name}1"), text, &["--threads", "1"]);
        let b = run(dir.path(), &format!("{name}3"), text, &["--threads", "3"]);
        assert!(a.status.success() && b.status.success());
        for f in files {
            let x = std::fs::read_to_string(dir.path().join(format!("{name}1/{f}"))).unwrap();
            let y = std::fs::read_to_string(dir.path().join(format!("{name}3/{f}"))).unwrap();
            // the output directory is part of the recorded config
            assert_eq!(x.replace(&format!("{name}1"), "D"), y.replace(&format!("{name}3"), "D"), "{name}/{f}");
        }
    }
}

#[test]
fn seed_override_is_recorded_and_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(dir.path(), "s4", SIMULATE, &[]).status.success());
    assert!(run(dir.path(), "s9", SIMULATE, &["--seed", "9"]).status.success());
    let a = json(dir.path().join("s4/outcome.json"));
    let b = json(dir.path().join("s9/outcome.json"));
    assert_eq!(b["seed"], 9);
    assert_eq!(b["config"]["seed"], "9");
    assert_ne!(a["result"]["estimate"], b["result"]["estimate"]);
}

#[test]
fn holder_run_writes_report_and_quotients() {
    let dir = tempfile::tempdir().unwrap();
    let text = "run = holder\nseed = 2\ngame.kind = space-dependent\ngame.p = 4\ngame.epsilon = 0.15\nboundary = abs(y1)\n\
holder.delta = 0.1\nholder.radius = 0.4\nholder.pairs = 2000\n";
    let o = run(dir.path(), "holder", text, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("holder/quotients.csv")).unwrap();
    assert!(csv.starts_with("dist,absdiff,quotient\n"));
    let r = json(dir.path().join("holder/holder.json"));
    assert_eq!(csv.lines().count() as u64, 1 + r["result"]["report"]["pair_count"].as_u64().unwrap());
    assert!(r["result"]["report"]["k"].as_f64().unwrap() > 0.0);
    // alpha derived from p = 4 in two dimensions
    assert_eq!(r["config"]["game.alpha"], "0.3333333333333333");
}
