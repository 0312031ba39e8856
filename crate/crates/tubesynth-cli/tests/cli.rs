//! End-to-end tests of the command-line interface: exit codes, output
//! files, environment handling, and determinism, all on a small one-line
//! patrol problem that runs in well under a second.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_tubesynth")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .env_remove("TUBESYNTH_OUT")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// A one-dimensional integrator patrolling between two intervals.
fn write_patrol_config(dir: &Path) -> PathBuf {
    fs::write(
        dir.join("automaton.toml"),
        r#"
states = ["q0", "q1"]
initial = ["q0"]
accepting = ["q0"]
propositions = ["pa", "pb", "pfree"]

[[transitions]]
from = "q0"
label = "pa"
to = "q1"

[[transitions]]
from = "q1"
label = "pb"
to = "q0"

[[transitions]]
from = "q0"
label = "pfree"
to = "q0"

[[transitions]]
from = "q1"
label = "pfree"
to = "q1"
"#,
    )
    .unwrap();
    fs::write(
        dir.join("workspace.toml"),
        r#"
dimension = 1
default_proposition = "pfree"

[bounds]
lower = [-1.0]
upper = [5.0]

[[regions]]
proposition = "pa"
lower = [0.0]
upper = [1.0]

[[regions]]
proposition = "pb"
lower = [3.0]
upper = [4.0]
"#,
    )
    .unwrap();
    let config = dir.join("experiment.toml");
    fs::write(
        &config,
        r#"
[files]
automaton = "automaton.toml"
workspace = "workspace.toml"

[fragment]
initial_proposition = "pa"

[plant]
type = "generic"
initial_state = [0.5]

[plant.params]
outputs = 1
stages = 1
drift = [["0"]]
gain = [["1"]]

[plant.disturbance]
type = "uniform"
amplitude = 0.05

[controller]
kappa = [2.0]

[tubes]
t_c = 1.0

[sim]
horizon = 5.0
dt = 0.001
seed = 3

[monitor]
required_visits = 2

[output]
dir = "out"
"#,
    )
    .unwrap();
    config
}

#[test]
fn decompose_prints_the_run_fragment() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_patrol_config(dir.path());
    let out = run(&["decompose", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("fragment: q0 q1 q0 q1 q0 q1"), "{text}");
    assert!(text.contains("initial proposition: pa"), "{text}");
    assert!(text.contains("triplets: 4 (2 distinct), cycle start 2"), "{text}");
    assert!(text.contains("[0] q0 -pa-> q1 -pb-> q0"), "{text}");

    let again = run(&["decompose", "--config", config.to_str().unwrap()]);
    assert_eq!(stdout(&again), text, "decompose output must be deterministic");
}

#[test]
fn synth_writes_one_tube_per_distinct_triplet() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_patrol_config(dir.path());
    let out_dir = dir.path().join("tubes");
    let out = run(&[
        "synth",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    for i in 0..2 {
        let csv = fs::read_to_string(out_dir.join(format!("tube_{i}.csv"))).unwrap();
        assert!(csv.starts_with("t,lower0,upper0\n"), "{csv}");
        let report = fs::read_to_string(out_dir.join(format!("tube_{i}_report.toml"))).unwrap();
        assert!(report.contains("verified = true"), "{report}");
        let parsed: toml::Table = report.parse().unwrap();
        assert_eq!(parsed["triplet_index"].as_integer().unwrap(), i);
    }
    assert!(
        !out_dir.join("tube_2.csv").exists(),
        "only distinct triplets get tubes"
    );
}

#[test]
fn simulate_then_verify_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_patrol_config(dir.path());
    let out = run(&["simulate", "--config", config.to_str().unwrap(), "--quiet"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    // default output directory: `out` next to the config
    let out_dir = dir.path().join("out");
    for name in ["trace.csv", "events.csv", "plot_y1.csv", "monitor.toml"] {
        assert!(out_dir.join(name).exists(), "missing {name}");
    }
    let monitor = fs::read_to_string(out_dir.join("monitor.toml")).unwrap();
    assert!(monitor.contains("satisfied = true"), "{monitor}");

    let verify = run(&["verify", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&verify), 0, "stderr: {}", stderr(&verify));
    assert!(stdout(&verify).contains("satisfied = true"));

    let again = run(&["verify", "--config", config.to_str().unwrap()]);
    assert_eq!(stdout(&again), stdout(&verify), "verify must be idempotent");
}

#[test]
fn identical_seeds_reproduce_the_trace_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_patrol_config(dir.path());
    let mut traces = Vec::new();
    for name in ["a", "b"] {
        let out_dir = dir.path().join(name);
        let out = run(&[
            "simulate",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--seed",
            "41",
            "--quiet",
        ]);
        assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
        traces.push(fs::read(out_dir.join("trace.csv")).unwrap());
    }
    assert_eq!(traces[0], traces[1]);

    let out_dir = dir.path().join("c");
    let out = run(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--seed",
        "42",
        "--quiet",
    ]);
    assert_eq!(code(&out), 0);
    let other = fs::read(out_dir.join("trace.csv")).unwrap();
    assert_ne!(traces[0], other, "different seeds must perturb the trace");
}

#[test]
fn output_directory_precedence_is_flag_env_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_patrol_config(dir.path());
    let env_dir = dir.path().join("from_env");
    let flag_dir = dir.path().join("from_flag");

    let out = Command::new(bin())
        .args(["synth", "--config", config.to_str().unwrap(), "--quiet"])
        .env("TUBESYNTH_OUT", &env_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(env_dir.join("tube_0.csv").exists());

    let out = Command::new(bin())
        .args([
            "synth",
            "--config",
            config.to_str().unwrap(),
            "--out",
            flag_dir.to_str().unwrap(),
            "--quiet",
        ])
        .env("TUBESYNTH_OUT", dir.path().join("ignored"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(flag_dir.join("tube_0.csv").exists());
    assert!(!dir.path().join("ignored").exists());
}

#[test]
fn unmet_visit_requirement_exits_4_but_still_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_patrol_config(dir.path());
    let text = fs::read_to_string(&config).unwrap();
    fs::write(&config, text.replace("required_visits = 2", "required_visits = 50")).unwrap();
    let out = run(&["simulate", "--config", config.to_str().unwrap(), "--quiet"]);
    assert_eq!(code(&out), 4, "stderr: {}", stderr(&out));
    let monitor = fs::read_to_string(dir.path().join("out").join("monitor.toml")).unwrap();
    assert!(monitor.contains("satisfied = false"), "{monitor}");
}

#[test]
fn configuration_mistakes_exit_1() {
    let out = run(&["decompose", "--config", "/nonexistent/experiment.toml"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("cannot read"));

    let dir = tempfile::tempdir().unwrap();
    let config = write_patrol_config(dir.path());
    let out = run(&["decompose", "--config", config.to_str().unwrap(), "--bogus"]);
    assert_eq!(code(&out), 1);

    let out = run(&["--help"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn missing_fragment_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_patrol_config(dir.path());
    // remove the way back: q1 never returns to q0, so no accepting cycle
    let automaton = dir.path().join("automaton.toml");
    let text = fs::read_to_string(&automaton).unwrap();
    let cut = text.replace(
        r#"[[transitions]]
from = "q1"
label = "pb"
to = "q0"
"#,
        "",
    );
    assert_ne!(cut, text, "transition block must be present to remove");
    fs::write(&automaton, cut).unwrap();
    let out = run(&["decompose", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("no accepting run fragment"));
}

#[test]
fn verify_rejects_a_trace_from_another_workspace() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_patrol_config(dir.path());
    let out_dir = dir.path().join("out");
    let out = run(&["simulate", "--config", config.to_str().unwrap(), "--quiet"]);
    assert_eq!(code(&out), 0);

    // same trace, but a config whose workspace is two-dimensional
    let ws = dir.path().join("workspace.toml");
    let text = fs::read_to_string(&ws).unwrap();
    fs::write(
        &ws,
        text.replace("dimension = 1", "dimension = 2")
            .replace("lower = [-1.0]", "lower = [-1.0, -1.0]")
            .replace("upper = [5.0]", "upper = [5.0, 5.0]")
            .replace("lower = [0.0]", "lower = [0.0, 0.0]")
            .replace("upper = [1.0]", "upper = [1.0, 1.0]")
            .replace("lower = [3.0]", "lower = [3.0, 3.0]")
            .replace("upper = [4.0]", "upper = [4.0, 4.0]"),
    )
    .unwrap();
    let exp = fs::read_to_string(&config).unwrap();
    fs::write(
        &config,
        exp.replace("initial_state = [0.5]", "initial_state = [0.5, 0.5]")
            .replace("outputs = 1", "outputs = 2")
            .replace("drift = [[\"0\"]]", "drift = [[\"0\", \"0\"]]")
            .replace("gain = [[\"1\"]]", "gain = [[\"1\", \"1\"]]"),
    )
    .unwrap();
    let out = run(&[
        "verify",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1, "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("workspace has dimension"), "{}", stderr(&out));
}
