//! Command-line front end: one experiment per invocation, driven by a
//! single config file.
//!
//! Exit codes: 0 success; 1 configuration or schema errors; 2 automaton
//! decomposition failure; 3 tube synthesis or verification failure;
//! 4 runtime violation or unmet monitor requirements.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tubesynth::automaton::AutomatonError;
use tubesynth::config::{ConfigError, Experiment};
use tubesynth::monitor;
use tubesynth::sim::{simulate, write_events_csv, Trace};
use tubesynth::tubes::{synthesize_stt, verify_stt};

#[derive(Parser)]
#[command(
    name = "tubesynth",
    version,
    about = "Synthesize and run tube-based hybrid controllers for automaton tasks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the accepting run fragment, its triplets, and the switcher
    Decompose(Common),
    /// Synthesize a preview tube per distinct triplet and verify each one
    Synth(Common),
    /// Run the closed loop; write trace, events, plot data, and the monitor report
    Simulate(Common),
    /// Re-run the monitor on a stored trace
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment configuration file
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides TUBESYNTH_OUT and the config)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Disturbance seed (overrides the config)
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress progress output
    #[arg(long)]
    quiet: bool,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Failure {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Failure {
        let code = match &e {
            ConfigError::Automaton(AutomatonError::NoFragment(_)) => 2,
            _ => 1,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure::new(1, e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // keep --help/--version on exit 0; real usage errors are config
            // errors (exit 1), not the decompose failure code
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Decompose(c) => cmd_decompose(&c),
        Command::Synth(c) => cmd_synth(&c),
        Command::Simulate(c) => cmd_simulate(&c),
        Command::Verify(c) => cmd_verify(&c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load(common: &Common) -> Result<Experiment, Failure> {
    Ok(Experiment::load(&common.config)?)
}

fn out_dir(common: &Common, exp: &Experiment) -> PathBuf {
    if let Some(out) = &common.out {
        return out.clone();
    }
    if let Ok(env) = std::env::var("TUBESYNTH_OUT") {
        if !env.is_empty() {
            return PathBuf::from(env);
        }
    }
    exp.base_dir.join(&exp.config.output.dir)
}

fn write_atomic(path: &Path, text: &str) -> Result<(), Failure> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn cmd_decompose(common: &Common) -> Result<(), Failure> {
    let exp = load(common)?;
    println!("fragment: {}", exp.fragment);
    println!(
        "initial proposition: {}",
        exp.fragment.initial_proposition
    );
    let distinct = distinct_indices(&exp);
    println!(
        "triplets: {} ({} distinct), cycle start {}",
        exp.switcher.sequence.len(),
        distinct.len(),
        exp.switcher.cycle_start
    );
    for (i, t) in exp.switcher.sequence.iter().enumerate() {
        println!(
            "  [{i}] {} -{}-> {} -{}-> {}  self={{{}}}",
            t.q,
            t.label_in,
            t.q_mid,
            t.label_out,
            t.q_next,
            t.label_self.join(",")
        );
    }
    println!("switcher transitions:");
    for tr in &exp.switcher.transitions {
        println!("  {} -{}-> {}", tr.from, tr.label, tr.to);
    }
    Ok(())
}

/// Sequence indices of the first occurrence of each distinct triplet.
fn distinct_indices(exp: &Experiment) -> Vec<usize> {
    let seq = &exp.switcher.sequence;
    (0..seq.len())
        .filter(|&i| !seq[..i].contains(&seq[i]))
        .collect()
}

fn cmd_synth(common: &Common) -> Result<(), Failure> {
    let exp = load(common)?;
    let dir = out_dir(common, &exp);
    fs::create_dir_all(&dir)?;
    let mut all_ok = true;
    for i in distinct_indices(&exp) {
        let task = &exp.tasks[i];
        let params = &exp.synth[i];
        let entry = task.start[0].center();
        let t = &exp.switcher.sequence[i];
        let name = format!("{} {} {}", t.q, t.q_mid, t.q_next);
        let outcome = synthesize_stt(task, &entry, params).map_err(|e| {
            Failure::new(3, format!("triplet [{i}] ({name}): synthesis failed: {e}"))
        })?;
        let report = verify_stt(&outcome.tube, task, params.dt(), params.margin);
        let mut csv = Vec::new();
        outcome.tube.write_csv(&mut csv, params.dt())?;
        let csv = String::from_utf8(csv)
            .map_err(|e| Failure::new(1, format!("tube data was not valid text: {e}")))?;
        write_atomic(&dir.join(format!("tube_{i}.csv")), &csv)?;
        let mut text = String::new();
        text.push_str(&format!("triplet_index = {i}\n"));
        text.push_str(&format!("states = \"{name}\"\n"));
        text.push_str(&format!("label_in = \"{}\"\n", task.label_in));
        text.push_str(&format!("label_out = \"{}\"\n", task.label_out));
        text.push_str(&format!("horizon = {}\n", outcome.tube.horizon));
        text.push_str(&format!("adaptations = {}\n", outcome.adaptations.len()));
        text.push_str(&format!("verified = {}\n", report.ok()));
        text.push_str(&format!("starts_in_start = {}\n", report.starts_in_start));
        text.push_str(&format!("ends_in_target = {}\n", report.ends_in_target));
        text.push_str(&format!("clear_of_avoid = {}\n", report.clear_of_avoid));
        text.push_str(&format!(
            "properly_ordered = {}\n",
            report.properly_ordered
        ));
        text.push_str(&format!("min_clearance = {}\n", report.min_clearance));
        text.push_str(&format!("min_width = {}\n", report.min_width));
        text.push_str(&format!("samples = {}\n", report.samples));
        write_atomic(&dir.join(format!("tube_{i}_report.toml")), &text)?;
        if !common.quiet {
            println!(
                "triplet [{i}] ({name}): adaptations {}, verified {}",
                outcome.adaptations.len(),
                report.ok()
            );
        }
        if !report.ok() {
            all_ok = false;
            eprintln!("triplet [{i}] ({name}): verification failed");
        }
    }
    if all_ok {
        Ok(())
    } else {
        Err(Failure::new(3, "one or more tubes failed verification"))
    }
}

fn cmd_simulate(common: &Common) -> Result<(), Failure> {
    let exp = load(common)?;
    let dir = out_dir(common, &exp);
    fs::create_dir_all(&dir)?;
    let plant = exp.build_plant()?;
    let seed = common.seed.unwrap_or(exp.config.sim.seed);
    let mut disturbance = exp.build_disturbance(seed)?;
    let mut hybrid = exp.build_hybrid()?;
    let outcome = simulate(
        plant.as_ref(),
        disturbance.as_mut(),
        &mut hybrid,
        &exp.config.plant.initial_state,
        &exp.sim_params(),
    )
    .map_err(|e| Failure::new(1, e.to_string()))?;

    outcome.trace.write_csv(&dir.join("trace.csv"))?;
    write_events_csv(
        &outcome.events,
        outcome.trace.output_dim,
        &dir.join("events.csv"),
    )?;
    for d in 0..outcome.trace.output_dim {
        outcome
            .trace
            .write_dimension_csv(d, &dir.join(format!("plot_y{}.csv", d + 1)))?;
    }
    let report = monitor::evaluate(
        &outcome.trace,
        &exp.tasks,
        exp.switcher.cycle_start,
        &exp.workspace,
        exp.config.monitor.required_visits,
    );
    write_atomic(&dir.join("monitor.toml"), &report.to_toml())?;
    if !common.quiet {
        println!(
            "simulated {} steps, {} switches, seed {seed}",
            outcome.trace.len().saturating_sub(1),
            outcome.events.len()
        );
        print!("{}", report.to_toml());
    }
    if let Some(failure) = &outcome.failure {
        return Err(Failure::new(
            4,
            format!(
                "run aborted at t = {}: {} (partial trace written)",
                failure.time, failure.message
            ),
        ));
    }
    if !report.satisfied {
        return Err(Failure::new(4, "monitor requirements not met"));
    }
    Ok(())
}

fn cmd_verify(common: &Common) -> Result<(), Failure> {
    let exp = load(common)?;
    let dir = out_dir(common, &exp);
    let trace_path = dir.join("trace.csv");
    let trace = Trace::read_csv(&trace_path).map_err(|e| Failure::new(1, e.to_string()))?;
    if trace.output_dim != exp.workspace.dimension {
        return Err(Failure::new(
            1,
            format!(
                "trace has {} outputs but the workspace has dimension {}",
                trace.output_dim, exp.workspace.dimension
            ),
        ));
    }
    if trace
        .triplet_indices
        .iter()
        .any(|&i| i >= exp.tasks.len())
    {
        return Err(Failure::new(
            1,
            "trace references triplet indices outside this configuration".to_string(),
        ));
    }
    let report = monitor::evaluate(
        &trace,
        &exp.tasks,
        exp.switcher.cycle_start,
        &exp.workspace,
        exp.config.monitor.required_visits,
    );
    print!("{}", report.to_toml());
    if report.satisfied {
        Ok(())
    } else {
        Err(Failure::new(4, "monitor requirements not met"))
    }
}
