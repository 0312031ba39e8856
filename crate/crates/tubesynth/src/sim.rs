//! Fixed-step closed-loop simulation with full trace capture.
//!
//! Each step evaluates the hybrid controller at the current state, records
//! a trace row, then integrates the plant one step with the input and a
//! freshly sampled disturbance both held constant (zero-order hold).
//! Runtime violations — leaving a tube or funnel, a failed re-synthesis at
//! a switch, non-finite dynamics — end the run early but keep the partial
//! trace, so a failure can be inspected rather than just reported.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::disturbance::DisturbanceModel;
use crate::hybrid::{HybridController, SwitchEvent};
use crate::integrator::rk4_step;
use crate::plants::Dynamics;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("simulation shape error: {0}")]
    Shape(String),
    #[error("trace file error: {0}")]
    Csv(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy)]
pub struct SimParams {
    /// Total simulated time.
    pub horizon: f64,
    /// Integration and control step.
    pub dt: f64,
}

/// Everything recorded at each control instant.
///
/// Rows are column-aligned vectors; `outputs(row)` is the measured output,
/// the leading block of the state.
#[derive(Debug, Clone)]
pub struct Trace {
    pub state_dim: usize,
    pub output_dim: usize,
    pub stages: usize,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub inputs: Vec<Vec<f64>>,
    pub tube_lower: Vec<Vec<f64>>,
    pub tube_upper: Vec<Vec<f64>>,
    pub triplet_indices: Vec<usize>,
    /// Per row: the largest |normalized error| in each stage.
    pub stage_error_sup: Vec<Vec<f64>>,
}

impl Trace {
    fn new(state_dim: usize, output_dim: usize, stages: usize) -> Trace {
        Trace {
            state_dim,
            output_dim,
            stages,
            times: Vec::new(),
            states: Vec::new(),
            inputs: Vec::new(),
            tube_lower: Vec::new(),
            tube_upper: Vec::new(),
            triplet_indices: Vec::new(),
            stage_error_sup: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn outputs(&self, row: usize) -> &[f64] {
        &self.states[row][..self.output_dim]
    }

    /// Largest |normalized error| of one stage over the whole trace.
    pub fn sup_stage_error(&self, stage: usize) -> f64 {
        self.stage_error_sup
            .iter()
            .map(|row| row[stage])
            .fold(0.0, f64::max)
    }

    pub fn header(&self) -> String {
        let mut cols = vec!["t".to_string()];
        cols.extend((1..=self.state_dim).map(|i| format!("x{i}")));
        cols.extend((1..=self.output_dim).map(|i| format!("y{i}")));
        cols.extend((1..=self.output_dim).map(|i| format!("u{i}")));
        cols.extend((1..=self.output_dim).map(|i| format!("gammaL{i}")));
        cols.extend((1..=self.output_dim).map(|i| format!("gammaU{i}")));
        cols.push("triplet_index".to_string());
        cols.extend((1..=self.stages).map(|i| format!("max_abs_e_stage{i}")));
        cols.join(",")
    }

    /// Write the whole trace as CSV, atomically (temp file then rename).
    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut body = String::new();
        body.push_str(&self.header());
        body.push('\n');
        for row in 0..self.len() {
            let mut fields = vec![format!("{}", self.times[row])];
            fields.extend(self.states[row].iter().map(|v| format!("{v}")));
            fields.extend(self.outputs(row).iter().map(|v| format!("{v}")));
            fields.extend(self.inputs[row].iter().map(|v| format!("{v}")));
            fields.extend(self.tube_lower[row].iter().map(|v| format!("{v}")));
            fields.extend(self.tube_upper[row].iter().map(|v| format!("{v}")));
            fields.push(format!("{}", self.triplet_indices[row]));
            fields.extend(self.stage_error_sup[row].iter().map(|v| format!("{v}")));
            body.push_str(&fields.join(","));
            body.push('\n');
        }
        write_atomic(path, body.as_bytes())
    }

    /// Read a trace back from `write_csv` output, recovering the dimensions
    /// from the header.
    pub fn read_csv(path: &Path) -> Result<Trace, SimError> {
        let text = fs::read_to_string(path)?;
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| SimError::Csv("empty trace file".into()))?;
        let cols: Vec<&str> = header.split(',').collect();
        let count = |prefix: &str| -> usize {
            cols.iter()
                .filter(|c| {
                    c.strip_prefix(prefix)
                        .is_some_and(|rest| !rest.is_empty() && rest.parse::<usize>().is_ok())
                })
                .count()
        };
        let state_dim = count("x");
        let output_dim = count("y");
        let stages = count("max_abs_e_stage");
        if state_dim == 0 || output_dim == 0 || stages == 0 {
            return Err(SimError::Csv(format!(
                "header `{header}` does not look like a trace"
            )));
        }
        let expected = Trace::new(state_dim, output_dim, stages).header();
        if header != expected {
            return Err(SimError::Csv(format!(
                "header `{header}` does not match the trace layout `{expected}`"
            )));
        }
        let mut trace = Trace::new(state_dim, output_dim, stages);
        for (n, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != cols.len() {
                return Err(SimError::Csv(format!(
                    "row {} has {} fields, expected {}",
                    n + 1,
                    fields.len(),
                    cols.len()
                )));
            }
            let parse = |s: &str| -> Result<f64, SimError> {
                s.parse::<f64>()
                    .map_err(|_| SimError::Csv(format!("row {}: bad number `{s}`", n + 1)))
            };
            let mut it = fields.into_iter();
            let mut take = |k: usize| -> Result<Vec<f64>, SimError> {
                (0..k).map(|_| parse(it.next().unwrap())).collect()
            };
            trace.times.push(take(1)?[0]);
            trace.states.push(take(state_dim)?);
            let _y = take(output_dim)?;
            trace.inputs.push(take(output_dim)?);
            trace.tube_lower.push(take(output_dim)?);
            trace.tube_upper.push(take(output_dim)?);
            let idx = take(1)?[0];
            trace.triplet_indices.push(idx as usize);
            trace.stage_error_sup.push(take(stages)?);
        }
        Ok(trace)
    }

    /// Write one output dimension with its tube bounds, for plotting.
    pub fn write_dimension_csv(&self, dim: usize, path: &Path) -> std::io::Result<()> {
        let mut body = format!("t,y{0},gammaL{0},gammaU{0}\n", dim + 1);
        for row in 0..self.len() {
            body.push_str(&format!(
                "{},{},{},{}\n",
                self.times[row],
                self.outputs(row)[dim],
                self.tube_lower[row][dim],
                self.tube_upper[row][dim]
            ));
        }
        write_atomic(path, body.as_bytes())
    }
}

/// Write the switch log as CSV, atomically.
pub fn write_events_csv(
    events: &[SwitchEvent],
    output_dim: usize,
    path: &Path,
) -> std::io::Result<()> {
    let mut body = String::from("t,from_index,to_index");
    for i in 1..=output_dim {
        body.push_str(&format!(",y{i}"));
    }
    body.push('\n');
    for e in events {
        body.push_str(&format!("{},{},{}", e.time, e.from_index, e.to_index));
        for v in &e.output {
            body.push_str(&format!(",{v}"));
        }
        body.push('\n');
    }
    write_atomic(path, body.as_bytes())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// Why a run ended before its horizon.
#[derive(Debug, Clone)]
pub struct SimFailure {
    pub time: f64,
    pub message: String,
}

#[derive(Debug)]
pub struct SimOutcome {
    pub trace: Trace,
    pub events: Vec<SwitchEvent>,
    pub final_state: Vec<f64>,
    pub failure: Option<SimFailure>,
}

impl SimOutcome {
    pub fn ok(&self) -> bool {
        self.failure.is_none()
    }
}

/// Run the closed loop from `initial_state` for `params.horizon` seconds.
pub fn simulate(
    plant: &dyn Dynamics,
    disturbance: &mut dyn DisturbanceModel,
    hybrid: &mut HybridController,
    initial_state: &[f64],
    params: &SimParams,
) -> Result<SimOutcome, SimError> {
    if !(params.dt > 0.0) || !(params.horizon >= 0.0) {
        return Err(SimError::Shape(format!(
            "horizon {} and step {} must be positive",
            params.horizon, params.dt
        )));
    }
    if initial_state.len() != plant.state_dimension() {
        return Err(SimError::Shape(format!(
            "initial state has {} components, plant expects {}",
            initial_state.len(),
            plant.state_dimension()
        )));
    }
    if plant.stages() != hybrid.stages() {
        return Err(SimError::Shape(format!(
            "plant has {} stages, controller has {}",
            plant.stages(),
            hybrid.stages()
        )));
    }
    if plant.output_dimension() != hybrid.output_dimension() {
        return Err(SimError::Shape(format!(
            "plant output dimension {} does not match task dimension {}",
            plant.output_dimension(),
            hybrid.output_dimension()
        )));
    }
    if plant.input_dimension() != plant.output_dimension() {
        return Err(SimError::Shape(format!(
            "plant has {} inputs for {} outputs",
            plant.input_dimension(),
            plant.output_dimension()
        )));
    }
    if disturbance.dimension() != plant.output_dimension() {
        return Err(SimError::Shape(format!(
            "disturbance dimension {} does not match plant output dimension {}",
            disturbance.dimension(),
            plant.output_dimension()
        )));
    }

    let steps = (params.horizon / params.dt).round() as usize;
    let mut trace = Trace::new(
        plant.state_dimension(),
        plant.output_dimension(),
        plant.stages(),
    );
    let mut x = initial_state.to_vec();
    let mut failure = None;

    for k in 0..=steps {
        let t = k as f64 * params.dt;
        let step = match hybrid.control(t, &x) {
            Ok(step) => step,
            Err(e) => {
                failure = Some(SimFailure {
                    time: t,
                    message: e.to_string(),
                });
                break;
            }
        };
        trace.times.push(t);
        trace.states.push(x.clone());
        trace.inputs.push(step.u.clone());
        trace.tube_lower.push(step.tube_lower.clone());
        trace.tube_upper.push(step.tube_upper.clone());
        trace.triplet_indices.push(step.triplet_index);
        trace.stage_error_sup.push(
            step.stage_errors
                .iter()
                .map(|errs| errs.iter().fold(0.0f64, |m, e| m.max(e.abs())))
                .collect(),
        );
        if k == steps {
            break;
        }
        let w = disturbance.sample(t);
        match rk4_step(|s| plant.derivative(s, &step.u, &w), &x, params.dt) {
            Ok(next) => x = next,
            Err(e) => {
                failure = Some(SimFailure {
                    time: t,
                    message: e.to_string(),
                });
                break;
            }
        }
    }

    Ok(SimOutcome {
        trace,
        events: hybrid.events().to_vec(),
        final_state: x,
        failure,
    })
}
