//! Bounded disturbance inputs for closed-loop simulation.
//!
//! Each model produces a disturbance vector once per integration step and
//! the simulator holds it constant across the step.  All models respect an
//! amplitude bound componentwise, and the seeded model is deterministic:
//! the same seed yields the same sequence of samples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DisturbanceError {
    #[error("unknown disturbance type `{0}`")]
    UnknownType(String),
    #[error("disturbance parameter error: {0}")]
    Params(String),
}

/// A disturbance signal sampled once per simulation step (zero-order hold).
pub trait DisturbanceModel {
    fn kind(&self) -> &'static str;
    fn dimension(&self) -> usize;
    fn sample(&mut self, t: f64) -> Vec<f64>;
}

/// Build a disturbance model by type name.
///
/// * `"zero"` — no disturbance (the default when a config omits it).
/// * `"uniform"` — i.i.d. uniform draws in `[-amplitude, amplitude]`,
///   seeded and reproducible.
/// * `"sinusoidal"` — phase-staggered sinusoids of the given amplitude.
pub fn build_disturbance(
    kind: &str,
    params: &toml::Table,
    dimension: usize,
    seed: u64,
) -> Result<Box<dyn DisturbanceModel>, DisturbanceError> {
    match kind {
        "zero" => Ok(Box::new(Zero { dimension })),
        "uniform" => Ok(Box::new(Uniform::from_params(params, dimension, seed)?)),
        "sinusoidal" => Ok(Box::new(Sinusoidal::from_params(params, dimension)?)),
        other => Err(DisturbanceError::UnknownType(other.to_string())),
    }
}

pub struct Zero {
    dimension: usize,
}

impl DisturbanceModel for Zero {
    fn kind(&self) -> &'static str {
        "zero"
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn sample(&mut self, _t: f64) -> Vec<f64> {
        vec![0.0; self.dimension]
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct UniformParams {
    amplitude: f64,
}

impl Default for UniformParams {
    fn default() -> Self {
        UniformParams { amplitude: 0.0 }
    }
}

pub struct Uniform {
    amplitude: f64,
    dimension: usize,
    rng: ChaCha20Rng,
}

impl Uniform {
    fn from_params(
        table: &toml::Table,
        dimension: usize,
        seed: u64,
    ) -> Result<Uniform, DisturbanceError> {
        let params: UniformParams = toml::Value::Table(table.clone())
            .try_into()
            .map_err(|e| DisturbanceError::Params(format!("uniform: {e}")))?;
        if !(params.amplitude >= 0.0) {
            return Err(DisturbanceError::Params(
                "uniform: amplitude must be non-negative".into(),
            ));
        }
        Ok(Uniform {
            amplitude: params.amplitude,
            dimension,
            rng: ChaCha20Rng::seed_from_u64(seed),
        })
    }
}

impl DisturbanceModel for Uniform {
    fn kind(&self) -> &'static str {
        "uniform"
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn sample(&mut self, _t: f64) -> Vec<f64> {
        (0..self.dimension)
            .map(|_| {
                if self.amplitude == 0.0 {
                    0.0
                } else {
                    self.rng.gen_range(-self.amplitude..=self.amplitude)
                }
            })
            .collect()
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SinusoidalParams {
    amplitude: f64,
    frequency: f64,
    phase: f64,
}

impl Default for SinusoidalParams {
    fn default() -> Self {
        SinusoidalParams {
            amplitude: 0.0,
            frequency: 1.0,
            phase: 0.0,
        }
    }
}

pub struct Sinusoidal {
    amplitude: f64,
    frequency: f64,
    phase: f64,
    dimension: usize,
}

impl Sinusoidal {
    fn from_params(table: &toml::Table, dimension: usize) -> Result<Sinusoidal, DisturbanceError> {
        let params: SinusoidalParams = toml::Value::Table(table.clone())
            .try_into()
            .map_err(|e| DisturbanceError::Params(format!("sinusoidal: {e}")))?;
        if !(params.amplitude >= 0.0) {
            return Err(DisturbanceError::Params(
                "sinusoidal: amplitude must be non-negative".into(),
            ));
        }
        if !params.frequency.is_finite() || !params.phase.is_finite() {
            return Err(DisturbanceError::Params(
                "sinusoidal: frequency and phase must be finite".into(),
            ));
        }
        Ok(Sinusoidal {
            amplitude: params.amplitude,
            frequency: params.frequency,
            phase: params.phase,
            dimension,
        })
    }
}

impl DisturbanceModel for Sinusoidal {
    fn kind(&self) -> &'static str {
        "sinusoidal"
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn sample(&mut self, t: f64) -> Vec<f64> {
        // Stagger components a third of a cycle apart so they do not align.
        (0..self.dimension)
            .map(|j| {
                let angle = 2.0 * std::f64::consts::PI * self.frequency * t
                    + self.phase
                    + j as f64 * 2.0 * std::f64::consts::PI / 3.0;
                self.amplitude * angle.sin()
            })
            .collect()
    }
}
