//! User-defined strict-feedback chain described by expression strings.
//!
//! The state is organised as `stages` blocks of `outputs` components.  The
//! variable `x{k}_{i}` names component `i` of stage `k` (both 1-based).
//! Stage `k` evolves as `drift + gain * next` per component, where `next`
//! is the matching component of stage `k+1`, or the input on the last
//! stage.  The disturbance enters on the last stage alongside the input.
//! Expressions for stage `k` may reference states of stages `1..=k` only,
//! so each stage block can be steered through the one below it.

use serde::Deserialize;

use super::expr::{self, Expr};
use super::{Dynamics, PlantError};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenericParams {
    outputs: usize,
    stages: usize,
    drift: Vec<Vec<String>>,
    gain: Vec<Vec<String>>,
}

/// Strict-feedback plant assembled from parsed expressions.
#[derive(Debug)]
pub struct GenericChain {
    outputs: usize,
    stages: usize,
    drift: Vec<Vec<Expr>>,
    gain: Vec<Vec<Expr>>,
}

impl GenericChain {
    pub fn from_params(table: &toml::Table) -> Result<GenericChain, PlantError> {
        let params: GenericParams = toml::Value::Table(table.clone())
            .try_into()
            .map_err(|e| PlantError::Params(format!("generic plant: {e}")))?;
        if params.outputs == 0 || params.stages == 0 {
            return Err(PlantError::Params(
                "generic plant: outputs and stages must be positive".into(),
            ));
        }
        for (name, rows) in [("drift", &params.drift), ("gain", &params.gain)] {
            if rows.len() != params.stages {
                return Err(PlantError::Params(format!(
                    "generic plant: {name} has {} stage rows, expected {}",
                    rows.len(),
                    params.stages
                )));
            }
            for (k, row) in rows.iter().enumerate() {
                if row.len() != params.outputs {
                    return Err(PlantError::Params(format!(
                        "generic plant: {name} stage {} has {} entries, expected {}",
                        k + 1,
                        row.len(),
                        params.outputs
                    )));
                }
            }
        }

        let mut names = Vec::with_capacity(params.stages * params.outputs);
        for k in 1..=params.stages {
            for i in 1..=params.outputs {
                names.push(format!("x{k}_{i}"));
            }
        }

        let compile = |rows: &[Vec<String>], what: &str| -> Result<Vec<Vec<Expr>>, PlantError> {
            rows.iter()
                .enumerate()
                .map(|(k, row)| {
                    row.iter()
                        .map(|src| {
                            let e = expr::parse(src, &names)?;
                            let mut bad = None;
                            e.for_each_var(&mut |idx| {
                                let stage = idx / params.outputs + 1;
                                if stage > k + 1 && bad.is_none() {
                                    bad = Some(idx);
                                }
                            });
                            if let Some(idx) = bad {
                                return Err(PlantError::Params(format!(
                                    "generic plant: {what} for stage {} references `{}`, \
                                     which belongs to a later stage",
                                    k + 1,
                                    names[idx]
                                )));
                            }
                            Ok(e)
                        })
                        .collect()
                })
                .collect()
        };

        Ok(GenericChain {
            outputs: params.outputs,
            stages: params.stages,
            drift: compile(&params.drift, "drift")?,
            gain: compile(&params.gain, "gain")?,
        })
    }
}

impl Dynamics for GenericChain {
    fn kind(&self) -> &'static str {
        "generic"
    }

    fn state_dimension(&self) -> usize {
        self.stages * self.outputs
    }

    fn input_dimension(&self) -> usize {
        self.outputs
    }

    fn output_dimension(&self) -> usize {
        self.outputs
    }

    fn stages(&self) -> usize {
        self.stages
    }

    fn derivative(&self, x: &[f64], u: &[f64], w: &[f64]) -> Result<Vec<f64>, PlantError> {
        super::check_shapes(self, x, u, w)?;
        let m = self.outputs;
        let mut dx = vec![0.0; x.len()];
        for k in 0..self.stages {
            let last = k == self.stages - 1;
            for j in 0..m {
                let next = if last { u[j] } else { x[(k + 1) * m + j] };
                let mut v = self.drift[k][j].eval(x) + self.gain[k][j].eval(x) * next;
                if last {
                    v += w[j];
                }
                dx[k * m + j] = v;
            }
        }
        Ok(dx)
    }
}
