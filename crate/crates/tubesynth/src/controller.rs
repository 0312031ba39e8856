//! Closed-form funnel controller for strict-feedback chains.
//!
//! The state splits into stages of equal width: the first stage holds the
//! outputs, each later stage feeds the one before it, and the input drives
//! the last. Stage one is confined to the synthesized tube; every later
//! stage is confined to an exponentially narrowing funnel around the
//! virtual reference produced by the previous stage. Each stage maps its
//! normalized error through a logarithmic barrier, so the commanded
//! reference grows without bound as the state nears a boundary and the
//! boundary is never crossed. No model knowledge enters the control law.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ControllerError {
    #[error(
        "stage {stage} error left its funnel in dimension {dim}: |{value}| >= 1 at time {time}"
    )]
    FunnelViolation {
        stage: usize,
        dim: usize,
        value: f64,
        time: f64,
    },
    #[error("controller produced a non-finite value at stage {stage}, dimension {dim}")]
    NonFinite { stage: usize, dim: usize },
    #[error("state length {state} does not divide into {stages} stages of width {width}")]
    ShapeMismatch {
        state: usize,
        stages: usize,
        width: usize,
    },
}

/// Normalized position of `x` inside `[lo, hi]`: -1 at the lower boundary,
/// +1 at the upper, 0 at the center.
pub fn normalized_error(x: f64, lo: f64, hi: f64) -> f64 {
    (2.0 * x - lo - hi) / (hi - lo)
}

/// Logarithmic barrier transform, finite only for |e| < 1.
pub fn transform_error(e: f64) -> f64 {
    ((1.0 + e) / (1.0 - e)).ln()
}

/// Barrier gain for a corridor of the given total width.
pub fn error_gain(e: f64, width: f64) -> f64 {
    4.0 / (width * (1.0 - e * e))
}

/// One stage of the control law: the virtual reference handed to the next
/// stage, or the plant input at the last stage.
pub fn stage_control(kappa: f64, e: f64, width: f64) -> f64 {
    -kappa * error_gain(e, width) * transform_error(e)
}

/// Diagonal of the barrier gain matrix for a stage error vector: one
/// `error_gain` entry per dimension.
pub fn gain_matrix(e: &[f64], widths: &[f64]) -> Vec<f64> {
    e.iter()
        .zip(widths)
        .map(|(e, w)| error_gain(*e, *w))
        .collect()
}

/// Anchoring rules for funnels spawned at a task switch.
#[derive(Debug, Clone)]
pub struct FunnelSettings {
    /// Steady-state radius as a fraction of the initial radius.
    pub q_rel: f64,
    /// Steady-state radius floor.
    pub q_abs: f64,
    /// Contraction rate.
    pub mu: f64,
    /// Relative headroom above the anchoring deviation.
    pub rho: f64,
    /// Absolute headroom above the anchoring deviation.
    pub rho_abs: f64,
}

impl Default for FunnelSettings {
    fn default() -> FunnelSettings {
        FunnelSettings {
            q_rel: 0.3,
            q_abs: 0.4,
            mu: 1.5,
            rho: 1.0,
            rho_abs: 0.15,
        }
    }
}

/// Exponential funnel radius, evaluated on time since its anchor.
#[derive(Debug, Clone)]
pub struct Funnel {
    pub p: f64,
    pub q: f64,
    pub mu: f64,
}

impl Funnel {
    /// Funnel wide enough to admit the given deviation with headroom.
    pub fn anchored(deviation: f64, settings: &FunnelSettings) -> Funnel {
        let p = deviation.abs() * (1.0 + settings.rho) + settings.rho_abs;
        let q = (settings.q_rel * p).max(settings.q_abs);
        Funnel {
            p,
            q,
            mu: settings.mu,
        }
    }

    pub fn radius(&self, tau: f64) -> f64 {
        (self.p - self.q) * (-self.mu * tau).exp() + self.q
    }
}

/// Free-function form of [`Funnel::radius`].
pub fn funnel_eval(f: &Funnel, tau: f64) -> f64 {
    f.radius(tau)
}

/// Everything one control evaluation produces: the plant input, plus the
/// per-stage normalized errors and virtual references for monitoring.
#[derive(Debug, Clone)]
pub struct ControlOutput {
    pub u: Vec<f64>,
    /// Normalized errors per stage, outermost first.
    pub stage_errors: Vec<Vec<f64>>,
    /// Virtual references handed to stages two onward; the last entry is
    /// the plant input again.
    pub references: Vec<Vec<f64>>,
}

fn split_stages<'a>(
    x: &'a [f64],
    stages: usize,
) -> Result<Vec<&'a [f64]>, ControllerError> {
    if stages == 0 || x.len() % stages != 0 {
        return Err(ControllerError::ShapeMismatch {
            state: x.len(),
            stages,
            width: if stages == 0 { 0 } else { x.len() / stages },
        });
    }
    let m = x.len() / stages;
    Ok(x.chunks(m).collect())
}

/// Evaluate the full control chain.
///
/// `kappa` holds one gain per stage. `tube_lo`/`tube_hi` bound the outputs
/// at the current time. `funnels[k]` holds the per-dimension funnels of
/// stage `k + 2`, evaluated at `tau`, the time since their anchor. `time`
/// only labels error reports.
pub fn compute_control(
    kappa: &[f64],
    x: &[f64],
    tube_lo: &[f64],
    tube_hi: &[f64],
    funnels: &[Vec<Funnel>],
    tau: f64,
    time: f64,
) -> Result<ControlOutput, ControllerError> {
    let stages = kappa.len();
    let blocks = split_stages(x, stages)?;
    let m = blocks[0].len();
    if tube_lo.len() != m || tube_hi.len() != m || funnels.len() + 1 != stages {
        return Err(ControllerError::ShapeMismatch {
            state: x.len(),
            stages,
            width: m,
        });
    }

    let mut stage_errors = Vec::with_capacity(stages);
    let mut references = Vec::with_capacity(stages);
    let mut reference = vec![0.0; m];
    for (k, block) in blocks.iter().enumerate() {
        let mut errors = Vec::with_capacity(m);
        let mut next = Vec::with_capacity(m);
        for d in 0..m {
            let (e, width) = if k == 0 {
                (
                    normalized_error(block[d], tube_lo[d], tube_hi[d]),
                    tube_hi[d] - tube_lo[d],
                )
            } else {
                let radius = funnels[k - 1][d].radius(tau);
                ((block[d] - reference[d]) / radius, 2.0 * radius)
            };
            if !e.is_finite() {
                return Err(ControllerError::NonFinite { stage: k + 1, dim: d });
            }
            if e.abs() >= 1.0 {
                return Err(ControllerError::FunnelViolation {
                    stage: k + 1,
                    dim: d,
                    value: e,
                    time,
                });
            }
            let r = stage_control(kappa[k], e, width);
            if !r.is_finite() {
                return Err(ControllerError::NonFinite { stage: k + 1, dim: d });
            }
            errors.push(e);
            next.push(r);
        }
        stage_errors.push(errors);
        references.push(next.clone());
        reference = next;
    }

    Ok(ControlOutput {
        u: reference,
        stage_errors,
        references,
    })
}

/// Anchor fresh funnels for stages two onward by evaluating the chain at
/// the switch instant: each stage's funnel opens wide enough to hold the
/// current deviation from its new virtual reference.
pub fn anchor_funnels(
    kappa: &[f64],
    x: &[f64],
    tube_lo: &[f64],
    tube_hi: &[f64],
    settings: &FunnelSettings,
    time: f64,
) -> Result<Vec<Vec<Funnel>>, ControllerError> {
    let stages = kappa.len();
    let blocks = split_stages(x, stages)?;
    let m = blocks[0].len();
    if tube_lo.len() != m || tube_hi.len() != m {
        return Err(ControllerError::ShapeMismatch {
            state: x.len(),
            stages,
            width: m,
        });
    }

    let mut funnels: Vec<Vec<Funnel>> = Vec::with_capacity(stages.saturating_sub(1));
    let mut reference = vec![0.0; m];
    for (k, block) in blocks.iter().enumerate() {
        let mut next = Vec::with_capacity(m);
        let mut anchored = Vec::with_capacity(m);
        for d in 0..m {
            let (e, width) = if k == 0 {
                (
                    normalized_error(block[d], tube_lo[d], tube_hi[d]),
                    tube_hi[d] - tube_lo[d],
                )
            } else {
                let deviation = block[d] - reference[d];
                let funnel = Funnel::anchored(deviation, settings);
                let radius = funnel.radius(0.0);
                anchored.push(funnel);
                (deviation / radius, 2.0 * radius)
            };
            if !e.is_finite() {
                return Err(ControllerError::NonFinite { stage: k + 1, dim: d });
            }
            if e.abs() >= 1.0 {
                return Err(ControllerError::FunnelViolation {
                    stage: k + 1,
                    dim: d,
                    value: e,
                    time,
                });
            }
            next.push(stage_control(kappa[k], e, width));
        }
        if k > 0 {
            funnels.push(anchored);
        }
        reference = next;
    }
    Ok(funnels)
}
