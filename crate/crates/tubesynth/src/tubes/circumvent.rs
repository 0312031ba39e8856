//! Corridor construction around one conflict.
//!
//! Candidates hug one face of the conflicting box at the safety margin, one
//! per dimension and side, sized to the widest tube cross-section over the
//! padded conflict window. Each candidate is applied to a scratch copy of
//! the tube and swept across the window against the whole avoid set; a
//! candidate survives only if every sample keeps the margin, which rejects
//! corridors whose entry or exit ramp would drag the tube through an
//! obstacle. Among survivors the one displacing the tube least wins, ties
//! broken by dimension and below before above.

use super::{Conflict, Tube, TubeError, CLEARANCE_SLACK};
use crate::workspace::RaTask;

/// Axis-aligned corridor pinning one tube dimension to [low, high] during a
/// conflict window.
#[derive(Debug, Clone)]
pub struct Corridor {
    pub dim: usize,
    /// True when the corridor passes below the box face, false above.
    pub below: bool,
    pub low: f64,
    pub high: f64,
    /// Distance between the corridor center and the unadapted tube center
    /// at the middle of the conflict.
    pub displacement: f64,
}

/// Build the best safe corridor around `conflict`, or report why none
/// exists.
pub fn build_circumvent(
    tube: &Tube,
    task: &RaTask,
    conflict: &Conflict,
    dt: f64,
    delta: f64,
    margin: f64,
) -> Result<Corridor, TubeError> {
    let t_end = conflict.t_end.ok_or_else(|| {
        TubeError::Unresolvable(format!(
            "tube settles within the margin of avoid box {} and never leaves",
            conflict.box_index
        ))
    })?;
    let t_start = conflict.t_start;
    let w0 = t_start - delta;
    let w1 = t_end + delta;
    if w0 < 0.0 {
        return Err(TubeError::InfeasiblePadding(format!(
            "conflict at t={t_start} leaves no room for the entry ramp of width {delta}"
        )));
    }

    let obstacle = &task.avoid[conflict.box_index];
    let scan_steps = ((w1 - w0) / dt).ceil() as usize;
    let scan_times: Vec<f64> = (0..=scan_steps)
        .map(|k| (w0 + k as f64 * dt).min(w1))
        .collect();

    let t_mid = 0.5 * (t_start + t_end);
    let mut best: Option<Corridor> = None;
    for dim in 0..tube.dimension() {
        // widest cross-section of this dimension over the window sets the
        // corridor thickness
        let width = scan_times
            .iter()
            .map(|&t| {
                let (lo, up) = tube.interval(dim, t);
                up - lo
            })
            .fold(0.0f64, f64::max);
        for below in [true, false] {
            let (low, high) = if below {
                let high = obstacle.lower[dim] - margin;
                (high - width, high)
            } else {
                let low = obstacle.upper[dim] + margin;
                (low, low + width)
            };
            // the corridor must fit inside the workspace with its own margin
            if low < task.bounds.lower[dim] + margin || high > task.bounds.upper[dim] - margin {
                continue;
            }
            // sweep safety: apply to a scratch tube and re-scan the whole
            // window against every avoid box
            let mut scratch = tube.clone();
            scratch.lower[dim].blend_window(t_start, t_end, delta, low);
            scratch.upper[dim].blend_window(t_start, t_end, delta, high);
            let safe = scan_times.iter().all(|&t| {
                let b = scratch.box_at(t);
                task.avoid
                    .iter()
                    .all(|a| b.clearance(a) >= margin - CLEARANCE_SLACK)
            });
            if !safe {
                continue;
            }
            let (olo, oup) = tube.interval(dim, t_mid);
            let displacement = (0.5 * (low + high) - 0.5 * (olo + oup)).abs();
            let candidate = Corridor {
                dim,
                below,
                low,
                high,
                displacement,
            };
            let better = match &best {
                None => true,
                Some(b) => {
                    (candidate.displacement, candidate.dim, !candidate.below)
                        .partial_cmp(&(b.displacement, b.dim, !b.below))
                        == Some(std::cmp::Ordering::Less)
                }
            };
            if better {
                best = Some(candidate);
            }
        }
    }
    best.ok_or(TubeError::NoCorridor {
        box_index: conflict.box_index,
        t_start,
        t_end,
    })
}

/// Blend the corridor into the tube over the padded conflict window. Fails
/// when the window would start before time zero or overlap a window already
/// claimed by an earlier adaptation.
pub fn adapt_tube(
    tube: &mut Tube,
    conflict: &Conflict,
    corridor: &Corridor,
    delta: f64,
) -> Result<(), TubeError> {
    let t_end = conflict.t_end.ok_or_else(|| {
        TubeError::Unresolvable("open-ended conflicts admit no corridor".into())
    })?;
    let w0 = conflict.t_start - delta;
    let w1 = t_end + delta;
    if w0 < 0.0 {
        return Err(TubeError::InfeasiblePadding(format!(
            "conflict at t={} leaves no room for the entry ramp of width {delta}",
            conflict.t_start
        )));
    }
    for (dim, a, b) in &tube.adapted_windows {
        if w0 < *b && *a < w1 {
            return Err(TubeError::InfeasiblePadding(format!(
                "window [{w0}, {w1}] overlaps the earlier adaptation of dimension {dim} on [{a}, {b}]"
            )));
        }
    }
    tube.lower[corridor.dim].blend_window(conflict.t_start, t_end, delta, corridor.low);
    tube.upper[corridor.dim].blend_window(conflict.t_start, t_end, delta, corridor.high);
    tube.adapted_windows.push((corridor.dim, w0, w1));
    Ok(())
}
