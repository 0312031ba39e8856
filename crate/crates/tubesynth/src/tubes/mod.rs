//! Spatiotemporal tubes: time-varying boxes that certify one reach-avoid
//! task each.
//!
//! A tube is one lower and one upper boundary curve per output dimension.
//! Synthesis builds a reachability tube between the start and target boxes,
//! scans it against the avoid set, and blends in axis-aligned corridors
//! around every conflict until the scan comes back clean; verification then
//! re-checks the four tube conditions on a finer grid plus the constant
//! tail: start containment, target containment, margin clearance from every
//! avoid box, and strict boundary ordering.

mod circumvent;
mod profile;
mod synth;

pub use circumvent::{adapt_tube, build_circumvent, Corridor};
pub use profile::{smoothstep, smoothstep_slope, ScalarProfile, Segment};
pub use synth::{
    build_reachability_tube, entry_start_box, synthesize_stt, Adaptation, SynthOutcome,
    SynthParams,
};

use std::io::Write;

use thiserror::Error;

use crate::geometry::{box_in_union, BoxRegion};
use crate::workspace::RaTask;

/// Comparison slack for clearance checks: corridors hug obstacles at
/// exactly the margin, so tests on the margin must tolerate rounding.
pub const CLEARANCE_SLACK: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum TubeError {
    #[error("entry point {0} is not strictly inside any start region box")]
    EntryOutsideStart(String),
    #[error("task has no target region box")]
    NoTarget,
    #[error("no safe corridor around avoid box {box_index} for conflict at [{t_start}, {t_end}]")]
    NoCorridor {
        box_index: usize,
        t_start: f64,
        t_end: f64,
    },
    #[error("conflict cannot be resolved: {0}")]
    Unresolvable(String),
    #[error("corridor padding infeasible: {0}")]
    InfeasiblePadding(String),
}

/// One time window during which the tube comes within the safety margin of
/// one avoid box. `t_end` of `None` means the conflict persists into the
/// tube's constant tail and no finite corridor can resolve it.
#[derive(Debug, Clone, PartialEq)]
pub struct Conflict {
    pub box_index: usize,
    pub t_start: f64,
    pub t_end: Option<f64>,
}

/// Time-varying box: per-dimension lower and upper boundary curves plus the
/// reach deadline. After the deadline the boundaries are constant.
#[derive(Debug, Clone)]
pub struct Tube {
    pub lower: Vec<ScalarProfile>,
    pub upper: Vec<ScalarProfile>,
    pub horizon: f64,
    /// Time windows already claimed by corridor blends, with their
    /// dimension; new blends must not overlap any of them.
    pub adapted_windows: Vec<(usize, f64, f64)>,
}

impl Tube {
    pub fn new(lower: Vec<ScalarProfile>, upper: Vec<ScalarProfile>, horizon: f64) -> Tube {
        assert_eq!(lower.len(), upper.len());
        assert!(horizon > 0.0);
        Tube {
            lower,
            upper,
            horizon,
            adapted_windows: Vec::new(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn interval(&self, dim: usize, t: f64) -> (f64, f64) {
        (self.lower[dim].value(t), self.upper[dim].value(t))
    }

    pub fn box_at(&self, t: f64) -> BoxRegion {
        BoxRegion::new(
            self.lower.iter().map(|p| p.value(t)).collect(),
            self.upper.iter().map(|p| p.value(t)).collect(),
        )
    }

    /// The limiting box of the constant tail.
    pub fn end_box(&self) -> BoxRegion {
        BoxRegion::new(
            self.lower.iter().map(|p| p.end_value()).collect(),
            self.upper.iter().map(|p| p.end_value()).collect(),
        )
    }

    /// Sampled boundary curves as CSV: time and one lower/upper column pair
    /// per dimension, from zero to ten percent past the deadline.
    pub fn write_csv<W: Write>(&self, mut w: W, dt: f64) -> std::io::Result<()> {
        let n = self.dimension();
        write!(w, "t")?;
        for d in 0..n {
            write!(w, ",lower{d},upper{d}")?;
        }
        writeln!(w)?;
        let t_max = self.horizon * 1.1;
        let steps = (t_max / dt).ceil() as usize;
        for k in 0..=steps {
            let t = k as f64 * dt;
            write!(w, "{t}")?;
            for d in 0..n {
                let (lo, up) = self.interval(d, t);
                write!(w, ",{lo},{up}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Scan the tube against the avoid boxes on a `dt` grid reaching ten steps
/// past the deadline, plus the constant tail. Each maximal run of samples
/// with clearance below the margin becomes one conflict, padded by one step
/// on each side; a tail hit yields an open-ended conflict.
pub fn detect_conflicts(tube: &Tube, avoid: &[BoxRegion], dt: f64, margin: f64) -> Vec<Conflict> {
    let steps = (tube.horizon / dt).ceil() as usize + 10;
    let mut out: Vec<Conflict> = Vec::new();
    for (box_index, b) in avoid.iter().enumerate() {
        let mut runs: Vec<(f64, f64)> = Vec::new();
        let mut run_start: Option<f64> = None;
        let mut last_bad = 0.0;
        for k in 0..=steps {
            let t = k as f64 * dt;
            let bad = tube.box_at(t).clearance(b) < margin - CLEARANCE_SLACK;
            if bad {
                if run_start.is_none() {
                    run_start = Some(t);
                }
                last_bad = t;
            } else if let Some(s) = run_start.take() {
                runs.push((s, last_bad));
            }
        }
        if let Some(s) = run_start {
            runs.push((s, last_bad));
        }
        // pad by one step and merge runs that now touch
        let mut padded: Vec<(f64, f64)> = Vec::new();
        for (s, e) in runs {
            let (s, e) = ((s - dt).max(0.0), e + dt);
            match padded.last_mut() {
                Some(last) if s <= last.1 + 1e-12 => last.1 = e,
                _ => padded.push((s, e)),
            }
        }
        for (s, e) in padded {
            out.push(Conflict {
                box_index,
                t_start: s,
                t_end: Some(e),
            });
        }
        if tube.end_box().clearance(b) < margin - CLEARANCE_SLACK {
            out.push(Conflict {
                box_index,
                t_start: tube.horizon,
                t_end: None,
            });
        }
    }
    out.sort_by(|a, b| {
        a.t_start
            .total_cmp(&b.t_start)
            .then(a.box_index.cmp(&b.box_index))
    });
    out
}

/// Verification record for one tube against one task.
#[derive(Debug, Clone)]
pub struct VerifyReport {
    /// Tube box at time zero lies inside the start region.
    pub starts_in_start: bool,
    /// Tube box at the deadline, and the constant tail, lie inside the
    /// target region.
    pub ends_in_target: bool,
    /// Every sampled box and the tail keep at least the margin from every
    /// avoid box.
    pub clear_of_avoid: bool,
    /// Lower boundary strictly below upper boundary everywhere sampled.
    pub properly_ordered: bool,
    /// Smallest observed clearance to any avoid box (infinite when the
    /// avoid set is empty).
    pub min_clearance: f64,
    /// Smallest observed boundary gap across dimensions.
    pub min_width: f64,
    /// Number of grid samples checked.
    pub samples: usize,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.starts_in_start && self.ends_in_target && self.clear_of_avoid && self.properly_ordered
    }
}

/// Check the four tube conditions on a `dt` grid reaching ten steps past the
/// deadline, plus the constant tail.
pub fn verify_stt(tube: &Tube, task: &RaTask, dt: f64, margin: f64) -> VerifyReport {
    let starts_in_start = box_in_union(&tube.box_at(0.0), &task.start);
    let ends_in_target = box_in_union(&tube.box_at(tube.horizon), &task.target)
        && box_in_union(&tube.end_box(), &task.target);

    let steps = (tube.horizon / dt).ceil() as usize + 10;
    let mut min_clearance = f64::INFINITY;
    let mut min_width = f64::INFINITY;
    let mut check_box = |b: &BoxRegion| {
        for a in &task.avoid {
            min_clearance = min_clearance.min(b.clearance(a));
        }
        for d in 0..b.dimension() {
            min_width = min_width.min(b.upper[d] - b.lower[d]);
        }
    };
    for k in 0..=steps {
        check_box(&tube.box_at(k as f64 * dt));
    }
    check_box(&tube.end_box());

    VerifyReport {
        starts_in_start,
        ends_in_target,
        clear_of_avoid: min_clearance >= margin - CLEARANCE_SLACK,
        properly_ordered: min_width > 0.0,
        min_clearance,
        min_width,
        samples: steps + 2,
    }
}
