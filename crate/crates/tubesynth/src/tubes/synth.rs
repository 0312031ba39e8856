//! Tube synthesis for one reach-avoid task.
//!
//! The initial tube interpolates from a start box around the entry point to
//! the nearest target box, both shrunk by the width policy so containment
//! holds with room to spare. Dimensions whose start interval already sits
//! inside the shrunk target stay constant. The tube is then scanned against
//! the avoid set and reshaped one conflict at a time until the scan comes
//! back clean or the round budget runs out.

use super::circumvent::{adapt_tube, build_circumvent};
use super::profile::ScalarProfile;
use super::{detect_conflicts, Tube, TubeError};
use crate::geometry::BoxRegion;
use crate::workspace::RaTask;

/// Synthesis knobs. `dt_frac` and `delta_frac` scale with the deadline so
/// the scan resolution and ramp width stay proportionate.
#[derive(Debug, Clone)]
pub struct SynthParams {
    /// Reach deadline: the tube must sit inside the target from this time on.
    pub t_c: f64,
    /// Fraction of the available halfwidth the tube actually uses.
    pub width_policy: f64,
    /// Corridor ramp width as a fraction of the deadline.
    pub delta_frac: f64,
    /// Required clearance between the tube and every avoid box.
    pub margin: f64,
    /// Conflict scan step as a fraction of the deadline.
    pub dt_frac: f64,
    /// Maximum number of corridor adaptations before giving up.
    pub max_rounds: usize,
}

impl Default for SynthParams {
    fn default() -> SynthParams {
        SynthParams {
            t_c: 10.0,
            width_policy: 0.9,
            delta_frac: 0.05,
            margin: 1e-6,
            dt_frac: 1e-4,
            max_rounds: 8,
        }
    }
}

impl SynthParams {
    pub fn dt(&self) -> f64 {
        self.t_c * self.dt_frac
    }

    pub fn delta(&self) -> f64 {
        self.t_c * self.delta_frac
    }
}

/// Record of one corridor blended into the tube during synthesis.
#[derive(Debug, Clone)]
pub struct Adaptation {
    pub round: usize,
    pub box_index: usize,
    pub dim: usize,
    pub below: bool,
    pub low: f64,
    pub high: f64,
    /// Padded time window the blend occupies, ramps included.
    pub window: (f64, f64),
}

/// A conflict-free tube together with the corridors that shaped it.
#[derive(Debug)]
pub struct SynthOutcome {
    pub tube: Tube,
    pub adaptations: Vec<Adaptation>,
}

/// Start box centered on the entry point, sized by the distance to the
/// nearest face of the enclosing start region box times the width policy.
pub fn entry_start_box(
    task: &RaTask,
    entry: &[f64],
    width_policy: f64,
) -> Result<BoxRegion, TubeError> {
    let outside = || TubeError::EntryOutsideStart(format!("{entry:?}"));
    let sbox = task.start_box_containing(entry).ok_or_else(outside)?;
    let mut lower = Vec::with_capacity(entry.len());
    let mut upper = Vec::with_capacity(entry.len());
    for d in 0..entry.len() {
        let hw = (entry[d] - sbox.lower[d]).min(sbox.upper[d] - entry[d]) * width_policy;
        if hw <= 0.0 {
            return Err(outside());
        }
        lower.push(entry[d] - hw);
        upper.push(entry[d] + hw);
    }
    Ok(BoxRegion::new(lower, upper))
}

/// Straight interpolating tube between two boxes, both shrunk by the width
/// policy, reaching the target at `t_c` and constant afterwards.
pub fn build_reachability_tube(
    start: &BoxRegion,
    target: &BoxRegion,
    t_c: f64,
    width_policy: f64,
) -> Tube {
    let s = start.shrink(width_policy);
    let g = target.shrink(width_policy);
    let n = s.dimension();
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    for d in 0..n {
        lower.push(ScalarProfile::smooth(s.lower[d], g.lower[d], 0.0, t_c));
        upper.push(ScalarProfile::smooth(s.upper[d], g.upper[d], 0.0, t_c));
    }
    Tube::new(lower, upper, t_c)
}

/// Synthesize a conflict-free tube for `task` from the given entry point.
pub fn synthesize_stt(
    task: &RaTask,
    entry: &[f64],
    params: &SynthParams,
) -> Result<SynthOutcome, TubeError> {
    let start = entry_start_box(task, entry, params.width_policy)?;
    let target = task.nearest_target_box(entry).ok_or(TubeError::NoTarget)?;
    let g = target.shrink(params.width_policy);

    let n = start.dimension();
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    for d in 0..n {
        if start.lower[d] >= g.lower[d] && start.upper[d] <= g.upper[d] {
            // already inside the target along this dimension: hold still
            lower.push(ScalarProfile::constant(start.lower[d]));
            upper.push(ScalarProfile::constant(start.upper[d]));
        } else {
            lower.push(ScalarProfile::smooth(
                start.lower[d],
                g.lower[d],
                0.0,
                params.t_c,
            ));
            upper.push(ScalarProfile::smooth(
                start.upper[d],
                g.upper[d],
                0.0,
                params.t_c,
            ));
        }
    }
    let mut tube = Tube::new(lower, upper, params.t_c);

    let dt = params.dt();
    let delta = params.delta();
    let mut adaptations = Vec::new();
    let mut round = 0;
    loop {
        let conflicts = detect_conflicts(&tube, &task.avoid, dt, params.margin);
        if conflicts.is_empty() {
            return Ok(SynthOutcome { tube, adaptations });
        }
        if let Some(open) = conflicts.iter().find(|c| c.t_end.is_none()) {
            return Err(TubeError::Unresolvable(format!(
                "tube settles within the margin of avoid box {} and never leaves",
                open.box_index
            )));
        }
        if round == params.max_rounds {
            return Err(TubeError::Unresolvable(format!(
                "{} conflicts remain after {} adaptation rounds",
                conflicts.len(),
                params.max_rounds
            )));
        }
        let conflict = &conflicts[0];
        let corridor = build_circumvent(&tube, task, conflict, dt, delta, params.margin)?;
        adapt_tube(&mut tube, conflict, &corridor, delta)?;
        adaptations.push(Adaptation {
            round,
            box_index: conflict.box_index,
            dim: corridor.dim,
            below: corridor.below,
            low: corridor.low,
            high: corridor.high,
            window: (
                conflict.t_start - delta,
                conflict.t_end.expect("finite conflict") + delta,
            ),
        });
        round += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tubes::verify_stt;

    fn bx(lower: &[f64], upper: &[f64]) -> BoxRegion {
        BoxRegion::new(lower.to_vec(), upper.to_vec())
    }

    fn task(
        start: Vec<BoxRegion>,
        target: Vec<BoxRegion>,
        avoid: Vec<BoxRegion>,
        bounds: BoxRegion,
    ) -> RaTask {
        RaTask {
            label_in: "pa".into(),
            label_out: "pb".into(),
            label_self: vec!["pd".into()],
            start,
            target,
            avoid,
            bounds,
        }
    }

    #[test]
    fn reachability_tube_matches_contract() {
        let start = bx(&[0.0], &[0.5]);
        let target = bx(&[3.0], &[4.0]);
        let tube = build_reachability_tube(&start, &target, 5.0, 0.9);
        // shrunk endpoints
        let b0 = tube.box_at(0.0);
        assert!((b0.lower[0] - 0.025).abs() < 1e-12);
        assert!((b0.upper[0] - 0.475).abs() < 1e-12);
        let end = tube.end_box();
        assert!((end.lower[0] - 3.05).abs() < 1e-12);
        assert!((end.upper[0] - 3.95).abs() < 1e-12);
        // midpoint of the ramp sits halfway between the shrunk boxes
        let mid = tube.box_at(2.5);
        assert!((mid.lower[0] - 1.5375).abs() < 1e-12);
        assert!((mid.upper[0] - 2.2125).abs() < 1e-12);
        assert!((mid.center()[0] - 1.875).abs() < 1e-12);
        // constant past the deadline
        assert_eq!(tube.box_at(7.0).lower[0], tube.box_at(5.0).lower[0]);
    }

    #[test]
    fn contained_start_dimension_stays_constant() {
        let t = task(
            vec![bx(&[0.0, 0.2], &[1.0, 0.8])],
            vec![bx(&[5.0, 0.0], &[6.0, 1.0])],
            vec![],
            bx(&[0.0, 0.0], &[10.0, 1.0]),
        );
        let params = SynthParams {
            t_c: 9.0,
            ..SynthParams::default()
        };
        let out = synthesize_stt(&t, &[0.5, 0.5], &params).unwrap();
        assert!(out.adaptations.is_empty());
        // the second dimension starts inside the shrunk target and holds
        for probe in [0.0, 3.7, 9.0, 11.0] {
            let (lo, up) = out.tube.interval(1, probe);
            assert!((lo - 0.23).abs() < 1e-12);
            assert!((up - 0.77).abs() < 1e-12);
        }
        // the first dimension travels
        assert!((out.tube.interval(0, 0.0).0 - 0.05).abs() < 1e-12);
        assert!((out.tube.interval(0, 9.0).0 - 5.05).abs() < 1e-12);
        assert!(verify_stt(&out.tube, &t, params.dt(), params.margin).ok());
    }

    #[test]
    fn crossing_synthesis_ducks_sideways() {
        // descend from a high shelf to a low one across a wide band; the
        // tube must detour around the band's near end
        let t = task(
            vec![bx(&[1.0, 2.5], &[2.0, 3.0])],
            vec![bx(&[3.0, 0.0], &[4.0, 0.5])],
            vec![
                bx(&[0.0, 0.0], &[0.5, 0.5]),
                bx(&[3.0, 2.5], &[4.0, 3.0]),
                bx(&[2.0, 1.25], &[4.0, 1.75]),
            ],
            bx(&[0.0, 0.0], &[5.0, 3.5]),
        );
        let params = SynthParams {
            t_c: 9.0,
            ..SynthParams::default()
        };
        let out = synthesize_stt(&t, &[1.5, 2.75], &params).unwrap();
        assert_eq!(out.adaptations.len(), 1);
        let a = &out.adaptations[0];
        assert_eq!(a.dim, 0);
        assert!(a.below, "near side of the band is the left one");
        assert!((a.high - (2.0 - params.margin)).abs() < 1e-12);
        assert!(verify_stt(&out.tube, &t, params.dt(), params.margin).ok());
        assert!(verify_stt(&out.tube, &t, params.dt() / 10.0, params.margin).ok());
    }

    #[test]
    fn pinned_climb_goes_around_the_far_side() {
        // climb within a horizontal slab already aligned with the target;
        // the only safe corridors sidestep the band, and the right side is
        // nearer
        let t = task(
            vec![bx(&[3.0, 0.0], &[4.0, 0.5])],
            vec![bx(&[3.0, 2.5], &[4.0, 3.0])],
            vec![
                bx(&[0.0, 0.0], &[0.5, 0.5]),
                bx(&[1.0, 2.5], &[2.0, 3.0]),
                bx(&[2.0, 1.25], &[4.0, 1.75]),
            ],
            bx(&[0.0, 0.0], &[5.0, 3.5]),
        );
        let params = SynthParams {
            t_c: 9.0,
            ..SynthParams::default()
        };
        let out = synthesize_stt(&t, &[3.5, 0.25], &params).unwrap();
        // the horizontal dimension starts inside the shrunk target: constant
        // outside the corridor window
        let a = &out.adaptations[0];
        assert_eq!(out.adaptations.len(), 1);
        assert_eq!(a.dim, 0);
        assert!(!a.below);
        assert!((a.low - (4.0 + params.margin)).abs() < 1e-12);
        let before = out.tube.interval(0, 0.0);
        assert!((before.0 - 3.05).abs() < 1e-12 && (before.1 - 3.95).abs() < 1e-12);
        let after = out.tube.interval(0, 8.5);
        assert!((after.0 - 3.05).abs() < 1e-12 && (after.1 - 3.95).abs() < 1e-12);
        assert!(verify_stt(&out.tube, &t, params.dt(), params.margin).ok());
    }

    #[test]
    fn entry_on_the_start_face_is_rejected() {
        let t = task(
            vec![bx(&[1.0, 2.5], &[2.0, 3.0])],
            vec![bx(&[3.0, 0.0], &[4.0, 0.5])],
            vec![],
            bx(&[0.0, 0.0], &[5.0, 3.5]),
        );
        let params = SynthParams::default();
        assert!(matches!(
            synthesize_stt(&t, &[1.0, 2.75], &params),
            Err(TubeError::EntryOutsideStart(_))
        ));
        assert!(matches!(
            synthesize_stt(&t, &[4.9, 0.1], &params),
            Err(TubeError::EntryOutsideStart(_))
        ));
    }

    #[test]
    fn full_height_wall_admits_no_corridor() {
        let t = task(
            vec![bx(&[0.2, 1.0], &[1.2, 2.0])],
            vec![bx(&[4.3, 1.0], &[4.8, 2.0])],
            vec![bx(&[2.0, 0.0], &[4.0, 3.5])],
            bx(&[0.0, 0.0], &[5.0, 3.5]),
        );
        let params = SynthParams {
            t_c: 9.0,
            ..SynthParams::default()
        };
        assert!(matches!(
            synthesize_stt(&t, &[0.7, 1.5], &params),
            Err(TubeError::NoCorridor { .. })
        ));
    }

    #[test]
    fn tail_conflict_aborts_synthesis() {
        // an avoid box inside the target: the settled tube can never clear it
        let t = task(
            vec![bx(&[1.0, 2.5], &[2.0, 3.0])],
            vec![bx(&[3.0, 0.0], &[4.0, 0.5])],
            vec![bx(&[3.2, 0.1], &[3.6, 0.3])],
            bx(&[0.0, 0.0], &[5.0, 3.5]),
        );
        let params = SynthParams {
            t_c: 9.0,
            ..SynthParams::default()
        };
        assert!(matches!(
            synthesize_stt(&t, &[1.5, 2.75], &params),
            Err(TubeError::Unresolvable(_))
        ));
    }
}
