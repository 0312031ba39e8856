//! Runtime that stitches tubes and funnels into one hybrid controller.
//!
//! The controller owns the switching machine and one reach-avoid task per
//! triplet.  At any moment exactly one task is active: a tube synthesized
//! from the output measured when the task began, and a funnel chain
//! anchored at the same moment.  Once the output is deep enough inside a
//! target region of the active task, the controller advances the switcher,
//! synthesizes the next tube from the current output, and re-anchors the
//! funnels; time inside tube and funnel profiles restarts from zero.

use thiserror::Error;

use crate::automaton::Switcher;
use crate::controller::{
    anchor_funnels, compute_control, ControllerError, Funnel, FunnelSettings,
};
use crate::tubes::{synthesize_stt, SynthParams, Tube, TubeError};
use crate::workspace::RaTask;

#[derive(Debug, Error)]
pub enum HybridError {
    #[error("hybrid controller shape error: {0}")]
    Shape(String),
    #[error(transparent)]
    Tube(#[from] TubeError),
    #[error(transparent)]
    Controller(#[from] ControllerError),
}

/// When to advance to the next task: the output must sit inside a target
/// region with per-dimension clearance at least `depth` times the smaller
/// of the region halfwidth and the current tube's final halfwidth.
///
/// Switching exactly at first boundary contact would start the next tube
/// from a face, where the entry box collapses; the depth requirement keeps
/// every handoff strictly interior.
#[derive(Debug, Clone, Copy)]
pub struct SwitchingPolicy {
    pub depth: f64,
}

impl Default for SwitchingPolicy {
    fn default() -> SwitchingPolicy {
        SwitchingPolicy { depth: 0.35 }
    }
}

/// One advance of the switching machine, for the event log.
#[derive(Debug, Clone)]
pub struct SwitchEvent {
    pub time: f64,
    pub from_index: usize,
    pub to_index: usize,
    pub output: Vec<f64>,
}

/// Everything one runtime evaluation produces.
#[derive(Debug, Clone)]
pub struct HybridStep {
    pub u: Vec<f64>,
    /// Normalized per-stage errors, outermost stage first.
    pub stage_errors: Vec<Vec<f64>>,
    /// Active tube bounds at this instant.
    pub tube_lower: Vec<f64>,
    pub tube_upper: Vec<f64>,
    /// Index of the active triplet in the switcher sequence.
    pub triplet_index: usize,
    /// True when this evaluation advanced the switcher.
    pub switched: bool,
}

pub struct HybridController {
    switcher: Switcher,
    tasks: Vec<RaTask>,
    kappa: Vec<f64>,
    settings: FunnelSettings,
    synth: Vec<SynthParams>,
    policy: SwitchingPolicy,
    output_dim: usize,
    index: usize,
    anchor_time: f64,
    tube: Tube,
    funnels: Vec<Vec<Funnel>>,
    events: Vec<SwitchEvent>,
}

impl HybridController {
    /// Build the runtime and arm the first task from the initial state.
    ///
    /// `tasks` and `synth` are indexed like `switcher.sequence`; the first
    /// `output_dim` components of `x0` are the measured output, which must
    /// lie inside the first task's start region.
    pub fn new(
        switcher: Switcher,
        tasks: Vec<RaTask>,
        kappa: Vec<f64>,
        settings: FunnelSettings,
        synth: Vec<SynthParams>,
        policy: SwitchingPolicy,
        x0: &[f64],
        t0: f64,
    ) -> Result<HybridController, HybridError> {
        if tasks.is_empty() || tasks.len() != switcher.sequence.len() {
            return Err(HybridError::Shape(format!(
                "{} tasks for {} switcher entries",
                tasks.len(),
                switcher.sequence.len()
            )));
        }
        if synth.len() != tasks.len() {
            return Err(HybridError::Shape(format!(
                "{} synthesis parameter sets for {} tasks",
                synth.len(),
                tasks.len()
            )));
        }
        let output_dim = tasks[0].bounds.dimension();
        if kappa.is_empty() || x0.len() != kappa.len() * output_dim {
            return Err(HybridError::Shape(format!(
                "state has {} components, expected {} stages x {} outputs",
                x0.len(),
                kappa.len().max(1),
                output_dim
            )));
        }
        let outcome = synthesize_stt(&tasks[0], &x0[..output_dim], &synth[0])?;
        let b0 = outcome.tube.box_at(0.0);
        let funnels = anchor_funnels(&kappa, x0, &b0.lower, &b0.upper, &settings, t0)?;
        Ok(HybridController {
            switcher,
            tasks,
            kappa,
            settings,
            synth,
            policy,
            output_dim,
            index: 0,
            anchor_time: t0,
            tube: outcome.tube,
            funnels,
            events: Vec::new(),
        })
    }

    pub fn triplet_index(&self) -> usize {
        self.index
    }

    pub fn events(&self) -> &[SwitchEvent] {
        &self.events
    }

    pub fn output_dimension(&self) -> usize {
        self.output_dim
    }

    pub fn stages(&self) -> usize {
        self.kappa.len()
    }

    /// The tube currently being tracked.
    pub fn active_tube(&self) -> &Tube {
        &self.tube
    }

    fn should_switch(&self, y: &[f64]) -> bool {
        let tail = self.tube.end_box();
        let tail_hw = tail.halfwidths();
        self.tasks[self.index].target.iter().any(|region| {
            let hw = region.halfwidths();
            (0..self.output_dim).all(|d| {
                let clearance = (y[d] - region.lower[d]).min(region.upper[d] - y[d]);
                clearance >= self.policy.depth * hw[d].min(tail_hw[d])
            })
        })
    }

    /// Evaluate the controller at absolute time `t` and full state `x`,
    /// advancing the switcher first when the output is deep enough inside
    /// the active target.
    pub fn control(&mut self, t: f64, x: &[f64]) -> Result<HybridStep, HybridError> {
        if x.len() != self.kappa.len() * self.output_dim {
            return Err(HybridError::Shape(format!(
                "state has {} components, expected {}",
                x.len(),
                self.kappa.len() * self.output_dim
            )));
        }
        let y = &x[..self.output_dim];
        let mut switched = false;
        if self.should_switch(y) {
            let from = self.index;
            self.index = self.switcher.next_index(from);
            let outcome = synthesize_stt(&self.tasks[self.index], y, &self.synth[self.index])?;
            let b0 = outcome.tube.box_at(0.0);
            self.funnels =
                anchor_funnels(&self.kappa, x, &b0.lower, &b0.upper, &self.settings, t)?;
            self.tube = outcome.tube;
            self.anchor_time = t;
            self.events.push(SwitchEvent {
                time: t,
                from_index: from,
                to_index: self.index,
                output: y.to_vec(),
            });
            switched = true;
        }
        let tau = t - self.anchor_time;
        let b = self.tube.box_at(tau);
        let ctl = compute_control(&self.kappa, x, &b.lower, &b.upper, &self.funnels, tau, t)?;
        Ok(HybridStep {
            u: ctl.u,
            stage_errors: ctl.stage_errors,
            tube_lower: b.lower,
            tube_upper: b.upper,
            triplet_index: self.index,
            switched,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::rk4_step;
    use crate::plants::build_plant;
    use crate::testutil::{patrol as patrol3, PATROL_PLANT};
    use crate::workspace::RaTask;

    fn patrol() -> (Switcher, Vec<RaTask>) {
        let (switcher, tasks, _) = patrol3();
        (switcher, tasks)
    }

    fn drive(
        hybrid: &mut HybridController,
        x: &mut Vec<f64>,
        t0: f64,
        duration: f64,
        dt: f64,
    ) -> f64 {
        let plant = build_plant(
            "generic",
            &toml::from_str(PATROL_PLANT)
                .unwrap(),
        )
        .unwrap();
        let steps = (duration / dt).round() as usize;
        let mut sup_e = 0.0f64;
        for k in 0..steps {
            let t = t0 + k as f64 * dt;
            let step = hybrid.control(t, x).expect("control");
            sup_e = sup_e.max(step.stage_errors[0][0].abs());
            *x = rk4_step(|s| plant.derivative(s, &step.u, &[0.0]), x, dt).unwrap();
        }
        sup_e
    }

    #[test]
    fn patrol_alternates_between_the_two_regions() {
        let (switcher, tasks) = patrol();
        let n = tasks.len();
        assert_eq!(n, 3);
        let params = vec![
            SynthParams {
                t_c: 4.0,
                ..SynthParams::default()
            };
            n
        ];
        let mut hybrid = HybridController::new(
            switcher,
            tasks,
            vec![2.0],
            FunnelSettings::default(),
            params,
            SwitchingPolicy::default(),
            &[0.5],
            0.0,
        )
        .unwrap();
        let mut x = vec![0.5];
        let sup_e = drive(&mut hybrid, &mut x, 0.0, 30.0, 1e-3);
        assert!(sup_e < 1.0, "output left the tube: sup |e| = {sup_e}");
        let events = hybrid.events();
        assert!(events.len() >= 4, "only {} switches in 30s", events.len());
        // indices advance 0 -> 1 -> 2 -> 1 -> 2 ... (cycle start 1)
        assert_eq!(events[0].from_index, 0);
        assert_eq!(events[0].to_index, 1);
        for pair in events.windows(2) {
            assert_eq!(pair[1].from_index, pair[0].to_index);
        }
        for e in &events[1..] {
            let expected = if e.from_index == 1 { 2 } else { 1 };
            assert_eq!(e.to_index, expected);
        }
        // each switch happened strictly inside the task's target region
        for e in events {
            let y = e.output[0];
            let inside_a = 0.0 < y && y < 1.0;
            let inside_b = 3.0 < y && y < 4.0;
            assert!(inside_a || inside_b, "switched at {y} outside both regions");
        }
    }

    #[test]
    fn switching_recenters_the_error() {
        let (switcher, tasks) = patrol();
        let n = tasks.len();
        let params = vec![
            SynthParams {
                t_c: 4.0,
                ..SynthParams::default()
            };
            n
        ];
        let mut hybrid = HybridController::new(
            switcher,
            tasks,
            vec![2.0],
            FunnelSettings::default(),
            params,
            SwitchingPolicy::default(),
            &[0.5],
            0.0,
        )
        .unwrap();
        let mut x = vec![0.5];
        let dt = 1e-3;
        let mut t = 0.0;
        let plant = build_plant(
            "generic",
            &toml::from_str(PATROL_PLANT)
                .unwrap(),
        )
        .unwrap();
        loop {
            let step = hybrid.control(t, &x).unwrap();
            if step.switched {
                // entry box is centered on the measured output, so the
                // normalized error restarts at exactly zero
                assert!(step.stage_errors[0][0].abs() < 1e-12);
                break;
            }
            x = rk4_step(|s| plant.derivative(s, &step.u, &[0.0]), &x, dt).unwrap();
            t += dt;
            assert!(t < 20.0, "no switch before t = 20");
        }
    }

    #[test]
    fn leaving_the_tube_is_a_hard_error() {
        let (switcher, tasks) = patrol();
        let n = tasks.len();
        let params = vec![SynthParams::default(); n];
        let mut hybrid = HybridController::new(
            switcher,
            tasks,
            vec![2.0],
            FunnelSettings::default(),
            params,
            SwitchingPolicy::default(),
            &[0.5],
            0.0,
        )
        .unwrap();
        // a point far outside the tube at t = 0 but not inside the target
        let err = hybrid.control(0.0, &[2.0]).unwrap_err();
        assert!(matches!(
            err,
            HybridError::Controller(ControllerError::FunnelViolation { .. })
        ));
    }

    #[test]
    fn construction_validates_shapes() {
        let (switcher, tasks) = patrol();
        let n = tasks.len();
        let params = vec![SynthParams::default(); n];
        // wrong state length for one stage of one output
        assert!(matches!(
            HybridController::new(
                switcher.clone(),
                tasks.clone(),
                vec![2.0],
                FunnelSettings::default(),
                params.clone(),
                SwitchingPolicy::default(),
                &[0.5, 0.0],
                0.0,
            ),
            Err(HybridError::Shape(_))
        ));
        // parameter list length must match the task list
        assert!(matches!(
            HybridController::new(
                switcher.clone(),
                tasks.clone(),
                vec![2.0],
                FunnelSettings::default(),
                vec![SynthParams::default(); n - 1],
                SwitchingPolicy::default(),
                &[0.5],
                0.0,
            ),
            Err(HybridError::Shape(_))
        ));
        // entry outside the first start region surfaces the tube error
        assert!(matches!(
            HybridController::new(
                switcher,
                tasks,
                vec![2.0],
                FunnelSettings::default(),
                params,
                SwitchingPolicy::default(),
                &[2.0],
                0.0,
            ),
            Err(HybridError::Tube(TubeError::EntryOutsideStart(_)))
        ));
    }
}
