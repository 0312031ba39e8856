//! Planar two-revolute-joint manipulator with uniform thin-rod links.
//!
//! State is joint angles then joint velocities; inputs are joint torques,
//! and the disturbance enters as extra torque. Centers of mass sit at the
//! link midpoints and rotational inertia is the thin-rod value, which makes
//! the mass matrix symmetric and the unforced zero-gravity motion
//! energy-conserving.

use serde::Deserialize;

use super::{check_shapes, Dynamics, PlantError};

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManipulatorParams {
    pub m1: f64,
    pub m2: f64,
    pub l1: f64,
    pub l2: f64,
    pub gravity: f64,
}

impl Default for ManipulatorParams {
    fn default() -> ManipulatorParams {
        ManipulatorParams {
            m1: 1.0,
            m2: 1.0,
            l1: 1.0,
            l2: 1.0,
            gravity: 9.81,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Manipulator2R {
    params: ManipulatorParams,
}

impl Manipulator2R {
    pub fn from_params(table: &toml::Table) -> Result<Manipulator2R, PlantError> {
        let params: ManipulatorParams = toml::Value::Table(table.clone())
            .try_into()
            .map_err(|e| PlantError::Params(e.to_string()))?;
        if params.m1 <= 0.0 || params.m2 <= 0.0 || params.l1 <= 0.0 || params.l2 <= 0.0 {
            return Err(PlantError::Params(
                "masses and link lengths must be positive".into(),
            ));
        }
        Ok(Manipulator2R { params })
    }

    fn mass_matrix(&self, c2: f64) -> (f64, f64, f64) {
        let p = &self.params;
        let (lc1, lc2) = (p.l1 / 2.0, p.l2 / 2.0);
        let (i1, i2) = (p.m1 * p.l1 * p.l1 / 12.0, p.m2 * p.l2 * p.l2 / 12.0);
        let m11 = p.m1 * lc1 * lc1
            + p.m2 * (p.l1 * p.l1 + lc2 * lc2 + 2.0 * p.l1 * lc2 * c2)
            + i1
            + i2;
        let m12 = p.m2 * (lc2 * lc2 + p.l1 * lc2 * c2) + i2;
        let m22 = p.m2 * lc2 * lc2 + i2;
        (m11, m12, m22)
    }

    /// Total mechanical energy; with gravity zero this is kinetic only and
    /// is conserved by the unforced dynamics.
    pub fn energy(&self, x: &[f64]) -> f64 {
        let p = &self.params;
        let (q1, q2, w1, w2) = (x[0], x[1], x[2], x[3]);
        let (m11, m12, m22) = self.mass_matrix(q2.cos());
        let kinetic = 0.5 * (m11 * w1 * w1 + 2.0 * m12 * w1 * w2 + m22 * w2 * w2);
        let (lc1, lc2) = (p.l1 / 2.0, p.l2 / 2.0);
        let potential = (p.m1 * lc1 + p.m2 * p.l1) * p.gravity * q1.sin()
            + p.m2 * lc2 * p.gravity * (q1 + q2).sin();
        kinetic + potential
    }
}

impl Dynamics for Manipulator2R {
    fn kind(&self) -> &'static str {
        "manipulator_2r"
    }

    fn state_dimension(&self) -> usize {
        4
    }

    fn input_dimension(&self) -> usize {
        2
    }

    fn output_dimension(&self) -> usize {
        2
    }

    fn stages(&self) -> usize {
        2
    }

    fn derivative(&self, x: &[f64], u: &[f64], w: &[f64]) -> Result<Vec<f64>, PlantError> {
        check_shapes(self, x, u, w)?;
        let p = &self.params;
        let (q1, q2, w1, w2) = (x[0], x[1], x[2], x[3]);
        let (c2, s2) = (q2.cos(), q2.sin());
        let (m11, m12, m22) = self.mass_matrix(c2);

        let (lc1, lc2) = (p.l1 / 2.0, p.l2 / 2.0);
        let h = p.m2 * p.l1 * lc2 * s2;
        let coriolis1 = -h * w2 * (2.0 * w1 + w2);
        let coriolis2 = h * w1 * w1;
        let g1 = (p.m1 * lc1 + p.m2 * p.l1) * p.gravity * q1.cos()
            + p.m2 * lc2 * p.gravity * (q1 + q2).cos();
        let g2 = p.m2 * lc2 * p.gravity * (q1 + q2).cos();

        let rhs1 = u[0] + w[0] - coriolis1 - g1;
        let rhs2 = u[1] + w[1] - coriolis2 - g2;
        let det = m11 * m22 - m12 * m12;
        if det.abs() < 1e-12 {
            return Err(PlantError::Singular("mass matrix".into()));
        }
        let a1 = (m22 * rhs1 - m12 * rhs2) / det;
        let a2 = (m11 * rhs2 - m12 * rhs1) / det;
        Ok(vec![w1, w2, a1, a2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::rk4_step;

    #[test]
    fn acceleration_at_rest_matches_hand_solve() {
        let plant = Manipulator2R::from_params(&toml::Table::new()).unwrap();
        let dx = plant
            .derivative(&[0.0, 0.0, 0.0, 0.0], &[0.0, 0.0], &[0.0, 0.0])
            .unwrap();
        assert_eq!(&dx[..2], &[0.0, 0.0]);
        assert!((dx[2] - (-12.61285714285715)).abs() < 1e-9, "got {}", dx[2]);
        assert!((dx[3] - 16.817142857142876).abs() < 1e-9, "got {}", dx[3]);
    }

    #[test]
    fn zero_gravity_swing_conserves_energy() {
        let table: toml::Table = toml::from_str("gravity = 0.0").unwrap();
        let plant = Manipulator2R::from_params(&table).unwrap();
        let mut x = vec![0.3, 0.4, 0.7, -0.2];
        let e0 = plant.energy(&x);
        let dt = 1e-4;
        for _ in 0..100_000 {
            x = rk4_step(
                |x| plant.derivative(x, &[0.0, 0.0], &[0.0, 0.0]),
                &x,
                dt,
            )
            .unwrap();
        }
        let drift = (plant.energy(&x) - e0).abs() / e0.abs();
        assert!(drift < 1e-4, "relative energy drift {drift}");
    }

    #[test]
    fn power_balance_holds_under_torque() {
        // with gravity off, dE/dt equals the joint power
        let table: toml::Table = toml::from_str("gravity = 0.0").unwrap();
        let plant = Manipulator2R::from_params(&table).unwrap();
        let x = [0.3, -0.7, 0.5, 0.9];
        let u = [0.8, -0.3];
        let dt = 1e-6;
        let next = rk4_step(|x| plant.derivative(x, &u, &[0.0, 0.0]), &x, dt).unwrap();
        let de = (plant.energy(&next) - plant.energy(&x)) / dt;
        let power = x[2] * u[0] + x[3] * u[1];
        assert!((de - power).abs() < 1e-6, "dE/dt {de} vs power {power}");
    }

    #[test]
    fn parameters_reject_unknown_keys_and_bad_values() {
        let typo: toml::Table = toml::from_str("mass1 = 2.0").unwrap();
        assert!(matches!(
            Manipulator2R::from_params(&typo),
            Err(PlantError::Params(_))
        ));
        let negative: toml::Table = toml::from_str("l1 = -1.0").unwrap();
        assert!(matches!(
            Manipulator2R::from_params(&negative),
            Err(PlantError::Params(_))
        ));
    }

    #[test]
    fn disturbance_torque_matches_input_torque() {
        let plant = Manipulator2R::from_params(&toml::Table::new()).unwrap();
        let x = [0.2, 0.4, -0.1, 0.3];
        let via_input = plant.derivative(&x, &[0.5, -0.2], &[0.0, 0.0]).unwrap();
        let via_disturbance = plant.derivative(&x, &[0.0, 0.0], &[0.5, -0.2]).unwrap();
        for (a, b) in via_input.iter().zip(via_disturbance.iter()) {
            assert_eq!(a, b);
        }
    }
}
