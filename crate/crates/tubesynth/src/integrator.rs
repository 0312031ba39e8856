//! Fixed-step fourth-order Runge-Kutta integration.

use crate::plants::PlantError;

/// Advance the state one step of size `dt` under the vector field `f`. The
/// inputs are held constant over the step, so `f` sees only the state. Any
/// non-finite component in the result aborts the step.
pub fn rk4_step<F>(f: F, x: &[f64], dt: f64) -> Result<Vec<f64>, PlantError>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, PlantError>,
{
    let n = x.len();
    let k1 = f(x)?;
    let mut probe: Vec<f64> = (0..n).map(|i| x[i] + 0.5 * dt * k1[i]).collect();
    let k2 = f(&probe)?;
    for i in 0..n {
        probe[i] = x[i] + 0.5 * dt * k2[i];
    }
    let k3 = f(&probe)?;
    for i in 0..n {
        probe[i] = x[i] + dt * k3[i];
    }
    let k4 = f(&probe)?;
    let mut next = Vec::with_capacity(n);
    for i in 0..n {
        let v = x[i] + dt * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
        if !v.is_finite() {
            return Err(PlantError::NonFinite(format!(
                "state component {i} after an integration step"
            )));
        }
        next.push(v);
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_field(x: &[f64]) -> Result<Vec<f64>, PlantError> {
        Ok(x.to_vec())
    }

    #[test]
    fn one_step_of_the_exponential_matches_hand_value() {
        let next = rk4_step(exp_field, &[1.0], 0.1).unwrap();
        assert!((next[0] - 1.1051708333333334).abs() < 1e-12);
        assert!((next[0] - (0.1f64).exp()).abs() <= 1e-7);
    }

    #[test]
    fn observed_convergence_order_is_four() {
        let run = |dt: f64| -> f64 {
            let steps = (1.0 / dt).round() as usize;
            let mut x = vec![1.0];
            for _ in 0..steps {
                x = rk4_step(exp_field, &x, dt).unwrap();
            }
            (x[0] - 1.0f64.exp()).abs()
        };
        let order = (run(0.1) / run(0.05)).log2();
        assert!(
            (3.7..=4.3).contains(&order),
            "observed order {order} outside [3.7, 4.3]"
        );
    }

    #[test]
    fn non_finite_states_abort() {
        let blow_up = |_: &[f64]| Ok(vec![f64::INFINITY]);
        assert!(matches!(
            rk4_step(blow_up, &[1.0], 0.1),
            Err(PlantError::NonFinite(_))
        ));
    }

    #[test]
    fn harmonic_oscillator_stays_on_its_circle() {
        let field = |x: &[f64]| Ok(vec![x[1], -x[0]]);
        let mut x = vec![1.0, 0.0];
        for _ in 0..10_000 {
            x = rk4_step(field, &x, 1e-3).unwrap();
        }
        let radius = (x[0] * x[0] + x[1] * x[1]).sqrt();
        assert!((radius - 1.0).abs() < 1e-9);
    }
}
