//! Three-wheeled omnidirectional mobile robot, velocity-actuated.
//!
//! State is planar position and heading. Wheel inputs map to body-frame
//! velocities through the inverse wheel geometry, an input gain, and a
//! selectable body coupling matrix; the heading rotates the body frame into
//! the world frame. The disturbance enters as a world-frame velocity.

use serde::Deserialize;

use super::{check_shapes, Dynamics, PlantError};

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OmniParams {
    /// Wheel rolling directions, radians in the body frame.
    pub wheel_angles: Vec<f64>,
    /// Distance from the body center to each wheel.
    pub arm_length: f64,
    /// Scalar input gain applied to every wheel.
    pub input_gain: f64,
    /// `identity`, or `gain_aligned` for the coupling that reduces the
    /// input map to the gain times the heading rotation.
    pub body_matrix: String,
}

impl Default for OmniParams {
    fn default() -> OmniParams {
        OmniParams {
            wheel_angles: vec![
                std::f64::consts::PI,
                -std::f64::consts::FRAC_PI_3,
                2.0 * std::f64::consts::FRAC_PI_3,
            ],
            arm_length: 0.2,
            input_gain: 0.05,
            body_matrix: "identity".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OmniRobot {
    /// Precomputed input map from wheel inputs to body-frame velocities.
    map: [[f64; 3]; 3],
}

fn invert3(a: &[[f64; 3]; 3], label: &str) -> Result<[[f64; 3]; 3], PlantError> {
    let mut m = *a;
    let mut inv = [[0.0; 3]; 3];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for col in 0..3 {
        let pivot_row = (col..3)
            .max_by(|&r, &s| m[r][col].abs().total_cmp(&m[s][col].abs()))
            .unwrap();
        if m[pivot_row][col].abs() < 1e-12 {
            return Err(PlantError::Singular(label.to_string()));
        }
        m.swap(col, pivot_row);
        inv.swap(col, pivot_row);
        let pivot = m[col][col];
        for j in 0..3 {
            m[col][j] /= pivot;
            inv[col][j] /= pivot;
        }
        for row in 0..3 {
            if row != col {
                let factor = m[row][col];
                for j in 0..3 {
                    m[row][j] -= factor * m[col][j];
                    inv[row][j] -= factor * inv[col][j];
                }
            }
        }
    }
    Ok(inv)
}

fn matmul3(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

impl OmniRobot {
    pub fn from_params(table: &toml::Table) -> Result<OmniRobot, PlantError> {
        let params: OmniParams = toml::Value::Table(table.clone())
            .try_into()
            .map_err(|e| PlantError::Params(e.to_string()))?;
        if params.wheel_angles.len() != 3 {
            return Err(PlantError::Params(format!(
                "exactly three wheel angles required, got {}",
                params.wheel_angles.len()
            )));
        }
        if params.arm_length <= 0.0 || params.input_gain <= 0.0 {
            return Err(PlantError::Params(
                "arm length and input gain must be positive".into(),
            ));
        }
        let mut geometry = [[0.0; 3]; 3];
        for (i, phi) in params.wheel_angles.iter().enumerate() {
            geometry[i] = [-phi.sin(), phi.cos(), params.arm_length];
        }
        let geometry_inv = invert3(&geometry, "wheel geometry")?;
        let coupling_t_inv = match params.body_matrix.as_str() {
            "identity" => {
                let mut id = [[0.0; 3]; 3];
                for (i, row) in id.iter_mut().enumerate() {
                    row[i] = 1.0;
                }
                id
            }
            // coupling = (geometry^-1)^T, so its transpose inverse is the
            // geometry itself
            "gain_aligned" => geometry,
            other => {
                return Err(PlantError::Params(format!(
                    "unknown body matrix `{other}`, expected `identity` or `gain_aligned`"
                )))
            }
        };
        let mut map = matmul3(&geometry_inv, &coupling_t_inv);
        for row in map.iter_mut() {
            for v in row.iter_mut() {
                *v *= params.input_gain;
            }
        }
        Ok(OmniRobot { map })
    }

    /// The precomputed map from wheel inputs to body-frame velocities.
    pub fn input_map(&self) -> &[[f64; 3]; 3] {
        &self.map
    }
}

impl Dynamics for OmniRobot {
    fn kind(&self) -> &'static str {
        "omni_robot"
    }

    fn state_dimension(&self) -> usize {
        3
    }

    fn input_dimension(&self) -> usize {
        3
    }

    fn output_dimension(&self) -> usize {
        3
    }

    fn stages(&self) -> usize {
        1
    }

    fn derivative(&self, x: &[f64], u: &[f64], w: &[f64]) -> Result<Vec<f64>, PlantError> {
        check_shapes(self, x, u, w)?;
        let body: Vec<f64> = self
            .map
            .iter()
            .map(|row| row.iter().zip(u.iter()).map(|(a, b)| a * b).sum())
            .collect();
        let (c, s) = (x[2].cos(), x[2].sin());
        Ok(vec![
            c * body[0] - s * body[1] + w[0],
            s * body[0] + c * body[1] + w[1],
            body[2] + w[2],
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_inverse_matches_hand_values() {
        let plant = OmniRobot::from_params(&toml::Table::new()).unwrap();
        // with identity coupling the map is the geometry inverse times the
        // input gain
        let expected = [
            [0.5773502691896256, 0.28867513459481287, -0.8660254037844386],
            [-1.0, 0.5, 0.5],
            [0.0, 2.5, 2.5],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (plant.input_map()[i][j] - 0.05 * expected[i][j]).abs() < 1e-12,
                    "map[{i}][{j}] = {}",
                    plant.input_map()[i][j]
                );
            }
        }
    }

    #[test]
    fn equal_wheel_speeds_spin_in_place() {
        let plant = OmniRobot::from_params(&toml::Table::new()).unwrap();
        let dx = plant
            .derivative(&[1.0, 2.0, 0.7], &[1.0, 1.0, 1.0], &[0.0, 0.0, 0.0])
            .unwrap();
        assert!(dx[0].abs() < 1e-12 && dx[1].abs() < 1e-12);
        assert!((dx[2] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn aligned_coupling_reduces_to_a_rotated_gain() {
        let table: toml::Table = toml::from_str(r#"body_matrix = "gain_aligned""#).unwrap();
        let plant = OmniRobot::from_params(&table).unwrap();
        let u = [1.0, 1.0, 1.0];
        let dx0 = plant.derivative(&[0.0, 0.0, 0.0], &u, &[0.0; 3]).unwrap();
        for v in &dx0 {
            assert!((v - 0.05).abs() < 1e-9);
        }
        let theta = std::f64::consts::FRAC_PI_6;
        let dx = plant.derivative(&[0.0, 0.0, theta], &u, &[0.0; 3]).unwrap();
        let (c, s) = (theta.cos(), theta.sin());
        assert!((dx[0] - 0.05 * (c - s)).abs() < 1e-9);
        assert!((dx[1] - 0.05 * (s + c)).abs() < 1e-9);
        assert!((dx[2] - 0.05).abs() < 1e-9);
    }

    #[test]
    fn degenerate_wheel_layout_is_rejected() {
        let table: toml::Table = toml::from_str("wheel_angles = [0.3, 0.3, 0.3]").unwrap();
        assert!(matches!(
            OmniRobot::from_params(&table),
            Err(PlantError::Singular(_))
        ));
    }

    #[test]
    fn disturbance_is_a_world_frame_velocity() {
        let plant = OmniRobot::from_params(&toml::Table::new()).unwrap();
        let dx = plant
            .derivative(&[0.0, 0.0, 1.1], &[0.0, 0.0, 0.0], &[0.1, -0.2, 0.05])
            .unwrap();
        assert_eq!(dx, vec![0.1, -0.2, 0.05]);
    }
}
