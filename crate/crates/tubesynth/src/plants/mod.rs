//! Plant models behind a common dynamics interface.
//!
//! Every plant is a strict-feedback chain: the state divides into stages of
//! equal width, each stage is driven by the next, and the input drives the
//! last, where the disturbance also enters. Plants are built by name from
//! their configuration table, so experiment files select a model without
//! code changes.

pub mod expr;
mod generic;
mod manipulator;
mod omni;

pub use generic::GenericChain;
pub use manipulator::Manipulator2R;
pub use omni::OmniRobot;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlantError {
    #[error("unknown plant type `{0}`")]
    UnknownType(String),
    #[error("plant parameter error: {0}")]
    Params(String),
    #[error("plant geometry is singular: {0}")]
    Singular(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("expression error: {0}")]
    Expr(#[from] expr::ExprError),
}

/// Continuous-time dynamics with held inputs and matched disturbance.
pub trait Dynamics {
    /// Registry name of the model.
    fn kind(&self) -> &'static str;
    fn state_dimension(&self) -> usize;
    fn input_dimension(&self) -> usize;
    /// Width of one stage; the outputs are the first stage of the state.
    fn output_dimension(&self) -> usize;
    fn stages(&self) -> usize;
    /// Time derivative of the state under input `u` and disturbance `w`.
    fn derivative(&self, x: &[f64], u: &[f64], w: &[f64]) -> Result<Vec<f64>, PlantError>;
}

/// Build a plant by registry name from its parameter table.
pub fn build_plant(kind: &str, params: &toml::Table) -> Result<Box<dyn Dynamics>, PlantError> {
    match kind {
        "manipulator_2r" => Ok(Box::new(Manipulator2R::from_params(params)?)),
        "omni_robot" => Ok(Box::new(OmniRobot::from_params(params)?)),
        "generic" => Ok(Box::new(GenericChain::from_params(params)?)),
        other => Err(PlantError::UnknownType(other.to_string())),
    }
}

pub(crate) fn check_shapes(
    plant: &dyn Dynamics,
    x: &[f64],
    u: &[f64],
    w: &[f64],
) -> Result<(), PlantError> {
    if x.len() != plant.state_dimension() {
        return Err(PlantError::Dimension(format!(
            "state has {} components, expected {}",
            x.len(),
            plant.state_dimension()
        )));
    }
    if u.len() != plant.input_dimension() {
        return Err(PlantError::Dimension(format!(
            "input has {} components, expected {}",
            u.len(),
            plant.input_dimension()
        )));
    }
    if w.len() != plant.output_dimension() {
        return Err(PlantError::Dimension(format!(
            "disturbance has {} components, expected {}",
            w.len(),
            plant.output_dimension()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_builds_each_kind_by_name() {
        let empty = toml::Table::new();
        let m = build_plant("manipulator_2r", &empty).unwrap();
        assert_eq!(m.kind(), "manipulator_2r");
        assert_eq!((m.state_dimension(), m.stages()), (4, 2));

        let o = build_plant("omni_robot", &empty).unwrap();
        assert_eq!(o.kind(), "omni_robot");
        assert_eq!((o.state_dimension(), o.stages()), (3, 1));

        let g: toml::Table = toml::from_str(
            r#"
            outputs = 1
            stages = 2
            drift = [["0"], ["0"]]
            gain = [["1"], ["1"]]
            "#,
        )
        .unwrap();
        let g = build_plant("generic", &g).unwrap();
        assert_eq!(g.kind(), "generic");
        assert_eq!((g.state_dimension(), g.stages()), (2, 2));

        assert!(matches!(
            build_plant("quadrotor", &empty),
            Err(PlantError::UnknownType(_))
        ));
    }
}
