//! Experimental quantities from observational data when the caller asserts
//! that `{C}` satisfies the back-door criterion. Inside a single stratum
//! `c` the adjustment sum collapses to conditioning:
//! `P(y_x|c) = P(y|x,c)` and `P(z_x|c) = P(z|x,c)`.
//!
//! The assertion cannot be checked from data; it is an explicit argument.

use thiserror::Error;

use crate::model::{
    Arm, BaselineInput, JointTable, ObsTable, Outcome, PartialMediatorInput, PureMediatorInput,
    ValidationError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdjustmentError {
    #[error("conditioning event {0} has probability zero")]
    ZeroConditioningEvent(String),
    #[error("back-door criterion not asserted; experimental data is required")]
    BackdoorNotAsserted,
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

/// `P(v | x_arm, c)` from the joint cells `P(x_arm, v | c)` over every value
/// `v` of the target variable.
pub fn backdoor_point(arm_cells: &[f64], target: usize) -> Result<f64, AdjustmentError> {
    let total: f64 = arm_cells.iter().sum();
    if total <= 0.0 {
        return Err(AdjustmentError::ZeroConditioningEvent("X = arm".into()));
    }
    Ok(arm_cells[target] / total)
}

/// `P(y_arm | c) := P(y | arm, c)`.
pub fn backdoor_outcome(obs: &ObsTable, arm: Arm) -> Result<f64, AdjustmentError> {
    let cells = [
        obs.cell(arm, Outcome::Success),
        obs.cell(arm, Outcome::Failure),
    ];
    backdoor_point(&cells, 0).map_err(|_| zero_arm(arm))
}

/// `z -> P(z_arm | c) := P(z | arm, c)`.
pub fn backdoor_mediator(obs: &JointTable, arm: Arm) -> Result<Vec<f64>, AdjustmentError> {
    let cells: Vec<f64> = (0..obs.k()).map(|z| obs.arm_z(arm, z)).collect();
    (0..obs.k())
        .map(|z| backdoor_point(&cells, z).map_err(|_| zero_arm(arm)))
        .collect()
}

fn zero_arm(arm: Arm) -> AdjustmentError {
    let name = match arm {
        Arm::Treated => "X = x",
        Arm::Control => "X = x'",
    };
    AdjustmentError::ZeroConditioningEvent(name.into())
}

/// Fills every experimental field of a partial-mediator input from the
/// observational joint.
pub fn assemble_partial_mediator(
    obs: &JointTable,
    backdoor: bool,
) -> Result<PartialMediatorInput, AdjustmentError> {
    if !backdoor {
        return Err(AdjustmentError::BackdoorNotAsserted);
    }
    let margin = obs.xy_margin();
    Ok(PartialMediatorInput {
        p_y_do_x: backdoor_outcome(&margin, Arm::Treated)?,
        p_y_do_xp: backdoor_outcome(&margin, Arm::Control)?,
        p_z_do_x: backdoor_mediator(obs, Arm::Treated)?,
        p_z_do_xp: backdoor_mediator(obs, Arm::Control)?,
        obs: obs.clone(),
    })
}

pub fn assemble_pure_mediator(
    obs: &JointTable,
    backdoor: bool,
) -> Result<PureMediatorInput, AdjustmentError> {
    if !backdoor {
        return Err(AdjustmentError::BackdoorNotAsserted);
    }
    let margin = obs.xy_margin();
    Ok(PureMediatorInput {
        p_y_do_x: backdoor_outcome(&margin, Arm::Treated)?,
        p_y_do_xp: backdoor_outcome(&margin, Arm::Control)?,
        obs: obs.clone(),
    })
}

pub fn assemble_baseline(obs: &ObsTable, backdoor: bool) -> Result<BaselineInput, AdjustmentError> {
    if !backdoor {
        return Err(AdjustmentError::BackdoorNotAsserted);
    }
    Ok(BaselineInput {
        p_y_do_x: backdoor_outcome(obs, Arm::Treated)?,
        p_y_do_xp: backdoor_outcome(obs, Arm::Control)?,
        obs: *obs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::EPS_SUM;

    fn drug() -> JointTable {
        let counts = [[[375.0, 30.0], [17.0, 166.0]], [[159.0, 322.0], [3.0, 3.0]]];
        JointTable::from_fn(2, |arm, z, y| counts[arm.index()][z][y.index()] / 1075.0)
    }

    #[test]
    fn drug_experimentals() {
        let input = assemble_partial_mediator(&drug(), true).unwrap();
        assert!((input.p_y_do_x - 392.0 / 588.0).abs() < 1e-15);
        assert!((input.p_y_do_x - 0.66666).abs() < 1e-5);
        assert!((input.p_y_do_xp - 0.33265).abs() < 5e-6);
        assert!((input.p_z_do_x[0] - 0.68878).abs() < 5e-6);
        assert!((input.p_z_do_xp[1] - 6.0 / 487.0).abs() < 1e-15);
        assert!((input.p_z_do_xp[1] - 0.01232).abs() < 5e-6);
        assert_eq!(input.validate(EPS_SUM), Ok(()));
    }

    #[test]
    fn deterministic_obs() {
        let obs = ObsTable {
            p_xy: 1.0,
            p_xyp: 0.0,
            p_xpy: 0.0,
            p_xpyp: 0.0,
        };
        assert_eq!(backdoor_outcome(&obs, Arm::Treated), Ok(1.0));
        assert!(matches!(
            backdoor_outcome(&obs, Arm::Control),
            Err(AdjustmentError::ZeroConditioningEvent(_))
        ));
    }

    #[test]
    fn independent_treatment_gives_marginals() {
        // X independent of (Z, Y): P(x) = 0.3, P(z, y) table shared
        let zy = [[0.1, 0.2], [0.4, 0.3]];
        let obs = JointTable::from_fn(2, |arm, z, y| {
            let px = if arm == Arm::Treated { 0.3 } else { 0.7 };
            px * zy[z][y.index()]
        });
        let input = assemble_partial_mediator(&obs, true).unwrap();
        assert!((input.p_y_do_x - 0.5).abs() < 1e-15);
        assert!((input.p_y_do_xp - 0.5).abs() < 1e-15);
        assert!((input.p_z_do_x[0] - 0.3).abs() < 1e-15);
        assert!((input.p_z_do_xp[1] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn requires_assertion() {
        assert_eq!(
            assemble_partial_mediator(&drug(), false),
            Err(AdjustmentError::BackdoorNotAsserted)
        );
    }
}
