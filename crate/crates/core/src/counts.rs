//! Building population data from contingency tables.
//!
//! Both tables are indexed by `(arm, z, outcome)`. In the experimental
//! table the arm is the one units were forced into and `z` is either the
//! stratum (non-descendant covariate) or the mediator value observed after
//! treatment. Cells are counts or unnormalized weights; every probability
//! is a ratio of cell sums, computed before any division.

use thiserror::Error;

use crate::adjustment::{self, AdjustmentError};
use crate::model::{
    Arm, BaselineInput, JointTable, ObsTable, Outcome, PartialMediatorInput, PopulationData,
    PureMediatorInput, StratifiedInput, Stratum, Structure, ValidationError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IngestError {
    #[error("{0} is empty")]
    EmptyTable(String),
    #[error("negative count {value} in {table}")]
    NegativeCount { table: String, value: i64 },
    #[error("{table} has {found} z-values, expected {expected}")]
    ShapeMismatch {
        table: String,
        expected: usize,
        found: usize,
    },
    #[error(transparent)]
    Adjustment(#[from] AdjustmentError),
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

/// Nonnegative weights over `(arm, z, outcome)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellTable {
    k: usize,
    cells: Vec<f64>,
}

impl CellTable {
    pub fn zeros(k: usize) -> Self {
        Self {
            k,
            cells: vec![0.0; 4 * k],
        }
    }

    fn offset(&self, arm: Arm, z: usize, y: Outcome) -> usize {
        (arm.index() * self.k + z) * 2 + y.index()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, arm: Arm, z: usize, y: Outcome) -> f64 {
        self.cells[self.offset(arm, z, y)]
    }

    pub fn set(&mut self, arm: Arm, z: usize, y: Outcome, value: f64) {
        let i = self.offset(arm, z, y);
        self.cells[i] = value;
    }

    fn total(&self) -> f64 {
        self.cells.iter().sum()
    }

    fn arm_total(&self, arm: Arm) -> f64 {
        (0..self.k)
            .map(|z| self.get(arm, z, Outcome::Success) + self.get(arm, z, Outcome::Failure))
            .sum()
    }

    fn row_total(&self, arm: Arm, z: usize) -> f64 {
        self.get(arm, z, Outcome::Success) + self.get(arm, z, Outcome::Failure)
    }

    fn check(&self, name: &str) -> Result<(), IngestError> {
        if let Some(&v) = self.cells.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(IngestError::Invalid(ValidationError::NotAProbability {
                quantity: format!("{name} cell"),
                value: v,
            }));
        }
        if self.total() <= 0.0 {
            return Err(IngestError::EmptyTable(name.to_string()));
        }
        Ok(())
    }

    fn joint(&self) -> JointTable {
        let total = self.total();
        JointTable::from_fn(self.k, |arm, z, y| self.get(arm, z, y) / total)
    }
}

/// Integer counts over `(arm, z, outcome)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CountTable {
    k: usize,
    cells: Vec<i64>,
}

impl CountTable {
    pub fn zeros(k: usize) -> Self {
        Self {
            k,
            cells: vec![0; 4 * k],
        }
    }

    pub fn set(&mut self, arm: Arm, z: usize, y: Outcome, count: i64) {
        self.cells[(arm.index() * self.k + z) * 2 + y.index()] = count;
    }

    pub fn get(&self, arm: Arm, z: usize, y: Outcome) -> i64 {
        self.cells[(arm.index() * self.k + z) * 2 + y.index()]
    }

    pub fn k(&self) -> usize {
        self.k
    }

    fn to_cells(&self, name: &str) -> Result<CellTable, IngestError> {
        if let Some(&value) = self.cells.iter().find(|&&c| c < 0) {
            return Err(IngestError::NegativeCount {
                table: name.to_string(),
                value,
            });
        }
        // counts below 2^53 convert exactly, so ratios match exact fractions
        Ok(CellTable {
            k: self.k,
            cells: self.cells.iter().map(|&c| c as f64).collect(),
        })
    }
}

/// Ingests count tables; see [`from_tables`].
pub fn from_counts(
    structure: Structure,
    experimental: Option<&CountTable>,
    observational: &CountTable,
    backdoor: bool,
    tol: f64,
) -> Result<PopulationData, IngestError> {
    let exp = experimental
        .map(|t| t.to_cells("experimental table"))
        .transpose()?;
    let obs = observational.to_cells("observational table")?;
    from_tables(structure, exp.as_ref(), &obs, backdoor, tol)
}

/// Builds and validates the population data for `structure`. Without an
/// experimental table, `backdoor` must be set and the experimental
/// quantities come from back-door adjustment.
pub fn from_tables(
    structure: Structure,
    experimental: Option<&CellTable>,
    observational: &CellTable,
    backdoor: bool,
    tol: f64,
) -> Result<PopulationData, IngestError> {
    observational.check("observational table")?;
    if let Some(exp) = experimental {
        exp.check("experimental table")?;
        if exp.k() != observational.k() && structure != Structure::Baseline {
            return Err(IngestError::ShapeMismatch {
                table: "experimental table".into(),
                expected: observational.k(),
                found: exp.k(),
            });
        }
    } else if !backdoor {
        return Err(AdjustmentError::BackdoorNotAsserted.into());
    }
    let joint = observational.joint();
    let data = match structure {
        Structure::Baseline => {
            let obs = joint.xy_margin();
            PopulationData::Baseline(match experimental {
                Some(exp) => BaselineInput {
                    p_y_do_x: arm_success_rate(exp, Arm::Treated)?,
                    p_y_do_xp: arm_success_rate(exp, Arm::Control)?,
                    obs,
                },
                None => adjustment::assemble_baseline(&obs, true)?,
            })
        }
        Structure::NonDescendant => {
            PopulationData::Stratified(stratify(experimental, observational)?)
        }
        Structure::PartialMediator => PopulationData::PartialMediator(match experimental {
            Some(exp) => PartialMediatorInput {
                p_y_do_x: arm_success_rate(exp, Arm::Treated)?,
                p_y_do_xp: arm_success_rate(exp, Arm::Control)?,
                p_z_do_x: mediator_dist(exp, Arm::Treated)?,
                p_z_do_xp: mediator_dist(exp, Arm::Control)?,
                obs: joint,
            },
            None => adjustment::assemble_partial_mediator(&joint, true)?,
        }),
        Structure::PureMediator => PopulationData::PureMediator(match experimental {
            Some(exp) => PureMediatorInput {
                p_y_do_x: arm_success_rate(exp, Arm::Treated)?,
                p_y_do_xp: arm_success_rate(exp, Arm::Control)?,
                obs: joint,
            },
            None => adjustment::assemble_pure_mediator(&joint, true)?,
        }),
    };
    data.validate(tol)?;
    Ok(data)
}

fn arm_name(arm: Arm) -> &'static str {
    match arm {
        Arm::Treated => "x",
        Arm::Control => "x'",
    }
}

fn arm_success_rate(exp: &CellTable, arm: Arm) -> Result<f64, IngestError> {
    let total = exp.arm_total(arm);
    if total <= 0.0 {
        return Err(IngestError::EmptyTable(format!(
            "experimental arm do({})",
            arm_name(arm)
        )));
    }
    let success: f64 = (0..exp.k())
        .map(|z| exp.get(arm, z, Outcome::Success))
        .sum();
    Ok(success / total)
}

fn mediator_dist(exp: &CellTable, arm: Arm) -> Result<Vec<f64>, IngestError> {
    let total = exp.arm_total(arm);
    if total <= 0.0 {
        return Err(IngestError::EmptyTable(format!(
            "experimental arm do({})",
            arm_name(arm)
        )));
    }
    Ok((0..exp.k())
        .map(|z| exp.row_total(arm, z) / total)
        .collect())
}

fn stratify(
    experimental: Option<&CellTable>,
    observational: &CellTable,
) -> Result<StratifiedInput, IngestError> {
    let total = observational.total();
    let mut strata = Vec::with_capacity(observational.k());
    for z in 0..observational.k() {
        let stratum_total =
            observational.row_total(Arm::Treated, z) + observational.row_total(Arm::Control, z);
        let weight = stratum_total / total;
        if stratum_total <= 0.0 {
            strata.push(Stratum {
                weight: 0.0,
                p_y_do_x: 0.0,
                p_y_do_xp: 0.0,
                obs: ObsTable {
                    p_xy: 0.0,
                    p_xyp: 0.0,
                    p_xpy: 0.0,
                    p_xpyp: 0.0,
                },
            });
            continue;
        }
        let cell = |arm, y| observational.get(arm, z, y) / stratum_total;
        let obs = ObsTable {
            p_xy: cell(Arm::Treated, Outcome::Success),
            p_xyp: cell(Arm::Treated, Outcome::Failure),
            p_xpy: cell(Arm::Control, Outcome::Success),
            p_xpyp: cell(Arm::Control, Outcome::Failure),
        };
        let rate = |arm: Arm| -> Result<f64, IngestError> {
            match experimental {
                Some(exp) => {
                    let row = exp.row_total(arm, z);
                    if row <= 0.0 {
                        return Err(IngestError::EmptyTable(format!(
                            "experimental row do({}), z{z}",
                            arm_name(arm)
                        )));
                    }
                    Ok(exp.get(arm, z, Outcome::Success) / row)
                }
                None => Ok(adjustment::backdoor_outcome(&obs, arm)?),
            }
        };
        strata.push(Stratum {
            weight,
            p_y_do_x: rate(Arm::Treated)?,
            p_y_do_xp: rate(Arm::Control)?,
            obs,
        });
    }
    Ok(StratifiedInput { strata })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{EPS_SUM, INGEST_TOLERANCE};

    fn table(k: usize, rows: &[(Arm, usize, i64, i64)]) -> CountTable {
        let mut t = CountTable::zeros(k);
        for &(arm, z, yes, no) in rows {
            t.set(arm, z, Outcome::Success, yes);
            t.set(arm, z, Outcome::Failure, no);
        }
        t
    }

    fn company_counts() -> (CountTable, CountTable) {
        use Arm::*;
        let exp = table(
            2,
            &[
                (Treated, 0, 45, 56),
                (Control, 0, 5, 96),
                (Treated, 1, 248, 1),
                (Control, 1, 179, 70),
            ],
        );
        let obs = table(
            2,
            &[
                (Treated, 0, 90, 62),
                (Control, 0, 9, 41),
                (Treated, 1, 157, 2),
                (Control, 1, 239, 100),
            ],
        );
        (exp, obs)
    }

    #[test]
    fn company_young_stratum_from_counts() {
        let (exp, obs) = company_counts();
        let data = from_counts(
            Structure::NonDescendant,
            Some(&exp),
            &obs,
            false,
            INGEST_TOLERANCE,
        )
        .unwrap();
        let PopulationData::Stratified(s) = data else {
            panic!("wrong variant")
        };
        assert_eq!(s.strata[0].p_y_do_x, 45.0 / 101.0);
        assert!((s.strata[0].p_y_do_x - 0.44554).abs() < 5e-6);
        assert_eq!(s.strata[0].weight, 202.0 / 700.0);
    }

    #[test]
    fn drug_cell_from_counts() {
        use Arm::*;
        let obs = table(
            2,
            &[
                (Treated, 0, 375, 30),
                (Treated, 1, 17, 166),
                (Control, 0, 159, 322),
                (Control, 1, 3, 3),
            ],
        );
        let data = from_counts(Structure::PartialMediator, None, &obs, true, EPS_SUM).unwrap();
        let PopulationData::PartialMediator(p) = data else {
            panic!("wrong variant")
        };
        let p_y_z_x = p.obs.get(Treated, 0, Outcome::Success) / p.obs.arm_z(Treated, 0);
        assert!((p_y_z_x - 0.92593).abs() < 5e-6);
    }

    #[test]
    fn empty_experimental_column() {
        use Arm::*;
        let exp = table(1, &[(Treated, 0, 10, 5), (Control, 0, 0, 0)]);
        let obs = table(1, &[(Treated, 0, 10, 5), (Control, 0, 3, 7)]);
        assert!(matches!(
            from_counts(Structure::Baseline, Some(&exp), &obs, false, EPS_SUM),
            Err(IngestError::EmptyTable(_))
        ));
    }

    #[test]
    fn negative_count() {
        let mut obs = CountTable::zeros(1);
        obs.set(Arm::Treated, 0, Outcome::Success, -1);
        assert!(matches!(
            from_counts(Structure::Baseline, None, &obs, true, EPS_SUM),
            Err(IngestError::NegativeCount { value: -1, .. })
        ));
    }

    #[test]
    fn missing_experimental_without_backdoor() {
        let obs = table(1, &[(Arm::Treated, 0, 1, 1), (Arm::Control, 0, 1, 1)]);
        assert!(matches!(
            from_counts(Structure::Baseline, None, &obs, false, EPS_SUM),
            Err(IngestError::Adjustment(
                AdjustmentError::BackdoorNotAsserted
            ))
        ));
    }

    #[test]
    fn empty_observational_stratum_gets_zero_weight() {
        use Arm::*;
        let exp = table(
            2,
            &[
                (Treated, 0, 3, 1),
                (Control, 0, 1, 3),
                (Treated, 1, 1, 1),
                (Control, 1, 1, 1),
            ],
        );
        let obs = table(2, &[(Treated, 0, 2, 1), (Control, 0, 1, 2)]);
        let data = from_counts(Structure::NonDescendant, Some(&exp), &obs, false, EPS_SUM).unwrap();
        let PopulationData::Stratified(s) = data else {
            panic!()
        };
        assert_eq!(s.strata[1].weight, 0.0);
        assert_eq!(s.strata[0].weight, 1.0);
    }
}
