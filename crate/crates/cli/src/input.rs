//! Data files.
//!
//! A data file is TOML with an `observational` table, an optional
//! `experimental` table and optional defaults for the command-line flags:
//!
//! ```toml
//! structure = "nondescendant"
//! benefit = [100, -60, 0, -140]
//! backdoor = false
//!
//! [observational]
//! cells = [
//!   { x = "x",  z = "young", y = "y",  value = 90 },
//!   { x = "x",  z = "young", y = "y'", value = 62 },
//! ]
//! ```
//!
//! Cells are counts unless the table sets `probabilities = true`. Missing
//! cells are zero. `z` labels are numbered in order of first appearance,
//! observational table first. Experimental cells hold `(z, y)` counts or
//! probabilities under each intervention.

use std::collections::HashMap;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use unitbound::counts::{self, CellTable, CountTable, IngestError};
use unitbound::{Arm, BenefitVector, Outcome, PopulationData, Structure};

#[derive(Debug, Error)]
pub enum InputError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed data file: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("malformed data file: {0}")]
    Layout(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum ArmLabel {
    #[serde(rename = "x")]
    Treated,
    #[serde(rename = "x'")]
    Control,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum OutcomeLabel {
    #[serde(rename = "y")]
    Success,
    #[serde(rename = "y'")]
    Failure,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cell {
    pub x: ArmLabel,
    pub z: Option<String>,
    pub y: OutcomeLabel,
    pub value: toml::Value,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table {
    #[serde(default)]
    pub probabilities: bool,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataFile {
    pub structure: Option<Structure>,
    pub benefit: Option<[f64; 4]>,
    pub backdoor: Option<bool>,
    pub experimental: Option<Table>,
    pub observational: Table,
}

impl DataFile {
    pub fn parse(text: &str) -> Result<Self, InputError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, InputError> {
        let text = std::fs::read_to_string(path).map_err(|source| InputError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// `z` labels in order of first appearance; empty when no cell has one.
    pub fn z_labels(&self) -> Result<Vec<String>, InputError> {
        let cells = self
            .observational
            .cells
            .iter()
            .chain(self.experimental.iter().flat_map(|t| t.cells.iter()));
        let mut labels: Vec<String> = Vec::new();
        let (mut with, mut without) = (0, 0);
        for cell in cells {
            match &cell.z {
                Some(z) => {
                    with += 1;
                    if !labels.contains(z) {
                        labels.push(z.clone());
                    }
                }
                None => without += 1,
            }
        }
        if with > 0 && without > 0 {
            return Err(InputError::Layout(
                "either every cell names a z value or none does".into(),
            ));
        }
        Ok(labels)
    }

    pub fn benefit_vector(&self) -> Option<Result<BenefitVector, InputError>> {
        self.benefit.map(|[b, g, t, d]| {
            BenefitVector::new(b, g, t, d).map_err(|e| InputError::Layout(e.to_string()))
        })
    }

    /// Builds the population data for `structure`.
    pub fn population(
        &self,
        structure: Structure,
        backdoor: bool,
        tol: f64,
    ) -> Result<PopulationData, InputError> {
        let labels = self.z_labels()?;
        let index: HashMap<&str, usize> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let k = labels.len().max(1);
        let obs = &self.observational;
        let exp = self.experimental.as_ref();
        let any_probabilities = obs.probabilities || exp.is_some_and(|t| t.probabilities);
        let result = if any_probabilities {
            let exp = exp
                .map(|t| cell_table(t, "experimental", k, &index))
                .transpose()?;
            let obs = cell_table(obs, "observational", k, &index)?;
            counts::from_tables(structure, exp.as_ref(), &obs, backdoor, tol)
        } else {
            let exp = exp
                .map(|t| count_table(t, "experimental", k, &index))
                .transpose()?;
            let obs = count_table(obs, "observational", k, &index)?;
            counts::from_counts(structure, exp.as_ref(), &obs, backdoor, tol)
        };
        Ok(result?)
    }
}

fn position(cell: &Cell, index: &HashMap<&str, usize>) -> (Arm, usize, Outcome) {
    let arm = match cell.x {
        ArmLabel::Treated => Arm::Treated,
        ArmLabel::Control => Arm::Control,
    };
    let y = match cell.y {
        OutcomeLabel::Success => Outcome::Success,
        OutcomeLabel::Failure => Outcome::Failure,
    };
    let z = cell.z.as_deref().map_or(0, |z| index[z]);
    (arm, z, y)
}

fn describe(cell: &Cell, table: &str) -> String {
    let x = match cell.x {
        ArmLabel::Treated => "x",
        ArmLabel::Control => "x'",
    };
    let y = match cell.y {
        OutcomeLabel::Success => "y",
        OutcomeLabel::Failure => "y'",
    };
    match &cell.z {
        Some(z) => format!("{table} cell ({x}, {z}, {y})"),
        None => format!("{table} cell ({x}, {y})"),
    }
}

fn check_unique(
    seen: &mut Vec<(Arm, usize, Outcome)>,
    at: (Arm, usize, Outcome),
    cell: &Cell,
    table: &str,
) -> Result<(), InputError> {
    if seen.contains(&at) {
        return Err(InputError::Layout(format!(
            "{} given twice",
            describe(cell, table)
        )));
    }
    seen.push(at);
    Ok(())
}

fn count_table(
    table: &Table,
    name: &str,
    k: usize,
    index: &HashMap<&str, usize>,
) -> Result<CountTable, InputError> {
    let mut out = CountTable::zeros(k);
    let mut seen = Vec::new();
    for cell in &table.cells {
        let Some(count) = cell.value.as_integer() else {
            return Err(InputError::Layout(format!(
                "{} must be an integer count (set probabilities = true for probabilities)",
                describe(cell, name)
            )));
        };
        let (arm, z, y) = position(cell, index);
        check_unique(&mut seen, (arm, z, y), cell, name)?;
        out.set(arm, z, y, count);
    }
    Ok(out)
}

fn cell_table(
    table: &Table,
    name: &str,
    k: usize,
    index: &HashMap<&str, usize>,
) -> Result<CellTable, InputError> {
    let mut out = CellTable::zeros(k);
    let mut seen = Vec::new();
    for cell in &table.cells {
        let value = match &cell.value {
            toml::Value::Float(v) => *v,
            toml::Value::Integer(v) => *v as f64,
            _ => {
                return Err(InputError::Layout(format!(
                    "{} must be a number",
                    describe(cell, name)
                )))
            }
        };
        let (arm, z, y) = position(cell, index);
        check_unique(&mut seen, (arm, z, y), cell, name)?;
        out.set(arm, z, y, value);
    }
    Ok(out)
}
