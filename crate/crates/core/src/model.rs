//! Domain types: benefit vectors, intervals, and the four kinds of
//! population data (one per causal-diagram regime), with validation of
//! the probability axioms and the Tian–Pearl relation between
//! observational and experimental distributions.
//!
//! Binary treatment and outcome are indexed by [`Arm`] and [`Outcome`];
//! a covariate or mediator `Z` takes `k >= 1` values indexed `0..k`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{pairwise_sum, EPS_CMP};

/// Treatment arm: `X = x` or `X = x'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arm {
    Treated,
    Control,
}

impl Arm {
    pub const BOTH: [Arm; 2] = [Arm::Treated, Arm::Control];

    pub fn index(self) -> usize {
        match self {
            Arm::Treated => 0,
            Arm::Control => 1,
        }
    }

    pub fn other(self) -> Arm {
        match self {
            Arm::Treated => Arm::Control,
            Arm::Control => Arm::Treated,
        }
    }
}

/// Outcome: `Y = y` or `Y = y'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Success,
    Failure,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Success, Outcome::Failure];

    pub fn index(self) -> usize {
        match self {
            Outcome::Success => 0,
            Outcome::Failure => 1,
        }
    }
}

/// Which causal-diagram regime a population belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Structure {
    /// No covariate information: Li–Pearl bounds.
    Baseline,
    /// `Z` is not a descendant of `X`.
    #[serde(rename = "nondescendant")]
    NonDescendant,
    /// `X -> Z -> Y` together with a direct edge `X -> Y`.
    PartialMediator,
    /// `X -> Z -> Y` with no direct edge.
    PureMediator,
}

impl Structure {
    pub const ALL: [Structure; 4] = [
        Structure::Baseline,
        Structure::NonDescendant,
        Structure::PartialMediator,
        Structure::PureMediator,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Structure::Baseline => "baseline",
            Structure::NonDescendant => "nondescendant",
            Structure::PartialMediator => "partial-mediator",
            Structure::PureMediator => "pure-mediator",
        }
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Structure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Structure::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown structure `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("{quantity} = {value} is not a probability")]
    NotAProbability { quantity: String, value: f64 },
    #[error("{table} sums to {sum}, not 1")]
    CellsDoNotSumToOne { table: String, sum: f64 },
    #[error("Tian-Pearl relation violated for {quantity} by {slack}")]
    TianPearlViolated { quantity: String, slack: f64 },
    #[error("{what} has {found} entries, expected {expected}")]
    ShapeMismatch {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("benefit vector entry {0} is not finite")]
    NonFiniteBenefit(&'static str),
    #[error("invalid interval [{lower}, {upper}]")]
    InvalidInterval { lower: f64, upper: f64 },
}

/// Payoffs for selecting one complier, always-taker, never-taker and defier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenefitVector {
    pub beta: f64,
    pub gamma: f64,
    pub theta: f64,
    pub delta: f64,
}

impl BenefitVector {
    pub fn new(beta: f64, gamma: f64, theta: f64, delta: f64) -> Result<Self, ValidationError> {
        for (name, v) in [
            ("beta", beta),
            ("gamma", gamma),
            ("theta", theta),
            ("delta", delta),
        ] {
            if !v.is_finite() {
                return Err(ValidationError::NonFiniteBenefit(name));
            }
        }
        Ok(Self {
            beta,
            gamma,
            theta,
            delta,
        })
    }

    /// The drug-trial vector: +1 per complier, −1 for everyone else.
    pub fn cure_minus_harm() -> Self {
        Self {
            beta: 1.0,
            gamma: -1.0,
            theta: -1.0,
            delta: -1.0,
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            beta: self.beta * k,
            gamma: self.gamma * k,
            theta: self.theta * k,
            delta: self.delta * k,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.beta, self.gamma, self.theta, self.delta]
    }
}

impl fmt::Display for BenefitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {}, {})",
            self.beta, self.gamma, self.theta, self.delta
        )
    }
}

/// A closed interval `[lower, upper]` with `lower <= upper + EPS_CMP`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    lower: f64,
    upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Result<Self, ValidationError> {
        if !lower.is_finite() || !upper.is_finite() || lower > upper + EPS_CMP {
            return Err(ValidationError::InvalidInterval { lower, upper });
        }
        Ok(Self { lower, upper })
    }

    pub fn point(value: f64) -> Self {
        Self {
            lower: value,
            upper: value,
        }
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn contains(&self, value: f64, slack: f64) -> bool {
        value >= self.lower - slack && value <= self.upper + slack
    }

    /// True when `self` lies inside `outer`, each end allowed `slack`.
    pub fn is_within(&self, outer: &Interval, slack: f64) -> bool {
        self.lower >= outer.lower - slack && self.upper <= outer.upper + slack
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.5}, {:.5}]", self.lower, self.upper)
    }
}

/// Observational joint `P(X, Y | c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObsTable {
    /// `P(x, y | c)`
    pub p_xy: f64,
    /// `P(x, y' | c)`
    pub p_xyp: f64,
    /// `P(x', y | c)`
    pub p_xpy: f64,
    /// `P(x', y' | c)`
    pub p_xpyp: f64,
}

/// Sums of an [`ObsTable`]'s cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Marginals {
    pub p_y: f64,
    pub p_y_x: f64,
    pub p_y_xp: f64,
    pub p_yp_x: f64,
    pub p_yp_xp: f64,
    pub p_x: f64,
}

impl ObsTable {
    pub fn cell(&self, arm: Arm, outcome: Outcome) -> f64 {
        match (arm, outcome) {
            (Arm::Treated, Outcome::Success) => self.p_xy,
            (Arm::Treated, Outcome::Failure) => self.p_xyp,
            (Arm::Control, Outcome::Success) => self.p_xpy,
            (Arm::Control, Outcome::Failure) => self.p_xpyp,
        }
    }

    pub fn total(&self) -> f64 {
        self.p_xy + self.p_xyp + self.p_xpy + self.p_xpyp
    }

    pub fn marginals(&self) -> Marginals {
        Marginals {
            p_y: self.p_xy + self.p_xpy,
            p_y_x: self.p_xy,
            p_y_xp: self.p_xpy,
            p_yp_x: self.p_xyp,
            p_yp_xp: self.p_xpyp,
            p_x: self.p_xy + self.p_xyp,
        }
    }

    pub fn scaled(&self, w: f64) -> Self {
        Self {
            p_xy: self.p_xy * w,
            p_xyp: self.p_xyp * w,
            p_xpy: self.p_xpy * w,
            p_xpyp: self.p_xpyp * w,
        }
    }

    fn validate(&self, name: &str, tol: f64) -> Result<(), ValidationError> {
        check_prob(&format!("{name} P(x,y)"), self.p_xy, tol)?;
        check_prob(&format!("{name} P(x,y')"), self.p_xyp, tol)?;
        check_prob(&format!("{name} P(x',y)"), self.p_xpy, tol)?;
        check_prob(&format!("{name} P(x',y')"), self.p_xpyp, tol)?;
        check_sum(name, self.total(), tol)
    }
}

/// Observational joint `P(X, Z, Y | c)` over `2 * k * 2` cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointTable {
    k: usize,
    cells: Vec<f64>,
}

impl JointTable {
    pub fn new(k: usize, cells: Vec<f64>) -> Result<Self, ValidationError> {
        if k == 0 || cells.len() != 4 * k {
            return Err(ValidationError::ShapeMismatch {
                what: "joint table".into(),
                expected: 4 * k.max(1),
                found: cells.len(),
            });
        }
        Ok(Self { k, cells })
    }

    /// Builds the table cell by cell from `f(arm, z, outcome)`.
    pub fn from_fn(k: usize, mut f: impl FnMut(Arm, usize, Outcome) -> f64) -> Self {
        let mut cells = vec![0.0; 4 * k];
        for arm in Arm::BOTH {
            for z in 0..k {
                for y in Outcome::BOTH {
                    cells[Self::offset(k, arm, z, y)] = f(arm, z, y);
                }
            }
        }
        Self { k, cells }
    }

    fn offset(k: usize, arm: Arm, z: usize, outcome: Outcome) -> usize {
        (arm.index() * k + z) * 2 + outcome.index()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn get(&self, arm: Arm, z: usize, outcome: Outcome) -> f64 {
        self.cells[Self::offset(self.k, arm, z, outcome)]
    }

    /// `P(x_arm, z | c)`
    pub fn arm_z(&self, arm: Arm, z: usize) -> f64 {
        self.get(arm, z, Outcome::Success) + self.get(arm, z, Outcome::Failure)
    }

    /// `P(x_arm | c)`
    pub fn arm(&self, arm: Arm) -> f64 {
        (0..self.k).map(|z| self.arm_z(arm, z)).sum()
    }

    /// `P(z | c)`
    pub fn z(&self, z: usize) -> f64 {
        self.arm_z(Arm::Treated, z) + self.arm_z(Arm::Control, z)
    }

    /// `P(y, z | c)` summed over both arms.
    pub fn z_outcome(&self, z: usize, outcome: Outcome) -> f64 {
        self.get(Arm::Treated, z, outcome) + self.get(Arm::Control, z, outcome)
    }

    /// The `(X, Y)` margin.
    pub fn xy_margin(&self) -> ObsTable {
        let s = |arm, y| (0..self.k).map(|z| self.get(arm, z, y)).sum::<f64>();
        ObsTable {
            p_xy: s(Arm::Treated, Outcome::Success),
            p_xyp: s(Arm::Treated, Outcome::Failure),
            p_xpy: s(Arm::Control, Outcome::Success),
            p_xpyp: s(Arm::Control, Outcome::Failure),
        }
    }

    pub fn total(&self) -> f64 {
        pairwise_sum(&self.cells)
    }

    fn validate(&self, name: &str, tol: f64) -> Result<(), ValidationError> {
        for (i, &c) in self.cells.iter().enumerate() {
            check_prob(&format!("{name} cell {i}"), c, tol)?;
        }
        check_sum(name, self.total(), tol)
    }
}

/// Li–Pearl input: experimental `P(y_x|c)`, `P(y_{x'}|c)` and the
/// observational `(X, Y)` joint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineInput {
    pub p_y_do_x: f64,
    pub p_y_do_xp: f64,
    pub obs: ObsTable,
}

impl BaselineInput {
    pub fn p_y_do(&self, arm: Arm) -> f64 {
        match arm {
            Arm::Treated => self.p_y_do_x,
            Arm::Control => self.p_y_do_xp,
        }
    }

    pub fn validate(&self, tol: f64) -> Result<(), ValidationError> {
        validate_arms("", self.p_y_do_x, self.p_y_do_xp, &self.obs, tol)
    }
}

/// One value `z` of a non-descendant covariate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    /// `P(z | c)`
    pub weight: f64,
    /// `P(y_x | z, c)`
    pub p_y_do_x: f64,
    /// `P(y_{x'} | z, c)`
    pub p_y_do_xp: f64,
    /// `P(X, Y | z, c)`
    pub obs: ObsTable,
}

impl Stratum {
    pub fn as_baseline(&self) -> BaselineInput {
        BaselineInput {
            p_y_do_x: self.p_y_do_x,
            p_y_do_xp: self.p_y_do_xp,
            obs: self.obs,
        }
    }
}

/// Input stratified on a covariate `Z` that is not a descendant of `X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratifiedInput {
    pub strata: Vec<Stratum>,
}

impl StratifiedInput {
    /// Strata with positive weight; a null stratum contributes nothing.
    pub fn active(&self) -> impl Iterator<Item = (usize, &Stratum)> {
        self.strata
            .iter()
            .enumerate()
            .filter(|(_, s)| s.weight > 0.0)
    }

    fn weighted(&self, f: impl Fn(&Stratum) -> f64) -> f64 {
        let terms: Vec<f64> = self.active().map(|(_, s)| f(s) * s.weight).collect();
        pairwise_sum(&terms)
    }

    /// The z-marginalized Li–Pearl input for the same population.
    pub fn margin(&self) -> BaselineInput {
        BaselineInput {
            p_y_do_x: self.weighted(|s| s.p_y_do_x),
            p_y_do_xp: self.weighted(|s| s.p_y_do_xp),
            obs: ObsTable {
                p_xy: self.weighted(|s| s.obs.p_xy),
                p_xyp: self.weighted(|s| s.obs.p_xyp),
                p_xpy: self.weighted(|s| s.obs.p_xpy),
                p_xpyp: self.weighted(|s| s.obs.p_xpyp),
            },
        }
    }

    pub fn validate(&self, tol: f64) -> Result<(), ValidationError> {
        if self.strata.is_empty() {
            return Err(ValidationError::ShapeMismatch {
                what: "strata".into(),
                expected: 1,
                found: 0,
            });
        }
        for (z, s) in self.strata.iter().enumerate() {
            check_prob(&format!("P(z{z}|c)"), s.weight, tol)?;
        }
        let weights: Vec<f64> = self.strata.iter().map(|s| s.weight).collect();
        check_sum("stratum weights", pairwise_sum(&weights), tol)?;
        for (z, s) in self.active() {
            validate_arms(&format!("z{z}"), s.p_y_do_x, s.p_y_do_xp, &s.obs, tol)?;
        }
        Ok(())
    }
}

/// Input for a partial mediator: `X -> Z -> Y` plus `X -> Y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialMediatorInput {
    pub p_y_do_x: f64,
    pub p_y_do_xp: f64,
    /// `z -> P(z_x | c)`
    pub p_z_do_x: Vec<f64>,
    /// `z -> P(z_{x'} | c)`
    pub p_z_do_xp: Vec<f64>,
    pub obs: JointTable,
}

impl PartialMediatorInput {
    pub fn margin(&self) -> BaselineInput {
        BaselineInput {
            p_y_do_x: self.p_y_do_x,
            p_y_do_xp: self.p_y_do_xp,
            obs: self.obs.xy_margin(),
        }
    }

    pub fn p_z_do(&self, arm: Arm) -> &[f64] {
        match arm {
            Arm::Treated => &self.p_z_do_x,
            Arm::Control => &self.p_z_do_xp,
        }
    }

    pub fn validate(&self, tol: f64) -> Result<(), ValidationError> {
        let k = self.obs.k();
        for (name, dist) in [("P(Z_x|c)", &self.p_z_do_x), ("P(Z_x'|c)", &self.p_z_do_xp)] {
            if dist.len() != k {
                return Err(ValidationError::ShapeMismatch {
                    what: name.into(),
                    expected: k,
                    found: dist.len(),
                });
            }
            for (z, &p) in dist.iter().enumerate() {
                check_prob(&format!("{name}[z{z}]"), p, tol)?;
            }
            check_sum(name, pairwise_sum(dist), tol)?;
        }
        self.obs.validate("P(X,Z,Y|c)", tol)?;
        validate_arms(
            "",
            self.p_y_do_x,
            self.p_y_do_xp,
            &self.obs.xy_margin(),
            tol,
        )
    }
}

/// Input for a pure mediator: `X -> Z -> Y` with no direct edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PureMediatorInput {
    pub p_y_do_x: f64,
    pub p_y_do_xp: f64,
    pub obs: JointTable,
}

impl PureMediatorInput {
    pub fn margin(&self) -> BaselineInput {
        BaselineInput {
            p_y_do_x: self.p_y_do_x,
            p_y_do_xp: self.p_y_do_xp,
            obs: self.obs.xy_margin(),
        }
    }

    /// `P(z | x_arm, c)`, `None` when `P(x_arm | c) = 0`.
    pub fn p_z_given(&self, arm: Arm, z: usize) -> Option<f64> {
        let p_arm = self.obs.arm(arm);
        (p_arm > 0.0).then(|| self.obs.arm_z(arm, z) / p_arm)
    }

    /// `P(y | z, c)`, `None` when `P(z | c) = 0`.
    pub fn p_y_given_z(&self, z: usize) -> Option<f64> {
        let p_z = self.obs.z(z);
        (p_z > 0.0).then(|| self.obs.z_outcome(z, Outcome::Success) / p_z)
    }

    pub fn validate(&self, tol: f64) -> Result<(), ValidationError> {
        self.obs.validate("P(X,Z,Y|c)", tol)?;
        validate_arms(
            "",
            self.p_y_do_x,
            self.p_y_do_xp,
            &self.obs.xy_margin(),
            tol,
        )
    }
}

/// Data for one population `c`, in one of the four regimes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PopulationData {
    Baseline(BaselineInput),
    Stratified(StratifiedInput),
    PartialMediator(PartialMediatorInput),
    PureMediator(PureMediatorInput),
}

impl PopulationData {
    pub fn structure(&self) -> Structure {
        match self {
            PopulationData::Baseline(_) => Structure::Baseline,
            PopulationData::Stratified(_) => Structure::NonDescendant,
            PopulationData::PartialMediator(_) => Structure::PartialMediator,
            PopulationData::PureMediator(_) => Structure::PureMediator,
        }
    }

    /// The Li–Pearl input on the `(X, Y)` margin.
    pub fn margin(&self) -> BaselineInput {
        match self {
            PopulationData::Baseline(b) => *b,
            PopulationData::Stratified(s) => s.margin(),
            PopulationData::PartialMediator(p) => p.margin(),
            PopulationData::PureMediator(p) => p.margin(),
        }
    }

    /// Checks every invariant of the variant; the error names the first
    /// violated constraint and how far off it is.
    pub fn validate(&self, tol: f64) -> Result<(), ValidationError> {
        match self {
            PopulationData::Baseline(b) => b.validate(tol),
            PopulationData::Stratified(s) => s.validate(tol),
            PopulationData::PartialMediator(p) => p.validate(tol),
            PopulationData::PureMediator(p) => p.validate(tol),
        }
    }
}

fn check_prob(quantity: &str, value: f64, tol: f64) -> Result<(), ValidationError> {
    if !value.is_finite() || value < -tol || value > 1.0 + tol {
        return Err(ValidationError::NotAProbability {
            quantity: quantity.to_string(),
            value,
        });
    }
    Ok(())
}

fn check_sum(table: &str, sum: f64, tol: f64) -> Result<(), ValidationError> {
    if (sum - 1.0).abs() > tol {
        return Err(ValidationError::CellsDoNotSumToOne {
            table: table.to_string(),
            sum,
        });
    }
    Ok(())
}

/// Probability checks plus `P(x,y) <= P(y_x) <= 1 - P(x,y')` for both arms.
fn validate_arms(
    scope: &str,
    p_y_do_x: f64,
    p_y_do_xp: f64,
    obs: &ObsTable,
    tol: f64,
) -> Result<(), ValidationError> {
    let prefix = if scope.is_empty() {
        String::new()
    } else {
        format!("{scope} ")
    };
    check_prob(&format!("{prefix}P(y_x)"), p_y_do_x, tol)?;
    check_prob(&format!("{prefix}P(y_x')"), p_y_do_xp, tol)?;
    obs.validate(&format!("{prefix}P(X,Y)"), tol)?;
    for (arm, p, label) in [
        (Arm::Treated, p_y_do_x, "P(y_x)"),
        (Arm::Control, p_y_do_xp, "P(y_x')"),
    ] {
        let floor = obs.cell(arm, Outcome::Success);
        let ceiling = 1.0 - obs.cell(arm, Outcome::Failure);
        if p < floor - tol {
            return Err(ValidationError::TianPearlViolated {
                quantity: format!("{prefix}{label} below observational floor"),
                slack: floor - p,
            });
        }
        if p > ceiling + tol {
            return Err(ValidationError::TianPearlViolated {
                quantity: format!("{prefix}{label} above observational ceiling"),
                slack: p - ceiling,
            });
        }
    }
    Ok(())
}
