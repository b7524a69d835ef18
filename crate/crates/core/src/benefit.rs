//! Benefit-function bounds.
//!
//! The benefit of population `c` is
//! `β·P(complier) + γ·P(always-taker) + θ·P(never-taker) + δ·P(defier)`,
//! which rewrites as `W + σ·PNS` with
//! `σ = β − γ − θ + δ` and
//! `W = (γ − δ)·P(y_x) + δ·P(y_{x'}) + θ·P(y'_{x'})`.
//! Any PNS interval therefore maps onto a benefit interval, flipped when
//! `σ < 0` and collapsed to a point when `σ = 0`.

use serde::{Deserialize, Serialize};

use crate::model::{
    BaselineInput, BenefitVector, Interval, PartialMediatorInput, PopulationData,
    PureMediatorInput, StratifiedInput,
};
use crate::numeric::EPS_CMP;
use crate::pns::{self, BoundsError, PnsBounds};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenefitBounds {
    pub interval: Interval,
    pub sigma: f64,
    pub w: f64,
    pub pns: PnsBounds,
    /// `σ = 0`: the benefit is point-identified.
    pub is_point: bool,
}

pub fn sigma(bv: &BenefitVector) -> f64 {
    bv.beta - bv.gamma - bv.theta + bv.delta
}

pub fn compute_w(bv: &BenefitVector, p_y_do_x: f64, p_y_do_xp: f64) -> f64 {
    (bv.gamma - bv.delta) * p_y_do_x + bv.delta * p_y_do_xp + bv.theta * (1.0 - p_y_do_xp)
}

/// `W + σ·pns`. With the exact PNS this equals the exact benefit.
pub fn decompose(bv: &BenefitVector, pns: f64, p_y_do_x: f64, p_y_do_xp: f64) -> f64 {
    compute_w(bv, p_y_do_x, p_y_do_xp) + sigma(bv) * pns
}

/// Maps PNS bounds through `W + σ·PNS`.
pub fn compose(
    bv: &BenefitVector,
    pns: PnsBounds,
    p_y_do_x: f64,
    p_y_do_xp: f64,
) -> Result<BenefitBounds, BoundsError> {
    let sigma = sigma(bv);
    let w = compute_w(bv, p_y_do_x, p_y_do_xp);
    // payoffs are exact inputs, so σ is compared with zero exactly
    let interval = if sigma > 0.0 {
        Interval::new(w + sigma * pns.lower(), w + sigma * pns.upper())?
    } else if sigma < 0.0 {
        Interval::new(w + sigma * pns.upper(), w + sigma * pns.lower())?
    } else {
        Interval::point(w)
    };
    Ok(BenefitBounds {
        interval,
        sigma,
        w,
        pns,
        is_point: sigma == 0.0,
    })
}

/// Li–Pearl benefit bounds.
pub fn lipearl_bounds(
    input: &BaselineInput,
    bv: &BenefitVector,
) -> Result<BenefitBounds, BoundsError> {
    compose(
        bv,
        pns::pns_baseline(input)?,
        input.p_y_do_x,
        input.p_y_do_xp,
    )
}

/// Bounds using a non-descendant covariate. `W` uses the z-marginalized
/// experimental probabilities.
pub fn theorem1_bounds(
    input: &StratifiedInput,
    bv: &BenefitVector,
) -> Result<BenefitBounds, BoundsError> {
    let margin = input.margin();
    compose(
        bv,
        pns::pns_stratified(input)?,
        margin.p_y_do_x,
        margin.p_y_do_xp,
    )
}

/// Bounds using a partial mediator.
pub fn theorem2_bounds(
    input: &PartialMediatorInput,
    bv: &BenefitVector,
) -> Result<BenefitBounds, BoundsError> {
    compose(
        bv,
        pns::pns_partial_mediator(input)?,
        input.p_y_do_x,
        input.p_y_do_xp,
    )
}

/// Bounds using a pure mediator.
pub fn theorem3_bounds(
    input: &PureMediatorInput,
    bv: &BenefitVector,
) -> Result<BenefitBounds, BoundsError> {
    compose(
        bv,
        pns::pns_pure_mediator(input)?,
        input.p_y_do_x,
        input.p_y_do_xp,
    )
}

/// The structure-appropriate bounds for any population.
pub fn bounds(data: &PopulationData, bv: &BenefitVector) -> Result<BenefitBounds, BoundsError> {
    match data {
        PopulationData::Baseline(b) => lipearl_bounds(b, bv),
        PopulationData::Stratified(s) => theorem1_bounds(s, bv),
        PopulationData::PartialMediator(p) => theorem2_bounds(p, bv),
        PopulationData::PureMediator(p) => theorem3_bounds(p, bv),
    }
}

/// Validates at tolerance `tol`, then computes [`bounds`].
pub fn checked_bounds(
    data: &PopulationData,
    bv: &BenefitVector,
    tol: f64,
) -> Result<BenefitBounds, BoundsError> {
    data.validate(tol)?;
    bounds(data, bv)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Positive,
    Negative,
    Ambiguous,
}

impl Sign {
    pub fn label(self) -> &'static str {
        match self {
            Sign::Positive => "positive",
            Sign::Negative => "negative",
            Sign::Ambiguous => "ambiguous",
        }
    }
}

/// Both decision readings of a benefit interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    /// Sign of `lower + upper`.
    pub midpoint: Sign,
    /// `Positive`/`Negative` when the entire interval has that sign,
    /// `Ambiguous` when it straddles zero.
    pub whole_interval: Sign,
}

pub fn decide(interval: &Interval) -> Decision {
    let s = interval.lower() + interval.upper();
    let midpoint = if s > EPS_CMP {
        Sign::Positive
    } else if s < -EPS_CMP {
        Sign::Negative
    } else {
        Sign::Ambiguous
    };
    let whole_interval = if interval.lower() > 0.0 {
        Sign::Positive
    } else if interval.upper() < 0.0 {
        Sign::Negative
    } else {
        Sign::Ambiguous
    };
    Decision {
        midpoint,
        whole_interval,
    }
}
