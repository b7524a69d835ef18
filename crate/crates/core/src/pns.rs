//! Bounds on the c-specific probability of necessity and sufficiency,
//! `PNS = P(y_x, y'_{x'} | c)`, the share of compliers in population `c`.
//!
//! Every regime shares the four Li–Pearl lower arguments and four upper
//! arguments. Stratifying on a non-descendant covariate applies them per
//! stratum and averages; the mediator regimes keep the lower bound and add
//! one extra argument to the upper minimum.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    Arm, BaselineInput, Interval, ObsTable, Outcome, PartialMediatorInput, PureMediatorInput,
    StratifiedInput, ValidationError,
};
use crate::numeric::{clamp_unit, pairwise_sum};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("{quantity} conditions on a zero-probability event but has weight {weight}")]
    MissingConditional { quantity: String, weight: f64 },
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

/// The arguments of the lower-bound maximum, in their conventional order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LowerArg {
    /// `0`
    Zero,
    /// `P(y_x) - P(y_{x'})`
    EffectDifference,
    /// `P(y) - P(y_{x'})`
    ObservedMinusControl,
    /// `P(y_x) - P(y)`
    TreatedMinusObserved,
}

/// The arguments of the upper-bound minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UpperArg {
    /// `P(y_x)`
    TreatedResponse,
    /// `P(y'_{x'})`
    ControlNonResponse,
    /// `P(y,x) + P(y',x')`
    ObservedAgreement,
    /// `P(y_x) - P(y_{x'}) + P(y,x') + P(y',x)`
    EffectPlusDisagreement,
    /// The mediator sum.
    Mediator,
}

impl LowerArg {
    const ORDER: [LowerArg; 4] = [
        LowerArg::Zero,
        LowerArg::EffectDifference,
        LowerArg::ObservedMinusControl,
        LowerArg::TreatedMinusObserved,
    ];

    pub fn label(self) -> &'static str {
        match self {
            LowerArg::Zero => "0",
            LowerArg::EffectDifference => "P(y_x)-P(y_x')",
            LowerArg::ObservedMinusControl => "P(y)-P(y_x')",
            LowerArg::TreatedMinusObserved => "P(y_x)-P(y)",
        }
    }
}

impl UpperArg {
    const ORDER: [UpperArg; 4] = [
        UpperArg::TreatedResponse,
        UpperArg::ControlNonResponse,
        UpperArg::ObservedAgreement,
        UpperArg::EffectPlusDisagreement,
    ];

    pub fn label(self) -> &'static str {
        match self {
            UpperArg::TreatedResponse => "P(y_x)",
            UpperArg::ControlNonResponse => "P(y'_x')",
            UpperArg::ObservedAgreement => "P(y,x)+P(y',x')",
            UpperArg::EffectPlusDisagreement => "P(y_x)-P(y_x')+P(y,x')+P(y',x)",
            UpperArg::Mediator => "mediator term",
        }
    }
}

/// Which arguments attained the lower maximum and upper minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BindingTerms {
    pub lower: LowerArg,
    pub upper: UpperArg,
}

impl fmt::Display for BindingTerms {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "L by {}, U by {}",
            self.lower.label(),
            self.upper.label()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Binding {
    Single(BindingTerms),
    /// One entry per stratum; `None` for zero-weight strata.
    PerStratum(Vec<Option<BindingTerms>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PnsBounds {
    pub interval: Interval,
    pub binding: Binding,
    /// The extra mediator argument, when the regime has one.
    pub mediator_term: Option<f64>,
}

impl PnsBounds {
    pub fn lower(&self) -> f64 {
        self.interval.lower()
    }

    pub fn upper(&self) -> f64 {
        self.interval.upper()
    }
}

/// Lower and upper argument lists for one population (or one stratum).
fn li_pearl_args(p_y_do_x: f64, p_y_do_xp: f64, obs: &ObsTable) -> ([f64; 4], [f64; 4]) {
    let m = obs.marginals();
    let lower = [
        0.0,
        p_y_do_x - p_y_do_xp,
        m.p_y - p_y_do_xp,
        p_y_do_x - m.p_y,
    ];
    let upper = [
        p_y_do_x,
        1.0 - p_y_do_xp,
        m.p_y_x + m.p_yp_xp,
        p_y_do_x - p_y_do_xp + m.p_y_xp + m.p_yp_x,
    ];
    (lower, upper)
}

/// Index of the first maximum (ties resolve to the earlier argument).
fn first_max(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn first_min(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

fn li_pearl_raw(input: &BaselineInput) -> (f64, f64, BindingTerms) {
    let (lower, upper) = li_pearl_args(input.p_y_do_x, input.p_y_do_xp, &input.obs);
    let li = first_max(&lower);
    let ui = first_min(&upper);
    (
        lower[li],
        upper[ui],
        BindingTerms {
            lower: LowerArg::ORDER[li],
            upper: UpperArg::ORDER[ui],
        },
    )
}

fn finish(lower: f64, upper: f64) -> Result<Interval, BoundsError> {
    let lower = clamp_unit(lower, "PNS lower bound");
    let upper = clamp_unit(upper, "PNS upper bound");
    Ok(Interval::new(lower, upper)?)
}

/// Li–Pearl bounds on PNS from the population's own experimental and
/// observational data.
pub fn pns_baseline(input: &BaselineInput) -> Result<PnsBounds, BoundsError> {
    let (lower, upper, terms) = li_pearl_raw(input);
    Ok(PnsBounds {
        interval: finish(lower, upper)?,
        binding: Binding::Single(terms),
        mediator_term: None,
    })
}

/// Per-stratum Li–Pearl bounds averaged with weights `P(z|c)`.
pub fn pns_stratified(input: &StratifiedInput) -> Result<PnsBounds, BoundsError> {
    let mut lowers = Vec::with_capacity(input.strata.len());
    let mut uppers = Vec::with_capacity(input.strata.len());
    let mut binding = vec![None; input.strata.len()];
    for (z, stratum) in input.active() {
        let (lower, upper, terms) = li_pearl_raw(&stratum.as_baseline());
        lowers.push(lower * stratum.weight);
        uppers.push(upper * stratum.weight);
        binding[z] = Some(terms);
    }
    Ok(PnsBounds {
        interval: finish(pairwise_sum(&lowers), pairwise_sum(&uppers))?,
        binding: Binding::PerStratum(binding),
        mediator_term: None,
    })
}

/// `Σ_z Σ_{z'} min{P(y|z,x), P(y'|z',x')} · min{P(z_x), P(z'_{x'})}`,
/// over all ordered pairs including `z = z'`.
pub fn partial_mediator_term(input: &PartialMediatorInput) -> Result<f64, BoundsError> {
    let k = input.obs.k();
    let p_y_given = |arm: Arm, z: usize, outcome: Outcome, weight: f64| {
        let denom = input.obs.arm_z(arm, z);
        if denom > 0.0 {
            Ok(input.obs.get(arm, z, outcome) / denom)
        } else {
            let arm = if arm == Arm::Treated { "x" } else { "x'" };
            Err(BoundsError::MissingConditional {
                quantity: format!("P(Y|z{z},{arm})"),
                weight,
            })
        }
    };
    let mut terms = Vec::with_capacity(k * k);
    for z in 0..k {
        for zp in 0..k {
            let weight = input.p_z_do_x[z].min(input.p_z_do_xp[zp]);
            if weight <= 0.0 {
                continue;
            }
            let treated = p_y_given(Arm::Treated, z, Outcome::Success, weight)?;
            let control = p_y_given(Arm::Control, zp, Outcome::Failure, weight)?;
            terms.push(treated.min(control) * weight);
        }
    }
    Ok(pairwise_sum(&terms))
}

/// `Σ_z Σ_{z'≠z} min{P(y|z), P(y'|z')} · min{P(z|x), P(z'|x')}`.
///
/// Pairs with `z = z'` are excluded: without a direct edge, a complier's
/// mediator must respond to the treatment.
pub fn pure_mediator_term(input: &PureMediatorInput) -> Result<f64, BoundsError> {
    let k = input.obs.k();
    let mut terms = Vec::with_capacity(k * k);
    for z in 0..k {
        for zp in (0..k).filter(|&zp| zp != z) {
            let weight = match (
                input.p_z_given(Arm::Treated, z),
                input.p_z_given(Arm::Control, zp),
            ) {
                (Some(a), Some(b)) => a.min(b),
                (None, _) | (_, None) => {
                    return Err(BoundsError::MissingConditional {
                        quantity: "P(Z|x) with P(x|c) = 0".into(),
                        weight: f64::NAN,
                    })
                }
            };
            if weight <= 0.0 {
                continue;
            }
            let missing = |z: usize| BoundsError::MissingConditional {
                quantity: format!("P(Y|z{z})"),
                weight,
            };
            let success = input.p_y_given_z(z).ok_or_else(|| missing(z))?;
            let failure = 1.0 - input.p_y_given_z(zp).ok_or_else(|| missing(zp))?;
            terms.push(success.min(failure) * weight);
        }
    }
    Ok(pairwise_sum(&terms))
}

fn with_mediator(margin: &BaselineInput, term: f64) -> Result<PnsBounds, BoundsError> {
    let (lower, mut upper, mut terms) = li_pearl_raw(margin);
    if term < upper {
        upper = term;
        terms.upper = UpperArg::Mediator;
    }
    Ok(PnsBounds {
        interval: finish(lower, upper)?,
        binding: Binding::Single(terms),
        mediator_term: Some(term),
    })
}

/// Li–Pearl bounds on the `(X, Y)` margin with the partial-mediator term
/// added to the upper minimum. The lower bound is unchanged.
pub fn pns_partial_mediator(input: &PartialMediatorInput) -> Result<PnsBounds, BoundsError> {
    with_mediator(&input.margin(), partial_mediator_term(input)?)
}

/// As [`pns_partial_mediator`] with the pure-mediator term.
pub fn pns_pure_mediator(input: &PureMediatorInput) -> Result<PnsBounds, BoundsError> {
    with_mediator(&input.margin(), pure_mediator_term(input)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{JointTable, Stratum};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn company_margin() -> BaselineInput {
        // experimental values are the z-average of the printed per-age rates
        let (wz, wzp) = (202.0 / 700.0, 498.0 / 700.0);
        BaselineInput {
            p_y_do_x: 0.446 * wz + 0.996 * wzp,
            p_y_do_xp: 0.05 * wz + 0.719 * wzp,
            obs: ObsTable {
                p_xy: 247.0 / 700.0,
                p_xyp: 64.0 / 700.0,
                p_xpy: 248.0 / 700.0,
                p_xpyp: 141.0 / 700.0,
            },
        }
    }

    #[test]
    fn company_li_pearl_pns() {
        let b = pns_baseline(&company_margin()).unwrap();
        assert!(close(b.lower(), 0.31134, 5e-5), "{}", b.lower());
        assert!(close(b.upper(), 0.47405, 5e-5), "{}", b.upper());
        assert_eq!(
            b.binding,
            Binding::Single(BindingTerms {
                lower: LowerArg::EffectDifference,
                upper: UpperArg::ControlNonResponse
            })
        );
    }

    #[test]
    fn drug_li_pearl_pns() {
        let input = BaselineInput {
            p_y_do_x: 392.0 / 588.0,
            p_y_do_xp: 162.0 / 487.0,
            obs: ObsTable {
                p_xy: 392.0 / 1075.0,
                p_xyp: 196.0 / 1075.0,
                p_xpy: 162.0 / 1075.0,
                p_xpyp: 325.0 / 1075.0,
            },
        };
        let b = pns_baseline(&input).unwrap();
        assert!(close(b.lower(), 0.33401, 5e-5));
        assert!(close(b.upper(), 0.66666, 1e-5));
    }

    #[test]
    fn forced_complier() {
        let input = BaselineInput {
            p_y_do_x: 1.0,
            p_y_do_xp: 0.0,
            obs: ObsTable {
                p_xy: 0.4,
                p_xyp: 0.0,
                p_xpy: 0.0,
                p_xpyp: 0.6,
            },
        };
        let b = pns_baseline(&input).unwrap();
        assert_eq!((b.lower(), b.upper()), (1.0, 1.0));
    }

    #[test]
    fn ties_report_first_argument() {
        // P(y_x) = P(y_x') = P(y): every lower argument is zero
        let input = BaselineInput {
            p_y_do_x: 0.5,
            p_y_do_xp: 0.5,
            obs: ObsTable {
                p_xy: 0.25,
                p_xyp: 0.25,
                p_xpy: 0.25,
                p_xpyp: 0.25,
            },
        };
        let b = pns_baseline(&input).unwrap();
        match b.binding {
            Binding::Single(t) => {
                assert_eq!(t.lower, LowerArg::Zero);
                assert_eq!(t.upper, UpperArg::TreatedResponse);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn single_stratum_equals_baseline() {
        let base = company_margin();
        let strat = StratifiedInput {
            strata: vec![Stratum {
                weight: 1.0,
                p_y_do_x: base.p_y_do_x,
                p_y_do_xp: base.p_y_do_xp,
                obs: base.obs,
            }],
        };
        let a = pns_stratified(&strat).unwrap();
        let b = pns_baseline(&base).unwrap();
        assert_eq!(a.interval, b.interval);
    }

    fn drug_joint() -> JointTable {
        let counts = [[[375.0, 30.0], [17.0, 166.0]], [[159.0, 322.0], [3.0, 3.0]]];
        JointTable::from_fn(2, |arm, z, y| counts[arm.index()][z][y.index()] / 1075.0)
    }

    #[test]
    fn single_surviving_pair() {
        let input = PartialMediatorInput {
            p_y_do_x: 0.6,
            p_y_do_xp: 0.3,
            p_z_do_x: vec![1.0, 0.0],
            p_z_do_xp: vec![1.0, 0.0],
            obs: drug_joint(),
        };
        let term = partial_mediator_term(&input).unwrap();
        let expect = (375.0f64 / 405.0).min(322.0 / 481.0);
        assert!(close(term, expect, 1e-15));
    }

    #[test]
    fn missing_conditional_with_nonzero_weight() {
        let obs = JointTable::from_fn(2, |arm, z, _| {
            if arm == Arm::Treated && z == 1 {
                0.0
            } else {
                1.0 / 6.0
            }
        });
        let input = PartialMediatorInput {
            p_y_do_x: 0.5,
            p_y_do_xp: 0.5,
            p_z_do_x: vec![0.5, 0.5],
            p_z_do_xp: vec![0.5, 0.5],
            obs,
        };
        assert!(matches!(
            partial_mediator_term(&input),
            Err(BoundsError::MissingConditional { .. })
        ));
    }

    #[test]
    fn deterministic_responsive_pure_mediator() {
        // Z = z under x, z' under x'; Y = y iff Z = z
        let obs = JointTable::from_fn(2, |arm, z, y| match (arm, z, y) {
            (Arm::Treated, 0, Outcome::Success) => 0.5,
            (Arm::Control, 1, Outcome::Failure) => 0.5,
            _ => 0.0,
        });
        let input = PureMediatorInput {
            p_y_do_x: 1.0,
            p_y_do_xp: 0.0,
            obs,
        };
        let term = pure_mediator_term(&input).unwrap();
        // (z, z'): min{1, 1}·min{1, 1}; (z', z): weight min{0, 0} = 0
        assert_eq!(term, 1.0);
        let b = pns_pure_mediator(&input).unwrap();
        assert_eq!((b.lower(), b.upper()), (1.0, 1.0));
    }

    /// Mediator with P(z|x) = P(z|x') (unresponsive on average).
    #[test]
    fn unresponsive_mediator_fixture() {
        // Z given x: P(z)=0.5 both arms; Y given z: P(y|z)=0.7, P(y|z')=0.2
        let (pz, py_z, py_zp) = (0.5, 0.7, 0.2);
        let obs = JointTable::from_fn(2, |_, z, y| {
            let pz_here = if z == 0 { pz } else { 1.0 - pz };
            let py = if z == 0 { py_z } else { py_zp };
            let py = if y == Outcome::Success { py } else { 1.0 - py };
            0.5 * pz_here * py
        });
        let input = PureMediatorInput {
            p_y_do_x: pz * py_z + (1.0 - pz) * py_zp,
            p_y_do_xp: pz * py_z + (1.0 - pz) * py_zp,
            obs,
        };
        // hand computation: pairs (z,z') and (z',z)
        //   min{0.7, 0.8}·min{0.5, 0.5} + min{0.2, 0.3}·min{0.5, 0.5} = 0.35 + 0.10
        let term = pure_mediator_term(&input).unwrap();
        assert!(close(term, 0.45, 1e-15));
        let b = pns_pure_mediator(&input).unwrap();
        // Li-Pearl upper: P(y_x) = 0.45, so the mediator term ties and the
        // earlier argument is reported
        assert!(close(b.upper(), 0.45, 1e-15));
        assert_eq!(b.lower(), 0.0);
    }

    #[test]
    fn p_y_given_z_pools_both_arms() {
        let obs = JointTable::from_fn(2, |arm, z, y| {
            let base = [[0.1, 0.2], [0.15, 0.05]][z][y.index()];
            if arm == Arm::Treated {
                base * 0.5
            } else {
                base * 1.5
            }
        });
        let input = PureMediatorInput {
            p_y_do_x: 0.5,
            p_y_do_xp: 0.5,
            obs,
        };
        assert!(close(input.p_y_given_z(0).unwrap(), 1.0 / 3.0, 1e-15));
        assert!(close(input.p_y_given_z(1).unwrap(), 0.75, 1e-15));
    }
}
