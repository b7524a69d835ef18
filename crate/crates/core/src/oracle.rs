//! Ground truth by enumeration.
//!
//! An [`Scm`] is a finite discrete structural causal model over binary
//! `X`, `Y` and a `k`-valued `Z` for a single population `c`. Every
//! endogenous variable is a canonical response function of its parents
//! selected by a latent index, so the whole model is a probability table
//! over latent triples `(u_z, u_x, u_y)`. Counterfactuals come from
//! evaluating the structural functions under each latent state with `X`
//! forced, so nothing here goes through the bounding formulas.
//!
//! Response-function encoding: a latent index `u` selects the function
//! whose value on parent configuration `i` is bit `i` of `u`. For `X`
//! bit set means `x`; for `Y` bit set means `y`. Arms index as
//! `x = 0`, `x' = 1`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::benefit;
use crate::model::{
    Arm, BaselineInput, BenefitVector, JointTable, ObsTable, Outcome, PartialMediatorInput,
    PopulationData, PureMediatorInput, StratifiedInput, Stratum, Structure,
};
use crate::numeric::pairwise_sum;
use crate::pns::{self, PnsBounds};

pub const MAX_K: usize = 4;
pub const MAX_LATENT_STATES: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Latent {
    pub u_z: usize,
    pub u_x: usize,
    pub u_y: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scm {
    structure: Structure,
    k: usize,
    latents: Vec<(Latent, f64)>,
}

/// Probabilities of the four response types of `Y` to `X`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseTypes {
    pub complier: f64,
    pub always_taker: f64,
    pub never_taker: f64,
    pub defier: f64,
}

impl ResponseTypes {
    /// PNS is the complier share.
    pub fn pns(&self) -> f64 {
        self.complier
    }

    pub fn total(&self) -> f64 {
        self.complier + self.always_taker + self.never_taker + self.defier
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScmError {
    #[error("k = {0} outside the supported range for this structure")]
    UnsupportedArity(usize),
    #[error("latent index {index} out of range for {variable}")]
    LatentOutOfRange {
        variable: &'static str,
        index: usize,
    },
    #[error("latent distribution sums to {0}")]
    NotNormalized(f64),
}

/// Latent domain sizes `(u_z, u_x, u_y)` for a structure.
pub fn latent_arities(structure: Structure, k: usize) -> (usize, usize, usize) {
    match structure {
        Structure::Baseline => (1, 2, 4),
        // Z exogenous; X = f(z, u_x); Y = f(x, z, u_y)
        Structure::NonDescendant => (k, 1 << k, 1 << (2 * k)),
        // Z = f(x, u_z); Y = f(x, z, u_y)
        Structure::PartialMediator => (k * k, 2, 1 << (2 * k)),
        // Z = f(x, u_z); Y = f(z, u_y)
        Structure::PureMediator => (k * k, 2, 1 << k),
    }
}

fn bit(u: usize, i: usize) -> bool {
    (u >> i) & 1 == 1
}

impl Scm {
    pub fn new(
        structure: Structure,
        k: usize,
        latents: Vec<(Latent, f64)>,
    ) -> Result<Self, ScmError> {
        let k = if structure == Structure::Baseline {
            1
        } else {
            k
        };
        if structure != Structure::Baseline && !(2..=MAX_K).contains(&k) {
            return Err(ScmError::UnsupportedArity(k));
        }
        let (nz, nx, ny) = latent_arities(structure, k);
        for (l, _) in &latents {
            for (variable, index, n) in [("u_z", l.u_z, nz), ("u_x", l.u_x, nx), ("u_y", l.u_y, ny)]
            {
                if index >= n {
                    return Err(ScmError::LatentOutOfRange { variable, index });
                }
            }
        }
        let probs: Vec<f64> = latents.iter().map(|(_, p)| *p).collect();
        let sum = pairwise_sum(&probs);
        if (sum - 1.0).abs() > 1e-9 || probs.iter().any(|p| *p < 0.0) {
            return Err(ScmError::NotNormalized(sum));
        }
        Ok(Self {
            structure,
            k,
            latents,
        })
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn latents(&self) -> &[(Latent, f64)] {
        &self.latents
    }

    /// `Z` under `do(arm)`, or the exogenous value.
    pub fn z_under(&self, l: &Latent, arm: Arm) -> usize {
        match self.structure {
            Structure::Baseline => 0,
            Structure::NonDescendant => l.u_z,
            Structure::PartialMediator | Structure::PureMediator => match arm {
                Arm::Treated => l.u_z % self.k,
                Arm::Control => l.u_z / self.k,
            },
        }
    }

    /// Natural value of `X`.
    pub fn x_natural(&self, l: &Latent) -> Arm {
        let treated = match self.structure {
            Structure::NonDescendant => bit(l.u_x, l.u_z),
            _ => l.u_x == 1,
        };
        if treated {
            Arm::Treated
        } else {
            Arm::Control
        }
    }

    /// `Y` given its parents' values; `true` is `y`.
    fn f_y(&self, l: &Latent, arm: Arm, z: usize) -> bool {
        match self.structure {
            Structure::Baseline => bit(l.u_y, arm.index()),
            Structure::NonDescendant | Structure::PartialMediator => {
                bit(l.u_y, arm.index() * self.k + z)
            }
            Structure::PureMediator => bit(l.u_y, z),
        }
    }

    /// `Y_arm(u)`: force `X`, propagate through `Z`.
    pub fn y_under(&self, l: &Latent, arm: Arm) -> bool {
        self.f_y(l, arm, self.z_under(l, arm))
    }
}

/// Draws the weights of one latent factor: independent uniforms,
/// each zeroed with probability 1/2 when `sparse` (at least one kept),
/// then normalized.
fn simplex<R: Rng + ?Sized>(rng: &mut R, n: usize, sparse: bool) -> Vec<f64> {
    loop {
        let w: Vec<f64> = (0..n)
            .map(|_| {
                let keep = !sparse || rng.random_bool(0.5);
                let u: f64 = rng.random();
                if keep {
                    u
                } else {
                    0.0
                }
            })
            .collect();
        let total = pairwise_sum(&w);
        if total > 0.0 {
            return w.into_iter().map(|v| v / total).collect();
        }
    }
}

/// Samples a random SCM.
///
/// Baseline and non-descendant models get a joint (dependent) latent
/// table, so `X` and `Y` may share unobserved causes; mediator models get
/// independent latents per variable, as their bounds require. The `X`
/// factor of mediator models is dense so both arms have positive mass.
pub fn sample_scm<R: Rng + ?Sized>(
    structure: Structure,
    k: usize,
    rng: &mut R,
) -> Result<Scm, ScmError> {
    let k = if structure == Structure::Baseline {
        1
    } else {
        k
    };
    if structure != Structure::Baseline && !(2..=MAX_K).contains(&k) {
        return Err(ScmError::UnsupportedArity(k));
    }
    let (nz, nx, ny) = latent_arities(structure, k);
    if nz * nx * ny > MAX_LATENT_STATES {
        return Err(ScmError::UnsupportedArity(k));
    }
    let mut latents = Vec::with_capacity(nz * nx * ny);
    match structure {
        Structure::Baseline | Structure::NonDescendant => {
            let w = simplex(rng, nz * nx * ny, true);
            let mut i = 0;
            for u_z in 0..nz {
                for u_x in 0..nx {
                    for u_y in 0..ny {
                        if w[i] > 0.0 {
                            latents.push((Latent { u_z, u_x, u_y }, w[i]));
                        }
                        i += 1;
                    }
                }
            }
        }
        Structure::PartialMediator | Structure::PureMediator => {
            let wz = simplex(rng, nz, true);
            let wx = simplex(rng, nx, false);
            let wy = simplex(rng, ny, true);
            for (u_z, pz) in wz.iter().enumerate().filter(|(_, p)| **p > 0.0) {
                for (u_x, px) in wx.iter().enumerate() {
                    for (u_y, py) in wy.iter().enumerate().filter(|(_, p)| **p > 0.0) {
                        latents.push((Latent { u_z, u_x, u_y }, pz * px * py));
                    }
                }
            }
        }
    }
    Scm::new(structure, k, latents)
}

/// Exact response-type probabilities by enumeration.
pub fn exact_counterfactuals(scm: &Scm) -> ResponseTypes {
    let mut buckets: [Vec<f64>; 4] = Default::default();
    for (l, p) in scm.latents() {
        let idx = match (scm.y_under(l, Arm::Treated), scm.y_under(l, Arm::Control)) {
            (true, false) => 0,
            (true, true) => 1,
            (false, false) => 2,
            (false, true) => 3,
        };
        buckets[idx].push(*p);
    }
    ResponseTypes {
        complier: pairwise_sum(&buckets[0]),
        always_taker: pairwise_sum(&buckets[1]),
        never_taker: pairwise_sum(&buckets[2]),
        defier: pairwise_sum(&buckets[3]),
    }
}

/// `β·P(complier) + γ·P(always) + θ·P(never) + δ·P(defier)`.
pub fn exact_benefit(scm: &Scm, bv: &BenefitVector) -> f64 {
    let t = exact_counterfactuals(scm);
    bv.beta * t.complier
        + bv.gamma * t.always_taker
        + bv.theta * t.never_taker
        + bv.delta * t.defier
}

/// Probability mass of compliers whose mediator does not respond to `X`.
pub fn nonresponsive_complier_mass(scm: &Scm) -> f64 {
    let mass: Vec<f64> = scm
        .latents()
        .iter()
        .filter(|(l, _)| {
            scm.y_under(l, Arm::Treated)
                && !scm.y_under(l, Arm::Control)
                && scm.z_under(l, Arm::Treated) == scm.z_under(l, Arm::Control)
        })
        .map(|(_, p)| *p)
        .collect();
    pairwise_sum(&mass)
}

/// `P(y_arm | c)` by intervention.
pub fn p_y_do(scm: &Scm, arm: Arm) -> f64 {
    let mass: Vec<f64> = scm
        .latents()
        .iter()
        .filter(|(l, _)| scm.y_under(l, arm))
        .map(|(_, p)| *p)
        .collect();
    pairwise_sum(&mass)
}

/// `z -> P(z_arm | c)` by intervention.
pub fn p_z_do(scm: &Scm, arm: Arm) -> Vec<f64> {
    let mut dist = vec![0.0; scm.k()];
    for (l, p) in scm.latents() {
        dist[scm.z_under(l, arm)] += p;
    }
    dist
}

/// Observational joint `P(X, Z, Y | c)`.
pub fn observational_joint(scm: &Scm) -> JointTable {
    let k = scm.k();
    let mut cells = vec![0.0; 4 * k];
    for (l, p) in scm.latents() {
        let arm = scm.x_natural(l);
        let z = scm.z_under(l, arm);
        let y = if scm.f_y(l, arm, z) {
            Outcome::Success
        } else {
            Outcome::Failure
        };
        cells[(arm.index() * k + z) * 2 + y.index()] += p;
    }
    JointTable::new(k, cells).expect("shape fixed by k")
}

/// The population data an analyst would see for this model.
pub fn induced_input(scm: &Scm) -> PopulationData {
    let joint = observational_joint(scm);
    match scm.structure() {
        Structure::Baseline => PopulationData::Baseline(BaselineInput {
            p_y_do_x: p_y_do(scm, Arm::Treated),
            p_y_do_xp: p_y_do(scm, Arm::Control),
            obs: joint.xy_margin(),
        }),
        Structure::NonDescendant => {
            let k = scm.k();
            let mut strata = Vec::with_capacity(k);
            for z in 0..k {
                let in_z: Vec<&(Latent, f64)> =
                    scm.latents().iter().filter(|(l, _)| l.u_z == z).collect();
                let weight = pairwise_sum(&in_z.iter().map(|(_, p)| *p).collect::<Vec<_>>());
                if weight <= 0.0 {
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
                let rate = |arm| {
                    let m: Vec<f64> = in_z
                        .iter()
                        .filter(|(l, _)| scm.y_under(l, arm))
                        .map(|(_, p)| *p)
                        .collect();
                    pairwise_sum(&m) / weight
                };
                let cell = |arm, y| joint.get(arm, z, y) / weight;
                strata.push(Stratum {
                    weight,
                    p_y_do_x: rate(Arm::Treated),
                    p_y_do_xp: rate(Arm::Control),
                    obs: ObsTable {
                        p_xy: cell(Arm::Treated, Outcome::Success),
                        p_xyp: cell(Arm::Treated, Outcome::Failure),
                        p_xpy: cell(Arm::Control, Outcome::Success),
                        p_xpyp: cell(Arm::Control, Outcome::Failure),
                    },
                });
            }
            PopulationData::Stratified(StratifiedInput { strata })
        }
        Structure::PartialMediator => PopulationData::PartialMediator(PartialMediatorInput {
            p_y_do_x: p_y_do(scm, Arm::Treated),
            p_y_do_xp: p_y_do(scm, Arm::Control),
            p_z_do_x: p_z_do(scm, Arm::Treated),
            p_z_do_xp: p_z_do(scm, Arm::Control),
            obs: joint,
        }),
        Structure::PureMediator => PopulationData::PureMediator(PureMediatorInput {
            p_y_do_x: p_y_do(scm, Arm::Treated),
            p_y_do_xp: p_y_do(scm, Arm::Control),
            obs: joint,
        }),
    }
}

/// The regime-specific PNS bounds for an induced input.
pub fn pns_bounds(data: &PopulationData) -> Result<PnsBounds, pns::BoundsError> {
    match data {
        PopulationData::Baseline(b) => pns::pns_baseline(b),
        PopulationData::Stratified(s) => pns::pns_stratified(s),
        PopulationData::PartialMediator(p) => pns::pns_partial_mediator(p),
        PopulationData::PureMediator(p) => pns::pns_pure_mediator(p),
    }
}

/// Outcome of checking bounds against exact values over many models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainmentReport {
    pub structure: Structure,
    pub trials: usize,
    pub pns_violations: usize,
    pub benefit_violations: usize,
    /// Regime interval not inside the Li–Pearl interval on the margin.
    pub dominance_violations: usize,
    pub invalid_inputs: usize,
    pub bound_errors: usize,
    /// `max |W + σ·PNS − exact benefit|`
    pub max_decomposition_error: f64,
    /// `max |(PNS − P(defier)) − (P(y_x) − P(y_{x'}))|`
    pub max_effect_identity_error: f64,
    /// `max |Σ response types − 1|`
    pub max_type_sum_error: f64,
}

impl ContainmentReport {
    pub fn is_clean(&self) -> bool {
        self.pns_violations == 0
            && self.benefit_violations == 0
            && self.dominance_violations == 0
            && self.invalid_inputs == 0
            && self.bound_errors == 0
    }
}

/// Slack for containment and dominance checks.
pub const CONTAINMENT_SLACK: f64 = 1e-9;

/// Samples `trials` models (Z-arity cycling through 2..=4) from a seeded
/// ChaCha stream and checks every bound against the enumerated truth.
pub fn run_containment(
    structure: Structure,
    trials: usize,
    seed: u64,
    bv: &BenefitVector,
) -> ContainmentReport {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut report = ContainmentReport {
        structure,
        trials,
        pns_violations: 0,
        benefit_violations: 0,
        dominance_violations: 0,
        invalid_inputs: 0,
        bound_errors: 0,
        max_decomposition_error: 0.0,
        max_effect_identity_error: 0.0,
        max_type_sum_error: 0.0,
    };
    for trial in 0..trials {
        let k = 2 + trial % 3;
        let scm = sample_scm(structure, k, &mut rng).expect("k within range");
        let truth = exact_counterfactuals(&scm);
        let data = induced_input(&scm);
        if data.validate(crate::numeric::EPS_SUM).is_err() {
            report.invalid_inputs += 1;
        }
        let margin = data.margin();
        let exact = exact_benefit(&scm, bv);
        let decomposed = benefit::decompose(bv, truth.pns(), margin.p_y_do_x, margin.p_y_do_xp);
        report.max_decomposition_error = report
            .max_decomposition_error
            .max((decomposed - exact).abs());
        report.max_effect_identity_error = report
            .max_effect_identity_error
            .max(((truth.complier - truth.defier) - (margin.p_y_do_x - margin.p_y_do_xp)).abs());
        report.max_type_sum_error = report.max_type_sum_error.max((truth.total() - 1.0).abs());

        let (Ok(pns), Ok(ben), Ok(lp)) = (
            pns_bounds(&data),
            benefit::bounds(&data, bv),
            benefit::lipearl_bounds(&margin, bv),
        ) else {
            report.bound_errors += 1;
            continue;
        };
        if !pns.interval.contains(truth.pns(), CONTAINMENT_SLACK) {
            report.pns_violations += 1;
        }
        if !ben.interval.contains(exact, CONTAINMENT_SLACK) {
            report.benefit_violations += 1;
        }
        let dominated = ben.interval.is_within(&lp.interval, CONTAINMENT_SLACK);
        let lower_kept = match structure {
            Structure::PartialMediator | Structure::PureMediator => pns.lower() == lp.pns.lower(),
            _ => true,
        };
        if !dominated || !lower_kept {
            report.dominance_violations += 1;
        }
    }
    report
}
