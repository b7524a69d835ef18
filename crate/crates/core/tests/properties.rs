use proptest::prelude::*;
use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use unitbound::adjustment::{assemble_partial_mediator, assemble_pure_mediator, AdjustmentError};
use unitbound::benefit::{self, decide};
use unitbound::counts::{from_counts, CountTable, IngestError};
use unitbound::model::{
    Arm, BaselineInput, BenefitVector, Interval, JointTable, ObsTable, Outcome, PopulationData,
    StratifiedInput, Stratum, Structure,
};
use unitbound::oracle::{self, sample_scm, Scm};
use unitbound::pns;
use unitbound::simulation::{run_study, summarize, StudyConfig};
use unitbound::{EPS_CMP, EPS_SUM};

fn obs_table() -> impl Strategy<Value = ObsTable> {
    // a zero cell now and then keeps degenerate tables in play
    let cell = prop_oneof![1 => Just(0.0), 6 => 0.0..1.0f64];
    [cell.clone(), cell.clone(), cell.clone(), cell]
        .prop_filter("some mass", |c| c.iter().sum::<f64>() > 1e-6)
        .prop_map(|c| {
            let t: f64 = c.iter().sum();
            ObsTable {
                p_xy: c[0] / t,
                p_xyp: c[1] / t,
                p_xpy: c[2] / t,
                p_xpyp: c[3] / t,
            }
        })
}

/// Experimental rates anywhere inside the window the observational table
/// allows.
fn baseline_input() -> impl Strategy<Value = BaselineInput> {
    (obs_table(), 0.0..=1.0f64, 0.0..=1.0f64).prop_map(|(obs, u, v)| {
        let x_lo = obs.p_xy;
        let x_hi = 1.0 - obs.p_xyp;
        let xp_lo = obs.p_xpy;
        let xp_hi = 1.0 - obs.p_xpyp;
        BaselineInput {
            p_y_do_x: x_lo + u * (x_hi - x_lo),
            p_y_do_xp: xp_lo + v * (xp_hi - xp_lo),
            obs,
        }
    })
}

fn stratified_input() -> impl Strategy<Value = StratifiedInput> {
    prop::collection::vec(
        (
            baseline_input(),
            prop_oneof![1 => Just(0.0), 8 => 0.01..1.0f64],
        ),
        1..5,
    )
    .prop_filter("some weight", |s| {
        s.iter().map(|(_, w)| w).sum::<f64>() > 0.0
    })
    .prop_map(|s| {
        let total: f64 = s.iter().map(|(_, w)| w).sum();
        StratifiedInput {
            strata: s
                .into_iter()
                .map(|(b, w)| Stratum {
                    weight: w / total,
                    p_y_do_x: b.p_y_do_x,
                    p_y_do_xp: b.p_y_do_xp,
                    obs: b.obs,
                })
                .collect(),
        }
    })
}

fn benefit_vector() -> impl Strategy<Value = BenefitVector> {
    prop::array::uniform4(-100.0..100.0f64)
        .prop_map(|[b, g, t, d]| BenefitVector::new(b, g, t, d).unwrap())
}

fn structure() -> impl Strategy<Value = Structure> {
    prop::sample::select(Structure::ALL.to_vec())
}

fn scm() -> impl Strategy<Value = Scm> {
    (structure(), 2usize..=3, any::<u64>())
        .prop_map(|(st, k, seed)| sample_scm(st, k, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap())
}

fn joint_table() -> impl Strategy<Value = JointTable> {
    (2usize..=4)
        .prop_flat_map(|k| prop::collection::vec(0.001..1.0f64, 4 * k).prop_map(move |c| (k, c)))
        .prop_map(|(k, c)| {
            let t: f64 = c.iter().sum();
            JointTable::new(k, c.into_iter().map(|v| v / t).collect()).unwrap()
        })
}

fn in_unit(i: &Interval) -> bool {
    i.lower() >= 0.0 && i.upper() <= 1.0 && i.lower() <= i.upper() + EPS_CMP
}

proptest! {
    #[test]
    fn pns_bounds_stay_in_unit_interval(input in baseline_input(), strat in stratified_input()) {
        prop_assert!(in_unit(&pns::pns_baseline(&input).unwrap().interval));
        prop_assert!(in_unit(&pns::pns_stratified(&strat).unwrap().interval));
    }

    #[test]
    fn stratified_bounds_never_wider_than_margin(strat in stratified_input()) {
        let inner = pns::pns_stratified(&strat).unwrap();
        let outer = pns::pns_baseline(&strat.margin()).unwrap();
        prop_assert!(inner.lower() >= outer.lower() - EPS_CMP, "{:?} {:?}", inner, outer);
        prop_assert!(inner.upper() <= outer.upper() + EPS_CMP, "{:?} {:?}", inner, outer);
    }

    #[test]
    fn mediators_keep_the_lower_bound(model in scm()) {
        let data = oracle::induced_input(&model);
        let lp = pns::pns_baseline(&data.margin()).unwrap();
        let bounds = oracle::pns_bounds(&data).unwrap();
        prop_assert!(in_unit(&bounds.interval));
        if matches!(data, PopulationData::PartialMediator(_) | PopulationData::PureMediator(_)) {
            prop_assert_eq!(bounds.lower(), lp.lower());
            prop_assert!(bounds.upper() <= lp.upper());
        }
    }

    #[test]
    fn benefit_interval_covers_every_pns_in_bounds(input in baseline_input(), bv in benefit_vector()) {
        let b = benefit::lipearl_bounds(&input, &bv).unwrap();
        let scale = 1.0 + bv.as_array().iter().map(|v| v.abs()).sum::<f64>();
        for i in 0..=10 {
            let p = b.pns.lower() + (b.pns.upper() - b.pns.lower()) * i as f64 / 10.0;
            let f = benefit::decompose(&bv, p, input.p_y_do_x, input.p_y_do_xp);
            prop_assert!(b.interval.contains(f, 1e-12 * scale), "{f} outside {}", b.interval);
        }
    }

    #[test]
    fn decision_ignores_positive_rescaling(input in baseline_input(), bv in benefit_vector(), j in -10i32..10) {
        let k = 2f64.powi(j);
        let a = benefit::lipearl_bounds(&input, &bv).unwrap();
        let b = benefit::lipearl_bounds(&input, &bv.scaled(k)).unwrap();
        prop_assert_eq!(decide(&a.interval).whole_interval, decide(&b.interval).whole_interval);
        let s = a.interval.lower() + a.interval.upper();
        if s.abs() > EPS_CMP && (s * k).abs() > EPS_CMP {
            prop_assert_eq!(decide(&a.interval).midpoint, decide(&b.interval).midpoint);
        }
    }

    #[test]
    fn zero_sigma_gives_a_point(input in baseline_input(), [b, g, t] in prop::array::uniform3(-10i32..10)) {
        let bv = BenefitVector::new(b as f64, g as f64, t as f64, (g + t - b) as f64).unwrap();
        let out = benefit::lipearl_bounds(&input, &bv).unwrap();
        prop_assert!(out.is_point);
        prop_assert_eq!(out.interval.width(), 0.0);
    }

    #[test]
    fn regime_benefit_inside_lipearl(model in scm(), bv in benefit_vector()) {
        let data = oracle::induced_input(&model);
        let inner = benefit::bounds(&data, &bv).unwrap();
        let outer = benefit::lipearl_bounds(&data.margin(), &bv).unwrap();
        prop_assert!(inner.interval.is_within(&outer.interval, 1e-9));
    }

    #[test]
    fn marginals_scale_linearly(obs in obs_table(), w in 0.0..10.0f64) {
        let a = obs.scaled(w).marginals();
        let b = obs.marginals();
        for (x, y) in [(a.p_y, b.p_y), (a.p_y_x, b.p_y_x), (a.p_y_xp, b.p_y_xp),
                       (a.p_yp_x, b.p_yp_x), (a.p_yp_xp, b.p_yp_xp), (a.p_x, b.p_x)] {
            prop_assert!((x - w * y).abs() <= 1e-12 * (1.0 + w));
        }
    }

    #[test]
    fn oracle_inputs_validate(model in scm()) {
        prop_assert_eq!(oracle::induced_input(&model).validate(EPS_SUM), Ok(()));
    }

    #[test]
    fn pure_mediator_compliers_move_the_mediator(k in 2usize..=4, seed in any::<u64>()) {
        let model = sample_scm(Structure::PureMediator, k, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(oracle::nonresponsive_complier_mass(&model), 0.0);
    }

    #[test]
    fn adjusted_inputs_validate(joint in joint_table()) {
        let p = PopulationData::PartialMediator(assemble_partial_mediator(&joint, true).unwrap());
        prop_assert_eq!(p.validate(EPS_SUM), Ok(()));
        let q = PopulationData::PureMediator(assemble_pure_mediator(&joint, true).unwrap());
        prop_assert_eq!(q.validate(EPS_SUM), Ok(()));
    }

    #[test]
    fn intervals_reject_reversed_ends(lo in -5.0..5.0f64, gap in 1e-9..1.0f64) {
        prop_assert!(Interval::new(lo + gap, lo).is_err());
        prop_assert!(Interval::new(lo, lo + gap).is_ok());
    }
}

/// Counts from `n` units drawn from `model`: every unit lands in the
/// observational table under its natural treatment and in the
/// experimental table under both arms.
fn unit_counts(model: &Scm, n: usize, seed: u64) -> (CountTable, CountTable) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = WeightedIndex::new(model.latents().iter().map(|(_, p)| *p)).unwrap();
    let k = model.k();
    let (mut exp, mut obs) = (CountTable::zeros(k), CountTable::zeros(k));
    let outcome = |y: bool| {
        if y {
            Outcome::Success
        } else {
            Outcome::Failure
        }
    };
    for _ in 0..n {
        let (l, _) = &model.latents()[weights.sample(&mut rng)];
        for arm in Arm::BOTH {
            let (z, y) = (model.z_under(l, arm), outcome(model.y_under(l, arm)));
            exp.set(arm, z, y, exp.get(arm, z, y) + 1);
        }
        let arm = model.x_natural(l);
        let (z, y) = (model.z_under(l, arm), outcome(model.y_under(l, arm)));
        obs.set(arm, z, y, obs.get(arm, z, y) + 1);
    }
    (exp, obs)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ingested_unit_counts_validate(model in scm(), seed in any::<u64>()) {
        let (exp, obs) = unit_counts(&model, 400, seed);
        let result = from_counts(model.structure(), Some(&exp), &obs, false, EPS_SUM);
        match result {
            Ok(data) => prop_assert_eq!(data.validate(EPS_SUM), Ok(())),
            // a mediator value no unit reached leaves a conditional undefined
            Err(e) => prop_assert!(
                matches!(e, IngestError::EmptyTable(_)
                    | IngestError::Adjustment(AdjustmentError::ZeroConditioningEvent(_))),
                "{e}"
            ),
        }
    }

    #[test]
    fn study_flips_ignore_positive_rescaling(seed in any::<u64>(), j in -6i32..6, case in prop::sample::select(vec![
        Structure::NonDescendant, Structure::PartialMediator, Structure::PureMediator,
    ])) {
        let mut cfg = StudyConfig::new(case, 500, seed);
        let base = run_study(&cfg).unwrap();
        cfg.bv = cfg.bv.scaled(2f64.powi(j));
        let scaled = run_study(&cfg).unwrap();
        prop_assert_eq!(base.summary.flips, scaled.summary.flips);
        let s = base.summary;
        prop_assert!(s.avg_gap_theorem <= s.avg_gap_baseline + EPS_CMP);
        prop_assert!(s.flips <= s.n && s.narrower <= s.n);
        prop_assert_eq!(summarize(base.records.as_ref().unwrap()), s);
    }
}
