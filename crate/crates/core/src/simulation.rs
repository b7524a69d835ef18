//! Randomized comparison of the covariate/mediator bounds against the
//! Li–Pearl bounds on the same margin.
//!
//! Sample `i` of a study with seed `s` draws from ChaCha8 seeded with `s`
//! on stream `i`, so samples are independent of worker count and order.
//! Sums are folded per fixed-size chunk and the chunk partials are
//! combined pairwise, which keeps reported averages bitwise stable.

use std::io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adjustment::{self, AdjustmentError};
use crate::benefit;
use crate::model::{
    Arm, BenefitVector, JointTable, ObsTable, PartialMediatorInput, PopulationData,
    PureMediatorInput, StratifiedInput, Stratum, Structure,
};
use crate::numeric::{format_significant, pairwise_sum, EPS_CMP};
use crate::pns::BoundsError;

pub const CHUNK: usize = 4096;
/// Studies keep per-sample records up to this size.
pub const MAX_RECORDS: usize = 1_000_000;
const POPULATION: f64 = 1000.0;

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("no simulation study for structure {0}")]
    UnsupportedCase(Structure),
    #[error("could not build worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Adjustment(#[from] AdjustmentError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// `[a, b]` from the structure-aware bounds, `[c, d]` from Li–Pearl.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl SampleRecord {
    pub fn flipped(&self) -> bool {
        (self.a + self.b) * (self.c + self.d) < 0.0
    }

    pub fn narrower(&self) -> bool {
        self.a > self.c + EPS_CMP || self.b < self.d - EPS_CMP
    }

    pub fn dominated(&self, slack: f64) -> bool {
        self.a >= self.c - slack && self.b <= self.d + slack
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub avg_lower_gain: f64,
    pub avg_upper_gain: f64,
    pub avg_gap_baseline: f64,
    pub avg_gap_theorem: f64,
    pub flips: usize,
    pub narrower: usize,
    pub n: usize,
}

impl SimulationSummary {
    pub fn empty() -> Self {
        Self {
            avg_lower_gain: 0.0,
            avg_upper_gain: 0.0,
            avg_gap_baseline: 0.0,
            avg_gap_theorem: 0.0,
            flips: 0,
            narrower: 0,
            n: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Partial {
    lower_gain: f64,
    upper_gain: f64,
    gap_baseline: f64,
    gap_theorem: f64,
    flips: usize,
    narrower: usize,
    dominance_violations: usize,
    n: usize,
}

fn chunk_partial(records: &[SampleRecord]) -> Partial {
    let sum =
        |f: fn(&SampleRecord) -> f64| pairwise_sum(&records.iter().map(f).collect::<Vec<_>>());
    Partial {
        lower_gain: sum(|r| r.a - r.c),
        upper_gain: sum(|r| r.d - r.b),
        gap_baseline: sum(|r| r.d - r.c),
        gap_theorem: sum(|r| r.b - r.a),
        flips: records.iter().filter(|r| r.flipped()).count(),
        narrower: records.iter().filter(|r| r.narrower()).count(),
        dominance_violations: records.iter().filter(|r| !r.dominated(1e-9)).count(),
        n: records.len(),
    }
}

fn combine(partials: &[Partial]) -> (SimulationSummary, usize) {
    let n: usize = partials.iter().map(|p| p.n).sum();
    if n == 0 {
        return (SimulationSummary::empty(), 0);
    }
    let avg = |f: fn(&Partial) -> f64| {
        pairwise_sum(&partials.iter().map(f).collect::<Vec<_>>()) / n as f64
    };
    let summary = SimulationSummary {
        avg_lower_gain: avg(|p| p.lower_gain),
        avg_upper_gain: avg(|p| p.upper_gain),
        avg_gap_baseline: avg(|p| p.gap_baseline),
        avg_gap_theorem: avg(|p| p.gap_theorem),
        flips: partials.iter().map(|p| p.flips).sum(),
        narrower: partials.iter().map(|p| p.narrower).sum(),
        n,
    };
    (
        summary,
        partials.iter().map(|p| p.dominance_violations).sum(),
    )
}

/// The summary of a list of records, folded exactly as a study folds them.
pub fn summarize(records: &[SampleRecord]) -> SimulationSummary {
    let partials: Vec<Partial> = records.chunks(CHUNK).map(chunk_partial).collect();
    combine(&partials).0
}

/// The rng for sample `index` of a study seeded with `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One draw of the non-descendant generator: a binary covariate with
/// counts `t` over (x∧z, x'∧z, x∧z', x'∧z') out of 1000 and success
/// counts `o` inside each cell. Degenerate strata are redrawn.
pub fn gen_nondescendant<R: Rng + ?Sized>(rng: &mut R) -> StratifiedInput {
    loop {
        let t1 = rng.random::<f64>() * POPULATION;
        let t2 = rng.random::<f64>() * (POPULATION - t1);
        let t3 = rng.random::<f64>() * (POPULATION - t1 - t2);
        let t4 = POPULATION - t1 - t2 - t3;
        let o1 = rng.random::<f64>() * t1;
        let o2 = rng.random::<f64>() * t2;
        let o3 = rng.random::<f64>() * t3;
        let o4 = rng.random::<f64>() * t4;
        let (nz, nzp) = (t1 + t2, t3 + t4);
        let y_do_x_z = rng.random::<f64>() * t2 / nz + o1 / nz;
        let y_do_xp_z = rng.random::<f64>() * t1 / nz + o2 / nz;
        let y_do_x_zp = rng.random::<f64>() * t4 / nzp + o3 / nzp;
        let y_do_xp_zp = rng.random::<f64>() * t3 / nzp + o4 / nzp;
        if nz <= 0.0 || nzp <= 0.0 {
            continue;
        }
        let stratum = |n: f64, tx: f64, txp: f64, ox: f64, oxp: f64, yx: f64, yxp: f64| Stratum {
            weight: n / POPULATION,
            p_y_do_x: yx,
            p_y_do_xp: yxp,
            obs: ObsTable {
                p_xy: ox / n,
                p_xyp: (tx - ox) / n,
                p_xpy: oxp / n,
                p_xpyp: (txp - oxp) / n,
            },
        };
        return StratifiedInput {
            strata: vec![
                stratum(nz, t1, t2, o1, o2, y_do_x_z, y_do_xp_z),
                stratum(nzp, t3, t4, o3, o4, y_do_x_zp, y_do_xp_zp),
            ],
        };
    }
}

/// Conditional tables for a binary partial mediator. Index 0 is `z`,
/// index 1 is `z'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartialMediatorDraw {
    pub p_x: f64,
    /// `P(z | arm)`, indexed by arm
    pub p_z: [f64; 2],
    /// `P(y | arm, z)`, indexed `[arm][z]`
    pub p_y: [[f64; 2]; 2],
}

impl PartialMediatorDraw {
    pub fn joint(&self) -> JointTable {
        JointTable::from_fn(2, |arm, z, y| {
            let a = arm.index();
            let px = if arm == Arm::Treated {
                self.p_x
            } else {
                1.0 - self.p_x
            };
            let pz = if z == 0 {
                self.p_z[a]
            } else {
                1.0 - self.p_z[a]
            };
            let py = self.p_y[a][z];
            px * pz * if y.index() == 0 { py } else { 1.0 - py }
        })
    }

    pub fn assemble(&self) -> Result<PartialMediatorInput, AdjustmentError> {
        adjustment::assemble_partial_mediator(&self.joint(), true)
    }
}

pub fn gen_partial_mediator<R: Rng + ?Sized>(rng: &mut R) -> PartialMediatorDraw {
    let p_x = rng.random();
    let p_z = [rng.random(), rng.random()];
    let (yxz, yxpz, yxzp, yxpzp) = (rng.random(), rng.random(), rng.random(), rng.random());
    PartialMediatorDraw {
        p_x,
        p_z,
        p_y: [[yxz, yxzp], [yxpz, yxpzp]],
    }
}

/// Conditional tables for a binary pure mediator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PureMediatorDraw {
    pub p_x: f64,
    pub p_z: [f64; 2],
    /// `P(y | z)`, indexed by z
    pub p_y: [f64; 2],
}

impl PureMediatorDraw {
    pub fn joint(&self) -> JointTable {
        PartialMediatorDraw {
            p_x: self.p_x,
            p_z: self.p_z,
            p_y: [self.p_y, self.p_y],
        }
        .joint()
    }

    pub fn assemble(&self) -> Result<PureMediatorInput, AdjustmentError> {
        adjustment::assemble_pure_mediator(&self.joint(), true)
    }
}

pub fn gen_pure_mediator<R: Rng + ?Sized>(rng: &mut R) -> PureMediatorDraw {
    let p_x = rng.random();
    let p_z = [rng.random(), rng.random()];
    let p_y = [rng.random(), rng.random()];
    PureMediatorDraw { p_x, p_z, p_y }
}

/// Draws the population for one sample of a study.
pub fn generate(case: Structure, rng: &mut ChaCha8Rng) -> Result<PopulationData, SimulationError> {
    Ok(match case {
        Structure::NonDescendant => PopulationData::Stratified(gen_nondescendant(rng)),
        Structure::PartialMediator => {
            PopulationData::PartialMediator(gen_partial_mediator(rng).assemble()?)
        }
        Structure::PureMediator => PopulationData::PureMediator(gen_pure_mediator(rng).assemble()?),
        Structure::Baseline => return Err(SimulationError::UnsupportedCase(case)),
    })
}

/// Paired bounds for one population.
pub fn compare(data: &PopulationData, bv: &BenefitVector) -> Result<SampleRecord, BoundsError> {
    let theorem = benefit::bounds(data, bv)?;
    let baseline = benefit::lipearl_bounds(&data.margin(), bv)?;
    Ok(SampleRecord {
        a: theorem.interval.lower(),
        b: theorem.interval.upper(),
        c: baseline.interval.lower(),
        d: baseline.interval.upper(),
    })
}

fn sample(
    case: Structure,
    bv: &BenefitVector,
    seed: u64,
    index: u64,
) -> Result<SampleRecord, SimulationError> {
    let data = generate(case, &mut sample_rng(seed, index))?;
    Ok(compare(&data, bv)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyConfig {
    pub case: Structure,
    pub n: usize,
    pub bv: BenefitVector,
    pub seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl StudyConfig {
    pub fn new(case: Structure, n: usize, seed: u64) -> Self {
        Self {
            case,
            n,
            bv: BenefitVector::cure_minus_harm(),
            seed,
            workers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Study {
    pub summary: SimulationSummary,
    /// Per-sample records in sample order, when `n` is at most [`MAX_RECORDS`].
    pub records: Option<Vec<SampleRecord>>,
    /// Samples drawn, including rejected ones in a filtered study.
    pub attempts: usize,
    /// Samples whose structure-aware interval escaped the Li–Pearl one.
    pub dominance_violations: usize,
}

impl Study {
    /// Accepted samples over attempts.
    pub fn acceptance_rate(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.summary.n as f64 / self.attempts as f64
        }
    }
}

fn check_case(case: Structure) -> Result<(), SimulationError> {
    match case {
        Structure::Baseline => Err(SimulationError::UnsupportedCase(case)),
        _ => Ok(()),
    }
}

fn in_pool<T: Send>(
    workers: Option<usize>,
    job: impl FnOnce() -> T + Send,
) -> Result<T, SimulationError> {
    match workers {
        Some(w) => Ok(rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()?
            .install(job)),
        None => Ok(job()),
    }
}

/// Draws `n` samples and compares the two bounds on each.
pub fn run_study(config: &StudyConfig) -> Result<Study, SimulationError> {
    check_case(config.case)?;
    let keep = config.n <= MAX_RECORDS;
    let chunks = config.n.div_ceil(CHUNK);
    let blocks = in_pool(config.workers, || {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let start = c * CHUNK;
                let end = (start + CHUNK).min(config.n);
                let records = (start..end)
                    .map(|i| sample(config.case, &config.bv, config.seed, i as u64))
                    .collect::<Result<Vec<_>, _>>()?;
                let partial = chunk_partial(&records);
                Ok((partial, if keep { records } else { Vec::new() }))
            })
            .collect::<Result<Vec<_>, SimulationError>>()
    })??;
    let partials: Vec<Partial> = blocks.iter().map(|(p, _)| *p).collect();
    let (summary, dominance_violations) = combine(&partials);
    let records = keep.then(|| blocks.into_iter().flat_map(|(_, r)| r).collect());
    Ok(Study {
        summary,
        records,
        attempts: config.n,
        dominance_violations,
    })
}

/// Draws samples until `n` of them are narrowed and summarizes those.
pub fn run_study_filtered(config: &StudyConfig) -> Result<Study, SimulationError> {
    check_case(config.case)?;
    let keep = config.n <= MAX_RECORDS;
    let wave = CHUNK * rayon::current_num_threads().max(1) * 4;
    let mut pending: Vec<SampleRecord> = Vec::new();
    let mut kept: Vec<SampleRecord> = Vec::new();
    let mut partials: Vec<Partial> = Vec::new();
    let mut accepted = 0usize;
    let mut attempts = 0usize;
    while accepted < config.n {
        let start = attempts;
        let batch = in_pool(config.workers, || {
            (start..start + wave)
                .into_par_iter()
                .map(|i| sample(config.case, &config.bv, config.seed, i as u64))
                .collect::<Result<Vec<_>, _>>()
        })??;
        for (offset, record) in batch.into_iter().enumerate() {
            if !record.narrower() {
                continue;
            }
            pending.push(record);
            accepted += 1;
            if pending.len() == CHUNK || accepted == config.n {
                partials.push(chunk_partial(&pending));
                if keep {
                    kept.append(&mut pending);
                } else {
                    pending.clear();
                }
            }
            if accepted == config.n {
                attempts = start + offset + 1;
                break;
            }
        }
        if accepted < config.n {
            attempts = start + wave;
        }
    }
    let (summary, dominance_violations) = combine(&partials);
    Ok(Study {
        summary,
        records: keep.then_some(kept),
        attempts,
        dominance_violations,
    })
}

/// Which baseline bound orders an exported series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SortKey {
    BaselineLower,
    BaselineUpper,
}

impl SortKey {
    /// The key used for a study's plots: lower bound when the covariate
    /// can move it, otherwise upper.
    pub fn for_case(case: Structure) -> Self {
        match case {
            Structure::NonDescendant | Structure::Baseline => SortKey::BaselineLower,
            Structure::PartialMediator | Structure::PureMediator => SortKey::BaselineUpper,
        }
    }

    fn of(self, r: &SampleRecord) -> f64 {
        match self {
            SortKey::BaselineLower => r.c,
            SortKey::BaselineUpper => r.d,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub idx: usize,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

/// Picks `m` records at random (seeded), sorts them by `key`, and numbers
/// them from 1.
pub fn select_series(
    records: &[SampleRecord],
    m: usize,
    key: SortKey,
    seed: u64,
) -> Vec<SeriesRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = m.min(records.len());
    let mut picked: Vec<SampleRecord> = rand::seq::index::sample(&mut rng, records.len(), m)
        .into_iter()
        .map(|i| records[i])
        .collect();
    picked.sort_by(|x, y| key.of(x).total_cmp(&key.of(y)));
    picked
        .into_iter()
        .enumerate()
        .map(|(i, r)| SeriesRow {
            idx: i + 1,
            a: r.a,
            b: r.b,
            c: r.c,
            d: r.d,
        })
        .collect()
}

/// Writes `idx,a,b,c,d` rows with six significant digits.
pub fn write_series<W: io::Write>(rows: &[SeriesRow], out: W) -> Result<(), SimulationError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["idx", "a", "b", "c", "d"])?;
    for r in rows {
        let mut fields = vec![r.idx.to_string()];
        fields.extend([r.a, r.b, r.c, r.d].map(|v| format_significant(v, 6)));
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_series<R: io::Read>(input: R) -> Result<Vec<SeriesRow>, SimulationError> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|row| row.map_err(SimulationError::from))
        .collect()
}
