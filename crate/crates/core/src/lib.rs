//! Bounds on the probability of necessity and sufficiency and on unit-level
//! benefit, using covariates, partial mediators and pure mediators.

pub mod adjustment;
pub mod benefit;
pub mod counts;
pub mod model;
pub mod numeric;
pub mod oracle;
pub mod pns;
pub mod simulation;

pub use adjustment::AdjustmentError;
pub use benefit::{bounds, checked_bounds, decide, BenefitBounds, Decision, Sign};
pub use counts::{from_counts, from_tables, CellTable, CountTable, IngestError};
pub use model::{
    Arm, BaselineInput, BenefitVector, Interval, JointTable, Marginals, ObsTable, Outcome,
    PartialMediatorInput, PopulationData, PureMediatorInput, StratifiedInput, Stratum, Structure,
    ValidationError,
};
pub use numeric::{EPS_CMP, EPS_SUM, INGEST_TOLERANCE};
pub use oracle::{ContainmentReport, Scm};
pub use pns::{BoundsError, PnsBounds};
pub use simulation::{
    run_study, run_study_filtered, SampleRecord, SimulationSummary, Study, StudyConfig,
};
