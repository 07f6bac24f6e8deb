//! Monte Carlo trial engine, statistical acceptance checks, lower-bound
//! experiments, configuration, and result persistence.

pub mod config;
pub mod experiments;
pub mod instances;
pub mod report;
pub mod stats;
pub mod suite;

pub use config::ExperimentConfig;
pub use experiments::{
    add_points_experiment, run_experiment, ternary_lower_bound_experiment, AddPointsReport,
    TernaryLearnerKind, TernaryLowerBoundReport,
};
pub use report::{emit, EmitFormat, TrialReport, TrialRow};
pub use stats::{hoeffding_check, hoeffding_slack, HoeffdingCheck, DEFAULT_CONFIDENCE};
pub use suite::{run_criterion, run_suite, CriterionReport, SuiteReport, CRITERIA_COUNT};
