//! Statistical readout on egos.

mod experiment;
mod leftover;
mod outcomes;
mod representativity;
pub mod special;
mod ttest;

use crate::graph::{GraphError, MemberId};

pub use experiment::{
    aa_check, analyze_experiment, ego_arms, AaReport, AnalysisReport, MetricReadout,
    DEFAULT_AA_LEVEL, SIGNIFICANCE_NOTE_LEVEL,
};
pub use leftover::{leftover_diagnostics, LeftoverReport, LeftoverRow};
pub use outcomes::OutcomeTable;
pub use representativity::{
    compare_to_population, representativity_check, standardized_mean_difference, Comparison,
    Population, RepresentativityReport,
};
pub use ttest::{welch_t_test, TTestResult};

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("insufficient sample for '{metric}': {n_a} vs {n_b} egos (need at least 2 per arm)")]
    InsufficientSample {
        metric: String,
        n_a: usize,
        n_b: usize,
    },
    #[error("no outcome row for member {0}")]
    MissingOutcome(MemberId),
    #[error("unknown metric '{0}'")]
    UnknownMetric(String),
    #[error("duplicate outcome row for member {0}")]
    DuplicateMember(MemberId),
    #[error("row for member {member} has {got} values, expected {expected}")]
    RaggedRow {
        member: MemberId,
        expected: usize,
        got: usize,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Graph(#[from] GraphError),
}
