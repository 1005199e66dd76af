//! Synthetic graphs, potential outcomes and end-to-end studies.

mod graphs;
mod outcomes;
mod studies;

use serde::{Deserialize, Serialize};

use crate::analysis::AnalysisError;
use crate::assignment::AssignmentError;
use crate::clustering::ClusteringError;
use crate::graph::MemberId;

pub use graphs::{generate_graph, Generator, GraphSpec, WeightSpec};
pub use outcomes::{simulate_baseline, simulate_outcomes, NoiseKind, OutcomeModel, ResponseShape};
pub use studies::{
    attenuation_study, mode_contrast_study, naive_vs_stratified_study, AttenuationConfig,
    AttenuationReport, ContrastReport, Histogram, NaiveVsStratifiedConfig, NaiveVsStratifiedReport,
    PipelineFixture, Replication, SeedComparison,
};

#[derive(Debug, thiserror::Error)]
pub enum SimulationError {
    #[error("infeasible graph specification: {0}")]
    Infeasible(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("member {0} has no assignment")]
    Uncovered(MemberId),
    #[error(transparent)]
    Clustering(#[from] ClusteringError),
    #[error(transparent)]
    Assignment(#[from] AssignmentError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// A study config file: `study = "attenuation"` or
/// `study = "naive_vs_stratified"` plus that study's fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "study", rename_all = "snake_case")]
pub enum StudyConfig {
    Attenuation(AttenuationConfig),
    NaiveVsStratified(NaiveVsStratifiedConfig),
}
