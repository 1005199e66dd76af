//! Ego-network cluster randomization for measuring network effects.

pub mod analysis;
pub mod assignment;
pub mod clustering;
pub mod graph;
pub mod hashing;
pub mod scalar;
pub mod simulation;
pub mod stats;

pub use graph::MemberId;
pub use scalar::Real;

pub type Graph = graph::Graph<f64>;
pub type Graph32 = graph::Graph<f32>;
pub type ClusteringResult = clustering::ClusteringResult<f64>;
pub type EgoCluster = clustering::EgoCluster<f64>;
pub type OutcomeTable = analysis::OutcomeTable<f64>;
pub type TTestResult = analysis::TTestResult<f64>;
pub type AnalysisReport = analysis::AnalysisReport<f64>;
pub type RepresentativityReport = analysis::RepresentativityReport<f64>;
pub type LeftoverReport = analysis::LeftoverReport<f64>;
pub type DiagnosticsReport = clustering::DiagnosticsReport<f64>;
