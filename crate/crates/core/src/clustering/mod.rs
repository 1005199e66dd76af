//! Ego-cluster construction.
//!
//! Two builders are provided: [`naive_cluster`], the sequential baseline that
//! keeps drawing random egos until recent egos lose too many alters, and
//! [`stratified_cluster`] + [`reattach_alters`], which draws egos round-robin
//! from degree strata under a per-ego loss-rate cap and then hands leftover
//! neighbors to adjacent egos.
//!
//! Every member belongs to at most one cluster, as ego or as alter.

mod diagnostics;
mod io;
mod naive;
mod reattach;
mod stratified;

use serde::{Deserialize, Serialize};

use crate::graph::{Graph, GraphError, MemberId};
use crate::scalar::Real;

pub use diagnostics::{
    diagnostics_report, DiagnosticsReport, DiagnosticsRow, DiagnosticsSummary, WindowStat,
};
pub use io::{
    read_clusters_json, read_clusters_tsv, write_clusters_json, write_clusters_tsv, write_leftover,
};
pub use naive::{naive_candidate_order, naive_cluster};
pub use reattach::reattach_alters;
pub use stratified::{max_lost_alters, stratified_cluster};

#[derive(Debug, thiserror::Error)]
pub enum ClusteringError {
    #[error("stop_loss must be in (0, 1], got {0}")]
    InvalidStopLoss(f64),
    #[error("target_loss must be in [0, 1), got {0}")]
    InvalidTargetLoss(f64),
    #[error("window must be at least 1")]
    InvalidWindow,
    #[error("reattachment needs a stratified clustering with a target loss")]
    NotStratified,
    #[error("clustering does not match the graph: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Naive,
    Stratified,
    StratifiedReattached,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Naive => "naive",
            Algorithm::Stratified => "stratified",
            Algorithm::StratifiedReattached => "stratified_reattached",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringParams<R> {
    pub algorithm: Algorithm,
    /// Per-ego loss cap (stratified).
    pub target_loss: Option<R>,
    /// Trailing-mean stopping threshold (naive).
    pub stop_loss: Option<R>,
    /// Trailing window length (naive).
    pub window: Option<usize>,
    pub bin_count: Option<usize>,
    pub seed: u64,
}

/// One ego with the alters claimed for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoCluster<R> {
    pub ego: MemberId,
    /// Sorted ascending; always a subset of the ego's neighbors.
    pub cluster_alters: Vec<MemberId>,
    pub original_degree: usize,
    pub loss_rate: R,
    pub weighted_loss_rate: R,
}

impl<R: Real> EgoCluster<R> {
    /// Builds a cluster and computes both loss rates from the graph.
    pub fn from_graph(
        g: &Graph<R>,
        ego: MemberId,
        mut cluster_alters: Vec<MemberId>,
    ) -> Result<Self, ClusteringError> {
        cluster_alters.sort_unstable();
        cluster_alters.dedup();
        let ie = g.index_of(ego)?;
        let (ns, ws) = g.neighbors_at(ie);
        let d = ns.len();
        let total: R = ws.iter().copied().sum();
        let mut kept = R::zero();
        for &a in &cluster_alters {
            let ia = g.index_of(a)?;
            match ns.binary_search(&ia) {
                Ok(k) => kept = kept + ws[k],
                Err(_) => {
                    return Err(ClusteringError::Inconsistent(format!(
                        "alter {a} is not a neighbor of ego {ego}"
                    )))
                }
            }
        }
        let (loss_rate, weighted_loss_rate) = loss_rates(d, cluster_alters.len(), total, kept);
        Ok(Self {
            ego,
            cluster_alters,
            original_degree: d,
            loss_rate,
            weighted_loss_rate,
        })
    }
}

/// `(1 - kept/degree, 1 - kept_weight/total_weight)`, computed as lost
/// shares.
pub(crate) fn loss_rates<R: Real>(degree: usize, kept: usize, total_w: R, kept_w: R) -> (R, R) {
    if degree == 0 {
        return (R::zero(), R::zero());
    }
    let loss = R::from_count(degree - kept) / R::from_count(degree);
    let wloss = if total_w > R::zero() {
        ((total_w - kept_w) / total_w).max(R::zero()).min(R::one())
    } else {
        R::zero()
    };
    (loss, wloss)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrawOutcome {
    /// Became an ego.
    Accepted,
    /// Already claimed by an earlier cluster.
    Collision,
    /// Free, but too few free neighbors to stay under the loss cap.
    Rejected,
}

/// One draw attempt, in draw order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord<R> {
    pub iteration: usize,
    pub member: MemberId,
    pub outcome: DrawOutcome,
    /// Loss rate at the time of acceptance (accepted draws only).
    pub ego_loss_rate: Option<R>,
    pub ego_original_degree: usize,
    /// Degree bin the candidate was drawn from (stratified only).
    pub bin: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IterationDiagnostics<R> {
    pub records: Vec<IterationRecord<R>>,
}

impl<R: Real> IterationDiagnostics<R> {
    pub fn draws(&self) -> usize {
        self.records.len()
    }

    pub fn count(&self, outcome: DrawOutcome) -> usize {
        self.records.iter().filter(|r| r.outcome == outcome).count()
    }

    pub fn collision_rate(&self) -> f64 {
        if self.records.is_empty() {
            0.0
        } else {
            self.count(DrawOutcome::Collision) as f64 / self.records.len() as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult<R> {
    /// In acceptance order.
    pub clusters: Vec<EgoCluster<R>>,
    /// Members in no cluster, ascending.
    pub leftover: Vec<MemberId>,
    pub diagnostics: IterationDiagnostics<R>,
    pub params: ClusteringParams<R>,
}

impl<R: Real> ClusteringResult<R> {
    pub fn ego_count(&self) -> usize {
        self.clusters.len()
    }

    pub fn egos(&self) -> impl Iterator<Item = MemberId> + '_ {
        self.clusters.iter().map(|c| c.ego)
    }

    /// Average loss rate over egos (zero when there are none).
    pub fn mean_loss_rate(&self) -> R {
        if self.clusters.is_empty() {
            return R::zero();
        }
        self.clusters.iter().map(|c| c.loss_rate).sum::<R>() / R::from_count(self.clusters.len())
    }

    pub fn max_loss_rate(&self) -> R {
        self.clusters
            .iter()
            .map(|c| c.loss_rate)
            .fold(R::zero(), R::max)
    }

    pub fn claimed_count(&self) -> usize {
        self.clusters
            .iter()
            .map(|c| 1 + c.cluster_alters.len())
            .sum()
    }

    /// Checks exclusivity, the subset relation, stored loss rates and the
    /// leftover set against `g`.
    pub fn validate(&self, g: &Graph<R>) -> Result<(), ClusteringError> {
        let mut seen = vec![false; g.node_count()];
        let mut mark = |m: MemberId| -> Result<(), ClusteringError> {
            let i = g.index_of(m)?;
            if std::mem::replace(&mut seen[i], true) {
                return Err(ClusteringError::Inconsistent(format!(
                    "member {m} appears in more than one cluster slot"
                )));
            }
            Ok(())
        };
        let tol = R::lit(1e-12).max(R::epsilon() * R::lit(8.0));
        for c in &self.clusters {
            mark(c.ego)?;
            for &a in &c.cluster_alters {
                mark(a)?;
            }
            let fresh = EgoCluster::from_graph(g, c.ego, c.cluster_alters.clone())?;
            if fresh.original_degree != c.original_degree
                || (fresh.loss_rate - c.loss_rate).abs() > tol
                || (fresh.weighted_loss_rate - c.weighted_loss_rate).abs() > tol
            {
                return Err(ClusteringError::Inconsistent(format!(
                    "stored loss rates of ego {} disagree with the graph",
                    c.ego
                )));
            }
        }
        let expected: Vec<MemberId> = (0..g.node_count())
            .filter(|&i| !seen[i])
            .map(|i| g.id_at(i))
            .collect();
        if expected != self.leftover {
            return Err(ClusteringError::Inconsistent(
                "leftover set is not the complement of the clusters".into(),
            ));
        }
        Ok(())
    }
}

/// Slot of a node during construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Slot {
    Free,
    Ego,
    Alter,
}

pub(crate) fn leftover_of<R: Real>(g: &Graph<R>, slots: &[Slot]) -> Vec<MemberId> {
    slots
        .iter()
        .enumerate()
        .filter(|(_, s)| **s == Slot::Free)
        .map(|(i, _)| g.id_at(i))
        .collect()
}
