//! Monte Carlo studies over the full pipeline.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::graphs::{generate_graph, GraphSpec};
use super::outcomes::{simulate_outcomes, OutcomeModel, ResponseShape};
use super::SimulationError;
use crate::analysis::analyze_experiment;
use crate::assignment::{assign, EgoMode};
use crate::clustering::{naive_cluster, reattach_alters, stratified_cluster, ClusteringResult};
use crate::graph::Graph;
use crate::hashing::derive_seed;
use crate::stats::{mean, sample_sd};

const GRAPH_STREAM: u64 = 1;
const CLUSTER_STREAM: u64 = 2;
const ASSIGN_STREAM: u64 = 3;
const NOISE_STREAM: u64 = 4;

fn default_bins() -> usize {
    20
}
fn default_p() -> f64 {
    0.5
}
fn default_mode() -> EgoMode {
    EgoMode::AllTreated
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttenuationConfig {
    /// Replication `r` uses the graph seed `derive_seed(graph.seed, r)`.
    pub graph: GraphSpec,
    pub model: OutcomeModel,
    pub target_loss: f64,
    #[serde(default = "default_bins")]
    pub bin_count: usize,
    #[serde(default = "default_p")]
    pub p: f64,
    pub replications: usize,
    pub seed: u64,
    #[serde(default = "default_mode")]
    pub mode: EgoMode,
    #[serde(default = "default_true")]
    pub reattach: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub index: usize,
    pub egos: usize,
    /// Mean ego loss rate of this replication's clustering.
    pub alpha: f64,
    /// Mean outcome of alters-treated egos minus alters-control egos.
    pub estimate: f64,
    pub std_err: f64,
    pub p_value: f64,
    /// `network_effect (1 - alpha)`; linear responses only.
    pub expected: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttenuationReport {
    pub config: AttenuationConfig,
    pub replications: Vec<Replication>,
    pub mean_alpha: f64,
    pub mean_estimate: f64,
    /// Monte Carlo standard error of `mean_estimate`.
    pub estimate_se: f64,
    pub mean_abs_estimate: f64,
    pub abs_estimate_se: f64,
    /// Mean of `estimate - expected` with its Monte Carlo SE (linear only).
    pub attenuation_bias: Option<f64>,
    pub attenuation_bias_se: Option<f64>,
    /// `mean_estimate / network_effect`.
    pub ratio: Option<f64>,
    pub ratio_se: Option<f64>,
}

fn mc_se(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        f64::NAN
    } else {
        sample_sd(xs) / (xs.len() as f64).sqrt()
    }
}

/// One clustering of one synthetic graph, reusable across assignment modes.
pub struct PipelineFixture {
    pub graph: Graph<f64>,
    pub clustering: ClusteringResult<f64>,
}

impl AttenuationConfig {
    fn validate(&self) -> Result<(), SimulationError> {
        self.model.validate()?;
        if self.replications < 30 {
            return Err(SimulationError::InvalidParameter(format!(
                "at least 30 replications are needed, got {}",
                self.replications
            )));
        }
        Ok(())
    }

    /// Graph and clustering of replication `r`.
    pub fn fixture(&self, r: usize) -> Result<PipelineFixture, SimulationError> {
        let spec =
            self.graph
                .clone()
                .with_seed(derive_seed(self.graph.seed, GRAPH_STREAM, r as u64));
        let graph = generate_graph::<f64>(&spec)?;
        let cseed = derive_seed(self.seed, CLUSTER_STREAM, r as u64);
        let partial = stratified_cluster(&graph, self.target_loss, self.bin_count, cseed)?;
        let clustering = if self.reattach {
            reattach_alters(&graph, &partial)?
        } else {
            partial
        };
        Ok(PipelineFixture { graph, clustering })
    }

    /// Assign, simulate and analyze replication `r` on `fx` under `mode`.
    pub fn replicate(
        &self,
        fx: &PipelineFixture,
        r: usize,
        mode: EgoMode,
    ) -> Result<Replication, SimulationError> {
        let aseed = derive_seed(self.seed, ASSIGN_STREAM, r as u64);
        let nseed = derive_seed(self.seed, NOISE_STREAM, r as u64);
        let plan = assign(&fx.clustering, mode, self.p, aseed)?;
        let y = simulate_outcomes(&fx.graph, &plan, &self.model, nseed)?;
        let report = analyze_experiment(&plan, &y, &[])?;
        let t = &report.metrics[0].test;
        let alpha = fx.clustering.mean_loss_rate();
        Ok(Replication {
            index: r,
            egos: fx.clustering.ego_count(),
            alpha,
            estimate: t.difference(),
            std_err: t.std_err,
            p_value: t.p_value,
            expected: (self.model.shape == ResponseShape::Linear)
                .then_some(self.model.network_effect * (1.0 - alpha)),
        })
    }
}

/// Runs `replications` independent pipelines (stratified clustering,
/// optional reattachment, assignment, simulation, ego t-test) in parallel.
pub fn attenuation_study(cfg: &AttenuationConfig) -> Result<AttenuationReport, SimulationError> {
    cfg.validate()?;
    let reps: Vec<Replication> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| cfg.replicate(&cfg.fixture(r)?, r, cfg.mode))
        .collect::<Result<_, _>>()?;
    Ok(summarize(cfg, reps))
}

fn summarize(cfg: &AttenuationConfig, reps: Vec<Replication>) -> AttenuationReport {
    let est: Vec<f64> = reps.iter().map(|r| r.estimate).collect();
    let abs: Vec<f64> = est.iter().map(|e| e.abs()).collect();
    let alphas: Vec<f64> = reps.iter().map(|r| r.alpha).collect();
    let bias: Option<Vec<f64>> = reps
        .iter()
        .map(|r| r.expected.map(|x| r.estimate - x))
        .collect();
    let bn = cfg.model.network_effect;
    let ratios: Option<Vec<f64>> = (bn != 0.0).then(|| est.iter().map(|e| e / bn).collect());
    AttenuationReport {
        config: cfg.clone(),
        mean_alpha: mean(&alphas),
        mean_estimate: mean(&est),
        estimate_se: mc_se(&est),
        mean_abs_estimate: mean(&abs),
        abs_estimate_se: mc_se(&abs),
        attenuation_bias: bias.as_ref().map(|b| mean(b)),
        attenuation_bias_se: bias.as_ref().map(|b| mc_se(b)),
        ratio: ratios.as_ref().map(|r| mean(r)),
        ratio_se: ratios.as_ref().map(|r| mc_se(r)),
        replications: reps,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastReport {
    pub mode_a: EgoMode,
    pub mode_b: EgoMode,
    pub a: AttenuationReport,
    pub b: AttenuationReport,
    /// Per-replication `estimate_a - estimate_b` on shared graphs, clusterings,
    /// coins and noise.
    pub differences: Vec<f64>,
    pub mean_difference: f64,
    pub difference_se: f64,
}

/// Runs the pipeline under two ego modes on identical replications.
/// `MatchAlters` vs `AllTreated` isolates the direct effect.
pub fn mode_contrast_study(
    cfg: &AttenuationConfig,
    mode_a: EgoMode,
    mode_b: EgoMode,
) -> Result<ContrastReport, SimulationError> {
    cfg.validate()?;
    let pairs: Vec<(Replication, Replication)> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| {
            let fx = cfg.fixture(r)?;
            Ok((
                cfg.replicate(&fx, r, mode_a)?,
                cfg.replicate(&fx, r, mode_b)?,
            ))
        })
        .collect::<Result<_, SimulationError>>()?;
    let differences: Vec<f64> = pairs.iter().map(|(a, b)| a.estimate - b.estimate).collect();
    let (ra, rb): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    let mut ca = cfg.clone();
    ca.mode = mode_a;
    let mut cb = cfg.clone();
    cb.mode = mode_b;
    Ok(ContrastReport {
        mode_a,
        mode_b,
        a: summarize(&ca, ra),
        b: summarize(&cb, rb),
        mean_difference: mean(&differences),
        difference_se: mc_se(&differences),
        differences,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` ascending edges. Bins are right-closed, `(lo, hi]`, and
    /// the first also holds its lower edge.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn unit(bins: usize) -> Self {
        Self {
            edges: (0..=bins).map(|k| k as f64 / bins as f64).collect(),
            counts: vec![0; bins],
        }
    }

    pub fn add(&mut self, x: f64) {
        let bins = self.counts.len();
        let k = ((x * bins as f64).ceil() as usize).clamp(1, bins) - 1;
        self.counts[k] += 1;
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Number of observations in bins whose lower edge is at least `x`.
    pub fn count_above(&self, x: f64) -> usize {
        self.counts
            .iter()
            .zip(&self.edges)
            .filter(|(_, &lo)| lo >= x)
            .map(|(c, _)| c)
            .sum()
    }
}

fn default_naive_stop() -> f64 {
    0.5
}
fn default_window() -> usize {
    20
}
fn default_target() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveVsStratifiedConfig {
    pub graph: GraphSpec,
    /// One graph, naive run and stratified run per seed.
    pub seeds: Vec<u64>,
    #[serde(default = "default_target")]
    pub target_loss: f64,
    #[serde(default = "default_bins")]
    pub bin_count: usize,
    #[serde(default = "default_naive_stop")]
    pub naive_stop_loss: f64,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_bins")]
    pub histogram_bins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedComparison {
    pub seed: u64,
    pub naive_egos: usize,
    pub stratified_egos: usize,
    /// Size of the early and late naive windows: the stratified ego count,
    /// capped at half the naive run.
    pub window_egos: usize,
    pub early_naive_mean: f64,
    pub late_naive_mean: f64,
    pub stratified_mean: f64,
    pub reattached_mean: f64,
    pub stratified_max: f64,
    pub reattached_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveVsStratifiedReport {
    pub config: NaiveVsStratifiedConfig,
    pub per_seed: Vec<SeedComparison>,
    pub early_naive: Histogram,
    pub late_naive: Histogram,
    pub stratified: Histogram,
    pub reattached: Histogram,
}

impl NaiveVsStratifiedReport {
    /// `bin_lo<TAB>bin_hi<TAB>early_naive<TAB>late_naive<TAB>stratified<TAB>reattached`
    pub fn histogram_tsv(&self) -> String {
        let mut s =
            String::from("bin_lo\tbin_hi\tearly_naive\tlate_naive\tstratified\treattached\n");
        for k in 0..self.stratified.counts.len() {
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                self.stratified.edges[k],
                self.stratified.edges[k + 1],
                self.early_naive.counts[k],
                self.late_naive.counts[k],
                self.stratified.counts[k],
                self.reattached.counts[k]
            ));
        }
        s
    }
}

/// Loss-rate distributions of early naive egos, late naive egos and
/// stratified egos (before and after reattachment), pooled over seeds.
pub fn naive_vs_stratified_study(
    cfg: &NaiveVsStratifiedConfig,
) -> Result<NaiveVsStratifiedReport, SimulationError> {
    if cfg.seeds.len() < 5 {
        return Err(SimulationError::InvalidParameter(format!(
            "at least 5 seeds are needed, got {}",
            cfg.seeds.len()
        )));
    }
    if cfg.histogram_bins == 0 {
        return Err(SimulationError::InvalidParameter(
            "histogram_bins must be >= 1".into(),
        ));
    }
    let runs: Vec<(SeedComparison, [Vec<f64>; 4])> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let spec = cfg
                .graph
                .clone()
                .with_seed(derive_seed(cfg.graph.seed, GRAPH_STREAM, seed));
            let g = generate_graph::<f64>(&spec)?;
            let naive = naive_cluster(&g, cfg.naive_stop_loss, cfg.window, seed)?;
            let strat = stratified_cluster(&g, cfg.target_loss, cfg.bin_count, seed)?;
            let re = reattach_alters(&g, &strat)?;
            let losses = |r: &ClusteringResult<f64>| -> Vec<f64> {
                r.clusters.iter().map(|c| c.loss_rate).collect()
            };
            let nl = losses(&naive);
            let k = strat.ego_count().min(nl.len() / 2).max(1).min(nl.len());
            let early = nl[..k].to_vec();
            let late = nl[nl.len() - k..].to_vec();
            let sl = losses(&strat);
            let rl = losses(&re);
            let max = |xs: &[f64]| xs.iter().cloned().fold(0.0, f64::max);
            let cmp = SeedComparison {
                seed,
                naive_egos: nl.len(),
                stratified_egos: sl.len(),
                window_egos: k,
                early_naive_mean: mean(&early),
                late_naive_mean: mean(&late),
                stratified_mean: mean(&sl),
                reattached_mean: mean(&rl),
                stratified_max: max(&sl),
                reattached_max: max(&rl),
            };
            Ok((cmp, [early, late, sl, rl]))
        })
        .collect::<Result<_, SimulationError>>()?;

    let mut hists = [(); 4].map(|_| Histogram::unit(cfg.histogram_bins));
    let mut per_seed = Vec::with_capacity(runs.len());
    for (cmp, samples) in runs {
        for (h, xs) in hists.iter_mut().zip(&samples) {
            for &x in xs {
                h.add(x);
            }
        }
        per_seed.push(cmp);
    }
    let [early_naive, late_naive, stratified, reattached] = hists;
    Ok(NaiveVsStratifiedReport {
        config: cfg.clone(),
        per_seed,
        early_naive,
        late_naive,
        stratified,
        reattached,
    })
}
