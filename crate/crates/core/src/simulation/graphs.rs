//! Synthetic graph generators.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Exp, Uniform};
use serde::{Deserialize, Serialize};

use super::SimulationError;
use crate::graph::{Graph, GraphBuilder};
use crate::hashing;
use crate::scalar::Real;

const GRAPH_SALT: u64 = 0x6EA9_4000;
const WEIGHT_SALT: u64 = 0x3E16_4700;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum Generator {
    /// G(n, p) with `p = mean_degree / (n - 1)`.
    ErdosRenyi { nodes: usize, mean_degree: f64 },
    /// Erased configuration model on a discrete Pareto degree sequence with
    /// tail `P(k) ~ k^-exponent`, cut off at `sqrt(nodes * mean_degree)` and
    /// scaled to the requested mean degree.
    PowerLaw {
        nodes: usize,
        exponent: f64,
        mean_degree: f64,
    },
    /// `stars` centers with `leaves` leaves each; ids run star by star,
    /// center first.
    DisjointStars { stars: usize, leaves: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSpec {
    #[default]
    Unit,
    Uniform {
        low: f64,
        high: f64,
    },
    Exponential {
        mean: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    #[serde(flatten)]
    pub generator: Generator,
    #[serde(default)]
    pub weights: WeightSpec,
    pub seed: u64,
}

impl GraphSpec {
    pub fn erdos_renyi(nodes: usize, mean_degree: f64, seed: u64) -> Self {
        Self {
            generator: Generator::ErdosRenyi { nodes, mean_degree },
            weights: WeightSpec::Unit,
            seed,
        }
    }

    pub fn power_law(nodes: usize, exponent: f64, mean_degree: f64, seed: u64) -> Self {
        Self {
            generator: Generator::PowerLaw {
                nodes,
                exponent,
                mean_degree,
            },
            weights: WeightSpec::Unit,
            seed,
        }
    }

    pub fn disjoint_stars(stars: usize, leaves: usize, seed: u64) -> Self {
        Self {
            generator: Generator::DisjointStars { stars, leaves },
            weights: WeightSpec::Unit,
            seed,
        }
    }

    pub fn with_weights(mut self, weights: WeightSpec) -> Self {
        self.weights = weights;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Builds the graph described by `spec`. Deterministic given `spec.seed`.
pub fn generate_graph<R: Real>(spec: &GraphSpec) -> Result<Graph<R>, SimulationError> {
    let infeasible = |m: String| Err(SimulationError::Infeasible(m));
    let mut rng = hashing::keyed_rng(spec.seed, GRAPH_SALT, 0);
    let edges: Vec<(u64, u64)> = match spec.generator {
        Generator::ErdosRenyi { nodes, mean_degree } => {
            if nodes < 2 || !(mean_degree >= 0.0 && mean_degree <= (nodes - 1) as f64) {
                return infeasible(format!(
                    "Erdos-Renyi needs n >= 2 and 0 <= mean degree <= n - 1 (n = {nodes}, mean = {mean_degree})"
                ));
            }
            erdos_renyi_edges(nodes, mean_degree / (nodes - 1) as f64, &mut rng)
        }
        Generator::PowerLaw {
            nodes,
            exponent,
            mean_degree,
        } => {
            if exponent <= 2.0 || !exponent.is_finite() {
                return infeasible(format!(
                    "power-law exponent must exceed 2 for a finite mean degree, got {exponent}"
                ));
            }
            if nodes < 2
                || !(mean_degree >= 1.0 && mean_degree < degree_cutoff(nodes, mean_degree) as f64)
            {
                return infeasible(format!(
                    "power law needs n >= 2 and 1 <= mean degree < sqrt(n * mean degree) (n = {nodes}, mean = {mean_degree})"
                ));
            }
            let degrees = power_law_degrees(nodes, exponent, mean_degree, &mut rng);
            configuration_edges(&degrees, &mut rng)
        }
        Generator::DisjointStars { stars, leaves } => {
            let mut e = Vec::with_capacity(stars * leaves);
            for s in 0..stars {
                let c = (s * (leaves + 1)) as u64;
                for l in 1..=leaves as u64 {
                    e.push((c, c + l));
                }
            }
            e
        }
    };
    let nodes = match spec.generator {
        Generator::ErdosRenyi { nodes, .. } | Generator::PowerLaw { nodes, .. } => nodes,
        Generator::DisjointStars { stars, leaves } => stars * (leaves + 1),
    };

    let mut b = GraphBuilder::<R>::new();
    for u in 0..nodes as u64 {
        b.add_node(u);
    }
    let mut wrng = hashing::keyed_rng(spec.seed, WEIGHT_SALT, 0);
    let weight = weight_sampler(spec.weights)?;
    for (u, v) in edges {
        let w = weight(&mut wrng);
        b.add_edge(u, v, R::lit(w))
            .map_err(|e| SimulationError::Infeasible(e.to_string()))?;
    }
    Ok(b.build())
}

type Sampler = Box<dyn Fn(&mut rand_chacha::ChaCha8Rng) -> f64>;

fn weight_sampler(spec: WeightSpec) -> Result<Sampler, SimulationError> {
    match spec {
        WeightSpec::Unit => Ok(Box::new(|_| 1.0)),
        WeightSpec::Uniform { low, high } => {
            if !(low > 0.0 && high > low && high.is_finite()) {
                return Err(SimulationError::InvalidParameter(format!(
                    "uniform weights need 0 < low < high, got [{low}, {high}]"
                )));
            }
            let d = Uniform::new(low, high).expect("checked bounds");
            Ok(Box::new(move |r| d.sample(r)))
        }
        WeightSpec::Exponential { mean } => {
            if !(mean > 0.0 && mean.is_finite()) {
                return Err(SimulationError::InvalidParameter(format!(
                    "exponential weights need a positive mean, got {mean}"
                )));
            }
            let d = Exp::new(1.0 / mean).expect("checked rate");
            // zero weights are invalid; nudge to the smallest positive value
            Ok(Box::new(move |r| d.sample(r).max(f64::MIN_POSITIVE)))
        }
    }
}

/// Batagelj-Brandes geometric skipping over the upper triangle.
fn erdos_renyi_edges<G: Rng>(n: usize, p: f64, rng: &mut G) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    if p <= 0.0 {
        return out;
    }
    if p >= 1.0 {
        for v in 1..n as u64 {
            for w in 0..v {
                out.push((w, v));
            }
        }
        return out;
    }
    let lp = (1.0 - p).ln();
    let (mut v, mut w) = (1i64, -1i64);
    let n = n as i64;
    while v < n {
        let r: f64 = rng.random();
        w += 1 + ((1.0 - r).ln() / lp).floor() as i64;
        while w >= v && v < n {
            w -= v;
            v += 1;
        }
        if v < n {
            out.push((w as u64, v as u64));
        }
    }
    out
}

/// Largest degree a power-law node may draw: the structural cutoff
/// `sqrt(n * mean_degree)`, below which the erased configuration model
/// loses few edges.
fn degree_cutoff(n: usize, mean_degree: f64) -> usize {
    ((n as f64 * mean_degree).sqrt().floor() as usize).min(n - 1)
}

/// Mean of `max(1, floor(min(X, cap)))` for a Pareto `X` with scale `x_min`
/// and tail index `a`: the sum over `k` of `P(degree >= k)`.
fn expected_degree(x_min: f64, a: f64, cap: usize) -> f64 {
    (1..=cap).map(|k| (x_min / k as f64).powf(a).min(1.0)).sum()
}

/// `floor` of a continuous Pareto draw, capped at [`degree_cutoff`], with
/// the scale solved so that the expected degree equals `mean_degree`.
fn power_law_degrees<G: Rng>(n: usize, exponent: f64, mean_degree: f64, rng: &mut G) -> Vec<usize> {
    let a = exponent - 1.0;
    let cap = degree_cutoff(n, mean_degree);
    let (mut lo, mut hi) = (1.0, cap as f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if expected_degree(mid, a, cap) < mean_degree {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x_min = 0.5 * (lo + hi);
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let x = x_min * (1.0 - u).powf(-1.0 / a);
            x.min(cap as f64).floor().max(1.0) as usize
        })
        .collect()
}

/// Random stub matching; self-loops are dropped and parallel edges merged.
fn configuration_edges<G: Rng>(degrees: &[usize], rng: &mut G) -> Vec<(u64, u64)> {
    let mut stubs: Vec<u64> = degrees
        .iter()
        .enumerate()
        .flat_map(|(u, &d)| std::iter::repeat_n(u as u64, d))
        .collect();
    if stubs.len() % 2 == 1 {
        stubs.pop();
    }
    stubs.shuffle(rng);
    stubs
        .chunks_exact(2)
        .filter(|c| c[0] != c[1])
        .map(|c| (c[0], c[1]))
        .collect()
}
