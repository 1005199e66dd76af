//! Weighted undirected member graph.
//!
//! The graph is immutable once built. Nodes are stored in ascending
//! [`MemberId`] order with a CSR adjacency whose neighbor lists are also
//! sorted by id, so every traversal is deterministic.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::hashing;
use crate::scalar::Real;

/// Identifier of a member (a node of the graph).
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct MemberId(pub u64);

impl fmt::Display for MemberId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u64> for MemberId {
    fn from(v: u64) -> Self {
        MemberId(v)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: self-loop on member {member}")]
    SelfLoop { line: usize, member: MemberId },
    #[error("line {line}: edge weight {weight} must be positive and finite")]
    InvalidWeight { line: usize, weight: f64 },
    #[error("unknown member {0}")]
    UnknownMember(MemberId),
    #[error("bin_count must be at least 1")]
    ZeroBins,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Accumulates edges and produces a validated, symmetric [`Graph`].
///
/// Duplicate edges, in either direction, collapse to one with the maximum
/// weight.
#[derive(Debug, Clone, Default)]
pub struct GraphBuilder<R> {
    edges: Vec<(MemberId, MemberId, R)>,
    isolated: Vec<MemberId>,
}

impl<R: Real> GraphBuilder<R> {
    pub fn new() -> Self {
        Self {
            edges: Vec::new(),
            isolated: Vec::new(),
        }
    }

    pub fn add_node(&mut self, m: impl Into<MemberId>) -> &mut Self {
        self.isolated.push(m.into());
        self
    }

    /// Adds an undirected edge. `line` is only used for error reporting.
    pub fn add_edge_at(
        &mut self,
        u: MemberId,
        v: MemberId,
        w: R,
        line: usize,
    ) -> Result<&mut Self, GraphError> {
        if u == v {
            return Err(GraphError::SelfLoop { line, member: u });
        }
        if !(w.is_finite() && w > R::zero()) {
            return Err(GraphError::InvalidWeight {
                line,
                weight: w.to_f64().unwrap_or(f64::NAN),
            });
        }
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        self.edges.push((a, b, w));
        Ok(self)
    }

    pub fn add_edge(
        &mut self,
        u: impl Into<MemberId>,
        v: impl Into<MemberId>,
        w: R,
    ) -> Result<&mut Self, GraphError> {
        self.add_edge_at(u.into(), v.into(), w, 0)
    }

    pub fn build(mut self) -> Graph<R> {
        self.edges.sort_by(|x, y| {
            (x.0, x.1)
                .cmp(&(y.0, y.1))
                .then(x.2.partial_cmp(&y.2).unwrap())
        });
        // keep the last (largest-weight) entry for each pair
        let mut merged: Vec<(MemberId, MemberId, R)> = Vec::with_capacity(self.edges.len());
        for e in self.edges {
            match merged.last_mut() {
                Some(last) if last.0 == e.0 && last.1 == e.1 => last.2 = e.2,
                _ => merged.push(e),
            }
        }

        let mut ids: Vec<MemberId> = merged
            .iter()
            .flat_map(|&(a, b, _)| [a, b])
            .chain(self.isolated.iter().copied())
            .collect();
        ids.sort_unstable();
        ids.dedup();
        let index: HashMap<MemberId, usize> =
            ids.iter().enumerate().map(|(i, &m)| (m, i)).collect();

        let mut deg = vec![0usize; ids.len()];
        for &(a, b, _) in &merged {
            deg[index[&a]] += 1;
            deg[index[&b]] += 1;
        }
        let mut offsets = Vec::with_capacity(ids.len() + 1);
        offsets.push(0);
        for d in &deg {
            offsets.push(offsets.last().unwrap() + d);
        }
        let total = *offsets.last().unwrap();
        let mut neighbors = vec![0usize; total];
        let mut weights = vec![R::zero(); total];
        let mut fill = offsets[..ids.len()].to_vec();
        for &(a, b, w) in &merged {
            let (ia, ib) = (index[&a], index[&b]);
            neighbors[fill[ia]] = ib;
            weights[fill[ia]] = w;
            fill[ia] += 1;
            neighbors[fill[ib]] = ia;
            weights[fill[ib]] = w;
            fill[ib] += 1;
        }
        // rows sorted by neighbor index, i.e. by neighbor id
        for i in 0..ids.len() {
            let (s, e) = (offsets[i], offsets[i + 1]);
            let mut row: Vec<(usize, R)> = neighbors[s..e]
                .iter()
                .copied()
                .zip(weights[s..e].iter().copied())
                .collect();
            row.sort_unstable_by_key(|&(n, _)| n);
            for (k, (n, w)) in row.into_iter().enumerate() {
                neighbors[s + k] = n;
                weights[s + k] = w;
            }
        }

        Graph {
            ids,
            index,
            offsets,
            neighbors,
            weights,
            edge_count: merged.len(),
        }
    }
}

/// Immutable weighted undirected graph.
///
/// Internally nodes are addressed by a dense index in `0..node_count()`,
/// ordered by ascending [`MemberId`]; the `*_at` accessors use that index.
#[derive(Debug, Clone)]
pub struct Graph<R> {
    ids: Vec<MemberId>,
    index: HashMap<MemberId, usize>,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    weights: Vec<R>,
    edge_count: usize,
}

impl<R: Real> Graph<R> {
    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Members in ascending id order.
    pub fn members(&self) -> &[MemberId] {
        &self.ids
    }

    pub fn contains(&self, m: MemberId) -> bool {
        self.index.contains_key(&m)
    }

    pub fn index_of(&self, m: MemberId) -> Result<usize, GraphError> {
        self.index
            .get(&m)
            .copied()
            .ok_or(GraphError::UnknownMember(m))
    }

    #[inline]
    pub fn id_at(&self, i: usize) -> MemberId {
        self.ids[i]
    }

    #[inline]
    pub fn degree_at(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    /// Neighbor indices and edge weights of node `i`, sorted by neighbor id.
    #[inline]
    pub fn neighbors_at(&self, i: usize) -> (&[usize], &[R]) {
        let (s, e) = (self.offsets[i], self.offsets[i + 1]);
        (&self.neighbors[s..e], &self.weights[s..e])
    }

    /// Sum of the weights of all edges incident to node `i`.
    pub fn strength_at(&self, i: usize) -> R {
        self.neighbors_at(i).1.iter().copied().sum()
    }

    /// |N(m)|.
    pub fn degree(&self, m: MemberId) -> Result<usize, GraphError> {
        Ok(self.degree_at(self.index_of(m)?))
    }

    pub fn neighbors(
        &self,
        m: MemberId,
    ) -> Result<impl Iterator<Item = (MemberId, R)> + '_, GraphError> {
        let (ns, ws) = self.neighbors_at(self.index_of(m)?);
        Ok(ns.iter().zip(ws).map(move |(&n, &w)| (self.ids[n], w)))
    }

    /// Weight of edge `u`–`v`, or zero if absent.
    pub fn weight(&self, u: MemberId, v: MemberId) -> Result<R, GraphError> {
        let iu = self.index_of(u)?;
        let iv = self.index_of(v)?;
        let (ns, ws) = self.neighbors_at(iu);
        Ok(ns
            .binary_search(&iv)
            .map(|k| ws[k])
            .unwrap_or_else(|_| R::zero()))
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.node_count()).map(|i| self.degree_at(i)).collect()
    }

    /// Undirected edges `(u, v, w)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (MemberId, MemberId, R)> + '_ {
        (0..self.node_count()).flat_map(move |i| {
            let (ns, ws) = self.neighbors_at(i);
            ns.iter()
                .zip(ws)
                .filter(move |(&n, _)| n > i)
                .map(move |(&n, &w)| (self.ids[i], self.ids[n], w))
        })
    }

    pub fn summary(&self) -> GraphSummary {
        let mut deg = self.degrees();
        deg.sort_unstable();
        let n = deg.len();
        let mean = if n == 0 {
            0.0
        } else {
            deg.iter().sum::<usize>() as f64 / n as f64
        };
        GraphSummary {
            nodes: n,
            edges: self.edge_count,
            degree_mean: mean,
            degree_p50: nearest_rank(&deg, 0.5),
            degree_p90: nearest_rank(&deg, 0.9),
            degree_max: deg.last().copied().unwrap_or(0),
        }
    }

    /// Writes the graph as a tab-separated edge list that [`read_edge_list`]
    /// reads back to an identical graph. Isolated nodes are written as
    /// single-id lines.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> io::Result<()> {
        for i in 0..self.node_count() {
            if self.degree_at(i) == 0 {
                writeln!(out, "{}", self.ids[i])?;
            }
        }
        for (u, v, w) in self.edges() {
            writeln!(out, "{u}\t{v}\t{w}")?;
        }
        Ok(())
    }
}

fn nearest_rank(sorted: &[usize], q: f64) -> usize {
    if sorted.is_empty() {
        return 0;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Summary emitted by `ingest`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub nodes: usize,
    pub edges: usize,
    pub degree_mean: f64,
    pub degree_p50: usize,
    pub degree_p90: usize,
    pub degree_max: usize,
}

/// Parses a whitespace-separated edge list: `src dst [weight]` per line,
/// `#` comments and blank lines ignored. A line holding a single id declares
/// an isolated member.
pub fn read_edge_list<R: Real, B: BufRead>(input: B) -> Result<Graph<R>, GraphError> {
    let mut builder = GraphBuilder::new();
    for (k, line) in input.lines().enumerate() {
        let line_no = k + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = text.split_whitespace().collect();
        let parse_id = |s: &str| {
            s.parse::<u64>()
                .map(MemberId)
                .map_err(|_| GraphError::Parse {
                    line: line_no,
                    message: format!("invalid member id {s:?}"),
                })
        };
        match fields.as_slice() {
            [m] => {
                builder.add_node(parse_id(m)?);
            }
            [u, v] => {
                builder.add_edge_at(parse_id(u)?, parse_id(v)?, R::one(), line_no)?;
            }
            [u, v, w] => {
                let weight = w.parse::<R>().map_err(|_| GraphError::Parse {
                    line: line_no,
                    message: format!("invalid weight {w:?}"),
                })?;
                builder.add_edge_at(parse_id(u)?, parse_id(v)?, weight, line_no)?;
            }
            _ => {
                return Err(GraphError::Parse {
                    line: line_no,
                    message: format!("expected 2 or 3 fields, found {}", fields.len()),
                })
            }
        }
    }
    Ok(builder.build())
}

pub fn load_graph<R: Real>(path: impl AsRef<Path>) -> Result<Graph<R>, GraphError> {
    read_edge_list(BufReader::new(File::open(path)?))
}

/// Degree strata used to pick egos representatively.
///
/// `boundaries[j]` is the smallest degree that falls in bin `j`; a node of
/// degree `d` lives in the last bin whose boundary is `<= d`. Members inside
/// each bin are in seeded shuffled order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeBins {
    pub boundaries: Vec<usize>,
    pub bins: Vec<Vec<MemberId>>,
}

impl DegreeBins {
    /// Builds bins from `(member, degree)` pairs. Zero-degree members are
    /// ignored. Boundaries are the degrees found at the `k/bin_count`
    /// population quantiles; quantiles that land on the same degree collapse,
    /// so fewer than `bin_count` bins may come out.
    pub fn from_degrees(
        members: &[(MemberId, usize)],
        bin_count: usize,
        seed: u64,
    ) -> Result<Self, GraphError> {
        if bin_count == 0 {
            return Err(GraphError::ZeroBins);
        }
        let mut eligible: Vec<(MemberId, usize)> =
            members.iter().copied().filter(|&(_, d)| d > 0).collect();
        eligible.sort_unstable_by_key(|&(m, _)| m);
        let mut degs: Vec<usize> = eligible.iter().map(|&(_, d)| d).collect();
        degs.sort_unstable();
        let n = degs.len();
        let mut boundaries: Vec<usize> = Vec::with_capacity(bin_count);
        if n > 0 {
            boundaries.push(degs[0]);
            for k in 1..bin_count {
                let b = degs[k * n / bin_count];
                if b > *boundaries.last().unwrap() {
                    boundaries.push(b);
                }
            }
        }
        let mut bins: Vec<Vec<MemberId>> = vec![Vec::new(); boundaries.len()];
        for &(m, d) in &eligible {
            bins[bin_of(&boundaries, d)].push(m);
        }
        for (j, bin) in bins.iter_mut().enumerate() {
            let mut rng = hashing::keyed_rng(seed, BIN_SHUFFLE_SALT, j as u64);
            bin.shuffle(&mut rng);
        }
        Ok(Self { boundaries, bins })
    }

    pub fn bin_of(&self, degree: usize) -> Option<usize> {
        if degree == 0 || self.boundaries.is_empty() || degree < self.boundaries[0] {
            return None;
        }
        Some(bin_of(&self.boundaries, degree))
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }
}

const BIN_SHUFFLE_SALT: u64 = 0xB1B5;

fn bin_of(boundaries: &[usize], d: usize) -> usize {
    boundaries.partition_point(|&b| b <= d).saturating_sub(1)
}

/// Degree bins of every node with at least one neighbor.
pub fn make_degree_bins<R: Real>(
    g: &Graph<R>,
    bin_count: usize,
    seed: u64,
) -> Result<DegreeBins, GraphError> {
    let members: Vec<(MemberId, usize)> = (0..g.node_count())
        .map(|i| (g.id_at(i), g.degree_at(i)))
        .collect();
    DegreeBins::from_degrees(&members, bin_count, seed)
}
