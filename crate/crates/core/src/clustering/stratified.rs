//! Degree-stratified ego selection under a per-ego loss cap.

use super::{
    leftover_of, loss_rates, Algorithm, ClusteringError, ClusteringParams, ClusteringResult,
    DrawOutcome, EgoCluster, IterationDiagnostics, IterationRecord, Slot,
};
use crate::graph::{make_degree_bins, Graph};
use crate::scalar::Real;

/// Largest number of neighbors an ego of degree `degree` may lose while
/// keeping `lost / degree <= target_loss` (evaluated in `R`).
pub fn max_lost_alters<R: Real>(degree: usize, target_loss: R) -> usize {
    if degree == 0 {
        return 0;
    }
    let d = R::from_count(degree);
    let ratio = |k: usize| R::from_count(k) / d;
    let mut k = (target_loss * d)
        .floor()
        .to_usize()
        .unwrap_or(0)
        .min(degree);
    while k < degree && ratio(k + 1) <= target_loss {
        k += 1;
    }
    while k > 0 && ratio(k) > target_loss {
        k -= 1;
    }
    k
}

/// Picks egos from degree bins, lowest bin first, under the loss cap.
///
/// Bins come from [`make_degree_bins`]. Each step serves the bin that has
/// contributed the fewest egos relative to its size (ties to the lower bin),
/// which is plain ascending round-robin when bins are equally populated.
/// Candidates are popped in shuffled order; a candidate of degree `d` is
/// accepted iff at least `d - max_lost_alters(d, target_loss)` of its
/// neighbors are free, and then claims exactly that many, strongest edges
/// first (ties to the lower id). Popped candidates that fail are dropped
/// for good. The run halts the first time a bin is exhausted without
/// producing an ego.
pub fn stratified_cluster<R: Real>(
    g: &Graph<R>,
    target_loss: R,
    bin_count: usize,
    seed: u64,
) -> Result<ClusteringResult<R>, ClusteringError> {
    if !(target_loss >= R::zero() && target_loss < R::one()) {
        return Err(ClusteringError::InvalidTargetLoss(target_loss.as_f64()));
    }
    let bins = make_degree_bins(g, bin_count, seed)?;
    let n_bins = bins.len();
    let mut cursor = vec![0usize; n_bins];
    let mut taken = vec![0usize; n_bins];

    let mut slots = vec![Slot::Free; g.node_count()];
    let mut clusters = Vec::new();
    let mut records = Vec::new();
    let mut iteration = 0usize;
    let mut free_nbrs: Vec<(usize, R)> = Vec::new();

    // bin with the smallest taken/size ratio; compare by cross-multiplying
    'rounds: while let Some(b) = (0..n_bins).min_by(|&x, &y| {
        let lx = taken[x] * bins.bins[y].len();
        let ly = taken[y] * bins.bins[x].len();
        lx.cmp(&ly).then(x.cmp(&y))
    }) {
        let bin = &bins.bins[b];
        loop {
            let Some(&member) = bin.get(cursor[b]) else {
                break 'rounds;
            };
            cursor[b] += 1;
            let i = g.index_of(member)?;
            let degree = g.degree_at(i);
            let mut record = IterationRecord {
                iteration,
                member,
                outcome: DrawOutcome::Collision,
                ego_loss_rate: None,
                ego_original_degree: degree,
                bin: Some(b),
            };
            iteration += 1;
            if slots[i] != Slot::Free {
                records.push(record);
                continue;
            }
            let need = degree - max_lost_alters(degree, target_loss);
            let (ns, ws) = g.neighbors_at(i);
            free_nbrs.clear();
            free_nbrs.extend(
                ns.iter()
                    .zip(ws)
                    .filter(|(&n, _)| slots[n] == Slot::Free)
                    .map(|(&n, &w)| (n, w)),
            );
            if free_nbrs.len() < need {
                record.outcome = DrawOutcome::Rejected;
                records.push(record);
                continue;
            }
            // strongest edges first; node index order is id order
            free_nbrs.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then(x.0.cmp(&y.0)));
            slots[i] = Slot::Ego;
            let mut kept_w = R::zero();
            let mut alters = Vec::with_capacity(need);
            for &(n, w) in &free_nbrs[..need] {
                slots[n] = Slot::Alter;
                kept_w = kept_w + w;
                alters.push(g.id_at(n));
            }
            alters.sort_unstable();
            let total_w: R = ws.iter().copied().sum();
            let (loss_rate, weighted_loss_rate) = loss_rates(degree, need, total_w, kept_w);
            record.outcome = DrawOutcome::Accepted;
            record.ego_loss_rate = Some(loss_rate);
            records.push(record);
            clusters.push(EgoCluster {
                ego: member,
                cluster_alters: alters,
                original_degree: degree,
                loss_rate,
                weighted_loss_rate,
            });
            taken[b] += 1;
            continue 'rounds;
        }
    }

    Ok(ClusteringResult {
        clusters,
        leftover: leftover_of(g, &slots),
        diagnostics: IterationDiagnostics { records },
        params: ClusteringParams {
            algorithm: Algorithm::Stratified,
            target_loss: Some(target_loss),
            stop_loss: None,
            window: None,
            bin_count: Some(bin_count),
            seed,
        },
    })
}
