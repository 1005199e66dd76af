//! Sequential baseline: random egos, each claiming every still-free neighbor.

use std::collections::VecDeque;

use rand::seq::SliceRandom;

use super::{
    leftover_of, loss_rates, Algorithm, ClusteringError, ClusteringParams, ClusteringResult,
    DrawOutcome, EgoCluster, IterationDiagnostics, IterationRecord, Slot,
};
use crate::graph::{Graph, MemberId};
use crate::hashing;
use crate::scalar::Real;

const NAIVE_ORDER_SALT: u64 = 0x4E41_4956;

/// Draw order used by [`naive_cluster`]: a seeded uniform permutation of all
/// members with at least one neighbor.
pub fn naive_candidate_order<R: Real>(g: &Graph<R>, seed: u64) -> Vec<MemberId> {
    let mut order: Vec<MemberId> = (0..g.node_count())
        .filter(|&i| g.degree_at(i) > 0)
        .map(|i| g.id_at(i))
        .collect();
    order.shuffle(&mut hashing::keyed_rng(seed, NAIVE_ORDER_SALT, 0));
    order
}

/// Runs the naive clustering baseline.
///
/// Candidates are drawn without replacement in [`naive_candidate_order`]. A
/// candidate that was already claimed as an alter is a collision and is
/// skipped; otherwise it becomes an ego and claims all of its free
/// neighbors, however few remain. The run stops once at least `window` egos
/// exist and the mean loss rate of the last `window` egos reaches
/// `stop_loss`, or when candidates run out.
pub fn naive_cluster<R: Real>(
    g: &Graph<R>,
    stop_loss: R,
    window: usize,
    seed: u64,
) -> Result<ClusteringResult<R>, ClusteringError> {
    if !(stop_loss > R::zero() && stop_loss <= R::one()) {
        return Err(ClusteringError::InvalidStopLoss(stop_loss.as_f64()));
    }
    if window == 0 {
        return Err(ClusteringError::InvalidWindow);
    }

    let mut slots = vec![Slot::Free; g.node_count()];
    let mut clusters = Vec::new();
    let mut records = Vec::new();
    let mut trailing: VecDeque<R> = VecDeque::with_capacity(window + 1);

    for (iteration, member) in naive_candidate_order(g, seed).into_iter().enumerate() {
        let i = g.index_of(member)?;
        let degree = g.degree_at(i);
        if slots[i] != Slot::Free {
            records.push(IterationRecord {
                iteration,
                member,
                outcome: DrawOutcome::Collision,
                ego_loss_rate: None,
                ego_original_degree: degree,
                bin: None,
            });
            continue;
        }
        slots[i] = Slot::Ego;
        let (ns, ws) = g.neighbors_at(i);
        let mut alters = Vec::new();
        let mut kept_w = R::zero();
        for (&n, &w) in ns.iter().zip(ws) {
            if slots[n] == Slot::Free {
                slots[n] = Slot::Alter;
                alters.push(g.id_at(n));
                kept_w = kept_w + w;
            }
        }
        let total_w: R = ws.iter().copied().sum();
        let (loss_rate, weighted_loss_rate) = loss_rates(degree, alters.len(), total_w, kept_w);
        records.push(IterationRecord {
            iteration,
            member,
            outcome: DrawOutcome::Accepted,
            ego_loss_rate: Some(loss_rate),
            ego_original_degree: degree,
            bin: None,
        });
        clusters.push(EgoCluster {
            ego: member,
            cluster_alters: alters,
            original_degree: degree,
            loss_rate,
            weighted_loss_rate,
        });

        trailing.push_back(loss_rate);
        if trailing.len() > window {
            trailing.pop_front();
        }
        if trailing.len() == window {
            let m = trailing.iter().copied().sum::<R>() / R::from_count(window);
            if m >= stop_loss {
                break;
            }
        }
    }

    Ok(ClusteringResult {
        clusters,
        leftover: leftover_of(g, &slots),
        diagnostics: IterationDiagnostics { records },
        params: ClusteringParams {
            algorithm: Algorithm::Naive,
            target_loss: None,
            stop_loss: Some(stop_loss),
            window: Some(window),
            bin_count: None,
            seed,
        },
    })
}
