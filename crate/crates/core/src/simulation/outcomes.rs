//! Potential-outcome model under the one-out assumption:
//! `Y_i = b0 + b_d Z_i + b_n f(p_i) + e_i`, where `p_i` is the treated share
//! of all graph neighbors of `i`.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::SimulationError;
use crate::analysis::OutcomeTable;
use crate::assignment::AssignmentPlan;
use crate::graph::{Graph, MemberId};
use crate::hashing;
use crate::scalar::Real;

const NOISE_SALT: u64 = 0x0A15_E000;
const LOGISTIC_STEEPNESS: f64 = 10.0;

/// `f` maps exposure in `[0, 1]` onto `[0, 1]`, non-decreasing, with
/// `f(0) = 0` and `f(1) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseShape {
    #[default]
    Linear,
    /// `sqrt(p)`
    Concave,
    /// `p^2`
    Convex,
    /// Rescaled logistic centered at 1/2.
    Logistic,
}

impl ResponseShape {
    pub const ALL: [ResponseShape; 4] = [
        ResponseShape::Linear,
        ResponseShape::Concave,
        ResponseShape::Convex,
        ResponseShape::Logistic,
    ];

    pub fn apply(self, p: f64) -> f64 {
        match self {
            ResponseShape::Linear => p,
            ResponseShape::Concave => p.sqrt(),
            ResponseShape::Convex => p * p,
            ResponseShape::Logistic => {
                let s = |x: f64| 1.0 / (1.0 + (-LOGISTIC_STEEPNESS * (x - 0.5)).exp());
                let (lo, hi) = (s(0.0), s(1.0));
                (s(p) - lo) / (hi - lo)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    Gaussian,
    /// Centered lognormal (log-scale sd 1) rescaled to `noise_sd`.
    LogNormal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeModel {
    pub baseline: f64,
    pub direct_effect: f64,
    pub network_effect: f64,
    pub noise_sd: f64,
    #[serde(default)]
    pub shape: ResponseShape,
    #[serde(default)]
    pub noise: NoiseKind,
}

impl OutcomeModel {
    pub fn linear(baseline: f64, direct_effect: f64, network_effect: f64, noise_sd: f64) -> Self {
        Self {
            baseline,
            direct_effect,
            network_effect,
            noise_sd,
            shape: ResponseShape::Linear,
            noise: NoiseKind::Gaussian,
        }
    }

    pub fn with_shape(mut self, shape: ResponseShape) -> Self {
        self.shape = shape;
        self
    }

    pub fn with_noise(mut self, noise: NoiseKind) -> Self {
        self.noise = noise;
        self
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        let finite = [
            self.baseline,
            self.direct_effect,
            self.network_effect,
            self.noise_sd,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite || self.noise_sd < 0.0 {
            return Err(SimulationError::InvalidParameter(
                "outcome model needs finite coefficients and noise_sd >= 0".into(),
            ));
        }
        Ok(())
    }

    /// Noiseless response for own treatment `z` and exposure `p`.
    pub fn mean_response(&self, z: bool, p: f64) -> f64 {
        self.baseline
            + self.direct_effect * (z as u8 as f64)
            + self.network_effect * self.shape.apply(p)
    }

    /// The noise draw of member `m`; depends only on `(seed, m)`.
    pub fn noise_for(&self, seed: u64, m: MemberId) -> f64 {
        if self.noise_sd == 0.0 {
            return 0.0;
        }
        let z: f64 = StandardNormal.sample(&mut hashing::keyed_rng(seed, NOISE_SALT, m.0));
        match self.noise {
            NoiseKind::Gaussian => self.noise_sd * z,
            NoiseKind::LogNormal => {
                let e = std::f64::consts::E;
                self.noise_sd * (z.exp() - e.sqrt()) / ((e - 1.0) * e).sqrt()
            }
        }
    }
}

/// Outcome of every member of `g` under `plan`, metric name `y`.
pub fn simulate_outcomes<R: Real>(
    g: &Graph<R>,
    plan: &AssignmentPlan,
    model: &OutcomeModel,
    seed: u64,
) -> Result<OutcomeTable<R>, SimulationError> {
    model.validate()?;
    let treated: Vec<bool> = g
        .members()
        .iter()
        .map(|&m| {
            plan.variant(m)
                .map(|v| v.is_treated())
                .ok_or(SimulationError::Uncovered(m))
        })
        .collect::<Result<_, _>>()?;
    let mut table = OutcomeTable::new(vec!["y".into()]);
    for i in 0..g.node_count() {
        let ns = g.neighbors_at(i).0;
        let p = if ns.is_empty() {
            0.0
        } else {
            ns.iter().filter(|&&n| treated[n]).count() as f64 / ns.len() as f64
        };
        let m = g.id_at(i);
        let y = model.mean_response(treated[i], p) + model.noise_for(seed, m);
        table
            .insert(m, vec![R::lit(y)])
            .expect("one row per member");
    }
    Ok(table)
}

/// Pre-period outcomes: baseline plus noise, no treatment.
pub fn simulate_baseline<R: Real>(
    g: &Graph<R>,
    model: &OutcomeModel,
    seed: u64,
) -> Result<OutcomeTable<R>, SimulationError> {
    model.validate()?;
    let mut table = OutcomeTable::new(vec!["y".into()]);
    for &m in g.members() {
        let y = model.baseline + model.noise_for(seed, m);
        table
            .insert(m, vec![R::lit(y)])
            .expect("one row per member");
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::{Assignment, AssignmentParams, EgoMode, Role, Variant};
    use crate::graph::GraphBuilder;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn plan_from(treated: &[(u64, bool)]) -> AssignmentPlan {
        let assignments = treated
            .iter()
            .map(|&(m, t)| {
                (
                    MemberId(m),
                    Assignment {
                        variant: Variant::from_coin(t),
                        role: Role::Leftover,
                        ego: None,
                    },
                )
            })
            .collect();
        AssignmentPlan {
            assignments,
            ego_coin: BTreeMap::new(),
            params: AssignmentParams {
                mode: EgoMode::AllTreated,
                p: 0.5,
                seed: 0,
            },
        }
    }

    fn star4() -> Graph<f64> {
        let mut b = GraphBuilder::<f64>::new();
        for l in 1..=4u64 {
            b.add_edge(0u64, l, 1.0).unwrap();
        }
        b.build()
    }

    #[test]
    fn noiseless_gap_is_network_effect() {
        let g = star4();
        let m = OutcomeModel::linear(3.0, 0.0, 1.0, 0.0);
        let all = plan_from(&[(0, false), (1, true), (2, true), (3, true), (4, true)]);
        let none = plan_from(&[(0, false), (1, false), (2, false), (3, false), (4, false)]);
        let a = simulate_outcomes(&g, &all, &m, 1).unwrap();
        let b = simulate_outcomes(&g, &none, &m, 1).unwrap();
        assert_eq!(
            a.value(MemberId(0), 0).unwrap() - b.value(MemberId(0), 0).unwrap(),
            1.0
        );
        for k in 0..=4 {
            assert_eq!(b.value(MemberId(k), 0).unwrap(), 3.0);
        }
    }

    #[test]
    fn exposure_counts_all_neighbors() {
        let g = star4();
        let m = OutcomeModel::linear(0.0, 0.0, 1.0, 0.0);
        for treated in [[1u64, 2], [3, 4], [1, 4]] {
            let rows: Vec<(u64, bool)> = (0..=4).map(|k| (k, treated.contains(&k))).collect();
            let y = simulate_outcomes(&g, &plan_from(&rows), &m, 0).unwrap();
            assert_eq!(y.value(MemberId(0), 0).unwrap(), 0.5);
        }
    }

    #[test]
    fn uncovered_member() {
        let g = star4();
        let p = plan_from(&[(0, true)]);
        assert!(matches!(
            simulate_outcomes(&g, &p, &OutcomeModel::linear(0.0, 0.0, 1.0, 0.0), 0),
            Err(SimulationError::Uncovered(_))
        ));
    }

    #[test]
    fn shapes_are_normalized_and_monotone() {
        for s in ResponseShape::ALL {
            assert!(s.apply(0.0).abs() < 1e-12);
            assert!((s.apply(1.0) - 1.0).abs() < 1e-12);
            let mut last = -1.0;
            for k in 0..=100 {
                let v = s.apply(k as f64 / 100.0);
                assert!(v >= last);
                last = v;
            }
        }
    }

    #[test]
    fn lognormal_noise_is_centered() {
        let m = OutcomeModel::linear(0.0, 0.0, 0.0, 2.0).with_noise(NoiseKind::LogNormal);
        let xs: Vec<f64> = (0..200_000u64)
            .map(|k| m.noise_for(3, MemberId(k)))
            .collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64).sqrt();
        assert!(mean.abs() < 0.05, "{mean}");
        assert!((sd - 2.0).abs() < 0.15, "{sd}");
    }

    fn path_graph(n: u64) -> Graph<f64> {
        let mut b = GraphBuilder::<f64>::new();
        for u in 0..n - 1 {
            b.add_edge(u, u + 1, 1.0).unwrap();
        }
        b.add_edge(0u64, n / 2, 1.0).unwrap();
        b.build()
    }

    proptest! {
        #[test]
        fn non_neighbors_do_not_matter(bits in any::<u32>(), flip in 0u64..12, i in 0u64..12) {
            let g = path_graph(12);
            let m = OutcomeModel::linear(1.0, 0.7, 2.0, 0.0).with_shape(ResponseShape::Logistic);
            let rows: Vec<(u64, bool)> = (0..12).map(|k| (k, bits >> k & 1 == 1)).collect();
            let mut flipped = rows.clone();
            flipped[flip as usize].1 ^= true;
            let neighbor = g.weight(MemberId(i), MemberId(flip)).unwrap() > 0.0;
            prop_assume!(flip != i && !neighbor);
            let a = simulate_outcomes(&g, &plan_from(&rows), &m, 5).unwrap();
            let b = simulate_outcomes(&g, &plan_from(&flipped), &m, 5).unwrap();
            prop_assert_eq!(a.value(MemberId(i), 0).unwrap(), b.value(MemberId(i), 0).unwrap());
        }

        #[test]
        fn response_monotone_in_exposure(p1 in 0.0f64..1.0, p2 in 0.0f64..1.0, z in any::<bool>(), s in 0usize..4, bn in 0.0f64..5.0) {
            let m = OutcomeModel::linear(1.0, 0.5, bn, 1.0).with_shape(ResponseShape::ALL[s]);
            let (lo, hi) = if p1 < p2 { (p1, p2) } else { (p2, p1) };
            let e = m.noise_for(9, MemberId(4));
            prop_assert!(m.mean_response(z, lo) + e <= m.mean_response(z, hi) + e);
        }
    }
}
