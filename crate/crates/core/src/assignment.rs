//! Ego-level randomization.
//!
//! Each ego gets one Bernoulli(p) coin that decides the variant of all its
//! alters. The ego's own variant depends on the [`EgoMode`]. Members outside
//! every cluster get their own Bernoulli(p) draw. All coins are keyed hashes
//! of `(seed, member)` so the plan does not depend on iteration order.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clustering::ClusteringResult;
use crate::graph::{Graph, GraphError, MemberId};
use crate::hashing;
use crate::scalar::Real;

const CLUSTER_SALT: u64 = 0xC1A5_7E12;
const EGO_SALT: u64 = 0xE60E_60E6;
const LEFTOVER_SALT: u64 = 0x1EF7_0BE2;

#[derive(Debug, thiserror::Error)]
pub enum AssignmentError {
    #[error("treatment probability must be in (0, 1), got {0}")]
    InvalidProbability(f64),
    #[error("clustering has no egos")]
    EmptyClustering,
    #[error("plan does not match the clustering: {0}")]
    Inconsistent(String),
    #[error("unknown ego mode '{0}'")]
    UnknownMode(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Variant {
    Treated,
    Control,
}

impl Variant {
    pub fn from_coin(coin: bool) -> Self {
        if coin {
            Variant::Treated
        } else {
            Variant::Control
        }
    }

    pub fn is_treated(self) -> bool {
        self == Variant::Treated
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Treated => "TREATED",
            Variant::Control => "CONTROL",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Role {
    Ego,
    Alter,
    Leftover,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Ego => "EGO",
            Role::Alter => "ALTER",
            Role::Leftover => "LEFTOVER",
        })
    }
}

/// Variant given to the ego itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EgoMode {
    /// Ego always treated: alters-treated vs alters-control isolates the
    /// pure network effect.
    AllTreated,
    AllControl,
    /// Ego follows its alters: the total-effect contrast.
    MatchAlters,
    /// Ego flips its own coin.
    Independent,
}

impl EgoMode {
    pub const ALL: [EgoMode; 4] = [
        EgoMode::AllTreated,
        EgoMode::AllControl,
        EgoMode::MatchAlters,
        EgoMode::Independent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EgoMode::AllTreated => "all-treated",
            EgoMode::AllControl => "all-control",
            EgoMode::MatchAlters => "match-alters",
            EgoMode::Independent => "independent",
        }
    }
}

impl fmt::Display for EgoMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EgoMode {
    type Err = AssignmentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let k = s.to_ascii_lowercase().replace('_', "-");
        EgoMode::ALL
            .into_iter()
            .find(|m| m.name() == k)
            .ok_or_else(|| AssignmentError::UnknownMode(s.to_string()))
    }
}

/// Which coin is being flipped, passed to the coin source of
/// [`assign_with_coins`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoinKind {
    /// The ego's cluster coin (decides the alters).
    Cluster,
    /// The ego's own coin in [`EgoMode::Independent`].
    Ego,
    Leftover,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub variant: Variant,
    pub role: Role,
    /// Own id for egos, owning ego for alters, `None` for leftover.
    pub ego: Option<MemberId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentParams {
    pub mode: EgoMode,
    pub p: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentPlan {
    pub assignments: BTreeMap<MemberId, Assignment>,
    /// `true` means the ego's alters are treated.
    pub ego_coin: BTreeMap<MemberId, bool>,
    pub params: AssignmentParams,
}

impl AssignmentPlan {
    pub fn get(&self, m: MemberId) -> Option<&Assignment> {
        self.assignments.get(&m)
    }

    pub fn variant(&self, m: MemberId) -> Option<Variant> {
        self.assignments.get(&m).map(|a| a.variant)
    }

    pub fn is_treated(&self, m: MemberId) -> bool {
        self.variant(m).is_some_and(Variant::is_treated)
    }

    pub fn egos(&self) -> impl Iterator<Item = (MemberId, bool)> + '_ {
        self.ego_coin.iter().map(|(&e, &c)| (e, c))
    }

    pub fn treated_count(&self) -> usize {
        self.assignments
            .values()
            .filter(|a| a.variant.is_treated())
            .count()
    }

    /// `member_id<TAB>variant<TAB>role<TAB>ego_id`, with a header row.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "member_id\tvariant\trole\tego_id")?;
        for (m, a) in &self.assignments {
            let ego = a.ego.map(|e| e.to_string()).unwrap_or_default();
            writeln!(out, "{m}\t{}\t{}\t{ego}", a.variant, a.role)?;
        }
        Ok(())
    }

    /// Checks that the plan covers `result` exactly and that every cluster
    /// is coherent.
    pub fn check_against<R: Real>(
        &self,
        result: &ClusteringResult<R>,
    ) -> Result<(), AssignmentError> {
        let bad = |m: String| Err(AssignmentError::Inconsistent(m));
        if self.ego_coin.len() != result.clusters.len() {
            return bad("ego count differs".into());
        }
        for c in &result.clusters {
            let Some(&coin) = self.ego_coin.get(&c.ego) else {
                return bad(format!("ego {} has no coin", c.ego));
            };
            match self.assignments.get(&c.ego) {
                Some(a) if a.role == Role::Ego => {}
                _ => return bad(format!("ego {} missing", c.ego)),
            }
            for a in &c.cluster_alters {
                match self.assignments.get(a) {
                    Some(x) if x.role == Role::Alter && x.variant == Variant::from_coin(coin) => {}
                    _ => return bad(format!("alter {a} of ego {} is not coherent", c.ego)),
                }
            }
        }
        for m in &result.leftover {
            match self.assignments.get(m) {
                Some(a) if a.role == Role::Leftover => {}
                _ => return bad(format!("leftover member {m} missing")),
            }
        }
        if self.assignments.len() != result.claimed_count() + result.leftover.len() {
            return bad("plan has members outside the clustering".into());
        }
        Ok(())
    }
}

/// Randomizes `result` with keyed-hash coins.
pub fn assign<R: Real>(
    result: &ClusteringResult<R>,
    mode: EgoMode,
    p: f64,
    seed: u64,
) -> Result<AssignmentPlan, AssignmentError> {
    assign_with_coins(result, mode, p, seed, |kind, m| {
        let salt = match kind {
            CoinKind::Cluster => CLUSTER_SALT,
            CoinKind::Ego => EGO_SALT,
            CoinKind::Leftover => LEFTOVER_SALT,
        };
        hashing::keyed_coin(seed, salt, m.0, p)
    })
}

/// Same as [`assign`] with an arbitrary coin source, e.g. for exhaustive
/// enumeration of coin outcomes.
pub fn assign_with_coins<R: Real>(
    result: &ClusteringResult<R>,
    mode: EgoMode,
    p: f64,
    seed: u64,
    coin: impl Fn(CoinKind, MemberId) -> bool,
) -> Result<AssignmentPlan, AssignmentError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(AssignmentError::InvalidProbability(p));
    }
    if result.clusters.is_empty() {
        return Err(AssignmentError::EmptyClustering);
    }
    let mut assignments = BTreeMap::new();
    let mut ego_coin = BTreeMap::new();
    for c in &result.clusters {
        let heads = coin(CoinKind::Cluster, c.ego);
        ego_coin.insert(c.ego, heads);
        let alters = Variant::from_coin(heads);
        let ego_variant = match mode {
            EgoMode::AllTreated => Variant::Treated,
            EgoMode::AllControl => Variant::Control,
            EgoMode::MatchAlters => alters,
            EgoMode::Independent => Variant::from_coin(coin(CoinKind::Ego, c.ego)),
        };
        assignments.insert(
            c.ego,
            Assignment {
                variant: ego_variant,
                role: Role::Ego,
                ego: Some(c.ego),
            },
        );
        for &a in &c.cluster_alters {
            assignments.insert(
                a,
                Assignment {
                    variant: alters,
                    role: Role::Alter,
                    ego: Some(c.ego),
                },
            );
        }
    }
    for &m in &result.leftover {
        assignments.insert(
            m,
            Assignment {
                variant: Variant::from_coin(coin(CoinKind::Leftover, m)),
                role: Role::Leftover,
                ego: None,
            },
        );
    }
    Ok(AssignmentPlan {
        assignments,
        ego_coin,
        params: AssignmentParams { mode, p, seed },
    })
}

/// Fraction of `m`'s graph neighbors that are treated under `plan`.
pub fn exposure<R: Real>(
    plan: &AssignmentPlan,
    g: &Graph<R>,
    m: MemberId,
) -> Result<R, AssignmentError> {
    let i = g.index_of(m)?;
    let ns = g.neighbors_at(i).0;
    if ns.is_empty() {
        return Ok(R::zero());
    }
    let mut treated = 0usize;
    for &n in ns {
        let id = g.id_at(n);
        match plan.variant(id) {
            Some(v) => treated += v.is_treated() as usize,
            None => {
                return Err(AssignmentError::Inconsistent(format!(
                    "neighbor {id} has no assignment"
                )))
            }
        }
    }
    Ok(R::from_count(treated) / R::from_count(ns.len()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoExposure<R> {
    pub ego: MemberId,
    pub alters_treated: bool,
    pub loss_rate: R,
    /// Realized share of treated neighbors over the full neighborhood.
    pub exposure: R,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmExposure<R> {
    pub egos: usize,
    pub mean_loss_rate: R,
    pub mean_exposure: R,
    /// `(1 - a) + p a` for the treated arm, `p a` for the control arm, with
    /// `a` the arm's mean loss rate.
    pub expected_exposure: R,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureSummary<R> {
    pub p: f64,
    pub rows: Vec<EgoExposure<R>>,
    pub alters_treated: ArmExposure<R>,
    pub alters_control: ArmExposure<R>,
}

impl<R: Real> ExposureSummary<R> {
    pub fn realized_gap(&self) -> R {
        self.alters_treated.mean_exposure - self.alters_control.mean_exposure
    }

    pub fn expected_gap(&self) -> R {
        self.alters_treated.expected_exposure - self.alters_control.expected_exposure
    }
}

/// Expected exposure of an ego whose alters are treated (`alters_treated`)
/// or not, given its loss rate and the global treatment probability.
pub fn expected_exposure<R: Real>(loss_rate: R, p: R, alters_treated: bool) -> R {
    if alters_treated {
        (R::one() - loss_rate) + p * loss_rate
    } else {
        p * loss_rate
    }
}

pub fn exposure_summary<R: Real>(
    plan: &AssignmentPlan,
    g: &Graph<R>,
    result: &ClusteringResult<R>,
) -> Result<ExposureSummary<R>, AssignmentError> {
    plan.check_against(result)?;
    let mut rows = Vec::with_capacity(result.clusters.len());
    for c in &result.clusters {
        rows.push(EgoExposure {
            ego: c.ego,
            alters_treated: plan.ego_coin[&c.ego],
            loss_rate: c.loss_rate,
            exposure: exposure(plan, g, c.ego)?,
        });
    }
    let p = R::lit(plan.params.p);
    let arm = |treated: bool| {
        let sel: Vec<&EgoExposure<R>> = rows
            .iter()
            .filter(|r| r.alters_treated == treated)
            .collect();
        let n = sel.len();
        let (ml, me) = if n == 0 {
            (R::zero(), R::zero())
        } else {
            let d = R::from_count(n);
            (
                sel.iter().map(|r| r.loss_rate).sum::<R>() / d,
                sel.iter().map(|r| r.exposure).sum::<R>() / d,
            )
        };
        ArmExposure {
            egos: n,
            mean_loss_rate: ml,
            mean_exposure: me,
            expected_exposure: expected_exposure(ml, p, treated),
        }
    };
    let alters_treated = arm(true);
    let alters_control = arm(false);
    Ok(ExposureSummary {
        p: plan.params.p,
        rows,
        alters_treated,
        alters_control,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::{
        reattach_alters, stratified_cluster, Algorithm, ClusteringParams, EgoCluster,
        IterationDiagnostics,
    };
    use crate::graph::GraphBuilder;
    use proptest::prelude::*;

    fn abc() -> (Graph<f64>, ClusteringResult<f64>) {
        // A=1 with alters B=2, C=3; 4 is a lost neighbor and leftover
        let mut b = GraphBuilder::<f64>::new();
        b.add_edge(1u64, 2u64, 1.0).unwrap();
        b.add_edge(1u64, 3u64, 1.0).unwrap();
        b.add_edge(1u64, 4u64, 1.0).unwrap();
        let g = b.build();
        let c = EgoCluster::from_graph(&g, MemberId(1), vec![MemberId(2), MemberId(3)]).unwrap();
        let r = ClusteringResult {
            clusters: vec![c],
            leftover: vec![MemberId(4)],
            diagnostics: IterationDiagnostics::default(),
            params: ClusteringParams {
                algorithm: Algorithm::Stratified,
                target_loss: Some(0.5),
                stop_loss: None,
                window: None,
                bin_count: Some(1),
                seed: 0,
            },
        };
        (g, r)
    }

    fn with_coin(r: &ClusteringResult<f64>, mode: EgoMode, heads: bool) -> AssignmentPlan {
        assign_with_coins(r, mode, 0.5, 0, |k, _| match k {
            CoinKind::Cluster => heads,
            _ => false,
        })
        .unwrap()
    }

    #[test]
    fn all_treated_heads_treats_everyone_in_cluster() {
        let (_, r) = abc();
        let p = with_coin(&r, EgoMode::AllTreated, true);
        for m in 1..=3 {
            assert_eq!(p.variant(MemberId(m)), Some(Variant::Treated));
        }
        assert_eq!(p.get(MemberId(4)).unwrap().role, Role::Leftover);
    }

    #[test]
    fn all_treated_tails_keeps_ego_treated() {
        let (_, r) = abc();
        let p = with_coin(&r, EgoMode::AllTreated, false);
        assert_eq!(p.variant(MemberId(1)), Some(Variant::Treated));
        assert_eq!(p.variant(MemberId(2)), Some(Variant::Control));
        assert_eq!(p.variant(MemberId(3)), Some(Variant::Control));
    }

    #[test]
    fn match_alters_tails_is_all_control() {
        let (_, r) = abc();
        let p = with_coin(&r, EgoMode::MatchAlters, false);
        for m in 1..=3 {
            assert_eq!(p.variant(MemberId(m)), Some(Variant::Control));
        }
        let p = with_coin(&r, EgoMode::AllControl, true);
        assert_eq!(p.variant(MemberId(1)), Some(Variant::Control));
        assert_eq!(p.variant(MemberId(2)), Some(Variant::Treated));
    }

    #[test]
    fn plan_tsv_layout() {
        let (_, r) = abc();
        let p = with_coin(&r, EgoMode::AllTreated, false);
        let mut out = Vec::new();
        p.write_tsv(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "member_id\tvariant\trole\tego_id\n1\tTREATED\tEGO\t1\n2\tCONTROL\tALTER\t1\n3\tCONTROL\tALTER\t1\n4\tCONTROL\tLEFTOVER\t\n"
        );
    }

    #[test]
    fn modes_parse() {
        for m in EgoMode::ALL {
            assert_eq!(m.name().parse::<EgoMode>().unwrap(), m);
        }
        assert_eq!(
            "ALL_TREATED".parse::<EgoMode>().unwrap(),
            EgoMode::AllTreated
        );
        assert!("sometimes".parse::<EgoMode>().is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        let (_, r) = abc();
        for p in [0.0, 1.0, -0.5, f64::NAN] {
            assert!(matches!(
                assign(&r, EgoMode::AllTreated, p, 1),
                Err(AssignmentError::InvalidProbability(_))
            ));
        }
        let mut empty = r.clone();
        empty.clusters.clear();
        assert!(matches!(
            assign(&empty, EgoMode::AllTreated, 0.5, 1),
            Err(AssignmentError::EmptyClustering)
        ));
    }

    #[test]
    fn zero_loss_ego_in_treated_arm_has_full_exposure() {
        let mut b = GraphBuilder::<f64>::new();
        b.add_edge(1u64, 2u64, 1.0).unwrap();
        b.add_edge(1u64, 3u64, 1.0).unwrap();
        let g = b.build();
        let c = EgoCluster::from_graph(&g, MemberId(1), vec![MemberId(2), MemberId(3)]).unwrap();
        let (_, mut r) = abc();
        r.clusters = vec![c];
        r.leftover.clear();
        let plan = with_coin(&r, EgoMode::AllControl, true);
        let s = exposure_summary(&plan, &g, &r).unwrap();
        assert_eq!(s.rows[0].exposure, 1.0);
    }

    #[test]
    fn expectation_formulas() {
        let t = expected_exposure(0.2f64, 0.5, true);
        let c = expected_exposure(0.2f64, 0.5, false);
        assert!((t - 0.9).abs() < 1e-15);
        assert!((c - 0.1).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn arm_gap_is_one_minus_loss(a in 0.0f64..1.0, p in 0.01f64..0.99) {
            let gap = expected_exposure(a, p, true) - expected_exposure(a, p, false);
            prop_assert!((gap - (1.0 - a)).abs() < 1e-12);
        }

        #[test]
        fn clusters_are_coherent(seed in any::<u64>(), mode_ix in 0usize..4, p in 0.05f64..0.95) {
            let g = random_graph(200, 3, 17);
            let r = stratified_cluster(&g, 0.3, 5, 3).unwrap();
            let plan = assign(&r, EgoMode::ALL[mode_ix], p, seed).unwrap();
            plan.check_against(&r).unwrap();
            prop_assert_eq!(plan.assignments.len(), g.node_count());
            let again = assign(&r, EgoMode::ALL[mode_ix], p, seed).unwrap();
            prop_assert_eq!(&plan, &again);
            for c in &r.clusters {
                let ego = plan.variant(c.ego).unwrap();
                let alters = Variant::from_coin(plan.ego_coin[&c.ego]);
                match EgoMode::ALL[mode_ix] {
                    EgoMode::AllTreated => prop_assert_eq!(ego, Variant::Treated),
                    EgoMode::AllControl => prop_assert_eq!(ego, Variant::Control),
                    EgoMode::MatchAlters => prop_assert_eq!(ego, alters),
                    EgoMode::Independent => {}
                }
            }
        }
    }

    fn random_graph(n: u64, per_node: usize, seed: u64) -> Graph<f64> {
        let mut b = GraphBuilder::<f64>::new();
        let mut s = seed;
        for u in 0..n {
            b.add_node(u);
            for _ in 0..per_node {
                s = hashing::splitmix64(s);
                let v = s % n;
                if v != u {
                    b.add_edge(u, v, 1.0).unwrap();
                }
            }
        }
        b.build()
    }

    #[test]
    fn coin_fairness_at_ten_thousand_clusters() {
        // disjoint edges: 10,000 single-alter clusters
        let mut b = GraphBuilder::<f64>::new();
        for k in 0..10_000u64 {
            b.add_edge(2 * k, 2 * k + 1, 1.0).unwrap();
        }
        let g = b.build();
        let r = stratified_cluster(&g, 0.0, 1, 1).unwrap();
        assert_eq!(r.ego_count(), 10_000);
        for (seed, p) in [(1u64, 0.5), (2, 0.3), (3, 0.8)] {
            let plan = assign(&r, EgoMode::AllTreated, p, seed).unwrap();
            let heads = plan.ego_coin.values().filter(|&&c| c).count() as f64;
            let sd = (10_000.0 * p * (1.0 - p)).sqrt();
            // 99% two-sided normal interval
            assert!(
                (heads - 10_000.0 * p).abs() < 2.576 * sd,
                "p={p} heads={heads}"
            );
        }
    }

    #[test]
    fn realized_exposure_matches_expectation() {
        let g = random_graph(4000, 4, 5);
        let partial = stratified_cluster(&g, 0.3, 8, 9).unwrap();
        let r = reattach_alters(&g, &partial).unwrap();
        for seed in 0..5u64 {
            let plan = assign(&r, EgoMode::MatchAlters, 0.5, seed).unwrap();
            let s = exposure_summary(&plan, &g, &r).unwrap();
            for (arm, treated) in [(&s.alters_treated, true), (&s.alters_control, false)] {
                // each lost neighbor is an independent Bernoulli(p) draw
                let lost: f64 = s
                    .rows
                    .iter()
                    .filter(|x| x.alters_treated == treated)
                    .map(|x| {
                        let d = g.degree(x.ego).unwrap() as f64;
                        x.loss_rate * d / (d * d)
                    })
                    .sum();
                let se = (0.25 * lost).sqrt() / arm.egos as f64;
                assert!(
                    (arm.mean_exposure - arm.expected_exposure).abs() < 3.0 * se + 1e-12,
                    "seed {seed} arm {treated}: {} vs {} (se {se})",
                    arm.mean_exposure,
                    arm.expected_exposure
                );
            }
        }
    }
}
