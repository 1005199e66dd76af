//! Do the egos look like the population they were drawn from?

use serde::{Deserialize, Serialize};

use super::{welch_t_test, AnalysisError, OutcomeTable, TTestResult};
use crate::clustering::ClusteringResult;
use crate::graph::{Graph, MemberId};
use crate::scalar::Real;
use crate::stats::{mean, sample_variance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Population {
    /// Members with at least one neighbor, i.e. those that could be egos.
    Eligible,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison<R> {
    pub variable: String,
    pub population: Population,
    /// Sample `a` is the egos, `b` the population.
    pub test: TTestResult<R>,
    pub smd: R,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentativityReport<R> {
    pub egos: usize,
    pub eligible: usize,
    pub all: usize,
    pub vs_eligible: Vec<Comparison<R>>,
    pub vs_all: Vec<Comparison<R>>,
}

impl<R: Real> RepresentativityReport<R> {
    pub fn degree_vs_eligible(&self) -> &Comparison<R> {
        &self.vs_eligible[0]
    }

    pub fn max_abs_smd(&self) -> R {
        self.vs_eligible
            .iter()
            .chain(&self.vs_all)
            .map(|c| c.smd.abs())
            .fold(R::zero(), R::max)
    }
}

/// `(mean_a - mean_b) / sqrt((var_a + var_b) / 2)`; zero when both samples
/// are constant and equal.
pub fn standardized_mean_difference<R: Real>(a: &[R], b: &[R]) -> R {
    let diff = mean(a) - mean(b);
    let pooled = ((sample_variance(a) + sample_variance(b)) / R::lit(2.0)).sqrt();
    if diff == R::zero() {
        R::zero()
    } else if pooled == R::zero() || pooled.is_nan() {
        diff.signum() * R::infinity()
    } else {
        diff / pooled
    }
}

/// Compares degree and every pre-period metric of `egos` against the
/// eligible population and against all members.
pub fn compare_to_population<R: Real>(
    egos: &[MemberId],
    g: &Graph<R>,
    pre: Option<&OutcomeTable<R>>,
) -> Result<RepresentativityReport<R>, AnalysisError> {
    let all: Vec<MemberId> = g.members().to_vec();
    let eligible: Vec<MemberId> = (0..g.node_count())
        .filter(|&i| g.degree_at(i) > 0)
        .map(|i| g.id_at(i))
        .collect();

    let degree_of = |ms: &[MemberId]| -> Result<Vec<R>, AnalysisError> {
        ms.iter()
            .map(|&m| Ok(R::from_count(g.degree(m)?)))
            .collect()
    };
    let ego_deg = degree_of(egos)?;
    let mut variables: Vec<(String, Vec<R>, Vec<R>, Vec<R>)> = vec![(
        "degree".into(),
        ego_deg,
        degree_of(&eligible)?,
        degree_of(&all)?,
    )];
    if let Some(t) = pre {
        for (ix, name) in t.metrics().iter().enumerate() {
            variables.push((
                name.clone(),
                t.column_for(ix, egos.iter().copied())?,
                t.column_for(ix, eligible.iter().copied())?,
                t.column_for(ix, all.iter().copied())?,
            ));
        }
    }

    let compare = |name: &str, a: &[R], b: &[R], pop| -> Result<Comparison<R>, AnalysisError> {
        Ok(Comparison {
            variable: name.to_string(),
            population: pop,
            test: welch_t_test(a, b)?.with_metric(name),
            smd: standardized_mean_difference(a, b),
        })
    };
    let mut vs_eligible = Vec::new();
    let mut vs_all = Vec::new();
    for (name, e, el, al) in &variables {
        vs_eligible.push(compare(name, e, el, Population::Eligible)?);
        vs_all.push(compare(name, e, al, Population::All)?);
    }
    Ok(RepresentativityReport {
        egos: egos.len(),
        eligible: eligible.len(),
        all: all.len(),
        vs_eligible,
        vs_all,
    })
}

pub fn representativity_check<R: Real>(
    result: &ClusteringResult<R>,
    g: &Graph<R>,
    pre: Option<&OutcomeTable<R>>,
) -> Result<RepresentativityReport<R>, AnalysisError> {
    let egos: Vec<MemberId> = result.egos().collect();
    compare_to_population(&egos, g, pre)
}
