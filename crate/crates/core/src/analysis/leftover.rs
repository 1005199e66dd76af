//! Members left outside every cluster compared with the whole population,
//! with means scaled so the population mean is 100.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{AnalysisError, OutcomeTable};
use crate::clustering::ClusteringResult;
use crate::graph::{Graph, MemberId};
use crate::scalar::Real;
use crate::stats::{mean, population_sd};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeftoverRow<R> {
    pub variable: String,
    /// Raw population mean used as the scale.
    pub population_raw_mean: R,
    /// `false` when the population mean is zero and values are left raw.
    pub normalized: bool,
    pub population_mean: R,
    pub population_sd: R,
    pub leftover_mean: Option<R>,
    pub leftover_sd: Option<R>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeftoverReport<R> {
    pub population: usize,
    pub leftover: usize,
    /// No member was left over; leftover columns are `None`.
    pub empty: bool,
    pub rows: Vec<LeftoverRow<R>>,
}

impl<R: Real> LeftoverReport<R> {
    pub fn row(&self, variable: &str) -> Option<&LeftoverRow<R>> {
        self.rows.iter().find(|r| r.variable == variable)
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "population {} members, leftover {} members",
            self.population, self.leftover
        );
        let _ = writeln!(
            s,
            "{:<20} {:>20} {:>20}",
            "variable", "population", "leftover"
        );
        for r in &self.rows {
            let left = match (r.leftover_mean, r.leftover_sd) {
                (Some(m), Some(sd)) => format!("{:.1} ± {:.1}", m.as_f64(), sd.as_f64()),
                _ => "(empty)".into(),
            };
            let _ = writeln!(
                s,
                "{:<20} {:>20} {:>20}",
                r.variable,
                format!(
                    "{:.1} ± {:.1}",
                    r.population_mean.as_f64(),
                    r.population_sd.as_f64()
                ),
                left
            );
        }
        s
    }
}

fn row<R: Real>(name: &str, pop: &[R], left: &[R]) -> LeftoverRow<R> {
    let raw = mean(pop);
    let normalized = raw != R::zero() && raw.is_finite();
    let scale = if normalized {
        R::lit(100.0) / raw
    } else {
        R::one()
    };
    let scaled = |xs: &[R]| -> Vec<R> { xs.iter().map(|&x| x * scale).collect() };
    let p = scaled(pop);
    let (lm, ls) = if left.is_empty() {
        (None, None)
    } else {
        let l = scaled(left);
        (Some(mean(&l)), Some(population_sd(&l)))
    };
    LeftoverRow {
        variable: name.to_string(),
        population_raw_mean: raw,
        normalized,
        population_mean: mean(&p),
        population_sd: population_sd(&p),
        leftover_mean: lm,
        leftover_sd: ls,
    }
}

/// Degree plus every metric column, population vs leftover.
pub fn leftover_diagnostics<R: Real>(
    result: &ClusteringResult<R>,
    g: &Graph<R>,
    metrics: Option<&OutcomeTable<R>>,
) -> Result<LeftoverReport<R>, AnalysisError> {
    let all: &[MemberId] = g.members();
    let left = &result.leftover;
    let deg = |ms: &[MemberId]| -> Result<Vec<R>, AnalysisError> {
        ms.iter()
            .map(|&m| Ok(R::from_count(g.degree(m)?)))
            .collect()
    };
    let mut rows = vec![row("degree", &deg(all)?, &deg(left)?)];
    if let Some(t) = metrics {
        for (ix, name) in t.metrics().iter().enumerate() {
            let pop = t.column_for(ix, all.iter().copied())?;
            let l = t.column_for(ix, left.iter().copied())?;
            rows.push(row(name, &pop, &l));
        }
    }
    Ok(LeftoverReport {
        population: all.len(),
        leftover: left.len(),
        empty: left.is_empty(),
        rows,
    })
}
