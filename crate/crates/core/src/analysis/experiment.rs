//! Ego-level readout and A/A validation.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::representativity::RepresentativityReport;
use super::{welch_t_test, AnalysisError, OutcomeTable, TTestResult};
use crate::assignment::AssignmentPlan;
use crate::graph::MemberId;
use crate::scalar::Real;

/// Interpretation threshold shown next to p-values; not a decision rule.
pub const SIGNIFICANCE_NOTE_LEVEL: f64 = 0.1;
pub const DEFAULT_AA_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReadout<R> {
    /// Sample `a` is the alters-treated arm, `b` the alters-control arm.
    pub test: TTestResult<R>,
    pub below_0_1: bool,
    /// The metric failed its A/A check and must not be reported as an effect.
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AaReport<R> {
    pub level: f64,
    pub tests: Vec<TTestResult<R>>,
    /// Metrics whose pre-period arms differ at `level`. The randomization is
    /// kept as is; only the flag is recorded.
    pub failed: Vec<String>,
}

impl<R> AaReport<R> {
    pub fn passed(&self) -> bool {
        self.failed.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport<R> {
    /// Always the number of egos: alters and leftover members are never
    /// analysis units.
    pub analysis_units: usize,
    pub egos_alters_treated: usize,
    pub egos_alters_control: usize,
    pub metrics: Vec<MetricReadout<R>>,
    pub aa: Option<AaReport<R>>,
    pub representativity: Option<RepresentativityReport<R>>,
}

/// Egos split by their cluster coin: `(alters treated, alters control)`.
pub fn ego_arms(plan: &AssignmentPlan) -> (Vec<MemberId>, Vec<MemberId>) {
    let mut t = Vec::new();
    let mut c = Vec::new();
    for (e, heads) in plan.egos() {
        if heads {
            t.push(e);
        } else {
            c.push(e);
        }
    }
    (t, c)
}

fn resolve_metrics<R: Real>(
    table: &OutcomeTable<R>,
    metrics: &[String],
) -> Result<Vec<(String, usize)>, AnalysisError> {
    let names: Vec<String> = if metrics.is_empty() {
        table.metrics().to_vec()
    } else {
        metrics.to_vec()
    };
    names
        .into_iter()
        .map(|n| table.metric_index(&n).map(|i| (n, i)))
        .collect()
}

fn arm_tests<R: Real>(
    plan: &AssignmentPlan,
    table: &OutcomeTable<R>,
    metrics: &[String],
) -> Result<Vec<TTestResult<R>>, AnalysisError> {
    let (t, c) = ego_arms(plan);
    let cols = resolve_metrics(table, metrics)?;
    let mut out = Vec::with_capacity(cols.len());
    for (name, ix) in cols {
        let a = table.column_for(ix, t.iter().copied())?;
        let b = table.column_for(ix, c.iter().copied())?;
        let test = welch_t_test(&a, &b).map_err(|e| match e {
            AnalysisError::InsufficientSample { n_a, n_b, .. } => {
                AnalysisError::InsufficientSample {
                    metric: name.clone(),
                    n_a,
                    n_b,
                }
            }
            other => other,
        })?;
        out.push(test.with_metric(name));
    }
    Ok(out)
}

/// Welch test per metric between egos whose alters are treated and egos
/// whose alters are control. An empty `metrics` list means every column.
pub fn analyze_experiment<R: Real>(
    plan: &AssignmentPlan,
    outcomes: &OutcomeTable<R>,
    metrics: &[String],
) -> Result<AnalysisReport<R>, AnalysisError> {
    let tests = arm_tests(plan, outcomes, metrics)?;
    let (t, c) = ego_arms(plan);
    Ok(AnalysisReport {
        analysis_units: t.len() + c.len(),
        egos_alters_treated: t.len(),
        egos_alters_control: c.len(),
        metrics: tests
            .into_iter()
            .map(|test| MetricReadout {
                below_0_1: test.rejects(SIGNIFICANCE_NOTE_LEVEL),
                test,
                excluded: false,
            })
            .collect(),
        aa: None,
        representativity: None,
    })
}

/// Same comparison on pre-experiment data. Any metric significant at
/// `level` is a failed A/A check.
pub fn aa_check<R: Real>(
    plan: &AssignmentPlan,
    pre: &OutcomeTable<R>,
    metrics: &[String],
    level: f64,
) -> Result<AaReport<R>, AnalysisError> {
    let tests = arm_tests(plan, pre, metrics)?;
    let failed = tests
        .iter()
        .filter(|t| t.rejects(level))
        .map(|t| t.metric.clone())
        .collect();
    Ok(AaReport {
        level,
        tests,
        failed,
    })
}

impl<R: Real> AnalysisReport<R> {
    /// Attaches an A/A report and excludes every metric that failed it.
    pub fn with_aa(mut self, aa: AaReport<R>) -> Self {
        for m in &mut self.metrics {
            m.excluded = aa.failed.contains(&m.test.metric);
        }
        self.aa = Some(aa);
        self
    }

    pub fn with_representativity(mut self, r: RepresentativityReport<R>) -> Self {
        self.representativity = Some(r);
        self
    }

    pub fn aa_failed(&self) -> bool {
        self.aa.as_ref().is_some_and(|a| !a.passed())
    }

    pub fn metric(&self, name: &str) -> Option<&MetricReadout<R>> {
        self.metrics.iter().find(|m| m.test.metric == name)
    }

    /// Plain-text table for terminals and logs.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "egos analyzed: {} (alters treated {}, alters control {})",
            self.analysis_units, self.egos_alters_treated, self.egos_alters_control
        );
        let _ = writeln!(
            s,
            "{:<20} {:>12} {:>12} {:>9} {:>9} {:>8} {:>10}  note",
            "metric", "mean_T", "mean_C", "delta%", "t", "df", "p"
        );
        for m in &self.metrics {
            let t = &m.test;
            let delta = t
                .delta_pct
                .map(|d| format!("{:.2}", d.as_f64()))
                .unwrap_or_else(|| "n/a".into());
            let mut note = Vec::new();
            if m.below_0_1 {
                note.push("p<0.1");
            }
            if m.excluded {
                note.push("EXCLUDED (A/A)");
            }
            if t.degenerate {
                note.push("degenerate");
            }
            let _ = writeln!(
                s,
                "{:<20} {:>12.4} {:>12.4} {:>9} {:>9.3} {:>8.1} {:>10.4}  {}",
                t.metric,
                t.mean_a.as_f64(),
                t.mean_b.as_f64(),
                delta,
                t.t_stat.as_f64(),
                t.df.as_f64(),
                t.p_value.as_f64(),
                note.join(", ")
            );
        }
        if let Some(aa) = &self.aa {
            if aa.passed() {
                let _ = writeln!(s, "A/A check passed at level {}", aa.level);
            } else {
                let _ = writeln!(
                    s,
                    "A/A check FAILED at level {} for: {}",
                    aa.level,
                    aa.failed.join(", ")
                );
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::{Assignment, AssignmentParams, EgoMode, Role, Variant};
    use std::collections::BTreeMap;

    fn plan(coins: &[(u64, bool)]) -> AssignmentPlan {
        let mut assignments = BTreeMap::new();
        let mut ego_coin = BTreeMap::new();
        for &(e, c) in coins {
            ego_coin.insert(MemberId(e), c);
            assignments.insert(
                MemberId(e),
                Assignment {
                    variant: Variant::Treated,
                    role: Role::Ego,
                    ego: Some(MemberId(e)),
                },
            );
            // one alter per ego at id + 1000
            assignments.insert(
                MemberId(e + 1000),
                Assignment {
                    variant: Variant::from_coin(c),
                    role: Role::Alter,
                    ego: Some(MemberId(e)),
                },
            );
        }
        AssignmentPlan {
            assignments,
            ego_coin,
            params: AssignmentParams {
                mode: EgoMode::AllTreated,
                p: 0.5,
                seed: 0,
            },
        }
    }

    fn table(values: &[(u64, f64)]) -> OutcomeTable<f64> {
        let mut t = OutcomeTable::new(vec!["y".into()]);
        for &(m, v) in values {
            t.insert(MemberId(m), vec![v]).unwrap();
        }
        t
    }

    #[test]
    fn only_egos_are_units() {
        let p = plan(&[(1, true), (2, true), (3, false), (4, false)]);
        // alters carry wild values that would move the means if used
        let t = table(&[
            (1, 2.0),
            (2, 4.0),
            (3, 1.0),
            (4, 3.0),
            (1001, 1e6),
            (1002, 1e6),
            (1003, -1e6),
            (1004, -1e6),
        ]);
        let r = analyze_experiment(&p, &t, &[]).unwrap();
        assert_eq!(r.analysis_units, 4);
        let m = &r.metrics[0].test;
        assert_eq!((m.mean_a, m.mean_b), (3.0, 2.0));
        assert!((m.delta_pct.unwrap() - 50.0).abs() < 1e-12);
        assert!(r.to_table().contains("egos analyzed: 4"));
    }

    #[test]
    fn one_ego_per_arm_is_insufficient() {
        let p = plan(&[(1, true), (2, false)]);
        let t = table(&[(1, 1.0), (2, 2.0)]);
        match analyze_experiment(&p, &t, &["y".into()]) {
            Err(AnalysisError::InsufficientSample { metric, n_a, n_b }) => {
                assert_eq!((metric.as_str(), n_a, n_b), ("y", 1, 1));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_ego_outcome() {
        let p = plan(&[(1, true), (2, true), (3, false), (4, false)]);
        let t = table(&[(1, 1.0), (2, 2.0), (3, 1.0)]);
        assert!(matches!(
            analyze_experiment(&p, &t, &[]),
            Err(AnalysisError::MissingOutcome(MemberId(4)))
        ));
    }

    #[test]
    fn aa_failure_excludes_metric() {
        let p = plan(&[
            (1, true),
            (2, true),
            (3, true),
            (4, false),
            (5, false),
            (6, false),
        ]);
        let pre = table(&[
            (1, 10.0),
            (2, 10.1),
            (3, 9.9),
            (4, 0.0),
            (5, 0.1),
            (6, -0.1),
        ]);
        let post = table(&[(1, 1.0), (2, 2.0), (3, 3.0), (4, 1.0), (5, 2.0), (6, 3.0)]);
        let aa = aa_check(&p, &pre, &[], DEFAULT_AA_LEVEL).unwrap();
        assert_eq!(aa.failed, vec!["y".to_string()]);
        let r = analyze_experiment(&p, &post, &[]).unwrap().with_aa(aa);
        assert!(r.aa_failed());
        assert!(r.metrics[0].excluded);
        assert!(r.to_table().contains("FAILED"));
    }
}
