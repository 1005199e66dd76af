//! Per-member metric table.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::graph::MemberId;
use crate::scalar::Real;

/// One row per member, same metric columns for every row.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OutcomeTable<R> {
    metrics: Vec<String>,
    rows: BTreeMap<MemberId, Vec<R>>,
}

impl<R: Real> OutcomeTable<R> {
    pub fn new(metrics: Vec<String>) -> Self {
        Self {
            metrics,
            rows: BTreeMap::new(),
        }
    }

    pub fn metrics(&self) -> &[String] {
        &self.metrics
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn insert(&mut self, m: MemberId, values: Vec<R>) -> Result<(), AnalysisError> {
        if values.len() != self.metrics.len() {
            return Err(AnalysisError::RaggedRow {
                member: m,
                expected: self.metrics.len(),
                got: values.len(),
            });
        }
        if self.rows.insert(m, values).is_some() {
            return Err(AnalysisError::DuplicateMember(m));
        }
        Ok(())
    }

    pub fn metric_index(&self, name: &str) -> Result<usize, AnalysisError> {
        self.metrics
            .iter()
            .position(|m| m == name)
            .ok_or_else(|| AnalysisError::UnknownMetric(name.to_string()))
    }

    pub fn row(&self, m: MemberId) -> Option<&[R]> {
        self.rows.get(&m).map(|v| v.as_slice())
    }

    pub fn value(&self, m: MemberId, metric: usize) -> Result<R, AnalysisError> {
        self.rows
            .get(&m)
            .map(|v| v[metric])
            .ok_or(AnalysisError::MissingOutcome(m))
    }

    pub fn members(&self) -> impl Iterator<Item = MemberId> + '_ {
        self.rows.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (MemberId, &[R])> + '_ {
        self.rows.iter().map(|(&m, v)| (m, v.as_slice()))
    }

    /// Values of `metric` for `members`, in order.
    pub fn column_for(
        &self,
        metric: usize,
        members: impl IntoIterator<Item = MemberId>,
    ) -> Result<Vec<R>, AnalysisError> {
        members.into_iter().map(|m| self.value(m, metric)).collect()
    }

    /// Header `member_id<TAB>metric...`, one row per member in id order.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "member_id")?;
        for m in &self.metrics {
            write!(out, "\t{m}")?;
        }
        writeln!(out)?;
        for (m, vals) in &self.rows {
            write!(out, "{m}")?;
            for v in vals {
                write!(out, "\t{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn read_tsv<B: BufRead>(input: B) -> Result<Self, AnalysisError> {
        let mut lines = input.lines().enumerate();
        let header = loop {
            match lines.next() {
                Some((_, l)) => {
                    let l = l?;
                    if !l.trim().is_empty() {
                        break l;
                    }
                }
                None => {
                    return Err(AnalysisError::Parse {
                        line: 1,
                        message: "missing header row".into(),
                    })
                }
            }
        };
        let cols: Vec<&str> = header.split('\t').map(str::trim).collect();
        if cols.len() < 2 {
            return Err(AnalysisError::Parse {
                line: 1,
                message: "header needs member_id and at least one metric".into(),
            });
        }
        let mut table = Self::new(cols[1..].iter().map(|s| s.to_string()).collect());
        for (k, l) in lines {
            let l = l?;
            if l.trim().is_empty() {
                continue;
            }
            let line = k + 1;
            let fields: Vec<&str> = l.split('\t').map(str::trim).collect();
            if fields.len() != cols.len() {
                return Err(AnalysisError::Parse {
                    line,
                    message: format!("expected {} fields, got {}", cols.len(), fields.len()),
                });
            }
            let m = fields[0].parse::<u64>().map_err(|_| AnalysisError::Parse {
                line,
                message: format!("bad member id '{}'", fields[0]),
            })?;
            let vals = fields[1..]
                .iter()
                .map(|f| {
                    f.parse::<R>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| AnalysisError::Parse {
                            line,
                            message: format!("bad metric value '{f}'"),
                        })
                })
                .collect::<Result<Vec<R>, _>>()?;
            table.insert(MemberId(m), vals).map_err(|e| match e {
                AnalysisError::DuplicateMember(m) => AnalysisError::Parse {
                    line,
                    message: format!("duplicate member {m}"),
                },
                other => other,
            })?;
        }
        Ok(table)
    }
}
