//! Per-draw diagnostics tables: loss rate, collision rate and ego degree as
//! the clustering progresses.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::{ClusteringResult, DrawOutcome};
use crate::graph::MemberId;
use crate::scalar::Real;

const UNDER: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow<R> {
    pub iteration: usize,
    pub member: MemberId,
    pub outcome: DrawOutcome,
    pub ego_loss_rate: Option<R>,
    pub ego_degree: usize,
    pub cumulative_collision_rate: f64,
    /// Over the last `window` accepted egos, `None` before the first one.
    pub rolling_mean_loss: Option<R>,
    pub rolling_mean_degree: Option<f64>,
    pub rolling_fraction_under_10pct: Option<f64>,
}

/// Consecutive block of `window` accepted egos.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowStat<R> {
    pub first_iteration: usize,
    pub last_iteration: usize,
    pub egos: usize,
    pub mean_loss_rate: R,
    pub mean_ego_degree: f64,
    pub fraction_under_10pct: f64,
    pub cumulative_collision_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSummary<R> {
    pub egos: usize,
    pub mean_loss_rate: R,
    pub mean_weighted_loss_rate: R,
    pub max_loss_rate: R,
    /// Share of egos with loss rate strictly below 10%.
    pub fraction_under_10pct: f64,
    pub draws: usize,
    pub collisions: usize,
    pub rejections: usize,
    pub collision_rate: f64,
    pub windows: Vec<WindowStat<R>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport<R> {
    pub window: usize,
    pub summary: DiagnosticsSummary<R>,
    pub rows: Vec<DiagnosticsRow<R>>,
}

/// Builds the per-draw table and the rollups. The summary's loss figures
/// come from the final clusters; rows carry the loss at acceptance time.
pub fn diagnostics_report<R: Real>(
    result: &ClusteringResult<R>,
    window: usize,
) -> DiagnosticsReport<R> {
    let window = window.max(1);
    let records = &result.diagnostics.records;
    let mut rows = Vec::with_capacity(records.len());
    let mut collisions = 0usize;
    let mut recent: Vec<(R, usize)> = Vec::new();
    let mut windows = Vec::new();
    let mut block: Vec<(usize, R, usize)> = Vec::new();

    for (k, rec) in records.iter().enumerate() {
        if rec.outcome == DrawOutcome::Collision {
            collisions += 1;
        }
        let cum = collisions as f64 / (k + 1) as f64;
        if let (DrawOutcome::Accepted, Some(l)) = (rec.outcome, rec.ego_loss_rate) {
            recent.push((l, rec.ego_original_degree));
            block.push((rec.iteration, l, rec.ego_original_degree));
            if block.len() == window {
                windows.push(window_stat(&block, cum));
                block.clear();
            }
        }
        let tail = &recent[recent.len().saturating_sub(window)..];
        let (rl, rd, rf) = if tail.is_empty() {
            (None, None, None)
        } else {
            let n = tail.len();
            let l = tail.iter().map(|t| t.0).sum::<R>() / R::from_count(n);
            let d = tail.iter().map(|t| t.1 as f64).sum::<f64>() / n as f64;
            let f = tail.iter().filter(|t| t.0.as_f64() < UNDER).count() as f64 / n as f64;
            (Some(l), Some(d), Some(f))
        };
        rows.push(DiagnosticsRow {
            iteration: rec.iteration,
            member: rec.member,
            outcome: rec.outcome,
            ego_loss_rate: rec.ego_loss_rate,
            ego_degree: rec.ego_original_degree,
            cumulative_collision_rate: cum,
            rolling_mean_loss: rl,
            rolling_mean_degree: rd,
            rolling_fraction_under_10pct: rf,
        });
    }
    if !block.is_empty() {
        let cum = collisions as f64 / records.len().max(1) as f64;
        windows.push(window_stat(&block, cum));
    }

    let egos = result.clusters.len();
    let (mean_w, frac) = if egos == 0 {
        (R::zero(), 0.0)
    } else {
        (
            result
                .clusters
                .iter()
                .map(|c| c.weighted_loss_rate)
                .sum::<R>()
                / R::from_count(egos),
            result
                .clusters
                .iter()
                .filter(|c| c.loss_rate.as_f64() < UNDER)
                .count() as f64
                / egos as f64,
        )
    };
    let summary = DiagnosticsSummary {
        egos,
        mean_loss_rate: result.mean_loss_rate(),
        mean_weighted_loss_rate: mean_w,
        max_loss_rate: result.max_loss_rate(),
        fraction_under_10pct: frac,
        draws: records.len(),
        collisions,
        rejections: result.diagnostics.count(DrawOutcome::Rejected),
        collision_rate: result.diagnostics.collision_rate(),
        windows,
    };
    DiagnosticsReport {
        window,
        summary,
        rows,
    }
}

fn window_stat<R: Real>(block: &[(usize, R, usize)], cum: f64) -> WindowStat<R> {
    let n = block.len();
    WindowStat {
        first_iteration: block[0].0,
        last_iteration: block[n - 1].0,
        egos: n,
        mean_loss_rate: block.iter().map(|b| b.1).sum::<R>() / R::from_count(n),
        mean_ego_degree: block.iter().map(|b| b.2 as f64).sum::<f64>() / n as f64,
        fraction_under_10pct: block.iter().filter(|b| b.1.as_f64() < UNDER).count() as f64
            / n as f64,
        cumulative_collision_rate: cum,
    }
}

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

impl<R: Real> DiagnosticsReport<R> {
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "iteration\tmember\toutcome\tego_loss_rate\tego_degree\tcumulative_collision_rate\trolling_mean_loss\trolling_mean_degree\trolling_fraction_under_10pct"
        )?;
        for r in &self.rows {
            let outcome = match r.outcome {
                DrawOutcome::Accepted => "accepted",
                DrawOutcome::Collision => "collision",
                DrawOutcome::Rejected => "rejected",
            };
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.iteration,
                r.member,
                outcome,
                opt(&r.ego_loss_rate),
                r.ego_degree,
                r.cumulative_collision_rate,
                opt(&r.rolling_mean_loss),
                opt(&r.rolling_mean_degree),
                opt(&r.rolling_fraction_under_10pct),
            )?;
        }
        Ok(())
    }

    /// Accepted rows only, in draw order.
    pub fn accepted(&self) -> impl Iterator<Item = &DiagnosticsRow<R>> {
        self.rows
            .iter()
            .filter(|r| r.outcome == DrawOutcome::Accepted)
    }
}
