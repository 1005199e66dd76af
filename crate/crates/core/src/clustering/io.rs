//! Cluster and leftover files.

use std::io::{self, BufRead, Read, Write};

use super::ClusteringResult;
use crate::graph::MemberId;
use crate::scalar::Real;

/// One line per ego: `ego_id<TAB>loss_rate<TAB>weighted_loss_rate<TAB>a1,a2,...`.
pub fn write_clusters_tsv<R: Real, W: Write>(
    result: &ClusteringResult<R>,
    mut out: W,
) -> io::Result<()> {
    for c in &result.clusters {
        let alters: Vec<String> = c.cluster_alters.iter().map(|a| a.to_string()).collect();
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            c.ego,
            c.loss_rate,
            c.weighted_loss_rate,
            alters.join(",")
        )?;
    }
    Ok(())
}

pub fn write_clusters_json<R: Real, W: Write>(
    result: &ClusteringResult<R>,
    out: W,
) -> io::Result<()> {
    serde_json::to_writer_pretty(out, result).map_err(io::Error::other)
}

pub fn read_clusters_json<R: Real, Rd: Read>(input: Rd) -> io::Result<ClusteringResult<R>> {
    serde_json::from_reader(input).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

/// Leftover ids, one per line.
pub fn write_leftover<R: Real, W: Write>(
    result: &ClusteringResult<R>,
    mut out: W,
) -> io::Result<()> {
    for m in &result.leftover {
        writeln!(out, "{m}")?;
    }
    Ok(())
}

/// Parses a clusters TSV back into `(ego, loss, weighted loss, alters)`.
pub fn read_clusters_tsv<R: Real, B: BufRead>(
    input: B,
) -> io::Result<Vec<(MemberId, R, R, Vec<MemberId>)>> {
    let bad = |line: usize, what: &str| {
        io::Error::new(io::ErrorKind::InvalidData, format!("line {line}: {what}"))
    };
    let mut out = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 4 {
            return Err(bad(k + 1, "expected 4 tab-separated fields"));
        }
        let ego = f[0].parse().map_err(|_| bad(k + 1, "bad ego id"))?;
        let l = f[1].parse().map_err(|_| bad(k + 1, "bad loss rate"))?;
        let w = f[2]
            .parse()
            .map_err(|_| bad(k + 1, "bad weighted loss rate"))?;
        let alters = f[3]
            .split(',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<u64>().map(MemberId))
            .collect::<Result<_, _>>()
            .map_err(|_| bad(k + 1, "bad alter id"))?;
        out.push((MemberId(ego), l, w, alters));
    }
    Ok(out)
}
