use std::fs::{self, File};
use std::io::BufReader;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use chrono::Utc;
use serde::Serialize;

use egoclusters::analysis::{
    aa_check, analyze_experiment, leftover_diagnostics, representativity_check,
};
use egoclusters::assignment::{self, AssignmentPlan, EgoMode};
use egoclusters::clustering::{
    diagnostics_report, naive_cluster, read_clusters_json, reattach_alters, stratified_cluster,
    write_clusters_json, write_clusters_tsv, write_leftover,
};
use egoclusters::graph::{load_graph, make_degree_bins};
use egoclusters::simulation::{
    self, attenuation_study, generate_graph, naive_vs_stratified_study, simulate_baseline,
    GraphSpec, NoiseKind, OutcomeModel, ResponseShape, StudyConfig, WeightSpec,
};
use egoclusters::{hashing, ClusteringResult, Graph, OutcomeTable};

use crate::sidecar::{read_sidecar, Provenance};
use crate::{
    Algo, AnalyzeArgs, AssignArgs, ClusterArgs, DiagnoseArgs, GeneratorKind, GraphArgs, IngestArgs,
    Noise, OutcomeArgs, Shape, Status, StudyArgs,
};

const PRE_PERIOD_SALT: u64 = 0x5052_4550;

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

fn params<T: Serialize>(args: &T) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(args)?)
}

fn out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn read_graph(path: &Path) -> Result<Graph> {
    load_graph(path).with_context(|| format!("loading graph {}", path.display()))
}

fn read_clusters(path: &Path) -> Result<ClusteringResult> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_clusters_json(BufReader::new(f)).with_context(|| format!("parsing {}", path.display()))
}

fn read_plan(path: &Path) -> Result<AssignmentPlan> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_reader(BufReader::new(f))
        .with_context(|| format!("parsing {}", path.display()))
}

fn read_table(path: &Path) -> Result<OutcomeTable> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    OutcomeTable::read_tsv(BufReader::new(f)).with_context(|| format!("parsing {}", path.display()))
}

pub fn ingest(a: &IngestArgs) -> Result<Status> {
    let g = read_graph(&a.graph)?;
    out_dir(&a.out_dir)?;
    let prov = Provenance::new("ingest", params(a)?, &[&a.graph])?;
    let mut edges = Vec::new();
    g.write_edge_list(&mut edges)?;
    prov.write(&a.out_dir.join("graph.tsv"), &edges)?;
    let summary = g.summary();
    prov.write(
        &a.out_dir.join("graph_summary.json"),
        &json_bytes(&summary)?,
    )?;
    if let (Some(bins), Some(seed)) = (a.bins, a.seed) {
        let b = make_degree_bins(&g, bins, seed)?;
        prov.write(&a.out_dir.join("degree_bins.json"), &json_bytes(&b)?)?;
    }
    println!(
        "ingested {} nodes, {} edges (mean degree {:.3}, max {})",
        summary.nodes, summary.edges, summary.degree_mean, summary.degree_max
    );
    Ok(Status::Done)
}

pub fn cluster(a: &ClusterArgs) -> Result<Status> {
    let g = read_graph(&a.graph)?;
    let result = match a.algo {
        Algo::Naive => {
            ensure!(
                !a.reattach,
                "--reattach applies to the stratified algorithm only"
            );
            naive_cluster(&g, a.stop_loss, a.window, a.seed)?
        }
        Algo::Stratified => {
            let partial = stratified_cluster(&g, a.target_loss, a.bins, a.seed)?;
            if a.reattach {
                reattach_alters(&g, &partial)?
            } else {
                partial
            }
        }
    };
    out_dir(&a.out_dir)?;
    let prov = Provenance::new("cluster", params(a)?, &[&a.graph])?;
    let mut tsv = Vec::new();
    write_clusters_tsv(&result, &mut tsv)?;
    prov.write(&a.out_dir.join("clusters.tsv"), &tsv)?;
    let mut json = Vec::new();
    write_clusters_json(&result, &mut json)?;
    json.push(b'\n');
    prov.write(&a.out_dir.join("clusters.json"), &json)?;
    let mut left = Vec::new();
    write_leftover(&result, &mut left)?;
    prov.write(&a.out_dir.join("leftover.txt"), &left)?;
    println!(
        "{}: {} egos, {} claimed, {} leftover, mean loss {:.4}, max loss {:.4}",
        result.params.algorithm.name(),
        result.ego_count(),
        result.claimed_count(),
        result.leftover.len(),
        result.mean_loss_rate(),
        result.max_loss_rate()
    );
    Ok(Status::Done)
}

fn warn_if_stale(clusters: &Path, max_age_days: i64) -> Result<()> {
    match read_sidecar(clusters)? {
        Some(meta) => {
            let age = Utc::now().signed_duration_since(meta.created_at);
            if age.num_days() > max_age_days {
                eprintln!(
                    "warning: clustering {} is {} days old (limit {max_age_days}); \
                     rebuild it instead of reusing a stale clustering",
                    clusters.display(),
                    age.num_days()
                );
            }
        }
        None => eprintln!(
            "warning: no sidecar for {}; cannot tell how old the clustering is",
            clusters.display()
        ),
    }
    Ok(())
}

pub fn assign(a: &AssignArgs) -> Result<Status> {
    let mode: EgoMode = a.mode.parse()?;
    let result = read_clusters(&a.clusters)?;
    warn_if_stale(&a.clusters, a.max_age_days)?;
    let plan = assignment::assign(&result, mode, a.p, a.seed)?;
    out_dir(&a.out_dir)?;
    let mut inputs: Vec<&Path> = vec![&a.clusters];
    if let Some(gp) = &a.graph {
        inputs.push(gp);
    }
    let prov = Provenance::new("assign", params(a)?, &inputs)?;
    let mut tsv = Vec::new();
    plan.write_tsv(&mut tsv)?;
    prov.write(&a.out_dir.join("assignment.tsv"), &tsv)?;
    prov.write(&a.out_dir.join("assignment.json"), &json_bytes(&plan)?)?;
    if let Some(gp) = &a.graph {
        let g = read_graph(gp)?;
        plan.check_against(&result)?;
        let ex = assignment::exposure_summary(&plan, &g, &result)?;
        prov.write(&a.out_dir.join("exposure.json"), &json_bytes(&ex)?)?;
    }
    let (t, c) = egoclusters::analysis::ego_arms(&plan);
    println!(
        "{}: {} members, {} treated; egos with treated alters {}, with control alters {}",
        mode.name(),
        plan.assignments.len(),
        plan.treated_count(),
        t.len(),
        c.len()
    );
    Ok(Status::Done)
}

pub fn analyze(a: &AnalyzeArgs) -> Result<Status> {
    let plan = read_plan(&a.assignment)?;
    let outcomes = read_table(&a.outcomes)?;
    let mut report = analyze_experiment(&plan, &outcomes, &a.metrics)?;
    let mut inputs: Vec<&Path> = vec![&a.assignment, &a.outcomes];
    let pre = match &a.pre {
        Some(p) => {
            inputs.push(p);
            Some(read_table(p)?)
        }
        None => None,
    };
    if let Some(pre) = &pre {
        let aa_metrics: Vec<String> = report
            .metrics
            .iter()
            .map(|m| m.test.metric.clone())
            .collect();
        let shared: Vec<String> = aa_metrics
            .into_iter()
            .filter(|m| pre.metric_index(m).is_ok())
            .collect();
        ensure!(
            !shared.is_empty(),
            "pre-period table shares no metric with the outcomes"
        );
        report = report.with_aa(aa_check(&plan, pre, &shared, a.aa_level)?);
    }
    if let (Some(gp), Some(cp)) = (&a.graph, &a.clusters) {
        inputs.push(gp);
        inputs.push(cp);
        let g = read_graph(gp)?;
        let result = read_clusters(cp)?;
        plan.check_against(&result)?;
        report = report.with_representativity(representativity_check(&result, &g, pre.as_ref())?);
    }
    out_dir(&a.out_dir)?;
    let prov = Provenance::new("analyze", params(a)?, &inputs)?;
    prov.write(&a.out_dir.join("report.json"), &json_bytes(&report)?)?;
    let table = report.to_table();
    prov.write(&a.out_dir.join("report.txt"), table.as_bytes())?;
    print!("{table}");
    if report.aa_failed() {
        let failed = report
            .aa
            .as_ref()
            .map(|aa| aa.failed.join(", "))
            .unwrap_or_default();
        eprintln!("A/A check failed for: {failed}");
        return Ok(Status::AaFailed);
    }
    Ok(Status::Done)
}

fn parse_weights(s: &str) -> Result<WeightSpec> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |x: &str| -> Result<f64> {
        x.parse()
            .with_context(|| format!("bad number {x:?} in --weights"))
    };
    Ok(match parts.as_slice() {
        ["unit"] => WeightSpec::Unit,
        ["uniform", lo, hi] => WeightSpec::Uniform {
            low: num(lo)?,
            high: num(hi)?,
        },
        ["exponential", m] => WeightSpec::Exponential { mean: num(m)? },
        _ => bail!("--weights must be unit, uniform:LOW:HIGH or exponential:MEAN, got {s:?}"),
    })
}

pub fn simulate_graph(a: &GraphArgs) -> Result<Status> {
    let spec = match a.generator {
        GeneratorKind::ErdosRenyi => GraphSpec::erdos_renyi(a.nodes, a.mean_degree, a.seed),
        GeneratorKind::PowerLaw => GraphSpec::power_law(a.nodes, a.exponent, a.mean_degree, a.seed),
        GeneratorKind::DisjointStars => GraphSpec::disjoint_stars(a.stars, a.leaves, a.seed),
    }
    .with_weights(parse_weights(&a.weights)?);
    let g: Graph = generate_graph(&spec)?;
    out_dir(&a.out_dir)?;
    let prov = Provenance::new("simulate graph", serde_json::to_value(&spec)?, &[])?;
    let mut edges = Vec::new();
    g.write_edge_list(&mut edges)?;
    prov.write(&a.out_dir.join("graph.tsv"), &edges)?;
    let s = g.summary();
    println!(
        "generated {} nodes, {} edges (mean degree {:.3}, max {})",
        s.nodes, s.edges, s.degree_mean, s.degree_max
    );
    Ok(Status::Done)
}

fn outcome_model(a: &OutcomeArgs) -> OutcomeModel {
    let shape = match a.shape {
        Shape::Linear => ResponseShape::Linear,
        Shape::Concave => ResponseShape::Concave,
        Shape::Convex => ResponseShape::Convex,
        Shape::Logistic => ResponseShape::Logistic,
    };
    let noise = match a.noise {
        Noise::Gaussian => NoiseKind::Gaussian,
        Noise::Lognormal => NoiseKind::LogNormal,
    };
    OutcomeModel::linear(a.baseline, a.direct_effect, a.network_effect, a.noise_sd)
        .with_shape(shape)
        .with_noise(noise)
}

pub fn simulate_outcomes(a: &OutcomeArgs) -> Result<Status> {
    let g = read_graph(&a.graph)?;
    let plan = read_plan(&a.assignment)?;
    let model = outcome_model(a);
    let y = simulation::simulate_outcomes(&g, &plan, &model, a.seed)?;
    out_dir(&a.out_dir)?;
    let prov = Provenance::new("simulate outcomes", params(a)?, &[&a.graph, &a.assignment])?;
    let mut buf = Vec::new();
    y.write_tsv(&mut buf)?;
    prov.write(&a.out_dir.join("outcomes.tsv"), &buf)?;
    if a.pre {
        let seed = hashing::derive_seed(a.seed, PRE_PERIOD_SALT, 0);
        let pre = simulate_baseline(&g, &model, seed)?;
        let mut buf = Vec::new();
        pre.write_tsv(&mut buf)?;
        prov.write(&a.out_dir.join("pre.tsv"), &buf)?;
    }
    println!("simulated outcomes for {} members", y.members().count());
    Ok(Status::Done)
}

fn read_study(path: &Path) -> Result<StudyConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    } else {
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

pub fn simulate_study(a: &StudyArgs) -> Result<Status> {
    let cfg = read_study(&a.config)?;
    out_dir(&a.out_dir)?;
    let prov = Provenance::new("simulate study", serde_json::to_value(&cfg)?, &[&a.config])?;
    match &cfg {
        StudyConfig::Attenuation(c) => {
            let r = attenuation_study(c)?;
            prov.write(&a.out_dir.join("study.json"), &json_bytes(&r)?)?;
            println!(
                "attenuation: {} replications, mean loss {:.4}, estimate {:.4} ± {:.4} (network effect {})",
                r.replications.len(),
                r.mean_alpha,
                r.mean_estimate,
                r.estimate_se,
                c.model.network_effect
            );
        }
        StudyConfig::NaiveVsStratified(c) => {
            let r = naive_vs_stratified_study(c)?;
            prov.write(&a.out_dir.join("study.json"), &json_bytes(&r)?)?;
            prov.write(
                &a.out_dir.join("histograms.tsv"),
                r.histogram_tsv().as_bytes(),
            )?;
            println!(
                "naive vs stratified: {} seeds, stratified egos above target: {}",
                r.per_seed.len(),
                r.stratified.count_above(c.target_loss)
            );
        }
    }
    Ok(Status::Done)
}

pub fn diagnose(a: &DiagnoseArgs) -> Result<Status> {
    let result = read_clusters(&a.clusters)?;
    ensure!(a.window >= 1, "--window must be at least 1");
    let rep = diagnostics_report(&result, a.window);
    out_dir(&a.out_dir)?;
    let mut inputs: Vec<&Path> = vec![&a.clusters];
    inputs.extend(a.graph.as_deref());
    inputs.extend(a.metrics_table.as_deref());
    let prov = Provenance::new("diagnose", params(a)?, &inputs)?;
    let mut tsv = Vec::new();
    rep.write_tsv(&mut tsv)?;
    prov.write(&a.out_dir.join("diagnostics.tsv"), &tsv)?;
    prov.write(
        &a.out_dir.join("diagnostics_summary.json"),
        &json_bytes(&rep.summary)?,
    )?;
    if let Some(gp) = &a.graph {
        let g = read_graph(gp)?;
        result.validate(&g)?;
        let metrics = a.metrics_table.as_deref().map(read_table).transpose()?;
        if !result.clusters.is_empty() {
            let r = representativity_check(&result, &g, metrics.as_ref())?;
            prov.write(&a.out_dir.join("representativity.json"), &json_bytes(&r)?)?;
        }
        let l = leftover_diagnostics(&result, &g, metrics.as_ref())?;
        prov.write(&a.out_dir.join("leftover.json"), &json_bytes(&l)?)?;
        prov.write(&a.out_dir.join("leftover.txt"), l.to_table().as_bytes())?;
    }
    let s = &rep.summary;
    println!(
        "{} egos from {} draws: mean loss {:.4}, max loss {:.4}, collision rate {:.4}",
        s.egos, s.draws, s.mean_loss_rate, s.max_loss_rate, s.collision_rate
    );
    Ok(Status::Done)
}
