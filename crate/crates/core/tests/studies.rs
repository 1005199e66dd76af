use egoclusters::assignment::EgoMode;
use egoclusters::simulation::{
    attenuation_study, naive_vs_stratified_study, AttenuationConfig, GraphSpec,
    NaiveVsStratifiedConfig, OutcomeModel, StudyConfig,
};

fn comparison() -> NaiveVsStratifiedConfig {
    NaiveVsStratifiedConfig {
        graph: GraphSpec::power_law(10_000, 2.5, 10.0, 3),
        seeds: vec![1, 2, 3, 4, 5],
        target_loss: 0.2,
        bin_count: 20,
        naive_stop_loss: 0.5,
        window: 20,
        histogram_bins: 20,
    }
}

#[test]
fn stratified_histogram_has_no_mass_above_target() {
    let r = naive_vs_stratified_study(&comparison()).unwrap();
    assert_eq!(r.stratified.count_above(0.2), 0);
    assert_eq!(r.reattached.count_above(0.2), 0);
    assert!(r
        .per_seed
        .iter()
        .all(|s| s.stratified_max <= 0.2 && s.reattached_max <= 0.2));
    assert!(r.late_naive.count_above(0.2) > 0);
    let tsv = r.histogram_tsv();
    assert_eq!(tsv.lines().count(), 21);
}

#[test]
fn late_naive_is_worse_than_early_naive() {
    let r = naive_vs_stratified_study(&comparison()).unwrap();
    for s in &r.per_seed {
        assert!(s.late_naive_mean > s.early_naive_mean, "{s:?}");
    }
}

#[test]
fn stratified_beats_early_naive_on_power_law() {
    let r = naive_vs_stratified_study(&comparison()).unwrap();
    for s in &r.per_seed {
        assert!(s.stratified_mean <= s.early_naive_mean, "{s:?}");
        assert!(s.reattached_mean <= s.stratified_mean, "{s:?}");
    }
}

#[test]
fn study_configs_parse_from_json() {
    let text = r#"{
        "study": "attenuation",
        "graph": {"generator": "disjoint_stars", "stars": 100, "leaves": 4, "seed": 1},
        "model": {"baseline": 1.0, "direct_effect": 0.0, "network_effect": 1.5, "noise_sd": 1.0},
        "target_loss": 0.0,
        "replications": 30,
        "seed": 9
    }"#;
    let cfg: StudyConfig = serde_json::from_str(text).unwrap();
    let StudyConfig::Attenuation(a) = cfg else {
        panic!("wrong study kind")
    };
    assert_eq!(a.bin_count, 20);
    assert_eq!(a.mode, EgoMode::AllTreated);
    let r = attenuation_study(&a).unwrap();
    assert!((r.mean_estimate - 1.5).abs() < 3.0 * r.estimate_se);
}

#[test]
fn linear_attenuation_tracks_realized_loss() {
    let cfg = AttenuationConfig {
        graph: GraphSpec::power_law(3_000, 2.5, 8.0, 4),
        model: OutcomeModel::linear(0.0, 0.0, 3.0, 0.5),
        target_loss: 0.3,
        bin_count: 20,
        p: 0.5,
        replications: 60,
        seed: 4,
        mode: EgoMode::AllTreated,
        reattach: false,
    };
    let r = attenuation_study(&cfg).unwrap();
    assert!(r.mean_alpha > 0.1);
    let bias = r.attenuation_bias.unwrap();
    assert!(bias.abs() < 3.0 * r.attenuation_bias_se.unwrap(), "{bias}");
    assert!(r.mean_estimate < 3.0);
}
