mod common;

use egoclusters::analysis::special::student_t_two_sided;
use egoclusters::analysis::welch_t_test;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

fn statrs_two_sided(t: f64, df: f64) -> f64 {
    let d = StudentsT::new(0.0, 1.0, df).unwrap();
    2.0 * d.cdf(-t.abs())
}

#[test]
fn quadrature_agrees_with_statrs() {
    for &df in &[1.0, 1.5, 2.0, 3.7, 10.0, 57.3, 250.0, 1000.0] {
        for &t in &[0.0, 0.1, 0.8, 1.96, 3.0, 7.5] {
            let q = common::two_sided_p(t, df);
            let s = statrs_two_sided(t, df);
            assert!((q - s).abs() < 1e-10, "t={t} df={df}: {q} vs {s}");
        }
    }
}

#[test]
fn tail_matches_quadrature_over_df_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..400 {
        let df = 10f64.powf(rng.random_range(0.0..3.0));
        let t = rng.random_range(-12.0..12.0);
        let d = (student_t_two_sided(t, df) - common::two_sided_p(t, df)).abs();
        worst = worst.max(d);
    }
    assert!(worst < 1e-8, "max |dp| = {worst:e}");
}

#[test]
fn welch_matches_reference_on_random_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..50 {
        let na = rng.random_range(2..12);
        let nb = rng.random_range(2..12);
        let sa = rng.random_range(0.2..5.0);
        let shift = rng.random_range(-3.0..3.0);
        let a: Vec<f64> = (0..na).map(|_| rng.random_range(-1.0..1.0) * sa).collect();
        let b: Vec<f64> = (0..nb)
            .map(|_| rng.random_range(-1.0..1.0) + shift)
            .collect();
        let r = welch_t_test(&a, &b).unwrap();
        let (t, df) = common::welch_reference(&a, &b);
        assert!(
            (r.t_stat - t).abs() < 1e-10 * t.abs().max(1.0),
            "case {case}"
        );
        assert!((r.df - df).abs() < 1e-9 * df, "case {case}");
        let p = common::two_sided_p(t, df);
        assert!(
            (r.p_value - p).abs() < 1e-8,
            "case {case}: {} vs {p}",
            r.p_value
        );
    }
}

#[test]
fn fixed_example() {
    let r = welch_t_test::<f64>(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap();
    assert!((r.t_stat + 1.2247).abs() < 1e-3);
    assert!((r.p_value - 0.2879).abs() < 1e-3);
    assert!((r.p_value - common::two_sided_p(r.t_stat, r.df)).abs() < 1e-12);
}
