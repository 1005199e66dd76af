//! Welch's unequal-variance two-sample t-test.

use serde::{Deserialize, Serialize};

use super::special::student_t_two_sided;
use super::AnalysisError;
use crate::scalar::Real;
use crate::stats::{mean, sample_variance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTestResult<R> {
    pub metric: String,
    pub mean_a: R,
    pub mean_b: R,
    pub var_a: R,
    pub var_b: R,
    pub n_a: usize,
    pub n_b: usize,
    /// `100 (mean_a - mean_b) / mean_b`; `None` when `mean_b` is zero.
    pub delta_pct: Option<R>,
    /// Standard error of `mean_a - mean_b`.
    pub std_err: R,
    pub t_stat: R,
    pub df: R,
    pub p_value: R,
    /// Both samples have zero variance; `t` and `p` follow the
    /// zero-variance convention.
    pub degenerate: bool,
}

impl<R: Real> TTestResult<R> {
    pub fn difference(&self) -> R {
        self.mean_a - self.mean_b
    }

    pub fn with_metric(mut self, metric: impl Into<String>) -> Self {
        self.metric = metric.into();
        self
    }

    pub fn rejects(&self, level: f64) -> bool {
        self.p_value.as_f64() < level
    }
}

/// Two-sided Welch test of `mean(a) = mean(b)`.
///
/// When both samples are constant the test is degenerate: equal means give
/// `t = 0, p = 1`; different means give `t = ±inf, p = 0`. Either way
/// `degenerate` is set and `df = n_a + n_b - 2`.
pub fn welch_t_test<R: Real>(a: &[R], b: &[R]) -> Result<TTestResult<R>, AnalysisError> {
    let (n_a, n_b) = (a.len(), b.len());
    if n_a < 2 || n_b < 2 {
        return Err(AnalysisError::InsufficientSample {
            metric: String::new(),
            n_a,
            n_b,
        });
    }
    let (mean_a, mean_b) = (mean(a), mean(b));
    let (var_a, var_b) = (sample_variance(a), sample_variance(b));
    let (na, nb) = (R::from_count(n_a), R::from_count(n_b));
    let (sa, sb) = (var_a / na, var_b / nb);
    let std_err = (sa + sb).sqrt();
    let diff = mean_a - mean_b;
    let delta_pct = (mean_b != R::zero()).then(|| R::lit(100.0) * diff / mean_b);

    let (t_stat, df, p_value, degenerate) = if sa + sb == R::zero() {
        let df = R::from_count(n_a + n_b - 2);
        if diff == R::zero() {
            (R::zero(), df, R::one(), true)
        } else {
            (diff.signum() * R::infinity(), df, R::zero(), true)
        }
    } else {
        let t = diff / std_err;
        let one = R::one();
        let df = (sa + sb).powi(2) / (sa * sa / (na - one) + sb * sb / (nb - one));
        (t, df, student_t_two_sided(t, df), false)
    };

    Ok(TTestResult {
        metric: String::new(),
        mean_a,
        mean_b,
        var_a,
        var_b,
        n_a,
        n_b,
        delta_pct,
        std_err,
        t_stat,
        df,
        p_value,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_samples() {
        let r = welch_t_test(&[1.0f64, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.t_stat, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert!(!r.degenerate);
    }

    #[test]
    fn shifted_samples() {
        let r = welch_t_test(&[1.0f64, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap();
        assert!((r.t_stat + 1.224_744_871_391_589).abs() < 1e-12);
        assert!((r.df - 4.0).abs() < 1e-12);
        assert!((r.p_value - 0.2879).abs() < 1e-3);
        assert!((r.delta_pct.unwrap() + 100.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_branches() {
        let r = welch_t_test(&[0.0f64, 0.0], &[1.0, 1.0]).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.p_value, 0.0);
        assert_eq!(r.t_stat, f64::NEG_INFINITY);
        let r = welch_t_test(&[2.0f64, 2.0], &[2.0, 2.0, 2.0]).unwrap();
        assert!(r.degenerate);
        assert_eq!((r.t_stat, r.p_value), (0.0, 1.0));
        assert_eq!(r.df, 3.0);
        // only one sample constant: an ordinary test with df = n - 1
        let r = welch_t_test(&[2.0f64, 2.0, 2.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(!r.degenerate);
        assert!((r.df - 3.0).abs() < 1e-12);
    }

    #[test]
    fn insufficient_sample() {
        assert!(matches!(
            welch_t_test(&[1.0f64], &[1.0, 2.0]),
            Err(AnalysisError::InsufficientSample { n_a: 1, n_b: 2, .. })
        ));
    }

    #[test]
    fn zero_control_mean_has_no_delta() {
        let r = welch_t_test(&[1.0f64, 2.0], &[-1.0, 1.0]).unwrap();
        assert!(r.delta_pct.is_none());
    }

    #[test]
    fn single_precision() {
        let r = welch_t_test(&[1.0f32, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap();
        assert!((r.p_value - 0.2879).abs() < 1e-3);
    }

    fn sample() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-100.0f64..100.0, 2..30)
    }

    proptest! {
        #[test]
        fn swap_negates_t(a in sample(), b in sample()) {
            let x = welch_t_test(&a, &b).unwrap();
            let y = welch_t_test(&b, &a).unwrap();
            prop_assert!((x.t_stat + y.t_stat).abs() <= 1e-9 * x.t_stat.abs().max(1.0));
            prop_assert!((x.p_value - y.p_value).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&x.p_value));
        }

        #[test]
        fn scale_invariant(a in sample(), b in sample(), c in 0.01f64..100.0) {
            let x = welch_t_test(&a, &b).unwrap();
            let sa: Vec<f64> = a.iter().map(|v| v * c).collect();
            let sb: Vec<f64> = b.iter().map(|v| v * c).collect();
            let y = welch_t_test(&sa, &sb).unwrap();
            prop_assume!(!x.degenerate);
            prop_assert!((x.t_stat - y.t_stat).abs() <= 1e-8 * x.t_stat.abs().max(1.0));
            prop_assert!((x.df - y.df).abs() <= 1e-8 * x.df);
            prop_assert!((x.p_value - y.p_value).abs() < 1e-10);
        }
    }
}
