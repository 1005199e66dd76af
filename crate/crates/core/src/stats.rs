//! Descriptive statistics and rank/uniformity helpers.

use crate::scalar::Real;

pub fn mean<R: Real>(xs: &[R]) -> R {
    if xs.is_empty() {
        return R::nan();
    }
    xs.iter().copied().sum::<R>() / R::from_count(xs.len())
}

/// Unbiased (n - 1) sample variance, two-pass.
pub fn sample_variance<R: Real>(xs: &[R]) -> R {
    let n = xs.len();
    if n < 2 {
        return R::nan();
    }
    let m = mean(xs);
    xs.iter().map(|&x| (x - m) * (x - m)).sum::<R>() / R::from_count(n - 1)
}

pub fn sample_sd<R: Real>(xs: &[R]) -> R {
    sample_variance(xs).sqrt()
}

/// Population (n) standard deviation.
pub fn population_sd<R: Real>(xs: &[R]) -> R {
    if xs.is_empty() {
        return R::nan();
    }
    let m = mean(xs);
    (xs.iter().map(|&x| (x - m) * (x - m)).sum::<R>() / R::from_count(xs.len())).sqrt()
}

/// Ranks starting at 1, ties receive their average rank.
pub fn average_ranks<R: Real>(xs: &[R]) -> Vec<R> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("NaN in rank input"));
    let mut ranks = vec![R::zero(); xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        // positions i..=j share rank (i + j)/2 + 1
        let r = R::from_count(i + j + 2) / R::lit(2.0);
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn pearson<R: Real>(xs: &[R], ys: &[R]) -> R {
    assert_eq!(xs.len(), ys.len());
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = R::zero();
    let mut sxx = R::zero();
    let mut syy = R::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        sxy = sxy + (x - mx) * (y - my);
        sxx = sxx + (x - mx) * (x - mx);
        syy = syy + (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Spearman rank correlation (Pearson on average ranks).
pub fn spearman<R: Real>(xs: &[R], ys: &[R]) -> R {
    pearson(&average_ranks(xs), &average_ranks(ys))
}

/// Kolmogorov–Smirnov statistic of a sample against Uniform(0, 1).
pub fn ks_uniform_statistic<R: Real>(sample: &[R]) -> R {
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("NaN in KS input"));
    let n = R::from_count(xs.len());
    let mut d = R::zero();
    for (i, &x) in xs.iter().enumerate() {
        let lo = R::from_count(i) / n;
        let hi = R::from_count(i + 1) / n;
        d = d.max(hi - x).max(x - lo);
    }
    d
}

/// Critical value of the one-sample KS statistic (Stephens' approximation).
/// Supported levels: 0.10, 0.05, 0.025, 0.01, 0.001.
pub fn ks_critical_value(n: usize, level: f64) -> f64 {
    let c = match level {
        l if (l - 0.10).abs() < 1e-12 => 1.224,
        l if (l - 0.05).abs() < 1e-12 => 1.358,
        l if (l - 0.025).abs() < 1e-12 => 1.480,
        l if (l - 0.01).abs() < 1e-12 => 1.628,
        l if (l - 0.001).abs() < 1e-12 => 1.949,
        _ => panic!("unsupported KS level {level}"),
    };
    let sn = (n as f64).sqrt();
    c / (sn + 0.12 + 0.11 / sn)
}

/// Mean of the trailing `window` values at each position (shorter at the start).
pub fn rolling_mean<R: Real>(xs: &[R], window: usize) -> Vec<R> {
    assert!(window >= 1);
    let mut out = Vec::with_capacity(xs.len());
    let mut acc = R::zero();
    for i in 0..xs.len() {
        acc = acc + xs[i];
        if i >= window {
            acc = acc - xs[i - window];
        }
        out.push(acc / R::from_count((i + 1).min(window)));
    }
    out
}
