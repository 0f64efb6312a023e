//! Small statistical helpers shared by the estimators and the test suites.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::Vec3;

/// Isotropic Gaussian vector with per-component standard deviation `sd`.
pub fn normal_vec3<R: Rng + ?Sized>(rng: &mut R, sd: f64) -> Vec3 {
    Vec3::from_fn(|_, _| {
        let z: f64 = StandardNormal.sample(rng);
        sd * z
    })
}

/// Sample mean and standard error of the mean. Zero error for fewer than two samples.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Running mean/variance (Welford), so large Monte Carlo loops need no buffer.
#[derive(Debug, Clone, Copy, Default)]
pub struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn stderr(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
    }
}

/// Kolmogorov-Smirnov distance between the sample (sorted in place) and `cdf`.
pub fn ks_statistic(xs: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |d, (k, &x)| {
        let f = cdf(x);
        d.max(f - k as f64 / n).max((k + 1) as f64 / n - f)
    })
}

/// Asymptotic one-sample KS critical value at the 1% level.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

/// Least-squares non-increasing fit (pool adjacent violators).
pub fn isotonic_nonincreasing(ys: &[f64]) -> Vec<f64> {
    // blocks of (sum, count)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(ys.len());
    for &y in ys {
        blocks.push((y, 1));
        while blocks.len() > 1 {
            let (s1, c1) = blocks[blocks.len() - 1];
            let (s0, c0) = blocks[blocks.len() - 2];
            if s0 / c0 as f64 >= s1 / c1 as f64 {
                break;
            }
            blocks.pop();
            *blocks.last_mut().unwrap() = (s0 + s1, c0 + c1);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(s, c)| std::iter::repeat_n(s / c as f64, c))
        .collect()
}

/// Largest pointwise gap between a series and its non-increasing fit.
pub fn isotonic_violation(ys: &[f64]) -> f64 {
    isotonic_nonincreasing(ys)
        .iter()
        .zip(ys)
        .fold(0.0, |m, (f, y)| m.max((f - y).abs()))
}

/// Bootstrap standard deviation of `stat` over `reps` resamples (with
/// replacement) of `n` indices.
pub fn bootstrap_stderr<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    reps: usize,
    mut stat: impl FnMut(&[usize]) -> f64,
) -> f64 {
    let mut idx = vec![0usize; n];
    let mut vals = Vec::with_capacity(reps);
    for _ in 0..reps {
        for slot in idx.iter_mut() {
            *slot = rng.random_range(0..n);
        }
        vals.push(stat(&idx));
    }
    let (_, se) = mean_stderr(&vals);
    se * (reps as f64).sqrt()
}
