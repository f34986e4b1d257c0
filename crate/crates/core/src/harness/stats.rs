//! Ensemble statistics.

use rand::Rng;
use serde::{Deserialize, Serialize};

pub const BOOTSTRAP_RESAMPLES: usize = 1000;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard error of the mean.
pub fn std_err(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Linear-interpolation quantile of an unsorted sample.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// Median of integer-valued data with each value `k` spread uniformly over
/// `[k - 1/2, k + 1/2)`. Unlike the plain median it moves smoothly with the
/// underlying distribution.
pub fn interpolated_median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let half = 0.5 * v.len() as f64;
    let mut below = 0usize;
    let mut i = 0;
    while i < v.len() {
        let k = v[i];
        let mut j = i;
        while j < v.len() && v[j] == k {
            j += 1;
        }
        let f = j - i;
        if (below + f) as f64 >= half {
            return k - 0.5 + (half - below as f64) / f as f64;
        }
        below += f;
        i = j;
    }
    v[v.len() - 1]
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

/// Percentile bootstrap interval for a statistic.
pub fn bootstrap_ci<R, F>(
    xs: &[f64],
    stat: F,
    resamples: usize,
    level: f64,
    rng: &mut R,
) -> Interval
where
    R: Rng + ?Sized,
    F: Fn(&[f64]) -> f64,
{
    if xs.is_empty() {
        return Interval {
            lo: f64::NAN,
            hi: f64::NAN,
        };
    }
    let mut buf = vec![0.0; xs.len()];
    let stats: Vec<f64> = (0..resamples)
        .map(|_| {
            for b in buf.iter_mut() {
                *b = xs[rng.random_range(0..xs.len())];
            }
            stat(&buf)
        })
        .collect();
    let a = 0.5 * (1.0 - level);
    Interval {
        lo: quantile(&stats, a),
        hi: quantile(&stats, 1.0 - a),
    }
}

/// Median of sharpening times with censored entries counted at the horizon
/// (a lower bound), plus a 95% bootstrap interval.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpeningSummary {
    pub median: f64,
    pub ci: Interval,
    /// See [`interpolated_median`]; used for scaling fits.
    pub median_interpolated: f64,
    pub ci_interpolated: Interval,
    pub n: usize,
    pub censored: usize,
    /// True when at least half the trajectories were censored, so the median
    /// is only a lower bound.
    pub median_censored: bool,
}

pub fn summarize_sharpening<R: Rng + ?Sized>(
    times: &[Option<usize>],
    horizon: usize,
    rng: &mut R,
) -> SharpeningSummary {
    let xs: Vec<f64> = times.iter().map(|t| t.unwrap_or(horizon) as f64).collect();
    let censored = times.iter().filter(|t| t.is_none()).count();
    SharpeningSummary {
        median: median(&xs),
        ci: bootstrap_ci(&xs, median, BOOTSTRAP_RESAMPLES, 0.95, rng),
        median_interpolated: interpolated_median(&xs),
        ci_interpolated: bootstrap_ci(&xs, interpolated_median, BOOTSTRAP_RESAMPLES, 0.95, rng),
        n: xs.len(),
        censored,
        median_censored: 2 * censored >= xs.len().max(1),
    }
}
