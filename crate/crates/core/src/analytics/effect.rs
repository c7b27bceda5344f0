use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AnalyticsError, Result};
use crate::Scalar;

/// Two-sided 95% normal quantile.
const Z_975: f64 = 1.959_963_984_540_054;

/// Cohen's d with its analytic 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectSize<T> {
    pub d: T,
    pub mean_a: T,
    pub mean_b: T,
    pub pooled_sd: T,
    pub ci_low: T,
    pub ci_high: T,
}

fn mean<T: Scalar>(xs: &[T]) -> T {
    xs.iter().fold(T::zero(), |s, &x| s + x) / T::from_usize_lossy(xs.len())
}

fn sum_sq_dev<T: Scalar>(xs: &[T], m: T) -> T {
    xs.iter().fold(T::zero(), |s, &x| s + (x - m) * (x - m))
}

fn pooled_sd<T: Scalar>(a: &[T], ma: T, b: &[T], mb: T) -> T {
    let df = T::from_usize_lossy(a.len() + b.len() - 2);
    ((sum_sq_dev(a, ma) + sum_sq_dev(b, mb)) / df).sqrt()
}

/// Standardised mean difference `(mean_a - mean_b) / s_pooled`, where the
/// pooled variance uses `n - 1` denominators. The interval uses the usual
/// large-sample standard error `sqrt((na+nb)/(na*nb) + d^2 / (2(na+nb)))`.
pub fn cohens_d<T: Scalar>(a: &[T], b: &[T]) -> Result<EffectSize<T>> {
    for (what, xs) in [("sample_a", a), ("sample_b", b)] {
        if xs.len() < 2 {
            return Err(AnalyticsError::TooFew { what, need: 2, got: xs.len() });
        }
    }
    let mean_a = mean(a);
    let mean_b = mean(b);
    let sd = pooled_sd(a, mean_a, b, mean_b);
    if sd == T::zero() || !sd.is_finite() {
        return Err(AnalyticsError::UndefinedEffect);
    }
    let d = (mean_a - mean_b) / sd;
    let na = T::from_usize_lossy(a.len());
    let nb = T::from_usize_lossy(b.len());
    let se = ((na + nb) / (na * nb) + d * d / (T::lit(2.0) * (na + nb))).sqrt();
    let half = T::lit(Z_975) * se;
    Ok(EffectSize {
        d,
        mean_a,
        mean_b,
        pooled_sd: sd,
        ci_low: d - half,
        ci_high: d + half,
    })
}

/// Percentile bootstrap interval (2.5%, 97.5%) of Cohen's d.
///
/// Resampling is stratified: each iteration draws `na` indices from `a`, then
/// `nb` indices from `b`, with replacement. The generator is ChaCha8
/// (`ChaCha8Rng::seed_from_u64(seed)`) and an index is `next_u64() % n`, so
/// the stream is reproducible across implementations. Resamples whose pooled
/// sd is zero count as d = 0 when the means coincide and are discarded
/// otherwise. Percentiles interpolate linearly between order statistics.
pub fn bootstrap_ci<T: Scalar>(a: &[T], b: &[T], iterations: usize, seed: u64) -> Result<(T, T)> {
    if iterations == 0 {
        return Err(AnalyticsError::Invalid("iterations must be at least 1".into()));
    }
    for (what, xs) in [("sample_a", a), ("sample_b", b)] {
        if xs.len() < 2 {
            return Err(AnalyticsError::TooFew { what, need: 2, got: xs.len() });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ra = vec![T::zero(); a.len()];
    let mut rb = vec![T::zero(); b.len()];
    let mut ds = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        for slot in ra.iter_mut() {
            *slot = a[(rng.next_u64() % a.len() as u64) as usize];
        }
        for slot in rb.iter_mut() {
            *slot = b[(rng.next_u64() % b.len() as u64) as usize];
        }
        let (ma, mb) = (mean(&ra), mean(&rb));
        let sd = pooled_sd(&ra, ma, &rb, mb);
        if sd == T::zero() {
            if ma == mb {
                ds.push(T::zero());
            }
            continue;
        }
        ds.push((ma - mb) / sd);
    }
    if ds.is_empty() {
        return Err(AnalyticsError::UndefinedEffect);
    }
    ds.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    Ok((percentile(&ds, 0.025), percentile(&ds, 0.975)))
}

fn percentile<T: Scalar>(sorted: &[T], p: f64) -> T {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = T::lit(h - lo as f64);
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}
