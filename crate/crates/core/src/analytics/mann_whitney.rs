use serde::{Deserialize, Serialize};

use super::{AnalyticsError, Result};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney<T> {
    /// Pairs with a > b plus half the ties.
    pub u_a: T,
    /// `na * nb - u_a`.
    pub u_b: T,
    pub z: T,
    /// Two-sided, normal approximation with tie and continuity correction.
    pub p_value: T,
    /// `(u_a - u_b) / (na * nb)`, i.e. `1 - 2 u_b / (na nb)`; positive when
    /// sample a tends to be larger.
    pub rank_biserial: T,
}

pub fn mann_whitney_u<T: Scalar>(a: &[T], b: &[T]) -> Result<MannWhitney<T>> {
    if a.is_empty() {
        return Err(AnalyticsError::Empty("sample_a"));
    }
    if b.is_empty() {
        return Err(AnalyticsError::Empty("sample_b"));
    }
    let (na, nb) = (a.len(), b.len());
    let n = na + nb;
    let mut pooled: Vec<(T, bool)> = a.iter().map(|&x| (x, true)).chain(b.iter().map(|&x| (x, false))).collect();
    pooled.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));

    // Midranks over tie blocks; tie term accumulates sum(t^3 - t).
    let mut rank_sum_a = T::zero();
    let mut tie_term = T::zero();
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && pooled[j].0 == pooled[i].0 {
            j += 1;
        }
        let t = j - i;
        let midrank = T::from_usize_lossy(i + j + 1) / T::lit(2.0);
        let in_a = pooled[i..j].iter().filter(|(_, is_a)| *is_a).count();
        rank_sum_a += midrank * T::from_usize_lossy(in_a);
        let tf = T::from_usize_lossy(t);
        tie_term += tf * tf * tf - tf;
        i = j;
    }

    let naf = T::from_usize_lossy(na);
    let nbf = T::from_usize_lossy(nb);
    let nf = T::from_usize_lossy(n);
    let u_a = rank_sum_a - naf * (naf + T::one()) / T::lit(2.0);
    let u_b = naf * nbf - u_a;
    let mu = naf * nbf / T::lit(2.0);
    let var = naf * nbf / T::lit(12.0) * ((nf + T::one()) - tie_term / (nf * (nf - T::one())));
    let (z, p_value) = if var <= T::zero() {
        (T::zero(), T::one())
    } else {
        let dev = ((u_a - mu).abs() - T::lit(0.5)).max(T::zero());
        let z = dev / var.sqrt() * (u_a - mu).signum();
        let z = if dev == T::zero() { T::zero() } else { z };
        let p = statrs::function::erf::erfc(z.abs().as_f64() / std::f64::consts::SQRT_2);
        (z, T::lit(p.min(1.0)))
    };
    Ok(MannWhitney {
        u_a,
        u_b,
        z,
        p_value,
        rank_biserial: (u_a - u_b) / (naf * nbf),
    })
}
