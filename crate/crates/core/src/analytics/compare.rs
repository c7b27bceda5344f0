use serde::{Deserialize, Serialize};

use super::{bootstrap_ci, cohens_d, mann_whitney_u, AnalyticsError, Result};
use crate::Scalar;

/// Default bootstrap resample count.
pub const BOOTSTRAP_ITERATIONS: usize = 10_000;

/// One row of a two-set comparison table.
///
/// When the pooled sd is zero the effect is undefined: `cohens_d` and both
/// intervals are NaN and render as `NA`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow<T> {
    pub dimension: String,
    pub n_a: usize,
    pub n_b: usize,
    pub mean_a: T,
    pub mean_b: T,
    pub pooled_sd: T,
    pub cohens_d: T,
    /// Analytic interval.
    pub ci_low: T,
    pub ci_high: T,
    /// Percentile bootstrap interval.
    pub boot_low: T,
    pub boot_high: T,
    pub rank_biserial_r: T,
    pub p_value: T,
}

pub fn compare_samples<T: Scalar>(
    dimension: &str,
    a: &[T],
    b: &[T],
    iterations: usize,
    seed: u64,
) -> Result<ComparisonRow<T>> {
    let mw = mann_whitney_u(a, b)?;
    let mean = |xs: &[T]| xs.iter().fold(T::zero(), |s, &x| s + x) / T::from_usize_lossy(xs.len());
    let nan = T::nan();
    let (mean_a, mean_b, pooled_sd, d, ci_low, ci_high) = match cohens_d(a, b) {
        Ok(e) => (e.mean_a, e.mean_b, e.pooled_sd, e.d, e.ci_low, e.ci_high),
        Err(AnalyticsError::UndefinedEffect) => (mean(a), mean(b), T::zero(), nan, nan, nan),
        Err(e) => return Err(e),
    };
    let (boot_low, boot_high) = if d.is_nan() {
        (nan, nan)
    } else {
        match bootstrap_ci(a, b, iterations, seed) {
            Ok(ci) => ci,
            Err(AnalyticsError::UndefinedEffect) => (nan, nan),
            Err(e) => return Err(e),
        }
    };
    Ok(ComparisonRow {
        dimension: dimension.to_string(),
        n_a: a.len(),
        n_b: b.len(),
        mean_a,
        mean_b,
        pooled_sd,
        cohens_d: d,
        ci_low,
        ci_high,
        boot_low,
        boot_high,
        rank_biserial_r: mw.rank_biserial,
        p_value: mw.p_value,
    })
}

fn cell<T: Scalar>(v: T) -> String {
    if v.is_nan() {
        "NA".into()
    } else {
        format!("{:.2}", v.as_f64())
    }
}

/// Comparison CSV: one row per dimension with sample sizes, means, effect sizes
/// and the bootstrap interval.
pub fn comparison_csv<T: Scalar>(rows: &[ComparisonRow<T>]) -> String {
    let mut out = String::from(
        "dimension,n_a,n_b,mean_a,mean_b,pooled_sd,cohens_d,ci_low,ci_high,boot_low,boot_high,rank_biserial_r,p_value\n",
    );
    for r in rows {
        let cells = [
            r.mean_a,
            r.mean_b,
            r.pooled_sd,
            r.cohens_d,
            r.ci_low,
            r.ci_high,
            r.boot_low,
            r.boot_high,
            r.rank_biserial_r,
            r.p_value,
        ]
        .map(cell);
        out.push_str(&format!("{},{},{},{}\n", r.dimension, r.n_a, r.n_b, cells.join(",")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_fields_agree_with_parts() {
        let a = [4.0, 5.0, 3.0, 4.0, 5.0, 4.0];
        let b = [2.0, 3.0, 3.0, 1.0, 2.0, 4.0];
        let row = compare_samples("Severity", &a, &b, 500, 9).unwrap();
        let d = cohens_d(&a, &b).unwrap();
        assert_eq!(row.cohens_d, d.d);
        assert!(row.ci_low <= row.cohens_d && row.cohens_d <= row.ci_high);
        assert!(row.boot_low <= row.boot_high);
        assert_eq!((row.boot_low, row.boot_high), bootstrap_ci(&a, &b, 500, 9).unwrap());
        assert!(row.rank_biserial_r > 0.0);
        assert_eq!((row.n_a, row.n_b), (6, 6));
    }

    #[test]
    fn constant_samples_render_na() {
        let row = compare_samples::<f64>("Systemic", &[1.0, 1.0], &[1.0, 1.0, 1.0], 100, 1).unwrap();
        assert!(row.cohens_d.is_nan());
        let csv = comparison_csv(&[row]);
        let line = csv.lines().nth(1).unwrap();
        assert_eq!(line, "Systemic,2,3,1.00,1.00,0.00,NA,NA,NA,NA,NA,0.00,1.00");
    }

    #[test]
    fn too_small_is_error() {
        assert!(compare_samples("x", &[1.0], &[1.0, 2.0], 10, 1).is_err());
    }
}
