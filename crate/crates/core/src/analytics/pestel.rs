use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{AnalyticsError, Result};
use crate::domain::{PestelFactor, SystemicRisk};
use crate::Scalar;

/// Category counts in PESTEL order (P, E, S, T, Env, L).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PestelDistribution<T> {
    pub counts: [u64; 6],
    pub proportions: [T; 6],
    pub n: u64,
}

impl<T: Scalar> PestelDistribution<T> {
    pub fn from_counts(counts: [u64; 6]) -> Self {
        let n: u64 = counts.iter().sum();
        let proportions = counts.map(|c| {
            if n == 0 {
                T::zero()
            } else {
                T::lit(c as f64) / T::lit(n as f64)
            }
        });
        Self { counts, proportions, n }
    }

    /// Tallies tagged risks; untagged risks are ignored.
    pub fn from_risks<'a>(risks: impl IntoIterator<Item = &'a SystemicRisk>) -> Self {
        let mut counts = [0u64; 6];
        for r in risks {
            if let Some(tag) = &r.pestel {
                counts[tag.category.index()] += 1;
            }
        }
        Self::from_counts(counts)
    }

    pub fn count(&self, factor: PestelFactor) -> u64 {
        self.counts[factor.index()]
    }
}

/// Shannon entropy (natural log) of the category proportions, normalised by
/// `ln 6` so that a uniform spread scores 1 and a single category scores 0.
pub fn shannon_diversity<T: Scalar>(dist: &PestelDistribution<T>) -> Result<T> {
    if dist.n == 0 {
        return Err(AnalyticsError::Empty("PESTEL distribution has no risks"));
    }
    let n = T::lit(dist.n as f64);
    let mut h = T::zero();
    for &c in &dist.counts {
        if c > 0 {
            let p = T::lit(c as f64) / n;
            h -= p * p.ln();
        }
    }
    Ok(h / T::lit(6.0).ln())
}

/// Table rows `label,P,P%,E,E%,S,S%,T,T%,Env,Env%,L,L%,H`.
pub fn pestel_table_csv<T: Scalar>(rows: &[(String, PestelDistribution<T>)]) -> Result<String> {
    let mut out = String::from(
        "label,political,political_share,economic,economic_share,social,social_share,\
         technological,technological_share,environmental,environmental_share,legal,legal_share,h\n",
    );
    for (label, dist) in rows {
        let h = shannon_diversity(dist)?;
        out.push_str(&csv_field(label));
        for i in 0..6 {
            let _ = write!(out, ",{},{:.2}", dist.counts[i], dist.proportions[i].as_f64());
        }
        let _ = writeln!(out, ",{:.2}", h.as_f64());
    }
    Ok(out)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn uniform_is_one() {
        let d = PestelDistribution::<f64>::from_counts([3; 6]);
        assert_abs_diff_eq!(shannon_diversity(&d).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn single_category_is_zero() {
        let d = PestelDistribution::<f64>::from_counts([0, 0, 9, 0, 0, 0]);
        assert_eq!(shannon_diversity(&d).unwrap(), 0.0);
    }

    #[test]
    fn chatbot_agent_row() {
        let d = PestelDistribution::<f64>::from_counts([1, 2, 16, 2, 0, 4]);
        assert_abs_diff_eq!(shannon_diversity(&d).unwrap(), 0.62, epsilon = 0.005);
        let d32 = PestelDistribution::<f32>::from_counts([1, 2, 16, 2, 0, 4]);
        assert_abs_diff_eq!(shannon_diversity(&d32).unwrap(), 0.62, epsilon = 0.005);
    }

    #[test]
    fn empty_is_error() {
        let d = PestelDistribution::<f64>::from_counts([0; 6]);
        assert!(shannon_diversity(&d).is_err());
    }

    #[test]
    fn proportions_sum_to_one() {
        let d = PestelDistribution::<f64>::from_counts([5, 1, 11, 2, 0, 7]);
        assert_abs_diff_eq!(d.proportions.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn csv_shape() {
        let rows = vec![("Chatbot Companion".to_string(), PestelDistribution::<f64>::from_counts([1, 2, 16, 2, 0, 4]))];
        let csv = pestel_table_csv(&rows).unwrap();
        assert_eq!(csv.lines().nth(1).unwrap(), "Chatbot Companion,1,0.04,2,0.08,16,0.64,2,0.08,0,0.00,4,0.16,0.62");
    }

    proptest! {
        #[test]
        fn permutation_and_scale_invariant(counts in prop::array::uniform6(0u64..40), k in 1u64..7, rot in 0usize..6) {
            prop_assume!(counts.iter().sum::<u64>() > 0);
            let base = shannon_diversity(&PestelDistribution::<f64>::from_counts(counts)).unwrap();
            let mut rotated = counts;
            rotated.rotate_left(rot);
            let scaled = counts.map(|c| c * k);
            prop_assert!((shannon_diversity(&PestelDistribution::<f64>::from_counts(rotated)).unwrap() - base).abs() < 1e-12);
            prop_assert!((shannon_diversity(&PestelDistribution::<f64>::from_counts(scaled)).unwrap() - base).abs() < 1e-12);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&base));
        }
    }
}
