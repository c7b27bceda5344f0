use serde::{Deserialize, Serialize};

use super::{AnalyticsError, Result};
use crate::Scalar;

/// Fixed-length embedding tagged with the model that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector<T> {
    pub values: Vec<T>,
    pub model: String,
}

impl<T: Scalar> EmbeddingVector<T> {
    pub fn new(values: Vec<T>, model: impl Into<String>) -> Self {
        Self {
            values,
            model: model.into(),
        }
    }

    pub fn norm(&self) -> T {
        self.values.iter().fold(T::zero(), |acc, &v| acc + v * v).sqrt()
    }
}

/// Cosine of the angle between two equal-length vectors.
pub fn cosine<T: Scalar>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(AnalyticsError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut dot = T::zero();
    let mut na = T::zero();
    let mut nb = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == T::zero() {
        return Err(AnalyticsError::ZeroVector { index: 0 });
    }
    if nb == T::zero() {
        return Err(AnalyticsError::ZeroVector { index: 1 });
    }
    Ok(dot / (na.sqrt() * nb.sqrt()))
}

/// Mean cosine over all unordered pairs.
pub fn mean_pairwise_cosine<T: Scalar>(vectors: &[EmbeddingVector<T>]) -> Result<T> {
    if vectors.len() < 2 {
        return Err(AnalyticsError::TooFew {
            what: "embeddings",
            need: 2,
            got: vectors.len(),
        });
    }
    let dim = vectors[0].values.len();
    let model = &vectors[0].model;
    for (index, v) in vectors.iter().enumerate() {
        if v.values.len() != dim || &v.model != model {
            return Err(AnalyticsError::IncompatibleEmbedding { index });
        }
        if v.norm() == T::zero() {
            return Err(AnalyticsError::ZeroVector { index });
        }
    }
    let unit: Vec<Vec<T>> = vectors
        .iter()
        .map(|v| {
            let n = v.norm();
            v.values.iter().map(|&x| x / n).collect()
        })
        .collect();
    let mut sum = T::zero();
    let mut pairs = 0usize;
    for i in 0..unit.len() {
        for j in i + 1..unit.len() {
            sum += unit[i]
                .iter()
                .zip(&unit[j])
                .fold(T::zero(), |acc, (&x, &y)| acc + x * y);
            pairs += 1;
        }
    }
    Ok(sum / T::from_usize_lossy(pairs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityDrop<T> {
    pub mean_before: T,
    pub mean_after: T,
    /// `mean_after - mean_before`; negative when deduplication removed near-duplicates.
    pub delta: T,
}

/// Compares mean pairwise cosine before and after deduplication. Items are
/// keyed by id and `after` must be a subset of `before`.
pub fn similarity_drop<T: Scalar>(
    before: &[(String, EmbeddingVector<T>)],
    after: &[(String, EmbeddingVector<T>)],
) -> Result<SimilarityDrop<T>> {
    for (id, _) in after {
        if !before.iter().any(|(b, _)| b == id) {
            return Err(AnalyticsError::NotSubset(id.clone()));
        }
    }
    let strip = |xs: &[(String, EmbeddingVector<T>)]| xs.iter().map(|(_, v)| v.clone()).collect::<Vec<_>>();
    let mean_before = mean_pairwise_cosine(&strip(before))?;
    let mean_after = mean_pairwise_cosine(&strip(after))?;
    Ok(SimilarityDrop {
        mean_before,
        mean_after,
        delta: mean_after - mean_before,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn ev(values: &[f64]) -> EmbeddingVector<f64> {
        EmbeddingVector::new(values.to_vec(), "m")
    }

    #[test]
    fn identical_and_orthogonal() {
        assert_abs_diff_eq!(mean_pairwise_cosine(&[ev(&[1.0, 2.0]), ev(&[1.0, 2.0])]).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mean_pairwise_cosine(&[ev(&[1.0, 0.0]), ev(&[0.0, 3.0])]).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_vector_named() {
        let err = mean_pairwise_cosine(&[ev(&[1.0, 0.0]), ev(&[0.0, 0.0])]).unwrap_err();
        assert_eq!(err, AnalyticsError::ZeroVector { index: 1 });
    }

    #[test]
    fn mixed_models_rejected() {
        let other = EmbeddingVector::new(vec![1.0, 0.0], "other");
        assert!(mean_pairwise_cosine(&[ev(&[1.0, 0.0]), other]).is_err());
    }

    #[test]
    fn removing_a_duplicate_lowers_mean() {
        // v=(1,0), w=(1,1): cos(v,v)=1, cos(v,w)=1/sqrt2.
        // before: (1 + 2/sqrt2)/3, after: 1/sqrt2.
        let v = ev(&[1.0, 0.0]);
        let w = ev(&[1.0, 1.0]);
        let before = vec![("a".to_string(), v.clone()), ("b".to_string(), v.clone()), ("c".to_string(), w.clone())];
        let after = vec![("a".to_string(), v), ("c".to_string(), w)];
        let drop = similarity_drop(&before, &after).unwrap();
        let c = 0.5f64.sqrt();
        assert_abs_diff_eq!(drop.mean_before, (1.0 + 2.0 * c) / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(drop.mean_after, c, epsilon = 1e-12);
        assert!(drop.delta < 0.0);
    }

    #[test]
    fn unchanged_set_has_zero_delta() {
        let xs = vec![("a".to_string(), ev(&[1.0, 0.2])), ("b".to_string(), ev(&[0.3, 1.0]))];
        assert_eq!(similarity_drop(&xs, &xs).unwrap().delta, 0.0);
    }

    #[test]
    fn subset_violation() {
        let before = vec![("a".to_string(), ev(&[1.0, 0.0])), ("b".to_string(), ev(&[0.0, 1.0]))];
        let after = vec![("a".to_string(), ev(&[1.0, 0.0])), ("z".to_string(), ev(&[0.0, 1.0]))];
        assert_eq!(similarity_drop(&before, &after).unwrap_err(), AnalyticsError::NotSubset("z".into()));
    }

    proptest! {
        #[test]
        fn copies_of_one_vector(v in prop::collection::vec(0.1f64..10.0, 1..8), n in 2usize..9) {
            let vs = vec![ev(&v); n];
            prop_assert!((mean_pairwise_cosine(&vs).unwrap() - 1.0).abs() < 1e-12);
        }
    }
}
