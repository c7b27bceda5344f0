use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{AnalyticsError, Result};
use crate::Scalar;

/// Per-class and support-weighted F1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct F1Report<L: Ord, T> {
    pub weighted: T,
    pub per_class: BTreeMap<L, T>,
    pub support: BTreeMap<L, usize>,
}

/// F1 per class from confusion counts, averaged with gold-support weights.
/// Classes that only occur in the predictions get weight zero.
pub fn weighted_f1<L: Ord + Clone, T: Scalar>(pred: &[L], gold: &[L]) -> Result<F1Report<L, T>> {
    if pred.len() != gold.len() {
        return Err(AnalyticsError::LengthMismatch {
            left: pred.len(),
            right: gold.len(),
        });
    }
    if gold.is_empty() {
        return Err(AnalyticsError::Empty("label sequences"));
    }
    let classes: BTreeSet<&L> = pred.iter().chain(gold).collect();
    let mut per_class = BTreeMap::new();
    let mut support = BTreeMap::new();
    let mut weighted = T::zero();
    for class in classes {
        let (mut tp, mut fp, mut fnc) = (0usize, 0usize, 0usize);
        for (p, g) in pred.iter().zip(gold) {
            match (p == class, g == class) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fnc += 1,
                _ => {}
            }
        }
        let denom = 2 * tp + fp + fnc;
        let f1 = if denom == 0 {
            T::zero()
        } else {
            T::from_usize_lossy(2 * tp) / T::from_usize_lossy(denom)
        };
        let sup = tp + fnc;
        weighted += f1 * T::from_usize_lossy(sup);
        per_class.insert(class.clone(), f1);
        support.insert(class.clone(), sup);
    }
    Ok(F1Report {
        weighted: weighted / T::from_usize_lossy(gold.len()),
        per_class,
        support,
    })
}

/// Nominal Krippendorff's alpha over an items x raters matrix (`None` = missing).
///
/// Built from the coincidence matrix: each unit with `m >= 2` ratings adds
/// `1/(m-1)` for every ordered pair of its values.
pub fn krippendorff_alpha<L: Ord + Clone, T: Scalar>(ratings: &[Vec<Option<L>>]) -> Result<T> {
    let units: Vec<Vec<&L>> = ratings
        .iter()
        .map(|row| row.iter().flatten().collect::<Vec<_>>())
        .filter(|vals| vals.len() >= 2)
        .collect();
    if units.len() < 2 {
        return Err(AnalyticsError::InsufficientData(format!(
            "{} items with at least two ratings, need 2",
            units.len()
        )));
    }
    let categories: BTreeSet<&L> = units.iter().flatten().copied().collect();
    let index: BTreeMap<&L, usize> = categories.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    let k = categories.len();
    let mut coincidence = vec![vec![T::zero(); k]; k];
    for vals in &units {
        let w = T::one() / T::from_usize_lossy(vals.len() - 1);
        for (i, a) in vals.iter().enumerate() {
            for (j, b) in vals.iter().enumerate() {
                if i != j {
                    coincidence[index[a]][index[b]] += w;
                }
            }
        }
    }
    let marginals: Vec<T> = coincidence
        .iter()
        .map(|row| row.iter().fold(T::zero(), |s, &x| s + x))
        .collect();
    let n = marginals.iter().fold(T::zero(), |s, &x| s + x);
    let mut observed = T::zero();
    let mut expected = T::zero();
    for c in 0..k {
        for d in 0..k {
            if c != d {
                observed += coincidence[c][d];
                expected += marginals[c] * marginals[d];
            }
        }
    }
    if expected == T::zero() {
        return Err(AnalyticsError::NoVariation);
    }
    Ok(T::one() - (n - T::one()) * observed / expected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn perfect_prediction() {
        let gold = ["r", "b", "u", "r"];
        let rep: F1Report<_, f64> = weighted_f1(&gold, &gold).unwrap();
        assert_eq!(rep.weighted, 1.0);
        assert!(rep.per_class.values().all(|&f| f == 1.0));
    }

    #[test]
    fn four_item_hand_example() {
        // risk: tp1 fp0 fn1 -> 2/3; benefit: tp1 fp1 fn0 -> 2/3; unclear: 1.
        // weighted: (2*2/3 + 1*2/3 + 1*1) / 4 = 0.75
        let gold = ["r", "r", "b", "u"];
        let pred = ["r", "b", "b", "u"];
        let rep: F1Report<_, f64> = weighted_f1(&pred, &gold).unwrap();
        assert_abs_diff_eq!(rep.per_class["r"], 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.per_class["b"], 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.per_class["u"], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.weighted, 0.75, epsilon = 1e-12);
    }

    #[test]
    fn f1_length_mismatch() {
        assert!(weighted_f1::<_, f64>(&["a"], &["a", "b"]).is_err());
    }

    #[test]
    fn alpha_perfect_agreement() {
        let m = vec![
            vec![Some(1), Some(1), Some(1)],
            vec![Some(2), Some(2), Some(2)],
            vec![Some(3), Some(3), Some(3)],
            vec![Some(1), Some(1), Some(1)],
        ];
        assert_eq!(krippendorff_alpha::<_, f64>(&m).unwrap(), 1.0);
    }

    #[test]
    fn alpha_one_disagreement() {
        // o_aa = 4, o_bb = 2, o_ab = o_ba = 1; n_a = 5, n_b = 3, n = 8
        // alpha = 1 - 7 * 2 / (2 * 5 * 3) = 8/15
        let m = vec![
            vec![Some('a'), Some('a')],
            vec![Some('b'), Some('b')],
            vec![Some('a'), Some('a')],
            vec![Some('a'), Some('b')],
        ];
        assert_abs_diff_eq!(krippendorff_alpha::<_, f64>(&m).unwrap(), 8.0 / 15.0, epsilon = 1e-12);
    }

    #[test]
    fn alpha_missing_and_insufficient() {
        let m = vec![vec![Some(1), None], vec![Some(1), Some(2)]];
        assert!(matches!(krippendorff_alpha::<_, f64>(&m), Err(AnalyticsError::InsufficientData(_))));
        let one_category = vec![vec![Some(1), Some(1)], vec![Some(1), Some(1)]];
        assert_eq!(krippendorff_alpha::<_, f64>(&one_category), Err(AnalyticsError::NoVariation));
    }

    #[test]
    fn alpha_drops_when_agreement_flipped() {
        let base = vec![
            vec![Some(1), Some(1)],
            vec![Some(2), Some(2)],
            vec![Some(3), Some(3)],
        ];
        let a0: f64 = krippendorff_alpha(&base).unwrap();
        let mut flipped = base.clone();
        flipped[2][1] = Some(1);
        let a1: f64 = krippendorff_alpha(&flipped).unwrap();
        assert!(a1 < a0);
    }
}
