use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AnalyticsError, Result};
use crate::rubric::{AnnotationRecord, RatingDimension};
use crate::Scalar;

/// Per-set descriptive summary, always tagged with the rating cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetSummary<T> {
    pub set: String,
    pub cohort: String,
    pub n_records: usize,
    pub systemic_share: T,
    pub means: BTreeMap<RatingDimension, T>,
}

impl<T: Scalar> SetSummary<T> {
    pub fn from_records(set: &str, cohort: &str, records: &[AnnotationRecord]) -> Result<Self> {
        Ok(Self {
            set: set.to_string(),
            cohort: cohort.to_string(),
            n_records: records.len(),
            systemic_share: share_systemic(records)?,
            means: likert_means(records)?,
        })
    }
}

/// Fraction of records answering yes to the systemic question.
pub fn share_systemic<T: Scalar>(records: &[AnnotationRecord]) -> Result<T> {
    if records.is_empty() {
        return Err(AnalyticsError::Empty("records"));
    }
    let yes = records.iter().filter(|r| r.systemic).count();
    Ok(T::from_usize_lossy(yes) / T::from_usize_lossy(records.len()))
}

/// Mean of every 1-5 scaled dimension (likelihood, severity, ten items).
pub fn likert_means<T: Scalar>(records: &[AnnotationRecord]) -> Result<BTreeMap<RatingDimension, T>> {
    if records.is_empty() {
        return Err(AnalyticsError::Empty("records"));
    }
    let n = T::from_usize_lossy(records.len());
    Ok(RatingDimension::all()
        .filter(|d| *d != RatingDimension::Systemic)
        .map(|d| {
            let sum = records.iter().fold(T::zero(), |s, r| s + T::from_usize_lossy(usize::from(r.value(d))));
            (d, sum / n)
        })
        .collect())
}
