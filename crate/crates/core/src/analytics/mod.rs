//! Quantitative instruments over risks, embeddings and ratings.
//!
//! Everything here is a pure function of its inputs (and a seed where
//! resampling is involved), generic over the [`Scalar`](crate::Scalar) type.

mod agreement;
mod compare;
mod effect;
mod mann_whitney;
mod pestel;
mod saturation;
mod similarity;
mod summary;

pub use agreement::{krippendorff_alpha, weighted_f1, F1Report};
pub use compare::{compare_samples, comparison_csv, ComparisonRow, BOOTSTRAP_ITERATIONS};
pub use effect::{bootstrap_ci, cohens_d, EffectSize};
pub use mann_whitney::{mann_whitney_u, MannWhitney};
pub use pestel::{pestel_table_csv, shannon_diversity, PestelDistribution};
pub use saturation::{saturation_curve, PlateauConfig, SaturationCurve};
pub use similarity::{cosine, mean_pairwise_cosine, similarity_drop, EmbeddingVector, SimilarityDrop};
pub use summary::{likert_means, share_systemic, SetSummary};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalyticsError {
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("need at least {need} observations in {what}, got {got}")]
    TooFew { what: &'static str, need: usize, got: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("effect size undefined: pooled standard deviation is zero")]
    UndefinedEffect,
    #[error("cosine undefined: vector {index} has zero norm")]
    ZeroVector { index: usize },
    #[error("embedding {index} differs in length or model from embedding 0")]
    IncompatibleEmbedding { index: usize },
    #[error("`{0}` appears after deduplication but not before")]
    NotSubset(String),
    #[error("cumulative counts decrease at index {index} ({prev} -> {next})")]
    NonMonotone { index: usize, prev: usize, next: usize },
    #[error("insufficient paired data: {0}")]
    InsufficientData(String),
    #[error("agreement undefined: all pairable values fall in one category")]
    NoVariation,
    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, AnalyticsError>;
