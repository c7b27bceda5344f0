//! Core model for agent-supported Futures Wheel foresight.
//!
//! * [`domain`]: use cases, consequences, risks, wheel runs and the JSONL
//!   record grammar used by every prompt.
//! * [`analytics`]: PESTEL diversity, embedding similarity, agreement and
//!   effect-size statistics, saturation curves. Generic over [`Scalar`].
//! * [`rubric`]: annotation cards, evaluator batches, quality checks and
//!   rating export.

pub mod analytics;
pub mod domain;
mod num;
pub mod rubric;

pub use num::Scalar;

pub type PestelDistribution = analytics::PestelDistribution<f64>;
pub type EmbeddingVector = analytics::EmbeddingVector<f64>;
pub type ComparisonRow = analytics::ComparisonRow<f64>;
pub type EffectSize = analytics::EffectSize<f64>;
pub type MannWhitney = analytics::MannWhitney<f64>;
pub type PestelDistributionF32 = analytics::PestelDistribution<f32>;
pub type EmbeddingVectorF32 = analytics::EmbeddingVector<f32>;
