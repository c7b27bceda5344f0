use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AnnotationCard, CardIndex, RubricError, Subdimension};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cohort {
    DecisionMaker,
    Designer,
    Developer,
    Legal,
    Healthcare,
    Layperson,
    Leader,
}

/// Self-reported familiarity with risk assessments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Familiarity {
    NotAtAll,
    Slightly,
    Moderately,
    Very,
    Extremely,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluatorProfile {
    pub evaluator_id: String,
    pub cohort: Cohort,
    pub familiarity: Familiarity,
    /// Comprehension-check outcome per use case id.
    #[serde(default)]
    pub comprehension: BTreeMap<String, bool>,
    /// Attention checks passed, 0..=2.
    pub attention_passes: u8,
}

impl EvaluatorProfile {
    /// Retention rule, evaluated for records about `use_case_id`.
    pub fn retention_failure(&self, use_case_id: &str) -> Option<String> {
        if self.familiarity < Familiarity::Moderately {
            return Some(format!("familiarity {:?} below moderately familiar", self.familiarity));
        }
        if self.comprehension.get(use_case_id) != Some(&true) {
            return Some(format!("comprehension check for `{use_case_id}` not passed"));
        }
        if self.attention_passes != 2 {
            return Some(format!("{} of 2 attention checks passed", self.attention_passes));
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchSpec {
    /// Cards per evaluator including attention checks.
    pub min_cards: usize,
    pub max_cards: usize,
    pub checks_per_batch: usize,
    pub min_ratings_per_card: usize,
}

impl Default for BatchSpec {
    fn default() -> Self {
        Self {
            min_cards: 12,
            max_cards: 16,
            checks_per_batch: 2,
            min_ratings_per_card: 10,
        }
    }
}

/// Synthetic card asking for "Strongly disagree" on one rubric item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttentionCheck {
    pub target: Subdimension,
    pub instruction: String,
    /// Real card whose text the check reuses.
    pub source_card: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchEntry {
    pub card_id: String,
    pub use_case_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attention_check: Option<AttentionCheck>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Batch {
    pub batch_id: String,
    pub evaluator_id: String,
    pub entries: Vec<BatchEntry>,
}

impl Batch {
    pub fn entry(&self, card_id: &str) -> Option<&BatchEntry> {
        self.entries.iter().find(|e| e.card_id == card_id)
    }

    /// Cards in presentation order, with attention checks materialised.
    pub fn cards(&self, cards: &[AnnotationCard]) -> Vec<AnnotationCard> {
        let by_id: BTreeMap<&str, &AnnotationCard> = cards.iter().map(|c| (c.card_id.as_str(), c)).collect();
        self.entries
            .iter()
            .filter_map(|e| match &e.attention_check {
                None => by_id.get(e.card_id.as_str()).map(|c| (*c).clone()),
                Some(check) => by_id.get(check.source_card.as_str()).map(|c| AnnotationCard {
                    card_id: e.card_id.clone(),
                    instruction: Some(check.instruction.clone()),
                    ..(*c).clone()
                }),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchPlan {
    pub seed: u64,
    pub spec: BatchSpec,
    pub batches: Vec<Batch>,
    /// Real ratings planned per card.
    pub coverage: BTreeMap<String, usize>,
    pub policy: String,
}

/// Randomised assignment of cards to evaluators.
///
/// Every evaluator receives between `min_cards - checks` and
/// `max_cards - checks` distinct real cards (never more than exist), taken as
/// consecutive windows of one shuffled card cycle so coverage differs by at
/// most one rating between cards. The total is the larger of the required
/// coverage and the minimum batch fill, split as evenly as possible.
pub fn assign_batches(
    cards: &[AnnotationCard],
    index: &CardIndex,
    evaluators: &[String],
    spec: BatchSpec,
    seed: u64,
) -> Result<BatchPlan, RubricError> {
    if spec.min_cards > spec.max_cards {
        return Err(RubricError::InvalidSpec("min_cards exceeds max_cards".into()));
    }
    if spec.min_cards <= spec.checks_per_batch {
        return Err(RubricError::InvalidSpec("batch must hold at least one real card".into()));
    }
    if cards.is_empty() {
        return Err(RubricError::Infeasible("no cards to assign".into()));
    }
    let e = evaluators.len();
    if e == 0 {
        return Err(RubricError::Infeasible("zero evaluators".into()));
    }
    let c = cards.len();
    let lo = spec.min_cards - spec.checks_per_batch;
    let hi = (spec.max_cards - spec.checks_per_batch).min(c);
    if lo > c {
        return Err(RubricError::Infeasible(format!(
            "each batch needs {lo} distinct real cards but only {c} exist"
        )));
    }
    if spec.min_ratings_per_card > e {
        return Err(RubricError::Infeasible(format!(
            "{} ratings per card need {} evaluators, have {e}",
            spec.min_ratings_per_card, spec.min_ratings_per_card
        )));
    }
    let needed = c * spec.min_ratings_per_card;
    let capacity = e * hi;
    if capacity < needed {
        return Err(RubricError::Infeasible(format!(
            "coverage needs {needed} ratings, batches hold at most {capacity} (shortfall {})",
            needed - capacity
        )));
    }
    let total = needed.max(e * lo);
    let base = total / e;
    let extra = total % e;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cycle: Vec<usize> = (0..c).collect();
    cycle.shuffle(&mut rng);

    let mut cursor = 0usize;
    let mut coverage: BTreeMap<String, usize> = cards.iter().map(|k| (k.card_id.clone(), 0)).collect();
    let mut batches = Vec::with_capacity(e);
    for (i, evaluator) in evaluators.iter().enumerate() {
        let size = base + usize::from(i < extra);
        let mut entries: Vec<BatchEntry> = (0..size)
            .map(|k| {
                let card = &cards[cycle[(cursor + k) % c]];
                *coverage.get_mut(&card.card_id).expect("card tracked") += 1;
                BatchEntry {
                    card_id: card.card_id.clone(),
                    use_case_id: index
                        .get(&card.card_id)
                        .map(|o| o.use_case_id.clone())
                        .unwrap_or_default(),
                    attention_check: None,
                }
            })
            .collect();
        cursor = (cursor + size) % c;
        entries.shuffle(&mut rng);

        let batch_id = format!("batch-{:03}", i + 1);
        for n in 0..spec.checks_per_batch {
            let source = entries[rng.random_range(0..size)].clone();
            let target = Subdimension::ALL[rng.random_range(0..Subdimension::ALL.len())];
            let check = BatchEntry {
                card_id: format!("check-{batch_id}-{}", n + 1),
                use_case_id: source.use_case_id.clone(),
                attention_check: Some(AttentionCheck {
                    target,
                    instruction: format!(
                        "Attention check: please select \"Strongly disagree\" for the statement \"{}\".",
                        target.statement()
                    ),
                    source_card: source.card_id,
                }),
            };
            let pos = rng.random_range(0..=entries.len());
            entries.insert(pos, check);
        }
        batches.push(Batch {
            batch_id,
            evaluator_id: evaluator.clone(),
            entries,
        });
    }

    let policy = format!(
        "{e} evaluators x {base}{} real cards + {} attention checks; {total} ratings over {c} cards \
         (required {needed}); surplus above coverage is spread evenly",
        if extra > 0 { format!("-{}", base + 1) } else { String::new() },
        spec.checks_per_batch
    );
    Ok(BatchPlan {
        seed,
        spec,
        batches,
        coverage,
        policy,
    })
}
