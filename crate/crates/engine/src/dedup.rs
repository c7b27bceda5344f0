//! Accumulate-and-cross deduplication of risk lists.

use async_trait::async_trait;
use foresight_core::domain::{Record, RecordSchema, StepUsage, SystemicRisk, UseCase};
use foresight_gateway::{Gateway, Stage};
use serde::{Deserialize, Serialize};

use crate::generate::{call_schema, Scope};
use crate::trace::CallTrace;
use crate::{lists, EngineError, PromptTemplates};

pub const DEDUP_STEP: &str = "deduplication";

/// Duplicate pairs found by a judge, as 0-based indices.
#[derive(Debug, Clone, Default)]
pub struct JudgeReply {
    pub pairs: Vec<(usize, usize)>,
    pub trace: Option<CallTrace>,
    pub usage: StepUsage,
}

/// Decides which items describe the same risk.
#[async_trait]
pub trait DuplicateJudge: Send + Sync {
    /// Pairs `(i, j)` of duplicates inside one list.
    async fn within(&self, items: &[&str], scope: &Scope) -> Result<JudgeReply, EngineError>;
    /// Pairs `(i, j)` where `first[i]` duplicates `second[j]`.
    async fn across(&self, first: &[&str], second: &[&str], scope: &Scope) -> Result<JudgeReply, EngineError>;
}

/// Treats items as duplicates only when their trimmed texts are equal.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactTextJudge;

#[async_trait]
impl DuplicateJudge for ExactTextJudge {
    async fn within(&self, items: &[&str], _: &Scope) -> Result<JudgeReply, EngineError> {
        let mut pairs = Vec::new();
        for i in 0..items.len() {
            for j in i + 1..items.len() {
                if items[i].trim() == items[j].trim() {
                    pairs.push((i, j));
                }
            }
        }
        Ok(JudgeReply { pairs, ..JudgeReply::default() })
    }

    async fn across(&self, first: &[&str], second: &[&str], _: &Scope) -> Result<JudgeReply, EngineError> {
        let mut pairs = Vec::new();
        for (i, a) in first.iter().enumerate() {
            for (j, b) in second.iter().enumerate() {
                if a.trim() == b.trim() {
                    pairs.push((i, j));
                }
            }
        }
        Ok(JudgeReply { pairs, ..JudgeReply::default() })
    }
}

/// Asks the deduplicator model with the self and cross prompts.
pub struct LlmJudge<'a> {
    pub gateway: &'a Gateway,
    pub templates: &'a PromptTemplates,
    pub use_case: &'a UseCase,
}

impl LlmJudge<'_> {
    async fn ask(
        &self,
        stage: Stage,
        prompt: String,
        bounds: (usize, usize),
        scope: &Scope,
    ) -> Result<JudgeReply, EngineError> {
        let (n1, n2) = bounds;
        let check = |records: &[Record]| -> Result<(), String> {
            for r in records {
                if let Record::DedupPair(p) = r {
                    if p.id_1 == 0 || p.id_1 as usize > n1 {
                        return Err(format!("id_1 {} is not in the first list", p.id_1));
                    }
                    if p.id_2 == 0 || p.id_2 as usize > n2 {
                        return Err(format!("id_2 {} is not in the second list", p.id_2));
                    }
                }
            }
            Ok(())
        };
        let ctx = scope.context(stage, &self.use_case.id, None);
        let called = call_schema(self.gateway, ctx, prompt, RecordSchema::DedupPairs, check).await;
        let records = match called.records {
            Ok(r) => r,
            Err(e) => return Err(e.into()),
        };
        let pairs = records
            .into_iter()
            .filter_map(|r| match r {
                Record::DedupPair(p) => Some((p.id_1 as usize - 1, p.id_2 as usize - 1)),
                _ => None,
            })
            .collect();
        Ok(JudgeReply {
            pairs,
            trace: Some(called.trace),
            usage: called.usage,
        })
    }
}

#[async_trait]
impl DuplicateJudge for LlmJudge<'_> {
    async fn within(&self, items: &[&str], scope: &Scope) -> Result<JudgeReply, EngineError> {
        let prompt = self
            .templates
            .render("dedup_self", &[("items", &lists::numbered(items.iter().copied()))])?;
        self.ask(Stage::DedupSelf, prompt, (items.len(), items.len()), scope)
            .await
    }

    async fn across(&self, first: &[&str], second: &[&str], scope: &Scope) -> Result<JudgeReply, EngineError> {
        let prompt = self.templates.render(
            "dedup_cross",
            &[
                ("first_list", &lists::numbered(first.iter().copied())),
                ("second_list", &lists::numbered(second.iter().copied())),
            ],
        )?;
        self.ask(Stage::DedupCross, prompt, (first.len(), second.len()), scope)
            .await
    }
}

/// One merge: `removed` was folded into `kept`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DedupDecision {
    /// `within` or `across`.
    pub kind: String,
    pub list: String,
    pub kept: String,
    pub removed: String,
}

#[derive(Debug, Clone, Default)]
pub struct DedupOutcome {
    pub risks: Vec<SystemicRisk>,
    pub decisions: Vec<DedupDecision>,
    /// Accumulator size after each list was folded in.
    pub cumulative: Vec<usize>,
    pub traces: Vec<CallTrace>,
    pub usage: StepUsage,
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    let mut c = i;
    while parent[c] != r {
        let next = parent[c];
        parent[c] = r;
        c = next;
    }
    r
}

fn texts(risks: &[SystemicRisk]) -> Vec<&str> {
    risks.iter().map(|r| r.text.as_str()).collect()
}

fn absorb(out: &mut DedupOutcome, reply: JudgeReply) -> Vec<(usize, usize)> {
    out.usage.absorb(&reply.usage);
    out.traces.extend(reply.trace);
    reply.pairs
}

fn merge_into(kept: &mut SystemicRisk, removed: SystemicRisk) {
    for p in removed.provenance {
        if !kept.provenance.contains(&p) {
            kept.provenance.push(p);
        }
    }
}

/// Merges duplicate groups inside one list. Each group keeps its
/// lowest-index member.
pub(crate) fn collapse(
    label: &str,
    risks: Vec<SystemicRisk>,
    pairs: &[(usize, usize)],
    decisions: &mut Vec<DedupDecision>,
) -> Vec<SystemicRisk> {
    let n = risks.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for &(a, b) in pairs {
        if a >= n || b >= n || a == b {
            continue;
        }
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            parent[hi] = lo;
        }
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    let mut slots: Vec<Option<SystemicRisk>> = risks.into_iter().map(Some).collect();
    for i in 0..n {
        if roots[i] != i {
            let removed = slots[i].take().expect("each index taken once");
            let kept = slots[roots[i]].as_mut().expect("roots precede their members");
            decisions.push(DedupDecision {
                kind: "within".into(),
                list: label.to_string(),
                kept: kept.id.clone(),
                removed: removed.id.clone(),
            });
            merge_into(kept, removed);
        }
    }
    slots.into_iter().flatten().collect()
}

/// Folds newcomers into the accumulator. A newcomer matched to several
/// accumulated items merges into the earliest one; unmatched newcomers are
/// appended in order.
pub(crate) fn fold(
    label: &str,
    acc: &mut Vec<SystemicRisk>,
    incoming: Vec<SystemicRisk>,
    pairs: &[(usize, usize)],
    decisions: &mut Vec<DedupDecision>,
) {
    let mut target: Vec<Option<usize>> = vec![None; incoming.len()];
    for &(i, j) in pairs {
        if i < acc.len() && j < incoming.len() {
            target[j] = Some(target[j].map_or(i, |t| t.min(i)));
        }
    }
    for (risk, t) in incoming.into_iter().zip(target) {
        match t {
            Some(i) => {
                decisions.push(DedupDecision {
                    kind: "across".into(),
                    list: label.to_string(),
                    kept: acc[i].id.clone(),
                    removed: risk.id.clone(),
                });
                merge_into(&mut acc[i], risk);
            }
            None => acc.push(risk),
        }
    }
}

/// Runs the accumulate-and-cross procedure over labelled lists. With
/// `self_dedup`, each list is first collapsed against itself.
pub async fn dedup_risks(
    lists: Vec<(String, Vec<SystemicRisk>)>,
    judge: &dyn DuplicateJudge,
    scope: &Scope,
    self_dedup: bool,
) -> Result<DedupOutcome, EngineError> {
    let mut out = DedupOutcome::default();
    let mut acc: Vec<SystemicRisk> = Vec::new();
    for (label, list) in lists {
        let list_scope = Scope {
            run: scope.run,
            target: Some(label.clone()),
        };
        let list = if self_dedup && list.len() > 1 {
            let reply = judge.within(&texts(&list), &list_scope).await?;
            let pairs = absorb(&mut out, reply);
            collapse(&label, list, &pairs, &mut out.decisions)
        } else {
            list
        };
        if acc.is_empty() {
            acc = list;
        } else if !list.is_empty() {
            let reply = judge.across(&texts(&acc), &texts(&list), &list_scope).await?;
            let pairs = absorb(&mut out, reply);
            fold(&label, &mut acc, list, &pairs, &mut out.decisions);
        }
        out.cumulative.push(acc.len());
    }
    out.risks = acc;
    Ok(out)
}

/// Cross-run pass: lists are already deduplicated within each run.
pub async fn dedup_across_runs(
    runs: Vec<(String, Vec<SystemicRisk>)>,
    judge: &dyn DuplicateJudge,
) -> Result<DedupOutcome, EngineError> {
    dedup_risks(runs, judge, &Scope::default(), false).await
}
