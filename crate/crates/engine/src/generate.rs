use std::collections::{BTreeMap, BTreeSet};

use foresight_core::domain::{
    assign_ids, split_systemic_sentence, Consequence, ConsequenceDraft, JsonlError, Persona, PersonaChain, Record,
    RecordSchema, StepUsage, UseCase,
};
use foresight_gateway::{CallContext, Gateway, GatewayError, Stage};

use crate::trace::{CallTrace, Called};
use crate::{lists, EngineError, PromptTemplates};

/// Where a call sits in a larger job; carried into the call context.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Scope {
    pub run: Option<u32>,
    pub target: Option<String>,
}

impl Scope {
    pub fn run(run: u32) -> Self {
        Self {
            run: Some(run),
            target: None,
        }
    }

    pub(crate) fn context(&self, stage: Stage, use_case: &str, persona: Option<Persona>) -> CallContext {
        CallContext {
            stage,
            use_case: Some(use_case.to_string()),
            persona,
            run: self.run,
            target: self.target.clone(),
            attempt: 1,
        }
    }
}

pub(crate) async fn call_schema<F>(
    gw: &Gateway,
    ctx: CallContext,
    prompt: String,
    schema: RecordSchema,
    check: F,
) -> Called
where
    F: Fn(&[Record]) -> Result<(), String> + Send + Sync,
{
    let trace = CallTrace::new(ctx.stage, ctx.persona, ctx.target.clone());
    let req = gw.request(ctx.stage, "", prompt);
    match gw.chat_with_schema_checked(&req, schema, &ctx, check).await {
        Ok(reply) => Called {
            trace: trace.ok(&reply),
            usage: reply.usage,
            records: Ok(reply.records),
        },
        Err(e) => {
            let usage = match &e {
                GatewayError::ExhaustedRetries { attempts, .. } => StepUsage {
                    calls: attempts.len() as u64,
                    attempts: attempts.len() as u64,
                    ..StepUsage::default()
                },
                _ => StepUsage::default(),
            };
            Called {
                trace: trace.failed(&e),
                usage,
                records: Err(e),
            }
        }
    }
}

/// New consequences from one round for one persona.
#[derive(Debug, Clone)]
pub struct RoundOutput {
    pub consequences: Vec<Consequence>,
    pub usage: StepUsage,
    pub trace: CallTrace,
}

fn only_empty(err: &GatewayError) -> bool {
    let empty = JsonlError::Empty.to_string();
    matches!(err, GatewayError::ExhaustedRetries { attempts, .. } if attempts.iter().all(|a| a.error == empty))
}

/// Runs round `round` (1-3) for `persona`, seeing only `prior`, which must
/// hold that persona's earlier rounds.
///
/// Parent ids in the reply are checked against `prior`; a reply with dangling
/// parents is re-asked like an unparseable one. A persona that produces
/// nothing at all gets an empty result with a warning, not an error.
pub async fn generate_round(
    gw: &Gateway,
    templates: &PromptTemplates,
    use_case: &UseCase,
    persona: Persona,
    prior: &PersonaChain,
    round: u8,
    scope: &Scope,
) -> Result<RoundOutput, EngineError> {
    let stage = Stage::round(round).ok_or_else(|| EngineError::Precondition(format!("no round {round}")))?;
    let attitude = persona.attitude();
    let ai_use = use_case.description.as_str();
    let firsts: BTreeSet<u32> = prior.first.iter().map(|c| c.id).collect();
    let seconds: BTreeMap<u32, Option<u32>> = prior.second.iter().map(|c| (c.id, c.parent_first_id)).collect();

    let (prompt, schema) = match round {
        1 => (
            templates.render("round1", &[("ai_attitude", attitude), ("ai_use", ai_use)])?,
            RecordSchema::Round1,
        ),
        2 => {
            if prior.first.is_empty() {
                return Err(EngineError::Precondition(format!(
                    "round 2 for {} needs round-1 output",
                    persona.slug()
                )));
            }
            let paths = lists::first_order_paths(ai_use, prior);
            (
                templates.render("round2", &[("ai_attitude", attitude), ("paths", &paths)])?,
                RecordSchema::Round2,
            )
        }
        _ => {
            if prior.second.is_empty() {
                return Err(EngineError::Precondition(format!(
                    "round 3 for {} needs round-2 output",
                    persona.slug()
                )));
            }
            let paths = lists::second_order_paths(ai_use, prior);
            (
                templates.render("round3", &[("ai_attitude", attitude), ("paths", &paths)])?,
                RecordSchema::Round3,
            )
        }
    };

    let check = |records: &[Record]| -> Result<(), String> {
        for r in records {
            match r {
                Record::Round2(r) if !firsts.contains(&r.first_order_id) => {
                    return Err(format!("first-order-id {} is not in the input", r.first_order_id));
                }
                Record::Round3(r) => match seconds.get(&r.second_order_id) {
                    None => return Err(format!("second-order-id {} is not in the input", r.second_order_id)),
                    Some(parent) if *parent != Some(r.first_order_id) => {
                        return Err(format!(
                            "second-order-id {} does not follow first-order-id {}",
                            r.second_order_id, r.first_order_id
                        ))
                    }
                    _ => {}
                },
                _ => {}
            }
        }
        Ok(())
    };

    let ctx = scope.context(stage, &use_case.id, Some(persona));
    let called = call_schema(gw, ctx, prompt, schema, check).await;
    let records = match called.records {
        Ok(r) => r,
        Err(e) if only_empty(&e) => {
            let mut trace = called.trace;
            trace.error = None;
            trace.warning = Some(format!("{} produced no round-{round} output", persona.slug()));
            return Ok(RoundOutput {
                consequences: Vec::new(),
                usage: called.usage,
                trace,
            });
        }
        Err(e) => return Err(e.into()),
    };

    let drafts = records
        .into_iter()
        .filter_map(|r| match r {
            Record::Round1(r) => Some(ConsequenceDraft::first(r.first_order_implication)),
            Record::Round2(r) => Some(ConsequenceDraft::second(r.second_order_implication, r.first_order_id)),
            Record::Round3(r) => {
                let (text, impact) = split_systemic_sentence(&r.systemic_consequence)
                    .unwrap_or_else(|| (r.systemic_consequence.trim().to_string(), String::new()));
                Some(ConsequenceDraft::third(text, r.first_order_id, r.second_order_id, Some(impact)))
            }
            _ => None,
        })
        .collect();
    let prior_all: Vec<Consequence> = prior.all().cloned().collect();
    let consequences = assign_ids(persona, drafts, &prior_all)?;
    Ok(RoundOutput {
        consequences,
        usage: called.usage,
        trace: called.trace,
    })
}
