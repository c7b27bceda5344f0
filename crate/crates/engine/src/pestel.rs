use std::collections::BTreeSet;

use foresight_core::domain::{PestelTag, Record, RecordSchema, StepUsage, SystemicRisk, UseCase};
use foresight_gateway::{Gateway, Stage};

use crate::generate::{call_schema, Scope};
use crate::trace::CallTrace;
use crate::{lists, EngineError, PromptTemplates};

pub const PESTEL_STEP: &str = "pestel";

fn risk_line(r: &SystemicRisk) -> String {
    match r.impact.as_deref().filter(|i| !i.is_empty()) {
        Some(impact) => format!("{}, leading to {impact}", r.text),
        None => r.text.clone(),
    }
}

/// Tags every risk with exactly one PESTEL category in a single call.
pub async fn classify_pestel(
    gw: &Gateway,
    templates: &PromptTemplates,
    use_case: &UseCase,
    risks: &mut [SystemicRisk],
    scope: &Scope,
) -> Result<(CallTrace, StepUsage), EngineError> {
    if risks.is_empty() {
        return Err(EngineError::Precondition("no risks to classify".into()));
    }
    let lines: Vec<String> = risks.iter().map(risk_line).collect();
    let list = lists::numbered(lines.iter().map(String::as_str));
    let prompt = templates.render("pestel", &[("risks", &list)])?;
    let n = risks.len() as u32;
    let check = |records: &[Record]| -> Result<(), String> {
        let mut seen = BTreeSet::new();
        for r in records {
            if let Record::Pestel(p) = r {
                if p.id == 0 || p.id > n {
                    return Err(format!("id {} is not in the input", p.id));
                }
                if !seen.insert(p.id) {
                    return Err(format!("id {} classified twice", p.id));
                }
            }
        }
        match (1..=n).find(|i| !seen.contains(i)) {
            Some(i) => Err(format!("no category for id {i}")),
            None => Ok(()),
        }
    };
    let ctx = scope.context(Stage::Pestel, &use_case.id, None);
    let called = call_schema(gw, ctx, prompt, RecordSchema::Pestel, check).await;
    let records = called.records?;
    for r in records {
        if let Record::Pestel(p) = r {
            risks[p.id as usize - 1].pestel = Some(PestelTag {
                category: p.category,
                explanation: p.explanation,
            });
        }
    }
    Ok((called.trace, called.usage))
}
