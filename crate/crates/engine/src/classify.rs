use std::collections::{BTreeMap, BTreeSet};

use foresight_core::domain::{
    ClassificationLabel, Consequence, Persona, PersonaFailure, ProvenanceRef, Record, RecordSchema, RiskSource,
    SystemicRisk, UseCase, WheelRun,
};
use foresight_gateway::{Gateway, Stage};
use futures::future::join_all;

use crate::generate::{call_schema, Scope};
use crate::trace::CallTrace;
use crate::{lists, EngineError, PromptTemplates};

pub const CLASSIFICATION_STEP: &str = "classification";

/// Checks a label set against the ids that were asked about.
pub(crate) fn check_labels(records: &[Record], expected: &BTreeSet<u32>) -> Result<(), String> {
    let mut seen = BTreeSet::new();
    for r in records {
        if let Record::Classification(c) = r {
            if !expected.contains(&c.id) {
                return Err(format!("id {} is not in the input", c.id));
            }
            if !seen.insert(c.id) {
                return Err(format!("id {} classified twice", c.id));
            }
        }
    }
    let missing: Vec<String> = expected.difference(&seen).map(u32::to_string).collect();
    if !missing.is_empty() {
        return Err(format!("no classification for ids {}", missing.join(", ")));
    }
    Ok(())
}

/// Labels `items` with one classifier call in `persona`'s voice.
pub async fn classify_items(
    gw: &Gateway,
    templates: &PromptTemplates,
    use_case: &UseCase,
    persona: Persona,
    items: &[Consequence],
    scope: &Scope,
) -> (Result<BTreeMap<u32, ClassificationLabel>, EngineError>, CallTrace, foresight_core::domain::StepUsage) {
    let expected: BTreeSet<u32> = items.iter().map(|c| c.id).collect();
    let prompt = match templates.render(
        "classify",
        &[("ai_attitude", persona.attitude()), ("consequences", &lists::consequences(items))],
    ) {
        Ok(p) => p,
        Err(e) => {
            let mut t = CallTrace::new(Stage::Classify, Some(persona), scope.target.clone());
            t.error = Some(e.to_string());
            return (Err(e), t, Default::default());
        }
    };
    let ctx = scope.context(Stage::Classify, &use_case.id, Some(persona));
    let called = call_schema(gw, ctx, prompt, RecordSchema::Classification, |r| check_labels(r, &expected)).await;
    let labels = called.records.map_err(EngineError::from).map(|records| {
        records
            .into_iter()
            .filter_map(|r| match r {
                Record::Classification(c) => Some((c.id, c.classification)),
                _ => None,
            })
            .collect()
    });
    (labels, called.trace, called.usage)
}

/// Each persona labels its own third-order consequences. A persona whose
/// labels cannot be obtained is recorded as a failure.
pub async fn classify_run(
    gw: &Gateway,
    templates: &PromptTemplates,
    use_case: &UseCase,
    run: &mut WheelRun,
) -> Result<Vec<CallTrace>, EngineError> {
    if run.chains.iter().all(|c| c.third.is_empty()) {
        return Err(EngineError::Precondition(format!("{} has no third-order consequences", run.run_id)));
    }
    let scope = Scope::run(run.run_index);
    let jobs = run
        .chains
        .iter()
        .filter(|c| !c.third.is_empty())
        .map(|c| {
            let scope = &scope;
            async move {
                let (labels, trace, usage) = classify_items(gw, templates, use_case, c.persona, &c.third, scope).await;
                (c.persona, labels, trace, usage)
            }
        });
    let results = join_all(jobs).await;
    let mut traces = Vec::new();
    for (persona, labels, trace, usage) in results {
        run.record_usage(CLASSIFICATION_STEP, &usage);
        traces.push(trace);
        match labels {
            Ok(l) => {
                run.classifications.insert(persona, l);
            }
            Err(e) => run.failures.push(PersonaFailure {
                persona,
                step: "classify".into(),
                error: e.to_string(),
            }),
        }
    }
    Ok(traces)
}

pub fn agent_risk_id(run: &WheelRun, persona: Persona, consequence_id: u32) -> String {
    format!("{}-{}-{consequence_id}", run.run_id, persona.slug())
}

/// Risk-labelled third-order consequences, one list per persona in chain order.
pub fn risk_lists(run: &WheelRun) -> Vec<(String, Vec<SystemicRisk>)> {
    run.chains
        .iter()
        .map(|chain| {
            let risks = chain
                .third
                .iter()
                .filter(|c| run.label(chain.persona, c.id) == Some(ClassificationLabel::Risk))
                .map(|c| SystemicRisk {
                    id: agent_risk_id(run, chain.persona, c.id),
                    use_case_id: run.use_case_id.clone(),
                    text: c.text.clone(),
                    impact: c.impact.clone().filter(|i| !i.is_empty()),
                    source: RiskSource::Agent,
                    pestel: None,
                    provenance: vec![ProvenanceRef::agent(run.run_index, chain.persona, c.id)],
                })
                .collect();
            (chain.persona.slug().to_string(), risks)
        })
        .collect()
}
