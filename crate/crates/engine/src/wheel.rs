use foresight_core::domain::{Order, Persona, PersonaChain, PersonaFailure, StepUsage, UseCase, WheelRun};
use foresight_gateway::Gateway;
use futures::future::join_all;

use crate::generate::{generate_round, Scope};
use crate::trace::CallTrace;
use crate::{EngineError, PromptTemplates};

pub const GENERATION_STEP: &str = "generation";

/// A wheel plus the traces of every call made for it.
#[derive(Debug, Clone)]
pub struct WheelOutcome {
    pub run: WheelRun,
    pub traces: Vec<CallTrace>,
}

struct ChainOutcome {
    chain: PersonaChain,
    traces: Vec<CallTrace>,
    usage: StepUsage,
    failure: Option<PersonaFailure>,
}

async fn run_chain(
    gw: &Gateway,
    templates: &PromptTemplates,
    use_case: &UseCase,
    persona: Persona,
    scope: &Scope,
) -> ChainOutcome {
    let mut out = ChainOutcome {
        chain: PersonaChain::new(persona),
        traces: Vec::new(),
        usage: StepUsage::default(),
        failure: None,
    };
    for round in 1..=3u8 {
        match generate_round(gw, templates, use_case, persona, &out.chain, round, scope).await {
            Ok(r) => {
                out.usage.absorb(&r.usage);
                out.traces.push(r.trace);
                if r.consequences.is_empty() {
                    break;
                }
                let order = Order::from_depth(round).expect("round in 1..=3");
                let slot = match order {
                    Order::First => &mut out.chain.first,
                    Order::Second => &mut out.chain.second,
                    Order::Third => &mut out.chain.third,
                };
                slot.extend(r.consequences);
            }
            Err(e) => {
                let mut trace = CallTrace::new(
                    foresight_gateway::Stage::round(round).expect("round in 1..=3"),
                    Some(persona),
                    scope.target.clone(),
                );
                if let EngineError::Gateway(g) = &e {
                    trace = trace.failed(g);
                } else {
                    trace.error = Some(e.to_string());
                }
                out.traces.push(trace);
                out.failure = Some(PersonaFailure {
                    persona,
                    step: format!("round{round}"),
                    error: e.to_string(),
                });
                break;
            }
        }
    }
    out
}

/// One wheel: each persona runs its three rounds in order, personas run
/// concurrently and never see each other's output. A persona that fails is
/// recorded and the others are kept.
pub async fn run_wheel(
    gw: &Gateway,
    templates: &PromptTemplates,
    use_case: &UseCase,
    personas: &[Persona],
    run_index: u32,
) -> Result<WheelOutcome, EngineError> {
    if personas.is_empty() {
        return Err(EngineError::Config("no personas".into()));
    }
    let scope = Scope::run(run_index);
    let chains = join_all(personas.iter().map(|&p| run_chain(gw, templates, use_case, p, &scope))).await;
    let mut run = WheelRun::new(run_index, &use_case.id);
    let mut traces = Vec::new();
    for c in chains {
        run.record_usage(GENERATION_STEP, &c.usage);
        run.chains.push(c.chain);
        traces.extend(c.traces);
        run.failures.extend(c.failure);
    }
    Ok(WheelOutcome { run, traces })
}
