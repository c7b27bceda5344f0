use std::collections::{BTreeMap, BTreeSet};

use foresight_core::analytics::{saturation_curve, PlateauConfig, SaturationCurve};
use foresight_core::domain::{Persona, StepUsage, SystemicRisk, UseCase, WheelRun};
use foresight_gateway::Gateway;
use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};

use crate::classify::{classify_run, risk_lists};
use crate::dedup::{dedup_across_runs, dedup_risks, DedupDecision, DuplicateJudge, ExactTextJudge, LlmJudge, DEDUP_STEP};
use crate::generate::Scope;
use crate::pestel::{classify_pestel, PESTEL_STEP};
use crate::trace::CallTrace;
use crate::wheel::run_wheel;
use crate::{EngineError, PromptTemplates};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JudgeKind {
    /// The deduplicator model.
    #[default]
    Model,
    /// Trimmed text equality; needs no model calls.
    ExactText,
}

fn default_personas() -> Vec<Persona> {
    Persona::ALL.to_vec()
}

fn default_runs() -> u32 {
    30
}

fn default_parallel() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub use_case: UseCase,
    #[serde(default = "default_personas")]
    pub personas: Vec<Persona>,
    #[serde(default = "default_runs")]
    pub runs: u32,
    /// Runs executed concurrently.
    #[serde(default = "default_parallel")]
    pub parallel: usize,
    /// Order in which runs are folded into the cross-run pool; defaults to
    /// ascending run index.
    #[serde(default)]
    pub run_order: Option<Vec<u32>>,
    #[serde(default)]
    pub pestel: bool,
    #[serde(default)]
    pub judge: JudgeKind,
    #[serde(default)]
    pub plateau: PlateauConfig,
}

impl PipelineConfig {
    pub fn new(use_case: UseCase) -> Self {
        Self {
            use_case,
            personas: default_personas(),
            runs: default_runs(),
            parallel: default_parallel(),
            run_order: None,
            pestel: false,
            judge: JudgeKind::default(),
            plateau: PlateauConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        self.use_case.validate()?;
        if self.runs == 0 {
            return Err(EngineError::Config("runs must be at least 1".into()));
        }
        if self.parallel == 0 {
            return Err(EngineError::Config("parallel must be at least 1".into()));
        }
        if self.personas.is_empty() {
            return Err(EngineError::Config("no personas".into()));
        }
        let distinct: BTreeSet<_> = self.personas.iter().collect();
        if distinct.len() != self.personas.len() {
            return Err(EngineError::Config("personas repeat".into()));
        }
        if let Some(order) = &self.run_order {
            let got: BTreeSet<u32> = order.iter().copied().collect();
            let want: BTreeSet<u32> = (1..=self.runs).collect();
            if got != want || order.len() != self.runs as usize {
                return Err(EngineError::Config(format!(
                    "run_order must list each run 1..={} once",
                    self.runs
                )));
            }
        }
        Ok(())
    }

    pub fn order(&self) -> Vec<u32> {
        self.run_order.clone().unwrap_or_else(|| (1..=self.runs).collect())
    }
}

/// A failure recorded without stopping the pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub persona: Option<Persona>,
    pub step: String,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub run: WheelRun,
    pub traces: Vec<CallTrace>,
    pub decisions: Vec<DedupDecision>,
    /// Risk-labelled items before within-run deduplication.
    pub labelled_risks: usize,
    /// Set when the run could not produce a risk list.
    pub error: Option<FailureEntry>,
}

impl RunOutcome {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub config: PipelineConfig,
    pub runs: Vec<RunOutcome>,
    /// Cross-run pool, in accumulation order.
    pub unique: Vec<SystemicRisk>,
    pub cross_decisions: Vec<DedupDecision>,
    pub cross_traces: Vec<CallTrace>,
    /// Run indices in the order they were folded into the pool.
    pub folded: Vec<u32>,
    pub saturation: Option<SaturationCurve>,
    /// Usage per step over all runs plus the cross-run steps.
    pub accounting: BTreeMap<String, StepUsage>,
    pub failures: Vec<FailureEntry>,
    pub template_hash: String,
}

impl PipelineResult {
    pub fn is_partial(&self) -> bool {
        !self.failures.is_empty()
    }
}

fn judge_for<'a>(kind: JudgeKind, llm: &'a LlmJudge<'a>) -> &'a dyn DuplicateJudge {
    match kind {
        JudgeKind::Model => llm,
        JudgeKind::ExactText => &ExactTextJudge,
    }
}

/// Generation, classification and within-run deduplication for one run.
pub async fn run_one(
    gw: &Gateway,
    templates: &PromptTemplates,
    cfg: &PipelineConfig,
    run_index: u32,
) -> Result<RunOutcome, EngineError> {
    let wheel = run_wheel(gw, templates, &cfg.use_case, &cfg.personas, run_index).await?;
    let mut run = wheel.run;
    let mut out = RunOutcome {
        run: WheelRun::new(run_index, &cfg.use_case.id),
        traces: wheel.traces,
        decisions: Vec::new(),
        labelled_risks: 0,
        error: None,
    };
    let fail = |step: &str, e: EngineError| FailureEntry {
        run: Some(run_index),
        persona: None,
        step: step.into(),
        error: e.to_string(),
    };
    match classify_run(gw, templates, &cfg.use_case, &mut run).await {
        Ok(traces) => out.traces.extend(traces),
        Err(e) => {
            out.error = Some(fail("classify", e));
            out.run = run;
            return Ok(out);
        }
    }
    let lists = risk_lists(&run);
    out.labelled_risks = lists.iter().map(|(_, l)| l.len()).sum();
    let llm = LlmJudge {
        gateway: gw,
        templates,
        use_case: &cfg.use_case,
    };
    match dedup_risks(lists, judge_for(cfg.judge, &llm), &Scope::run(run_index), true).await {
        Ok(d) => {
            run.record_usage(DEDUP_STEP, &d.usage);
            out.traces.extend(d.traces);
            out.decisions = d.decisions;
            run.risks = d.risks;
        }
        Err(e) => out.error = Some(fail("dedup", e)),
    }
    out.run = run;
    Ok(out)
}

/// Runs the full pipeline. Failures of single personas or runs are recorded
/// and the rest of the work continues.
pub async fn run_pipeline(
    gw: &Gateway,
    templates: &PromptTemplates,
    cfg: &PipelineConfig,
) -> Result<PipelineResult, EngineError> {
    cfg.validate()?;
    templates.validate()?;
    let outcomes: Vec<(u32, Result<RunOutcome, EngineError>)> = stream::iter(1..=cfg.runs)
        .map(|i| async move { (i, run_one(gw, templates, cfg, i).await) })
        .buffered(cfg.parallel)
        .collect()
        .await;

    let mut result = PipelineResult {
        config: cfg.clone(),
        runs: Vec::new(),
        unique: Vec::new(),
        cross_decisions: Vec::new(),
        cross_traces: Vec::new(),
        folded: Vec::new(),
        saturation: None,
        accounting: BTreeMap::new(),
        failures: Vec::new(),
        template_hash: templates.content_hash(),
    };
    for (i, outcome) in outcomes {
        match outcome {
            Ok(o) => {
                for f in &o.run.failures {
                    result.failures.push(FailureEntry {
                        run: Some(i),
                        persona: Some(f.persona),
                        step: f.step.clone(),
                        error: f.error.clone(),
                    });
                }
                result.failures.extend(o.error.clone());
                for (step, usage) in &o.run.accounting {
                    result.accounting.entry(step.clone()).or_default().absorb(usage);
                }
                result.runs.push(o);
            }
            Err(e) => result.failures.push(FailureEntry {
                run: Some(i),
                persona: None,
                step: "run".into(),
                error: e.to_string(),
            }),
        }
    }

    let by_index: BTreeMap<u32, &RunOutcome> = result
        .runs
        .iter()
        .filter(|o| o.succeeded())
        .map(|o| (o.run.run_index, o))
        .collect();
    let lists: Vec<(String, Vec<SystemicRisk>)> = cfg
        .order()
        .into_iter()
        .filter_map(|i| by_index.get(&i).map(|o| (o.run.run_id.clone(), o.run.risks.clone())))
        .collect();
    if lists.is_empty() {
        return Ok(result);
    }
    result.folded = cfg.order().into_iter().filter(|i| by_index.contains_key(i)).collect();

    let llm = LlmJudge {
        gateway: gw,
        templates,
        use_case: &cfg.use_case,
    };
    match dedup_across_runs(lists, judge_for(cfg.judge, &llm)).await {
        Ok(d) => {
            result.accounting.entry(DEDUP_STEP.into()).or_default().absorb(&d.usage);
            result.cross_traces = d.traces;
            result.cross_decisions = d.decisions;
            result.unique = d.risks;
            match saturation_curve(&d.cumulative, cfg.plateau) {
                Ok(c) => result.saturation = Some(c),
                Err(e) => result.failures.push(FailureEntry {
                    run: None,
                    persona: None,
                    step: "saturation".into(),
                    error: e.to_string(),
                }),
            }
        }
        Err(e) => {
            result.failures.push(FailureEntry {
                run: None,
                persona: None,
                step: "cross-run-dedup".into(),
                error: e.to_string(),
            });
            return Ok(result);
        }
    }

    if cfg.pestel && !result.unique.is_empty() {
        match classify_pestel(gw, templates, &cfg.use_case, &mut result.unique, &Scope::default()).await {
            Ok((trace, usage)) => {
                result.accounting.entry(PESTEL_STEP.into()).or_default().absorb(&usage);
                result.cross_traces.push(trace);
            }
            Err(e) => result.failures.push(FailureEntry {
                run: None,
                persona: None,
                step: "pestel".into(),
                error: e.to_string(),
            }),
        }
    }
    Ok(result)
}
