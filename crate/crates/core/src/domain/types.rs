use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::DomainError;

/// An AI application under study; the hub of a wheel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UseCase {
    pub id: String,
    pub name: String,
    pub description: String,
    pub trl: u8,
    /// Structured case description shown next to a human wheel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<UseCaseProfile>,
}

/// Case panel content: intended function and users, context of use, known
/// limitations and deployment environment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UseCaseProfile {
    pub intended_function: String,
    pub intended_users: String,
    pub context_of_use: String,
    pub known_limitations: String,
    pub deployment_environment: String,
}

impl UseCase {
    pub fn new(
        id: impl Into<String>,
        name: impl Into<String>,
        description: impl Into<String>,
        trl: u8,
    ) -> Result<Self, DomainError> {
        let case = Self {
            id: id.into(),
            name: name.into(),
            description: description.into(),
            trl,
            profile: None,
        };
        case.validate()?;
        Ok(case)
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        if !(1..=9).contains(&self.trl) {
            return Err(DomainError::InvalidUseCase(format!(
                "TRL {} outside 1..=9 for `{}`",
                self.trl, self.id
            )));
        }
        if self.description.trim().is_empty() {
            return Err(DomainError::InvalidUseCase(format!(
                "empty description for `{}`",
                self.id
            )));
        }
        Ok(())
    }
}

/// Attitude toward recent AI developments assigned to one simulated participant.
///
/// Declaration order is the fixed ensemble order used for accumulation.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "kebab-case")]
pub enum Persona {
    Alarmed,
    Skeptical,
    Overwhelmed,
    Curious,
    CautiouslyOptimistic,
    Enthusiastic,
}

impl Persona {
    pub const ALL: [Persona; 6] = [
        Persona::Alarmed,
        Persona::Skeptical,
        Persona::Overwhelmed,
        Persona::Curious,
        Persona::CautiouslyOptimistic,
        Persona::Enthusiastic,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            Persona::Alarmed => "alarmed",
            Persona::Skeptical => "skeptical",
            Persona::Overwhelmed => "overwhelmed",
            Persona::Curious => "curious",
            Persona::CautiouslyOptimistic => "cautiously-optimistic",
            Persona::Enthusiastic => "enthusiastic",
        }
    }

    /// Wording inserted into the persona slot of the prompts.
    pub fn attitude(self) -> &'static str {
        match self {
            Persona::Alarmed => "Alarmed",
            Persona::Skeptical => "Skeptical",
            Persona::Overwhelmed => "Overwhelmed",
            Persona::Curious => "Curious",
            Persona::CautiouslyOptimistic => "Cautiously optimistic",
            Persona::Enthusiastic => "Enthusiastic",
        }
    }

    pub fn index(self) -> usize {
        Persona::ALL.iter().position(|p| *p == self).unwrap_or(0)
    }
}

impl fmt::Display for Persona {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for Persona {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace([' ', '_'], "-");
        Persona::ALL
            .into_iter()
            .find(|p| p.slug() == norm)
            .ok_or_else(|| DomainError::UnknownPersona(s.to_string()))
    }
}

/// Ring of the wheel a consequence sits on.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Order {
    First,
    Second,
    Third,
}

impl Order {
    pub const ALL: [Order; 3] = [Order::First, Order::Second, Order::Third];

    pub fn depth(self) -> u8 {
        match self {
            Order::First => 1,
            Order::Second => 2,
            Order::Third => 3,
        }
    }

    pub fn from_depth(depth: u8) -> Option<Order> {
        match depth {
            1 => Some(Order::First),
            2 => Some(Order::Second),
            3 => Some(Order::Third),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Order::First => "first",
            Order::Second => "second",
            Order::Third => "third",
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One node of a wheel generated by a persona.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Consequence {
    pub id: u32,
    pub order: Order,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_first_id: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_second_id: Option<u32>,
    pub persona: Persona,
    /// Impact clause split out of a third-order sentence, when extraction succeeded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub impact: Option<String>,
}

/// Risk / benefit label assigned to a third-order consequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassificationLabel {
    Risk,
    Benefit,
    Unclear,
}

impl ClassificationLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassificationLabel::Risk => "risk",
            ClassificationLabel::Benefit => "benefit",
            ClassificationLabel::Unclear => "unclear",
        }
    }
}

impl FromStr for ClassificationLabel {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "risk" => Ok(ClassificationLabel::Risk),
            "benefit" => Ok(ClassificationLabel::Benefit),
            "unclear" => Ok(ClassificationLabel::Unclear),
            _ => Err(DomainError::UnknownLabel(s.to_string())),
        }
    }
}

impl fmt::Display for ClassificationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// PESTEL external-factor category.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum PestelFactor {
    Political,
    Economic,
    Social,
    Technological,
    Environmental,
    Legal,
}

impl PestelFactor {
    pub const ALL: [PestelFactor; 6] = [
        PestelFactor::Political,
        PestelFactor::Economic,
        PestelFactor::Social,
        PestelFactor::Technological,
        PestelFactor::Environmental,
        PestelFactor::Legal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PestelFactor::Political => "political",
            PestelFactor::Economic => "economic",
            PestelFactor::Social => "social",
            PestelFactor::Technological => "technological",
            PestelFactor::Environmental => "environmental",
            PestelFactor::Legal => "legal",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for PestelFactor {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase();
        PestelFactor::ALL
            .into_iter()
            .find(|c| c.as_str() == norm)
            .ok_or_else(|| DomainError::UnknownPestel(s.to_string()))
    }
}

impl fmt::Display for PestelFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A PESTEL tag with the classifier's short rationale.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PestelTag {
    pub category: PestelFactor,
    pub explanation: String,
}

/// Where a consolidated risk came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RiskSource {
    Agent,
    HumanOnly,
    HumanPlusAi,
    Leader,
}

impl RiskSource {
    pub fn as_str(self) -> &'static str {
        match self {
            RiskSource::Agent => "agent",
            RiskSource::HumanOnly => "human-only",
            RiskSource::HumanPlusAi => "human-plus-ai",
            RiskSource::Leader => "leader",
        }
    }
}

impl FromStr for RiskSource {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "agent" => Ok(RiskSource::Agent),
            "human-only" => Ok(RiskSource::HumanOnly),
            "human-plus-ai" => Ok(RiskSource::HumanPlusAi),
            "leader" => Ok(RiskSource::Leader),
            other => Err(DomainError::UnknownSource(other.to_string())),
        }
    }
}

impl fmt::Display for RiskSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Composite global key of a generated consequence (ids restart per persona and order).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ProvenanceRef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub persona: Option<Persona>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<String>,
    pub consequence_id: u32,
}

impl ProvenanceRef {
    pub fn agent(run: u32, persona: Persona, consequence_id: u32) -> Self {
        Self {
            run: Some(run),
            persona: Some(persona),
            session: None,
            consequence_id,
        }
    }

    pub fn session(session: impl Into<String>, node_id: u32) -> Self {
        Self {
            run: None,
            persona: None,
            session: Some(session.into()),
            consequence_id: node_id,
        }
    }
}

/// A deduplicated, risk-labelled systemic consequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemicRisk {
    pub id: String,
    pub use_case_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub impact: Option<String>,
    pub source: RiskSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pestel: Option<PestelTag>,
    /// First entry is the surviving item itself; the rest were merged into it.
    #[serde(default)]
    pub provenance: Vec<ProvenanceRef>,
}

/// Resource accounting for one pipeline step.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepUsage {
    pub calls: u64,
    pub attempts: u64,
    pub tokens_in: u64,
    pub tokens_out: u64,
    pub latency_secs: f64,
    /// `None` when no price table covers the model used.
    pub cost: Option<f64>,
}

impl StepUsage {
    pub fn absorb(&mut self, other: &StepUsage) {
        let was_empty = self.calls == 0;
        self.calls += other.calls;
        self.attempts += other.attempts;
        self.tokens_in += other.tokens_in;
        self.tokens_out += other.tokens_out;
        self.latency_secs += other.latency_secs;
        self.cost = match (was_empty, self.cost, other.cost) {
            (true, _, c) => c,
            (false, Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
    }
}

/// Output of one persona across the three rounds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonaChain {
    pub persona: Persona,
    #[serde(default)]
    pub first: Vec<Consequence>,
    #[serde(default)]
    pub second: Vec<Consequence>,
    #[serde(default)]
    pub third: Vec<Consequence>,
}

impl PersonaChain {
    pub fn new(persona: Persona) -> Self {
        Self {
            persona,
            first: Vec::new(),
            second: Vec::new(),
            third: Vec::new(),
        }
    }

    pub fn by_order(&self, order: Order) -> &[Consequence] {
        match order {
            Order::First => &self.first,
            Order::Second => &self.second,
            Order::Third => &self.third,
        }
    }

    pub fn all(&self) -> impl Iterator<Item = &Consequence> {
        self.first.iter().chain(&self.second).chain(&self.third)
    }

    pub fn len(&self) -> usize {
        self.first.len() + self.second.len() + self.third.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A persona whose chain could not be completed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonaFailure {
    pub persona: Persona,
    pub step: String,
    pub error: String,
}

/// One full execution of the pipeline for a use case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WheelRun {
    pub run_id: String,
    pub run_index: u32,
    pub use_case_id: String,
    pub chains: Vec<PersonaChain>,
    #[serde(default)]
    pub classifications: BTreeMap<Persona, BTreeMap<u32, ClassificationLabel>>,
    #[serde(default)]
    pub risks: Vec<SystemicRisk>,
    #[serde(default)]
    pub accounting: BTreeMap<String, StepUsage>,
    #[serde(default)]
    pub failures: Vec<PersonaFailure>,
}

impl WheelRun {
    pub fn new(run_index: u32, use_case_id: impl Into<String>) -> Self {
        let use_case_id = use_case_id.into();
        Self {
            run_id: format!("{use_case_id}-run-{run_index:03}"),
            run_index,
            use_case_id,
            chains: Vec::new(),
            classifications: BTreeMap::new(),
            risks: Vec::new(),
            accounting: BTreeMap::new(),
            failures: Vec::new(),
        }
    }

    pub fn chain(&self, persona: Persona) -> Option<&PersonaChain> {
        self.chains.iter().find(|c| c.persona == persona)
    }

    pub fn consequence_count(&self) -> usize {
        self.chains.iter().map(PersonaChain::len).sum()
    }

    pub fn label(&self, persona: Persona, id: u32) -> Option<ClassificationLabel> {
        self.classifications.get(&persona)?.get(&id).copied()
    }

    pub fn record_usage(&mut self, step: &str, usage: &StepUsage) {
        self.accounting
            .entry(step.to_string())
            .or_default()
            .absorb(usage);
    }
}

const RESULT_MARKER: &str = "this results in the consequence that";
const IMPACT_MARKER: &str = ", leading to";

/// Splits a filled third-round template sentence into its systemic
/// consequence and impact clauses. Returns `None` when the markers are absent.
pub fn split_systemic_sentence(sentence: &str) -> Option<(String, String)> {
    // Markers are ASCII, so byte offsets from the lowercased copy are valid.
    let lower = sentence.to_ascii_lowercase();
    let start = lower.find(RESULT_MARKER)? + RESULT_MARKER.len();
    let rel = lower[start..].rfind(IMPACT_MARKER)?;
    let consequence = sentence[start..start + rel].trim();
    let impact = sentence[start + rel + IMPACT_MARKER.len()..]
        .trim()
        .trim_end_matches('.')
        .trim();
    if consequence.is_empty() || impact.is_empty() {
        return None;
    }
    Some((consequence.to_string(), impact.to_string()))
}
