use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{RubricError, Subdimension};
use crate::domain::{RiskSource, SystemicRisk, UseCase};

/// Definition printed on every card.
pub const SYSTEMIC_RISK_DEFINITION: &str = "A systemic risk has a significant impact on international \
markets due to its reach, or due to actual or reasonably foreseeable effects on public health, safety, \
public security, fundamental rights, or the society as a whole, that can be propagated at scale across \
the value chain.";

/// One rating question on a card.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardQuestion {
    pub key: String,
    pub prompt: String,
    /// Answer options from lowest to highest code (1-based), or `["no", "yes"]`.
    pub options: Vec<String>,
}

fn five(labels: [&str; 5]) -> Vec<String> {
    labels.iter().map(|s| s.to_string()).collect()
}

fn questions() -> Vec<CardQuestion> {
    let agree = [
        "Strongly disagree",
        "Disagree",
        "Neither agree nor disagree",
        "Agree",
        "Strongly agree",
    ];
    let mut qs = vec![
        CardQuestion {
            key: "likelihood".into(),
            prompt: "How likely is this risk to occur?".into(),
            options: five(["Very unlikely", "Unlikely", "Neutral", "Likely", "Very likely"]),
        },
        CardQuestion {
            key: "severity".into(),
            prompt: "How severe would this risk be?".into(),
            options: five(["Very low", "Low", "Moderate", "High", "Very high"]),
        },
        CardQuestion {
            key: "systemic".into(),
            prompt: "Should this risk be considered systemic according to the definition?".into(),
            options: vec!["no".into(), "yes".into()],
        },
    ];
    qs.extend(Subdimension::ALL.iter().map(|s| CardQuestion {
        key: s.key().into(),
        prompt: s.statement().into(),
        options: five(agree),
    }));
    qs
}

/// Evaluator-facing payload. Carries no origin information.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationCard {
    pub card_id: String,
    pub risk_text: String,
    /// Empty when the risk has no impact clause.
    pub impact_text: String,
    pub use_case: String,
    pub definition: String,
    pub questions: Vec<CardQuestion>,
    /// Present only on attention-check copies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instruction: Option<String>,
}

/// Internal record linking an opaque card id back to its risk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardOrigin {
    pub card_id: String,
    pub risk_id: String,
    pub use_case_id: String,
    pub source: RiskSource,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardIndex {
    pub origins: BTreeMap<String, CardOrigin>,
}

impl CardIndex {
    pub fn get(&self, card_id: &str) -> Option<&CardOrigin> {
        self.origins.get(card_id)
    }
}

// FNV-1a keeps card ids stable across runs without exposing the risk id.
fn opaque_id(risk_id: &str) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in risk_id.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("card-{h:016x}")
}

/// One card per risk, all sharing `definition`.
pub fn build_cards(
    risks: &[SystemicRisk],
    use_case: &UseCase,
    definition: &str,
) -> Result<(Vec<AnnotationCard>, CardIndex), RubricError> {
    let mut cards = Vec::with_capacity(risks.len());
    let mut index = CardIndex::default();
    let qs = questions();
    for risk in risks {
        if risk.text.trim().is_empty() {
            return Err(RubricError::MissingText(risk.id.clone()));
        }
        let card_id = opaque_id(&risk.id);
        if let Some(prev) = index.origins.get(&card_id) {
            return Err(RubricError::CardCollision(prev.risk_id.clone(), risk.id.clone()));
        }
        index.origins.insert(
            card_id.clone(),
            CardOrigin {
                card_id: card_id.clone(),
                risk_id: risk.id.clone(),
                use_case_id: risk.use_case_id.clone(),
                source: risk.source,
            },
        );
        cards.push(AnnotationCard {
            card_id,
            risk_text: risk.text.clone(),
            impact_text: risk.impact.clone().unwrap_or_default(),
            use_case: use_case.name.clone(),
            definition: definition.to_string(),
            questions: qs.clone(),
            instruction: None,
        });
    }
    Ok((cards, index))
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Static printable page with one section per card.
pub fn cards_html(cards: &[AnnotationCard]) -> String {
    let mut out = String::from(
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>Annotation cards</title>\n\
         <style>section.card{border:1px solid #888;margin:1em 0;padding:1em;display:flex;gap:2em;page-break-inside:avoid}\
         .left,.right{flex:1}.definition{font-size:.9em;color:#444}table{border-collapse:collapse}\
         td{padding:.2em .5em}.instruction{color:#b00;font-weight:bold}</style>\n</head>\n<body>\n",
    );
    for card in cards {
        let _ = writeln!(out, "<section class=\"card\" id=\"{}\">", esc(&card.card_id));
        out.push_str("<div class=\"left\">\n");
        let _ = writeln!(out, "<h2 class=\"risk\">{}</h2>", esc(&card.risk_text));
        let _ = writeln!(out, "<p class=\"impact\"><strong>Potential impact:</strong> {}</p>", esc(&card.impact_text));
        let _ = writeln!(out, "<p class=\"use-case\"><strong>AI use:</strong> {}</p>", esc(&card.use_case));
        let _ = writeln!(out, "<p class=\"definition\"><strong>Systemic risk:</strong> {}</p>", esc(&card.definition));
        out.push_str("</div>\n<div class=\"right\">\n");
        if let Some(instr) = &card.instruction {
            let _ = writeln!(out, "<p class=\"instruction\">{}</p>", esc(instr));
        }
        out.push_str("<table>\n");
        for q in &card.questions {
            let _ = writeln!(
                out,
                "<tr><td>{}</td><td>{}</td></tr>",
                esc(&q.prompt),
                q.options.iter().map(|o| format!("&#9744; {}", esc(o))).collect::<Vec<_>>().join(" ")
            );
        }
        out.push_str("</table>\n</div>\n</section>\n");
    }
    out.push_str("</body>\n</html>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::builtin_use_cases;

    fn risk(id: &str, impact: Option<&str>) -> SystemicRisk {
        SystemicRisk {
            id: id.into(),
            use_case_id: "chatbot-companion".into(),
            text: format!("text of {id}"),
            impact: impact.map(str::to_string),
            source: RiskSource::Agent,
            pestel: None,
            provenance: vec![],
        }
    }

    #[test]
    fn one_card_per_risk_with_definition() {
        let uc = &builtin_use_cases()[0];
        let risks = vec![risk("a", Some("x")), risk("b", None), risk("c", Some("z"))];
        let (cards, index) = build_cards(&risks, uc, SYSTEMIC_RISK_DEFINITION).unwrap();
        assert_eq!(cards.len(), 3);
        assert_eq!(index.origins.len(), 3);
        assert!(cards.iter().all(|c| c.definition == SYSTEMIC_RISK_DEFINITION));
        assert_eq!(cards[1].impact_text, "");
        assert_eq!(cards[0].questions.len(), 13);
    }

    #[test]
    fn payload_is_blind() {
        let uc = &builtin_use_cases()[0];
        let mut r = risk("chatbot-run-001-alarmed-3", None);
        r.text = "Users withdraw from friends".into();
        let (cards, _) = build_cards(&[r], uc, "d").unwrap();
        let json = serde_json::to_string(&cards).unwrap();
        assert!(!json.contains("source"));
        assert!(!json.contains("agent"));
        assert!(!json.contains("alarmed"));
        assert!(!cards_html(&cards).contains("alarmed"));
    }

    #[test]
    fn missing_text_rejected() {
        let uc = &builtin_use_cases()[0];
        let mut r = risk("a", None);
        r.text = " ".into();
        assert_eq!(build_cards(&[r], uc, "d").unwrap_err(), RubricError::MissingText("a".into()));
    }
}
