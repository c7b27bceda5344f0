use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::EngineError;

/// Template names, their file names, and the slots each one must use.
const SPECS: [(&str, &[&str]); 7] = [
    ("round1", &["ai_attitude", "ai_use"]),
    ("round2", &["ai_attitude", "paths"]),
    ("round3", &["ai_attitude", "paths"]),
    ("classify", &["ai_attitude", "consequences"]),
    ("dedup_self", &["items"]),
    ("dedup_cross", &["first_list", "second_list"]),
    ("pestel", &["risks"]),
];

/// Prompt texts with `{{slot}}` placeholders. Defaults are compiled in; any
/// `<name>.txt` in an override directory replaces the matching default.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PromptTemplates {
    pub round1: String,
    pub round2: String,
    pub round3: String,
    pub classify: String,
    pub dedup_self: String,
    pub dedup_cross: String,
    pub pestel: String,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        let t = |s: &str| s.trim_end().to_string();
        Self {
            round1: t(include_str!("../prompts/round1.txt")),
            round2: t(include_str!("../prompts/round2.txt")),
            round3: t(include_str!("../prompts/round3.txt")),
            classify: t(include_str!("../prompts/classify.txt")),
            dedup_self: t(include_str!("../prompts/dedup_self.txt")),
            dedup_cross: t(include_str!("../prompts/dedup_cross.txt")),
            pestel: t(include_str!("../prompts/pestel.txt")),
        }
    }
}

fn slots(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(start) = rest.find("{{") {
        let Some(len) = rest[start + 2..].find("}}") else {
            break;
        };
        out.push(&rest[start + 2..start + 2 + len]);
        rest = &rest[start + 2 + len + 2..];
    }
    out
}

impl PromptTemplates {
    pub fn with_overrides(dir: &Path) -> Result<Self, EngineError> {
        let mut t = Self::default();
        for (name, _) in SPECS {
            let path = dir.join(format!("{name}.txt"));
            if path.exists() {
                let text = std::fs::read_to_string(&path).map_err(|e| EngineError::io(&path, e))?;
                *t.slot_mut(name) = text.trim_end().to_string();
            }
        }
        t.validate()?;
        Ok(t)
    }

    fn slot_mut(&mut self, name: &str) -> &mut String {
        match name {
            "round1" => &mut self.round1,
            "round2" => &mut self.round2,
            "round3" => &mut self.round3,
            "classify" => &mut self.classify,
            "dedup_self" => &mut self.dedup_self,
            "dedup_cross" => &mut self.dedup_cross,
            "pestel" => &mut self.pestel,
            _ => unreachable!("closed template set"),
        }
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        Some(match name {
            "round1" => &self.round1,
            "round2" => &self.round2,
            "round3" => &self.round3,
            "classify" => &self.classify,
            "dedup_self" => &self.dedup_self,
            "dedup_cross" => &self.dedup_cross,
            "pestel" => &self.pestel,
            _ => return None,
        })
    }

    /// Every template uses exactly its declared slots.
    pub fn validate(&self) -> Result<(), EngineError> {
        for (name, required) in SPECS {
            let text = self.get(name).expect("closed template set");
            let used = slots(text);
            if let Some(bad) = used.iter().find(|s| !required.contains(s)) {
                return Err(EngineError::Template {
                    name: name.into(),
                    reason: format!("unknown slot `{{{{{bad}}}}}`"),
                });
            }
            if let Some(missing) = required.iter().find(|s| !used.contains(s)) {
                return Err(EngineError::Template {
                    name: name.into(),
                    reason: format!("slot `{{{{{missing}}}}}` not used"),
                });
            }
        }
        Ok(())
    }

    /// Fills `name`'s slots. Every declared slot must be supplied.
    pub fn render(&self, name: &str, values: &[(&str, &str)]) -> Result<String, EngineError> {
        let text = self.get(name).ok_or_else(|| EngineError::Template {
            name: name.into(),
            reason: "no such template".into(),
        })?;
        let (_, required) = SPECS.iter().find(|(n, _)| *n == name).expect("closed template set");
        let mut out = text.to_string();
        for slot in *required {
            let value = values
                .iter()
                .find(|(k, _)| k == slot)
                .map(|(_, v)| *v)
                .ok_or_else(|| EngineError::Template {
                    name: name.into(),
                    reason: format!("no value for slot `{slot}`"),
                })?;
            out = out.replace(&format!("{{{{{slot}}}}}"), value);
        }
        Ok(out)
    }

    /// SHA-256 over all templates in fixed order, hex encoded.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        for (name, _) in SPECS {
            h.update(name.as_bytes());
            h.update([0]);
            h.update(self.get(name).expect("closed template set").as_bytes());
            h.update([0]);
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}
