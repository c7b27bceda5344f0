//! Closed JSONL grammars for model responses.
//!
//! Key names are exactly those the prompts ask for (hyphenated for the wheel
//! rounds). Markdown fences and prose before the first or after the last JSON
//! line are stripped; everything between them must be one JSON object per line.

use std::fmt;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{ClassificationLabel, PestelFactor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordSchema {
    Round1,
    Round2,
    Round3,
    Classification,
    DedupPairs,
    Pestel,
}

impl RecordSchema {
    pub const ALL: [RecordSchema; 6] = [
        RecordSchema::Round1,
        RecordSchema::Round2,
        RecordSchema::Round3,
        RecordSchema::Classification,
        RecordSchema::DedupPairs,
        RecordSchema::Pestel,
    ];

    pub fn keys(self) -> &'static [&'static str] {
        match self {
            RecordSchema::Round1 => &["first-order-id", "first-order-implication"],
            RecordSchema::Round2 => &[
                "second-order-id",
                "second-order-implication",
                "first-order-id",
            ],
            RecordSchema::Round3 => &[
                "systemic-consequence-id",
                "systemic-consequence",
                "first-order-id",
                "second-order-id",
            ],
            RecordSchema::Classification => &["id", "classification"],
            RecordSchema::DedupPairs => &["id_1", "id_2"],
            RecordSchema::Pestel => &["id", "category", "explanation"],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RecordSchema::Round1 => "round1",
            RecordSchema::Round2 => "round2",
            RecordSchema::Round3 => "round3",
            RecordSchema::Classification => "classification",
            RecordSchema::DedupPairs => "dedup-pairs",
            RecordSchema::Pestel => "pestel",
        }
    }

    /// Whether an empty list is a legitimate answer.
    pub fn allows_empty(self) -> bool {
        matches!(self, RecordSchema::DedupPairs)
    }
}

impl fmt::Display for RecordSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Round1Record {
    #[serde(rename = "first-order-id")]
    pub first_order_id: u32,
    #[serde(rename = "first-order-implication")]
    pub first_order_implication: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Round2Record {
    #[serde(rename = "second-order-id")]
    pub second_order_id: u32,
    #[serde(rename = "second-order-implication")]
    pub second_order_implication: String,
    #[serde(rename = "first-order-id")]
    pub first_order_id: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Round3Record {
    #[serde(rename = "systemic-consequence-id")]
    pub systemic_consequence_id: u32,
    #[serde(rename = "systemic-consequence")]
    pub systemic_consequence: String,
    #[serde(rename = "first-order-id")]
    pub first_order_id: u32,
    #[serde(rename = "second-order-id")]
    pub second_order_id: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationRecord {
    pub id: u32,
    #[serde(deserialize_with = "label_ci")]
    pub classification: ClassificationLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DedupPairRecord {
    pub id_1: u32,
    pub id_2: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PestelRecord {
    pub id: u32,
    #[serde(deserialize_with = "pestel_ci")]
    pub category: PestelFactor,
    pub explanation: String,
}

fn label_ci<'de, D: serde::Deserializer<'de>>(d: D) -> Result<ClassificationLabel, D::Error> {
    let s = String::deserialize(d)?;
    s.parse().map_err(|_| {
        serde::de::Error::custom(format!(
            "`{s}` is not one of \"risk\", \"benefit\", \"unclear\""
        ))
    })
}

fn pestel_ci<'de, D: serde::Deserializer<'de>>(d: D) -> Result<PestelFactor, D::Error> {
    let s = String::deserialize(d)?;
    s.parse()
        .map_err(|_| serde::de::Error::custom(format!("`{s}` is not a PESTEL category")))
}

/// One parsed line of model output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Record {
    Round1(Round1Record),
    Round2(Round2Record),
    Round3(Round3Record),
    Classification(ClassificationRecord),
    DedupPair(DedupPairRecord),
    Pestel(PestelRecord),
}

impl Record {
    pub fn schema(&self) -> RecordSchema {
        match self {
            Record::Round1(_) => RecordSchema::Round1,
            Record::Round2(_) => RecordSchema::Round2,
            Record::Round3(_) => RecordSchema::Round3,
            Record::Classification(_) => RecordSchema::Classification,
            Record::DedupPair(_) => RecordSchema::DedupPairs,
            Record::Pestel(_) => RecordSchema::Pestel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum JsonlError {
    #[error("model output is empty")]
    Empty,
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

impl JsonlError {
    fn at(line: usize, reason: impl Into<String>) -> Self {
        JsonlError::Malformed {
            line,
            reason: reason.into(),
        }
    }
}

fn is_decoration(trimmed: &str) -> bool {
    trimmed.is_empty() || trimmed.starts_with("```")
}

/// Parses raw model output against one of the record schemas.
pub fn parse_jsonl(text: &str, schema: RecordSchema) -> Result<Vec<Record>, JsonlError> {
    let lines: Vec<&str> = text.lines().collect();
    let first = lines.iter().position(|l| l.trim_start().starts_with('{'));
    let last = lines.iter().rposition(|l| l.trim_end().ends_with('}'));

    let (Some(first), Some(last)) = (first, last) else {
        let meaningful: Vec<(usize, &str)> = lines
            .iter()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !is_decoration(l))
            .collect();
        return match meaningful.as_slice() {
            [] if schema.allows_empty() => Ok(Vec::new()),
            [(_, "[]")] if schema.allows_empty() => Ok(Vec::new()),
            [] | [(_, "[]")] => Err(JsonlError::Empty),
            [(line, l), ..] if l.starts_with('{') => {
                Err(JsonlError::at(*line, "truncated JSON object"))
            }
            [(line, _), ..] => Err(JsonlError::at(*line, "no JSON records found")),
        };
    };
    if last < first {
        return Err(JsonlError::at(first + 1, "truncated JSON object"));
    }
    // Anything after the last complete object that opens a new one was cut off.
    if let Some(offset) = lines[last + 1..]
        .iter()
        .position(|l| l.trim_start().starts_with('{'))
    {
        return Err(JsonlError::at(last + 2 + offset, "truncated JSON object"));
    }

    let mut out = Vec::new();
    for (idx, raw) in lines.iter().enumerate().take(last + 1).skip(first) {
        let line = idx + 1;
        let trimmed = raw.trim();
        if is_decoration(trimmed) {
            continue;
        }
        let value: Value = serde_json::from_str(trimmed)
            .map_err(|e| JsonlError::at(line, format!("invalid JSON: {e}")))?;
        let Value::Object(map) = value else {
            return Err(JsonlError::at(line, "expected one JSON object per line"));
        };
        out.push(parse_object(map, schema, line)?);
    }
    if out.is_empty() && !schema.allows_empty() {
        return Err(JsonlError::Empty);
    }
    Ok(out)
}

fn parse_object(map: Map<String, Value>, schema: RecordSchema, line: usize) -> Result<Record, JsonlError> {
    let keys = schema.keys();
    if let Some(unknown) = map.keys().find(|k| !keys.contains(&k.as_str())) {
        return Err(JsonlError::at(line, format!("unknown key `{unknown}`")));
    }
    if let Some(missing) = keys.iter().find(|k| !map.contains_key(**k)) {
        return Err(JsonlError::at(line, format!("missing key `{missing}`")));
    }
    let value = Value::Object(map);
    fn typed<T: DeserializeOwned>(v: Value, line: usize) -> Result<T, JsonlError> {
        serde_json::from_value(v).map_err(|e| JsonlError::at(line, format!("invalid value: {e}")))
    }
    Ok(match schema {
        RecordSchema::Round1 => Record::Round1(typed(value, line)?),
        RecordSchema::Round2 => Record::Round2(typed(value, line)?),
        RecordSchema::Round3 => Record::Round3(typed(value, line)?),
        RecordSchema::Classification => Record::Classification(typed(value, line)?),
        RecordSchema::DedupPairs => Record::DedupPair(typed(value, line)?),
        RecordSchema::Pestel => Record::Pestel(typed(value, line)?),
    })
}

/// Serializes records one per line, keys in prompt order.
pub fn to_jsonl(records: &[Record]) -> String {
    let mut out = String::new();
    for r in records {
        // Serializing plain structs of strings and integers cannot fail.
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}
