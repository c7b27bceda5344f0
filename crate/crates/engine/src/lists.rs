//! JSONL renderings of the lists embedded in prompts.

use foresight_core::domain::{Consequence, PersonaChain};
use serde::Serialize;

fn jsonl<T: Serialize>(rows: impl IntoIterator<Item = T>) -> String {
    let mut out = String::new();
    for r in rows {
        out.push('\n');
        out.push_str(&serde_json::to_string(&r).expect("list rows serialize"));
    }
    out
}

#[derive(Serialize)]
struct FirstPath<'a> {
    #[serde(rename = "ai-use")]
    ai_use: &'a str,
    #[serde(rename = "first-order-id")]
    first_id: u32,
    #[serde(rename = "first-order-implication")]
    first: &'a str,
}

#[derive(Serialize)]
struct SecondPath<'a> {
    #[serde(rename = "ai-use")]
    ai_use: &'a str,
    #[serde(rename = "first-order-id")]
    first_id: u32,
    #[serde(rename = "first-order-implication")]
    first: &'a str,
    #[serde(rename = "second-order-id")]
    second_id: u32,
    #[serde(rename = "second-order-implication")]
    second: &'a str,
}

#[derive(Serialize)]
struct Item<'a> {
    id: u32,
    text: &'a str,
}

#[derive(Serialize)]
struct ConsequenceRow<'a> {
    id: u32,
    consequence: &'a str,
    impact: &'a str,
}

/// Round-two input: one path per first-order consequence.
pub fn first_order_paths(ai_use: &str, chain: &PersonaChain) -> String {
    jsonl(chain.first.iter().map(|c| FirstPath {
        ai_use,
        first_id: c.id,
        first: &c.text,
    }))
}

/// Round-three input: one path per second-order consequence.
pub fn second_order_paths(ai_use: &str, chain: &PersonaChain) -> String {
    jsonl(chain.second.iter().filter_map(|s| {
        let parent = s.parent_first_id?;
        let first = chain.first.iter().find(|f| f.id == parent)?;
        Some(SecondPath {
            ai_use,
            first_id: first.id,
            first: &first.text,
            second_id: s.id,
            second: &s.text,
        })
    }))
}

pub fn consequences(items: &[Consequence]) -> String {
    jsonl(items.iter().map(|c| ConsequenceRow {
        id: c.id,
        consequence: &c.text,
        impact: c.impact.as_deref().unwrap_or(""),
    }))
}

/// Items numbered from 1 in the order given.
pub fn numbered<'a>(texts: impl IntoIterator<Item = &'a str>) -> String {
    jsonl(texts.into_iter().enumerate().map(|(i, text)| Item { id: i as u32 + 1, text }))
}
