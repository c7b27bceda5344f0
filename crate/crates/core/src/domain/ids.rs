use std::collections::BTreeMap;

use super::{Consequence, DomainError, Order, Persona};

/// A consequence as parsed from model output, before ids are assigned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsequenceDraft {
    pub order: Order,
    pub text: String,
    pub parent_first_id: Option<u32>,
    pub parent_second_id: Option<u32>,
    pub impact: Option<String>,
}

impl ConsequenceDraft {
    pub fn first(text: impl Into<String>) -> Self {
        Self {
            order: Order::First,
            text: text.into(),
            parent_first_id: None,
            parent_second_id: None,
            impact: None,
        }
    }

    pub fn second(text: impl Into<String>, parent_first: u32) -> Self {
        Self {
            order: Order::Second,
            text: text.into(),
            parent_first_id: Some(parent_first),
            parent_second_id: None,
            impact: None,
        }
    }

    pub fn third(
        text: impl Into<String>,
        parent_first: u32,
        parent_second: u32,
        impact: Option<String>,
    ) -> Self {
        Self {
            order: Order::Third,
            text: text.into(),
            parent_first_id: Some(parent_first),
            parent_second_id: Some(parent_second),
            impact,
        }
    }
}

/// Assigns sequential ids per order (continuing after any ids already present
/// in `prior`) and resolves parent references against `prior` plus the drafts
/// themselves. Deterministic in input order.
pub fn assign_ids(
    persona: Persona,
    drafts: Vec<ConsequenceDraft>,
    prior: &[Consequence],
) -> Result<Vec<Consequence>, DomainError> {
    let mut next: BTreeMap<Order, u32> = BTreeMap::new();
    // second-order id -> its first-order parent
    let mut firsts: Vec<u32> = Vec::new();
    let mut seconds: BTreeMap<u32, Option<u32>> = BTreeMap::new();
    for c in prior {
        let slot = next.entry(c.order).or_insert(0);
        *slot = (*slot).max(c.id);
        match c.order {
            Order::First => firsts.push(c.id),
            Order::Second => {
                seconds.insert(c.id, c.parent_first_id);
            }
            Order::Third => {}
        }
    }

    let mut out = Vec::with_capacity(drafts.len());
    for (index, d) in drafts.into_iter().enumerate() {
        if d.text.trim().is_empty() {
            return Err(DomainError::MalformedDraft {
                index,
                reason: "empty text".into(),
            });
        }
        if d.impact.is_some() && d.order != Order::Third {
            return Err(DomainError::MalformedDraft {
                index,
                reason: format!("impact only allowed at order three, got order {}", d.order),
            });
        }
        match d.order {
            Order::First => {
                if d.parent_first_id.is_some() || d.parent_second_id.is_some() {
                    return Err(DomainError::MalformedDraft {
                        index,
                        reason: "first-order consequence cannot have parents".into(),
                    });
                }
            }
            Order::Second => {
                let pf = d.parent_first_id.ok_or_else(|| DomainError::MalformedDraft {
                    index,
                    reason: "second-order consequence needs a first-order parent".into(),
                })?;
                if d.parent_second_id.is_some() {
                    return Err(DomainError::MalformedDraft {
                        index,
                        reason: "second-order consequence cannot have a second-order parent".into(),
                    });
                }
                if !firsts.contains(&pf) {
                    return Err(DomainError::DanglingParent {
                        index,
                        order: Order::First,
                        parent: pf,
                    });
                }
            }
            Order::Third => {
                let (pf, ps) = match (d.parent_first_id, d.parent_second_id) {
                    (Some(f), Some(s)) => (f, s),
                    _ => {
                        return Err(DomainError::MalformedDraft {
                            index,
                            reason: "third-order consequence needs both parents".into(),
                        })
                    }
                };
                let Some(linked) = seconds.get(&ps) else {
                    return Err(DomainError::DanglingParent {
                        index,
                        order: Order::Second,
                        parent: ps,
                    });
                };
                if !firsts.contains(&pf) {
                    return Err(DomainError::DanglingParent {
                        index,
                        order: Order::First,
                        parent: pf,
                    });
                }
                if let Some(linked) = linked {
                    if *linked != pf {
                        return Err(DomainError::MalformedDraft {
                            index,
                            reason: format!(
                                "second-order id {ps} belongs to first-order id {linked}, not {pf}"
                            ),
                        });
                    }
                }
            }
        }

        let slot = next.entry(d.order).or_insert(0);
        *slot += 1;
        let id = *slot;
        match d.order {
            Order::First => firsts.push(id),
            Order::Second => {
                seconds.insert(id, d.parent_first_id);
            }
            Order::Third => {}
        }
        out.push(Consequence {
            id,
            order: d.order,
            text: d.text,
            parent_first_id: d.parent_first_id,
            parent_second_id: d.parent_second_id,
            persona,
            impact: d.impact,
        });
    }
    Ok(out)
}
