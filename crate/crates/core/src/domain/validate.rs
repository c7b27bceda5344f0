use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{ClassificationLabel, Order, Persona, PersonaChain, WheelRun};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

/// Invariant violations found in a run; empty when the run is well formed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn contains(&self, message: &str) -> bool {
        self.violations.iter().any(|v| v.message == message)
    }

    fn push(&mut self, location: String, message: impl Into<String>) {
        self.violations.push(Violation {
            location,
            message: message.into(),
        });
    }
}

pub fn validate_wheel(run: &WheelRun) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut seen = BTreeSet::new();
    for chain in &run.chains {
        if !seen.insert(chain.persona) {
            report.push(format!("chain {}", chain.persona), "duplicate persona chain");
        }
        validate_chain(chain, &mut report);
    }

    for (persona, labels) in &run.classifications {
        let thirds: BTreeSet<u32> = run
            .chain(*persona)
            .map(|c| c.third.iter().map(|t| t.id).collect())
            .unwrap_or_default();
        for id in labels.keys() {
            if !thirds.contains(id) {
                report.push(format!("classification {persona}/{id}"), "classified id not in wheel");
            }
        }
    }

    for risk in &run.risks {
        let loc = format!("risk {}", risk.id);
        if risk.text.trim().is_empty() {
            report.push(loc.clone(), "risk text empty");
        }
        for p in &risk.provenance {
            let Some(persona) = p.persona else {
                report.push(loc.clone(), "provenance without persona");
                continue;
            };
            if p.run.is_some_and(|r| r != run.run_index) {
                report.push(loc.clone(), "provenance refers to another run");
            }
            let exists = run
                .chain(persona)
                .is_some_and(|c| c.third.iter().any(|t| t.id == p.consequence_id));
            if !exists {
                report.push(loc.clone(), "provenance id not in wheel");
            } else if run.label(persona, p.consequence_id) != Some(ClassificationLabel::Risk) {
                report.push(loc.clone(), "provenance id not labelled risk");
            }
        }
    }
    report
}

fn validate_chain(chain: &PersonaChain, report: &mut ValidationReport) {
    let persona: Persona = chain.persona;
    let mut ids: BTreeMap<Order, BTreeSet<u32>> = BTreeMap::new();
    let mut second_parent: BTreeMap<u32, Option<u32>> = BTreeMap::new();
    for order in Order::ALL {
        for c in chain.by_order(order) {
            let loc = format!("{persona}/{order}/{}", c.id);
            if c.order != order {
                report.push(loc.clone(), format!("stored under order {order} but marked {}", c.order));
            }
            if c.persona != persona {
                report.push(loc.clone(), "persona mismatch");
            }
            if !ids.entry(order).or_default().insert(c.id) {
                report.push(loc.clone(), "duplicate id");
            }
            if c.text.trim().is_empty() {
                report.push(loc.clone(), "empty text");
            }
            match order {
                Order::First => {
                    if c.parent_first_id.is_some() || c.parent_second_id.is_some() {
                        report.push(loc.clone(), "first-order node has parents");
                    }
                }
                Order::Second => {
                    second_parent.insert(c.id, c.parent_first_id);
                    match c.parent_first_id {
                        None => report.push(loc.clone(), "second-order node missing first-order parent"),
                        Some(pf) if !ids[&Order::First].contains(&pf) => {
                            report.push(loc.clone(), "unresolvable first-order parent")
                        }
                        _ => {}
                    }
                    if c.parent_second_id.is_some() {
                        report.push(loc.clone(), "second-order node has second-order parent");
                    }
                }
                Order::Third => match (c.parent_first_id, c.parent_second_id) {
                    (Some(pf), Some(ps)) => {
                        let firsts = ids.get(&Order::First);
                        if !firsts.is_some_and(|s| s.contains(&pf)) {
                            report.push(loc.clone(), "unresolvable first-order parent");
                        }
                        match second_parent.get(&ps) {
                            None => report.push(loc.clone(), "unresolvable second-order parent"),
                            Some(Some(link)) if *link != pf => {
                                report.push(loc.clone(), "parents do not form a path")
                            }
                            _ => {}
                        }
                    }
                    _ => report.push(loc.clone(), "third-order node missing parents"),
                },
            }
            match (order, &c.impact) {
                (Order::Third, None) => report.push(loc, "impact required at order three"),
                (Order::First | Order::Second, Some(_)) => {
                    report.push(loc, "impact only allowed at order three")
                }
                _ => {}
            }
        }
        ids.entry(order).or_default();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{assign_ids, ConsequenceDraft, ProvenanceRef, RiskSource, SystemicRisk};

    fn sample_run() -> WheelRun {
        let p = Persona::Alarmed;
        let mut chain = PersonaChain::new(p);
        chain.first = assign_ids(p, vec![ConsequenceDraft::first("f")], &[]).unwrap();
        chain.second = assign_ids(p, vec![ConsequenceDraft::second("s", 1)], &chain.first).unwrap();
        let prior: Vec<_> = chain.first.iter().chain(&chain.second).cloned().collect();
        chain.third = assign_ids(
            p,
            vec![ConsequenceDraft::third("t", 1, 1, Some("impact".into()))],
            &prior,
        )
        .unwrap();
        let mut run = WheelRun::new(1, "case");
        run.chains.push(chain);
        run.classifications
            .entry(p)
            .or_default()
            .insert(1, ClassificationLabel::Risk);
        run.risks.push(SystemicRisk {
            id: "r1".into(),
            use_case_id: "case".into(),
            text: "t".into(),
            impact: Some("impact".into()),
            source: RiskSource::Agent,
            pestel: None,
            provenance: vec![ProvenanceRef::agent(1, p, 1)],
        });
        run
    }

    #[test]
    fn well_formed_run_is_clean() {
        assert!(validate_wheel(&sample_run()).is_empty());
    }

    #[test]
    fn missing_impact_flagged() {
        let mut run = sample_run();
        run.chains[0].third[0].impact = None;
        assert!(validate_wheel(&run).contains("impact required at order three"));
    }

    #[test]
    fn classification_for_unknown_id() {
        let mut run = sample_run();
        run.classifications
            .get_mut(&Persona::Alarmed)
            .unwrap()
            .insert(99, ClassificationLabel::Benefit);
        assert!(validate_wheel(&run).contains("classified id not in wheel"));
    }

    #[test]
    fn risk_provenance_must_be_risk_labelled() {
        let mut run = sample_run();
        run.classifications
            .get_mut(&Persona::Alarmed)
            .unwrap()
            .insert(1, ClassificationLabel::Benefit);
        assert!(validate_wheel(&run).contains("provenance id not labelled risk"));
    }

    #[test]
    fn broken_path_flagged() {
        let mut run = sample_run();
        run.chains[0].third[0].parent_second_id = Some(7);
        assert!(validate_wheel(&run).contains("unresolvable second-order parent"));
    }
}
