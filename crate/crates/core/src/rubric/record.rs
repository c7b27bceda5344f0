use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::{Batch, EvaluatorProfile, RatingDimension, RubricError, Subdimension};
use crate::domain::RiskSource;

/// The ten Likert values, indexed in `Subdimension::ALL` order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LikertRatings(pub [u8; 10]);

impl LikertRatings {
    pub fn uniform(v: u8) -> Self {
        Self([v; 10])
    }

    pub fn get(&self, item: Subdimension) -> u8 {
        self.0[item as usize]
    }

    pub fn set(&mut self, item: Subdimension, v: u8) {
        self.0[item as usize] = v;
    }

    pub fn iter(&self) -> impl Iterator<Item = (Subdimension, u8)> + '_ {
        Subdimension::ALL.into_iter().map(|s| (s, self.get(s)))
    }
}

/// One evaluator's ratings of one card.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "RecordRow", into = "RecordRow")]
pub struct AnnotationRecord {
    pub evaluator_id: String,
    pub card_id: String,
    pub likelihood: u8,
    pub severity: u8,
    pub systemic: bool,
    pub likert: LikertRatings,
    pub started_at: Option<String>,
    pub submitted_at: Option<String>,
}

/// Flat wire form shared by the CSV and JSONL readers.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordRow {
    evaluator_id: String,
    card_id: String,
    likelihood: u8,
    severity: u8,
    #[serde(deserialize_with = "de_flag", serialize_with = "ser_flag")]
    systemic: bool,
    connectivity: u8,
    plausibility: u8,
    uniqueness: u8,
    novelty: u8,
    originality: u8,
    rarity: u8,
    usability: u8,
    learnability: u8,
    added_value: u8,
    appropriate_amount: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    started_at: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    submitted_at: Option<String>,
}

fn de_flag<'de, D: serde::Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Flag {
        B(bool),
        N(u8),
        S(String),
    }
    match Flag::deserialize(d)? {
        Flag::B(b) => Ok(b),
        Flag::N(0) => Ok(false),
        Flag::N(1) => Ok(true),
        Flag::N(n) => Err(serde::de::Error::custom(format!("invalid systemic flag {n}"))),
        Flag::S(s) => match s.trim().to_ascii_lowercase().as_str() {
            "yes" | "true" | "1" => Ok(true),
            "no" | "false" | "0" => Ok(false),
            other => Err(serde::de::Error::custom(format!("invalid systemic flag `{other}`"))),
        },
    }
}

fn ser_flag<S: serde::Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(if *v { "yes" } else { "no" })
}

impl From<RecordRow> for AnnotationRecord {
    fn from(r: RecordRow) -> Self {
        Self {
            evaluator_id: r.evaluator_id,
            card_id: r.card_id,
            likelihood: r.likelihood,
            severity: r.severity,
            systemic: r.systemic,
            likert: LikertRatings([
                r.connectivity,
                r.plausibility,
                r.uniqueness,
                r.novelty,
                r.originality,
                r.rarity,
                r.usability,
                r.learnability,
                r.added_value,
                r.appropriate_amount,
            ]),
            started_at: r.started_at,
            submitted_at: r.submitted_at,
        }
    }
}

impl From<AnnotationRecord> for RecordRow {
    fn from(r: AnnotationRecord) -> Self {
        let [connectivity, plausibility, uniqueness, novelty, originality, rarity, usability, learnability, added_value, appropriate_amount] =
            r.likert.0;
        Self {
            evaluator_id: r.evaluator_id,
            card_id: r.card_id,
            likelihood: r.likelihood,
            severity: r.severity,
            systemic: r.systemic,
            connectivity,
            plausibility,
            uniqueness,
            novelty,
            originality,
            rarity,
            usability,
            learnability,
            added_value,
            appropriate_amount,
            started_at: r.started_at,
            submitted_at: r.submitted_at,
        }
    }
}

impl AnnotationRecord {
    /// Value on `dim`; systemic maps to 1 (yes) or 0 (no).
    pub fn value(&self, dim: RatingDimension) -> u8 {
        match dim {
            RatingDimension::Systemic => u8::from(self.systemic),
            RatingDimension::Likelihood => self.likelihood,
            RatingDimension::Severity => self.severity,
            RatingDimension::Likert(s) => self.likert.get(s),
        }
    }

    fn out_of_range(&self) -> Option<(String, u8)> {
        let scaled = [("likelihood", self.likelihood), ("severity", self.severity)]
            .into_iter()
            .chain(self.likert.iter().map(|(s, v)| (s.key(), v)));
        scaled
            .into_iter()
            .find(|(_, v)| !(1..=5).contains(v))
            .map(|(k, v)| (k.to_string(), v))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum RejectReason {
    OutOfRange { field: String, value: u8 },
    WrongEvaluator { expected: String },
    NotInBatch,
    RetentionRule { detail: String },
    AttentionFailed { item: Subdimension, value: u8 },
    Duplicate,
}

impl RejectReason {
    pub fn code(&self) -> &'static str {
        match self {
            RejectReason::OutOfRange { .. } => "out-of-range",
            RejectReason::WrongEvaluator { .. } => "wrong-evaluator",
            RejectReason::NotInBatch => "not-in-batch",
            RejectReason::RetentionRule { .. } => "retention-rule",
            RejectReason::AttentionFailed { .. } => "attention-failed",
            RejectReason::Duplicate => "duplicate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    Accepted,
    /// Correct answer on a synthetic check card; kept out of analytics.
    AttentionPassed,
    Rejected(RejectReason),
}

impl Verdict {
    pub fn is_rejected(&self) -> bool {
        matches!(self, Verdict::Rejected(_))
    }
}

pub fn validate_record(record: &AnnotationRecord, profile: &EvaluatorProfile, batch: &Batch) -> Verdict {
    if let Some((field, value)) = record.out_of_range() {
        return Verdict::Rejected(RejectReason::OutOfRange { field, value });
    }
    if record.evaluator_id != batch.evaluator_id || record.evaluator_id != profile.evaluator_id {
        return Verdict::Rejected(RejectReason::WrongEvaluator {
            expected: batch.evaluator_id.clone(),
        });
    }
    let Some(entry) = batch.entry(&record.card_id) else {
        return Verdict::Rejected(RejectReason::NotInBatch);
    };
    if let Some(detail) = profile.retention_failure(&entry.use_case_id) {
        return Verdict::Rejected(RejectReason::RetentionRule { detail });
    }
    match &entry.attention_check {
        None => Verdict::Accepted,
        Some(check) => {
            let value = record.likert.get(check.target);
            if value == 1 {
                Verdict::AttentionPassed
            } else {
                Verdict::Rejected(RejectReason::AttentionFailed {
                    item: check.target,
                    value,
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub seq: u64,
    pub batch_id: String,
    pub record: AnnotationRecord,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerCounts {
    pub submitted: usize,
    pub accepted: usize,
    pub attention_passed: usize,
    pub rejected: usize,
}

/// Append-only store of submissions and their verdicts.
///
/// A later submission for an (evaluator, card) pair that already has an
/// accepted record is logged as a duplicate and never replaces the first.
#[derive(Debug, Clone, Default)]
pub struct AnnotationLedger {
    entries: Vec<LedgerEntry>,
    taken: BTreeSet<(String, String)>,
}

impl AnnotationLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn submit(&mut self, record: AnnotationRecord, profile: &EvaluatorProfile, batch: &Batch) -> &LedgerEntry {
        let key = (record.evaluator_id.clone(), record.card_id.clone());
        let verdict = if self.taken.contains(&key) {
            Verdict::Rejected(RejectReason::Duplicate)
        } else {
            validate_record(&record, profile, batch)
        };
        if !verdict.is_rejected() {
            self.taken.insert(key);
        }
        let seq = self.entries.len() as u64;
        self.entries.push(LedgerEntry {
            seq,
            batch_id: batch.batch_id.clone(),
            record,
            verdict,
        });
        self.entries.last().expect("just pushed")
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    /// Accepted records on real cards.
    pub fn accepted(&self) -> impl Iterator<Item = &AnnotationRecord> {
        self.entries
            .iter()
            .filter(|e| e.verdict == Verdict::Accepted)
            .map(|e| &e.record)
    }

    pub fn counts(&self, batch_id: &str) -> LedgerCounts {
        let mut c = LedgerCounts::default();
        for e in self.entries.iter().filter(|e| e.batch_id == batch_id) {
            c.submitted += 1;
            match e.verdict {
                Verdict::Accepted => c.accepted += 1,
                Verdict::AttentionPassed => c.attention_passed += 1,
                Verdict::Rejected(_) => c.rejected += 1,
            }
        }
        c
    }

    pub fn to_jsonl(&self) -> String {
        self.entries
            .iter()
            .map(|e| serde_json::to_string(e).expect("ledger entry serializes") + "\n")
            .collect()
    }
}

pub fn read_records_csv<R: Read>(reader: R) -> Result<Vec<AnnotationRecord>, RubricError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<RecordRow>().enumerate() {
        let row = row.map_err(|e| RubricError::Parse {
            line: e.position().map(|p| p.line() as usize).unwrap_or(i + 2),
            reason: e.to_string(),
        })?;
        out.push(row.into());
    }
    Ok(out)
}

pub fn read_records_jsonl(text: &str) -> Result<Vec<AnnotationRecord>, RubricError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str::<AnnotationRecord>(l).map_err(|e| RubricError::Parse {
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupKey {
    pub set: RiskSource,
    pub use_case_id: String,
    pub dimension: RatingDimension,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RatingGroups {
    pub groups: BTreeMap<GroupKey, Vec<f64>>,
    /// Records whose card could not be resolved to a risk set.
    pub unresolved: usize,
}

impl RatingGroups {
    pub fn get(&self, set: RiskSource, use_case_id: &str, dimension: RatingDimension) -> Option<&[f64]> {
        self.groups
            .get(&GroupKey {
                set,
                use_case_id: use_case_id.to_string(),
                dimension,
            })
            .map(Vec::as_slice)
    }
}

/// Groups rating values by risk set, use case and dimension.
///
/// `resolve` maps a card id to its risk set and use case id; attention-check
/// cards and unknown cards resolve to `None` and are counted as unresolved.
pub fn export_for_analytics<'a, I, F>(records: I, resolve: F) -> RatingGroups
where
    I: IntoIterator<Item = &'a AnnotationRecord>,
    F: Fn(&str) -> Option<(RiskSource, String)>,
{
    let mut out = RatingGroups::default();
    for r in records {
        let Some((set, use_case_id)) = resolve(&r.card_id) else {
            out.unresolved += 1;
            continue;
        };
        for dimension in RatingDimension::all() {
            out.groups
                .entry(GroupKey {
                    set,
                    use_case_id: use_case_id.clone(),
                    dimension,
                })
                .or_default()
                .push(f64::from(r.value(dimension)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rubric::{AttentionCheck, BatchEntry, Cohort, Familiarity};

    fn profile(fam: Familiarity) -> EvaluatorProfile {
        EvaluatorProfile {
            evaluator_id: "e1".into(),
            cohort: Cohort::Legal,
            familiarity: fam,
            comprehension: [("ai-toy".to_string(), true)].into(),
            attention_passes: 2,
        }
    }

    fn batch() -> Batch {
        Batch {
            batch_id: "batch-001".into(),
            evaluator_id: "e1".into(),
            entries: vec![
                BatchEntry {
                    card_id: "c1".into(),
                    use_case_id: "ai-toy".into(),
                    attention_check: None,
                },
                BatchEntry {
                    card_id: "chk".into(),
                    use_case_id: "ai-toy".into(),
                    attention_check: Some(AttentionCheck {
                        target: Subdimension::Rarity,
                        instruction: "select".into(),
                        source_card: "c1".into(),
                    }),
                },
            ],
        }
    }

    fn record(card: &str) -> AnnotationRecord {
        AnnotationRecord {
            evaluator_id: "e1".into(),
            card_id: card.into(),
            likelihood: 3,
            severity: 4,
            systemic: true,
            likert: LikertRatings::uniform(3),
            started_at: None,
            submitted_at: Some("2025-01-01T00:00:00Z".into()),
        }
    }

    #[test]
    fn compliant_is_accepted() {
        assert_eq!(validate_record(&record("c1"), &profile(Familiarity::Very), &batch()), Verdict::Accepted);
    }

    #[test]
    fn slightly_familiar_fails_retention() {
        let v = validate_record(&record("c1"), &profile(Familiarity::Slightly), &batch());
        assert!(matches!(v, Verdict::Rejected(RejectReason::RetentionRule { .. })));
    }

    #[test]
    fn comprehension_is_per_use_case() {
        let mut p = profile(Familiarity::Very);
        p.comprehension.insert("ai-toy".into(), false);
        let v = validate_record(&record("c1"), &p, &batch());
        assert_eq!(v.clone(), v);
        assert!(matches!(v, Verdict::Rejected(RejectReason::RetentionRule { .. })));
    }

    #[test]
    fn attention_check_item() {
        let p = profile(Familiarity::Moderately);
        let v = validate_record(&record("chk"), &p, &batch());
        assert_eq!(
            v,
            Verdict::Rejected(RejectReason::AttentionFailed {
                item: Subdimension::Rarity,
                value: 3
            })
        );
        let mut ok = record("chk");
        ok.likert.set(Subdimension::Rarity, 1);
        assert_eq!(validate_record(&ok, &p, &batch()), Verdict::AttentionPassed);
    }

    #[test]
    fn out_of_range_and_unassigned() {
        let p = profile(Familiarity::Extremely);
        let mut r = record("c1");
        r.severity = 6;
        assert_eq!(
            validate_record(&r, &p, &batch()),
            Verdict::Rejected(RejectReason::OutOfRange {
                field: "severity".into(),
                value: 6
            })
        );
        assert_eq!(
            validate_record(&record("zz"), &p, &batch()),
            Verdict::Rejected(RejectReason::NotInBatch)
        );
    }

    #[test]
    fn ledger_keeps_first_and_conserves() {
        let p = profile(Familiarity::Very);
        let b = batch();
        let mut ledger = AnnotationLedger::new();
        ledger.submit(record("c1"), &p, &b);
        let mut second = record("c1");
        second.severity = 1;
        assert_eq!(ledger.submit(second, &p, &b).verdict, Verdict::Rejected(RejectReason::Duplicate));
        ledger.submit(record("chk"), &p, &b);
        let c = ledger.counts("batch-001");
        assert_eq!(c.submitted, 3);
        assert_eq!(c.accepted + c.attention_passed + c.rejected, c.submitted);
        let kept: Vec<_> = ledger.accepted().collect();
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].severity, 4);
        assert_eq!(ledger.to_jsonl().lines().count(), 3);
    }

    #[test]
    fn csv_and_jsonl_ingest() {
        let header = "evaluator_id,card_id,likelihood,severity,systemic,connectivity,plausibility,uniqueness,\
                      novelty,originality,rarity,usability,learnability,added_value,appropriate_amount,submitted_at";
        let csv = format!("{header}\ne1,c1,3,4,yes,1,2,3,4,5,1,2,3,4,5,2025-01-01\ne2,c1,2,2,No,1,1,1,1,1,1,1,1,1,1,\n");
        let recs = read_records_csv(csv.as_bytes()).unwrap();
        assert_eq!(recs.len(), 2);
        assert!(recs[0].systemic && !recs[1].systemic);
        assert_eq!(recs[0].likert.get(Subdimension::AppropriateAmount), 5);

        let bad = format!("{header}\ne1,c1,3,4,maybe,1,2,3,4,5,1,2,3,4,5,\n");
        match read_records_csv(bad.as_bytes()).unwrap_err() {
            RubricError::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("{e}"),
        }

        let line = serde_json::to_string(&recs[0]).unwrap();
        let back = read_records_jsonl(&format!("{line}\n\n{line}\n")).unwrap();
        assert_eq!(back, vec![recs[0].clone(), recs[0].clone()]);
        assert!(matches!(
            read_records_jsonl("{\"evaluator_id\":1}").unwrap_err(),
            RubricError::Parse { line: 1, .. }
        ));
    }

    #[test]
    fn export_groups_conserve() {
        let recs = vec![record("a"), record("b"), record("b"), record("chk")];
        let groups = export_for_analytics(&recs, |id| match id {
            "a" => Some((RiskSource::Agent, "ai-toy".into())),
            "b" => Some((RiskSource::HumanOnly, "ai-toy".into())),
            _ => None,
        });
        assert_eq!(groups.unresolved, 1);
        assert_eq!(groups.get(RiskSource::Agent, "ai-toy", RatingDimension::Severity).unwrap(), &[4.0]);
        assert_eq!(groups.get(RiskSource::HumanOnly, "ai-toy", RatingDimension::Systemic).unwrap(), &[1.0, 1.0]);
        for dim in RatingDimension::all() {
            let total: usize = groups.groups.iter().filter(|(k, _)| k.dimension == dim).map(|(_, v)| v.len()).sum();
            assert_eq!(total + groups.unresolved, recs.len());
        }
        assert!(export_for_analytics(&[], |_| None).groups.is_empty());
    }
}
