use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use foresight_core::analytics::{
    compare_samples, comparison_csv, pestel_table_csv, saturation_curve, shannon_diversity, PlateauConfig,
    SetSummary, BOOTSTRAP_ITERATIONS,
};
use foresight_core::domain::{RiskSource, SystemicRisk};
use foresight_core::rubric::{
    export_for_analytics, read_records_csv, read_records_jsonl, AnnotationRecord, CardIndex, RatingDimension,
};
use foresight_core::PestelDistribution;
use serde::Serialize;

use super::{read_risks, write_file};
use crate::manifest::{prepare_out_dir, RunManifest};
use crate::AnalyzeArgs;

#[derive(Debug, Default, Serialize)]
struct Report {
    diversity: Vec<DiversityRow>,
    saturation: Vec<SaturationRow>,
    summaries: Vec<SetSummary<f64>>,
    comparisons: Vec<String>,
    unresolved_ratings: usize,
    notes: Vec<String>,
}

#[derive(Debug, Serialize)]
struct DiversityRow {
    use_case_id: String,
    source: RiskSource,
    n_risks: usize,
    n_tagged: u64,
    h: Option<f64>,
}

#[derive(Debug, Serialize)]
struct SaturationRow {
    use_case_id: String,
    runs: usize,
    unique: usize,
    plateau_run: Option<usize>,
}

fn read_ratings(path: &Path) -> Result<Vec<AnnotationRecord>, String> {
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let records = if is_csv {
        let f = std::fs::File::open(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        read_records_csv(f)
    } else {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        read_records_jsonl(&text)
    }
    .map_err(|e| format!("{}: {e}", path.display()))?;
    if records.is_empty() {
        return Err(format!("{}: no rating records", path.display()));
    }
    Ok(records)
}

/// Cumulative unique risks per run: a pooled risk first appears in the
/// earliest run among its provenance.
fn cumulative_by_run(risks: &[&SystemicRisk]) -> Vec<usize> {
    let firsts: Vec<u32> = risks
        .iter()
        .filter_map(|r| r.provenance.iter().filter_map(|p| p.run).min())
        .collect();
    let last = firsts.iter().copied().max().unwrap_or(0);
    (1..=last).map(|k| firsts.iter().filter(|&&f| f <= k).count()).collect()
}

fn analyze_risks(risks: &[SystemicRisk], out: &Path, report: &mut Report, written: &mut Vec<std::path::PathBuf>) -> Result<(), String> {
    let mut groups: BTreeMap<(String, RiskSource), Vec<&SystemicRisk>> = BTreeMap::new();
    for r in risks {
        groups.entry((r.use_case_id.clone(), r.source)).or_default().push(r);
    }
    let mut table = Vec::new();
    for ((uc, source), rs) in &groups {
        let dist = PestelDistribution::from_risks(rs.iter().copied());
        let h = shannon_diversity(&dist).ok();
        report.diversity.push(DiversityRow {
            use_case_id: uc.clone(),
            source: *source,
            n_risks: rs.len(),
            n_tagged: dist.n,
            h,
        });
        if dist.n > 0 {
            table.push((format!("{uc}/{source}"), dist));
        }
        if *source == RiskSource::Agent {
            let counts = cumulative_by_run(rs);
            if counts.is_empty() {
                continue;
            }
            let curve = saturation_curve(&counts, PlateauConfig::default()).map_err(|e| e.to_string())?;
            write_file(&out.join(format!("saturation_{uc}.csv")), curve.to_csv(), written)?;
            report.saturation.push(SaturationRow {
                use_case_id: uc.clone(),
                runs: counts.len(),
                unique: *counts.last().expect("non-empty"),
                plateau_run: curve.plateau_run,
            });
        }
    }
    if table.is_empty() {
        report.notes.push("no PESTEL-tagged risks; table skipped".into());
    } else {
        write_file(&out.join("pestel_table.csv"), pestel_table_csv(&table).map_err(|e| e.to_string())?, written)?;
    }
    Ok(())
}

fn analyze_ratings(
    records: &[AnnotationRecord],
    index: &CardIndex,
    cohort: &str,
    seed: u64,
    out: &Path,
    report: &mut Report,
    written: &mut Vec<std::path::PathBuf>,
) -> Result<(), String> {
    let resolve = |card: &str| index.get(card).map(|o| (o.source, o.use_case_id.clone()));
    let groups = export_for_analytics(records, resolve);
    report.unresolved_ratings = groups.unresolved;

    let mut by_set: BTreeMap<(String, RiskSource), Vec<AnnotationRecord>> = BTreeMap::new();
    for r in records {
        if let Some((set, uc)) = resolve(&r.card_id) {
            by_set.entry((uc, set)).or_default().push(r.clone());
        }
    }
    if by_set.is_empty() {
        return Err("no rating refers to a card in the index".into());
    }
    for ((uc, set), rs) in &by_set {
        let summary = SetSummary::from_records(&format!("{uc}/{set}"), cohort, rs).map_err(|e| e.to_string())?;
        report.summaries.push(summary);
    }

    let cases: BTreeSet<&String> = by_set.keys().map(|(uc, _)| uc).collect();
    for uc in cases {
        let sets: Vec<RiskSource> = by_set.keys().filter(|(u, _)| u == uc).map(|(_, s)| *s).collect();
        for (i, &a) in sets.iter().enumerate() {
            for &b in &sets[i + 1..] {
                let mut rows = Vec::new();
                for dim in RatingDimension::all() {
                    let (Some(xa), Some(xb)) = (groups.get(a, uc, dim), groups.get(b, uc, dim)) else { continue };
                    match compare_samples(dim.label(), xa, xb, BOOTSTRAP_ITERATIONS, seed) {
                        Ok(row) => rows.push(row),
                        Err(e) => report.notes.push(format!("{uc} {a} vs {b} {dim}: {e}")),
                    }
                }
                if rows.is_empty() {
                    continue;
                }
                let name = format!("comparison_{uc}_{a}_vs_{b}.csv");
                write_file(&out.join("comparisons").join(&name), comparison_csv(&rows), written)?;
                report.comparisons.push(name);
            }
        }
    }
    Ok(())
}

pub fn run(args: AnalyzeArgs, seed: u64) -> Result<u8, String> {
    if args.risks.is_empty() && args.ratings.is_empty() {
        return Err("nothing to analyze: give --risks and/or --ratings".into());
    }
    let mut risks = Vec::new();
    for p in &args.risks {
        risks.extend(read_risks(p)?);
    }
    let mut records = Vec::new();
    for p in &args.ratings {
        records.extend(read_ratings(p)?);
    }
    let index: Option<CardIndex> = match &args.cards_index {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?;
            Some(serde_json::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))?)
        }
        None => None,
    };
    if !records.is_empty() && index.is_none() {
        return Err("--ratings needs --cards-index to resolve cards to risk sets".into());
    }

    prepare_out_dir(&args.report, args.force)?;
    let mut manifest = RunManifest::new("analyze", &args.report, seed);
    let mut report = Report::default();
    let mut written = Vec::new();
    if !risks.is_empty() {
        analyze_risks(&risks, &args.report, &mut report, &mut written)?;
    }
    if let Some(index) = &index {
        if !records.is_empty() {
            analyze_ratings(&records, index, &args.cohort, seed, &args.report, &mut report, &mut written)?;
        }
    }
    let body = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    write_file(&args.report.join("analysis.json"), body, &mut written)?;
    manifest.add_files(&written)?;
    manifest.write(0)?;
    for d in &report.diversity {
        let h = d.h.map_or_else(|| "NA".into(), |h| format!("{h:.2}"));
        println!("{} {}: {} risks, H = {h}", d.use_case_id, d.source, d.n_risks);
    }
    Ok(0)
}
