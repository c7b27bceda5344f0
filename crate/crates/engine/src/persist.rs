//! On-disk layout of a pipeline result.

use std::fs;
use std::path::{Path, PathBuf};

use foresight_core::domain::{validate_wheel, StepUsage, SystemicRisk};
use serde::Serialize;

use crate::pipeline::PipelineResult;
use crate::trace::CallTrace;
use crate::EngineError;

fn write(path: &Path, contents: &str, written: &mut Vec<PathBuf>) -> Result<(), EngineError> {
    fs::write(path, contents).map_err(|e| EngineError::io(path, e))?;
    written.push(path.to_path_buf());
    Ok(())
}

fn json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn jsonl<T: Serialize>(rows: &[T]) -> String {
    rows.iter()
        .map(|r| serde_json::to_string(r).expect("serializable") + "\n")
        .collect()
}

pub fn risks_csv(risks: &[SystemicRisk]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "use_case_id", "source", "pestel", "text", "impact", "merged"])
        .expect("in-memory write");
    for r in risks {
        let merged = r.provenance.len().saturating_sub(1).to_string();
        w.write_record([
            r.id.as_str(),
            r.use_case_id.as_str(),
            r.source.as_str(),
            r.pestel.as_ref().map_or("", |p| p.category.as_str()),
            r.text.as_str(),
            r.impact.as_deref().unwrap_or(""),
            merged.as_str(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

pub fn accounting_csv<'a>(rows: impl IntoIterator<Item = (&'a String, &'a StepUsage)>) -> String {
    let mut out = String::from("step,calls,attempts,tokens_in,tokens_out,latency_secs,cost\n");
    for (step, u) in rows {
        let cost = u.cost.map_or_else(|| "NA".to_string(), |c| format!("{c:.6}"));
        out.push_str(&format!(
            "{step},{},{},{},{},{:.3},{cost}\n",
            u.calls, u.attempts, u.tokens_in, u.tokens_out, u.latency_secs
        ));
    }
    out
}

fn parsed_files(dir: &Path, traces: &[CallTrace], written: &mut Vec<PathBuf>) -> Result<(), EngineError> {
    let parsed = dir.join("parsed");
    fs::create_dir_all(&parsed).map_err(|e| EngineError::io(&parsed, e))?;
    for t in traces {
        let Some(records) = t.records() else { continue };
        let mut name = t.stage.name().to_string();
        if let Some(p) = t.persona {
            name = format!("{name}-{}", p.slug());
        }
        if let Some(target) = &t.target {
            name = format!("{name}-{target}");
        }
        write(&parsed.join(format!("{name}.jsonl")), records, written)?;
    }
    Ok(())
}

/// Writes every artifact under `dir` and returns the paths written.
///
/// Per run, `runs/run-NNN/` holds the wheel, raw call traces, parsed JSONL,
/// the within-run dedup log, the risk list and an integrity report. The top
/// level holds the cross-run pool, its dedup log, the saturation curve,
/// accounting and failures.
pub fn write_pipeline(result: &PipelineResult, dir: &Path) -> Result<Vec<PathBuf>, EngineError> {
    let mut written = Vec::new();
    for o in &result.runs {
        let run_dir = dir.join("runs").join(format!("run-{:03}", o.run.run_index));
        fs::create_dir_all(&run_dir).map_err(|e| EngineError::io(&run_dir, e))?;
        write(&run_dir.join("wheel_run.json"), &json(&o.run), &mut written)?;
        write(&run_dir.join("raw.jsonl"), &jsonl(&o.traces), &mut written)?;
        parsed_files(&run_dir, &o.traces, &mut written)?;
        write(&run_dir.join("dedup_log.jsonl"), &jsonl(&o.decisions), &mut written)?;
        write(&run_dir.join("risks.jsonl"), &jsonl(&o.run.risks), &mut written)?;
        write(&run_dir.join("risks.csv"), &risks_csv(&o.run.risks), &mut written)?;
        write(&run_dir.join("integrity.json"), &json(&validate_wheel(&o.run)), &mut written)?;
    }
    fs::create_dir_all(dir).map_err(|e| EngineError::io(dir, e))?;
    write(&dir.join("unique_risks.jsonl"), &jsonl(&result.unique), &mut written)?;
    write(&dir.join("unique_risks.csv"), &risks_csv(&result.unique), &mut written)?;
    write(&dir.join("cross_run_dedup_log.jsonl"), &jsonl(&result.cross_decisions), &mut written)?;
    write(&dir.join("cross_run_raw.jsonl"), &jsonl(&result.cross_traces), &mut written)?;
    if let Some(curve) = &result.saturation {
        write(&dir.join("cumulative.csv"), &curve.to_csv(), &mut written)?;
        write(&dir.join("saturation.json"), &json(curve), &mut written)?;
    }
    write(&dir.join("accounting.json"), &json(&result.accounting), &mut written)?;
    write(&dir.join("accounting.csv"), &accounting_csv(&result.accounting), &mut written)?;
    write(&dir.join("failures.json"), &json(&result.failures), &mut written)?;
    Ok(written)
}
