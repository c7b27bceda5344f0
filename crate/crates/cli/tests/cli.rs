use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use foresight_core::domain::{PestelFactor, PestelTag, ProvenanceRef, RiskSource, SystemicRisk};
use foresight_gateway::{FailureKind, FailureSpec, MockEntry, MockKey, MockScript, Stage};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_foresight"))
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn write_config(dir: &Path, backend: &str) -> PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, format!("version = 1\n\n[backend]\n{backend}\n\n[pipeline]\nruns = 2\n")).unwrap();
    path
}

fn risk(uc: &str, i: usize, category: Option<PestelFactor>, source: RiskSource) -> SystemicRisk {
    SystemicRisk {
        id: format!("{uc}-{i}"),
        use_case_id: uc.into(),
        text: format!("risk number {i} for {uc}"),
        impact: Some("harm".into()),
        source,
        pestel: category.map(|category| PestelTag {
            category,
            explanation: String::new(),
        }),
        provenance: vec![ProvenanceRef::agent(i as u32 % 3 + 1, foresight_core::domain::Persona::Alarmed, i as u32)],
    }
}

fn write_risks(path: &Path, risks: &[SystemicRisk]) {
    let body: String = risks.iter().map(|r| serde_json::to_string(r).unwrap() + "\n").collect();
    std::fs::write(path, body).unwrap();
}

#[test]
fn mock_pipeline_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixtures().join("chatbot_small.toml");
    let mut trees = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("out{k}"));
        let o = run(&["pipeline", s(&config), "--runs", "2", "--backend", "mock", "--out", s(&out)]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let mut t = tree(&out);
        let manifest: serde_json::Value = serde_json::from_slice(&t.remove("manifest.json").unwrap()).unwrap();
        assert_eq!(manifest["command"], "pipeline");
        assert_eq!(manifest["exit_code"], 0);
        assert_eq!(manifest["files"].as_object().unwrap().len(), t.len());
        trees.push(t);
    }
    assert_eq!(trees[0], trees[1]);
}

#[test]
fn existing_output_needs_force() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixtures().join("chatbot_small.toml");
    let out = dir.path().join("out");
    assert_eq!(run(&["pipeline", s(&config), "--out", s(&out)]).status.code(), Some(0));
    let o = run(&["pipeline", s(&config), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--force"));
    assert_eq!(run(&["pipeline", s(&config), "--out", s(&out), "--force"]).status.code(), Some(0));
}

#[test]
fn missing_credentials_name_the_variable() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "kind = \"remote\"\nendpoint = \"http://127.0.0.1:9\"\napi_key_env = \"FORESIGHT_TEST_UNSET_KEY\"",
    );
    let o = bin()
        .args(["pipeline", s(&config), "--out", s(&dir.path().join("out"))])
        .env_remove("FORESIGHT_TEST_UNSET_KEY")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("FORESIGHT_TEST_UNSET_KEY"));
}

#[test]
fn bad_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "kind = \"mock\"\nscript = \"x.json\"\nsurprise = 1");
    let o = run(&["pipeline", s(&config), "--out", s(&dir.path().join("out"))]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["pipeline", s(&fixtures().join("chatbot_small.toml")), "--use-case", "nope", "--out", s(&dir.path().join("o2"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope"));
}

#[test]
fn one_failed_run_of_three_is_partial() {
    let dir = tempfile::tempdir().unwrap();
    let mut script = MockScript::load(&fixtures().join("chatbot_small.json")).unwrap();
    for p in foresight_core::domain::Persona::ALL {
        script.entries.push(MockEntry {
            key: MockKey {
                stage: Some(Stage::Round1),
                persona: Some(p),
                run: Some(2),
                ..MockKey::default()
            },
            responses: vec![],
            fail: Some(FailureSpec {
                kind: FailureKind::Network,
                attempts: vec![],
            }),
        });
    }
    std::fs::write(dir.path().join("script.json"), serde_json::to_string(&script).unwrap()).unwrap();
    let config = write_config(dir.path(), "kind = \"mock\"\nscript = \"script.json\"\nretry_limit = 1");
    let out = dir.path().join("out");
    let o = run(&["pipeline", s(&config), "--runs", "3", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let failures: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("failures.json")).unwrap()).unwrap();
    assert!(failures.as_array().unwrap().iter().all(|f| f["run"] == 2));
    assert!(out.join("runs/run-001/risks.jsonl").is_file());
    assert!(out.join("runs/run-003/risks.jsonl").is_file());
    assert_eq!(std::fs::read_to_string(out.join("cumulative.csv")).unwrap().lines().count(), 3);
    assert!(out.join("manifest.json").is_file());
}

#[test]
fn analyze_matches_reference_diversity() {
    let dir = tempfile::tempdir().unwrap();
    let rows: [(&str, [usize; 6], &str); 4] = [
        ("chatbot-companion", [1, 2, 16, 2, 0, 4], "0.62"),
        ("ai-toy", [0, 1, 21, 2, 0, 3], "0.42"),
        ("griefbot", [1, 3, 14, 3, 0, 11], "0.71"),
        ("death-app", [5, 1, 11, 2, 0, 7], "0.76"),
    ];
    let mut risks = Vec::new();
    for (uc, counts, _) in &rows {
        let mut i = 0;
        for (f, &n) in PestelFactor::ALL.iter().zip(counts) {
            for _ in 0..n {
                risks.push(risk(uc, i, Some(*f), RiskSource::Agent));
                i += 1;
            }
        }
    }
    let file = dir.path().join("risks.jsonl");
    write_risks(&file, &risks);
    let report = dir.path().join("report");
    let o = run(&["analyze", "--risks", s(&file), "--report", s(&report)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(report.join("pestel_table.csv")).unwrap();
    for (uc, _, h) in &rows {
        let line = table.lines().find(|l| l.starts_with(&format!("{uc}/agent,"))).unwrap();
        assert!(line.ends_with(&format!(",{h}")), "{line}");
    }
    assert!(report.join("saturation_chatbot-companion.csv").is_file());
    assert!(report.join("manifest.json").is_file());
}

const HEADER: &str = "evaluator_id,card_id,likelihood,severity,systemic,connectivity,plausibility,uniqueness,novelty,originality,rarity,usability,learnability,added_value,appropriate_amount,started_at,submitted_at\n";

fn rating_row(evaluator: &str, card: &str, v: u8) -> String {
    let likert = vec![v.to_string(); 10].join(",");
    format!("{evaluator},{card},{v},{v},yes,{likert},2025-01-01T00:00:00Z,2025-01-01T00:05:00Z\n")
}

#[test]
fn cards_then_rating_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let mut risks: Vec<SystemicRisk> = (0..3).map(|i| risk("griefbot", i, None, RiskSource::Agent)).collect();
    risks.extend((3..6).map(|i| risk("griefbot", i, None, RiskSource::HumanOnly)));
    let file = dir.path().join("risks.jsonl");
    write_risks(&file, &risks[..3]);
    let cards = dir.path().join("cards3");
    let o = run(&["cards", "--risks", s(&file), "--out", s(&cards)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_dir(cards.join("cards")).unwrap().count(), 3);
    let html = std::fs::read_to_string(cards.join("cards.html")).unwrap();
    assert!(!html.contains("agent"));

    write_risks(&file, &risks);
    let cards = dir.path().join("cards6");
    assert_eq!(run(&["cards", "--risks", s(&file), "--out", s(&cards)]).status.code(), Some(0));
    let index: serde_json::Value = serde_json::from_slice(&std::fs::read(cards.join("card_index.json")).unwrap()).unwrap();
    let header = HEADER.to_string();
    let mut body = header.clone();
    for (k, (card, origin)) in index["origins"].as_object().unwrap().iter().enumerate() {
        let base = if origin["source"] == "agent" { 4 } else { 2 };
        for e in 0..4 {
            body.push_str(&rating_row(&format!("e{e}"), card, base + ((k + e) % 2) as u8));
        }
    }
    let ratings = dir.path().join("ratings.csv");
    std::fs::write(&ratings, body).unwrap();
    let report = dir.path().join("report");
    let o = run(&[
        "analyze",
        "--ratings",
        s(&ratings),
        "--cards-index",
        s(&cards.join("card_index.json")),
        "--report",
        s(&report),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(report.join("comparisons/comparison_griefbot_agent_vs_human-only.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 1 + 13);
    assert_eq!(lines[0].split(',').count(), 13);
    assert!(lines.iter().skip(1).all(|l| l.split(',').count() == 13));
    assert!(lines[2].starts_with("Likelihood,12,12,4.50,2.50,"));

    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, header).unwrap();
    let o = run(&["analyze", "--ratings", s(&empty), "--cards-index", s(&cards.join("card_index.json")), "--report", s(&dir.path().join("r2"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn schema_mismatch_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("risks.jsonl");
    let good = serde_json::to_string(&risk("ai-toy", 1, None, RiskSource::Agent)).unwrap();
    std::fs::write(&file, format!("{good}\n{good}\n{{\"id\": \"x\"}}\n")).unwrap();
    let o = run(&["analyze", "--risks", s(&file), "--report", s(&dir.path().join("r"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("risks.jsonl:3:"));

    let ratings = dir.path().join("ratings.csv");
    let header = HEADER.to_string();
    std::fs::write(&ratings, format!("{header}{}e1,c1,9\n", rating_row("e1", "c1", 3))).unwrap();
    let o = run(&["analyze", "--ratings", s(&ratings), "--cards-index", s(&file), "--report", s(&dir.path().join("r3"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"), "{}", String::from_utf8_lossy(&o.stderr));
}

fn http_get(addr: &str, path: &str) -> String {
    let mut stream = TcpStream::connect(addr).unwrap();
    write!(stream, "GET {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").unwrap();
    let mut out = String::new();
    stream.read_to_string(&mut out).unwrap();
    out
}

fn http_post(addr: &str, path: &str, body: &str) -> String {
    let mut stream = TcpStream::connect(addr).unwrap();
    write!(
        stream,
        "POST {path} HTTP/1.1\r\nHost: {addr}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    let mut out = String::new();
    stream.read_to_string(&mut out).unwrap();
    out
}

#[test]
fn serve_answers_health_and_suggest_offline() {
    let mut child = bin()
        .args(["serve", "--config", s(&fixtures().join("chatbot_small.toml")), "--port", "0"])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on http://").unwrap().to_string();
    let health = http_get(&addr, "/health");
    let created = http_post(&addr, "/v1/sessions", r#"{"use_case": "chatbot-companion", "condition": "human-plus-ai"}"#);
    let suggested = http_post(&addr, "/v1/sessions/session-0001/nodes/0/suggest", "");
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(health.starts_with("HTTP/1.1 200"), "{health}");
    assert!(health.to_ascii_lowercase().contains("x-api-version: 1"));
    assert!(created.starts_with("HTTP/1.1 201"), "{created}");
    assert!(suggested.starts_with("HTTP/1.1 201"), "{suggested}");
    assert_eq!(suggested.matches("\"ai_suggested\":true").count(), 3);
}

#[test]
fn serve_bind_failure_exits_one() {
    let taken = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = taken.local_addr().unwrap().port().to_string();
    let o = run(&["serve", "--config", s(&fixtures().join("chatbot_small.toml")), "--port", &port]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot bind"));
}
