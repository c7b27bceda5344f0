use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use foresight_gateway::{BackendConfig, Gateway, MockBackend, MockEntry, MockKey, MockScript, Stage};
use foresight_session::{router, SessionService, SessionSettings, SessionStore, API_VERSION_HEADER};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn entry(stage: Stage, text: &str) -> MockEntry {
    MockEntry {
        key: MockKey {
            stage: Some(stage),
            ..MockKey::default()
        },
        responses: vec![text.to_string()],
        fail: None,
    }
}

fn script() -> Vec<MockEntry> {
    vec![
        entry(
            Stage::Round1,
            "{\"first-order-id\": 1, \"first-order-implication\": \"people talk to the avatar daily\"}\n\
             {\"first-order-id\": 2, \"first-order-implication\": \"families disagree about the avatar\"}",
        ),
        entry(
            Stage::Round3,
            "{\"systemic-consequence-id\": 1, \"systemic-consequence\": \"x leads to y, which leads to z; this results in the consequence that mourning rituals change, leading to weaker community ties.\", \"first-order-id\": 1, \"second-order-id\": 1}",
        ),
        entry(
            Stage::Classify,
            "{\"id\": 3, \"classification\": \"risk\"}\n{\"id\": 4, \"classification\": \"risk\"}\n\
             {\"id\": 5, \"classification\": \"risk\"}\n{\"id\": 6, \"classification\": \"benefit\"}",
        ),
        entry(Stage::DedupSelf, "{\"id_1\": 1, \"id_2\": 2}"),
        entry(Stage::Chat, "Think about how children are affected."),
    ]
}

fn service(store: SessionStore) -> (Arc<SessionService>, Arc<MockBackend>) {
    let mock = Arc::new(MockBackend::new(MockScript {
        description: None,
        embedding_dim: None,
        entries: script(),
    }));
    let gw = Arc::new(Gateway::with_backend(BackendConfig::mock("inline"), mock.clone()));
    let settings = SessionSettings {
        chat_window: 2,
        ..SessionSettings::default()
    };
    (Arc::new(SessionService::new(store, gw).with_settings(settings)), mock)
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value, bool) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let versioned = res.headers().get(API_VERSION_HEADER).is_some_and(|v| v == "1");
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value, versioned)
}

async fn raw(app: &Router, uri: &str) -> Vec<u8> {
    let req = Request::builder().uri(uri).body(Body::empty()).unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    res.into_body().collect().await.unwrap().to_bytes().to_vec()
}

async fn create(app: &Router, condition: &str) -> String {
    let (s, v, _) = call(app, Method::POST, "/v1/sessions", Some(json!({"use_case": "griefbot", "condition": condition}))).await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    v["session_id"].as_str().unwrap().to_string()
}

async fn add(app: &Router, id: &str, parent: u32, text: &str, order: u8) -> (StatusCode, Value) {
    let (s, v, _) = call(
        app,
        Method::POST,
        &format!("/v1/sessions/{id}/nodes"),
        Some(json!({"parent": parent, "text": text, "order": order})),
    )
    .await;
    (s, v)
}

async fn build_wheel(app: &Router, id: &str) {
    assert_eq!(add(app, id, 0, "people keep talking to the dead", 1).await.0, StatusCode::CREATED);
    assert_eq!(add(app, id, 1, "grief takes longer", 2).await.0, StatusCode::CREATED);
    for t in ["grief counselling demand rises", "grief counselling demand grows", "estates fight over data", "memories preserved"] {
        assert_eq!(add(app, id, 2, t, 3).await.0, StatusCode::CREATED);
    }
}

#[tokio::test]
async fn health_and_version_header() {
    let (svc, _) = service(SessionStore::in_memory());
    let app = router(svc);
    let (s, v, versioned) = call(&app, Method::GET, "/health", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["status"], "ok");
    assert!(versioned);
    let (s, v, versioned) = call(&app, Method::GET, "/v1/nowhere", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["code"], "not_found");
    assert!(versioned);
}

#[tokio::test]
async fn create_add_finalize_round_trip() {
    let (svc, _) = service(SessionStore::in_memory());
    let app = router(svc);
    let id = create(&app, "human-only").await;
    let other = create(&app, "human-only").await;
    assert_ne!(id, other);
    build_wheel(&app, &id).await;

    let (s, v, _) = call(&app, Method::POST, &format!("/v1/sessions/{id}/finalize"), None).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    let risks = v["risks"].as_array().unwrap();
    assert_eq!(risks.len(), 2);
    assert!(risks.iter().all(|r| r["source"] == "human-only"));
    assert_eq!(risks[0]["provenance"].as_array().unwrap().len(), 2);

    let (_, doc, _) = call(&app, Method::GET, &format!("/v1/sessions/{id}"), None).await;
    assert_eq!(doc["status"], "finalized");
    assert_eq!(doc["final"], true);
    assert_eq!(doc["events"].as_array().unwrap().len(), 8);

    let (s, v, _) = call(&app, Method::POST, &format!("/v1/sessions/{id}/finalize"), None).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(v["code"], "session_finalized");
    let (s, _) = add(&app, &id, 0, "late", 1).await;
    assert_eq!(s, StatusCode::CONFLICT);
    let (_, after, _) = call(&app, Method::GET, &format!("/v1/sessions/{id}"), None).await;
    assert_eq!(after, doc);
}

#[tokio::test]
async fn structural_errors() {
    let (svc, _) = service(SessionStore::in_memory());
    let app = router(svc);
    let (s, v, versioned) =
        call(&app, Method::POST, "/v1/sessions", Some(json!({"use_case": "nope", "condition": "human-only"}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["code"], "unknown_use_case");
    assert!(v["message"].as_str().unwrap().contains("nope"));
    assert!(versioned);

    let id = create(&app, "human-only").await;
    build_wheel(&app, &id).await;
    let (s, v) = add(&app, &id, 3, "too deep", 4).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["code"], "depth_violation");
    let (s, v) = add(&app, &id, 42, "orphan", 2).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["detail"]["node"], 42);

    let (s, v, _) = call(&app, Method::POST, "/v1/sessions", Some(json!({"use_case": "griefbot"}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["code"], "invalid_body");

    let empty = create(&app, "human-only").await;
    let (s, v, _) = call(&app, Method::POST, &format!("/v1/sessions/{empty}/finalize"), None).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["code"], "no_third_order");
}

#[tokio::test]
async fn human_only_sessions_refuse_ai_assist() {
    let (svc, mock) = service(SessionStore::in_memory());
    let app = router(svc);
    let id = create(&app, "human-only").await;
    let (s, v, _) = call(&app, Method::POST, &format!("/v1/sessions/{id}/nodes/0/suggest"), None).await;
    assert_eq!(s, StatusCode::FORBIDDEN);
    assert_eq!(v["code"], "forbidden");
    let (s, _, _) = call(&app, Method::POST, &format!("/v1/sessions/{id}/chat"), Some(json!({"message": "hi"}))).await;
    assert_eq!(s, StatusCode::FORBIDDEN);
    assert!(mock.recorded().is_empty());
    let (_, doc, _) = call(&app, Method::GET, &format!("/v1/sessions/{id}/export"), None).await;
    assert_eq!(doc["events"].as_array().unwrap().len(), 1);
    assert!(doc["nodes"].as_array().unwrap().iter().all(|n| n["ai_suggested"] == false));
}

#[tokio::test]
async fn suggestions_are_flagged_and_editable() {
    let (svc, _) = service(SessionStore::in_memory());
    let app = router(svc);
    let id = create(&app, "human-plus-ai").await;
    let (s, v, _) = call(&app, Method::POST, &format!("/v1/sessions/{id}/nodes/0/suggest"), None).await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    let nodes = v["nodes"].as_array().unwrap();
    assert_eq!(nodes.len(), 2);
    assert!(nodes.iter().all(|n| n["ai_suggested"] == true && n["order"] == "first"));

    let (s, edited, _) = call(
        &app,
        Method::PATCH,
        &format!("/v1/sessions/{id}/nodes/1"),
        Some(json!({"text": "people visit the avatar daily"})),
    )
    .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(edited["ai_suggested"], true);
    assert_eq!(edited["text"], "people visit the avatar daily");

    let (s, _, _) = call(&app, Method::DELETE, &format!("/v1/sessions/{id}/nodes/2"), None).await;
    assert_eq!(s, StatusCode::NO_CONTENT);

    add(&app, &id, 1, "rituals move online", 2).await;
    let (s, v, _) = call(&app, Method::POST, &format!("/v1/sessions/{id}/nodes/3/suggest"), None).await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    let third = &v["nodes"][0];
    assert_eq!(third["order"], "third");
    assert_eq!(third["text"], "mourning rituals change");
    assert_eq!(third["impact"], "weaker community ties");

    let (s, v, _) = call(&app, Method::POST, &format!("/v1/sessions/{id}/nodes/4/suggest"), None).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["code"], "depth_violation");

    let (_, doc, _) = call(&app, Method::GET, &format!("/v1/sessions/{id}"), None).await;
    let kinds: Vec<&str> = doc["events"].as_array().unwrap().iter().map(|e| e["type"].as_str().unwrap()).collect();
    assert_eq!(kinds, ["create", "suggest", "edit", "delete", "add", "suggest"]);
}

#[tokio::test]
async fn chat_window_is_bounded() {
    let (svc, mock) = service(SessionStore::in_memory());
    let app = router(svc);
    let id = create(&app, "human-plus-ai").await;
    for k in 1..=4 {
        let (s, v, _) =
            call(&app, Method::POST, &format!("/v1/sessions/{id}/chat"), Some(json!({"message": format!("probe {k}")}))).await;
        assert_eq!(s, StatusCode::OK);
        assert_eq!(v["reply"], "Think about how children are affected.");
    }
    let calls = mock.recorded();
    let last = calls.last().unwrap().request.as_ref().unwrap();
    assert!(!last.user_text.contains("probe 1"));
    assert!(last.user_text.contains("probe 2"));
    assert!(last.user_text.contains("probe 3"));
    assert!(last.user_text.ends_with("Participant: probe 4"));
    let (_, doc, _) = call(&app, Method::GET, &format!("/v1/sessions/{id}"), None).await;
    assert!(doc["nodes"].as_array().unwrap().is_empty());
}

#[tokio::test]
async fn export_import_export_is_byte_stable() {
    let (svc, _) = service(SessionStore::in_memory());
    let app = router(svc);
    let id = create(&app, "human-plus-ai").await;
    build_wheel(&app, &id).await;
    call(&app, Method::POST, &format!("/v1/sessions/{id}/nodes/0/suggest"), None).await;
    call(&app, Method::POST, &format!("/v1/sessions/{id}/chat"), Some(json!({"message": "what else?"}))).await;
    let first = raw(&app, &format!("/v1/sessions/{id}/export")).await;
    let doc: Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(doc["final"], false);

    let (s, v, _) = call(&app, Method::POST, "/v1/sessions/import", Some(doc.clone())).await;
    assert_eq!(s, StatusCode::CONFLICT, "{v}");

    let (svc2, _) = service(SessionStore::in_memory());
    let app2 = router(svc2);
    let (s, v, _) = call(&app2, Method::POST, "/v1/sessions/import", Some(doc.clone())).await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    let second = raw(&app2, &format!("/v1/sessions/{id}/export")).await;
    assert_eq!(first, second);

    let mut forged = doc;
    forged["condition"] = json!("human-only");
    let (s, v, _) = call(&app2, Method::POST, "/v1/sessions/import", Some(forged)).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["code"], "invalid_document");
}

#[tokio::test]
async fn directory_store_survives_restart() {
    let dir = tempfile::tempdir().unwrap();
    let before = {
        let (svc, _) = service(SessionStore::open(dir.path()).unwrap());
        let app = router(svc);
        let id = create(&app, "human-only").await;
        build_wheel(&app, &id).await;
        call(&app, Method::POST, &format!("/v1/sessions/{id}/finalize"), None).await;
        raw(&app, &format!("/v1/sessions/{id}/export")).await
    };
    let session_dir = dir.path().join("session-0001");
    let log = std::fs::read_to_string(session_dir.join("events.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 8);
    assert!(session_dir.join("snapshot.json").is_file());

    let (svc, _) = service(SessionStore::open(dir.path()).unwrap());
    let app = router(svc);
    assert_eq!(raw(&app, "/v1/sessions/session-0001/export").await, before);
    assert_eq!(create(&app, "human-only").await, "session-0002");
}
