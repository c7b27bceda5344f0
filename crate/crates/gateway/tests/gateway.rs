use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use foresight_core::domain::{Persona, Record, RecordSchema};
use foresight_gateway::{
    BackendConfig, CallContext, FailureKind, FailureSpec, Gateway, GatewayError, MockBackend, MockEntry, MockKey,
    MockScript, Stage,
};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::TcpListener;

const ROUND1: &str = "{\"first-order-id\": 1, \"first-order-implication\": \"People talk less\"}\n\
{\"first-order-id\": 2, \"first-order-implication\": \"Apps know more\"}";

fn entry(stage: Stage, responses: &[&str]) -> MockEntry {
    MockEntry {
        key: MockKey {
            stage: Some(stage),
            ..MockKey::default()
        },
        responses: responses.iter().map(|s| s.to_string()).collect(),
        fail: None,
    }
}

fn gateway(entries: Vec<MockEntry>, retry_limit: u32) -> (Gateway, Arc<MockBackend>) {
    let mock = Arc::new(MockBackend::new(MockScript {
        description: None,
        embedding_dim: Some(32),
        entries,
    }));
    let mut cfg = BackendConfig::mock("inline");
    cfg.retry_limit = retry_limit;
    (Gateway::with_backend(cfg, mock.clone()), mock)
}

#[tokio::test]
async fn canned_text_costs_nothing() {
    let (gw, _) = gateway(vec![entry(Stage::Round1, &[ROUND1])], 3);
    let req = gw.request(Stage::Round1, "", "prompt");
    let resp = gw.complete_chat(&req, &CallContext::new(Stage::Round1)).await.unwrap();
    assert_eq!(resp.text, ROUND1);
    assert_eq!(resp.cost, Some(0.0));
    assert_eq!(resp.attempts, 1);
    assert_eq!(req.temperature, 1.0);
    assert_eq!(req.model, "gpt-4.1-mini");
}

#[tokio::test]
async fn transient_failure_is_retried() {
    let mut e = entry(Stage::Round1, &[ROUND1]);
    e.fail = Some(FailureSpec {
        kind: FailureKind::Network,
        attempts: vec![1],
    });
    let (gw, mock) = gateway(vec![e], 3);
    let req = gw.request(Stage::Round1, "", "prompt");
    let resp = gw.complete_chat(&req, &CallContext::new(Stage::Round1)).await.unwrap();
    assert_eq!(resp.attempts, 2);
    assert_eq!(mock.recorded().len(), 2);
    assert_eq!(gw.totals()[&Stage::Round1].attempts, 2);
}

#[tokio::test]
async fn auth_failure_is_not_retried() {
    let mut e = entry(Stage::Round1, &[ROUND1]);
    e.fail = Some(FailureSpec {
        kind: FailureKind::Auth,
        attempts: vec![],
    });
    let (gw, mock) = gateway(vec![e], 3);
    let err = gw
        .complete_chat(&gw.request(Stage::Round1, "", "p"), &CallContext::new(Stage::Round1))
        .await
        .unwrap_err();
    assert!(matches!(err, GatewayError::Auth(_)));
    assert_eq!(mock.recorded().len(), 1);
}

#[tokio::test]
async fn persistent_timeouts_exhaust_transport_budget() {
    let mut e = entry(Stage::Round1, &[ROUND1]);
    e.fail = Some(FailureSpec {
        kind: FailureKind::Timeout,
        attempts: vec![],
    });
    let (gw, mock) = gateway(vec![e], 2);
    let err = gw
        .complete_chat(&gw.request(Stage::Round1, "", "p"), &CallContext::new(Stage::Round1))
        .await
        .unwrap_err();
    assert!(matches!(err, GatewayError::Timeout(_)));
    assert_eq!(mock.recorded().len(), 3);
}

#[tokio::test]
async fn schema_parse_first_attempt() {
    let (gw, _) = gateway(vec![entry(Stage::Round1, &[ROUND1])], 3);
    let reply = gw
        .chat_with_schema(&gw.request(Stage::Round1, "", "p"), RecordSchema::Round1, &CallContext::new(Stage::Round1))
        .await
        .unwrap();
    assert_eq!(reply.records.len(), 2);
    assert_eq!(reply.attempts(), 1);
    assert!(matches!(reply.records[0], Record::Round1(_)));
}

#[tokio::test]
async fn schema_reasks_after_prose() {
    let (gw, mock) = gateway(vec![entry(Stage::Round1, &["Sure! Here are some ideas.", ROUND1])], 3);
    let reply = gw
        .chat_with_schema(&gw.request(Stage::Round1, "", "p"), RecordSchema::Round1, &CallContext::new(Stage::Round1))
        .await
        .unwrap();
    assert_eq!(reply.attempts(), 2);
    assert_eq!(reply.usage.calls, 2);
    let calls = mock.recorded();
    let second = calls[1].request.as_ref().unwrap();
    assert!(second.user_text.starts_with("p\n\nYour previous reply could not be parsed"));
    assert!(second.user_text.contains("\"first-order-implication\""));
}

#[tokio::test]
async fn schema_exhausts_with_all_raw_attempts() {
    let (gw, _) = gateway(vec![entry(Stage::Round1, &["I cannot comply."])], 2);
    let err = gw
        .chat_with_schema(&gw.request(Stage::Round1, "", "p"), RecordSchema::Round1, &CallContext::new(Stage::Round1))
        .await
        .unwrap_err();
    match err {
        GatewayError::ExhaustedRetries { schema, attempts } => {
            assert_eq!(schema, RecordSchema::Round1);
            assert_eq!(attempts.len(), 3);
            assert!(attempts.iter().all(|a| a.text == "I cannot comply."));
            assert!(attempts[0].error.contains("no JSON records found"));
        }
        e => panic!("unexpected {e}"),
    }
}

#[tokio::test]
async fn identical_requests_send_identical_payloads() {
    let (gw, mock) = gateway(vec![entry(Stage::Round1, &[ROUND1])], 0);
    let req = gw.request(Stage::Round1, "system", "user");
    let ctx = CallContext::new(Stage::Round1).persona(Persona::Curious);
    let a = gw.complete_chat(&req, &ctx).await.unwrap();
    let b = gw.complete_chat(&req, &ctx).await.unwrap();
    assert_eq!(a, b);
    let calls = mock.recorded();
    assert_eq!(calls[0], calls[1]);
}

#[tokio::test]
async fn embeddings_mock() {
    let (gw, _) = gateway(vec![], 0);
    let ctx = CallContext::new(Stage::Embed);
    let out = gw
        .embed_texts(&["same".into(), "same".into(), "a".into(), "b".into()], &ctx)
        .await
        .unwrap();
    assert_eq!(out.vectors.len(), 4);
    assert_eq!(out.vectors[0], out.vectors[1]);
    assert_ne!(out.vectors[2], out.vectors[3]);
    assert_eq!(out.vectors[2].len(), out.vectors[3].len());
    assert!(matches!(gw.embed_texts(&[], &ctx).await, Err(GatewayError::Precondition(_))));
}

#[tokio::test]
async fn missing_credential_names_variable() {
    let cfg = BackendConfig::remote("http://127.0.0.1:9", "FORESIGHT_TEST_UNSET_KEY_7731");
    let err = Gateway::from_config(cfg).unwrap_err();
    assert!(matches!(err, GatewayError::Auth(_)));
    assert!(err.to_string().contains("FORESIGHT_TEST_UNSET_KEY_7731"));
}

/// Serves canned HTTP responses in order, one per connection.
async fn fake_server(responses: Vec<(u16, String)>) -> (String, Arc<AtomicUsize>) {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    tokio::spawn(async move {
        for (status, body) in responses {
            let (mut sock, _) = listener.accept().await.unwrap();
            counter.fetch_add(1, Ordering::SeqCst);
            let mut buf = vec![0u8; 65536];
            let mut read = 0;
            loop {
                let n = sock.read(&mut buf[read..]).await.unwrap();
                read += n;
                let text = String::from_utf8_lossy(&buf[..read]);
                if let Some(head_end) = text.find("\r\n\r\n") {
                    let len = text[..head_end]
                        .lines()
                        .find_map(|l| l.to_ascii_lowercase().strip_prefix("content-length:").map(|v| v.trim().parse::<usize>().unwrap()))
                        .unwrap_or(0);
                    if read >= head_end + 4 + len {
                        break;
                    }
                }
                if n == 0 {
                    break;
                }
            }
            let reply = format!(
                "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            );
            sock.write_all(reply.as_bytes()).await.unwrap();
            sock.shutdown().await.ok();
        }
    });
    (format!("http://{addr}/v1"), hits)
}

fn remote_gateway(endpoint: String, var: &str) -> Gateway {
    std::env::set_var(var, "sk-test");
    let mut cfg = BackendConfig::remote(endpoint, var);
    cfg.retry_limit = 2;
    cfg.timeout_secs = 5.0;
    Gateway::from_config(cfg).unwrap()
}

#[tokio::test]
async fn remote_retries_server_errors() {
    let ok = r#"{"choices":[{"message":{"content":"hello"}}],"usage":{"prompt_tokens":7,"completion_tokens":1}}"#;
    let (endpoint, hits) = fake_server(vec![(503, "{}".into()), (200, ok.into())]).await;
    let gw = remote_gateway(endpoint, "FORESIGHT_TEST_KEY_A");
    let resp = gw
        .complete_chat(&gw.request(Stage::Classify, "s", "u"), &CallContext::new(Stage::Classify))
        .await
        .unwrap();
    assert_eq!(resp.text, "hello");
    assert_eq!((resp.tokens_in, resp.tokens_out, resp.attempts), (7, 1, 2));
    assert_eq!(resp.cost, None);
    assert_eq!(hits.load(Ordering::SeqCst), 2);
}

#[tokio::test]
async fn remote_rejected_key_is_fatal() {
    let (endpoint, hits) = fake_server(vec![(401, "{\"error\":\"bad key\"}".into()), (200, "{}".into())]).await;
    let gw = remote_gateway(endpoint, "FORESIGHT_TEST_KEY_B");
    let err = gw
        .complete_chat(&gw.request(Stage::Classify, "s", "u"), &CallContext::new(Stage::Classify))
        .await
        .unwrap_err();
    assert!(matches!(err, GatewayError::Auth(_)));
    assert_eq!(hits.load(Ordering::SeqCst), 1);
}

#[tokio::test]
async fn remote_embeddings_follow_index() {
    let body = r#"{"data":[{"index":1,"embedding":[0.0,1.0]},{"index":0,"embedding":[1.0,0.0]}],"usage":{"prompt_tokens":2}}"#;
    let (endpoint, _) = fake_server(vec![(200, body.into())]).await;
    let gw = remote_gateway(endpoint, "FORESIGHT_TEST_KEY_C");
    let out = gw
        .embed_texts(&["x".into(), "y".into()], &CallContext::new(Stage::Embed))
        .await
        .unwrap();
    assert_eq!(out.vectors, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
}
