//! Overpass client and chat gateway against scripted local HTTP servers.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use dipolar_core::ingest::{load_geojson, BoundingBox, OverpassClient};
use dipolar_core::net::RetryPolicy;
use dipolar_core::rag::{assemble_prompt, Gateway, HttpGateway, NavigationTask, ProviderConfig};
use dipolar_core::Error;

struct Request {
    head: String,
    body: String,
}

/// Serve canned `(status, body)` replies in order, the last one repeating.
fn serve(replies: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<Request>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/api", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = seen.clone();
    thread::spawn(move || {
        for (i, stream) in listener.incoming().enumerate() {
            let Ok(stream) = stream else { break };
            let (status, body) = replies[i.min(replies.len() - 1)].clone();
            if let Some(req) = read_request(&stream) {
                log.lock().unwrap().push(req);
            }
            let mut stream = stream;
            let _ = write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
        }
    });
    (url, seen)
}

fn read_request(stream: &TcpStream) -> Option<Request> {
    let mut reader = BufReader::new(stream);
    let mut head = String::new();
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).ok()? == 0 {
            return None;
        }
        if line == "\r\n" {
            break;
        }
        head.push_str(&line);
    }
    let len = head
        .lines()
        .find_map(|l| {
            let (k, v) = l.split_once(':')?;
            k.eq_ignore_ascii_case("content-length")
                .then(|| v.trim().parse::<usize>().ok())?
        })
        .unwrap_or(0);
    let mut body = vec![0; len];
    reader.read_exact(&mut body).ok()?;
    Some(Request {
        head,
        body: String::from_utf8_lossy(&body).into_owned(),
    })
}

const OVERPASS_OK: &str = r#"{"elements":[
 {"type":"way","id":10,"tags":{"highway":"residential","name":"Hafenweg"},
  "geometry":[{"lat":51.950,"lon":7.630},{"lat":51.951,"lon":7.632}]},
 {"type":"way","id":11,"tags":{"highway":"primary","name":"Albersloher Weg"},
  "geometry":[{"lat":51.951,"lon":7.632},{"lat":51.949,"lon":7.634}]}]}"#;

fn bbox() -> BoundingBox {
    "51.94,7.62,51.96,7.64".parse().unwrap()
}

fn overpass(url: &str, cache: &std::path::Path) -> OverpassClient {
    OverpassClient {
        endpoint_url: url.to_string(),
        cache_dir: Some(cache.to_path_buf()),
        retry: RetryPolicy::no_delay(3),
        timeout: Duration::from_secs(5),
    }
}

#[test]
fn overpass_fetch_then_cache_hit() {
    let (url, seen) = serve(vec![(200, OVERPASS_OK.to_string())]);
    let dir = tempfile::tempdir().unwrap();
    let client = overpass(&url, dir.path());
    let first = client.fetch(&bbox()).unwrap();
    assert_eq!(seen.lock().unwrap().len(), 1);
    assert!(seen.lock().unwrap()[0]
        .body
        .contains("way[\"highway\"][\"name\"]"));
    let second = client.fetch(&bbox()).unwrap();
    assert_eq!(
        seen.lock().unwrap().len(),
        1,
        "second fetch must come from the cache"
    );
    assert_eq!(first, second);
    assert_eq!(load_geojson(&first).unwrap().streets.len(), 2);
}

#[test]
fn malformed_overpass_payload_is_not_cached() {
    let (url, _) = serve(vec![(200, "<html>busy</html>".to_string())]);
    let dir = tempfile::tempdir().unwrap();
    let client = overpass(&url, dir.path());
    assert!(matches!(client.fetch(&bbox()), Err(Error::Parse { .. })));
    assert!(!client.cache_path(&bbox()).unwrap().exists());
}

#[test]
fn overpass_rate_limit_retries_then_fails_hard() {
    let (url, seen) = serve(vec![(429, "{}".to_string())]);
    let dir = tempfile::tempdir().unwrap();
    match overpass(&url, dir.path()).fetch(&bbox()) {
        Err(e @ Error::Network { .. }) => assert!(!e.is_retryable(), "{e}"),
        other => panic!("{other:?}"),
    }
    assert_eq!(seen.lock().unwrap().len(), 3);
}

#[test]
fn overpass_recovers_from_a_server_error() {
    let (url, seen) = serve(vec![
        (503, "{}".to_string()),
        (200, OVERPASS_OK.to_string()),
    ]);
    let dir = tempfile::tempdir().unwrap();
    assert!(overpass(&url, dir.path()).fetch(&bbox()).is_ok());
    assert_eq!(seen.lock().unwrap().len(), 2);
}

fn task() -> NavigationTask {
    NavigationTask {
        id: "ms-1".into(),
        city: "Münster".into(),
        origin: "Hafenweg".into(),
        destination: "Albersloher Weg".into(),
        origin_streets: vec![],
        expected_region: None,
    }
}

fn provider(url: &str, key_var: Option<&str>) -> ProviderConfig {
    ProviderConfig {
        name: "local".into(),
        endpoint_url: url.into(),
        model: "test-model".into(),
        credential_env: key_var.map(str::to_string),
        timeout_secs: 5.0,
        max_parallel: 2,
        max_attempts: 3,
    }
}

const CHAT_OK: &str = r#"{"choices":[{"message":{"role":"assistant","content":"1. Hafenweg\n2. Albersloher Weg"}}],
 "usage":{"prompt_tokens":42,"completion_tokens":9}}"#;

#[test]
fn gateway_sends_chat_request_with_bearer_token() {
    std::env::set_var("DIPOLAR_TEST_GATEWAY_KEY", "sk-secret-123");
    let (url, seen) = serve(vec![(200, CHAT_OK.to_string())]);
    let mut gw = HttpGateway::new(provider(&url, Some("DIPOLAR_TEST_GATEWAY_KEY"))).unwrap();
    gw.retry = RetryPolicy::no_delay(3);
    assert!(!format!("{gw:?}").contains("sk-secret-123"));
    let c = gw.generate(&assemble_prompt(&task(), None)).unwrap();
    assert_eq!(c.text, "1. Hafenweg\n2. Albersloher Weg");
    assert_eq!(c.prompt_tokens, Some(42));
    assert_eq!(c.attempts, 1);
    let reqs = seen.lock().unwrap();
    assert!(reqs[0]
        .head
        .to_lowercase()
        .contains("authorization: bearer sk-secret-123"));
    let body: serde_json::Value = serde_json::from_str(&reqs[0].body).unwrap();
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["messages"][0]["role"], "system");
    assert!(body["messages"][1]["content"]
        .as_str()
        .unwrap()
        .contains("Hafenweg"));
}

#[test]
fn gateway_retries_server_errors() {
    let (url, seen) = serve(vec![(500, "{}".into()), (200, CHAT_OK.to_string())]);
    let mut gw = HttpGateway::new(provider(&url, None)).unwrap();
    gw.retry = RetryPolicy::no_delay(3);
    let c = gw.generate(&assemble_prompt(&task(), None)).unwrap();
    assert_eq!(c.attempts, 2);
    assert_eq!(seen.lock().unwrap().len(), 2);
}

#[test]
fn gateway_client_errors_are_not_retried() {
    let (url, seen) = serve(vec![(401, r#"{"error":"bad key"}"#.into())]);
    let mut gw = HttpGateway::new(provider(&url, None)).unwrap();
    gw.retry = RetryPolicy::no_delay(3);
    let e = gw.generate(&assemble_prompt(&task(), None)).unwrap_err();
    assert!(e.is_provider_failure() && !e.is_retryable(), "{e}");
    assert_eq!(seen.lock().unwrap().len(), 1);
}

#[test]
fn gateway_timeout_becomes_hard_failure() {
    // accepts connections into the backlog but never answers
    let silent = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", silent.local_addr().unwrap());
    let mut cfg = provider(&url, None);
    cfg.timeout_secs = 0.001;
    let mut gw = HttpGateway::new(cfg).unwrap();
    gw.retry = RetryPolicy::no_delay(2);
    match gw.generate(&assemble_prompt(&task(), None)) {
        Err(e @ Error::Provider { .. }) => {
            assert!(!e.is_retryable());
            assert!(e.to_string().contains("giving up after 2 attempts"), "{e}");
        }
        other => panic!("{other:?}"),
    }
    drop(silent);
}
