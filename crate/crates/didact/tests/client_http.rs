//! HTTP client behavior against a scripted localhost server: caching,
//! retries, stop sequences, and in-flight de-duplication.
#![cfg(feature = "client")]

use std::io::{Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use didact::agents::CompletionRequest;
use didact::client::{ClientError, EndpointConfig, HttpClient};

struct Scripted {
    status: u16,
    body: String,
    delay: Duration,
}

impl Scripted {
    fn ok(body: &str) -> Self {
        Scripted { status: 200, body: body.into(), delay: Duration::ZERO }
    }

    fn status(status: u16, body: &str) -> Self {
        Scripted { status, body: body.into(), delay: Duration::ZERO }
    }
}

struct MockServer {
    url: String,
    requests: Arc<AtomicUsize>,
    handle: Option<JoinHandle<()>>,
}

impl MockServer {
    /// Serves the scripted responses in order, one connection each.
    fn spawn(script: Vec<Scripted>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind mock server");
        let url = format!("http://{}/v1/completions", listener.local_addr().unwrap());
        let requests = Arc::new(AtomicUsize::new(0));
        let counter = requests.clone();
        let handle = std::thread::spawn(move || {
            for response in script {
                let (mut stream, _) = match listener.accept() {
                    Ok(conn) => conn,
                    Err(_) => return,
                };
                counter.fetch_add(1, Ordering::SeqCst);
                read_request(&mut stream);
                std::thread::sleep(response.delay);
                let payload = format!(
                    "HTTP/1.1 {} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{}",
                    response.status,
                    response.body.len(),
                    response.body
                );
                let _ = stream.write_all(payload.as_bytes());
            }
        });
        MockServer { url, requests, handle: Some(handle) }
    }

    fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        if let Some(handle) = self.handle.take() {
            // The script may be exhausted already; never block the tests.
            if handle.is_finished() {
                let _ = handle.join();
            }
        }
    }
}

fn read_request(stream: &mut std::net::TcpStream) {
    let mut buffer = Vec::new();
    let mut byte = [0u8; 1];
    while !buffer.ends_with(b"\r\n\r\n") {
        if stream.read(&mut byte).unwrap_or(0) == 0 {
            return;
        }
        buffer.push(byte[0]);
    }
    let header = String::from_utf8_lossy(&buffer).to_lowercase();
    let length: usize = header
        .lines()
        .find_map(|line| line.strip_prefix("content-length:"))
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0);
    let mut body = vec![0u8; length];
    let _ = stream.read_exact(&mut body);
}

fn client_for(server: &MockServer, cache_dir: Option<std::path::PathBuf>) -> HttpClient {
    HttpClient::new(EndpointConfig {
        url: server.url.clone(),
        model: "mock-model".into(),
        api_key_env: None,
        timeout_secs: 5,
        cache_dir,
        max_retries: 3,
        backoff_ms: 1,
    })
}

fn request(prompt: &str) -> CompletionRequest {
    CompletionRequest {
        prompt: prompt.into(),
        max_tokens: 32,
        stop: vec!["\n\nQ:".into()],
        want_scores: false,
    }
}

#[test]
fn second_identical_request_is_served_from_cache() {
    let dir = tempfile::tempdir().unwrap();
    let server = MockServer::spawn(vec![Scripted::ok(r#"{"text": " So the answer is yes"}"#)]);
    let client = client_for(&server, Some(dir.path().to_path_buf()));

    let first = client.complete(&request("p1")).unwrap();
    let second = client.complete(&request("p1")).unwrap();
    assert_eq!(first, second);
    assert_eq!(first.text, " So the answer is yes");
    assert_eq!(server.request_count(), 1);
    assert_eq!(client.cache_stats(), (1, 1));
}

#[test]
fn transient_statuses_are_retried() {
    let server = MockServer::spawn(vec![
        Scripted::status(500, "busy"),
        Scripted::status(429, "slow down"),
        Scripted::ok(r#"{"text": "recovered"}"#),
    ]);
    let client = client_for(&server, None);
    let completion = client.complete(&request("p")).unwrap();
    assert_eq!(completion.text, "recovered");
    assert_eq!(server.request_count(), 3);
}

#[test]
fn non_retriable_status_fails_fast_with_body() {
    let server = MockServer::spawn(vec![Scripted::status(400, "bad prompt shape")]);
    let client = client_for(&server, None);
    let err = client.complete(&request("p")).unwrap_err();
    match err {
        ClientError::Status { status, body, .. } => {
            assert_eq!(status, 400);
            assert!(body.contains("bad prompt shape"));
        }
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(server.request_count(), 1);
}

#[test]
fn retries_exhaust_into_an_error() {
    let server = MockServer::spawn(vec![
        Scripted::status(503, "down"),
        Scripted::status(503, "down"),
        Scripted::status(503, "down"),
        Scripted::status(503, "down"),
    ]);
    let client = client_for(&server, None);
    let err = client.complete(&request("p")).unwrap_err();
    assert!(matches!(err, ClientError::RetriesExhausted { attempts: 4, .. }));
}

#[test]
fn stop_sequences_truncate_multi_block_output() {
    let server = MockServer::spawn(vec![Scripted::ok(
        r#"{"text": " first block of reasoning\n\nQ: a second question the model invented"}"#,
    )]);
    let client = client_for(&server, None);
    let completion = client.complete(&request("p")).unwrap();
    assert_eq!(completion.text, " first block of reasoning");
}

#[test]
fn identical_inflight_requests_collapse_to_one_call() {
    let dir = tempfile::tempdir().unwrap();
    let server = MockServer::spawn(vec![Scripted {
        status: 200,
        body: r#"{"text": "slow answer"}"#.into(),
        delay: Duration::from_millis(150),
    }]);
    let client = Arc::new(client_for(&server, Some(dir.path().to_path_buf())));

    let workers: Vec<_> = (0..4)
        .map(|_| {
            let client = client.clone();
            std::thread::spawn(move || client.complete(&request("shared")).unwrap().text)
        })
        .collect();
    for worker in workers {
        assert_eq!(worker.join().unwrap(), "slow answer");
    }
    assert_eq!(server.request_count(), 1);
}
