use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

use podselect_core::abstractive::{
    summarize, Backend, BackendError, BackendInput, RemoteBackend, RemoteConfig,
};

/// Serves one canned response per connection, in order, then stops.
fn stub(responses: Vec<(u16, &'static str)>) -> (String, Arc<AtomicUsize>, thread::JoinHandle<Vec<String>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    let handle = thread::spawn(move || {
        let mut bodies = Vec::new();
        for (status, body) in responses {
            let (stream, _) = listener.accept().unwrap();
            counter.fetch_add(1, Ordering::SeqCst);
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            let mut line = String::new();
            loop {
                line.clear();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            bodies.push(String::from_utf8(buf).unwrap());
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
        bodies
    });
    (format!("http://{addr}"), hits, handle)
}

fn input() -> BackendInput {
    BackendInput {
        episode_id: "ep1".into(),
        text: "Some selected sentences.".into(),
        token_count: 3,
        sentence_indices: vec![0],
        truncated_mid_sentence: false,
    }
}

fn backend(endpoint: String) -> RemoteBackend {
    RemoteBackend::new(RemoteConfig {
        endpoint,
        timeout_ms: 5_000,
        initial_backoff_ms: 10,
        ..RemoteConfig::default()
    })
}

#[test]
fn parses_summary_and_sends_request_body() {
    let (url, hits, handle) = stub(vec![(200, r#"{"id":"ep1","summary":"hello"}"#)]);
    let b = backend(url);
    let s = summarize(&input(), &b).unwrap();
    assert_eq!(s.text, "hello");
    assert_eq!(s.backend_id, "remote");
    assert_eq!(hits.load(Ordering::SeqCst), 1);
    let bodies = handle.join().unwrap();
    let sent: serde_json::Value = serde_json::from_str(&bodies[0]).unwrap();
    assert_eq!(sent["id"], "ep1");
    assert_eq!(sent["text"], "Some selected sentences.");
}

#[test]
fn retries_server_errors_then_gives_up() {
    let (url, hits, handle) = stub(vec![(500, "{}"), (500, "{}"), (500, "{}")]);
    let err = backend(url).generate(&input()).unwrap_err();
    assert!(matches!(err, BackendError::Remote { attempts: 3, .. }), "{err:?}");
    handle.join().unwrap();
    assert_eq!(hits.load(Ordering::SeqCst), 3);
}

#[test]
fn recovers_after_transient_failure() {
    let (url, hits, handle) = stub(vec![(503, "{}"), (429, "{}"), (200, r#"{"summary":"ok"}"#)]);
    assert_eq!(backend(url).generate(&input()).unwrap(), "ok");
    handle.join().unwrap();
    assert_eq!(hits.load(Ordering::SeqCst), 3);
}

#[test]
fn client_error_is_not_retried() {
    let (url, hits, handle) = stub(vec![(400, "{}")]);
    let err = backend(url).generate(&input()).unwrap_err();
    assert!(matches!(err, BackendError::Remote { attempts: 1, .. }), "{err:?}");
    handle.join().unwrap();
    assert_eq!(hits.load(Ordering::SeqCst), 1);
}

#[test]
fn malformed_body_is_protocol_error() {
    let (url, _, handle) = stub(vec![(200, r#"{"text":"missing field"}"#)]);
    let err = backend(url).generate(&input()).unwrap_err();
    assert!(matches!(err, BackendError::Protocol(_)), "{err:?}");
    handle.join().unwrap();
}

#[test]
fn unreachable_endpoint_fails_after_all_attempts() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let err = backend(format!("http://127.0.0.1:{port}")).generate(&input()).unwrap_err();
    assert!(matches!(err, BackendError::Remote { attempts: 3, .. }), "{err:?}");
}
