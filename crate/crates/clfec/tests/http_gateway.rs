//! HTTP chat gateway against a loopback server: wire format, retry on 5xx,
//! fail-fast on auth errors.

use clfec::providers::{ChatGateway, ChatRequest, HttpChatGateway, HttpGatewayConfig, ProviderError};
use std::io::{Read, Write};
use std::net::TcpListener;
use std::time::Duration;

/// Serves canned HTTP responses, one per accepted connection, and returns the
/// request bodies it saw.
fn serve(responses: Vec<(u16, String)>) -> (String, std::thread::JoinHandle<Vec<String>>) {
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind loopback");
    let endpoint = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let handle = std::thread::spawn(move || {
        let mut bodies = Vec::new();
        for (status, body) in responses {
            let (mut stream, _) = listener.accept().expect("accept");
            let mut buf = vec![0u8; 65536];
            let mut read = 0usize;
            let body_received = loop {
                let n = stream.read(&mut buf[read..]).expect("read");
                read += n;
                let text = String::from_utf8_lossy(&buf[..read]).into_owned();
                if let Some(header_end) = text.find("\r\n\r\n") {
                    let content_length = text
                        .lines()
                        .find_map(|l| l.strip_prefix("content-length: "))
                        .or_else(|| {
                            text.lines().find_map(|l| l.strip_prefix("Content-Length: "))
                        })
                        .and_then(|v| v.trim().parse::<usize>().ok())
                        .unwrap_or(0);
                    let body_start = header_end + 4;
                    if read >= body_start + content_length {
                        break text[body_start..body_start + content_length].to_owned();
                    }
                }
                if n == 0 {
                    break String::new();
                }
            };
            bodies.push(body_received);
            let reason = if status == 200 { "OK" } else { "ERR" };
            let response = format!(
                "HTTP/1.1 {status} {reason}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            );
            stream.write_all(response.as_bytes()).expect("write");
        }
        bodies
    });
    (endpoint, handle)
}

fn gateway(endpoint: String) -> HttpChatGateway {
    std::env::set_var("CLFEC_TEST_API_KEY", "test-key");
    HttpChatGateway::new(HttpGatewayConfig {
        endpoint,
        api_key_env: "CLFEC_TEST_API_KEY".to_owned(),
        retry_budget: 3,
        base_delay: Duration::ZERO,
        timeout: Duration::from_secs(5),
    })
    .unwrap()
}

fn ok_body(text: &str) -> String {
    serde_json::json!({"choices": [{"message": {"content": text}}]}).to_string()
}

#[test]
fn round_trips_a_chat_exchange() {
    let (endpoint, server) = serve(vec![(200, ok_body("回答内容"))]);
    let request = ChatRequest::new("test-model", "system prompt").with_user("问题");
    let response = gateway(endpoint).chat(&request).unwrap();
    assert_eq!(response.text, "回答内容");

    let bodies = server.join().unwrap();
    let sent: serde_json::Value = serde_json::from_str(&bodies[0]).unwrap();
    assert_eq!(sent["model"], "test-model");
    assert_eq!(sent["messages"][0]["role"], "system");
    assert_eq!(sent["messages"][1]["content"], "问题");
    assert_eq!(sent["temperature"], 0.01);
}

#[test]
fn retries_transient_5xx_then_succeeds() {
    let (endpoint, server) = serve(vec![
        (500, "{}".to_owned()),
        (503, "{}".to_owned()),
        (200, ok_body("ok")),
    ]);
    let request = ChatRequest::new("m", "s").with_user("u");
    let response = gateway(endpoint).chat(&request).unwrap();
    assert_eq!(response.text, "ok");
    assert_eq!(server.join().unwrap().len(), 3);
}

#[test]
fn auth_failures_do_not_retry() {
    let (endpoint, server) = serve(vec![(401, "{}".to_owned())]);
    let request = ChatRequest::new("m", "s").with_user("u");
    let err = gateway(endpoint).chat(&request).unwrap_err();
    assert!(matches!(err, ProviderError::AuthFailure(_)));
    assert_eq!(server.join().unwrap().len(), 1);
}
