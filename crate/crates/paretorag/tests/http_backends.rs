mod common;

use std::time::Duration;

use common::mock::{echo_chat, serve, Reply};
use pareto_core::prompt::PromptTemplate;
use pareto_core::{EncodeItem, Encoder, TextKey};
use paretorag::encoders::HttpEncoder;
use paretorag::genclient::{GenClient, GenConfig};
use paretorag::Error;

/// Embeds `"tN"` as `[N, 1, 0, 0]`, delaying early requests so replies
/// arrive out of order.
fn embed_handler(dim: usize) -> impl Fn(usize, &str) -> Reply + Send + Sync {
    move |n, body| {
        let req: serde_json::Value = serde_json::from_str(body).unwrap();
        let vectors: Vec<Vec<f64>> = req["texts"]
            .as_array()
            .unwrap()
            .iter()
            .map(|t| {
                let i: f64 = t.as_str().unwrap()[1..].parse().unwrap();
                let mut v = vec![0.0; dim];
                v[0] = i;
                v[1] = 1.0;
                v
            })
            .collect();
        let delay = Duration::from_millis(if n < 3 { 80 } else { 0 });
        Reply::ok(serde_json::json!({ "embeddings": vectors }).to_string()).after(delay)
    }
}

fn items(texts: &[String]) -> Vec<EncodeItem<'_>> {
    texts
        .iter()
        .map(|t| EncodeItem {
            key: TextKey::Query { id: t },
            text: t,
        })
        .collect()
}

#[test]
fn embeddings_come_back_in_request_order() {
    let server = serve(embed_handler(4));
    let enc = HttpEncoder::new(server.url.clone(), 4, "http:mock:4".into(), 7, 4, Duration::from_secs(10));
    let texts: Vec<String> = (0..50).map(|i| format!("t{i}")).collect();
    let out = enc.encode_batch(&items(&texts)).unwrap();
    assert_eq!(out.len(), 50);
    for (i, v) in out.iter().enumerate() {
        assert_eq!(v.as_slice()[0], i as f64);
    }
    // 50 texts in requests of at most 7.
    assert_eq!(server.requests.lock().unwrap().len(), 8);
}

#[test]
fn wrong_embedding_width_is_a_dim_mismatch() {
    let server = serve(embed_handler(3));
    let enc = HttpEncoder::new(server.url.clone(), 4, "http:mock:4".into(), 8, 1, Duration::from_secs(10));
    let texts = vec!["t1".to_string()];
    let err = enc.encode_batch(&items(&texts)).unwrap_err();
    assert!(matches!(err, pareto_core::Error::DimMismatch { expected: 4, found: 3 }), "{err:?}");
}

#[test]
fn server_error_is_a_backend_error() {
    let server = serve(|_, _| Reply::status(500, "model exploded"));
    let enc = HttpEncoder::new(server.url.clone(), 4, "http:mock:4".into(), 8, 2, Duration::from_secs(10));
    let texts = vec!["t1".to_string()];
    match enc.encode_batch(&items(&texts)).unwrap_err() {
        pareto_core::Error::Backend(msg) => assert!(msg.contains("500") && msg.contains("model exploded"), "{msg}"),
        e => panic!("unexpected {e:?}"),
    }
}

fn gen_config(url: &str) -> GenConfig {
    GenConfig {
        endpoint: url.to_string(),
        model: "mock-model".into(),
        timeout_secs: 10,
        ..GenConfig::default()
    }
}

fn prompt() -> pareto_core::prompt::AssembledPrompt {
    PromptTemplate::builtin("nq")
        .unwrap()
        .assemble("who wrote it?", &["Alice wrote it.", "Bob read it."])
        .unwrap()
}

#[test]
fn generation_request_carries_decoding_defaults() {
    let server = serve(echo_chat);
    let client = GenClient::new(gen_config(&server.url)).unwrap();
    let p = prompt();
    let out = client.generate(&p).unwrap();
    assert_eq!(out, p.user);

    let body: serde_json::Value = serde_json::from_str(&server.requests.lock().unwrap()[0]).unwrap();
    assert_eq!(body["model"], "mock-model");
    assert_eq!(body["temperature"], 0.1);
    assert_eq!(body["max_tokens"], 150);
    assert_eq!(body["seed"], 100);
    let roles: Vec<&str> = body["messages"].as_array().unwrap().iter().map(|m| m["role"].as_str().unwrap()).collect();
    assert_eq!(roles.last(), Some(&"user"));
}

#[test]
fn generate_many_keeps_order() {
    let server = serve(|n, body| echo_chat(n, body).after(Duration::from_millis(if n % 2 == 0 { 30 } else { 0 })));
    let client = GenClient::new(gen_config(&server.url)).unwrap();
    let t = PromptTemplate::builtin("none").unwrap();
    let prompts: Vec<_> = (0..9).map(|i| t.assemble(&format!("question {i}"), &[] as &[&str]).unwrap()).collect();
    let outs = client.generate_many(&prompts);
    for (p, o) in prompts.iter().zip(outs) {
        assert_eq!(o.unwrap(), p.user);
    }
}

#[test]
fn chat_server_error_keeps_the_status() {
    let server = serve(|_, _| Reply::status(500, "overloaded"));
    let err = GenClient::new(gen_config(&server.url)).unwrap().generate(&prompt()).unwrap_err();
    assert!(matches!(err, Error::Backend { status: Some(500), .. }), "{err:?}");
    assert_eq!(server.requests.lock().unwrap().len(), 1, "no retries by default");
}

#[test]
fn non_json_reply_is_a_protocol_error() {
    let server = serve(|_, _| Reply::ok("<html>hello</html>"));
    let err = GenClient::new(gen_config(&server.url)).unwrap().generate(&prompt()).unwrap_err();
    assert!(matches!(err, Error::Protocol(_)), "{err:?}");
}

#[test]
fn slow_reply_times_out() {
    let server = serve(|n, b| echo_chat(n, b).after(Duration::from_secs(3)));
    let cfg = GenConfig {
        timeout_secs: 1,
        ..gen_config(&server.url)
    };
    let err = GenClient::new(cfg).unwrap().generate(&prompt()).unwrap_err();
    assert!(matches!(err, Error::Timeout), "{err:?}");
}

#[test]
fn retries_resend_the_same_request() {
    let server = serve(|n, b| if n == 0 { Reply::status(503, "busy") } else { echo_chat(n, b) });
    let cfg = GenConfig {
        retries: 2,
        ..gen_config(&server.url)
    };
    let p = prompt();
    assert_eq!(GenClient::new(cfg).unwrap().generate(&p).unwrap(), p.user);
    let reqs = server.requests.lock().unwrap();
    assert_eq!(reqs.len(), 2);
    assert_eq!(reqs[0], reqs[1]);
}

#[test]
fn client_errors_are_not_retried() {
    let server = serve(|_, _| Reply::status(400, "bad request"));
    let cfg = GenConfig {
        retries: 3,
        ..gen_config(&server.url)
    };
    let err = GenClient::new(cfg).unwrap().generate(&prompt()).unwrap_err();
    assert!(matches!(err, Error::Backend { status: Some(400), .. }));
    assert_eq!(server.requests.lock().unwrap().len(), 1);
}
