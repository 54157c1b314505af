use std::net::SocketAddr;

use gridsafe_core::config::Config;
use gridsafe_server::{serve_ndjson, serve_ndjson_stream, spawn, AppState};
use serde_json::{json, Value};
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::TcpListener;

fn small_config() -> Config {
    Config::from_json(r#"{"data":{"synthetic":{"days":1,"seed":2}},"grid":{"T":60,"H":10}}"#).unwrap()
}

struct Http {
    base: String,
    http: reqwest::Client,
}

impl Http {
    async fn open(&self) -> Value {
        let resp = self.http.post(format!("{}/v1/sessions", self.base)).send().await.unwrap();
        assert_eq!(resp.status().as_u16(), 200);
        resp.json().await.unwrap()
    }

    async fn frame(&self, id: u64, body: impl Into<String>) -> Value {
        let resp = self
            .http
            .post(format!("{}/v1/sessions/{id}/frame", self.base))
            .body(body.into())
            .send()
            .await
            .unwrap();
        assert_eq!(resp.status().as_u16(), 200);
        resp.json().await.unwrap()
    }
}

#[tokio::test]
async fn session_round_trip_and_malformed_frames() {
    let state = AppState::new(small_config());
    let server = spawn(state.clone(), "127.0.0.1:0".parse::<SocketAddr>().unwrap()).await.unwrap();
    let c = Http {
        base: server.base_url(),
        http: reqwest::Client::new(),
    };
    let info = c.open().await;
    let id = info["id"].as_u64().unwrap();
    let dim = info["action_dim"].as_u64().unwrap() as usize;
    assert_eq!(info["layout"].as_array().unwrap().len(), 22);

    let reset = c.frame(id, json!({"op": "reset", "seed": 5, "day": 0}).to_string()).await;
    assert_eq!(reset["v"], 1);
    assert_eq!(reset["obs"].as_array().unwrap().len(), 22);

    let bad = c.frame(id, "{not json").await;
    assert_eq!(bad["error"]["kind"], "malformed");
    let wrong_dim = c.frame(id, json!({"op": "step", "action": [0.0]}).to_string()).await;
    assert_eq!(wrong_dim["error"]["kind"], "dimension");

    // the session survives both errors
    let step = c
        .frame(id, json!({"op": "step", "action": vec![0.0; dim]}).to_string())
        .await;
    assert_eq!(step["v"], 1, "{step}");
    assert!(step["reward"].is_number());
    assert!(step["info"]["violation"].as_f64().unwrap() <= 1e-6);

    let closed = c.frame(id, r#"{"op":"close"}"#).await;
    assert_eq!(closed["closed"], true);
    let after = c.frame(id, r#"{"op":"layout"}"#).await;
    assert_eq!(after["error"]["kind"], "closed");

    let resp = c.http.delete(format!("{}/v1/sessions/{id}", c.base)).send().await.unwrap();
    assert_eq!(resp.status().as_u16(), 204);
    assert_eq!(state.session_count(), 0);
    server.shutdown().await.unwrap();
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn concurrent_sessions_are_isolated() {
    let server = spawn(AppState::new(small_config()), "127.0.0.1:0".parse::<SocketAddr>().unwrap())
        .await
        .unwrap();
    let c = std::sync::Arc::new(Http {
        base: server.base_url(),
        http: reqwest::Client::new(),
    });

    // reference: one session run alone
    async fn run(c: &Http, seed: u64) -> Vec<Value> {
        let info = c.open().await;
        let id = info["id"].as_u64().unwrap();
        let dim = info["action_dim"].as_u64().unwrap() as usize;
        let mut out = vec![c.frame(id, json!({"op": "reset", "seed": seed, "day": 0}).to_string()).await["obs"].clone()];
        for k in 0..8 {
            let a: Vec<f64> = (0..dim).map(|i| ((k + i) as f64 * 0.7).sin()).collect();
            let r = c.frame(id, json!({"op": "step", "action": a}).to_string()).await;
            out.push(r["obs"].clone());
        }
        out
    }
    let alone_a = run(&c, 1).await;
    let alone_b = run(&c, 2).await;
    assert_ne!(alone_a, alone_b);

    let (ca, cb) = (c.clone(), c.clone());
    let ha = tokio::spawn(async move { run(&ca, 1).await });
    let hb = tokio::spawn(async move { run(&cb, 2).await });
    assert_eq!(ha.await.unwrap(), alone_a);
    assert_eq!(hb.await.unwrap(), alone_b);
    server.shutdown().await.unwrap();
}

#[tokio::test]
async fn ndjson_over_tcp() {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let task = tokio::spawn(serve_ndjson(listener, AppState::new(small_config()), async {
        let _ = rx.await;
    }));

    let stream = tokio::net::TcpStream::connect(addr).await.unwrap();
    let (r, mut w) = stream.into_split();
    let mut lines = BufReader::new(r).lines();
    let mut ask = async |line: &str| {
        w.write_all(format!("{line}\n").as_bytes()).await.unwrap();
        serde_json::from_str::<Value>(&lines.next_line().await.unwrap().unwrap()).unwrap()
    };
    let layout = ask(r#"{"op":"layout"}"#).await;
    assert_eq!(layout["layout"][0], "e_1");
    assert_eq!(ask("garbage").await["error"]["kind"], "malformed");
    assert_eq!(ask(r#"{"op":"reset","v":2}"#).await["error"]["kind"], "unsupported_version");
    assert_eq!(ask(r#"{"op":"reset","seed":1}"#).await["obs"].as_array().unwrap().len(), 22);
    assert_eq!(ask(r#"{"op":"close"}"#).await["closed"], true);
    assert!(lines.next_line().await.unwrap().is_none());

    tx.send(()).unwrap();
    task.await.unwrap().unwrap();
}

#[tokio::test]
async fn ndjson_over_in_memory_stream() {
    let input = b"{\"op\":\"layout\"}\n\n{\"op\":\"close\"}\n{\"op\":\"layout\"}\n".to_vec();
    let mut out = Vec::new();
    serve_ndjson_stream(&input[..], &mut out, AppState::new(small_config())).await.unwrap();
    let replies: Vec<Value> = String::from_utf8(out)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    // blank lines are skipped and nothing is read after close
    assert_eq!(replies.len(), 2);
    assert_eq!(replies[1]["closed"], true);
}
