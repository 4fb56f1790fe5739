use std::collections::HashSet;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::routing::post;
use axum::{Json, Router};
use editforge_core::audio::AudioClip;
use editforge_core::bayesopt::{GenerateRequest, GeneratorBackend, P2PParams, P2PRequest};
use editforge_core::metrics::Embedder;
use editforge_core::prompts::{complete_structured, InstructionResponse, JudgeClient, LlmTask, RetryPolicy};
use editforge_core::remote::{
    decode_audio, encode_audio, HttpConfig, JudgeRubric, RemoteEmbedder, RemoteGenerator, RemoteJudge, RemoteLlm,
};
use editforge_core::Error;
use serde_json::{json, Value};

#[derive(Default)]
struct Server {
    /// Calls to fail with 503 before answering.
    flaky: AtomicU32,
    calls: AtomicU32,
    keys: Mutex<Vec<String>>,
}

fn tone(seed: u64) -> AudioClip {
    let s: Vec<f32> = (0..2205).map(|i| ((i as f64 * 0.01 * (seed + 1) as f64).sin() * 0.3) as f32).collect();
    AudioClip::new(vec![s.clone(), s], 44_100).unwrap()
}

fn gate(st: &Server, headers: &HeaderMap) -> Result<(), StatusCode> {
    st.calls.fetch_add(1, Ordering::SeqCst);
    let key = headers.get("idempotency-key").map(|v| v.to_str().unwrap().to_string()).unwrap_or_default();
    st.keys.lock().unwrap().push(key);
    if st.flaky.load(Ordering::SeqCst) > 0 {
        st.flaky.fetch_sub(1, Ordering::SeqCst);
        return Err(StatusCode::SERVICE_UNAVAILABLE);
    }
    Ok(())
}

async fn generate(State(st): State<Arc<Server>>, h: HeaderMap, Json(b): Json<Value>) -> Result<Json<Value>, StatusCode> {
    gate(&st, &h)?;
    Ok(Json(json!({ "audio": encode_audio(&tone(b["seed"].as_u64().unwrap())).unwrap() })))
}

async fn p2p(State(st): State<Arc<Server>>, h: HeaderMap, Json(b): Json<Value>) -> Result<Json<Value>, StatusCode> {
    gate(&st, &h)?;
    let s = b["seed"].as_u64().unwrap();
    Ok(Json(json!({ "input": encode_audio(&tone(s)).unwrap(), "output": encode_audio(&tone(s + 1)).unwrap() })))
}

async fn embed_text(State(st): State<Arc<Server>>, h: HeaderMap, Json(b): Json<Value>) -> Result<Json<Value>, StatusCode> {
    gate(&st, &h)?;
    let n = b["text"].as_str().unwrap().len() as f64;
    Ok(Json(json!({ "embedding": [n, 1.0, 0.0] })))
}

async fn complete(State(st): State<Arc<Server>>, h: HeaderMap, Json(b): Json<Value>) -> Result<Json<Value>, StatusCode> {
    gate(&st, &h)?;
    let reply = if b["attempt"] == 0 { json!({"wrong": true}) } else { json!({"instruction": "Add thunder"}) };
    Ok(Json(json!({ "response": reply })))
}

async fn score(State(st): State<Arc<Server>>, h: HeaderMap, Json(b): Json<Value>) -> Result<Json<Value>, StatusCode> {
    gate(&st, &h)?;
    if b["rubric"].as_str().unwrap_or("").is_empty() {
        return Err(StatusCode::BAD_REQUEST);
    }
    decode_audio(b["audio"].as_str().unwrap()).map_err(|_| StatusCode::BAD_REQUEST)?;
    Ok(Json(json!({ "score": 8 })))
}

fn serve(state: Arc<Server>) -> String {
    let app = Router::new()
        .route("/generate", post(generate))
        .route("/p2p", post(p2p))
        .route("/embed/text", post(embed_text))
        .route("/complete", post(complete))
        .route("/score", post(score))
        .with_state(state);
    let (tx, rx) = std::sync::mpsc::channel::<SocketAddr>();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(1).enable_all().build().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, app).await.unwrap();
        });
    });
    format!("http://{}", rx.recv().unwrap())
}

fn config(url: &str) -> HttpConfig {
    HttpConfig { backoff_ms: 5, max_backoff_ms: 20, ..HttpConfig::new(url) }
}

#[test]
fn generator_retries_with_a_stable_key() {
    let st = Arc::new(Server { flaky: AtomicU32::new(2), ..Server::default() });
    let url = serve(st.clone());
    let g = RemoteGenerator::new("remote-gen", config(&url)).unwrap();
    let req = GenerateRequest { caption: "rain".into(), negative_caption: None, seed: 4, cfg: 5.0, steps: 50 };
    assert_eq!(g.generate(&req).unwrap(), tone(4));
    assert_eq!(st.calls.load(Ordering::SeqCst), 3);
    let keys: HashSet<String> = st.keys.lock().unwrap().iter().cloned().collect();
    assert_eq!(keys.len(), 1);
    assert_eq!(keys.iter().next().unwrap().len(), 64);
}

#[test]
fn generator_gives_up_after_retries() {
    let st = Arc::new(Server { flaky: AtomicU32::new(10), ..Server::default() });
    let url = serve(st.clone());
    let g = RemoteGenerator::new("remote-gen", HttpConfig { retries: 2, ..config(&url) }).unwrap();
    let req = GenerateRequest { caption: "rain".into(), negative_caption: None, seed: 4, cfg: 5.0, steps: 50 };
    assert!(matches!(g.generate(&req), Err(Error::Backend(_))));
    assert_eq!(st.calls.load(Ordering::SeqCst), 3);
}

#[test]
fn p2p_returns_both_clips() {
    let url = serve(Arc::new(Server::default()));
    let g = RemoteGenerator::new("remote-gen", config(&url)).unwrap();
    let req = P2PRequest {
        in_caption: "a".into(),
        out_caption: "b".into(),
        negative_in: None,
        negative_out: None,
        seed: 2,
        cfg: 4.0,
        steps: 50,
        params: P2PParams { frac: 0.5, delay: 0.2, weight: 1.2 },
    };
    let (i, o) = g.p2p_edit(&req).unwrap();
    assert_eq!((i, o), (tone(2), tone(3)));
}

#[test]
fn embedder_checks_dimension() {
    let url = serve(Arc::new(Server::default()));
    assert_eq!(RemoteEmbedder::new("e", 3, config(&url)).unwrap().embed_text("abcd").unwrap(), [4.0, 1.0, 0.0]);
    assert!(matches!(RemoteEmbedder::new("e", 4, config(&url)).unwrap().embed_text("x"), Err(Error::Backend(_))));
}

#[test]
fn llm_reply_goes_through_schema_retry() {
    let st = Arc::new(Server::default());
    let url = serve(st.clone());
    let llm = RemoteLlm::new("remote-llm", config(&url)).unwrap();
    let r: InstructionResponse =
        complete_structured(&llm, LlmTask::Variation, json!({"x": 1}), RetryPolicy::default(), |_| Ok(())).unwrap();
    assert_eq!(r.instruction, "Add thunder");
    assert_eq!(st.calls.load(Ordering::SeqCst), 2);
}

#[test]
fn judge_sends_rubric_and_client_errors_are_not_retried() {
    let st = Arc::new(Server::default());
    let url = serve(st.clone());
    let judge = RemoteJudge::new("j", JudgeRubric::default(), config(&url)).unwrap();
    assert_eq!(judge.score(&tone(1), "rain").unwrap(), 8);
    let bad = RemoteJudge::new("j", JudgeRubric(String::new()), config(&url)).unwrap();
    assert!(matches!(bad.score(&tone(1), "rain"), Err(Error::Client(_))));
    assert_eq!(st.calls.load(Ordering::SeqCst), 2);
}

#[test]
fn unreachable_server_is_a_backend_error() {
    let g = RemoteGenerator::new("g", HttpConfig { retries: 1, ..config("http://127.0.0.1:9") }).unwrap();
    let req = GenerateRequest { caption: "rain".into(), negative_caption: None, seed: 1, cfg: 5.0, steps: 50 };
    assert!(matches!(g.generate(&req), Err(Error::Backend(_))));
}
