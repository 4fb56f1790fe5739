use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use axum::Router;
use editforge_cli::server::router;
use editforge_core::audio::synth::sine;
use editforge_core::audio::save_wav;
use editforge_core::elo::StudyStore;
use serde_json::{json, Value};
use tower::ServiceExt;

struct Api {
    app: Router,
}

impl Api {
    async fn call(&self, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
        self.call_with(method, uri, body, None).await
    }

    async fn call_with(&self, method: &str, uri: &str, body: Option<Value>, key: Option<&str>) -> (StatusCode, Vec<u8>) {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(k) = key {
            req = req.header("Idempotency-Key", k);
        }
        let req = match body {
            Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
            None => req.body(Body::empty()),
        }
        .unwrap();
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        (status, to_bytes(resp.into_body(), usize::MAX).await.unwrap().to_vec())
    }

    async fn json(&self, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        let (s, b) = self.call(method, uri, body).await;
        (s, if b.is_empty() { Value::Null } else { serde_json::from_slice(&b).unwrap() })
    }
}

fn definition(samples: usize) -> Value {
    json!({
        "id": "weights",
        "title": "Objective weightings",
        "contenders": [
            {"id": "w1", "label": "8,14,0.5,1.5"},
            {"id": "w2", "label": "1,1,1,1"},
        ],
        "samples": (0..samples).map(|i| json!({
            "id": format!("s{i}"),
            "input_clip": format!("clips/in{i}.wav"),
            "instruction": "Add a bell",
            "outputs": {"w1": format!("clips/w1_{i}.wav"), "w2": format!("clips/w2_{i}.wav")},
        })).collect::<Vec<_>>(),
    })
}

fn api(media: &std::path::Path, data: Option<&std::path::Path>) -> Api {
    let store = match data {
        Some(d) => StudyStore::open(d).unwrap(),
        None => StudyStore::in_memory(),
    };
    Api { app: router(Arc::new(store), media.to_path_buf()) }
}

#[tokio::test]
async fn study_lifecycle_over_http() {
    let media = tempfile::tempdir().unwrap();
    std::fs::create_dir_all(media.path().join("clips")).unwrap();
    save_wav(&sine(440.0, 0.3, 0.2, 16_000, 1), media.path().join("clips/in0.wav")).unwrap();
    let api = api(media.path(), None);

    let (s, v) = api.json("POST", "/studies", Some(definition(2))).await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    assert_eq!(v["samples"], 2);
    let (s, _) = api.json("POST", "/studies", Some(definition(2))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    let (_, ids) = api.json("GET", "/studies", None).await;
    assert_eq!(ids, json!(["weights"]));

    let (s, meta) = api.json("GET", "/studies/weights/metadata", None).await;
    assert_eq!(s, StatusCode::OK);
    let cats: Vec<&str> = meta["rating_guide"].as_array().unwrap().iter().map(|g| g["category"].as_str().unwrap()).collect();
    assert_eq!(cats, ["quality", "relevance", "faithfulness"]);

    let (s, c) = api.json("POST", "/studies/weights/next", None).await;
    assert_eq!(s, StatusCode::OK, "{c}");
    let cid = c["id"].as_str().unwrap().to_string();
    assert_eq!((c["contender_a"].as_str(), c["contender_b"].as_str()), (Some("w1"), Some("w2")));
    let (_, pending) = api.json("GET", "/studies/weights/pending", None).await;
    assert_eq!(pending.as_array().unwrap().len(), 1);

    let (s, wav) = api.call("GET", &format!("/comparisons/{cid}/audio/input"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(&wav[..4], b"RIFF");
    let (s, _) = api.call("GET", &format!("/comparisons/{cid}/audio/a"), None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = api.call("GET", &format!("/comparisons/{cid}/audio/z"), None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);

    let uri = format!("/comparisons/{cid}/verdict");
    let (s, r) = api.json("POST", &uri, Some(json!({"verdict": "a", "idempotency_key": "k1"}))).await;
    assert_eq!(s, StatusCode::OK, "{r}");
    let ratings: Vec<(String, f64)> = r["ranking"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| (c["id"].as_str().unwrap().to_string(), c["rating"].as_f64().unwrap()))
        .collect();
    assert_eq!(ratings, [("w1".to_string(), 1016.0), ("w2".to_string(), 984.0)]);
    let (s, _) = api.json("POST", &uri, Some(json!({"verdict": "a", "idempotency_key": "k1"}))).await;
    assert_eq!(s, StatusCode::OK);
    let (s, _) = api.json("POST", &uri, Some(json!({"verdict": "b"}))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    let (s, _) = api.json("POST", "/comparisons/weights-c99/verdict", Some(json!({"verdict": "a"}))).await;
    assert_eq!(s, StatusCode::NOT_FOUND);

    let (_, c2) = api.json("POST", "/studies/weights/next", None).await;
    let uri2 = format!("/comparisons/{}/verdict", c2["id"].as_str().unwrap());
    let (s, _) = api.call_with("POST", &uri2, Some(json!({"verdict": "tie"})), Some("hdr")).await;
    assert_eq!(s, StatusCode::OK);
    let (s, _) = api.call_with("POST", &uri2, Some(json!({"verdict": "tie"})), Some("hdr")).await;
    assert_eq!(s, StatusCode::OK);
    let (s, _) = api.json("POST", "/studies/weights/next", None).await;
    assert_eq!(s, StatusCode::NO_CONTENT);

    let (s, _) = api.json("POST", "/studies/weights/mos", Some(json!({"sample_id": "s0", "quality": 2, "relevance": 4, "faithfulness": 5}))).await;
    assert_eq!(s, StatusCode::CREATED);
    let (s, agg) = api.json("POST", "/studies/weights/mos", Some(json!({"sample_id": "s1", "quality": 4, "relevance": 4, "faithfulness": 5}))).await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(agg["quality"]["mean"], 3.0);
    assert_eq!(agg["quality"]["std"], 1.0);
    let (s, _) = api.json("POST", "/studies/weights/mos", Some(json!({"sample_id": "s0", "quality": 6, "relevance": 4, "faithfulness": 5}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (_, agg) = api.json("GET", "/studies/weights/mos", None).await;
    assert_eq!(agg["count"], 2);

    let (s, _) = api.json("GET", "/studies/missing/ranking", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn clip_references_cannot_escape_the_media_root() {
    let media = tempfile::tempdir().unwrap();
    let api = api(media.path(), None);
    let mut def = definition(1);
    def["samples"][0]["input_clip"] = json!("../secret.wav");
    api.json("POST", "/studies", Some(def)).await;
    let (_, c) = api.json("POST", "/studies/weights/next", None).await;
    let (s, _) = api.call("GET", &format!("/comparisons/{}/audio/input", c["id"].as_str().unwrap()), None).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn state_survives_a_restart() {
    let media = tempfile::tempdir().unwrap();
    let data = tempfile::tempdir().unwrap();
    {
        let api = api(media.path(), Some(data.path()));
        api.json("POST", "/studies", Some(definition(3))).await;
        for v in ["a", "a"] {
            let (_, c) = api.json("POST", "/studies/weights/next", None).await;
            let uri = format!("/comparisons/{}/verdict", c["id"].as_str().unwrap());
            api.json("POST", &uri, Some(json!({ "verdict": v }))).await;
        }
    }
    let api = api(media.path(), Some(data.path()));
    let (s, ranking) = api.json("GET", "/studies/weights/ranking", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(ranking[0]["id"], "w1");
    assert_eq!(ranking[0]["games"], 2);
    let total: f64 = ranking.as_array().unwrap().iter().map(|c| c["rating"].as_f64().unwrap()).sum();
    assert!((total - 2000.0).abs() < 1e-9);
    let (_, view) = api.json("GET", "/studies/weights", None).await;
    assert_eq!(view["comparisons"], 2);
}
