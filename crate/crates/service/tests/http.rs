use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use radshade_service::{app, ServiceConfig};

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

async fn call_json(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (s, b) = call(app, method, uri, body).await;
    (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
}

#[tokio::test]
async fn health_and_scenes() {
    let app = app(ServiceConfig::default());
    let (s, v) = call_json(&app, "GET", "/health", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["ok"], true);
    let (_, v) = call_json(&app, "GET", "/scenes", None).await;
    assert_eq!(v.as_array().unwrap().len(), 6);
    let (s, v) = call_json(&app, "GET", "/scenes/scene_02", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["sources"].as_array().unwrap().len(), 3);
    let (s, _) = call(&app, "GET", "/scenes/nope", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn png_assets() {
    let app = app(ServiceConfig::default());
    for uri in [
        "/assets/floor/scene_01/banded",
        "/assets/legend/continuous",
        "/assets/stencil/hex",
    ] {
        let (s, b) = call(&app, "GET", uri, None).await;
        assert_eq!(s, StatusCode::OK, "{uri}");
        let img = image::load_from_memory(&b).unwrap();
        assert!(img.width() > 0);
    }
    let (_, b) = call(&app, "GET", "/assets/floor/scene_01/banded", None).await;
    let img = image::load_from_memory(&b).unwrap();
    assert_eq!((img.width(), img.height()), (256, 484));
    let (s, _) = call(&app, "GET", "/assets/floor/scene_01/plaid", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = call(&app, "GET", "/assets/stencil/square", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn session_lifecycle_errors() {
    let app = app(ServiceConfig::default());
    let (s, _) = call(&app, "POST", "/sessions", Some(json!({"participant": "", "seed": 1}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);

    let (s, a) = call_json(&app, "POST", "/sessions", Some(json!({"participant": "P01", "seed": 42}))).await;
    assert_eq!(s, StatusCode::OK);
    let (_, b) = call_json(&app, "POST", "/sessions", Some(json!({"participant": "P01", "seed": 42}))).await;
    assert_ne!(a["id"], b["id"]);
    assert_eq!(a["schedule"], b["schedule"]);
    assert_eq!(a["schedule"]["trials"], 36);

    let id = a["id"].as_str().unwrap();
    let (s, v) = call_json(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["state"], "idle");
    assert_eq!(v["block"], 0);

    let (s, v) = call_json(&app, "POST", &format!("/sessions/{id}/move"), Some(json!({"intent": [1.0, 0.0], "dt": 0.1}))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(v["error"], "invalid_state");

    let (s, tick) = call_json(&app, "POST", &format!("/sessions/{id}/start"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(tick["elapsed"], 0.0);

    let (s, v) = call_json(&app, "POST", &format!("/sessions/{id}/end"), None).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(v["reason"].as_str().unwrap().contains("card"));

    let (s, _) = call(&app, "POST", &format!("/sessions/{id}/move"), Some(json!({"intent": [1.0, 1.0], "dt": 0.1}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, v) = call_json(&app, "POST", &format!("/sessions/{id}/move"), Some(json!({"intent": [0.0, 1.0], "dt": 0.1}))).await;
    assert_eq!(s, StatusCode::OK);
    assert!(v["cumulative"].as_f64().unwrap() > 0.0);

    let (s, _) = call(&app, "POST", &format!("/sessions/{id}/pick"), Some(json!({"index": 99}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, v) = call_json(&app, "POST", &format!("/sessions/{id}/pick"), Some(json!({"index": 0}))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["accepted"], false);

    let (s, _) = call(&app, "GET", "/sessions/s999999", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn questionnaire_and_ranking() {
    let app = app(ServiceConfig::default());
    let (_, a) = call_json(&app, "POST", "/sessions", Some(json!({"participant": "P02"}))).await;
    let id = a["id"].as_str().unwrap();
    let answers = json!({"block": 1, "answers": [4,4,4,4,4,4,4,4,4,4,4,4,4]});
    let (s, v) = call_json(&app, "POST", &format!("/sessions/{id}/questionnaire"), Some(answers)).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["stored"], 1);
    let (s, _) = call(&app, "POST", &format!("/sessions/{id}/questionnaire"), Some(json!([1, 2]))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);

    let good = json!({"ranking": ["arrow", "continuous", "banded", "hex", "circle", "transparent"], "comment": "fine"});
    let (s, _) = call(&app, "POST", &format!("/sessions/{id}/ranking"), Some(good)).await;
    assert_eq!(s, StatusCode::OK);
    let dup = json!({"ranking": ["arrow", "arrow", "banded", "hex", "circle", "transparent"]});
    let (s, _) = call(&app, "POST", &format!("/sessions/{id}/ranking"), Some(dup)).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let short = json!({"ranking": ["arrow", "banded", "hex", "circle", "transparent"]});
    let (s, _) = call(&app, "POST", &format!("/sessions/{id}/ranking"), Some(short)).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}
