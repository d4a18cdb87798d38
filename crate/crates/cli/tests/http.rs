use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use revtp_cli::api::router;
use revtp_cli::store::{load_log, Store};
use revtp_core::estimator::{make_observation, EstimateState};
use revtp_core::fixtures::{polygon_fixture, recorded_decisions, situations, Label};

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, v)
}

async fn new_session(app: &Router, body: Value) -> String {
    let (status, v) = call(app, "POST", "/sessions", Some(body)).await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    v["id"].as_str().unwrap().to_string()
}

fn vec_of(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

/// Feeds the recorded study through the service; returns the estimate after each step.
async fn replay_study(app: &Router, id: &str) -> Vec<Vec<f64>> {
    let sit = situations();
    let mut out = Vec::new();
    for rec in recorded_decisions() {
        let Label::Step(k) = rec.label else { continue };
        let dms = &sit[k - 1].1;
        let (status, v) = call(
            app,
            "POST",
            &format!("/sessions/{id}/situations"),
            Some(json!({ "supply": dms.supply(), "demand": dms.demand() })),
        )
        .await;
        assert_eq!(status, StatusCode::CREATED, "{v}");
        assert_eq!(v["step"], k);
        let (status, v) =
            call(app, "POST", &format!("/sessions/{id}/decisions"), Some(json!({ "free_vars": rec.free_vars() }))).await;
        assert_eq!(status, StatusCode::OK, "{v}");
        out.push(vec_of(&v["estimate"]["estimate"]));
    }
    out
}

fn library_trace() -> Vec<Vec<f64>> {
    let sit = situations();
    let mut state = EstimateState::new(2, None).unwrap();
    let mut out = Vec::new();
    for rec in recorded_decisions() {
        let Label::Step(k) = rec.label else { continue };
        let rec_est = state.ingest(&make_observation(k, &sit[k - 1].1, &rec.free_vars()).unwrap()).unwrap();
        out.push(rec_est.estimate.as_ref().unwrap().components().to_vec());
    }
    out
}

#[tokio::test]
async fn study_replay_matches_library() {
    let app = router(Arc::new(Store::in_memory()));
    let id = new_session(&app, json!({})).await;
    let http = replay_study(&app, &id).await;
    let lib = library_trace();
    assert_eq!(http.len(), 25);
    for (h, l) in http.iter().zip(&lib) {
        for (a, b) in h.iter().zip(l) {
            assert!((a - b).abs() < 1e-12, "{h:?} vs {l:?}");
        }
    }
    assert!((http[0][0] + 0.924).abs() < 1e-3 && (http[0][1] - 0.383).abs() < 1e-3, "{:?}", http[0]);

    let (status, v) = call(&app, "GET", &format!("/sessions/{id}/estimates"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["history"].as_array().unwrap().len(), 25);
    assert_eq!(v["stop"]["stop"], true);

    let (_, v) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(v["observations"], 25);
    assert!(v["pending_step"].is_null());
}

#[tokio::test]
async fn assist_proposes_on_control_situation() {
    let app = router(Arc::new(Store::in_memory()));
    let id = new_session(&app, json!({ "mode": "assist" })).await;
    replay_study(&app, &id).await;
    let p = polygon_fixture();
    let (status, _) = call(
        &app,
        "POST",
        &format!("/sessions/{id}/situations"),
        Some(json!({ "supply": p.supply(), "demand": p.demand() })),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED);
    let (status, v) = call(&app, "GET", &format!("/sessions/{id}/proposal"), None).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(vec_of(&v["free_vars"]), vec![0.0, 2.0]);

    let (status, v) = call(&app, "POST", &format!("/sessions/{id}/approve"), None).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["decision"]["kind"], "approved");
    let (_, v) = call(&app, "GET", &format!("/sessions/{id}/decisions"), None).await;
    assert_eq!(v.as_array().unwrap().len(), 26);
}

#[tokio::test]
async fn error_statuses() {
    let app = router(Arc::new(Store::in_memory()));
    let (status, v) = call(&app, "GET", "/sessions/nope", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(v["error"], "SessionNotFound");

    let id = new_session(&app, json!({})).await;
    let (status, v) =
        call(&app, "POST", &format!("/sessions/{id}/decisions"), Some(json!({ "free_vars": [0, 0] }))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(v["error"], "NoPendingSituation");

    let (status, v) = call(
        &app,
        "POST",
        &format!("/sessions/{id}/situations"),
        Some(json!({ "supply": [10, 25], "demand": [5, 15, 16] })),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"], "BalanceError");

    call(
        &app,
        "POST",
        &format!("/sessions/{id}/situations"),
        Some(json!({ "supply": [10, 25], "demand": [5, 15, 15] })),
    )
    .await;
    let (status, v) =
        call(&app, "POST", &format!("/sessions/{id}/situations"), Some(json!({ "supply": [1, 1], "demand": [1, 0.5, 0.5] })))
            .await;
    assert_eq!(status, StatusCode::CONFLICT, "{v}");

    let (status, v) =
        call(&app, "POST", &format!("/sessions/{id}/decisions"), Some(json!({ "free_vars": [8, 14] }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"], "NotAVertex");

    let (status, _) = call(&app, "POST", &format!("/sessions/{id}/approve"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);

    let (status, v) = call(&app, "POST", &format!("/sessions/{id}/decisions"), Some(json!({ "nonsense": 1 }))).await;
    assert!(status.is_client_error());
    assert_eq!(v["error"], "ParseError");

    // the failed attempts left the situation pending
    let (status, v) = call(&app, "GET", &format!("/sessions/{id}/situation"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["step"], 1);
    assert!(!v["geometry"]["vertices"].as_array().unwrap().is_empty());
}

#[tokio::test]
async fn generated_situations_are_reproducible() {
    let app = router(Arc::new(Store::in_memory()));
    let a = new_session(&app, json!({ "seed": 7 })).await;
    let b = new_session(&app, json!({ "seed": 7 })).await;
    let (s1, v1) = call(&app, "POST", &format!("/sessions/{a}/situations/generate"), None).await;
    let (s2, v2) = call(&app, "POST", &format!("/sessions/{b}/situations/generate"), Some(json!({}))).await;
    assert_eq!((s1, s2), (StatusCode::CREATED, StatusCode::CREATED));
    assert_eq!(v1["dms"], v2["dms"]);
    assert_eq!(v1["generated"], true);
}

#[tokio::test]
async fn logs_reproduce_sessions() {
    let dir = tempfile::tempdir().unwrap();
    let store = Arc::new(Store::open(dir.path()).unwrap());
    let app = router(store.clone());
    let id = new_session(&app, json!({ "window": 10 })).await;
    replay_study(&app, &id).await;
    call(&app, "POST", &format!("/sessions/{id}/situations/generate"), None).await;
    let live = store.snapshot(&id).unwrap();

    let reopened = Store::open(dir.path()).unwrap();
    assert_eq!(reopened.ids(), vec![id.clone()]);
    assert_eq!(*reopened.snapshot(&id).unwrap(), *live);
    assert_eq!(load_log(&store.log_path(&id).unwrap()).unwrap(), *live);

    let app = router(Arc::new(reopened));
    let (_, v) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(v["observations"], 25);
    assert_eq!(v["window"], 10);
    assert_eq!(v["pending_step"], 26);
}
