use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use geese::runlog::{input_digest, RunLog, LOG_FILE};
use geese::service::{router, AppState};
use geese_core::catalog::default_catalog;
use geese_core::planner::usecase::combined_request;
use geese_core::planner::plan;

fn app(dir: &std::path::Path) -> Router {
    router(AppState {
        catalog: Arc::new(default_catalog()),
        runs: Arc::new(RunLog::open(dir).unwrap()),
    })
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<String>) -> (StatusCode, axum::http::HeaderMap, Vec<u8>) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, Body::from))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, headers, bytes)
}

fn json_of(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).unwrap()
}

#[tokio::test]
async fn catalog_is_served() {
    let d = tempfile::tempdir().unwrap();
    let (s, _, b) = call(&app(d.path()), "GET", "/catalog", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(String::from_utf8(b).unwrap(), default_catalog().to_json());
}

#[tokio::test]
async fn endurance_model() {
    let d = tempfile::tempdir().unwrap();
    let a = app(d.path());
    let (s, _, b) = call(&a, "GET", "/models/endurance?uav=powereye&payload=400", None).await;
    assert_eq!(s, StatusCode::OK);
    let v = json_of(&b);
    assert_eq!(v["operational_time_s"], json!(109.0));
    assert_eq!(v["usable_endurance_s"], json!(545.0));
    let (s, _, _) = call(&a, "GET", "/models/endurance?uav=nope&payload=400", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _, _) = call(&a, "GET", "/models/endurance?uav=powereye&payload=50", None).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn plan_round_trips_through_the_run_log() {
    let d = tempfile::tempdir().unwrap();
    let a = app(d.path());
    let req = combined_request();
    let (s, h, b) = call(&a, "POST", "/plan", Some(serde_json::to_string(&req).unwrap())).await;
    assert_eq!(s, StatusCode::OK);
    let expected = plan(&req, &default_catalog()).unwrap().to_canonical_json();
    assert_eq!(String::from_utf8(b).unwrap(), expected);

    let id = h["x-run-id"].to_str().unwrap().to_string();
    let digest = h["x-input-digest"].to_str().unwrap().to_string();
    let (s, _, b) = call(&a, "GET", &format!("/runs/{id}"), None).await;
    assert_eq!(s, StatusCode::OK);
    let rec = json_of(&b);
    assert_eq!(rec["input_digest"], json!(digest));
    assert_eq!(input_digest(&rec["inputs"]), digest);
    assert_eq!(rec["kind"], json!("plan"));

    let (_, _, b) = call(&a, "GET", "/runs", None).await;
    assert_eq!(json_of(&b).as_array().unwrap().len(), 1);
    let (s, _, _) = call(&a, "GET", "/runs/99", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn empty_workload_plan() {
    let d = tempfile::tempdir().unwrap();
    let mut req = combined_request();
    req.workload_users = 0;
    let (s, _, b) = call(&app(d.path()), "POST", "/plan", Some(serde_json::to_string(&req).unwrap())).await;
    assert_eq!(s, StatusCode::OK);
    let v = json_of(&b);
    assert_eq!(v["assignments"], json!([]));
    assert_eq!(v["total_cost"], json!(0.0));
}

#[tokio::test]
async fn infeasible_plan_is_a_document_too() {
    let d = tempfile::tempdir().unwrap();
    let mut req = combined_request();
    req.response_bound_ms = 1.0;
    let (s, _, b) = call(&app(d.path()), "POST", "/plan", Some(serde_json::to_string(&req).unwrap())).await;
    assert_eq!(s, StatusCode::OK);
    let v = json_of(&b);
    assert_eq!(v["certificate"], json!("infeasible"));
    assert_eq!(v["violated"][0]["constraint"], json!("response"));
}

#[tokio::test]
async fn bad_bodies_are_rejected() {
    let d = tempfile::tempdir().unwrap();
    let a = app(d.path());
    let (s, _, b) = call(&a, "POST", "/plan", Some(r#"{"workload_users": "x"}"#.into())).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert!(json_of(&b)["error"].as_str().unwrap().contains("workload_users"));
    let mut req = combined_request();
    req.response_bound_ms = -1.0;
    let (s, _, _) = call(&a, "POST", "/plan", Some(serde_json::to_string(&req).unwrap())).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn collab_simulation() {
    let d = tempfile::tempdir().unwrap();
    let cfg = geese_core::simulator::CollabConfig::for_regime(
        &default_catalog().calibration.links,
        geese_core::perf_models::Regime::EncasedDry,
        geese_core::perf_models::Role::Master,
        3,
        50,
        100.0,
        1,
    );
    let (s, h, b) = call(&app(d.path()), "POST", "/simulate/collab", Some(serde_json::to_string(&cfg).unwrap())).await;
    assert_eq!(s, StatusCode::OK);
    assert!(h.contains_key("x-run-id"));
    let v = json_of(&b);
    assert_eq!(v["success_rate"], json!(1.0));
    assert_eq!(v["traces"].as_array().unwrap().len(), 50);
}

#[tokio::test]
async fn delivery_from_a_stored_plan() {
    let d = tempfile::tempdir().unwrap();
    let a = app(d.path());
    let req = combined_request();
    let (_, h, _) = call(&a, "POST", "/plan", Some(serde_json::to_string(&req).unwrap())).await;
    let id: u64 = h["x-run-id"].to_str().unwrap().parse().unwrap();
    let (s, _, b) = call(&a, "POST", "/simulate/delivery", Some(json!({ "plan_id": id }).to_string())).await;
    assert_eq!(s, StatusCode::OK, "{}", String::from_utf8_lossy(&b));
    let v = json_of(&b);
    assert_eq!(v["success_rate"], json!(1.0));
    assert_eq!(v["missions"].as_array().unwrap().len(), 2);

    let (s, _, _) = call(&a, "POST", "/simulate/delivery", Some("{}".into())).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, _, _) = call(&a, "POST", "/simulate/delivery", Some(json!({ "plan_id": 999 }).to_string())).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn concurrent_plans_append_whole_records() {
    let d = tempfile::tempdir().unwrap();
    let a = app(d.path());
    let mut tasks = Vec::new();
    for w in 0..16u32 {
        let a = a.clone();
        tasks.push(tokio::spawn(async move {
            let mut req = combined_request();
            req.workload_users = 100 * w;
            call(&a, "POST", "/plan", Some(serde_json::to_string(&req).unwrap())).await
        }));
    }
    let mut ids = Vec::new();
    for t in tasks {
        let (s, h, _) = t.await.unwrap();
        assert_eq!(s, StatusCode::OK);
        ids.push(h["x-run-id"].to_str().unwrap().parse::<u64>().unwrap());
    }
    ids.sort();
    assert_eq!(ids, (1..=16).collect::<Vec<_>>());
    let text = std::fs::read_to_string(d.path().join(LOG_FILE)).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 16);
    for l in lines {
        let rec: Value = serde_json::from_str(l).unwrap();
        assert_eq!(input_digest(&rec["inputs"]), rec["input_digest"].as_str().unwrap());
    }
}
