//! HTTP API used by the operator console.

use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use geese_core::catalog::{parse_json, Catalog};
use geese_core::perf_models::operational_time;
use geese_core::planner::{plan, DeploymentRequest, Plan, PlanError};
use geese_core::simulator::{simulate_collaborative, simulate_delivery, CollabConfig};

use crate::runlog::{RunKind, RunLog};

pub const REQUEST_TIMEOUT: Duration = Duration::from_secs(120);

#[derive(Clone)]
pub struct AppState {
    pub catalog: Arc<Catalog>,
    pub runs: Arc<RunLog>,
}

pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn bad_request(message: impl ToString) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message.to_string())
    }

    fn internal(message: impl ToString) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, message.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Inputs recorded for a plan run; the digest is taken over this value.
pub fn plan_inputs(request: &DeploymentRequest, catalog: &Catalog) -> Value {
    json!({ "request": request, "catalog": catalog })
}

/// Runs `f` off the async executor, bounded by [`REQUEST_TIMEOUT`].
async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce() -> ApiResult<T> + Send + 'static,
{
    match tokio::time::timeout(REQUEST_TIMEOUT, tokio::task::spawn_blocking(f)).await {
        Ok(Ok(r)) => r,
        Ok(Err(e)) => Err(ApiError::internal(e)),
        Err(_) => Err(ApiError::new(StatusCode::GATEWAY_TIMEOUT, "request timed out")),
    }
}

fn json_response(status: StatusCode, body: String) -> Response {
    let mut r = (status, body).into_response();
    r.headers_mut()
        .insert(header::CONTENT_TYPE, HeaderValue::from_static("application/json"));
    r
}

async fn get_catalog(State(st): State<AppState>) -> Response {
    json_response(StatusCode::OK, st.catalog.to_json())
}

#[derive(Deserialize)]
struct EnduranceQuery {
    uav: String,
    payload: f64,
}

#[derive(Serialize)]
struct EnduranceAnswer {
    uav: String,
    payload_gm: f64,
    operational_time_s: f64,
    usable_endurance_s: f64,
}

async fn get_endurance(State(st): State<AppState>, Query(q): Query<EnduranceQuery>) -> ApiResult<Json<EnduranceAnswer>> {
    let uav = st
        .catalog
        .uav(&q.uav)
        .map_err(|e| ApiError::new(StatusCode::NOT_FOUND, e.to_string()))?;
    let t = operational_time(uav, q.payload).map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    Ok(Json(EnduranceAnswer {
        uav: uav.id.clone(),
        payload_gm: q.payload,
        operational_time_s: t,
        usable_endurance_s: t * st.catalog.calibration.usable_intervals(),
    }))
}

async fn post_plan(State(st): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let text = std::str::from_utf8(&body).map_err(ApiError::bad_request)?;
    let request: DeploymentRequest = parse_json(text).map_err(ApiError::bad_request)?;
    blocking(move || {
        let outcome = plan(&request, &st.catalog).map_err(|e| match e {
            PlanError::InvalidRequest(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
            other => ApiError::internal(other),
        })?;
        let doc = outcome.to_canonical_json();
        let rec = st
            .runs
            .append(
                RunKind::Plan,
                plan_inputs(&request, &st.catalog),
                serde_json::to_value(&outcome).expect("outcome serializes"),
                Vec::new(),
            )
            .map_err(ApiError::internal)?;
        let mut r = json_response(StatusCode::OK, doc);
        let h = r.headers_mut();
        h.insert("x-run-id", HeaderValue::from(rec.run_id));
        h.insert(
            "x-input-digest",
            HeaderValue::from_str(&rec.input_digest).expect("hex is a valid header"),
        );
        Ok(r)
    })
    .await
}

async fn post_collab(State(st): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let text = std::str::from_utf8(&body).map_err(ApiError::bad_request)?;
    let config: CollabConfig = parse_json(text).map_err(ApiError::bad_request)?;
    blocking(move || {
        let report = simulate_collaborative(&config).map_err(ApiError::bad_request)?;
        let value = serde_json::to_value(&report).expect("report serializes");
        let rec = st
            .runs
            .append(
                RunKind::SimulateCollab,
                json!({ "config": config }),
                json!({ "success_rate": report.success_rate }),
                vec![value.clone()],
            )
            .map_err(ApiError::internal)?;
        let mut r = Json(value).into_response();
        r.headers_mut().insert("x-run-id", HeaderValue::from(rec.run_id));
        Ok(r)
    })
    .await
}

#[derive(Deserialize)]
struct DeliveryBody {
    plan_id: Option<u64>,
    plan: Option<Plan>,
    request: Option<DeploymentRequest>,
}

async fn post_delivery(State(st): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let text = std::str::from_utf8(&body).map_err(ApiError::bad_request)?;
    let b: DeliveryBody = parse_json(text).map_err(ApiError::bad_request)?;
    let (plan, request) = match (b.plan_id, b.plan) {
        (Some(id), None) => {
            let rec = st
                .runs
                .get(id)
                .filter(|r| r.kind == RunKind::Plan)
                .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no plan run {id}")))?;
            let plan: Plan = serde_json::from_value(rec.outcome.clone())
                .map_err(|_| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, format!("run {id} is not an optimal plan")))?;
            let request: DeploymentRequest =
                serde_json::from_value(rec.inputs["request"].clone()).map_err(ApiError::internal)?;
            (plan, b.request.unwrap_or(request))
        }
        (None, Some(plan)) => {
            let request = b
                .request
                .ok_or_else(|| ApiError::bad_request("`request` is required with an inline plan"))?;
            (plan, request)
        }
        _ => return Err(ApiError::bad_request("give exactly one of `plan_id` and `plan`")),
    };
    blocking(move || {
        let report = simulate_delivery(&plan, &request, &st.catalog)
            .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
        let value = serde_json::to_value(&report).expect("report serializes");
        let rec = st
            .runs
            .append(
                RunKind::SimulateDelivery,
                json!({ "plan": plan, "request": request }),
                json!({ "success_rate": report.success_rate, "warnings": report.warnings }),
                vec![value.clone()],
            )
            .map_err(ApiError::internal)?;
        let mut r = Json(value).into_response();
        r.headers_mut().insert("x-run-id", HeaderValue::from(rec.run_id));
        Ok(r)
    })
    .await
}

async fn get_runs(State(st): State<AppState>) -> Json<Value> {
    Json(serde_json::to_value(st.runs.list()).expect("records serialize"))
}

async fn get_run(State(st): State<AppState>, UrlPath(id): UrlPath<u64>) -> ApiResult<Json<Value>> {
    st.runs
        .get(id)
        .map(|r| Json(serde_json::to_value(r).expect("record serializes")))
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no run {id}")))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/catalog", get(get_catalog))
        .route("/models/endurance", get(get_endurance))
        .route("/plan", post(post_plan))
        .route("/simulate/collab", post(post_collab))
        .route("/simulate/delivery", post(post_delivery))
        .route("/runs", get(get_runs))
        .route("/runs/{id}", get(get_run))
        .with_state(state)
}

/// Binds `addr` and serves until interrupted.
pub async fn serve(addr: SocketAddr, catalog: Catalog, state_dir: &Path) -> anyhow::Result<()> {
    let runs = RunLog::open(state_dir)
        .map_err(|e| anyhow::anyhow!("state dir {} is not usable: {e}", state_dir.display()))?;
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| anyhow::anyhow!("cannot bind {addr}: {e}"))?;
    eprintln!(
        "geese listening on http://{} (runs in {})",
        listener.local_addr()?,
        runs.path().display()
    );
    let app = router(AppState {
        catalog: Arc::new(catalog),
        runs: Arc::new(runs),
    });
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
