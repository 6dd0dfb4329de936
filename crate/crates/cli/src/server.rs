//! HTTP/JSON front end over one gateway.
//!
//! `POST /v1/{op}` takes the request fields (and optional envelope fields)
//! as a JSON object. `GET /v1/events?since=N` is the console's change feed.

use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use basis_core::gateway::Request;
use basis_core::{ApiError, Envelope, Gateway};
use serde::Deserialize;
use serde_json::{json, Value};

pub type Shared = Arc<Mutex<Gateway>>;

pub fn router(gateway: Shared) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/v1/events", get(events))
        .route("/v1/{op}", post(operation))
        .with_state(gateway)
}

/// HTTP status for an error code. `None` means the code is not known.
pub fn status_for(code: &str) -> Option<StatusCode> {
    let s = match code {
        "bad-id" | "empty-statement" | "invalid-value" | "invalid-endpoint" | "empty-risk-note"
        | "invalid-discrimination" | "budget-too-small" | "bad-config" | "invalid-policy" | "no-trials"
        | "bad-request" => StatusCode::BAD_REQUEST,
        "non-expert-actor" => StatusCode::FORBIDDEN,
        "unknown-premise" | "unknown-action" | "unknown-evidence" | "unknown-discrepancy" | "unknown-probe"
        | "unknown-object" | "unknown-endpoint" => StatusCode::NOT_FOUND,
        "predecessor-not-rejected" | "duplicate-link" | "cycle-detected" | "action-not-pending"
        | "override-required" | "gate-already-allowed" | "unlinked-discrepancy" | "untyped-discrepancy"
        | "already-linked" | "already-resolved" | "framework-kind-change" | "session-not-open"
        | "illegal-transition" | "evidence-below-threshold" | "open-discrepancy" | "constraint-violation" => {
            StatusCode::CONFLICT
        }
        "chain-broken" | "inconsistent-log" | "unknown-event-kind" | "head-mismatch" | "storage-failure"
        | "port-in-use" => StatusCode::INTERNAL_SERVER_ERROR,
        _ => return None,
    };
    Some(s)
}

fn error_response(err: ApiError) -> Response {
    let status = status_for(&err.code).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    (status, Json(err)).into_response()
}

fn bad_request(message: impl Into<String>) -> Response {
    error_response(ApiError::new("bad-request", message))
}

fn handle(gateway: &Shared, mut env: Envelope, headers: &HeaderMap) -> Response {
    if env.token.is_none() {
        env.token = headers
            .get("authorization")
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .map(str::to_string);
    }
    let outcome = gateway.lock().unwrap_or_else(|p| p.into_inner()).handle(env);
    match outcome {
        Ok(r) => Json(r).into_response(),
        Err(e) => error_response(e),
    }
}

async fn health(State(gateway): State<Shared>) -> Json<Value> {
    let gw = gateway.lock().unwrap_or_else(|p| p.into_inner());
    let ledger = gw.engine().ledger();
    Json(json!({ "status": "ok", "events": gw.engine().events().len(), "head": ledger.head() }))
}

#[derive(Deserialize)]
struct Since {
    since: Option<u64>,
}

async fn events(State(gateway): State<Shared>, Query(q): Query<Since>, headers: HeaderMap) -> Response {
    handle(&gateway, Envelope::new(Request::Events { since: q.since }), &headers)
}

async fn operation(
    State(gateway): State<Shared>,
    Path(op): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Response {
    if !Request::OPS.contains(&op.as_str()) {
        let err = ApiError::new("bad-request", format!("unknown operation `{op}`"));
        return (StatusCode::NOT_FOUND, Json(err)).into_response();
    }
    let mut fields = if body.iter().all(u8::is_ascii_whitespace) {
        serde_json::Map::new()
    } else {
        match serde_json::from_slice::<Value>(&body) {
            Ok(Value::Object(m)) => m,
            Ok(_) => return bad_request("body must be a JSON object"),
            Err(e) => return bad_request(format!("invalid JSON: {e}")),
        }
    };
    match fields.get("op") {
        Some(Value::String(o)) if *o == op => {}
        Some(_) => return bad_request("`op` in the body disagrees with the path"),
        None => {
            fields.insert("op".into(), Value::String(op));
        }
    }
    match serde_json::from_value::<Envelope>(Value::Object(fields)) {
        Ok(env) => handle(&gateway, env, &headers),
        Err(e) => bad_request(e.to_string()),
    }
}
