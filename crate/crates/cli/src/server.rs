//! JSON endpoints over [`Service`].

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};

use askgraph::api::{ApiError, ExploreRequest, QueryRequest};
use askgraph::Service;

/// `POST /api/query`, `GET /api/graph/{id}`, `POST /api/explore`, `GET /api/schema`.
pub fn router(service: Service) -> Router {
    Router::new()
        .route("/api/query", post(query))
        .route("/api/graph/{id}", get(graph))
        .route("/api/explore", post(explore))
        .route("/api/schema", get(schema))
        .with_state(service)
}

struct Failure(ApiError);

impl IntoResponse for Failure {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.0.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self.0)).into_response()
    }
}

fn blocking_failure(e: tokio::task::JoinError) -> Failure {
    Failure(ApiError { status: 500, code: "internal".into(), message: e.to_string(), node: None, diagnostics: None })
}

async fn query(State(svc): State<Service>, Json(req): Json<QueryRequest>) -> Response {
    let result = tokio::task::spawn_blocking(move || svc.query(&req)).await;
    match result {
        Ok(Ok(r)) => Json(r).into_response(),
        Ok(Err(e)) => Failure(e).into_response(),
        Err(e) => blocking_failure(e).into_response(),
    }
}

async fn graph(State(svc): State<Service>, Path(id): Path<String>) -> Response {
    match svc.graph(&id) {
        Ok(r) => Json(r).into_response(),
        Err(e) => Failure(e).into_response(),
    }
}

async fn explore(State(svc): State<Service>, Json(req): Json<ExploreRequest>) -> Response {
    match svc.explore(&req) {
        Ok(r) => Json(r).into_response(),
        Err(e) => Failure(e).into_response(),
    }
}

async fn schema(State(svc): State<Service>) -> Response {
    Json(svc.schema()).into_response()
}
