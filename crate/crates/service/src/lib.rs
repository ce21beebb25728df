//! HTTP front end for empathic-network sessions. Sessions live on disk in
//! the same layout the command-line tool uses, one directory per id.
//!
//! Long computations (relation matrices, the central target) run as jobs:
//! the request returns 202 with a job id to poll at `/jobs/{id}`.

pub mod config;
pub mod error;
mod handlers;
mod jobs;
mod middleware;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::Router;
use empnet_core::session::canonical;
use empnet_core::session::{SessionStore, StoreError};
use empnet_core::{CoreError, Phase, Session};
use serde::Serialize;
use tokio::sync::Semaphore;
use tower_http::cors::{Any, CorsLayer};
use tower_http::trace::TraceLayer;

pub use config::Config;
pub use error::{ApiError, ErrorBody};
pub use jobs::{Job, JobStatus};

/// Shared service state; cheap to clone.
#[derive(Clone)]
pub struct AppState(Arc<Inner>);

pub struct Inner {
    config: Config,
    store: SessionStore,
    jobs: Mutex<HashMap<String, Job>>,
    workers: Arc<Semaphore>,
    /// Serializes writers inside this process; the lock file guards
    /// against other processes.
    gates: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    idempotency: Mutex<HashMap<String, middleware::Stored>>,
}

impl AppState {
    pub fn new(config: Config) -> Result<Self, StoreError> {
        let store = SessionStore::open(&config.storage)?;
        let workers = Arc::new(Semaphore::new(config.workers.max(1)));
        Ok(Self(Arc::new(Inner {
            config,
            store,
            jobs: Mutex::default(),
            workers,
            gates: Mutex::default(),
            idempotency: Mutex::default(),
        })))
    }

    pub fn config(&self) -> &Config {
        &self.0.config
    }

    fn gate(&self, id: &str) -> Arc<Mutex<()>> {
        let mut gates = self.0.gates.lock().unwrap_or_else(|p| p.into_inner());
        gates.entry(id.to_string()).or_default().clone()
    }

    fn dir(&self, id: &str) -> Result<empnet_core::SessionDir, ApiError> {
        let dir = self.0.store.dir(id)?;
        if !dir.exists() {
            return Err(ApiError::not_found(format!("unknown session {id:?}")));
        }
        Ok(dir)
    }

    /// Loads, runs `f`, and persists whatever events `f` committed.
    fn mutate_blocking<T>(&self, id: &str, f: impl FnOnce(&mut Session) -> Result<T, CoreError>) -> Result<T, ApiError> {
        let dir = self.dir(id)?;
        let gate = self.gate(id);
        let _held = gate.lock().unwrap_or_else(|p| p.into_inner());
        let lock = dir.lock()?;
        let mut s = dir.load()?;
        let r = f(&mut s);
        dir.save(&mut s, &lock)?;
        r.map_err(|e| explain(id, &s, e))
    }

    fn read_blocking<T>(&self, id: &str, f: impl FnOnce(&Session) -> Result<T, CoreError>) -> Result<T, ApiError> {
        let s = self.dir(id)?.load()?;
        f(&s).map_err(|e| explain(id, &s, e))
    }

    pub(crate) async fn mutate<T, F>(&self, id: &str, f: F) -> Result<T, ApiError>
    where
        T: Send + 'static,
        F: FnOnce(&mut Session) -> Result<T, CoreError> + Send + 'static,
    {
        let (st, id) = (self.clone(), id.to_string());
        tokio::task::spawn_blocking(move || st.mutate_blocking(&id, f))
            .await
            .map_err(|e| ApiError::internal(&format!("worker task failed: {e}")))?
    }

    pub(crate) async fn read<T, F>(&self, id: &str, f: F) -> Result<T, ApiError>
    where
        T: Send + 'static,
        F: FnOnce(&Session) -> Result<T, CoreError> + Send + 'static,
    {
        let (st, id) = (self.clone(), id.to_string());
        tokio::task::spawn_blocking(move || st.read_blocking(&id, f))
            .await
            .map_err(|e| ApiError::internal(&format!("worker task failed: {e}")))?
    }
}

/// Phase errors on an inconsistent session point at the report.
fn explain(id: &str, s: &Session, e: CoreError) -> ApiError {
    let inconsistent = s.state.phase == Phase::EmpathicElicitation && s.state.feasibility.is_some_and(|f| !f.is_positive());
    let phase = matches!(e, CoreError::Phase(_));
    let api = ApiError::from(e);
    if phase && inconsistent {
        api.see(format!("/sessions/{id}/inconsistencies"))
    } else {
        api
    }
}

/// JSON with sorted keys and quantized floats, so equal results give
/// equal bytes.
pub fn json_response<T: Serialize>(status: StatusCode, body: &T) -> Response {
    match canonical::to_value(body) {
        Ok(v) => {
            let bytes = serde_json::to_vec(&v).expect("a JSON value always serializes");
            (status, [(header::CONTENT_TYPE, "application/json")], bytes).into_response()
        }
        Err(e) => ApiError::internal(&format!("response encoding: {e}")).into_response(),
    }
}

pub fn router(state: AppState) -> Router {
    use handlers as h;
    let api = Router::new()
        .route("/health", get(h::health))
        .route("/sessions", get(h::list_sessions).post(h::create_session))
        .route("/sessions/{id}", get(h::get_session))
        .route("/sessions/{id}/judgments/{dm}", put(h::put_judgments))
        .route("/sessions/{id}/intrinsic-statements", post(h::post_intrinsic_statements))
        .route("/sessions/{id}/intrinsic", get(h::get_intrinsic).put(h::put_intrinsic))
        .route("/sessions/{id}/complete", post(h::post_complete))
        .route("/sessions/{id}/statements", post(h::post_statements))
        .route("/sessions/{id}/feasibility", get(h::get_feasibility))
        .route("/sessions/{id}/inconsistencies", get(h::get_inconsistencies))
        .route("/sessions/{id}/resolutions", post(h::post_resolutions))
        .route("/sessions/{id}/relations", get(h::get_relations))
        .route("/sessions/{id}/select", post(h::post_select))
        .route("/sessions/{id}/welfare", get(h::get_welfare).post(h::post_welfare))
        .route("/sessions/{id}/export", get(h::get_export))
        .route("/jobs/{id}", get(h::get_job))
        .fallback(h::fallback)
        .layer(axum::middleware::from_fn_with_state(state.clone(), middleware::idempotency))
        .layer(axum::middleware::from_fn_with_state(state.clone(), middleware::auth));
    api.layer(TraceLayer::new_for_http())
        .layer(CorsLayer::new().allow_origin(Any).allow_methods(Any).allow_headers(Any))
        .with_state(state)
}
