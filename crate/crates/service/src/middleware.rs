use axum::body::{to_bytes, Body, Bytes};
use axum::extract::{Request, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::middleware::Next;
use axum::response::{IntoResponse, Response};

use crate::{ApiError, AppState};

pub const IDEMPOTENCY_KEY: &str = "idempotency-key";
pub const REPLAYED: &str = "idempotent-replayed";

/// Largest response kept for replay.
const MAX_STORED: usize = 16 << 20;

pub enum Stored {
    InFlight { fingerprint: String },
    Done { fingerprint: String, status: StatusCode, content_type: Option<HeaderValue>, location: Option<HeaderValue>, body: Bytes },
}

impl Stored {
    fn fingerprint(&self) -> &str {
        match self {
            Self::InFlight { fingerprint } | Self::Done { fingerprint, .. } => fingerprint,
        }
    }
}

pub async fn auth(State(st): State<AppState>, req: Request, next: Next) -> Response {
    let Some(token) = &st.config().token else {
        return next.run(req).await;
    };
    let expected = format!("Bearer {token}");
    let ok = req.headers().get(header::AUTHORIZATION).is_some_and(|v| v.as_bytes() == expected.as_bytes());
    if ok || req.method() == Method::OPTIONS {
        return next.run(req).await;
    }
    ApiError::new(StatusCode::UNAUTHORIZED, "unauthorized", "missing or wrong bearer token").into_response()
}

/// Replays the stored response for a repeated `Idempotency-Key` on a
/// mutating request. A key reused for a different request is rejected.
pub async fn idempotency(State(st): State<AppState>, req: Request, next: Next) -> Response {
    let mutating = matches!(*req.method(), Method::POST | Method::PUT | Method::PATCH | Method::DELETE);
    let key = req.headers().get(IDEMPOTENCY_KEY).and_then(|v| v.to_str().ok()).map(str::to_string);
    let (true, Some(key)) = (mutating, key) else {
        return next.run(req).await;
    };
    let (parts, body) = req.into_parts();
    let body = match to_bytes(body, MAX_STORED).await {
        Ok(b) => b,
        Err(_) => return ApiError::invalid("body", "request body too large").into_response(),
    };
    let fingerprint = format!("{} {} {}", parts.method, parts.uri, empnet_core::session::canonical::sha256_hex(&body));
    {
        let mut map = st.0.idempotency.lock().unwrap_or_else(|p| p.into_inner());
        match map.get(&key) {
            Some(s) if s.fingerprint() != fingerprint => {
                return ApiError::invalid("Idempotency-Key", "key was already used for a different request").into_response();
            }
            Some(Stored::InFlight { .. }) => {
                return ApiError::new(StatusCode::CONFLICT, "in_flight", "a request with this key is still running").into_response();
            }
            Some(Stored::Done { status, content_type, location, body, .. }) => {
                let mut resp = (*status, body.clone()).into_response();
                if let Some(ct) = content_type {
                    resp.headers_mut().insert(header::CONTENT_TYPE, ct.clone());
                }
                if let Some(loc) = location {
                    resp.headers_mut().insert(header::LOCATION, loc.clone());
                }
                resp.headers_mut().insert(REPLAYED, HeaderValue::from_static("true"));
                return resp;
            }
            None => {
                map.insert(key.clone(), Stored::InFlight { fingerprint: fingerprint.clone() });
            }
        }
    }
    let resp = next.run(Request::from_parts(parts, Body::from(body))).await;
    let (parts, body) = resp.into_parts();
    let bytes = match to_bytes(body, MAX_STORED).await {
        Ok(b) => b,
        Err(e) => {
            st.0.idempotency.lock().unwrap_or_else(|p| p.into_inner()).remove(&key);
            return ApiError::internal(&format!("response buffering: {e}")).into_response();
        }
    };
    {
        let mut map = st.0.idempotency.lock().unwrap_or_else(|p| p.into_inner());
        if parts.status.is_server_error() {
            // Let the client retry server failures with the same key.
            map.remove(&key);
        } else {
            map.insert(
                key,
                Stored::Done {
                    fingerprint,
                    status: parts.status,
                    content_type: parts.headers.get(header::CONTENT_TYPE).cloned(),
                    location: parts.headers.get(header::LOCATION).cloned(),
                    body: bytes.clone(),
                },
            );
        }
    }
    Response::from_parts(parts, Body::from(bytes))
}
