#![allow(dead_code)]

use std::path::PathBuf;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use empnet_service::{router, AppState, Config};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../cli/data/example").join(name)
}

pub fn load(name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(data(name)).unwrap()).unwrap()
}

pub struct Api {
    pub app: Router,
    pub root: tempfile::TempDir,
    pub headers: Vec<(String, String)>,
}

pub struct Reply {
    pub status: StatusCode,
    pub headers: axum::http::HeaderMap,
    pub text: String,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.text).unwrap_or_else(|e| panic!("{e}: {}", self.text))
    }
}

impl Api {
    pub fn new() -> Self {
        Self::with(|_| {})
    }

    pub fn with(tweak: impl FnOnce(&mut Config)) -> Self {
        let root = tempfile::tempdir().unwrap();
        let mut config = Config::with_storage(root.path());
        tweak(&mut config);
        let app = router(AppState::new(config).unwrap());
        Self { app, root, headers: Vec::new() }
    }

    pub async fn send(&self, method: Method, uri: &str, body: Option<Value>, extra: &[(&str, &str)]) -> Reply {
        let mut req = Request::builder().method(method).uri(uri);
        for (k, v) in &self.headers {
            req = req.header(k, v);
        }
        for (k, v) in extra {
            req = req.header(*k, *v);
        }
        let body = match body {
            Some(v) => Body::from(serde_json::to_vec(&v).unwrap()),
            None => Body::empty(),
        };
        let resp = self.app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
        let status = resp.status();
        let headers = resp.headers().clone();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        Reply { status, headers, text: String::from_utf8(bytes.to_vec()).unwrap() }
    }

    pub async fn get(&self, uri: &str) -> Reply {
        self.send(Method::GET, uri, None, &[]).await
    }

    pub async fn post(&self, uri: &str, body: Value) -> Reply {
        self.send(Method::POST, uri, Some(body), &[]).await
    }

    pub async fn put(&self, uri: &str, body: Value) -> Reply {
        self.send(Method::PUT, uri, Some(body), &[]).await
    }

    /// Polls a job until it finishes and returns its final record.
    pub async fn wait_job(&self, accepted: &Reply) -> Value {
        assert_eq!(accepted.status, StatusCode::ACCEPTED, "{}", accepted.text);
        let href = accepted.json()["href"].as_str().unwrap().to_string();
        assert_eq!(accepted.headers["location"], href.as_str());
        for _ in 0..3000 {
            let job = self.get(&href).await.json();
            match job["status"].as_str().unwrap() {
                "succeeded" | "failed" => return job,
                _ => tokio::time::sleep(Duration::from_millis(10)).await,
            }
        }
        panic!("job {href} did not finish");
    }

    /// Session `id` on the printed intrinsic utilities with the six
    /// example statements.
    pub async fn printed_session(&self, id: &str) {
        let problem = load("problem-intrinsic.json");
        let r = self.post("/sessions", serde_json::json!({ "id": id, "panel": problem["panel"] })).await;
        assert_eq!(r.status, StatusCode::CREATED, "{}", r.text);
        let r = self.put(&format!("/sessions/{id}/intrinsic"), serde_json::json!({ "rows": problem["intrinsic"] })).await;
        assert_eq!(r.status, StatusCode::OK, "{}", r.text);
        let r = self.post(&format!("/sessions/{id}/statements"), load("statements.json")).await;
        assert_eq!(r.status, StatusCode::OK, "{}", r.text);
    }
}
