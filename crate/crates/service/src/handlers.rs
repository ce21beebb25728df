use std::collections::HashMap;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use empnet_core::session::{SessionDir, DEFAULT_REPAIR_LIMIT};
use empnet_core::{
    CoreError, EmpathicStatement, FuzzyJudgmentMatrix, IntrinsicStatement, NetworkInput, Panel, Phase, Session,
    TargetSpec, Thresholds, UtilityKind, UtilityMatrix,
};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;

use crate::{json_response, ApiError, AppState};

type ApiResult = Result<Response, ApiError>;

/// Parses a JSON body; serde's complaint names the field when it can.
fn body<T: DeserializeOwned>(bytes: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(bytes).map_err(|e| {
        let msg = e.to_string();
        let field = ["missing field `", "unknown field `", "duplicate field `"]
            .iter()
            .find_map(|p| msg.strip_prefix(p).and_then(|rest| rest.split('`').next()))
            .unwrap_or("body");
        ApiError::invalid(field, format!("malformed request body: {msg}"))
    })
}

fn ok<T: serde::Serialize>(v: &T) -> ApiResult {
    Ok(json_response(StatusCode::OK, v))
}

fn one_based(field: &str, raw: &str) -> Result<usize, ApiError> {
    match raw.parse::<usize>() {
        Ok(k) if k >= 1 => Ok(k - 1),
        _ => Err(ApiError::invalid(field, format!("{field} must be a positive 1-based index, got {raw:?}"))),
    }
}

fn flag(q: &HashMap<String, String>, name: &str) -> bool {
    q.get(name).is_some_and(|v| v.is_empty() || v == "true" || v == "1")
}

pub async fn health() -> Response {
    json_response(StatusCode::OK, &json!({ "status": "ok" }))
}

pub async fn fallback() -> Response {
    ApiError::not_found("no such endpoint").into_response()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    #[serde(default)]
    id: Option<String>,
    panel: Panel,
    #[serde(default)]
    thresholds: Option<Thresholds>,
}

pub async fn create_session(State(st): State<AppState>, bytes: Bytes) -> ApiResult {
    let req: CreateSession = body(&bytes)?;
    let id = req.id.unwrap_or_else(|| uuid::Uuid::new_v4().simple().to_string());
    let dir: SessionDir = st.0.store.dir(&id).map_err(|_| ApiError::invalid("id", "ids use letters, digits, '-' and '_' only"))?;
    let thresholds = req.thresholds.unwrap_or_else(|| st.config().thresholds());
    let mut s = Session::new(id.clone(), req.panel, thresholds)?;
    let summary = tokio::task::spawn_blocking(move || -> Result<_, ApiError> {
        let lock = dir.lock()?;
        dir.create(&mut s, &lock)?;
        Ok(s.summary())
    })
    .await
    .map_err(|e| ApiError::internal(&format!("worker task failed: {e}")))??;
    let mut resp = json_response(StatusCode::CREATED, &summary);
    if let Ok(v) = format!("/sessions/{id}").parse() {
        resp.headers_mut().insert(header::LOCATION, v);
    }
    Ok(resp)
}

pub async fn list_sessions(State(st): State<AppState>) -> ApiResult {
    let store = st.0.store.clone();
    let list = tokio::task::spawn_blocking(move || store.list())
        .await
        .map_err(|e| ApiError::internal(&format!("worker task failed: {e}")))??;
    ok(&list)
}

pub async fn get_session(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let state = st.read(&id, |s| Ok(s.state.clone())).await?;
    ok(&state)
}

#[derive(Deserialize)]
struct JudgmentBody {
    rows: Vec<Vec<Option<f64>>>,
}

pub async fn put_judgments(State(st): State<AppState>, Path((id, dm)): Path<(String, String)>, bytes: Bytes) -> ApiResult {
    let dm = one_based("dm", &dm)?;
    let req: JudgmentBody = body(&bytes)?;
    let matrix = FuzzyJudgmentMatrix::new(req.rows)?;
    let complete = matrix.is_complete();
    st.mutate(&id, move |s| s.set_judgments(dm, matrix)).await?;
    ok(&json!({ "dm": dm + 1, "complete": complete }))
}

pub async fn post_intrinsic_statements(State(st): State<AppState>, Path(id): Path<String>, bytes: Bytes) -> ApiResult {
    let stmts: Vec<IntrinsicStatement> = body(&bytes)?;
    let total = st
        .mutate(&id, move |s| {
            s.add_intrinsic_statements(stmts)?;
            Ok(s.state.intrinsic_statements.len())
        })
        .await?;
    ok(&json!({ "total": total }))
}

#[derive(Deserialize)]
struct IntrinsicBody {
    rows: Vec<Vec<f64>>,
}

/// Loads intrinsic utilities directly; rows printed at limited precision
/// are rescaled to unit sums.
pub async fn put_intrinsic(State(st): State<AppState>, Path(id): Path<String>, bytes: Bytes) -> ApiResult {
    let req: IntrinsicBody = body(&bytes)?;
    let u = UtilityMatrix::from_printed(UtilityKind::Intrinsic, req.rows).map_err(|e| match e {
        CoreError::Invalid { field, reason } => ApiError::invalid(field.clone(), format!("invalid {field}: {reason}")),
        other => other.into(),
    })?;
    let u = st
        .mutate(&id, move |s| {
            s.set_intrinsic(u)?;
            Ok(s.intrinsic()?.clone())
        })
        .await?;
    ok(&u)
}

pub async fn get_intrinsic(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let u = st.read(&id, |s| Ok(s.intrinsic()?.clone())).await?;
    ok(&u)
}

pub async fn post_complete(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let outcome = st.mutate(&id, |s| s.complete_judgments()).await?;
    ok(&outcome)
}

pub async fn post_statements(State(st): State<AppState>, Path(id): Path<String>, bytes: Bytes) -> ApiResult {
    let stmts: Vec<EmpathicStatement> = body(&bytes)?;
    let added = stmts.len();
    let total = st
        .mutate(&id, move |s| {
            s.add_statements(stmts)?;
            Ok(s.state.statements.len())
        })
        .await?;
    ok(&json!({ "added": added, "total": total }))
}

fn check_body(id: &str, o: &empnet_core::session::CheckOutcome) -> serde_json::Value {
    let see = (!o.consistent).then(|| format!("/sessions/{id}/inconsistencies"));
    json!({ "eps_star": o.eps_star, "consistent": o.consistent, "report": o.report, "see": see })
}

pub async fn get_feasibility(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let o = st.mutate(&id, |s| s.check(DEFAULT_REPAIR_LIMIT)).await?;
    ok(&check_body(&id, &o))
}

pub async fn get_inconsistencies(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let (eps, report) = st.read(&id, |s| Ok((s.state.feasibility, s.state.inconsistencies.clone()))).await?;
    let Some(eps) = eps else {
        return Err(ApiError::new(StatusCode::CONFLICT, "phase", "feasibility has not been checked yet")
            .see(format!("/sessions/{id}/feasibility")));
    };
    ok(&json!({ "eps_star": eps, "consistent": eps.is_positive(), "report": report }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ResolutionBody {
    /// 1-based index into the current report.
    #[serde(default)]
    set: Option<usize>,
    /// Statement ids to drop instead.
    #[serde(default)]
    statements: Option<Vec<String>>,
}

pub async fn post_resolutions(State(st): State<AppState>, Path(id): Path<String>, bytes: Bytes) -> ApiResult {
    let req: ResolutionBody = body(&bytes)?;
    let o = match (req.set, req.statements) {
        (Some(0), None) => return Err(ApiError::invalid("set", "set is 1-based")),
        (Some(k), None) => st.mutate(&id, move |s| s.resolve_set(k - 1, DEFAULT_REPAIR_LIMIT)).await?,
        (None, Some(ids)) => st.mutate(&id, move |s| s.resolve_statements(ids, DEFAULT_REPAIR_LIMIT)).await?,
        _ => return Err(ApiError::invalid("set", "give exactly one of set or statements")),
    };
    ok(&check_body(&id, &o))
}

/// Fails fast with the session's own phase error when it is not resolved.
fn require_resolved(s: &Session, what: impl FnOnce(&mut Session) -> Result<(), CoreError>) -> Result<(), CoreError> {
    if s.state.phase == Phase::Resolved {
        return Ok(());
    }
    // The operation checks its phase before any solving, so this only
    // builds the error.
    what(&mut s.clone())?;
    Err(CoreError::Phase("the statement system is not resolved".into()))
}

pub async fn get_relations(State(st): State<AppState>, Path(id): Path<String>, Query(q): Query<HashMap<String, String>>) -> ApiResult {
    let cached = st
        .read(&id, |s| {
            require_resolved(s, |c| c.relations().map(drop))?;
            let fp = s.system()?.fingerprint();
            Ok(s.state.relations.clone().filter(|r| r.fingerprint == fp))
        })
        .await?;
    if let Some(r) = cached {
        return ok(&r.heatmap());
    }
    if flag(&q, "wait") {
        let r = st.mutate(&id, |s| s.relations()).await?;
        return ok(&r.heatmap());
    }
    Ok(st.spawn_job("relations", &id, |s| s.relations().map(|r| r.heatmap())))
}

pub async fn post_select(State(st): State<AppState>, Path(id): Path<String>, Query(q): Query<HashMap<String, String>>, bytes: Bytes) -> ApiResult {
    let target: TargetSpec = body(&bytes)?;
    let seed = match q.get("seed") {
        None => 0,
        Some(v) => v.parse().map_err(|_| ApiError::invalid("seed", "seed must be an unsigned integer"))?,
    };
    let probe = target.clone();
    st.read(&id, move |s| require_resolved(s, |c| c.select(&probe, seed).map(drop))).await?;
    let background = matches!(target, TargetSpec::Central { .. }) || flag(&q, "async");
    if background && !flag(&q, "wait") {
        return Ok(st.spawn_job("select", &id, move |s| s.select(&target, seed)));
    }
    let r = st.mutate(&id, move |s| s.select(&target, seed)).await?;
    ok(&r)
}

pub async fn get_welfare(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let r = st.mutate(&id, |s| s.welfare(None)).await?;
    ok(&r)
}

/// Welfare for caller-supplied networks.
pub async fn post_welfare(State(st): State<AppState>, Path(id): Path<String>, bytes: Bytes) -> ApiResult {
    let nets: Vec<NetworkInput> = body(&bytes)?;
    let r = st.mutate(&id, move |s| s.welfare(Some(nets))).await?;
    ok(&r)
}

fn text(content_type: &'static str, body: String) -> Response {
    (StatusCode::OK, [(header::CONTENT_TYPE, content_type)], body).into_response()
}

pub async fn get_export(State(st): State<AppState>, Path(id): Path<String>, Query(q): Query<HashMap<String, String>>) -> ApiResult {
    let format = q.get("format").map(String::as_str).unwrap_or("json").to_string();
    let default_what = match format.as_str() {
        "dot" => "network",
        "csv" => "relations",
        "json" => "session",
        _ => return Err(ApiError::invalid("format", "format must be dot, csv or json")),
    };
    let what = q.get("what").cloned().unwrap_or_else(|| default_what.to_string());
    let target = q.get("target").cloned();
    let state = st.read(&id, |s| Ok(s.state.clone())).await?;
    let missing = |thing: &str| ApiError::new(StatusCode::CONFLICT, "precondition", format!("no {thing} computed yet"));
    let unsupported = || ApiError::invalid("what", format!("{format} export of {what} is not supported"));
    match (what.as_str(), format.as_str()) {
        ("session", "json") => ok(&state),
        ("network", _) => {
            let sel = match &target {
                Some(t) => {
                    let key = if t == "discriminating" { "most-discriminating" } else { t.as_str() };
                    state.selections.get(key).ok_or_else(|| missing(&format!("{t} network")))?
                }
                None => match state.selections.len() {
                    1 => state.selections.values().next().expect("one selection"),
                    0 => return Err(missing("network")),
                    _ => return Err(ApiError::invalid("target", "several networks are selected; pass target")),
                },
            };
            let name = sel.target.name();
            match format.as_str() {
                "dot" => Ok(text("text/vnd.graphviz", empnet_core::export::to_dot(&sel.network, state.thresholds.eps_prime, name))),
                "csv" => Ok(text("text/csv", empnet_core::export::matrix_csv(sel.network.rows()))),
                _ => ok(&json!({ "target": sel.target, "network": sel.network, "diagnostics": sel.diagnostics })),
            }
        }
        ("relations", "csv") => Ok(text("text/csv", state.relations.as_ref().ok_or_else(|| missing("relations"))?.to_csv())),
        ("relations", "json") => ok(&state.relations.as_ref().ok_or_else(|| missing("relations"))?.heatmap()),
        ("welfare", "csv") => Ok(text("text/csv", state.welfare.as_ref().ok_or_else(|| missing("welfare"))?.to_csv())),
        ("welfare", "json") => ok(state.welfare.as_ref().ok_or_else(|| missing("welfare"))?),
        ("intrinsic", "csv") => Ok(text("text/csv", empnet_core::export::matrix_csv(state.intrinsic.as_ref().ok_or_else(|| missing("intrinsic utilities"))?.rows()))),
        ("intrinsic", "json") => ok(state.intrinsic.as_ref().ok_or_else(|| missing("intrinsic utilities"))?),
        ("session" | "relations" | "welfare" | "intrinsic", _) => Err(unsupported()),
        _ => Err(ApiError::invalid("what", "what must be session, network, relations, welfare or intrinsic")),
    }
}

pub async fn get_job(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let job = st.job(&id).ok_or_else(|| ApiError::not_found(format!("unknown job {id:?}")))?;
    ok(&job)
}
