use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use empnet_core::session::canonical;
use empnet_core::{CoreError, Session};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::ErrorBody;
use crate::{json_response, AppState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Queued,
    Running,
    Succeeded,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: String,
    pub kind: String,
    pub session: String,
    pub status: JobStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
}

impl AppState {
    fn set_job(&self, id: &str, f: impl FnOnce(&mut Job)) {
        let mut jobs = self.0.jobs.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(job) = jobs.get_mut(id) {
            f(job);
        }
    }

    pub fn job(&self, id: &str) -> Option<Job> {
        self.0.jobs.lock().unwrap_or_else(|p| p.into_inner()).get(id).cloned()
    }

    /// Queues `work` against session `session` and answers 202 with the
    /// job id. At most `workers` jobs run at once.
    pub(crate) fn spawn_job<T, F>(&self, kind: &str, session: &str, work: F) -> Response
    where
        T: Serialize + Send + 'static,
        F: FnOnce(&mut Session) -> Result<T, CoreError> + Send + 'static,
    {
        let id = uuid::Uuid::new_v4().to_string();
        let job = Job { id: id.clone(), kind: kind.into(), session: session.into(), status: JobStatus::Queued, result: None, error: None };
        self.0.jobs.lock().unwrap_or_else(|p| p.into_inner()).insert(id.clone(), job);
        let (st, job_id, session) = (self.clone(), id.clone(), session.to_string());
        tokio::spawn(async move {
            let _permit = st.0.workers.clone().acquire_owned().await;
            st.set_job(&job_id, |j| j.status = JobStatus::Running);
            let outcome = st.mutate(&session, work).await;
            st.set_job(&job_id, |j| match outcome {
                Ok(v) => match canonical::to_value(&v) {
                    Ok(v) => {
                        j.status = JobStatus::Succeeded;
                        j.result = Some(v);
                    }
                    Err(e) => {
                        j.status = JobStatus::Failed;
                        j.error = Some(crate::ApiError::internal(&format!("result encoding: {e}")).0);
                    }
                },
                Err(e) => {
                    j.status = JobStatus::Failed;
                    j.error = Some(e.0);
                }
            });
        });
        let href = format!("/jobs/{id}");
        let mut resp = json_response(StatusCode::ACCEPTED, &json!({ "job": id, "status": JobStatus::Queued, "href": href }));
        if let Ok(v) = href.parse() {
            resp.headers_mut().insert(header::LOCATION, v);
        }
        resp.into_response()
    }
}
