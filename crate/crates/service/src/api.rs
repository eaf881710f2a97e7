use std::collections::BTreeMap;
use std::fs;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use matrixlens_core::calctrace::{trace_for, verify_trace, OpKind};
use matrixlens_core::MatrixValue;
use serde::Deserialize;
use serde_json::json;

use crate::upload;
use crate::workspace::{now, valid_name, write_durable, JobRecord, JobState, MatrixRecord, Source};
use crate::AppState;

pub(crate) struct ApiError(StatusCode, String);

impl ApiError {
    pub fn new(status: StatusCode, msg: impl Into<String>) -> Self {
        Self(status, msg.into())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

fn internal(e: impl std::fmt::Display) -> ApiError {
    ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
}

type ApiResult<T> = Result<T, ApiError>;

pub(crate) fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/matrices", get(list_matrices))
        .route("/api/matrices/{name}", put(put_matrix).get(get_matrix))
        .route("/api/jobs", post(create_job).get(list_jobs))
        .route("/api/jobs/{id}", get(get_job))
        .route("/api/jobs/{id}/plan", get(get_plan))
        .route("/api/jobs/{id}/frames/{n}", get(get_frame))
        .route("/api/jobs/{id}/video", get(get_video))
        .route("/api/detect", post(detect))
        .layer(DefaultBodyLimit::max(32 * 1024 * 1024))
        .with_state(state)
}

async fn list_matrices(State(s): State<AppState>) -> Json<Vec<MatrixRecord>> {
    Json(s.shared.matrices.read().expect("matrices lock").values().cloned().collect())
}

async fn get_matrix(State(s): State<AppState>, Path(name): Path<String>) -> ApiResult<Json<MatrixRecord>> {
    s.shared
        .matrices
        .read()
        .expect("matrices lock")
        .get(&name)
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no matrix named '{name}'")))
}

#[derive(Deserialize)]
struct PutQuery {
    #[serde(default)]
    replace: bool,
}

/// Body: `{"rows", "cols", "values", "source"?}` or a bare nested array.
async fn put_matrix(
    State(s): State<AppState>,
    Path(name): Path<String>,
    Query(q): Query<PutQuery>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<MatrixRecord>)> {
    if !valid_name(&name) {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "matrix names use letters, digits, '_' and '-' (1-64 chars)"));
    }
    let bad = |e: String| ApiError::new(StatusCode::BAD_REQUEST, format!("malformed matrix: {e}"));
    let mut doc: serde_json::Value = serde_json::from_slice(&body).map_err(|e| bad(e.to_string()))?;
    let source = match doc.as_object_mut().and_then(|o| o.remove("source")) {
        Some(v) => Some(serde_json::from_value::<Source>(v).map_err(|e| bad(e.to_string()))?),
        None => None,
    };
    let value = matrixlens_core::matrix::parse_matrix_json(&doc.to_string()).map_err(|e| bad(e.to_string()))?;

    let shared = &s.shared;
    let mut matrices = shared.matrices.write().expect("matrices lock");
    let (status, rec) = match matrices.get(&name) {
        Some(_) if !q.replace => {
            return Err(ApiError::new(StatusCode::CONFLICT, format!("matrix '{name}' already exists")));
        }
        Some(old) => (
            StatusCode::OK,
            MatrixRecord { name: name.clone(), value, created_at: old.created_at, source: source.unwrap_or(Source::Edited) },
        ),
        None => (StatusCode::CREATED, MatrixRecord { name: name.clone(), value, created_at: now(), source: source.unwrap_or_default() }),
    };
    shared.ws.save_matrix(&rec).map_err(internal)?;
    let old = matrices.insert(name, rec.clone());
    if let Err(e) = shared.ws.save_index(matrices.values()) {
        // keep memory and disk in step
        match old {
            Some(o) => {
                let _ = shared.ws.save_matrix(&o);
                matrices.insert(o.name.clone(), o);
            }
            None => {
                let _ = fs::remove_file(shared.ws.matrix_path(&rec.name));
                matrices.remove(&rec.name);
            }
        }
        return Err(internal(e));
    }
    Ok((status, Json(rec)))
}

#[derive(Deserialize)]
struct JobRequest {
    mode: String,
    #[serde(default)]
    operands: Vec<String>,
}

async fn create_job(State(s): State<AppState>, body: Bytes) -> ApiResult<(StatusCode, Json<JobRecord>)> {
    let req: JobRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("malformed job request: {e}")))?;
    let unprocessable = |m: String| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, m);
    let mode: OpKind = req.mode.parse().map_err(unprocessable)?;
    if req.operands.len() != mode.arity() {
        return Err(unprocessable(format!("{} takes {} operand(s), got {}", mode.as_str(), mode.arity(), req.operands.len())));
    }
    let operands: Vec<MatrixValue> = {
        let matrices = s.shared.matrices.read().expect("matrices lock");
        req.operands
            .iter()
            .map(|n| {
                matrices
                    .get(n)
                    .map(|r| r.value.clone())
                    .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no matrix named '{n}'")))
            })
            .collect::<ApiResult<_>>()?
    };
    let refs: Vec<&MatrixValue> = operands.iter().collect();
    let trace = trace_for(mode, &refs).map_err(|e| unprocessable(e.to_string()))?;
    if !verify_trace(&trace).passed {
        return Err(internal("trace failed verification"));
    }

    let shared = &s.shared;
    let job = {
        let mut jobs = shared.jobs.write().expect("jobs lock");
        let id = jobs.keys().next_back().map_or(1, |k| k + 1);
        let dir = shared.ws.job_dir(id);
        write_durable(&dir.join("trace.json"), trace.to_json().as_bytes()).map_err(internal)?;
        let job = JobRecord {
            id,
            mode,
            operands: req.operands,
            state: JobState::Queued,
            result: Some(trace.result.clone()),
            frame_count: None,
            artifacts: BTreeMap::from([("trace".to_string(), format!("jobs/{id}/trace.json"))]),
            message: None,
            created_at: now(),
        };
        shared.ws.save_job(&job).map_err(internal)?;
        jobs.insert(id, job.clone());
        job
    };
    s.queue.send(job.id).map_err(|_| internal("render worker stopped"))?;
    Ok((StatusCode::CREATED, Json(job)))
}

async fn list_jobs(State(s): State<AppState>) -> Json<Vec<JobRecord>> {
    Json(s.shared.jobs.read().expect("jobs lock").values().cloned().collect())
}

fn job(s: &AppState, id: u64) -> ApiResult<JobRecord> {
    s.shared
        .jobs
        .read()
        .expect("jobs lock")
        .get(&id)
        .cloned()
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no job {id}")))
}

fn finished(s: &AppState, id: u64) -> ApiResult<JobRecord> {
    let j = job(s, id)?;
    match j.state {
        JobState::Done => Ok(j),
        JobState::Failed => Err(ApiError::new(StatusCode::CONFLICT, format!("job {id} failed"))),
        _ => Err(ApiError::new(StatusCode::CONFLICT, format!("job {id} is not finished"))),
    }
}

async fn get_job(State(s): State<AppState>, Path(id): Path<u64>) -> ApiResult<Json<JobRecord>> {
    job(&s, id).map(Json)
}

async fn get_plan(State(s): State<AppState>, Path(id): Path<u64>) -> ApiResult<Response> {
    finished(&s, id)?;
    let path = s.shared.ws.job_dir(id).join("frames/plan.json");
    let bytes = fs::read(&path).map_err(internal)?;
    Ok(([(header::CONTENT_TYPE, "application/json")], bytes).into_response())
}

async fn get_frame(State(s): State<AppState>, Path((id, n)): Path<(u64, usize)>) -> ApiResult<Response> {
    let j = finished(&s, id)?;
    let count = j.frame_count.unwrap_or(0);
    if n == 0 || n > count {
        return Err(ApiError::new(StatusCode::NOT_FOUND, format!("frame {n} out of range 1..={count}")));
    }
    let path = s.shared.ws.job_dir(id).join(format!("frames/frame_{n:06}.svg"));
    let bytes = fs::read(&path).map_err(internal)?;
    Ok(([(header::CONTENT_TYPE, "image/svg+xml")], bytes).into_response())
}

async fn get_video(State(s): State<AppState>, Path(id): Path<u64>) -> ApiResult<Response> {
    let j = finished(&s, id)?;
    if !j.artifacts.contains_key("video") {
        return Err(ApiError::new(StatusCode::NOT_FOUND, j.message.unwrap_or_else(|| "no video for this job".into())));
    }
    let bytes = fs::read(s.shared.ws.job_dir(id).join("video.mp4")).map_err(internal)?;
    Ok(([(header::CONTENT_TYPE, "video/mp4")], bytes).into_response())
}

async fn detect(State(s): State<AppState>, mut form: Multipart) -> ApiResult<Json<upload::DetectResponse>> {
    let bad = |m: String| ApiError::new(StatusCode::BAD_REQUEST, m);
    let mut image = None;
    let mut labels = None;
    while let Some(field) = form.next_field().await.map_err(|e| bad(e.to_string()))? {
        match field.name() {
            Some("image") => image = Some(field.bytes().await.map_err(|e| bad(e.to_string()))?),
            Some("labels") => labels = Some(field.text().await.map_err(|e| bad(e.to_string()))?),
            _ => {}
        }
    }
    let image = image.ok_or_else(|| bad("missing 'image' field".into()))?;
    let shared = s.shared.clone();
    tokio::task::spawn_blocking(move || upload::run(&shared, &image, labels.as_deref()))
        .await
        .map_err(internal)?
        .map(Json)
}
