//! HTTP API over uploaded datasets.
//!
//! Datasets are immutable once registered; the registry lock is only held to
//! insert or clone an `Arc`. Explain and series computations run on blocking
//! threads, at most `workers` at a time.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use evolex_core::pipeline::{EvolvingExplanations, RESULT_FORMAT_VERSION};
use evolex_core::{
    enumerate_explanations, explain_evolving, load_csv, materialize_cube, AggFunction, AggSpec,
    AttributeKind, AttributeSchema, Error, Relation, Series,
};
use serde::Serialize;
use serde_json::{json, Value};
use tokio::sync::Semaphore;
use tower_http::services::ServeDir;

use crate::config::{merge_request, Config, FieldError};

/// Serialize a result the way both the CLI and the service emit it.
pub fn render(result: &EvolvingExplanations) -> Result<String, Error> {
    result.to_json()
}

#[derive(Debug, Clone)]
pub struct ServiceOptions {
    /// Maximum upload body size in bytes.
    pub upload_limit: usize,
    pub workers: usize,
    pub static_dir: Option<PathBuf>,
    pub config: Config,
}

impl Default for ServiceOptions {
    fn default() -> Self {
        ServiceOptions {
            upload_limit: 256 << 20,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            static_dir: None,
            config: Config::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DatasetHandle {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub time_attr: String,
    pub schema: Vec<AttributeSchema>,
    pub row_count: usize,
    pub distinct_time_count: usize,
}

struct Dataset {
    handle: DatasetHandle,
    relation: Relation,
}

struct AppState {
    datasets: RwLock<BTreeMap<String, Arc<Dataset>>>,
    next_id: AtomicU64,
    workers: Arc<Semaphore>,
    options: ServiceOptions,
}

/// JSON error body: `{"error": {"status", "message", "field"?}}`.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
    field: Option<String>,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
            field: None,
        }
    }

    fn bad_request(field: &str, message: impl Into<String>) -> Self {
        ApiError {
            field: Some(field.to_string()),
            ..ApiError::new(StatusCode::BAD_REQUEST, message)
        }
    }

    fn internal() -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal error")
    }

    fn unprocessable(err: &Error) -> Self {
        let field = match err.root() {
            Error::UnknownAttribute(_) => Some("attribute"),
            Error::UnknownMetric(_) => Some("opts.variance_metric"),
            _ => None,
        };
        ApiError {
            field: field.map(str::to_string),
            ..ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, err.to_string())
        }
    }
}

impl From<FieldError> for ApiError {
    fn from(err: FieldError) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            message: err.message,
            field: err.field,
        }
    }
}

impl From<BytesRejection> for ApiError {
    fn from(rejection: BytesRejection) -> Self {
        ApiError::new(rejection.status(), rejection.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({"status": self.status.as_u16(), "message": self.message});
        if let Some(field) = self.field {
            body["field"] = json!(field);
        }
        (self.status, Json(json!({ "error": body }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(options: ServiceOptions) -> Router {
    let limit = options.upload_limit;
    let static_dir = options.static_dir.clone();
    let state = Arc::new(AppState {
        datasets: RwLock::new(BTreeMap::new()),
        next_id: AtomicU64::new(1),
        workers: Arc::new(Semaphore::new(options.workers.max(1))),
        options,
    });
    let api = Router::new()
        .route("/api/health", get(health))
        .route(
            "/api/datasets",
            post(upload).get(list).layer(DefaultBodyLimit::max(limit)),
        )
        .route("/api/datasets/{id}", get(dataset))
        .route("/api/datasets/{id}/schema", get(schema))
        .route("/api/datasets/{id}/series", get(series))
        .route("/api/explain", post(explain))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Run `job` on a blocking thread once a worker slot is free.
async fn on_worker<T, F>(state: &AppState, job: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce() -> ApiResult<T> + Send + 'static,
{
    let permit = state.workers.clone().acquire_owned().await.map_err(|_| ApiError::internal())?;
    tokio::task::spawn_blocking(move || {
        let _permit = permit;
        job()
    })
    .await
    .map_err(|_| ApiError::internal())?
}

fn lookup(state: &AppState, id: &str) -> ApiResult<Arc<Dataset>> {
    let datasets = state.datasets.read().map_err(|_| ApiError::internal())?;
    datasets
        .get(id)
        .cloned()
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown dataset {id:?}")))
}

async fn health(State(state): State<Arc<AppState>>) -> ApiResult<Json<Value>> {
    let count = state.datasets.read().map_err(|_| ApiError::internal())?.len();
    Ok(Json(json!({
        "status": "ok",
        "version": RESULT_FORMAT_VERSION,
        "datasets": count,
    })))
}

/// Query parameters as an ordered list; repeated keys are kept.
type Params = Query<Vec<(String, String)>>;

fn single<'a>(params: &'a [(String, String)], key: &str) -> ApiResult<Option<&'a str>> {
    let mut found = params.iter().filter(|(k, _)| k == key);
    let first = found.next().map(|(_, v)| v.as_str());
    if found.next().is_some() {
        return Err(ApiError::bad_request(key, format!("{key} given more than once")));
    }
    Ok(first)
}

fn reject_unknown(params: &[(String, String)], known: &[&str]) -> ApiResult<()> {
    match params.iter().find(|(k, _)| !known.contains(&k.as_str())) {
        Some((k, _)) => Err(ApiError::bad_request(
            k,
            format!("unknown query parameter {k:?}, expected one of {known:?}"),
        )),
        None => Ok(()),
    }
}

/// `POST /api/datasets?time=NAME[&name=LABEL]` with the CSV as the body.
async fn upload(
    State(state): State<Arc<AppState>>,
    Query(params): Params,
    body: Result<Bytes, BytesRejection>,
) -> ApiResult<(StatusCode, Json<DatasetHandle>)> {
    reject_unknown(&params, &["time", "name"])?;
    let time = single(&params, "time")?
        .ok_or_else(|| ApiError::bad_request("time", "query parameter time is required"))?
        .to_string();
    let name = single(&params, "name")?.map(str::to_string);
    let body = body?;
    let id = format!("ds{}", state.next_id.fetch_add(1, Ordering::Relaxed));
    let config = state.options.config.clone();
    let handle_id = id.clone();
    let dataset = on_worker(&state, move || {
        let relation = load_csv(body.as_ref(), &time, &config.type_hints)
            .and_then(|r| r.with_derived(&config.derived))
            .map_err(|e| match e {
                Error::UnknownAttribute(_) | Error::DerivedColumn { .. } => ApiError::unprocessable(&e),
                other => ApiError::bad_request("body", other.to_string()),
            })?;
        let handle = DatasetHandle {
            id: handle_id,
            name,
            time_attr: relation.time_attr().to_string(),
            schema: relation.schema().to_vec(),
            row_count: relation.row_count(),
            distinct_time_count: relation.distinct_times().len(),
        };
        Ok(Dataset { handle, relation })
    })
    .await?;
    let handle = dataset.handle.clone();
    state
        .datasets
        .write()
        .map_err(|_| ApiError::internal())?
        .insert(id, Arc::new(dataset));
    Ok((StatusCode::CREATED, Json(handle)))
}

async fn list(State(state): State<Arc<AppState>>) -> ApiResult<Json<Vec<DatasetHandle>>> {
    let datasets = state.datasets.read().map_err(|_| ApiError::internal())?;
    Ok(Json(datasets.values().map(|d| d.handle.clone()).collect()))
}

async fn dataset(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<DatasetHandle>> {
    Ok(Json(lookup(&state, &id)?.handle.clone()))
}

async fn schema(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<Json<Vec<AttributeSchema>>> {
    Ok(Json(lookup(&state, &id)?.handle.schema.clone()))
}

#[derive(Debug, Serialize)]
struct SeriesResponse {
    label: String,
    agg: AggFunction,
    #[serde(skip_serializing_if = "Option::is_none")]
    measure: Option<String>,
    #[serde(flatten)]
    series: Series,
}

/// The aggregate restricted to `predicates`, or the overall series when empty.
fn series_for(relation: &Relation, agg: &AggSpec, predicates: &[(String, String)]) -> Result<Series, Error> {
    let attrs: Vec<String> = if predicates.is_empty() {
        // any non-time attribute gives a catalog whose cube carries the overall series
        let schema = relation.schema();
        let pick = schema
            .iter()
            .find(|a| a.kind == AttributeKind::Dimension)
            .or_else(|| schema.iter().find(|a| a.kind != AttributeKind::Time))
            .ok_or_else(|| Error::InvalidParameter("relation has no attribute besides time".into()))?;
        vec![pick.name.clone()]
    } else {
        predicates.iter().map(|(a, _)| a.clone()).collect()
    };
    let catalog = enumerate_explanations(relation, &attrs, attrs.len())?;
    let cube = materialize_cube(relation, agg, &catalog, None)?;
    if predicates.is_empty() {
        return Ok(cube.overall());
    }
    let pairs: Vec<(&str, &str)> = predicates.iter().map(|(a, v)| (a.as_str(), v.as_str())).collect();
    let explanation = cube.explain_by().resolve(&pairs)?;
    let index = cube.index_of(&explanation).ok_or(Error::MissingExplanation)?;
    Ok(cube.series(index))
}

/// `GET /api/datasets/{id}/series?measure=M&agg=sum&predicate=attr=value...`
async fn series(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(params): Params,
) -> ApiResult<Json<SeriesResponse>> {
    reject_unknown(&params, &["measure", "agg", "predicate"])?;
    let agg: AggFunction = single(&params, "agg")?
        .unwrap_or("sum")
        .parse()
        .map_err(|e: Error| ApiError::bad_request("agg", e.to_string()))?;
    let measure = single(&params, "measure")?.map(str::to_string);
    let spec = AggSpec {
        measure: if agg == AggFunction::Count { None } else { measure },
        function: agg,
    };
    if spec.measure.is_none() && agg != AggFunction::Count {
        return Err(ApiError::bad_request("measure", format!("{agg} requires a measure")));
    }
    let predicates: Vec<(String, String)> = params
        .iter()
        .filter(|(k, _)| k == "predicate")
        .map(|(_, p)| {
            p.split_once('=')
                .map(|(a, v)| (a.to_string(), v.to_string()))
                .ok_or_else(|| ApiError::bad_request("predicate", format!("expected attr=value, got {p:?}")))
        })
        .collect::<ApiResult<_>>()?;
    let data = lookup(&state, &id)?;
    let label = if predicates.is_empty() {
        "overall".to_string()
    } else {
        predicates.iter().map(|(a, v)| format!("{a}={v}")).collect::<Vec<_>>().join(" & ")
    };
    let measure = spec.measure.clone();
    let series = on_worker(&state, move || {
        series_for(&data.relation, &spec, &predicates).map_err(|e| ApiError::unprocessable(&e))
    })
    .await?;
    Ok(Json(SeriesResponse {
        label,
        agg,
        measure,
        series,
    }))
}

/// `POST /api/explain`: `dataset_id` plus the fields of an explain request.
async fn explain(State(state): State<Arc<AppState>>, body: Result<Bytes, BytesRejection>) -> ApiResult<Response> {
    let body = body?;
    let value: Value = serde_json::from_slice(&body)
        .map_err(|e| ApiError::bad_request("body", format!("malformed JSON: {e}")))?;
    let Value::Object(mut fields) = value else {
        return Err(ApiError::bad_request("body", "expected a JSON object"));
    };
    let id = match fields.remove("dataset_id") {
        Some(Value::String(id)) => id,
        Some(_) => return Err(ApiError::bad_request("dataset_id", "dataset_id must be a string")),
        None => return Err(ApiError::bad_request("dataset_id", "dataset_id is required")),
    };
    let request = merge_request(&state.options.config.explain, fields)?;
    let data = lookup(&state, &id)?;
    let text = on_worker(&state, move || {
        let result = explain_evolving(&data.relation, &request).map_err(|e| ApiError::unprocessable(&e))?;
        render(&result).map_err(|_| ApiError::internal())
    })
    .await?;
    Ok(([(header::CONTENT_TYPE, "application/json")], text).into_response())
}
