use std::path::PathBuf;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use snbi_core::bayes::{learn_from_records, load_dataset, CvConfig};
use snbi_core::geo::GeoPoint;
use snbi_core::selector::PollOutcome;
use snbi_core::sim::{eval_report, EvalReport};
use snbi_core::store::{ContentRecord, Fix, TimeWindow};
use snbi_core::vocab::{Category, Kind};

use crate::error::{ApiError, ErrorCode};
use crate::users::Profile;
use crate::AppState;

type Shared = State<Arc<AppState>>;
type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/users", post(create_user))
        .route("/users/{id}/fix", post(post_fix))
        .route("/contents", post(create_content))
        .route("/contents/near", get(near))
        .route("/admin/train", post(train))
        .route("/admin/eval", get(eval))
        .fallback(|| async { ApiError::new(ErrorCode::NotFound, "no such endpoint") })
        .with_state(state)
}

fn body<T>(payload: Result<Json<T>, JsonRejection>, code: ErrorCode) -> ApiResult<T> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ApiError::new(code, e.body_text()))
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> ApiResult<T> {
    q.map(|Query(v)| v)
        .map_err(|e| ApiError::new(ErrorCode::BadRequest, e.body_text()))
}

#[derive(Serialize)]
struct Health {
    status: &'static str,
    contents: usize,
    users: usize,
    model: &'static str,
}

async fn health(State(app): Shared) -> Json<Health> {
    Json(Health {
        status: "ok",
        contents: app.engine.store().len(),
        users: app.users.lock().expect("users lock").len(),
        model: if app.is_trained() { "trained" } else { "uniform" },
    })
}

#[derive(Serialize, Deserialize)]
pub struct Created {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub user_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub content_id: Option<String>,
}

async fn create_user(
    State(app): Shared,
    payload: Result<Json<Profile>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<Created>)> {
    let profile = body(payload, ErrorCode::BadRequest)?;
    profile.validate()?;
    let id = app.users.lock().expect("users lock").add(profile)?;
    Ok((
        StatusCode::CREATED,
        Json(Created {
            user_id: Some(id),
            content_id: None,
        }),
    ))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixRequest {
    pub lat: f64,
    pub lon: f64,
    /// UTC seconds.
    pub ts: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weather: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<String>,
}

async fn post_fix(
    State(app): Shared,
    Path(id): Path<String>,
    payload: Result<Json<FixRequest>, JsonRejection>,
) -> ApiResult<Json<PollOutcome>> {
    let req = body(payload, ErrorCode::BadRequest)?;
    let profile = app
        .users
        .lock()
        .expect("users lock")
        .get(&id)
        .cloned()
        .ok_or_else(|| ApiError::new(ErrorCode::UnknownUser, format!("no user {id:?}")))?;
    let point = GeoPoint::new(req.lat, req.lon).map_err(|e| ApiError::new(ErrorCode::BadRequest, e.to_string()))?;
    let ctx = profile.context(req.weather, req.temperature)?;
    let fix = Fix {
        user_id: id,
        point,
        at: req.ts,
    };
    Ok(Json(app.engine.handle_fix(fix, &ctx)?))
}

/// A content as submitted by a client; the server assigns the id.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContentSubmission {
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<Category>,
    pub barrier_class: String,
    pub title: String,
    #[serde(default)]
    pub comment: String,
    #[serde(default)]
    pub tags: Vec<String>,
    #[serde(default)]
    pub photo_ref: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_window: Option<TimeWindow>,
    pub location: GeoPoint,
    #[serde(default)]
    pub submitter: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_at: Option<i64>,
}

fn now() -> i64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs() as i64)
}

impl ContentSubmission {
    /// Record with an empty id; `created_at` falls back to `now`.
    pub fn into_record(self, now: i64) -> ContentRecord {
        ContentRecord {
            id: String::new(),
            kind: self.kind,
            category: self
                .category
                .unwrap_or_else(|| Category::default_for(self.kind, &self.barrier_class)),
            barrier_class: self.barrier_class,
            title: self.title,
            comment: self.comment,
            tags: self.tags,
            photo_ref: self.photo_ref,
            time_window: self.time_window,
            location: self.location,
            submitter: self.submitter,
            created_at: self.created_at.unwrap_or(now),
        }
    }
}

async fn create_content(
    State(app): Shared,
    payload: Result<Json<ContentSubmission>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<Created>)> {
    let record = body(payload, ErrorCode::Validation)?.into_record(now());
    let id = app.engine.submit_with_new_id(record)?;
    Ok((
        StatusCode::CREATED,
        Json(Created {
            user_id: None,
            content_id: Some(id),
        }),
    ))
}

#[derive(Deserialize)]
struct NearQuery {
    lat: f64,
    lon: f64,
    r: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct NearItem {
    pub content: ContentRecord,
    pub distance: f64,
}

async fn near(
    State(app): Shared,
    q: Result<Query<NearQuery>, QueryRejection>,
) -> ApiResult<Json<Vec<NearItem>>> {
    let q = query(q)?;
    let max = app.config.max_near_radius_m;
    if q.r.is_nan() || q.r < 0.0 {
        return Err(ApiError::new(ErrorCode::BadRequest, "r must be non-negative"));
    }
    if q.r > max {
        return Err(ApiError::new(
            ErrorCode::RadiusTooLarge,
            format!("r = {} exceeds the maximum of {max} m", q.r),
        ));
    }
    let center = GeoPoint::new(q.lat, q.lon).map_err(|e| ApiError::new(ErrorCode::BadRequest, e.to_string()))?;
    let store = app.engine.store();
    let items = store
        .near(center, q.r)
        .into_iter()
        .map(|(c, distance)| NearItem {
            content: c.clone(),
            distance,
        })
        .collect();
    Ok(Json(items))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainRequest {
    pub dataset: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TrainResponse {
    pub records: usize,
    pub model: String,
}

async fn train(
    State(app): Shared,
    payload: Result<Json<TrainRequest>, JsonRejection>,
) -> ApiResult<Json<TrainResponse>> {
    let req = body(payload, ErrorCode::BadRequest)?;
    let path = app.resolve(&req.dataset);
    let data = load_dataset(&path)?;
    if data.is_empty() {
        return Err(ApiError::new(ErrorCode::MalformedDataset, format!("{} has no records", path.display())));
    }
    let net = learn_from_records(&app.structure, &data, app.config.alpha)?;
    app.install_model(net)
        .map_err(|e| ApiError::new(ErrorCode::Internal, e.to_string()))?;
    *app.dataset.lock().expect("dataset lock") = Some(path);
    Ok(Json(TrainResponse {
        records: data.len(),
        model: "trained".into(),
    }))
}

#[derive(Deserialize)]
struct EvalQuery {
    k: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    dataset: Option<PathBuf>,
}

async fn eval(State(app): Shared, q: Result<Query<EvalQuery>, QueryRejection>) -> ApiResult<Json<EvalReport>> {
    let q = query(q)?;
    if q.k < 2 {
        return Err(ApiError::new(ErrorCode::InvalidK, format!("k must be at least 2, got {}", q.k)));
    }
    let path = match q.dataset {
        Some(p) => app.resolve(&p),
        None => app
            .dataset
            .lock()
            .expect("dataset lock")
            .clone()
            .ok_or_else(|| ApiError::new(ErrorCode::NoDataset, "train first or pass dataset="))?,
    };
    let data = load_dataset(&path)?;
    let candidates = app.engine.candidates();
    let cfg = CvConfig {
        k: q.k,
        structure: &app.structure,
        alpha: app.config.alpha,
        candidates,
        seed: q.seed,
    };
    Ok(Json(eval_report(&data, &cfg, None).map_err(|e| match e {
        snbi_core::sim::SimError::Bayes(b) => ApiError::from(b),
        other => ApiError::new(ErrorCode::Internal, other.to_string()),
    })?))
}
