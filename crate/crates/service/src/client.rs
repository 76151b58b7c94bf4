//! Blocking HTTP client for the service API.

use std::collections::HashMap;
use std::path::Path;
use std::time::Duration;

use reqwest::blocking::{Client, RequestBuilder};
use serde::de::DeserializeOwned;
use serde::Serialize;

use snbi_core::geo::GeoPoint;
use snbi_core::selector::{PollOutcome, UserContext};
use snbi_core::sim::{EvalReport, Pipeline, SimError};

use crate::error::ApiError;
use crate::routes::{ContentSubmission, Created, FixRequest, NearItem, TrainRequest, TrainResponse};
use crate::users::Profile;

pub struct WireClient {
    base: String,
    http: Client,
    /// Per-user weather and temperature sent with each fix.
    env: HashMap<String, (String, String)>,
}

impl WireClient {
    pub fn new(base_url: &str) -> Result<Self, SimError> {
        let http = Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| SimError::ServiceUnreachable(e.to_string()))?;
        Ok(WireClient {
            base: base_url.trim_end_matches('/').to_string(),
            http,
            env: HashMap::new(),
        })
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    fn send<T: DeserializeOwned>(&self, req: RequestBuilder) -> Result<T, SimError> {
        let resp = req
            .send()
            .map_err(|e| SimError::ServiceUnreachable(format!("{}: {e}", self.base)))?;
        let status = resp.status();
        let text = resp
            .text()
            .map_err(|e| SimError::ServiceUnreachable(e.to_string()))?;
        if status.is_success() {
            serde_json::from_str(&text).map_err(|e| SimError::Service {
                status: status.as_u16(),
                code: "bad_response".into(),
                message: e.to_string(),
            })
        } else {
            Err(match serde_json::from_str::<ApiError>(&text) {
                Ok(e) => SimError::Service {
                    status: status.as_u16(),
                    code: e.code.as_str().to_string(),
                    message: e.message,
                },
                Err(_) => SimError::Service {
                    status: status.as_u16(),
                    code: "unknown".into(),
                    message: text,
                },
            })
        }
    }

    fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T, SimError> {
        self.send(self.http.post(self.url(path)).json(body))
    }

    pub fn health(&self) -> Result<serde_json::Value, SimError> {
        self.send(self.http.get(self.url("/health")))
    }

    pub fn create_user(&self, profile: &Profile) -> Result<String, SimError> {
        let c: Created = self.post("/users", profile)?;
        c.user_id.ok_or_else(|| SimError::ServiceUnreachable("response lacks user_id".into()))
    }

    pub fn post_fix(&self, user_id: &str, fix: &FixRequest) -> Result<PollOutcome, SimError> {
        self.post(&format!("/users/{user_id}/fix"), fix)
    }

    pub fn submit_content(&self, content: &ContentSubmission) -> Result<String, SimError> {
        let c: Created = self.post("/contents", content)?;
        c.content_id
            .ok_or_else(|| SimError::ServiceUnreachable("response lacks content_id".into()))
    }

    pub fn near(&self, center: GeoPoint, radius: f64) -> Result<Vec<NearItem>, SimError> {
        let q = [
            ("lat", center.lat().to_string()),
            ("lon", center.lon().to_string()),
            ("r", radius.to_string()),
        ];
        self.send(self.http.get(self.url("/contents/near")).query(&q))
    }

    pub fn train(&self, dataset: &Path) -> Result<TrainResponse, SimError> {
        self.post(
            "/admin/train",
            &TrainRequest {
                dataset: dataset.to_path_buf(),
            },
        )
    }

    pub fn eval(&self, k: usize, seed: u64, dataset: Option<&Path>) -> Result<EvalReport, SimError> {
        let mut q = vec![("k", k.to_string()), ("seed", seed.to_string())];
        if let Some(d) = dataset {
            q.push(("dataset", d.display().to_string()));
        }
        self.send(self.http.get(self.url("/admin/eval")).query(&q))
    }
}

impl Pipeline for WireClient {
    fn register(&mut self, ctx: &UserContext) -> Result<String, SimError> {
        let id = self.create_user(&Profile::from(ctx))?;
        self.env
            .insert(id.clone(), (ctx.weather.clone(), ctx.temperature.clone()));
        Ok(id)
    }

    fn poll(&mut self, user_id: &str, point: GeoPoint, at: i64) -> Result<PollOutcome, SimError> {
        let (weather, temperature) = self.env.get(user_id).cloned().unzip();
        self.post_fix(
            user_id,
            &FixRequest {
                lat: point.lat(),
                lon: point.lon(),
                ts: at,
                weather,
                temperature,
            },
        )
    }
}
