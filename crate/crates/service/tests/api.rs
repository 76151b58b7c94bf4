use std::net::SocketAddr;
use std::path::Path;

use serde_json::{json, Value};
use snbi_core::bayes::save_dataset;
use snbi_core::geo::GeoPoint;
use snbi_core::selector::UserContext;
use snbi_core::sim::{gen_dataset, replay, GroundTruthSpec, InProcess, Route, SimError, DEFAULT_SHARPNESS};
use snbi_service::{spawn, AppState, ServerHandle, ServiceConfig, WireClient};

fn start_server(dir: &Path) -> ServerHandle {
    let state = AppState::open(ServiceConfig::new(dir)).unwrap();
    spawn(state, SocketAddr::from(([127, 0, 0, 1], 0))).unwrap()
}

fn http() -> reqwest::blocking::Client {
    reqwest::blocking::Client::new()
}

fn post(server: &ServerHandle, path: &str, body: Value) -> (u16, Value) {
    let r = http().post(format!("{}{path}", server.url())).json(&body).send().unwrap();
    let status = r.status().as_u16();
    (status, r.json().unwrap())
}

fn get(server: &ServerHandle, path: &str) -> (u16, Value) {
    let r = http().get(format!("{}{path}", server.url())).send().unwrap();
    let status = r.status().as_u16();
    (status, r.json().unwrap())
}

fn origin() -> GeoPoint {
    GeoPoint::new(35.7148, 139.7745).unwrap()
}

fn write_training_set(dir: &Path) -> std::path::PathBuf {
    let spec = GroundTruthSpec::example_table(DEFAULT_SHARPNESS).unwrap();
    let path = dir.join("train.csv");
    save_dataset(&path, &gen_dataset(&spec, 1200, 7)).unwrap();
    path
}

fn walker() -> Value {
    json!({"locality": "Little", "willingness": "not walk"})
}

fn fix(p: GeoPoint, ts: i64) -> Value {
    json!({"lat": p.lat(), "lon": p.lon(), "ts": ts, "weather": "Fine", "temperature": "other"})
}

#[test]
fn health_and_unknown_routes() {
    let dir = tempfile::tempdir().unwrap();
    let s = start_server(dir.path());
    let (status, body) = get(&s, "/health");
    assert_eq!(status, 200);
    assert_eq!(body["status"], "ok");
    assert_eq!(body["model"], "uniform");
    let (status, body) = get(&s, "/nope");
    assert_eq!(status, 404);
    assert_eq!(body["code"], "not_found");
}

#[test]
fn user_registration() {
    let dir = tempfile::tempdir().unwrap();
    let s = start_server(dir.path());
    let profile = json!({"locality": "No", "willingness": "walk for exercise"});
    let (status, a) = post(&s, "/users", profile.clone());
    assert_eq!(status, 201);
    let (_, b) = post(&s, "/users", profile);
    assert_ne!(a["user_id"], b["user_id"]);

    let (status, e) = post(&s, "/users", json!({"locality": "Maybe"}));
    assert_eq!(status, 400);
    assert_eq!(e["code"], "invalid_state");
    assert_eq!(e["status"], 400);
    let (status, e) = post(&s, "/users", json!({"locality": "No"}));
    assert_eq!((status, e["code"].as_str()), (400, Some("bad_request")));
}

#[test]
fn content_submission() {
    let dir = tempfile::tempdir().unwrap();
    let s = start_server(dir.path());
    let loc = json!({"lat": 35.7148, "lon": 139.7745});
    let (status, body) = post(
        &s,
        "/contents",
        json!({"kind": "barrier", "barrier_class": "bicycles_on_sidewalk", "title": "bikes",
               "time_window": {"start": 540, "end": 1020}, "location": loc}),
    );
    assert_eq!(status, 201);
    assert_eq!(body["content_id"], "c1");

    let (status, e) = post(
        &s,
        "/contents",
        json!({"kind": "barrier", "barrier_class": "lava", "title": "x", "location": loc}),
    );
    assert_eq!((status, e["code"].as_str()), (400, Some("validation")));
    let (status, e) = post(
        &s,
        "/contents",
        json!({"kind": "barrier", "barrier_class": "hawkers", "title": "x"}),
    );
    assert_eq!((status, e["code"].as_str()), (400, Some("validation")));

    let (status, items) = get(&s, "/contents/near?lat=35.7148&lon=139.7745&r=0.0001");
    assert_eq!(status, 200);
    assert_eq!(items.as_array().unwrap().len(), 1);
    assert_eq!(items[0]["content"]["id"], "c1");
    let (_, items) = get(&s, "/contents/near?lat=10&lon=10&r=100");
    assert_eq!(items, json!([]));
    let (status, e) = get(&s, "/contents/near?lat=35.7148&lon=139.7745&r=5000");
    assert_eq!((status, e["code"].as_str()), (400, Some("radius_too_large")));
    let (status, e) = get(&s, "/contents/near?lat=35.7148");
    assert_eq!((status, e["code"].as_str()), (400, Some("bad_request")));
}

#[test]
fn fix_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let s = start_server(dir.path());
    let train = write_training_set(dir.path());
    let (status, body) = post(&s, "/admin/train", json!({"dataset": train}));
    assert_eq!(status, 200, "{body}");
    assert_eq!(body["records"], 1200);

    let (_, u) = post(&s, "/users", walker());
    let user = u["user_id"].as_str().unwrap().to_string();
    let ten_am = 10 * 3600;
    let a = origin();
    let b = a.destination(90.0, 100.0);
    // first poll: nothing nearby, bare map
    let (status, out) = post(&s, &format!("/users/{user}/fix"), fix(a, ten_am));
    assert_eq!(status, 200);
    assert!(out["notification"].is_null());
    assert_eq!(out["map_center"]["lat"], a.lat());

    let spot = b.destination(90.0, 30.0);
    let (_, c) = post(
        &s,
        "/contents",
        json!({"kind": "barrier", "barrier_class": "bicycles_on_street", "title": "bikes",
               "time_window": {"start": 540, "end": 1020},
               "location": {"lat": spot.lat(), "lon": spot.lon()}}),
    );
    let (status, out) = post(&s, &format!("/users/{user}/fix"), fix(b, ten_am + 150));
    assert_eq!(status, 200);
    assert_eq!(out["notification"]["content"]["id"], c["content_id"]);
    assert_eq!(out["timing"], "front");
    assert!(out["map_center"].is_null());
    let reactions = out["notification"]["reactions"].as_array().unwrap();
    assert_eq!(reactions[0]["reaction"], "proceed with caution");

    let (status, e) = post(&s, &format!("/users/{user}/fix"), fix(b, ten_am));
    assert_eq!((status, e["code"].as_str()), (409, Some("out_of_order_fix")));
    let (status, e) = post(&s, "/users/u999/fix", fix(b, ten_am));
    assert_eq!((status, e["code"].as_str()), (404, Some("unknown_user")));
    let (status, e) = post(&s, &format!("/users/{user}/fix"), json!({"lat": 1.0, "lon": 1.0, "ts": 99999, "weather": "Snow"}));
    assert_eq!((status, e["code"].as_str()), (400, Some("invalid_state")));
}

#[test]
fn admin_errors_and_eval() {
    let dir = tempfile::tempdir().unwrap();
    let s = start_server(dir.path());
    let (status, e) = get(&s, "/admin/eval?k=3");
    assert_eq!((status, e["code"].as_str()), (400, Some("no_dataset")));
    let (status, e) = get(&s, "/admin/eval?k=1");
    assert_eq!((status, e["code"].as_str()), (400, Some("invalid_k")));
    let (status, e) = post(&s, "/admin/train", json!({"dataset": "missing.csv"}));
    assert_eq!((status, e["code"].as_str()), (400, Some("malformed_dataset")));
    std::fs::write(dir.path().join("bad.csv"), "weather,reaction\nFine,detour\n").unwrap();
    let (status, e) = post(&s, "/admin/train", json!({"dataset": "bad.csv"}));
    assert_eq!((status, e["code"].as_str()), (400, Some("malformed_dataset")));

    let det = dir.path().join("det.csv");
    save_dataset(&det, &gen_dataset(&GroundTruthSpec::deterministic(), 600, 1)).unwrap();
    let (status, _) = post(&s, "/admin/train", json!({"dataset": "det.csv"}));
    assert_eq!(status, 200);
    let (status, report) = get(&s, "/admin/eval?k=3");
    assert_eq!(status, 200);
    assert_eq!(report["folds"].as_array().unwrap().len(), 3);
    assert_eq!(report["average"], 1.0);
    assert!(report["random_baseline"].as_f64().unwrap() < 1.0);
    let (_, h) = get(&s, "/health");
    assert_eq!(h["model"], "trained");
}

#[test]
fn state_survives_restart() {
    let dir = tempfile::tempdir().unwrap();
    let train = write_training_set(dir.path());
    {
        let s = start_server(dir.path());
        post(&s, "/users", walker());
        post(
            &s,
            "/contents",
            json!({"kind": "useful", "barrier_class": "toilet", "title": "wc",
                   "location": {"lat": 35.7148, "lon": 139.7745}}),
        );
        post(&s, "/admin/train", json!({"dataset": train}));
        post(&s, "/users/u1/fix", fix(origin(), 100));
    }
    let s = start_server(dir.path());
    let (_, h) = get(&s, "/health");
    assert_eq!((h["users"].as_u64(), h["contents"].as_u64()), (Some(1), Some(1)));
    assert_eq!(h["model"], "trained");
    let (status, e) = post(&s, "/users/u1/fix", fix(origin(), 50));
    assert_eq!((status, e["code"].as_str()), (409, Some("out_of_order_fix")));
    let (_, u) = post(&s, "/users", walker());
    assert_eq!(u["user_id"], "u2");
}

#[test]
fn wire_replay_matches_in_process() {
    let dir = tempfile::tempdir().unwrap();
    let train = write_training_set(dir.path());
    let s = start_server(dir.path());
    let client = WireClient::new(&s.url()).unwrap();
    client.train(&train).unwrap();
    let ahead = origin().destination(90.0, 360.0).destination(0.0, 20.0);
    post(
        &s,
        "/contents",
        json!({"kind": "barrier", "barrier_class": "bicycles_on_street", "title": "bikes",
               "created_at": 0, "location": {"lat": ahead.lat(), "lon": ahead.lon()}}),
    );
    let ctx = UserContext {
        weather: "Fine".into(),
        temperature: "other".into(),
        locality: "Little".into(),
        willingness: "not walk".into(),
        purpose: None,
        walk_ability: None,
    };
    let route = Route::straight(origin(), 90.0, 1000.0, 1.1, 150.0).unwrap();
    let mut wire = WireClient::new(&s.url()).unwrap();
    let remote = replay(&route, &ctx, &mut wire, 0).unwrap();
    assert_eq!(remote.summary().notified, vec!["c1".to_string()]);

    let local_dir = tempfile::tempdir().unwrap();
    let local = AppState::open(ServiceConfig::new(local_dir.path())).unwrap();
    let net = snbi_service::load_model(&dir.path().join(snbi_service::MODEL_FILE)).unwrap().unwrap();
    local.engine.swap_model(net);
    let record = s.state.engine.store().get("c1").unwrap().clone();
    local.engine.submit_content(record).unwrap();
    let in_proc = replay(&route, &ctx, &mut InProcess::new(&local.engine), 0).unwrap();
    assert_eq!(remote.to_jsonl(), in_proc.to_jsonl());
}

#[test]
fn closed_port_is_unreachable() {
    let port = {
        let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap().port()
    };
    let mut c = WireClient::new(&format!("http://127.0.0.1:{port}")).unwrap();
    let ctx = UserContext {
        weather: "Fine".into(),
        temperature: "other".into(),
        locality: "No".into(),
        willingness: "other".into(),
        purpose: None,
        walk_ability: None,
    };
    let route = Route::straight(origin(), 0.0, 100.0, 1.1, 150.0).unwrap();
    assert!(matches!(
        replay(&route, &ctx, &mut c, 0),
        Err(SimError::ServiceUnreachable(_))
    ));
}

#[test]
fn occupied_port_fails_to_bind() {
    let dir = tempfile::tempdir().unwrap();
    let s = start_server(dir.path());
    let other = tempfile::tempdir().unwrap();
    let state = AppState::open(ServiceConfig::new(other.path())).unwrap();
    assert!(matches!(
        spawn(state, s.addr),
        Err(snbi_service::ServiceError::Bind { .. })
    ));
}
