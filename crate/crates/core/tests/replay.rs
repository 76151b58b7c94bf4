use proptest::prelude::*;
use snbi_core::bayes::{learn_from_records, BayesNet, CandidateMap, Structure};
use snbi_core::geo::GeoPoint;
use snbi_core::selector::{Engine, SelectorConfig, UsefulPriors, UserContext};
use snbi_core::sim::{gen_dataset, replay, Event, EventLog, GroundTruthSpec, InProcess, Route, DEFAULT_SHARPNESS};
use snbi_core::store::{ContentRecord, Store};
use snbi_core::vocab::{Category, Kind};

const EAST: f64 = 90.0;

fn start() -> GeoPoint {
    GeoPoint::new(35.7148, 139.7745).unwrap()
}

/// Offset `along` meters down the route, then `left` meters to its left.
fn at(along: f64, left: f64) -> GeoPoint {
    let on = if along >= 0.0 {
        start().destination(EAST, along)
    } else {
        start().destination(EAST + 180.0, -along)
    };
    on.destination(EAST - 90.0, left)
}

fn barrier(id: &str, class: &str, location: GeoPoint) -> ContentRecord {
    ContentRecord {
        id: id.into(),
        kind: Kind::Barrier,
        category: Category::default_for(Kind::Barrier, class),
        barrier_class: class.into(),
        title: id.into(),
        comment: String::new(),
        tags: vec![],
        photo_ref: String::new(),
        time_window: None,
        location,
        submitter: "fixture".into(),
        created_at: 0,
    }
}

fn trained() -> BayesNet {
    let spec = GroundTruthSpec::example_table(DEFAULT_SHARPNESS).unwrap();
    let data = gen_dataset(&spec, 1200, 7);
    learn_from_records(&Structure::default_reaction_model(), &data, 1.0).unwrap()
}

fn ctx() -> UserContext {
    UserContext {
        weather: "Fine".into(),
        temperature: "other".into(),
        locality: "Little".into(),
        willingness: "not walk".into(),
        purpose: None,
        walk_ability: None,
    }
}

fn run(contents: Vec<ContentRecord>, ctx: &UserContext) -> EventLog {
    let mut store = Store::default();
    for c in contents {
        store.put_content(c).unwrap();
    }
    let engine = Engine::new(
        store,
        trained(),
        CandidateMap::default(),
        UsefulPriors::default(),
        SelectorConfig::default(),
    )
    .unwrap();
    let route = Route::straight(start(), EAST, 1000.0, 1.1, 150.0).unwrap();
    replay(&route, ctx, &mut InProcess::new(&engine), 0).unwrap()
}

fn fixture() -> Vec<ContentRecord> {
    vec![
        // 30 m past poll 2, 20 m off the path
        barrier("ahead", "bicycles_on_street", at(360.0, 20.0)),
        // 40 m before poll 4
        barrier("behind", "bicycles_on_street", at(620.0, -10.0)),
        // just past poll 3, predicted neglect in this context
        barrier("stairs", "stairs_in_station", at(520.0, 15.0)),
    ]
}

#[test]
fn fixture_notifies_once_in_front() {
    let log = run(fixture(), &ctx());
    let s = log.summary();
    assert_eq!(s.fixes, 8);
    assert_eq!(s.notified, vec!["ahead".to_string()]);
    assert_eq!(s.timing["front"], 1);
    assert_eq!(s.suppressions["out_of_sector"], 1);
    assert_eq!(s.suppressions["neglect"], 1);
    let suppressed: Vec<&str> = log
        .events
        .iter()
        .filter_map(|e| match e {
            Event::Suppressed { content_id, .. } => Some(content_id.as_str()),
            _ => None,
        })
        .collect();
    assert_eq!(suppressed, ["stairs", "behind"]);
    let text = log.to_jsonl();
    assert_eq!(text, run(fixture(), &ctx()).to_jsonl());
    assert_eq!(EventLog::from_jsonl(&text).unwrap(), log);
}

#[test]
fn content_behind_the_start_is_never_notified() {
    let log = run(vec![barrier("back", "bicycles_on_street", at(-60.0, 0.0))], &ctx());
    assert_eq!(log.summary().notifications, 0);
}

#[test]
fn neglect_context_suppresses_everything() {
    let mut c = ctx();
    c.willingness = "walk for exercise".into();
    let log = run(fixture(), &c);
    let s = log.summary();
    assert_eq!(s.notifications, 0);
    assert!(s.suppressions["neglect"] >= 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn every_notification_gets_one_timing(
        spots in proptest::collection::vec((-100.0f64..1100.0, -60.0f64..60.0), 1..12),
    ) {
        let contents = spots
            .iter()
            .enumerate()
            .map(|(i, (a, l))| barrier(&format!("c{i}"), "bicycles_on_street", at(*a, *l)))
            .collect();
        let log = run(contents, &ctx());
        let notes = log.events.iter().filter(|e| matches!(e, Event::Notification { .. })).count();
        let s = log.summary();
        prop_assert_eq!(s.timing.values().sum::<usize>(), notes);
        prop_assert_eq!(s.timing.len(), 4);
    }
}
