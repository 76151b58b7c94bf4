//! Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero when
//! any criterion fails.

use std::collections::HashSet;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use snbi_core::bayes::{save_dataset, Assignment, BayesNet, CandidateMap, CvConfig, Structure};
use snbi_core::geo::{haversine_distance, in_sector, GeoPoint, GridIndex};
use snbi_core::selector::UserContext;
use snbi_core::sim::{eval_report, gen_dataset, random_net, Event, EventLog, GroundTruthSpec, SimError, TruthInfo, DEFAULT_SHARPNESS};
use snbi_core::store::{ContentRecord, Store, StoreError, TimeWindow, CONTENTS_FILE};
use snbi_core::vocab::{Category, Kind};
use snbi_service::{spawn, AppState, ContentSubmission, FixRequest, Profile, ServiceConfig, WireClient};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:.2?}, limit {limit:?}"))?;
    Ok(took)
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn snbi(dir: &Path, args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_snbi"))
        .current_dir(dir)
        .env_remove("SNBI_CONFIG")
        .env_remove("SNBI_DATA_DIR")
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(String::from_utf8_lossy(&out.stdout).into_owned())
    } else {
        Err(format!("snbi {args:?}: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

/// P(query | evidence) from the full joint, one product of table entries per
/// complete assignment.
fn enumerate(net: &BayesNet, evidence: &Assignment, query: usize) -> Vec<f64> {
    let cards: Vec<usize> = net.variables().iter().map(|v| v.card()).collect();
    let mut post = vec![0.0; cards[query]];
    let mut a = vec![0usize; cards.len()];
    'outer: loop {
        if evidence.iter().zip(&a).all(|(e, s)| e.is_none_or(|e| e == *s)) {
            let mut p = 1.0;
            for (v, &s) in a.iter().enumerate() {
                let row = net.structure().parents(v).iter().fold(0, |acc, &u| acc * cards[u] + a[u]);
                p *= net.table(v)[row * cards[v] + s];
            }
            post[a[query]] += p;
        }
        for i in (0..a.len()).rev() {
            a[i] += 1;
            if a[i] < cards[i] {
                continue 'outer;
            }
            a[i] = 0;
        }
        break;
    }
    let z: f64 = post.iter().sum();
    post.into_iter().map(|p| p / z).collect()
}

fn inference_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for seed in 0..100 {
        let net = random_net(seed, 8, 4);
        let n = net.variables().len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xACCE);
        for _ in 0..100 {
            let query = rng.gen_range(0..n);
            let evidence: Assignment = (0..n)
                .map(|v| (v != query && rng.gen_bool(0.5)).then(|| rng.gen_range(0..net.variables()[v].card())))
                .collect();
            let got = net.posterior(&evidence, query).map_err(|e| format!("net {seed}: {e}"))?;
            let want = enumerate(&net, &evidence, query);
            for (g, w) in got.iter().zip(&want) {
                worst = worst.max((g - w).abs());
            }
        }
    }
    let took = within(Duration::from_secs(30), start)?;
    ensure(worst < 1e-9, || format!("max |dp| = {worst:e}"))?;
    Ok(format!("10000 queries, max |dp| = {worst:.1e}, {took:.2?}"))
}

fn synthetic_analog() -> Outcome {
    let start = Instant::now();
    let base = GroundTruthSpec::example_table(DEFAULT_SHARPNESS).map_err(|e| e.to_string())?;
    let noise = base.tune_noise(0.80).map_err(|e| e.to_string())?;
    let spec = base.with_noise(noise).map_err(|e| e.to_string())?;
    let optimum = spec.bayes_optimal_accuracy();
    let structure = Structure::default_reaction_model();
    let candidates = CandidateMap::default();
    let run = || {
        let data = gen_dataset(&spec, 1200, 7);
        let cfg = CvConfig {
            k: 3,
            structure: &structure,
            alpha: 1.0,
            candidates: &candidates,
            seed: 7,
        };
        eval_report(&data, &cfg, Some(TruthInfo { noise, bayes_optimal: optimum }))
    };
    let report = run().map_err(|e| e.to_string())?;
    let again = run().map_err(|e| e.to_string())?;
    let took = within(Duration::from_secs(10), start)?;
    ensure(report == again, || "two runs with one seed differ".into())?;
    ensure((optimum - 0.80).abs() < 1e-6, || format!("tuned optimum {optimum}"))?;
    ensure(report.folds.len() == 3, || "fold count".into())?;
    let (avg, base) = (report.average, report.random_baseline);
    ensure((avg - optimum).abs() <= 0.05, || {
        format!("average {avg:.4} vs bayes-optimal {optimum:.4}")
    })?;
    ensure(avg - base >= 0.15, || format!("average {avg:.4} vs baseline {base:.4}"))?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for out in ["a.csv", "b.csv"] {
        snbi(dir.path(), &["gen-dataset", "--n", "1200", "--seed", "7", "--target-accuracy", "0.80", "--out", out])?;
    }
    let a = std::fs::read(dir.path().join("a.csv")).map_err(|e| e.to_string())?;
    let b = std::fs::read(dir.path().join("b.csv")).map_err(|e| e.to_string())?;
    ensure(a == b, || "gen-dataset output differs between runs".into())?;
    Ok(format!(
        "noise {noise:.4}, average {:.1}% vs optimum {:.1}%, baseline {:.1}%, {took:.2?}",
        avg * 100.0,
        optimum * 100.0,
        base * 100.0
    ))
}

fn baseline_formula() -> Outcome {
    let candidates = CandidateMap::default();
    let structure = Structure::default_reaction_model();
    let mut shown = String::new();
    for seed in 0..5u64 {
        let data = gen_dataset(&GroundTruthSpec::uniform_labels(), 900 + 37 * seed as usize, seed);
        let n = data.len() as f64;
        let size = |s: usize| {
            data.iter()
                .filter(|r| candidates.get(&r.barrier).map(|c| c.len()) == Ok(s))
                .count() as f64
                / n
        };
        let (f2, f3) = (size(2), size(3));
        ensure((f2 + f3 - 1.0).abs() < 1e-12, || "sizes other than 2 and 3".into())?;
        let cfg = CvConfig {
            k: 3,
            structure: &structure,
            alpha: 1.0,
            candidates: &candidates,
            seed,
        };
        let report = eval_report(&data, &cfg, None).map_err(|e| e.to_string())?;
        let expected = 0.5 * f2 + (1.0 / 3.0) * f3;
        ensure(report.random_baseline == expected, || {
            format!("seed {seed}: reported {} vs {expected}", report.random_baseline)
        })?;
        if seed == 0 {
            shown = format!("f2 {f2:.3}, f3 {f3:.3}, baseline {expected:.4}");
        }
    }
    Ok(format!("5 datasets, e.g. {shown}"))
}

fn geo_index() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let center = (35.71, 139.77);
    let point = |rng: &mut ChaCha8Rng| {
        GeoPoint::new(center.0 + rng.gen_range(-0.05..0.05), center.1 + rng.gen_range(-0.05..0.05)).unwrap()
    };
    let points: Vec<GeoPoint> = (0..10_000).map(|_| point(&mut rng)).collect();
    let mut index = GridIndex::new(GridIndex::<usize>::DEFAULT_CELL_SIZE);
    for (i, &p) in points.iter().enumerate() {
        index.insert(i, p);
    }
    let mut hits = 0;
    for q in 0..100 {
        let c = point(&mut rng);
        let r = rng.gen_range(1.0..1500.0);
        let got = index.query_radius(c, r);
        let want: HashSet<usize> = points
            .iter()
            .enumerate()
            .filter(|(_, &p)| haversine_distance(p, c) <= r)
            .map(|(i, _)| i)
            .collect();
        ensure(got == want, || format!("query {q}: index {} vs scan {}", got.len(), want.len()))?;
        hits += want.len();
    }
    let took = within(Duration::from_secs(5), start)?;
    Ok(format!("100 queries, {hits} hits, {took:.2?}"))
}

fn sector_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let half = 50.0;
    for i in 0..10_000 {
        let (h, t, d): (f64, f64, f64) = (rng.gen_range(0.0..360.0), rng.gen_range(0.0..360.0), rng.gen_range(0.0..360.0));
        let base = in_sector(h, t, half);
        let rotated = in_sector((h + d) % 360.0, (t + d) % 360.0, half);
        ensure(base == rotated, || format!("triple {i}: rotation by {d} changes ({h}, {t})"))?;
        ensure(base == in_sector(t, h, half), || format!("triple {i}: asymmetric ({h}, {t})"))?;
    }
    for (h, t) in [(0.0, 50.0), (50.0, 0.0), (350.0, 40.0), (20.0, 330.0), (180.0, 230.0)] {
        ensure(in_sector(h, t, half), || format!("difference 50 at ({h}, {t}) is outside"))?;
    }
    ensure(!in_sector(0.0, 50.001, half), || "50.001 is inside".into())?;
    Ok("10000 triples, boundary inclusive".into())
}

fn replay_golden() -> Outcome {
    let golden = std::fs::read_to_string(fixture("events.jsonl")).map_err(|e| e.to_string())?;
    let route = fixture("route.json");
    let ctx = fixture("context.json");
    let contents = fixture("contents.jsonl");
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        snbi(dir.path(), &["gen-dataset", "--n", "1200", "--seed", "7", "--out", "train.csv"])?;
        snbi(dir.path(), &["--data-dir", "data", "train", "--dataset", "train.csv"])?;
        snbi(
            dir.path(),
            &[
                "--data-dir", "data", "simulate", "--in-process",
                "--route", route.to_str().unwrap(),
                "--context", ctx.to_str().unwrap(),
                "--contents", contents.to_str().unwrap(),
                "--out", "events.jsonl",
            ],
        )?;
        let log = std::fs::read_to_string(dir.path().join("events.jsonl")).map_err(|e| e.to_string())?;
        ensure(log == golden, || "event log differs from the golden file".into())?;
    }
    let log = EventLog::from_jsonl(&golden).map_err(|e| e.to_string())?;
    let notes: Vec<&Event> = log.events.iter().filter(|e| matches!(e, Event::Notification { .. })).collect();
    ensure(notes.len() == 1, || format!("{} notifications", notes.len()))?;
    let Event::Notification { content_id, timing, .. } = notes[0] else { unreachable!() };
    ensure(timing.as_str() == "front", || format!("timing {}", timing.as_str()))?;
    let mut reasons: Vec<(String, String)> = log
        .events
        .iter()
        .filter_map(|e| match e {
            Event::Suppressed { content_id, reason, .. } => Some((content_id.clone(), reason.as_str().to_string())),
            _ => None,
        })
        .collect();
    reasons.sort();
    ensure(
        reasons == [("c2".to_string(), "out_of_sector".to_string()), ("c3".to_string(), "neglect".to_string())],
        || format!("suppressions {reasons:?}"),
    )?;
    Ok(format!("{content_id} front; c2 out_of_sector, c3 neglect; byte-identical over 2 runs"))
}

fn random_record(rng: &mut ChaCha8Rng, i: usize) -> ContentRecord {
    let kind = if rng.gen_bool(0.7) { Kind::Barrier } else { Kind::Useful };
    let classes = kind.classes();
    let class = classes[rng.gen_range(0..classes.len())].to_string();
    let time_window = rng.gen_bool(0.5).then(|| {
        let start = rng.gen_range(0..1400);
        TimeWindow::new(start, rng.gen_range(start + 1..=1440)).unwrap()
    });
    ContentRecord {
        id: format!("r{i}"),
        kind,
        category: Category::default_for(kind, &class),
        barrier_class: class,
        title: format!("spot {i} \"quoted\" \u{00e9}"),
        comment: if rng.gen_bool(0.5) { "line one\nline two".into() } else { String::new() },
        tags: (0..rng.gen_range(0..4)).map(|t| format!("tag{t}")).collect(),
        photo_ref: if rng.gen_bool(0.3) { format!("photos/{i}.jpg") } else { String::new() },
        time_window,
        location: GeoPoint::new(rng.gen_range(-89.0..89.0), rng.gen_range(-180.0..180.0)).unwrap(),
        submitter: format!("u{}", rng.gen_range(1..10)),
        created_at: rng.gen_range(0..2_000_000_000),
    }
}

fn persistence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let records: Vec<ContentRecord> = (0..50).map(|i| random_record(&mut rng, i)).collect();
    let mut store = Store::new(3.0);
    for r in &records {
        store.put_content(r.clone()).map_err(|e| e.to_string())?;
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    store.save(dir.path()).map_err(|e| e.to_string())?;
    let loaded = Store::load(dir.path(), 3.0).map_err(|e| e.to_string())?;
    for r in &records {
        ensure(loaded.get(&r.id) == Some(r), || format!("{} differs after reload", r.id))?;
    }
    ensure(loaded.len() == 50, || format!("{} records reloaded", loaded.len()))?;

    let path = dir.path().join(CONTENTS_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
    let line = 23;
    let offset: usize = text.lines().take(line - 1).map(|l| l.len() + 1).sum();
    std::fs::write(&path, &text[..offset + 25]).map_err(|e| e.to_string())?;
    match Store::load(dir.path(), 3.0) {
        Err(StoreError::CorruptFile { line: got, .. }) if got == line => {}
        Err(StoreError::CorruptFile { line: got, .. }) => return Err(format!("CorruptFile at line {got}, expected {line}")),
        other => return Err(format!("expected CorruptFile, got {:?}", other.map(|s| s.len()))),
    }
    Ok(format!("50 records field-identical; truncation reported at line {line}"))
}

fn service_round_trip() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let spec = GroundTruthSpec::example_table(DEFAULT_SHARPNESS).map_err(|e| e.to_string())?;
    let train = dir.path().join("train.csv");
    save_dataset(&train, &gen_dataset(&spec, 1200, 7)).map_err(|e| e.to_string())?;
    let state = AppState::open(ServiceConfig::new(dir.path().join("data"))).map_err(|e| e.to_string())?;
    let server = spawn(state, SocketAddr::from(([127, 0, 0, 1], 0))).map_err(|e| e.to_string())?;
    let client = WireClient::new(&server.url()).map_err(|e| e.to_string())?;
    client.train(&train).map_err(|e| e.to_string())?;
    let ctx = UserContext {
        weather: "Fine".into(),
        temperature: "other".into(),
        locality: "Little".into(),
        willingness: "not walk".into(),
        purpose: None,
        walk_ability: None,
    };
    let user = client.create_user(&Profile::from(&ctx)).map_err(|e| e.to_string())?;
    let a = GeoPoint::new(35.7148, 139.7745).unwrap();
    let b = a.destination(90.0, 120.0);
    let fix = |p: GeoPoint, ts: i64| FixRequest {
        lat: p.lat(),
        lon: p.lon(),
        ts,
        weather: None,
        temperature: None,
    };
    client.post_fix(&user, &fix(a, 1000)).map_err(|e| e.to_string())?;
    let spot = b.destination(80.0, 30.0);
    let id = client
        .submit_content(&ContentSubmission {
            kind: Kind::Barrier,
            category: None,
            barrier_class: "bicycles_on_street".into(),
            title: "bikes".into(),
            comment: String::new(),
            tags: vec![],
            photo_ref: String::new(),
            time_window: None,
            location: spot,
            submitter: user.clone(),
            created_at: Some(1000),
        })
        .map_err(|e| e.to_string())?;
    let out = client.post_fix(&user, &fix(b, 1150)).map_err(|e| e.to_string())?;
    let got = out.notification.as_ref().map(|n| n.content.id.clone());
    ensure(got.as_deref() == Some(id.as_str()), || format!("poll returned {got:?}, expected {id}"))?;
    match client.post_fix(&user, &fix(b, 1100)) {
        Err(SimError::Service { status: 409, code, .. }) if code == "out_of_order_fix" => {}
        other => return Err(format!("stale fix gave {:?}", other.map(|o| o.notification.is_some()))),
    }
    Ok(format!("{id} returned in the same poll; stale fix -> 409 out_of_order_fix"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("inference oracle equivalence", inference_oracle),
        ("synthetic cross-validation analog", synthetic_analog),
        ("random baseline formula", baseline_formula),
        ("geo index equivalence", geo_index),
        ("sector properties", sector_properties),
        ("end-to-end replay fixture", replay_golden),
        ("persistence round-trip", persistence),
        ("service round-trip", service_round_trip),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
