use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Route, SimError};
use crate::bayes::RankedReaction;
use crate::geo::GeoPoint;
use crate::selector::{Engine, PollOutcome, SuppressionReason, TimingClass, UserContext};
use crate::store::Fix;

/// Something that accepts walker polls: the engine in this process or a
/// remote service.
pub trait Pipeline {
    /// Registers a walker profile and returns its id.
    fn register(&mut self, ctx: &UserContext) -> Result<String, SimError>;
    fn poll(&mut self, user_id: &str, point: GeoPoint, at: i64) -> Result<PollOutcome, SimError>;
}

/// [`Pipeline`] over an [`Engine`] in the same process.
pub struct InProcess<'a> {
    engine: &'a Engine,
    users: Vec<UserContext>,
}

impl<'a> InProcess<'a> {
    pub fn new(engine: &'a Engine) -> Self {
        InProcess {
            engine,
            users: Vec::new(),
        }
    }
}

impl Pipeline for InProcess<'_> {
    fn register(&mut self, ctx: &UserContext) -> Result<String, SimError> {
        ctx.validate().map_err(crate::selector::EngineError::from)?;
        self.users.push(ctx.clone());
        Ok(format!("u{}", self.users.len()))
    }

    fn poll(&mut self, user_id: &str, point: GeoPoint, at: i64) -> Result<PollOutcome, SimError> {
        let ctx = user_id
            .strip_prefix('u')
            .and_then(|n| n.parse::<usize>().ok())
            .and_then(|n| n.checked_sub(1))
            .and_then(|i| self.users.get(i))
            .ok_or_else(|| SimError::UnknownUser(user_id.to_string()))?;
        let fix = Fix {
            user_id: user_id.to_string(),
            point,
            at,
        };
        Ok(self.engine.handle_fix(fix, ctx)?)
    }
}

/// One line of the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Start {
        waypoints: usize,
        length_m: f64,
        speed: f64,
        poll_interval_s: f64,
        polls: usize,
    },
    Fix {
        seq: usize,
        at: i64,
        lat: f64,
        lon: f64,
        heading: Option<f64>,
        speed: f64,
    },
    Notification {
        seq: usize,
        content_id: String,
        class: String,
        distance: f64,
        bearing: Option<f64>,
        importance: f64,
        neglect_probability: f64,
        reactions: Vec<RankedReaction>,
        timing: TimingClass,
    },
    Suppressed {
        seq: usize,
        content_id: String,
        distance: f64,
        reason: SuppressionReason,
    },
    End {
        fixes: usize,
        notifications: usize,
        suppressions: usize,
    },
}

fn round(x: f64, decimals: i32) -> f64 {
    let m = 10f64.powi(decimals);
    let r = (x * m).round() / m;
    if r == 0.0 { 0.0 } else { r }
}

/// Replay output in order of occurrence.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventLog {
    pub events: Vec<Event>,
}

impl EventLog {
    /// One JSON object per line, newline terminated.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("events serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, SimError> {
        let events = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| SimError::Parse {
                    line: i + 1,
                    message: e.to_string(),
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(EventLog { events })
    }

    pub fn summary(&self) -> ReplaySummary {
        let mut s = ReplaySummary {
            timing: TimingClass::ALL.iter().map(|t| (t.as_str().to_string(), 0)).collect(),
            ..Default::default()
        };
        for e in &self.events {
            match e {
                Event::Fix { .. } => s.fixes += 1,
                Event::Notification {
                    content_id, timing, ..
                } => {
                    s.notifications += 1;
                    s.notified.push(content_id.clone());
                    *s.timing.entry(timing.as_str().to_string()).or_default() += 1;
                }
                Event::Suppressed { reason, .. } => {
                    *s.suppressions.entry(reason.as_str().to_string()).or_default() += 1;
                }
                Event::Start { .. } | Event::End { .. } => {}
            }
        }
        s
    }
}

/// Counts derived from an event log.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReplaySummary {
    pub fixes: usize,
    pub notifications: usize,
    /// Notified content ids in order.
    pub notified: Vec<String>,
    /// Suppression count per reason.
    pub suppressions: BTreeMap<String, usize>,
    /// Notification count per timing class; every class is listed.
    pub timing: BTreeMap<String, usize>,
}

impl ReplaySummary {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "fixes          {}", self.fixes);
        let _ = writeln!(out, "notifications  {}", self.notifications);
        for id in &self.notified {
            let _ = writeln!(out, "  {id}");
        }
        let total: usize = self.suppressions.values().sum();
        let _ = writeln!(out, "suppressions   {total}");
        for (reason, n) in &self.suppressions {
            let _ = writeln!(out, "  {reason:<14} {n}");
        }
        let _ = writeln!(out, "timing");
        for t in TimingClass::ALL {
            let _ = writeln!(out, "  {:<14} {}", t.as_str(), self.timing.get(t.as_str()).unwrap_or(&0));
        }
        out
    }
}

/// Walks the route against a pipeline, logging every fix, notification and
/// suppression. Poll `k` is sent at `start_at + t_k`.
pub fn replay(
    route: &Route,
    ctx: &UserContext,
    pipeline: &mut dyn Pipeline,
    start_at: i64,
) -> Result<EventLog, SimError> {
    let user = pipeline.register(ctx)?;
    let polls = route.polls();
    let mut events = vec![Event::Start {
        waypoints: route.waypoints().len(),
        length_m: round(route.length(), 2),
        speed: route.speed(),
        poll_interval_s: route.poll_interval(),
        polls: polls.len(),
    }];
    let (mut notifications, mut suppressions) = (0, 0);
    for (seq, (t, point)) in polls.into_iter().enumerate() {
        let out = pipeline.poll(&user, point, start_at + t)?;
        events.push(Event::Fix {
            seq,
            at: start_at + t,
            lat: round(point.lat(), 7),
            lon: round(point.lon(), 7),
            heading: out.heading.heading.map(|h| round(h, 3)),
            speed: round(out.heading.speed, 3),
        });
        if let Some(n) = &out.notification {
            notifications += 1;
            events.push(Event::Notification {
                seq,
                content_id: n.content.id.clone(),
                class: n.content.barrier_class.clone(),
                distance: round(n.distance, 2),
                bearing: n.bearing.map(|b| round(b, 3)),
                importance: round(n.importance, 6),
                neglect_probability: round(n.neglect_probability, 6),
                reactions: n
                    .reactions
                    .iter()
                    .map(|r| RankedReaction {
                        reaction: r.reaction.clone(),
                        probability: round(r.probability, 6),
                    })
                    .collect(),
                timing: out.timing.unwrap_or(TimingClass::Misaligned),
            });
        }
        for s in &out.suppressed {
            suppressions += 1;
            events.push(Event::Suppressed {
                seq,
                content_id: s.content_id.clone(),
                distance: round(s.distance, 2),
                reason: s.reason,
            });
        }
    }
    let fixes = events.iter().filter(|e| matches!(e, Event::Fix { .. })).count();
    events.push(Event::End {
        fixes,
        notifications,
        suppressions,
    });
    Ok(EventLog { events })
}
