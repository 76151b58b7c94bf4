//! Content selection: time window, proximity, direction filter, reaction
//! prediction and neglect suppression, plus the timing classifier used to
//! evaluate where notified content lay relative to the walker.

mod config;
mod engine;
mod priors;

pub use config::SelectorConfig;
pub use engine::{Engine, EngineError, PollOutcome};
pub use priors::{UsefulPriors, DEFAULT_USEFUL_PRIORS};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bayes::{self, BayesError, BayesNet, CandidateMap, RankedReaction};
use crate::geo::{haversine_distance, in_sector, initial_bearing, normalize_degrees, GeoPoint};
use crate::store::{ContentRecord, Fix, HeadingEstimate, Store};
use crate::vocab::{self, Kind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectError {
    #[error("{state:?} is not a valid {variable}")]
    InvalidState { variable: String, state: String },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("no prior for useful class {0:?}")]
    UnknownUsefulClass(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Bayes(#[from] BayesError),
}

/// Environment and profile evidence for one walker.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserContext {
    pub weather: String,
    pub temperature: String,
    pub locality: String,
    pub willingness: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purpose: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub walk_ability: Option<String>,
}

impl UserContext {
    pub fn validate(&self) -> Result<(), SelectError> {
        for (var, state) in self.pairs() {
            let states = vocab::states_of(var).expect("context fields are built-in variables");
            if !states.contains(&state) {
                return Err(SelectError::InvalidState {
                    variable: var.to_string(),
                    state: state.to_string(),
                });
            }
        }
        Ok(())
    }

    /// `(variable, state)` for every present field.
    pub fn pairs(&self) -> Vec<(&str, &str)> {
        let mut out = vec![
            (vocab::WEATHER, self.weather.as_str()),
            (vocab::TEMPERATURE, self.temperature.as_str()),
            (vocab::LOCALITY, self.locality.as_str()),
            (vocab::WILLINGNESS, self.willingness.as_str()),
        ];
        if let Some(p) = &self.purpose {
            out.push((vocab::PURPOSE, p));
        }
        if let Some(w) = &self.walk_ability {
            out.push((vocab::WALK_ABILITY, w));
        }
        out
    }
}

/// A content in range together with its geometry relative to the walker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub content: ContentRecord,
    pub distance: f64,
    /// Absent when the content sits exactly at the walker's position.
    pub bearing: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuppressionReason {
    /// Outside its daily time window.
    Inactive,
    /// Already notified to this user within the cooldown.
    Cooldown,
    /// Not inside the forward sector.
    OutOfSector,
    /// Predicted reaction is neglect.
    Neglect,
    /// Survived every filter but a nearer content was chosen.
    NotNearest,
    /// Could not be scored (unknown class or impossible evidence).
    Unscorable,
}

impl SuppressionReason {
    pub fn as_str(self) -> &'static str {
        match self {
            SuppressionReason::Inactive => "inactive",
            SuppressionReason::Cooldown => "cooldown",
            SuppressionReason::OutOfSector => "out_of_sector",
            SuppressionReason::Neglect => "neglect",
            SuppressionReason::NotNearest => "not_nearest",
            SuppressionReason::Unscorable => "unscorable",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suppression {
    pub content_id: String,
    pub distance: f64,
    pub reason: SuppressionReason,
}

/// Importance and ranked reactions for one content under one context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Score {
    /// `1 - P(neglect)` after masking to the admissible reactions.
    pub importance: f64,
    pub neglect_probability: f64,
    /// Every admissible outcome, neglect included, best first.
    pub ranked: Vec<RankedReaction>,
}

impl Score {
    pub fn top(&self) -> &str {
        &self.ranked[0].reaction
    }

    pub fn is_neglect(&self) -> bool {
        self.top() == vocab::NEGLECT
    }

    /// Ranked reactions without neglect.
    pub fn proposals(&self) -> Vec<RankedReaction> {
        self.ranked
            .iter()
            .filter(|r| r.reaction != vocab::NEGLECT)
            .cloned()
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Notification {
    pub content: ContentRecord,
    pub distance: f64,
    pub bearing: Option<f64>,
    pub importance: f64,
    pub neglect_probability: f64,
    /// Proposed reactions, best first, neglect excluded.
    pub reactions: Vec<RankedReaction>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimingClass {
    Front,
    Same,
    Behind,
    Misaligned,
}

impl TimingClass {
    pub const ALL: [TimingClass; 4] = [
        TimingClass::Front,
        TimingClass::Same,
        TimingClass::Behind,
        TimingClass::Misaligned,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TimingClass::Front => "front",
            TimingClass::Same => "same",
            TimingClass::Behind => "behind",
            TimingClass::Misaligned => "misaligned",
        }
    }
}

/// Last alert time per (user, content).
#[derive(Debug, Clone, Default)]
pub struct CooldownTable {
    last: HashMap<(String, String), i64>,
}

impl CooldownTable {
    pub fn is_cooling(&self, user: &str, content: &str, now: i64, cooldown_s: i64) -> bool {
        self.last
            .get(&(user.to_string(), content.to_string()))
            .is_some_and(|&t| now - t < cooldown_s)
    }

    pub fn record(&mut self, user: &str, content: &str, at: i64) {
        self.last.insert((user.to_string(), content.to_string()), at);
    }
}

/// Contents in range of the walker that pass the time window, cooldown and
/// direction filters, nearest first. Contents in range that fail a filter
/// are returned as suppressions.
pub fn candidate_contents(
    store: &Store,
    cooldown: &CooldownTable,
    config: &SelectorConfig,
    fix: &Fix,
    heading: &HeadingEstimate,
) -> (Vec<Candidate>, Vec<Suppression>) {
    let minute = config.local_minute(fix.at);
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for (content, distance) in store.near(fix.point, config.radius_m) {
        let suppress = |reason| Suppression {
            content_id: content.id.clone(),
            distance,
            reason,
        };
        if !content.is_active_at(minute) {
            dropped.push(suppress(SuppressionReason::Inactive));
            continue;
        }
        if cooldown.is_cooling(&fix.user_id, &content.id, fix.at, config.cooldown_s()) {
            dropped.push(suppress(SuppressionReason::Cooldown));
            continue;
        }
        let bearing = initial_bearing(fix.point, content.location).ok();
        // co-located content has no direction and always passes
        if let (Some(h), Some(b)) = (heading.heading, bearing) {
            if !in_sector(h, b, config.sector_half_angle_deg) {
                dropped.push(suppress(SuppressionReason::OutOfSector));
                continue;
            }
        }
        kept.push(Candidate {
            content: content.clone(),
            distance,
            bearing,
        });
    }
    (kept, dropped)
}

/// Scores one content for a walker context.
pub fn score(
    net: &BayesNet,
    ctx: &UserContext,
    content: &ContentRecord,
    candidates: &CandidateMap,
    priors: &UsefulPriors,
) -> Result<Score, SelectError> {
    let ranked = match content.kind {
        Kind::Barrier => {
            let mut evidence = ctx.pairs();
            evidence.push((vocab::BARRIER, content.barrier_class.as_str()));
            bayes::predict_from_evidence(net, &evidence, &content.barrier_class, candidates)?
        }
        Kind::Useful => {
            let p = priors.notify_probability(&content.barrier_class, &ctx.locality)?;
            let mut ranked = vec![
                RankedReaction {
                    reaction: vocab::NOTIFY.to_string(),
                    probability: p,
                },
                RankedReaction {
                    reaction: vocab::NEGLECT.to_string(),
                    probability: 1.0 - p,
                },
            ];
            ranked.sort_by(|a, b| {
                b.probability
                    .total_cmp(&a.probability)
                    .then_with(|| a.reaction.cmp(&b.reaction))
            });
            ranked
        }
    };
    let neglect_probability = ranked
        .iter()
        .find(|r| r.reaction == vocab::NEGLECT)
        .map_or(0.0, |r| r.probability);
    Ok(Score {
        importance: 1.0 - neglect_probability,
        neglect_probability,
        ranked,
    })
}

/// Outcome of one selection pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub notification: Option<Notification>,
    pub suppressed: Vec<Suppression>,
}

/// Inputs shared by every selection pass.
#[derive(Debug, Clone, Copy)]
pub struct Selection<'a> {
    pub net: &'a BayesNet,
    pub candidates: &'a CandidateMap,
    pub priors: &'a UsefulPriors,
    pub config: &'a SelectorConfig,
}

/// Runs the whole pipeline for one fix and returns the nearest surviving
/// content whose predicted reaction is not neglect.
pub fn decide(
    sel: Selection<'_>,
    store: &Store,
    cooldown: &CooldownTable,
    fix: &Fix,
    heading: &HeadingEstimate,
    ctx: &UserContext,
) -> Decision {
    let (cands, mut suppressed) = candidate_contents(store, cooldown, sel.config, fix, heading);
    let mut notification: Option<Notification> = None;
    for c in cands {
        let reason = match score(sel.net, ctx, &c.content, sel.candidates, sel.priors) {
            Err(_) => Some(SuppressionReason::Unscorable),
            Ok(s) if s.is_neglect() => Some(SuppressionReason::Neglect),
            Ok(_) if notification.is_some() => Some(SuppressionReason::NotNearest),
            Ok(s) => {
                notification = Some(Notification {
                    reactions: s.proposals(),
                    importance: s.importance,
                    neglect_probability: s.neglect_probability,
                    content: c.content.clone(),
                    distance: c.distance,
                    bearing: c.bearing,
                });
                None
            }
        };
        if let Some(reason) = reason {
            suppressed.push(Suppression {
                content_id: c.content.id.clone(),
                distance: c.distance,
                reason,
            });
        }
    }
    suppressed.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then_with(|| a.content_id.cmp(&b.content_id))
    });
    Decision {
        notification,
        suppressed,
    }
}

/// Where a content lay relative to the walker when it was notified.
pub fn classify_timing(
    content_point: GeoPoint,
    fix: &Fix,
    heading: &HeadingEstimate,
    config: &SelectorConfig,
) -> TimingClass {
    let distance = haversine_distance(fix.point, content_point);
    if distance <= config.same_threshold_m {
        return TimingClass::Same;
    }
    let (Some(h), Ok(b)) = (heading.heading, initial_bearing(fix.point, content_point)) else {
        return TimingClass::Misaligned;
    };
    let half = config.sector_half_angle_deg;
    if in_sector(h, b, half) {
        TimingClass::Front
    } else if in_sector(normalize_degrees(h + 180.0), b, half) {
        TimingClass::Behind
    } else {
        TimingClass::Misaligned
    }
}
