use indexmap::IndexMap;

use super::learn::ReactionRecord;
use super::net::BayesNet;
use super::BayesError;
use crate::vocab;

/// Admissible reactions per barrier class. Every list holds at least two
/// distinct reactions, one of which is `neglect`.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateMap {
    entries: IndexMap<String, Vec<String>>,
}

pub const DEFAULT_CANDIDATES: &str = include_str!("../../data/candidates.txt");

impl Default for CandidateMap {
    fn default() -> Self {
        CandidateMap::parse(DEFAULT_CANDIDATES).expect("built-in candidate map parses")
    }
}

impl CandidateMap {
    pub fn new(entries: IndexMap<String, Vec<String>>) -> Result<Self, BayesError> {
        for (barrier, list) in &entries {
            if list.len() < 2 {
                return Err(BayesError::InvalidCandidates(format!(
                    "{barrier}: needs at least two reactions"
                )));
            }
            if !list.iter().any(|r| r == vocab::NEGLECT) {
                return Err(BayesError::InvalidCandidates(format!(
                    "{barrier}: must include neglect"
                )));
            }
            for (i, r) in list.iter().enumerate() {
                if list[..i].contains(r) {
                    return Err(BayesError::InvalidCandidates(format!(
                        "{barrier}: duplicate reaction {r:?}"
                    )));
                }
                if !vocab::REACTION_STATES.contains(&r.as_str()) {
                    return Err(BayesError::InvalidCandidates(format!(
                        "{barrier}: unknown reaction {r:?}"
                    )));
                }
            }
        }
        Ok(CandidateMap { entries })
    }

    /// Parses `barrier_class = reaction, reaction, ...` lines; `#` starts a
    /// comment.
    pub fn parse(text: &str) -> Result<Self, BayesError> {
        let mut entries = IndexMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| BayesError::Parse { line: i + 1, message };
            let (barrier, list) = line
                .split_once('=')
                .ok_or_else(|| parse_err("expected `barrier = reaction, ...`".into()))?;
            let barrier = barrier.trim().to_string();
            if !vocab::BARRIER_CLASSES.contains(&barrier.as_str()) {
                return Err(parse_err(format!("unknown barrier class {barrier:?}")));
            }
            let list: Vec<String> = list.split(',').map(|r| r.trim().to_string()).collect();
            if entries.insert(barrier.clone(), list).is_some() {
                return Err(parse_err(format!("{barrier} listed twice")));
            }
        }
        CandidateMap::new(entries)
    }

    pub fn get(&self, barrier: &str) -> Result<&[String], BayesError> {
        self.entries
            .get(barrier)
            .map(Vec::as_slice)
            .ok_or_else(|| BayesError::UnknownBarrier(barrier.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|(b, rs)| format!("{b} = {}\n", rs.join(", ")))
            .collect()
    }
}

/// A reaction with its probability after masking to the candidate set.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RankedReaction {
    pub reaction: String,
    pub probability: f64,
}

/// Restricts `posterior` (aligned with `states`) to `candidates`,
/// renormalizes and sorts descending, ties broken by name.
pub fn rank_candidates(
    states: &[String],
    posterior: &[f64],
    candidates: &[String],
) -> Result<Vec<RankedReaction>, BayesError> {
    let mut ranked = Vec::with_capacity(candidates.len());
    for c in candidates {
        let i = states.iter().position(|s| s == c).ok_or_else(|| BayesError::UnknownState {
            variable: vocab::REACTION.to_string(),
            state: c.clone(),
        })?;
        ranked.push(RankedReaction {
            reaction: c.clone(),
            probability: posterior[i],
        });
    }
    let total: f64 = ranked.iter().map(|r| r.probability).sum();
    if total <= 0.0 || !total.is_finite() {
        return Err(BayesError::ZeroEvidence);
    }
    for r in &mut ranked {
        r.probability /= total;
    }
    ranked.sort_by(|a, b| {
        b.probability
            .total_cmp(&a.probability)
            .then_with(|| a.reaction.cmp(&b.reaction))
    });
    Ok(ranked)
}

/// Ranked admissible reactions for a barrier encounter. The record's
/// `reaction` field is ignored; feature columns absent from the net are
/// skipped.
pub fn predict_reaction(
    net: &BayesNet,
    record: &ReactionRecord,
    candidates: &CandidateMap,
) -> Result<Vec<RankedReaction>, BayesError> {
    predict_from_evidence(net, &record.features(), &record.barrier, candidates)
}

pub(crate) fn predict_from_evidence(
    net: &BayesNet,
    evidence: &[(&str, &str)],
    barrier: &str,
    candidates: &CandidateMap,
) -> Result<Vec<RankedReaction>, BayesError> {
    let allowed = candidates.get(barrier)?;
    let s = net.structure();
    let (q, var) = s.variable(vocab::REACTION)?;
    let e = s.assignment(evidence.iter().copied(), true)?;
    let posterior = net.posterior(&e, q)?;
    rank_candidates(&var.states, &posterior, allowed)
}
