use indexmap::IndexMap;

use super::SelectError;
use crate::vocab::{LOCALITY_STATES, USEFUL_CLASSES};

/// P(notify | useful class, locality). Useful spots carry no trained
/// reactions, so they are scored from this table instead of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct UsefulPriors {
    entries: IndexMap<String, Vec<f64>>,
}

pub const DEFAULT_USEFUL_PRIORS: &str = include_str!("../../data/useful_priors.txt");

impl Default for UsefulPriors {
    fn default() -> Self {
        UsefulPriors::parse(DEFAULT_USEFUL_PRIORS).expect("built-in priors parse")
    }
}

impl UsefulPriors {
    /// Parses `class = Yes: p, No: p, Little: p` lines.
    pub fn parse(text: &str) -> Result<Self, SelectError> {
        let mut entries = IndexMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| SelectError::Parse { line: i + 1, message };
            let (class, rest) = line
                .split_once('=')
                .ok_or_else(|| err("expected `class = Locality: p, ...`".into()))?;
            let class = class.trim();
            if !USEFUL_CLASSES.contains(&class) {
                return Err(err(format!("unknown useful class {class:?}")));
            }
            let mut probs = vec![f64::NAN; LOCALITY_STATES.len()];
            for item in rest.split(',') {
                let (state, p) = item
                    .split_once(':')
                    .ok_or_else(|| err(format!("expected `Locality: p`, got {item:?}")))?;
                let idx = LOCALITY_STATES
                    .iter()
                    .position(|s| *s == state.trim())
                    .ok_or_else(|| err(format!("unknown locality {:?}", state.trim())))?;
                let p: f64 = p
                    .trim()
                    .parse()
                    .map_err(|_| err(format!("bad probability {:?}", p.trim())))?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(err(format!("probability {p} outside [0, 1]")));
                }
                probs[idx] = p;
            }
            if probs.iter().any(|p| p.is_nan()) {
                return Err(err(format!("{class}: every locality state needs a value")));
            }
            if entries.insert(class.to_string(), probs).is_some() {
                return Err(err(format!("{class} listed twice")));
            }
        }
        Ok(UsefulPriors { entries })
    }

    pub fn notify_probability(&self, class: &str, locality: &str) -> Result<f64, SelectError> {
        let row = self
            .entries
            .get(class)
            .ok_or_else(|| SelectError::UnknownUsefulClass(class.to_string()))?;
        let idx = LOCALITY_STATES
            .iter()
            .position(|s| *s == locality)
            .ok_or_else(|| SelectError::InvalidState {
                variable: "locality".into(),
                state: locality.into(),
            })?;
        Ok(row[idx])
    }
}
