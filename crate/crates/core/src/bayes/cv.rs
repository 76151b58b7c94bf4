//! k-fold cross validation of reaction prediction.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::candidates::{predict_reaction, CandidateMap};
use super::learn::{learn_from_records, ReactionRecord};
use super::net::Structure;
use super::BayesError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub correct: usize,
    pub incorrect: usize,
    pub accuracy: f64,
}

/// Held-out prediction for one record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub fold: usize,
    pub barrier: String,
    pub label: String,
    pub predicted: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<FoldResult>,
    /// Mean of the per-fold accuracies.
    pub average: f64,
    /// Expected accuracy of picking uniformly among each record's candidates.
    pub random_baseline: f64,
    /// Fraction of records per candidate-list size.
    pub candidate_size_mix: BTreeMap<usize, f64>,
    pub outcomes: Vec<Outcome>,
}

#[derive(Debug, Clone)]
pub struct CvConfig<'a> {
    pub k: usize,
    pub structure: &'a Structure,
    pub alpha: f64,
    pub candidates: &'a CandidateMap,
    pub seed: u64,
}

/// Mean over records of `1 / |candidates(barrier)|`, accumulated per list
/// size so that it equals `sum_s f_s / s` term by term.
pub fn random_baseline(
    data: &[ReactionRecord],
    candidates: &CandidateMap,
) -> Result<(f64, BTreeMap<usize, f64>), BayesError> {
    let mut by_size: BTreeMap<usize, usize> = BTreeMap::new();
    for r in data {
        *by_size.entry(candidates.get(&r.barrier)?.len()).or_default() += 1;
    }
    let n = data.len() as f64;
    let mix: BTreeMap<usize, f64> = by_size.iter().map(|(&s, &c)| (s, c as f64 / n)).collect();
    let baseline = mix
        .iter()
        .map(|(&s, &f)| if s == 2 { 0.5 * f } else { (1.0 / s as f64) * f })
        .fold(0.0, |acc, x| acc + x);
    Ok((baseline, mix))
}

/// Seeded shuffle, then `k` contiguous folds of `n / k` records; the last
/// fold absorbs the remainder.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let size = n / k;
    (0..k)
        .map(|i| {
            let end = if i + 1 == k { n } else { (i + 1) * size };
            order[i * size..end].to_vec()
        })
        .collect()
}

pub fn k_fold_cv(data: &[ReactionRecord], cfg: &CvConfig<'_>) -> Result<CvReport, BayesError> {
    if cfg.k < 2 {
        return Err(BayesError::InvalidK(cfg.k));
    }
    if data.len() < cfg.k {
        return Err(BayesError::TooFewRecords {
            records: data.len(),
            k: cfg.k,
        });
    }
    let (random_baseline, candidate_size_mix) = random_baseline(data, cfg.candidates)?;
    let folds = fold_assignment(data.len(), cfg.k, cfg.seed);
    let mut results = Vec::with_capacity(cfg.k);
    let mut outcomes = Vec::with_capacity(data.len());
    for (f, held_out) in folds.iter().enumerate() {
        let mut is_test = vec![false; data.len()];
        for &i in held_out {
            is_test[i] = true;
        }
        let train: Vec<ReactionRecord> = data
            .iter()
            .zip(&is_test)
            .filter(|(_, t)| !**t)
            .map(|(r, _)| r.clone())
            .collect();
        let net = learn_from_records(cfg.structure, &train, cfg.alpha)?;
        let mut cache: HashMap<[&str; 5], String> = HashMap::new();
        let mut correct = 0;
        for &i in held_out {
            let r = &data[i];
            let key = r.features().map(|(_, s)| s);
            let predicted = match cache.get(&key) {
                Some(p) => p.clone(),
                None => {
                    let p = predict_reaction(&net, r, cfg.candidates)?[0].reaction.clone();
                    cache.insert(key, p.clone());
                    p
                }
            };
            if predicted == r.reaction {
                correct += 1;
            }
            outcomes.push(Outcome {
                fold: f,
                barrier: r.barrier.clone(),
                label: r.reaction.clone(),
                predicted,
            });
        }
        let total = held_out.len();
        results.push(FoldResult {
            correct,
            incorrect: total - correct,
            accuracy: correct as f64 / total as f64,
        });
    }
    let average = results.iter().map(|f| f.accuracy).sum::<f64>() / cfg.k as f64;
    Ok(CvReport {
        k: cfg.k,
        seed: cfg.seed,
        folds: results,
        average,
        random_baseline,
        candidate_size_mix,
        outcomes,
    })
}
