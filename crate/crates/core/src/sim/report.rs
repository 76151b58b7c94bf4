use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::bayes::{k_fold_cv, CvConfig, FoldResult, ReactionRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierAccuracy {
    pub barrier: String,
    pub records: usize,
    pub correct: usize,
    pub incorrect: usize,
    pub accuracy: f64,
}

/// What is known about the generating distribution, for the header.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthInfo {
    pub noise: f64,
    pub bayes_optimal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub records: usize,
    pub k: usize,
    pub seed: u64,
    pub alpha: f64,
    pub folds: Vec<FoldResult>,
    pub average: f64,
    pub random_baseline: f64,
    pub candidate_size_mix: BTreeMap<usize, f64>,
    /// Fraction of records per barrier class.
    pub barrier_mix: BTreeMap<String, f64>,
    pub per_barrier: Vec<BarrierAccuracy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<TruthInfo>,
}

/// Cross validation plus a per-barrier breakdown of the held-out
/// predictions.
pub fn eval_report(
    data: &[ReactionRecord],
    cfg: &CvConfig<'_>,
    truth: Option<TruthInfo>,
) -> Result<EvalReport, SimError> {
    let cv = k_fold_cv(data, cfg)?;
    let mut tally: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for o in &cv.outcomes {
        let t = tally.entry(o.barrier.clone()).or_default();
        if o.predicted == o.label {
            t.0 += 1;
        } else {
            t.1 += 1;
        }
    }
    let n = data.len() as f64;
    let barrier_mix = tally
        .iter()
        .map(|(b, (c, i))| (b.clone(), (c + i) as f64 / n))
        .collect();
    let per_barrier = tally
        .into_iter()
        .map(|(barrier, (correct, incorrect))| BarrierAccuracy {
            barrier,
            records: correct + incorrect,
            correct,
            incorrect,
            accuracy: correct as f64 / (correct + incorrect) as f64,
        })
        .collect();
    Ok(EvalReport {
        records: data.len(),
        k: cv.k,
        seed: cv.seed,
        alpha: cfg.alpha,
        folds: cv.folds,
        average: cv.average,
        random_baseline: cv.random_baseline,
        candidate_size_mix: cv.candidate_size_mix,
        barrier_mix,
        per_barrier,
        truth,
    })
}

fn ordinal(i: usize) -> String {
    let suffix = match (i % 10, i % 100) {
        (1, r) if r != 11 => "st",
        (2, r) if r != 12 => "nd",
        (3, r) if r != 13 => "rd",
        _ => "th",
    };
    format!("{i}{suffix}")
}

fn pct(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "records {}  k {}  seed {}  alpha {}",
            self.records, self.k, self.seed, self.alpha
        );
        let mix: Vec<String> = self
            .barrier_mix
            .iter()
            .map(|(b, f)| format!("{b} {}", pct(*f)))
            .collect();
        let _ = writeln!(out, "barrier mix: {}", mix.join(", "));
        let sizes: Vec<String> = self
            .candidate_size_mix
            .iter()
            .map(|(s, f)| format!("{s} candidates {}", pct(*f)))
            .collect();
        let _ = writeln!(out, "candidate sizes: {}", sizes.join(", "));
        if let Some(t) = self.truth {
            let _ = writeln!(
                out,
                "label noise {:.4}  bayes-optimal accuracy {}",
                t.noise,
                pct(t.bayes_optimal)
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<8}{:>6}{:>6}{:>10}", "fold", "T", "F", "accuracy");
        for (i, f) in self.folds.iter().enumerate() {
            let _ = writeln!(
                out,
                "{:<8}{:>6}{:>6}{:>10}",
                ordinal(i + 1),
                f.correct,
                f.incorrect,
                pct(f.accuracy)
            );
        }
        let _ = writeln!(out, "{:<20}{:>10}", "average", pct(self.average));
        let _ = writeln!(out, "{:<20}{:>10}", "random baseline", pct(self.random_baseline));
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<28}{:>6}{:>6}{:>10}", "barrier", "T", "F", "accuracy");
        for b in &self.per_barrier {
            let _ = writeln!(
                out,
                "{:<28}{:>6}{:>6}{:>10}",
                b.barrier,
                b.correct,
                b.incorrect,
                pct(b.accuracy)
            );
        }
        out
    }
}
