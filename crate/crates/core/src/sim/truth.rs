use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SimError;
use crate::bayes::{BayesNet, CandidateMap, ReactionRecord, Structure, Variable, DATASET_COLUMNS};
use crate::vocab;

/// The published example rows: weather, temperature, locality, willingness,
/// barrier, reaction.
pub const EXAMPLE_ROWS: [[&str; 6]; 8] = [
    ["Fine", "30C+", "No", "not walk", "bicycles_on_street", "proceed with caution"],
    ["Cloudy", "5C-", "Yes", "walk for exercise", "stairs_in_station", "escalator"],
    ["Rain", "other", "No", "walk for exercise", "bicycles_on_sidewalk", "detour"],
    ["Fine", "other", "Little", "walk for exercise", "stairs_in_station", "neglect"],
    ["Fine", "5C-", "Little", "not walk", "crowd_in_station", "change time slot"],
    ["Cloudy", "other", "Little", "not walk", "road_without_sidewalk", "proceed with caution"],
    ["Cloudy", "5C-", "Yes", "walk for exercise", "street_people", "detour"],
    ["Rain", "5C-", "Little", "not walk", "stairs_in_station", "elevator"],
];

pub fn example_records() -> Vec<ReactionRecord> {
    EXAMPLE_ROWS
        .iter()
        .map(|r| ReactionRecord {
            weather: r[0].into(),
            temperature: r[1].into(),
            locality: r[2].into(),
            willingness: r[3].into(),
            barrier: r[4].into(),
            reaction: r[5].into(),
        })
        .collect()
}

/// Mass a reaction puts on the feature values seen with it in the example
/// rows; the rest is spread uniformly.
pub const DEFAULT_SHARPNESS: f64 = 0.9;

pub const MAX_NOISE: f64 = 0.5;

/// A generating distribution for reaction datasets: a network over exactly
/// the dataset columns, the admissible reactions per barrier, and the
/// probability that a label is replaced by another admissible reaction.
#[derive(Debug, Clone)]
pub struct GroundTruthSpec {
    net: BayesNet,
    candidates: CandidateMap,
    noise: f64,
    columns: [usize; 6],
}

/// Barrier first, then reaction given barrier, then each feature given the
/// reaction. This factorizes exactly like the naive Bayes reaction model.
fn truth_structure() -> Structure {
    let var = |name| Variable::builtin(name).expect("built-in variable");
    Structure::new(
        vec![
            var(vocab::BARRIER),
            var(vocab::REACTION),
            var(vocab::WEATHER),
            var(vocab::TEMPERATURE),
            var(vocab::LOCALITY),
            var(vocab::WILLINGNESS),
        ],
        vec![vec![], vec![0], vec![1], vec![1], vec![1], vec![1]],
    )
    .expect("fixed structure is valid")
}

fn position(states: &[&str], s: &str) -> usize {
    states.iter().position(|x| *x == s).expect("known state")
}

/// Uniform barrier prior over the example-dataset classes.
fn barrier_prior() -> Vec<f64> {
    let p = 1.0 / vocab::EXAMPLE_DATASET_BARRIERS.len() as f64;
    vocab::BARRIER_CLASSES
        .iter()
        .map(|b| if vocab::EXAMPLE_DATASET_BARRIERS.contains(b) { p } else { 0.0 })
        .collect()
}

/// `reaction | barrier` rows from per-candidate weights.
fn reaction_table(candidates: &CandidateMap, weight: impl Fn(&str, &str) -> f64) -> Vec<f64> {
    let mut table = Vec::new();
    for b in vocab::BARRIER_CLASSES {
        let allowed = candidates.get(b).expect("default map covers every class");
        let mut row: Vec<f64> = vocab::REACTION_STATES
            .iter()
            .map(|r| if allowed.iter().any(|a| a == r) { weight(b, r) } else { 0.0 })
            .collect();
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|p| *p /= total);
        table.extend(row);
    }
    table
}

fn uniform_rows(rows: usize, card: usize) -> Vec<f64> {
    vec![1.0 / card as f64; rows * card]
}

impl GroundTruthSpec {
    pub fn new(net: BayesNet, candidates: CandidateMap, noise: f64) -> Result<Self, SimError> {
        if !(0.0..=MAX_NOISE).contains(&noise) {
            return Err(SimError::InvalidSpec(format!("noise {noise} outside [0, {MAX_NOISE}]")));
        }
        let s = net.structure();
        if s.len() != DATASET_COLUMNS.len() {
            return Err(SimError::InvalidSpec(format!(
                "net must have exactly the {} dataset columns",
                DATASET_COLUMNS.len()
            )));
        }
        let mut columns = [0; 6];
        for (slot, name) in columns.iter_mut().zip(DATASET_COLUMNS) {
            let (i, var) = s
                .variable(name)
                .map_err(|_| SimError::InvalidSpec(format!("net lacks column {name:?}")))?;
            let builtin = vocab::states_of(name).expect("dataset column");
            if var.states.iter().map(String::as_str).ne(builtin.iter().copied()) {
                return Err(SimError::InvalidSpec(format!(
                    "{name} must use the built-in states {builtin:?}"
                )));
            }
            *slot = i;
        }
        let spec = GroundTruthSpec {
            net,
            candidates,
            noise,
            columns,
        };
        spec.check_support()?;
        Ok(spec)
    }

    /// Every barrier that can occur must be in the candidate map, and its
    /// reactions must stay inside the candidate list.
    fn check_support(&self) -> Result<(), SimError> {
        let [_, _, _, _, b, r] = self.columns;
        let vars = self.net.variables();
        let mut bad = None;
        self.for_each_joint(|a, p| {
            if p <= 0.0 || bad.is_some() {
                return;
            }
            let barrier = &vars[b].states[a[b]];
            let reaction = &vars[r].states[a[r]];
            match self.candidates.get(barrier) {
                Err(_) => bad = Some(format!("barrier {barrier:?} has no candidate list")),
                Ok(c) if !c.contains(reaction) => {
                    bad = Some(format!("{barrier}: reaction {reaction:?} is not a candidate"))
                }
                Ok(_) => {}
            }
        });
        match bad {
            Some(msg) => Err(SimError::InvalidSpec(msg)),
            None => Ok(()),
        }
    }

    /// Ground truth seeded from the example rows. Noise starts at zero.
    pub fn example_table(sharpness: f64) -> Result<Self, SimError> {
        if !(0.0..=1.0).contains(&sharpness) {
            return Err(SimError::InvalidSpec(format!("sharpness {sharpness} outside [0, 1]")));
        }
        let candidates = CandidateMap::default();
        let rows = example_records();
        let reactions = reaction_table(&candidates, |b, r| {
            1.0 + rows.iter().filter(|x| x.barrier == b && x.reaction == r).count() as f64
        });
        let mut tables = vec![barrier_prior(), reactions];
        for (col, states) in [
            vocab::WEATHER_STATES,
            vocab::TEMPERATURE_STATES,
            vocab::LOCALITY_STATES,
            vocab::WILLINGNESS_STATES,
        ]
        .into_iter()
        .enumerate()
        {
            let card = states.len();
            let mut table = Vec::with_capacity(vocab::REACTION_STATES.len() * card);
            for r in vocab::REACTION_STATES {
                let seen: Vec<&str> = EXAMPLE_ROWS
                    .iter()
                    .filter(|row| row[5] == *r)
                    .map(|row| row[col])
                    .collect();
                let mut dist = vec![1.0 / card as f64; card];
                if !seen.is_empty() {
                    dist.iter_mut().for_each(|p| *p *= 1.0 - sharpness);
                    for s in &seen {
                        dist[position(states, s)] += sharpness / seen.len() as f64;
                    }
                }
                table.extend(dist);
            }
            tables.push(table);
        }
        let net = BayesNet::new(truth_structure(), tables)?;
        GroundTruthSpec::new(net, candidates, 0.0)
    }

    /// Reaction fixed by the barrier, features independent of everything.
    pub fn deterministic() -> Self {
        let candidates = CandidateMap::default();
        let reactions = reaction_table(&candidates, |b, r| {
            let first = candidates.get(b).expect("known class")[0].as_str();
            if r == first { 1.0 } else { 0.0 }
        });
        GroundTruthSpec::with_uniform_features(candidates, reactions)
    }

    /// Labels uniform over each barrier's candidates and independent of the
    /// features, so no predictor beats the random baseline in expectation.
    pub fn uniform_labels() -> Self {
        let candidates = CandidateMap::default();
        let reactions = reaction_table(&candidates, |_, _| 1.0);
        GroundTruthSpec::with_uniform_features(candidates, reactions)
    }

    fn with_uniform_features(candidates: CandidateMap, reactions: Vec<f64>) -> Self {
        let structure = truth_structure();
        let n_reactions = vocab::REACTION_STATES.len();
        let mut tables = vec![barrier_prior(), reactions];
        for v in 2..structure.len() {
            tables.push(uniform_rows(n_reactions, structure.variables()[v].card()));
        }
        let net = BayesNet::new(structure, tables).expect("valid tables");
        GroundTruthSpec::new(net, candidates, 0.0).expect("valid spec")
    }

    pub fn with_noise(mut self, noise: f64) -> Result<Self, SimError> {
        if !(0.0..=MAX_NOISE).contains(&noise) {
            return Err(SimError::InvalidSpec(format!("noise {noise} outside [0, {MAX_NOISE}]")));
        }
        self.noise = noise;
        Ok(self)
    }

    pub fn net(&self) -> &BayesNet {
        &self.net
    }

    pub fn candidates(&self) -> &CandidateMap {
        &self.candidates
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    fn for_each_joint(&self, mut f: impl FnMut(&[usize], f64)) {
        let cards: Vec<usize> = self.net.variables().iter().map(Variable::card).collect();
        let mut a = vec![0usize; cards.len()];
        loop {
            let full: Vec<Option<usize>> = a.iter().map(|&s| Some(s)).collect();
            let p = self.net.joint_probability(&full).expect("complete assignment");
            f(&a, p);
            let mut i = cards.len();
            loop {
                if i == 0 {
                    return;
                }
                i -= 1;
                a[i] += 1;
                if a[i] < cards[i] {
                    break;
                }
                a[i] = 0;
            }
        }
    }

    /// Exact marginal of one column, by enumeration of the joint.
    pub fn marginal(&self, column: &str) -> Result<Vec<f64>, SimError> {
        let (v, var) = self.net.structure().variable(column)?;
        let mut out = vec![0.0; var.card()];
        self.for_each_joint(|a, p| out[a[v]] += p);
        Ok(out)
    }

    /// Probability of each barrier class that can occur, in state order.
    pub fn barrier_mix(&self) -> Vec<(String, f64)> {
        let b = self.columns[4];
        let states = &self.net.variables()[b].states;
        self.marginal(vocab::BARRIER)
            .expect("barrier column exists")
            .into_iter()
            .zip(states)
            .filter(|(p, _)| *p > 0.0)
            .map(|(p, s)| (s.clone(), p))
            .collect()
    }

    /// Expected accuracy of the best possible predictor on labels drawn from
    /// this spec at the given noise rate.
    ///
    /// With `q = (1 - e) P(y, x) + e (P(x) - P(y, x)) / (c - 1)` the chance of
    /// observing label `y` with features `x`, the optimum is `sum_x max_y q`.
    pub fn accuracy_at(&self, noise: f64) -> f64 {
        let [_, _, _, _, b, r] = self.columns;
        let vars = self.net.variables();
        let mut by_features: BTreeMap<Vec<usize>, Vec<f64>> = BTreeMap::new();
        self.for_each_joint(|a, p| {
            let key: Vec<usize> = a.iter().enumerate().filter(|(i, _)| *i != r).map(|(_, s)| *s).collect();
            let row = by_features
                .entry(key)
                .or_insert_with(|| vec![0.0; vars[r].card()]);
            row[a[r]] += p;
        });
        let b_key = if b < r { b } else { b - 1 };
        let mut total = 0.0;
        for (key, joint) in &by_features {
            let px: f64 = joint.iter().sum();
            if px <= 0.0 {
                continue;
            }
            let barrier = &vars[b].states[key[b_key]];
            let allowed = self.candidates.get(barrier).expect("checked at construction");
            let c = allowed.len() as f64;
            let best = allowed
                .iter()
                .map(|y| {
                    let pxy = joint[vars[r].state_index(y).expect("candidate is a reaction")];
                    (1.0 - noise) * pxy + noise * (px - pxy) / (c - 1.0)
                })
                .fold(f64::NEG_INFINITY, f64::max);
            total += best;
        }
        total
    }

    pub fn bayes_optimal_accuracy(&self) -> f64 {
        self.accuracy_at(self.noise)
    }

    /// Noise rate at which the Bayes-optimal accuracy equals `target`.
    pub fn tune_noise(&self, target: f64) -> Result<f64, SimError> {
        let (hi_acc, lo_acc) = (self.accuracy_at(0.0), self.accuracy_at(MAX_NOISE));
        if !(lo_acc..=hi_acc).contains(&target) {
            return Err(SimError::InvalidSpec(format!(
                "target accuracy {target} outside the reachable range [{lo_acc:.4}, {hi_acc:.4}]"
            )));
        }
        let (mut lo, mut hi) = (0.0, MAX_NOISE);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.accuracy_at(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

fn sample_state(row: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (s, &p) in row.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = s;
        if u < acc {
            return s;
        }
    }
    last
}

/// Draws one complete assignment by ancestral sampling.
pub fn sample_assignment(net: &BayesNet, order: &[usize], rng: &mut impl Rng) -> Vec<usize> {
    let s = net.structure();
    let mut a = vec![0usize; s.len()];
    for &v in order {
        let card = s.variables()[v].card();
        let row = s.row_index(v, &a);
        a[v] = sample_state(&net.table(v)[row * card..(row + 1) * card], rng.gen::<f64>());
    }
    a
}

/// `n` records sampled from the spec, labels then flipped to a uniformly
/// chosen other candidate with probability `noise`. Every record consumes
/// the same random draws whatever the noise rate, so two specs differing
/// only in noise produce the same features.
pub fn gen_dataset(spec: &GroundTruthSpec, n: usize, seed: u64) -> Vec<ReactionRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order = spec.net.structure().topological_order().expect("acyclic");
    let vars = spec.net.variables();
    let state = |a: &[usize], col: usize| vars[spec.columns[col]].states[a[spec.columns[col]]].clone();
    (0..n)
        .map(|_| {
            let a = sample_assignment(&spec.net, &order, &mut rng);
            let flip = rng.gen::<f64>() < spec.noise;
            let pick = rng.gen::<f64>();
            let barrier = state(&a, 4);
            let mut reaction = state(&a, 5);
            if flip {
                let others: Vec<&String> = spec
                    .candidates
                    .get(&barrier)
                    .expect("checked at construction")
                    .iter()
                    .filter(|c| **c != reaction)
                    .collect();
                let i = ((pick * others.len() as f64) as usize).min(others.len() - 1);
                reaction = others[i].clone();
            }
            ReactionRecord {
                weather: state(&a, 0),
                temperature: state(&a, 1),
                locality: state(&a, 2),
                willingness: state(&a, 3),
                barrier,
                reaction,
            }
        })
        .collect()
}

/// A random network with 1 to `max_vars` variables of 2 to `max_states`
/// states, up to three parents each and strictly positive CPT entries.
pub fn random_net(seed: u64, max_vars: usize, max_states: usize) -> BayesNet {
    assert!(max_vars >= 1 && max_states >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_vars);
    let variables: Vec<Variable> = (0..n)
        .map(|i| {
            let card = rng.gen_range(2..=max_states);
            Variable::new(format!("v{i}"), (0..card).map(|s| format!("s{s}")))
        })
        .collect();
    let parents: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut ps: Vec<usize> = (0..i).filter(|_| rng.gen_bool(0.4)).collect();
            while ps.len() > 3 {
                ps.remove(rng.gen_range(0..ps.len()));
            }
            ps
        })
        .collect();
    let structure = Structure::new(variables, parents).expect("parents precede children");
    let tables = (0..n)
        .map(|v| {
            let card = structure.variables()[v].card();
            let mut t = Vec::new();
            for _ in 0..structure.row_count(v) {
                let row: Vec<f64> = (0..card).map(|_| rng.gen_range(0.05..1.0)).collect();
                let total: f64 = row.iter().sum();
                t.extend(row.into_iter().map(|p| p / total));
            }
            t
        })
        .collect();
    BayesNet::new(structure, tables).expect("normalized rows")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayes::{learn_from_records, predict_reaction};

    #[test]
    fn empty_and_deterministic_outputs() {
        let spec = GroundTruthSpec::example_table(DEFAULT_SHARPNESS).unwrap();
        assert!(gen_dataset(&spec, 0, 1).is_empty());
        assert_eq!(gen_dataset(&spec, 300, 9), gen_dataset(&spec, 300, 9));
        assert_ne!(gen_dataset(&spec, 300, 9), gen_dataset(&spec, 300, 10));
        for r in gen_dataset(&spec, 500, 3) {
            r.validate().unwrap();
            assert!(spec.candidates().get(&r.barrier).unwrap().contains(&r.reaction));
        }
    }

    #[test]
    fn deterministic_spec_labels_follow_the_barrier() {
        let spec = GroundTruthSpec::deterministic();
        assert!((spec.bayes_optimal_accuracy() - 1.0).abs() < 1e-12);
        let mut seen = BTreeMap::new();
        for r in gen_dataset(&spec, 1000, 4) {
            let prev = seen.insert(r.barrier.clone(), r.reaction.clone());
            assert!(prev.is_none_or(|p| p == r.reaction));
        }
    }

    #[test]
    fn noise_flips_to_other_candidates() {
        let clean = GroundTruthSpec::deterministic();
        let noisy = clean.clone().with_noise(0.3).unwrap();
        let a = gen_dataset(&clean, 4000, 5);
        let b = gen_dataset(&noisy, 4000, 5);
        let flipped = a.iter().zip(&b).filter(|(x, y)| x.reaction != y.reaction).count();
        assert!(a.iter().zip(&b).all(|(x, y)| x.features() == y.features()));
        let rate = flipped as f64 / a.len() as f64;
        assert!((rate - 0.3).abs() < 0.03, "flip rate {rate}");
        // deterministic labels make the optimum exactly 1 - noise
        assert!((noisy.bayes_optimal_accuracy() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn uniform_labels_optimum_is_the_baseline() {
        let spec = GroundTruthSpec::uniform_labels();
        // half of the classes offer two reactions, half three
        let expected = 0.5 * 0.5 + (1.0 / 3.0) * 0.5;
        assert!((spec.bayes_optimal_accuracy() - expected).abs() < 1e-12);
    }

    #[test]
    fn tuning_hits_the_target() {
        let spec = GroundTruthSpec::example_table(DEFAULT_SHARPNESS).unwrap();
        let e = spec.tune_noise(0.8).unwrap();
        assert!((spec.accuracy_at(e) - 0.8).abs() < 1e-9);
        assert!(spec.tune_noise(1.01).is_err());
        assert!(spec.clone().with_noise(0.6).is_err());
    }

    #[test]
    fn spec_validation() {
        let cands = CandidateMap::parse("hawkers = neglect, detour\n").unwrap();
        let net = GroundTruthSpec::uniform_labels().net().clone();
        assert!(matches!(
            GroundTruthSpec::new(net, cands, 0.0),
            Err(SimError::InvalidSpec(_))
        ));
        let other = BayesNet::uniform(Structure::default_reaction_model());
        // a uniform net puts mass on reactions outside the candidate lists
        assert!(GroundTruthSpec::new(other, CandidateMap::default(), 0.0).is_err());
    }

    #[test]
    fn example_patterns_survive_training() {
        let spec = GroundTruthSpec::example_table(DEFAULT_SHARPNESS).unwrap();
        let data = gen_dataset(&spec, 1200, 7);
        let net = learn_from_records(&Structure::default_reaction_model(), &data, 1.0).unwrap();
        let rows = example_records();
        let top = |r: &ReactionRecord| predict_reaction(&net, r, spec.candidates()).unwrap()[0].reaction.clone();
        assert_eq!(top(&rows[0]), "proceed with caution");
        assert_eq!(top(&rows[3]), "neglect");
    }

    #[test]
    fn random_nets_are_valid() {
        for seed in 0..50 {
            let net = random_net(seed, 8, 4);
            assert!(net.structure().len() <= 8);
            assert!(net.variables().iter().all(|v| (2..=4).contains(&v.card())));
            assert_eq!(net, random_net(seed, 8, 4));
        }
    }
}
