//! Exact inference by variable elimination.

use super::factor::Factor;
use super::net::{Assignment, BayesNet};
use super::BayesError;

impl BayesNet {
    fn cpt_factor(&self, var: usize) -> Factor {
        let s = self.structure();
        let mut vars: Vec<usize> = s.parents(var).to_vec();
        vars.push(var);
        let cards = vars.iter().map(|&v| s.variables()[v].card()).collect();
        Factor {
            vars,
            cards,
            values: self.table(var).to_vec(),
        }
    }

    fn check_query(&self, evidence: &Assignment, query: usize) -> Result<(), BayesError> {
        let s = self.structure();
        if evidence.len() != s.len() {
            return Err(BayesError::IncompleteAssignment(format!(
                "evidence has {} slots for {} variables",
                evidence.len(),
                s.len()
            )));
        }
        if query >= s.len() {
            return Err(BayesError::UnknownVariable(format!("#{query}")));
        }
        if evidence[query].is_some() {
            return Err(BayesError::QueryInEvidence(s.variables()[query].name.clone()));
        }
        for (v, e) in evidence.iter().enumerate() {
            if let Some(state) = e {
                if *state >= s.variables()[v].card() {
                    return Err(BayesError::UnknownState {
                        variable: s.variables()[v].name.clone(),
                        state: state.to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Greedy min-degree elimination order over the hidden variables, ties
    /// by variable index.
    pub fn elimination_order(&self, evidence: &Assignment, query: usize) -> Vec<usize> {
        let s = self.structure();
        let n = s.len();
        let mut scopes: Vec<Vec<usize>> = (0..n)
            .map(|v| {
                let mut sc: Vec<usize> = s.parents(v).to_vec();
                sc.push(v);
                sc.retain(|&u| evidence[u].is_none());
                sc
            })
            .collect();
        let mut hidden: Vec<usize> = (0..n).filter(|&v| v != query && evidence[v].is_none()).collect();
        let mut order = Vec::with_capacity(hidden.len());
        while !hidden.is_empty() {
            let degree = |v: usize| {
                let mut nb: Vec<usize> = scopes
                    .iter()
                    .filter(|sc| sc.contains(&v))
                    .flatten()
                    .copied()
                    .filter(|&u| u != v)
                    .collect();
                nb.sort_unstable();
                nb.dedup();
                nb.len()
            };
            let (pos, &v) = hidden
                .iter()
                .enumerate()
                .min_by_key(|&(_, &v)| (degree(v), v))
                .expect("non-empty");
            hidden.remove(pos);
            order.push(v);
            let mut merged: Vec<usize> = scopes
                .iter()
                .filter(|sc| sc.contains(&v))
                .flatten()
                .copied()
                .filter(|&u| u != v)
                .collect();
            merged.sort_unstable();
            merged.dedup();
            scopes.retain(|sc| !sc.contains(&v));
            scopes.push(merged);
        }
        order
    }

    /// Posterior over `query` given `evidence`, eliminating hidden variables
    /// in the default order.
    pub fn posterior(&self, evidence: &Assignment, query: usize) -> Result<Vec<f64>, BayesError> {
        self.check_query(evidence, query)?;
        let order = self.elimination_order(evidence, query);
        self.posterior_with_order(evidence, query, &order)
    }

    /// Posterior with an explicit elimination order. `order` must list every
    /// variable that is neither the query nor observed, exactly once.
    pub fn posterior_with_order(
        &self,
        evidence: &Assignment,
        query: usize,
        order: &[usize],
    ) -> Result<Vec<f64>, BayesError> {
        self.check_query(evidence, query)?;
        let n = self.structure().len();
        let mut expected: Vec<usize> = (0..n).filter(|&v| v != query && evidence[v].is_none()).collect();
        let mut given = order.to_vec();
        expected.sort_unstable();
        given.sort_unstable();
        if expected != given {
            return Err(BayesError::InvalidStructure(
                "elimination order must cover exactly the hidden variables".into(),
            ));
        }

        let mut factors: Vec<Factor> = (0..n).map(|v| self.cpt_factor(v).reduce(evidence)).collect();
        for &var in order {
            let (touching, rest): (Vec<Factor>, Vec<Factor>) =
                factors.into_iter().partition(|f| f.contains(var));
            factors = rest;
            let combined = touching
                .iter()
                .fold(Factor::scalar(1.0), |acc, f| acc.product(f));
            factors.push(combined.sum_out(var));
        }
        let joint = factors
            .iter()
            .fold(Factor::scalar(1.0), |acc, f| acc.product(f));
        debug_assert_eq!(joint.vars, vec![query]);
        let total: f64 = joint.values.iter().sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(BayesError::ZeroEvidence);
        }
        Ok(joint.values.iter().map(|v| v / total).collect())
    }

    /// Named form of [`BayesNet::posterior`].
    pub fn infer_posterior(&self, evidence: &[(&str, &str)], query: &str) -> Result<Vec<f64>, BayesError> {
        let s = self.structure();
        let (q, _) = s.variable(query)?;
        let e = s.assignment(evidence.iter().copied(), false)?;
        self.posterior(&e, q)
    }
}
