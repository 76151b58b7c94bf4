use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::BayesError;
use crate::vocab;

/// A discrete variable with an ordered list of named states.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub states: Vec<String>,
}

impl Variable {
    pub fn new<S: Into<String>>(name: impl Into<String>, states: impl IntoIterator<Item = S>) -> Self {
        Variable {
            name: name.into(),
            states: states.into_iter().map(Into::into).collect(),
        }
    }

    /// One of the built-in variables from [`crate::vocab`].
    pub fn builtin(name: &str) -> Option<Self> {
        vocab::states_of(name).map(|s| Variable::new(name, s.iter().copied()))
    }

    pub fn card(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, state: &str) -> Option<usize> {
        self.states.iter().position(|s| s == state)
    }
}

/// Full or partial assignment indexed by variable position.
pub type Assignment = Vec<Option<usize>>;

/// Variables plus an acyclic parent list per variable, without parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Structure {
    variables: Vec<Variable>,
    parents: Vec<Vec<usize>>,
    by_name: HashMap<String, usize>,
}

impl Structure {
    pub fn new(variables: Vec<Variable>, parents: Vec<Vec<usize>>) -> Result<Self, BayesError> {
        if parents.len() != variables.len() {
            return Err(BayesError::InvalidStructure(
                "one parent list per variable is required".into(),
            ));
        }
        let mut by_name = HashMap::new();
        for (i, v) in variables.iter().enumerate() {
            if v.states.len() < 2 {
                return Err(BayesError::InvalidStructure(format!(
                    "variable {:?} needs at least two states",
                    v.name
                )));
            }
            let mut seen = v.states.clone();
            seen.sort();
            seen.dedup();
            if seen.len() != v.states.len() {
                return Err(BayesError::InvalidStructure(format!(
                    "variable {:?} has duplicate state names",
                    v.name
                )));
            }
            if by_name.insert(v.name.clone(), i).is_some() {
                return Err(BayesError::InvalidStructure(format!(
                    "variable {:?} declared twice",
                    v.name
                )));
            }
        }
        for (child, ps) in parents.iter().enumerate() {
            for (j, &p) in ps.iter().enumerate() {
                if p >= variables.len() || p == child || ps[..j].contains(&p) {
                    return Err(BayesError::InvalidStructure(format!(
                        "bad parent list for {:?}",
                        variables[child].name
                    )));
                }
            }
        }
        let s = Structure {
            variables,
            parents,
            by_name,
        };
        s.topological_order()?;
        Ok(s)
    }

    /// Builds a structure from `(child, parents)` names over built-in
    /// variables.
    pub fn from_names(spec: &[(&str, &[&str])]) -> Result<Self, BayesError> {
        let mut variables = Vec::new();
        for (name, _) in spec {
            variables.push(
                Variable::builtin(name).ok_or_else(|| BayesError::UnknownVariable(name.to_string()))?,
            );
        }
        let pos = |n: &str| {
            spec.iter()
                .position(|(m, _)| *m == n)
                .ok_or_else(|| BayesError::UnknownVariable(n.to_string()))
        };
        let parents = spec
            .iter()
            .map(|(_, ps)| ps.iter().map(|p| pos(p)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        Structure::new(variables, parents)
    }

    /// Parses the line-based structure format:
    ///
    /// ```text
    /// # comment
    /// reaction
    /// barrier <- reaction
    /// weather <- reaction
    /// ```
    ///
    /// Each non-empty line names one built-in variable, optionally followed
    /// by `<-` and a comma-separated parent list.
    pub fn parse(text: &str) -> Result<Self, BayesError> {
        let mut lines: Vec<(usize, String, Vec<String>)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (child, parents) = match line.split_once("<-") {
                Some((c, ps)) => (
                    c.trim().to_string(),
                    ps.split(',')
                        .map(|p| p.trim().to_string())
                        .filter(|p| !p.is_empty())
                        .collect(),
                ),
                None => (line.to_string(), Vec::new()),
            };
            lines.push((i + 1, child, parents));
        }
        let mut variables = Vec::new();
        for (line, name, _) in &lines {
            variables.push(Variable::builtin(name).ok_or_else(|| BayesError::Parse {
                line: *line,
                message: format!("unknown variable {name:?}"),
            })?);
        }
        let mut parents = Vec::new();
        for (line, _, ps) in &lines {
            let mut idx = Vec::new();
            for p in ps {
                let j = lines.iter().position(|(_, n, _)| n == p).ok_or_else(|| BayesError::Parse {
                    line: *line,
                    message: format!("parent {p:?} is not declared"),
                })?;
                idx.push(j);
            }
            parents.push(idx);
        }
        Structure::new(variables, parents)
    }

    /// Naive-Bayes orientation: reaction is the root and parent of every
    /// dataset feature.
    pub fn default_reaction_model() -> Self {
        Structure::parse(DEFAULT_STRUCTURE).expect("built-in structure parses")
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn parents(&self, var: usize) -> &[usize] {
        &self.parents[var]
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn variable(&self, name: &str) -> Result<(usize, &Variable), BayesError> {
        let i = self
            .index_of(name)
            .ok_or_else(|| BayesError::UnknownVariable(name.to_string()))?;
        Ok((i, &self.variables[i]))
    }

    /// Parents before children; ties keep declaration order.
    pub fn topological_order(&self) -> Result<Vec<usize>, BayesError> {
        let n = self.variables.len();
        let mut placed = vec![false; n];
        let mut order = Vec::with_capacity(n);
        while order.len() < n {
            let next = (0..n).find(|&v| !placed[v] && self.parents[v].iter().all(|&p| placed[p]));
            match next {
                Some(v) => {
                    placed[v] = true;
                    order.push(v);
                }
                None => return Err(BayesError::Cyclic),
            }
        }
        Ok(order)
    }

    /// Converts `(variable, state)` pairs into an assignment. Pairs naming a
    /// variable outside the structure are skipped when `lenient`.
    pub fn assignment<'a>(
        &self,
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
        lenient: bool,
    ) -> Result<Assignment, BayesError> {
        let mut out = vec![None; self.variables.len()];
        for (name, state) in pairs {
            let Some(i) = self.index_of(name) else {
                if lenient {
                    continue;
                }
                return Err(BayesError::UnknownVariable(name.to_string()));
            };
            let s = self.variables[i]
                .state_index(state)
                .ok_or_else(|| BayesError::UnknownState {
                    variable: name.to_string(),
                    state: state.to_string(),
                })?;
            out[i] = Some(s);
        }
        Ok(out)
    }

    pub(crate) fn row_count(&self, var: usize) -> usize {
        self.parents[var]
            .iter()
            .map(|&p| self.variables[p].card())
            .product()
    }

    /// Row of `var`'s table selected by the parent states in `assignment`;
    /// the first parent is the most significant digit.
    pub(crate) fn row_index(&self, var: usize, assignment: &[usize]) -> usize {
        self.parents[var].iter().fold(0, |acc, &p| {
            acc * self.variables[p].card() + assignment[p]
        })
    }
}

pub const DEFAULT_STRUCTURE: &str = include_str!("../../data/structure.txt");

/// Conditional probability table for one variable.
///
/// `table` holds one row per parent assignment (first parent most
/// significant), each row a distribution over the child's states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cpt {
    pub child: String,
    pub parents: Vec<String>,
    pub table: Vec<f64>,
}

/// A discrete Bayesian network: structure plus one CPT per variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetFile", into = "NetFile")]
pub struct BayesNet {
    structure: Structure,
    tables: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct NetFile {
    variables: Vec<Variable>,
    cpts: Vec<Cpt>,
}

impl TryFrom<NetFile> for BayesNet {
    type Error = BayesError;

    fn try_from(file: NetFile) -> Result<Self, Self::Error> {
        let names: Vec<&str> = file.variables.iter().map(|v| v.name.as_str()).collect();
        if file.cpts.len() != names.len() {
            return Err(BayesError::InvalidStructure(
                "exactly one cpt per variable is required".into(),
            ));
        }
        let mut parents = vec![Vec::new(); names.len()];
        let mut tables = vec![Vec::new(); names.len()];
        let mut seen = vec![false; names.len()];
        for cpt in file.cpts {
            let child = names
                .iter()
                .position(|n| *n == cpt.child)
                .ok_or_else(|| BayesError::UnknownVariable(cpt.child.clone()))?;
            if seen[child] {
                return Err(BayesError::InvalidStructure(format!(
                    "variable {:?} has two cpts",
                    cpt.child
                )));
            }
            seen[child] = true;
            parents[child] = cpt
                .parents
                .iter()
                .map(|p| {
                    names
                        .iter()
                        .position(|n| n == p)
                        .ok_or_else(|| BayesError::UnknownVariable(p.clone()))
                })
                .collect::<Result<_, _>>()?;
            tables[child] = cpt.table;
        }
        BayesNet::new(Structure::new(file.variables, parents)?, tables)
    }
}

impl From<BayesNet> for NetFile {
    fn from(net: BayesNet) -> Self {
        let cpts = net.cpts();
        NetFile {
            variables: net.structure.variables,
            cpts,
        }
    }
}

/// Tolerance on each CPT row sum.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

impl BayesNet {
    pub fn new(structure: Structure, tables: Vec<Vec<f64>>) -> Result<Self, BayesError> {
        if tables.len() != structure.len() {
            return Err(BayesError::InvalidStructure(
                "exactly one cpt per variable is required".into(),
            ));
        }
        for (v, table) in tables.iter().enumerate() {
            let var = &structure.variables[v];
            let expected = structure.row_count(v) * var.card();
            if table.len() != expected {
                return Err(BayesError::InvalidCpt {
                    variable: var.name.clone(),
                    message: format!("expected {expected} entries, found {}", table.len()),
                });
            }
            for (r, row) in table.chunks(var.card()).enumerate() {
                if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                    return Err(BayesError::InvalidCpt {
                        variable: var.name.clone(),
                        message: format!("row {r} has a negative or non-finite entry"),
                    });
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                    return Err(BayesError::InvalidCpt {
                        variable: var.name.clone(),
                        message: format!("row {r} sums to {sum}"),
                    });
                }
            }
        }
        Ok(BayesNet { structure, tables })
    }

    /// Every row uniform.
    pub fn uniform(structure: Structure) -> Self {
        let tables = (0..structure.len())
            .map(|v| {
                let card = structure.variables[v].card();
                vec![1.0 / card as f64; structure.row_count(v) * card]
            })
            .collect();
        BayesNet { structure, tables }
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn variables(&self) -> &[Variable] {
        &self.structure.variables
    }

    pub fn table(&self, var: usize) -> &[f64] {
        &self.tables[var]
    }

    pub fn cpt(&self, name: &str) -> Result<Cpt, BayesError> {
        let (i, _) = self.structure.variable(name)?;
        Ok(self.cpt_at(i))
    }

    fn cpt_at(&self, i: usize) -> Cpt {
        let s = &self.structure;
        Cpt {
            child: s.variables[i].name.clone(),
            parents: s.parents[i].iter().map(|&p| s.variables[p].name.clone()).collect(),
            table: self.tables[i].clone(),
        }
    }

    pub fn cpts(&self) -> Vec<Cpt> {
        (0..self.structure.len()).map(|i| self.cpt_at(i)).collect()
    }

    /// P(var = state | parents as in `assignment`).
    pub(crate) fn entry(&self, var: usize, assignment: &[usize]) -> f64 {
        let card = self.structure.variables[var].card();
        self.tables[var][self.structure.row_index(var, assignment) * card + assignment[var]]
    }

    /// Product of the CPT entries selected by a complete assignment.
    pub fn joint_probability(&self, assignment: &Assignment) -> Result<f64, BayesError> {
        if assignment.len() != self.structure.len() {
            return Err(BayesError::IncompleteAssignment(format!(
                "assignment has {} slots for {} variables",
                assignment.len(),
                self.structure.len()
            )));
        }
        let mut full = Vec::with_capacity(assignment.len());
        for (i, a) in assignment.iter().enumerate() {
            let s = a.ok_or_else(|| {
                BayesError::IncompleteAssignment(self.structure.variables[i].name.clone())
            })?;
            if s >= self.structure.variables[i].card() {
                return Err(BayesError::UnknownState {
                    variable: self.structure.variables[i].name.clone(),
                    state: s.to_string(),
                });
            }
            full.push(s);
        }
        Ok((0..full.len()).map(|v| self.entry(v, &full)).product())
    }

    /// Named form of [`BayesNet::joint_probability`].
    pub fn joint_probability_named(&self, pairs: &[(&str, &str)]) -> Result<f64, BayesError> {
        let a = self.structure.assignment(pairs.iter().copied(), false)?;
        self.joint_probability(&a)
    }
}
