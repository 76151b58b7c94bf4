//! Parameter learning from complete or partially observed records.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::net::{Assignment, BayesNet, Structure};
use super::BayesError;
use crate::vocab;

/// One labelled observation: environment, profile, barrier and the reaction
/// the walker chose.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReactionRecord {
    pub weather: String,
    pub temperature: String,
    pub locality: String,
    pub willingness: String,
    pub barrier: String,
    pub reaction: String,
}

pub const DATASET_COLUMNS: [&str; 6] = [
    vocab::WEATHER,
    vocab::TEMPERATURE,
    vocab::LOCALITY,
    vocab::WILLINGNESS,
    vocab::BARRIER,
    vocab::REACTION,
];

impl ReactionRecord {
    /// `(variable, state)` pairs for every feature column, reaction excluded.
    pub fn features(&self) -> [(&str, &str); 5] {
        [
            (vocab::WEATHER, self.weather.as_str()),
            (vocab::TEMPERATURE, self.temperature.as_str()),
            (vocab::LOCALITY, self.locality.as_str()),
            (vocab::WILLINGNESS, self.willingness.as_str()),
            (vocab::BARRIER, self.barrier.as_str()),
        ]
    }

    pub fn pairs(&self) -> [(&str, &str); 6] {
        let [a, b, c, d, e] = self.features();
        [a, b, c, d, e, (vocab::REACTION, self.reaction.as_str())]
    }

    /// Checks every field against the built-in vocabularies.
    pub fn validate(&self) -> Result<(), BayesError> {
        for (var, state) in self.pairs() {
            let states = vocab::states_of(var).expect("dataset columns are built-in");
            if !states.contains(&state) {
                return Err(BayesError::UnknownState {
                    variable: var.to_string(),
                    state: state.to_string(),
                });
            }
        }
        Ok(())
    }
}

/// Laplace-smoothed maximum likelihood:
/// `P(child = s | parents = r) = (count(r, s) + alpha) / (count(r) + alpha * |states|)`.
///
/// A record contributes to a variable's table only when the variable and all
/// of its parents are observed in it. Rows with no data under `alpha = 0`
/// fall back to uniform.
pub fn learn_parameters(
    structure: &Structure,
    data: &[Assignment],
    alpha: f64,
) -> Result<BayesNet, BayesError> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(BayesError::InvalidAlpha(alpha));
    }
    let n = structure.len();
    let mut counts: Vec<Vec<f64>> = (0..n)
        .map(|v| vec![0.0; structure.row_count(v) * structure.variables()[v].card()])
        .collect();
    let mut full = vec![0usize; n];
    for row in data {
        if row.len() != n {
            return Err(BayesError::IncompleteAssignment(format!(
                "record has {} slots for {} variables",
                row.len(),
                n
            )));
        }
        for v in 0..n {
            full[v] = row[v].unwrap_or(0);
        }
        for v in 0..n {
            if row[v].is_none() || structure.parents(v).iter().any(|&p| row[p].is_none()) {
                continue;
            }
            let card = structure.variables()[v].card();
            counts[v][structure.row_index(v, &full) * card + full[v]] += 1.0;
        }
    }
    let tables = counts
        .into_iter()
        .enumerate()
        .map(|(v, c)| {
            let card = structure.variables()[v].card();
            c.chunks(card)
                .flat_map(|row| {
                    let total: f64 = row.iter().sum();
                    let denom = total + alpha * card as f64;
                    row.iter()
                        .map(move |&x| {
                            if denom > 0.0 {
                                (x + alpha) / denom
                            } else {
                                1.0 / card as f64
                            }
                        })
                        .collect::<Vec<_>>()
                })
                .collect()
        })
        .collect();
    BayesNet::new(structure.clone(), tables)
}

/// Learns from labelled records. Columns absent from the structure are
/// ignored; structure variables absent from the records stay unobserved.
pub fn learn_from_records(
    structure: &Structure,
    records: &[ReactionRecord],
    alpha: f64,
) -> Result<BayesNet, BayesError> {
    let data = records
        .iter()
        .map(|r| structure.assignment(r.pairs(), true))
        .collect::<Result<Vec<_>, _>>()?;
    learn_parameters(structure, &data, alpha)
}

/// Reads the delimited dataset format: a header naming the six columns, one
/// record per row.
pub fn read_dataset<R: Read>(reader: R) -> Result<Vec<ReactionRecord>, BayesError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| dataset_error(1, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != DATASET_COLUMNS {
        return Err(BayesError::Dataset {
            line: 1,
            message: format!("expected header {}", DATASET_COLUMNS.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<ReactionRecord>().enumerate() {
        let line = i + 2;
        let record = row.map_err(|e| dataset_error(line, e))?;
        record.validate().map_err(|e| BayesError::Dataset {
            line,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

fn dataset_error(line: usize, e: csv::Error) -> BayesError {
    let line = e.position().map_or(line, |p| p.line() as usize);
    BayesError::Dataset {
        line,
        message: e.to_string(),
    }
}

pub fn write_dataset<W: Write>(writer: W, records: &[ReactionRecord]) -> Result<(), BayesError> {
    let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(writer);
    for r in records {
        w.serialize(r).map_err(|e| dataset_error(0, e))?;
    }
    if records.is_empty() {
        w.write_record(DATASET_COLUMNS).map_err(|e| dataset_error(0, e))?;
    }
    w.flush().map_err(|e| BayesError::Io(e.to_string()))
}

pub fn load_dataset(path: &Path) -> Result<Vec<ReactionRecord>, BayesError> {
    let file = std::fs::File::open(path).map_err(|e| BayesError::Io(format!("{}: {e}", path.display())))?;
    read_dataset(file)
}

pub fn save_dataset(path: &Path, records: &[ReactionRecord]) -> Result<(), BayesError> {
    let file = std::fs::File::create(path).map_err(|e| BayesError::Io(format!("{}: {e}", path.display())))?;
    write_dataset(std::io::BufWriter::new(file), records)
}
