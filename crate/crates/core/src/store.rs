//! The content table and the trace log.
//!
//! Both tables persist as UTF-8 JSON lines, one record per line:
//! `contents.jsonl` and `traces.jsonl` inside a data directory. A store
//! opened with [`Store::open`] appends every accepted mutation to those files
//! as it happens; [`Store::save`] rewrites them from memory.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{haversine_distance, initial_bearing, GeoPoint, GridIndex};
use crate::vocab::{Category, Kind};

pub const CONTENTS_FILE: &str = "contents.jsonl";
pub const TRACES_FILE: &str = "traces.jsonl";

/// Displacement below which a walker is treated as standing still.
pub const DEFAULT_STATIONARY_THRESHOLD_M: f64 = 3.0;

pub const MINUTES_PER_DAY: u16 = 1440;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("invalid content record: {0}")]
    Validation(String),
    #[error("content id {0:?} already exists")]
    DuplicateId(String),
    #[error("fix for user {user:?} at {got} precedes the last fix at {last}")]
    OutOfOrderFix { user: String, last: i64, got: i64 },
    #[error("{}:{line}: {message}", path.display())]
    CorruptFile {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

/// Daily recurring local-time interval `[start, end)` in minutes from
/// midnight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start: u16,
    pub end: u16,
}

impl TimeWindow {
    pub fn new(start: u16, end: u16) -> Result<Self, StoreError> {
        let w = TimeWindow { start, end };
        w.validate()?;
        Ok(w)
    }

    fn validate(&self) -> Result<(), StoreError> {
        if self.start >= self.end || self.end > MINUTES_PER_DAY {
            return Err(StoreError::Validation(format!(
                "time window [{}, {}) must satisfy 0 <= start < end <= 1440",
                self.start, self.end
            )));
        }
        Ok(())
    }

    pub fn contains(&self, minute: u16) -> bool {
        self.start <= minute && minute < self.end
    }
}

/// One row of the content table: a barrier or a useful spot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentRecord {
    pub id: String,
    pub kind: Kind,
    pub category: Category,
    /// Class drawn from the barrier vocabulary or the useful vocabulary,
    /// depending on `kind`.
    pub barrier_class: String,
    pub title: String,
    pub comment: String,
    pub tags: Vec<String>,
    pub photo_ref: String,
    pub time_window: Option<TimeWindow>,
    pub location: GeoPoint,
    pub submitter: String,
    pub created_at: i64,
}

impl ContentRecord {
    pub fn validate(&self) -> Result<(), StoreError> {
        if self.id.is_empty() {
            return Err(StoreError::Validation("id must not be empty".into()));
        }
        if !self.kind.classes().contains(&self.barrier_class.as_str()) {
            return Err(StoreError::Validation(format!(
                "unknown {} class {:?}",
                match self.kind {
                    Kind::Barrier => "barrier",
                    Kind::Useful => "useful",
                },
                self.barrier_class
            )));
        }
        if let Some(w) = &self.time_window {
            w.validate()?;
        }
        Ok(())
    }

    /// True when the record has no window or its window contains `minute`.
    pub fn is_active_at(&self, minute: u16) -> bool {
        self.time_window.is_none_or(|w| w.contains(minute))
    }
}

/// A timestamped position report from a walker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fix {
    pub user_id: String,
    pub point: GeoPoint,
    /// UTC seconds.
    pub at: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadingEstimate {
    /// Degrees in `[0, 360)`; absent until the walker first moves at least
    /// the stationary threshold between two fixes.
    pub heading: Option<f64>,
    /// Meters per second between the previous fix and this one.
    pub speed: f64,
    /// The pair of fixes the heading was computed from.
    pub from_fix: Option<Fix>,
    pub to_fix: Option<Fix>,
}

impl HeadingEstimate {
    fn absent() -> Self {
        HeadingEstimate {
            heading: None,
            speed: 0.0,
            from_fix: None,
            to_fix: None,
        }
    }
}

#[derive(Debug, Clone)]
struct Track {
    last: Fix,
    estimate: HeadingEstimate,
}

struct Journal {
    contents: File,
    traces: File,
    dir: PathBuf,
}

pub struct Store {
    contents: IndexMap<String, ContentRecord>,
    index: GridIndex<String>,
    traces: Vec<Fix>,
    tracks: HashMap<String, Track>,
    stationary_threshold: f64,
    journal: Option<Journal>,
}

impl Default for Store {
    fn default() -> Self {
        Store::new(DEFAULT_STATIONARY_THRESHOLD_M)
    }
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store")
            .field("contents", &self.contents.len())
            .field("traces", &self.traces.len())
            .field("persistent", &self.journal.is_some())
            .finish()
    }
}

impl Store {
    pub fn new(stationary_threshold: f64) -> Self {
        Store {
            contents: IndexMap::new(),
            index: GridIndex::default(),
            traces: Vec::new(),
            tracks: HashMap::new(),
            stationary_threshold,
            journal: None,
        }
    }

    /// Loads `dir` and keeps appending subsequent mutations to its files.
    pub fn open(dir: &Path, stationary_threshold: f64) -> Result<Self, StoreError> {
        let mut store = Store::load(dir, stationary_threshold)?;
        fs::create_dir_all(dir).map_err(|source| StoreError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let append = |name: &str| {
            let path = dir.join(name);
            OpenOptions::new()
                .create(true)
                .append(true)
                .open(&path)
                .map_err(|source| StoreError::Io { path, source })
        };
        store.journal = Some(Journal {
            contents: append(CONTENTS_FILE)?,
            traces: append(TRACES_FILE)?,
            dir: dir.to_path_buf(),
        });
        Ok(store)
    }

    pub fn stationary_threshold(&self) -> f64 {
        self.stationary_threshold
    }

    pub fn put_content(&mut self, record: ContentRecord) -> Result<String, StoreError> {
        record.validate()?;
        if self.contents.contains_key(&record.id) {
            return Err(StoreError::DuplicateId(record.id));
        }
        if let Some(j) = &mut self.journal {
            let path = j.dir.join(CONTENTS_FILE);
            append_line(&mut j.contents, &record, &path)?;
        }
        let id = record.id.clone();
        self.index.insert(id.clone(), record.location);
        self.contents.insert(id.clone(), record);
        Ok(id)
    }

    pub fn get(&self, id: &str) -> Option<&ContentRecord> {
        self.contents.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.contents.contains_key(id)
    }

    /// All records in insertion order.
    pub fn contents(&self) -> impl Iterator<Item = &ContentRecord> {
        self.contents.values()
    }

    pub fn len(&self) -> usize {
        self.contents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contents.is_empty()
    }

    /// Records whose daily window is absent or contains `minute`.
    pub fn active_contents(&self, minute: u16) -> Vec<&ContentRecord> {
        self.contents.values().filter(|c| c.is_active_at(minute)).collect()
    }

    /// Records within `radius` meters of `center`, nearest first; ties by id.
    pub fn near(&self, center: GeoPoint, radius: f64) -> Vec<(&ContentRecord, f64)> {
        let mut hits: Vec<_> = self
            .index
            .within(center, radius)
            .map(|(id, _, d)| (&self.contents[id.as_str()], d))
            .collect();
        hits.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.id.cmp(&b.0.id)));
        hits
    }

    /// Appends `fix` to the trace log and returns the walker's heading.
    pub fn append_fix(&mut self, fix: Fix) -> Result<HeadingEstimate, StoreError> {
        let estimate = self.next_estimate(&fix)?;
        if let Some(j) = &mut self.journal {
            let path = j.dir.join(TRACES_FILE);
            append_line(&mut j.traces, &fix, &path)?;
        }
        self.tracks.insert(
            fix.user_id.clone(),
            Track {
                last: fix.clone(),
                estimate: estimate.clone(),
            },
        );
        self.traces.push(fix);
        Ok(estimate)
    }

    fn next_estimate(&self, fix: &Fix) -> Result<HeadingEstimate, StoreError> {
        let Some(track) = self.tracks.get(&fix.user_id) else {
            return Ok(HeadingEstimate::absent());
        };
        let prev = &track.last;
        if fix.at < prev.at {
            return Err(StoreError::OutOfOrderFix {
                user: fix.user_id.clone(),
                last: prev.at,
                got: fix.at,
            });
        }
        let displacement = haversine_distance(prev.point, fix.point);
        let dt = (fix.at - prev.at) as f64;
        let speed = if dt > 0.0 { displacement / dt } else { 0.0 };
        if displacement >= self.stationary_threshold {
            if let Ok(heading) = initial_bearing(prev.point, fix.point) {
                return Ok(HeadingEstimate {
                    heading: Some(heading),
                    speed,
                    from_fix: Some(prev.clone()),
                    to_fix: Some(fix.clone()),
                });
            }
        }
        Ok(HeadingEstimate {
            speed,
            ..track.estimate.clone()
        })
    }

    /// Most recent heading estimate for a user, if any fix was seen.
    pub fn heading_of(&self, user_id: &str) -> Option<&HeadingEstimate> {
        self.tracks.get(user_id).map(|t| &t.estimate)
    }

    /// The full trace log in append order.
    pub fn traces(&self) -> &[Fix] {
        &self.traces
    }

    pub fn trace_of<'a>(&'a self, user_id: &'a str) -> impl Iterator<Item = &'a Fix> + 'a {
        self.traces.iter().filter(move |f| f.user_id == user_id)
    }

    /// Writes both tables into `dir`, replacing existing files.
    pub fn save(&self, dir: &Path) -> Result<(), StoreError> {
        fs::create_dir_all(dir).map_err(|source| StoreError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        write_lines(&dir.join(CONTENTS_FILE), self.contents.values())?;
        write_lines(&dir.join(TRACES_FILE), self.traces.iter())?;
        Ok(())
    }

    /// Reads both tables from `dir`. Missing files are empty tables.
    pub fn load(dir: &Path, stationary_threshold: f64) -> Result<Self, StoreError> {
        let mut store = Store::new(stationary_threshold);
        let path = dir.join(CONTENTS_FILE);
        for (line, record) in read_lines::<ContentRecord>(&path)? {
            store.put_content(record).map_err(|e| StoreError::CorruptFile {
                path: path.clone(),
                line,
                message: e.to_string(),
            })?;
        }
        let path = dir.join(TRACES_FILE);
        for (line, fix) in read_lines::<Fix>(&path)? {
            store.append_fix(fix).map_err(|e| StoreError::CorruptFile {
                path: path.clone(),
                line,
                message: e.to_string(),
            })?;
        }
        Ok(store)
    }
}

fn append_line<T: Serialize>(file: &mut File, value: &T, path: &Path) -> Result<(), StoreError> {
    let mut line = serde_json::to_string(value).expect("records serialize");
    line.push('\n');
    file.write_all(line.as_bytes())
        .and_then(|_| file.flush())
        .map_err(|source| StoreError::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn write_lines<'a, T: Serialize + 'a>(
    path: &Path,
    values: impl Iterator<Item = &'a T>,
) -> Result<(), StoreError> {
    let io_err = |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    for v in values {
        serde_json::to_writer(&mut out, v).expect("records serialize");
        out.write_all(b"\n").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

fn read_lines<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>, StoreError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(source) => {
            return Err(StoreError::Io {
                path: path.to_path_buf(),
                source,
            })
        }
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| StoreError::CorruptFile {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| StoreError::CorruptFile {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        out.push((line_no, value));
    }
    Ok(out)
}
