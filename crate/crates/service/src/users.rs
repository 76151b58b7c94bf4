use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use snbi_core::selector::UserContext;
use snbi_core::vocab;

use crate::error::{ApiError, ErrorCode};
use crate::ServiceError;

pub const USERS_FILE: &str = "users.jsonl";

/// Profile evidence sent once at registration. Weather and temperature
/// normally arrive with each fix; values given here are the fallback.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Profile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub locality: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub willingness: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purpose: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub walk_ability: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weather: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<String>,
}

fn check_state(variable: &str, state: &Option<String>) -> Result<(), ApiError> {
    let Some(s) = state else { return Ok(()) };
    let states = vocab::states_of(variable).expect("profile fields are built-in variables");
    if states.contains(&s.as_str()) {
        Ok(())
    } else {
        Err(ApiError::new(
            ErrorCode::InvalidState,
            format!("{s:?} is not a valid {variable}; expected one of {states:?}"),
        ))
    }
}

impl Profile {
    pub fn validate(&self) -> Result<(), ApiError> {
        check_state(vocab::LOCALITY, &self.locality)?;
        check_state(vocab::WILLINGNESS, &self.willingness)?;
        check_state(vocab::PURPOSE, &self.purpose)?;
        check_state(vocab::WALK_ABILITY, &self.walk_ability)?;
        check_state(vocab::WEATHER, &self.weather)?;
        check_state(vocab::TEMPERATURE, &self.temperature)?;
        for (name, v) in [(vocab::LOCALITY, &self.locality), (vocab::WILLINGNESS, &self.willingness)] {
            if v.is_none() {
                return Err(ApiError::new(ErrorCode::BadRequest, format!("{name} is required")));
            }
        }
        Ok(())
    }

    /// Full context for one poll, fix values taking precedence.
    pub fn context(
        &self,
        weather: Option<String>,
        temperature: Option<String>,
    ) -> Result<UserContext, ApiError> {
        check_state(vocab::WEATHER, &weather)?;
        check_state(vocab::TEMPERATURE, &temperature)?;
        let need = |name: &str, v: Option<String>| {
            v.ok_or_else(|| {
                ApiError::new(
                    ErrorCode::BadRequest,
                    format!("{name} missing from the fix and the profile"),
                )
            })
        };
        let ctx = UserContext {
            weather: need(vocab::WEATHER, weather.or_else(|| self.weather.clone()))?,
            temperature: need(vocab::TEMPERATURE, temperature.or_else(|| self.temperature.clone()))?,
            locality: need(vocab::LOCALITY, self.locality.clone())?,
            willingness: need(vocab::WILLINGNESS, self.willingness.clone())?,
            purpose: self.purpose.clone(),
            walk_ability: self.walk_ability.clone(),
        };
        ctx.validate()?;
        Ok(ctx)
    }
}

impl From<&UserContext> for Profile {
    fn from(c: &UserContext) -> Self {
        Profile {
            locality: Some(c.locality.clone()),
            willingness: Some(c.willingness.clone()),
            purpose: c.purpose.clone(),
            walk_ability: c.walk_ability.clone(),
            weather: Some(c.weather.clone()),
            temperature: Some(c.temperature.clone()),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct UserLine {
    id: String,
    profile: Profile,
}

/// Append-only profile table, journaled to `users.jsonl`.
pub struct UserBook {
    profiles: Vec<Profile>,
    journal: File,
    path: PathBuf,
}

impl UserBook {
    pub fn open(dir: &Path) -> Result<Self, ServiceError> {
        let path = dir.join(USERS_FILE);
        let mut profiles = Vec::new();
        match fs::read_to_string(&path) {
            Ok(text) => {
                for (i, line) in text.lines().enumerate() {
                    if line.trim().is_empty() {
                        continue;
                    }
                    let corrupt = |message: String| ServiceError::CorruptFile {
                        path: path.clone(),
                        line: i + 1,
                        message,
                    };
                    let u: UserLine = serde_json::from_str(line).map_err(|e| corrupt(e.to_string()))?;
                    if u.id != format!("u{}", profiles.len() + 1) {
                        return Err(corrupt(format!("unexpected id {:?}", u.id)));
                    }
                    profiles.push(u.profile);
                }
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(source) => return Err(ServiceError::Io { path, source }),
        }
        let journal = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|source| ServiceError::Io {
                path: path.clone(),
                source,
            })?;
        Ok(UserBook {
            profiles,
            journal,
            path,
        })
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Profile> {
        let n: usize = id.strip_prefix('u')?.parse().ok()?;
        self.profiles.get(n.checked_sub(1)?)
    }

    /// Stores a validated profile and returns its new id.
    pub fn add(&mut self, profile: Profile) -> Result<String, ApiError> {
        let id = format!("u{}", self.profiles.len() + 1);
        let line = serde_json::to_string(&UserLine {
            id: id.clone(),
            profile: profile.clone(),
        })
        .expect("profile serializes");
        writeln!(self.journal, "{line}").map_err(|e| {
            ApiError::new(ErrorCode::Internal, format!("{}: {e}", self.path.display()))
        })?;
        self.profiles.push(profile);
        Ok(id)
    }
}
