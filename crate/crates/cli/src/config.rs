//! Effective configuration: flags over environment over the TOML file over
//! built-in defaults. Clap already folds the environment into the flag
//! values, so only the file layer is merged here.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use snbi_core::selector::SelectorConfig;
use snbi_service::{ServiceConfig, DEFAULT_MAX_NEAR_RADIUS_M};

use crate::CliError;

pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_HOST: &str = "127.0.0.1";
pub const DEFAULT_DATA_DIR: &str = "snbi-data";

#[derive(Debug, Clone, Default, Args)]
pub struct SelectorArgs {
    /// Notification radius in meters [default: 50]
    #[arg(long, env = "SNBI_RADIUS_M", global = true)]
    pub radius_m: Option<f64>,
    /// Half-angle of the forward sector in degrees [default: 50]
    #[arg(long, env = "SNBI_SECTOR_HALF_ANGLE_DEG", global = true)]
    pub sector_half_angle_deg: Option<f64>,
    /// Minutes before the same content is alerted again [default: 30]
    #[arg(long, env = "SNBI_COOLDOWN_MIN", global = true)]
    pub cooldown_min: Option<f64>,
    /// Distance under which content counts as at the walker, meters [default: 10]
    #[arg(long, env = "SNBI_SAME_THRESHOLD_M", global = true)]
    pub same_threshold_m: Option<f64>,
    /// Displacement under which the previous heading is kept, meters [default: 3]
    #[arg(long, env = "SNBI_STATIONARY_THRESHOLD_M", global = true)]
    pub stationary_threshold_m: Option<f64>,
    /// Client polling period in seconds [default: 150]
    #[arg(long, env = "SNBI_POLL_INTERVAL_S", global = true)]
    pub poll_interval_s: Option<f64>,
    /// Local clock offset from UTC in minutes, for content time windows [default: 0]
    #[arg(long, env = "SNBI_UTC_OFFSET_MIN", global = true, allow_hyphen_values = true)]
    pub utc_offset_min: Option<i32>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// TOML config file
    #[arg(long, env = "SNBI_CONFIG", global = true)]
    pub config: Option<PathBuf>,
    /// Data directory holding contents, traces, users and the model [default: snbi-data]
    #[arg(long, env = "SNBI_DATA_DIR", global = true)]
    pub data_dir: Option<PathBuf>,
    /// Laplace pseudo-count for training and evaluation [default: 1]
    #[arg(long, env = "SNBI_ALPHA", global = true)]
    pub alpha: Option<f64>,
    /// Largest radius accepted by the nearby-content query, meters [default: 2000]
    #[arg(long, env = "SNBI_MAX_NEAR_RADIUS_M", global = true)]
    pub max_near_radius_m: Option<f64>,
    #[command(flatten)]
    pub selector: SelectorArgs,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    data_dir: Option<PathBuf>,
    host: Option<String>,
    port: Option<u16>,
    alpha: Option<f64>,
    max_near_radius_m: Option<f64>,
    selector: Option<SelectorConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliConfig {
    pub data_dir: PathBuf,
    pub host: String,
    pub port: u16,
    pub alpha: f64,
    pub max_near_radius_m: f64,
    pub selector: SelectorConfig,
}

fn read_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::runtime("io", format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

impl CliConfig {
    pub fn resolve(args: &GlobalArgs, host: Option<String>, port: Option<u16>) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(p) => read_file(p)?,
            None => FileConfig::default(),
        };
        let mut selector = file.selector.unwrap_or_default();
        let s = &args.selector;
        macro_rules! take {
            ($($f:ident),*) => { $(if let Some(v) = s.$f { selector.$f = v; })* };
        }
        take!(
            radius_m,
            sector_half_angle_deg,
            cooldown_min,
            same_threshold_m,
            stationary_threshold_m,
            poll_interval_s,
            utc_offset_min
        );
        let cfg = CliConfig {
            data_dir: args
                .data_dir
                .clone()
                .or(file.data_dir)
                .unwrap_or_else(|| DEFAULT_DATA_DIR.into()),
            host: host.or(file.host).unwrap_or_else(|| DEFAULT_HOST.into()),
            port: port.or(file.port).unwrap_or(DEFAULT_PORT),
            alpha: args.alpha.or(file.alpha).unwrap_or(1.0),
            max_near_radius_m: args
                .max_near_radius_m
                .or(file.max_near_radius_m)
                .unwrap_or(DEFAULT_MAX_NEAR_RADIUS_M),
            selector,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        self.selector
            .validate()
            .map_err(|e| CliError::usage(e.to_string()))?;
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(CliError::usage("alpha must be non-negative"));
        }
        if !(self.max_near_radius_m > 0.0 && self.max_near_radius_m.is_finite()) {
            return Err(CliError::usage("max_near_radius_m must be positive"));
        }
        Ok(())
    }

    pub fn service(&self) -> ServiceConfig {
        ServiceConfig {
            data_dir: self.data_dir.clone(),
            selector: self.selector.clone(),
            max_near_radius_m: self.max_near_radius_m,
            alpha: self.alpha,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "config": self }).to_string()
    }
}
