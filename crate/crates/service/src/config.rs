//! Flat `key = value` service configuration.
//!
//! ```text
//! # phonecam.conf
//! prefix = astro_
//! poll_interval = 10
//! inbox_path = /srv/phonecam/inbox
//! publish_path = /srv/phonecam/published
//! http_bind = 0.0.0.0:8080
//! suppress_radius = 20
//! marker_color = 160,32,240
//! ```

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use phonecam_core::{AnalysisConfig, MarkerStyle};

use crate::error::ServiceError;

/// Environment variable naming the config file.
pub const CONFIG_ENV: &str = "PHONECAM_CONFIG";
pub const DEFAULT_CONFIG_FILE: &str = "phonecam.conf";

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    /// Case-sensitive filename prefix that admits an image.
    pub prefix: String,
    pub poll_interval: Duration,
    pub inbox_path: PathBuf,
    pub publish_path: PathBuf,
    pub http_bind: SocketAddr,
    /// Optional directory of static console files served under `/console/`.
    pub console_path: Option<PathBuf>,
    pub analysis: AnalysisConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            prefix: "astro_".into(),
            poll_interval: Duration::from_secs(10),
            inbox_path: PathBuf::from("inbox"),
            publish_path: PathBuf::from("published"),
            http_bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            console_path: None,
            analysis: AnalysisConfig::default(),
        }
    }
}

impl ServiceConfig {
    /// Parses config text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self, ServiceError> {
        let mut config = Self::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ServiceError::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            config
                .set(key.trim(), value.trim())
                .map_err(|e| ServiceError::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self, ServiceError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Loads config from, in order: `explicit`, `$PHONECAM_CONFIG`, then
    /// `./phonecam.conf` if present. Falls back to defaults.
    pub fn load(explicit: Option<&Path>) -> Result<Self, ServiceError> {
        if let Some(path) = explicit {
            return Self::from_file(path);
        }
        if let Some(path) = std::env::var_os(CONFIG_ENV) {
            return Self::from_file(Path::new(&path));
        }
        let default = Path::new(DEFAULT_CONFIG_FILE);
        if default.is_file() {
            return Self::from_file(default);
        }
        Ok(Self::default())
    }

    /// Applies one setting; used by the file parser and CLI overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let analysis = &mut self.analysis;
        match key {
            "prefix" => self.prefix = value.to_string(),
            "poll_interval" => {
                let secs: f64 = parse(key, value)?;
                if !secs.is_finite() || secs < 0.0 {
                    return Err(format!("poll_interval must be a non-negative number, got {value}"));
                }
                self.poll_interval = Duration::from_secs_f64(secs);
            }
            "inbox_path" => self.inbox_path = PathBuf::from(value),
            "publish_path" => self.publish_path = PathBuf::from(value),
            "http_bind" => self.http_bind = parse(key, value)?,
            "console_path" => {
                self.console_path = (!value.is_empty()).then(|| PathBuf::from(value));
            }
            "bin_count" => analysis.bin_count = parse(key, value)?,
            "s_min" => analysis.s_min = parse(key, value)?,
            "smooth_radius" => analysis.smooth_radius = parse(key, value)?,
            "suppress_radius" => analysis.suppress_radius = parse(key, value)?,
            "k" => analysis.k = parse(key, value)?,
            "box_color" => analysis.style.box_color = parse_color(value)?,
            "marker_color" => analysis.style.marker_color = parse_color(value)?,
            "box_thickness" => analysis.style.box_thickness = parse(key, value)?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        if self.prefix.is_empty() {
            return Err(ServiceError::Config("prefix must not be empty".into()));
        }
        if self.poll_interval < Duration::from_secs(1) {
            return Err(ServiceError::Config("poll_interval must be at least 1 s".into()));
        }
        self.analysis
            .validate()
            .map_err(|e| ServiceError::Config(e.to_string()))
    }

    /// Whether `filename` is admitted by the prefix filter.
    pub fn accepts(&self, filename: &str) -> bool {
        filename.starts_with(&self.prefix)
    }

    pub fn style(&self) -> &MarkerStyle {
        &self.analysis.style
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| format!("invalid value `{value}` for {key}: {e}"))
}

/// Parses `r,g,b` or `#rrggbb`.
pub fn parse_color(value: &str) -> Result<[u8; 3], String> {
    if let Some(hex) = value.strip_prefix('#') {
        if hex.len() == 6 {
            if let Ok(v) = u32::from_str_radix(hex, 16) {
                return Ok([(v >> 16) as u8, (v >> 8) as u8, v as u8]);
            }
        }
        return Err(format!("invalid colour `{value}`"));
    }
    let parts: Vec<_> = value.split(',').map(|p| p.trim().parse::<u8>()).collect();
    match parts.as_slice() {
        [Ok(r), Ok(g), Ok(b)] => Ok([*r, *g, *b]),
        _ => Err(format!("invalid colour `{value}`, expected r,g,b")),
    }
}
