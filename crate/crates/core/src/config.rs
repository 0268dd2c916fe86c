//! Plain-text experiment configs.
//!
//! A config is a list of `key = value` lines; list values are
//! comma-separated. `#` starts a comment. Several configs can share one file,
//! separated by lines holding only `---`.
//!
//! ```text
//! label = query000
//! model = pbm
//! algorithm = batchrank
//! alpha = 0.9, 0.85, 0.8
//! chi = 1, 0.5
//! k = 2
//! horizon = 1000000
//! seeds = 1, 2, 3
//! window = 100000
//! ```
//!
//! `k` may be omitted when `chi` is given. `label` defaults to `run` and
//! `window` to 100000.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::click_models::ModelKind;
use crate::error::{Error, Result};
use crate::harness::{Algorithm, ExperimentConfig, DEFAULT_WINDOW};

const KEYS: [&str; 9] = [
    "label",
    "model",
    "algorithm",
    "alpha",
    "chi",
    "k",
    "horizon",
    "seeds",
    "window",
];

fn line_error(line: usize, message: impl Into<String>) -> Error {
    Error::ConfigLine {
        line,
        message: message.into(),
    }
}

struct Document {
    start: usize,
    end: usize,
    // key -> (line, value)
    entries: HashMap<&'static str, (usize, String)>,
}

impl Document {
    fn scalar<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        let Some((line, raw)) = self.entries.get(key) else {
            return Ok(None);
        };
        raw.parse()
            .map(Some)
            .map_err(|_| line_error(*line, format!("invalid value `{raw}` for `{key}`")))
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        let Some((line, raw)) = self.entries.get(key) else {
            return Ok(None);
        };
        raw.split(',')
            .map(|part| {
                let part = part.trim();
                part.parse().map_err(|_| {
                    line_error(*line, format!("invalid list entry `{part}` for `{key}`"))
                })
            })
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    fn required<T>(&self, key: &str, value: Option<T>) -> Result<T> {
        value.ok_or_else(|| {
            line_error(
                self.start,
                format!(
                    "missing `{key}` in the config spanning lines {}-{}",
                    self.start, self.end
                ),
            )
        })
    }

    fn into_config(self) -> Result<ExperimentConfig> {
        let model: ModelKind = self.required("model", self.scalar("model")?)?;
        let algorithm: Algorithm = self.required("algorithm", self.scalar("algorithm")?)?;
        let alpha: Vec<f64> = self.required("alpha", self.list("alpha")?)?;
        let chi: Vec<f64> = self.list("chi")?.unwrap_or_default();
        let positions = match self.scalar::<usize>("k")? {
            Some(k) => k,
            None if !chi.is_empty() => chi.len(),
            None => return Err(line_error(self.start, "missing `k`")),
        };
        let config = ExperimentConfig {
            label: self.scalar("label")?.unwrap_or_else(|| "run".to_string()),
            model,
            alpha,
            chi,
            positions,
            horizon: self.required("horizon", self.scalar("horizon")?)?,
            algorithm,
            seeds: self.required("seeds", self.list("seeds")?)?,
            window: self.scalar("window")?.unwrap_or(DEFAULT_WINDOW),
        };
        config
            .validate()
            .map_err(|e| line_error(self.start, e.to_string()))?;
        Ok(config)
    }
}

/// Parses every config in `text`.
pub fn parse_configs(text: &str) -> Result<Vec<ExperimentConfig>> {
    let mut configs = Vec::new();
    let mut doc: Option<Document> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line == "---" {
            if let Some(d) = doc.take() {
                configs.push(d.into_config()?);
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| line_error(line_no, format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim().to_ascii_lowercase();
        let key = KEYS
            .iter()
            .copied()
            .find(|&k| k == key)
            .ok_or_else(|| line_error(line_no, format!("unknown key `{key}`")))?;
        let d = doc.get_or_insert_with(|| Document {
            start: line_no,
            end: line_no,
            entries: HashMap::new(),
        });
        d.end = line_no;
        if d.entries
            .insert(key, (line_no, value.trim().to_string()))
            .is_some()
        {
            return Err(line_error(line_no, format!("duplicate key `{key}`")));
        }
    }
    if let Some(d) = doc.take() {
        configs.push(d.into_config()?);
    }
    if configs.is_empty() {
        return Err(Error::Config("no config found".into()));
    }
    Ok(configs)
}

/// Parses a file holding exactly one config.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut configs = parse_configs(text)?;
    if configs.len() != 1 {
        return Err(Error::Config(format!(
            "expected one config, found {}",
            configs.len()
        )));
    }
    Ok(configs.remove(0))
}

fn join<T: ToString>(values: &[T]) -> String {
    values
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

/// Serializes a config; [`parse_config`] reads it back unchanged.
pub fn to_text(config: &ExperimentConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "label = {}", config.label);
    let _ = writeln!(s, "model = {}", config.model);
    let _ = writeln!(s, "algorithm = {}", config.algorithm);
    let _ = writeln!(s, "alpha = {}", join(&config.alpha));
    if !config.chi.is_empty() {
        let _ = writeln!(s, "chi = {}", join(&config.chi));
    }
    let _ = writeln!(s, "k = {}", config.positions);
    let _ = writeln!(s, "horizon = {}", config.horizon);
    let _ = writeln!(s, "seeds = {}", join(&config.seeds));
    let _ = writeln!(s, "window = {}", config.window);
    s
}

/// Serializes several configs into one `---`-separated document.
pub fn configs_to_text(configs: &[ExperimentConfig]) -> String {
    configs
        .iter()
        .map(to_text)
        .collect::<Vec<_>>()
        .join("---\n")
}
