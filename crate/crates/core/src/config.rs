//! Experiment configuration and its flat `key = value` file format.

use std::path::{Path, PathBuf};

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::genotype::MaxDepths;
use crate::network::OutputActivation;
use crate::variation::VariationConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolutionConfig {
    pub population_size: usize,
    pub generations: usize,
    #[serde(flatten)]
    pub variation: VariationConfig,
    #[serde(serialize_with = "as_display")]
    pub max_depth: MaxDepths,
    pub train_fraction: f64,
    pub seed: u64,
    pub output_mode: OutputActivation,
    pub all_previous: bool,
    pub grammar: Option<PathBuf>,
    pub dataset: Option<String>,
}

fn as_display<S: Serializer>(value: &MaxDepths, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(value)
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            population_size: 100,
            generations: 500,
            variation: VariationConfig::default(),
            max_depth: MaxDepths::new().with("sigexpr", 6).with("sum", 3),
            train_fraction: 0.7,
            seed: 0,
            output_mode: OutputActivation::Sigmoid,
            all_previous: false,
            grammar: None,
            dataset: None,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

/// Fractions may be written `0.95` or `95%`.
fn parse_fraction(key: &str, value: &str) -> Result<f64> {
    match value.strip_suffix('%') {
        Some(pct) => Ok(parse_value::<f64>(key, pct.trim())? / 100.0),
        None => parse_value(key, value),
    }
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("`{key}`: expected true or false, got `{value}`"))),
    }
}

impl EvolutionConfig {
    /// Apply `key = value` lines on top of the current values. Blank lines
    /// and `#` comments are ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = EvolutionConfig::default();
        config.apply_text(&text)?;
        Ok(config)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "population_size" => self.population_size = parse_value(key, value)?,
            "generations" => self.generations = parse_value(key, value)?,
            "crossover_rate" => self.variation.crossover_rate = parse_fraction(key, value)?,
            "mutation_rate" => self.variation.mutation_rate = parse_fraction(key, value)?,
            "tournament_size" => self.variation.tournament_size = parse_value(key, value)?,
            "elite_size" => self.variation.elite_fraction = parse_fraction(key, value)?,
            "max_depth" => self.max_depth = value.parse().map_err(|e: Error| Error::Config(e.to_string()))?,
            "train_percentage" => self.train_fraction = parse_fraction(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "output_mode" => {
                self.output_mode = match value {
                    "sigmoid" => OutputActivation::Sigmoid,
                    "softmax" => OutputActivation::Softmax,
                    _ => return Err(Error::Config(format!("`output_mode`: expected sigmoid or softmax, got `{value}`"))),
                }
            }
            "all_previous" => self.all_previous = parse_bool(key, value)?,
            "grammar" => self.grammar = Some(PathBuf::from(value)),
            "dataset" => self.dataset = Some(value.to_string()),
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::Config("population_size must be at least 2".into()));
        }
        if self.generations == 0 {
            return Err(Error::Config("generations must be at least 1".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config("train_percentage must lie strictly between 0 and 1".into()));
        }
        self.variation.validate().map_err(|e| Error::Config(e.to_string()))
    }

    pub fn n_outputs(&self) -> usize {
        match self.output_mode {
            OutputActivation::Sigmoid => 1,
            OutputActivation::Softmax => 2,
        }
    }
}
