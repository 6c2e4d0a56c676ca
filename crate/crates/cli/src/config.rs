//! Flat `key = value` configuration files.
//!
//! One assignment per line; `#` starts a comment. Omitted keys keep their
//! defaults, unknown keys are rejected. Lists are comma separated.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;
use xlra_core::analytics::CrossTerm;
use xlra_core::{Protocol, ScenarioConfig};

/// Errors raised while reading a configuration.
#[derive(Debug, Error)]
pub enum ConfigError {
    /// The file could not be read.
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    /// A line is not of the form `key = value`.
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },

    /// The key is not a known parameter.
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    /// The value does not parse as the key's type.
    #[error("line {line}: cannot parse `{value}` for `{key}`")]
    BadValue { line: usize, key: String, value: String },

    /// A parsed value violates a documented bound.
    #[error(transparent)]
    Invalid(#[from] xlra_core::Error),

    /// A sweep parameter violates its bound.
    #[error("invalid sweep: {0}")]
    Sweep(String),
}

/// Output encoding of result tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    #[value(name = "json-lines")]
    JsonLines,
}

impl Format {
    pub fn as_str(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::JsonLines => "json-lines",
        }
    }
}

impl FromStr for Format {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "csv" => Ok(Format::Csv),
            "json-lines" => Ok(Format::JsonLines),
            _ => Err(()),
        }
    }
}

/// Campaign grid of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub protocols: Vec<Protocol>,
    pub k_values: Vec<usize>,
    pub seeds: Vec<u64>,
    pub n_blocks: usize,
    pub warmup: usize,
    /// Result file; standard output when absent.
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            protocols: Protocol::ALL.to_vec(),
            k_values: vec![500, 1000, 1500, 2000, 2500, 3000, 3500, 4000],
            seeds: vec![1],
            n_blocks: 10_000,
            warmup: 100,
            output: None,
            format: Format::Csv,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Sweep(m.into()));
        if self.protocols.is_empty() {
            return bad("protocols must not be empty");
        }
        if self.k_values.is_empty() || self.k_values.contains(&0) {
            return bad("k_values must be a non-empty list of positive integers");
        }
        if self.seeds.is_empty() {
            return bad("seeds must not be empty");
        }
        Ok(())
    }
}

/// Everything a configuration file can set.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub sweep: SweepSpec,
}

fn cross_term_name(c: CrossTerm) -> &'static str {
    match c {
        CrossTerm::Gain => "unit-norm",
        CrossTerm::GainOverAlpha => "over-alpha",
    }
}

fn list<T: FromStr>(v: &str) -> Option<Vec<T>> {
    v.split(',').map(|s| s.trim().parse().ok()).collect()
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    fn set(&mut self, key: &str, value: &str) -> Result<(), Option<()>> {
        fn p<T: FromStr>(v: &str) -> Result<T, Option<()>> {
            v.parse().map_err(|_| Some(()))
        }
        let s = &mut self.scenario;
        let w = &mut self.sweep;
        match key {
            "r_i" => s.r_i = p(value)?,
            "r_e" => s.r_e = p(value)?,
            "M" => s.antennas = p(value)?,
            "B" => s.subarrays = p(value)?,
            "array_length" => s.array_length = p(value)?,
            "P_b" => s.p_visible = p(value)?,
            "P_a" => s.p_access = p(value)?,
            "tau_ra" => s.tau_ra = p(value)?,
            "kappa" => s.kappa = p(value)?,
            "g_db" => s.g_db = p(value)?,
            "sigma_sf_db" => s.sigma_sf_db = p(value)?,
            "noise_power" => s.noise_power = p(value)?,
            "ue_tx_power" => s.ue_tx_power = p(value)?,
            "bs_tx_power" => s.bs_tx_power = p(value)?,
            "data_tx_power" => s.data_tx_power = p(value)?,
            "decode_threshold_db" => s.decode_threshold_db = p(value)?,
            "T" => s.coherence_uses = p(value)?,
            "t_c" => s.coherence_time = p(value)?,
            "bandwidth_w" => s.bandwidth_hz = p(value)?,
            "mu_pd" => s.payload_intervals = p(value)?,
            "max_attempts" => s.max_attempts = p(value)?,
            "backoff_retx_prob" => s.backoff_retx_prob = p(value)?,
            "sucre_bias" => s.sucre_bias = p(value)?,
            "dl_cross_term" => {
                s.cross_term = match value {
                    "unit-norm" => CrossTerm::Gain,
                    "over-alpha" => CrossTerm::GainOverAlpha,
                    _ => return Err(Some(())),
                }
            }
            "protocols" => w.protocols = list(value).ok_or(Some(()))?,
            "k_values" => w.k_values = list(value).ok_or(Some(()))?,
            "seeds" => w.seeds = list(value).ok_or(Some(()))?,
            "n_blocks" => w.n_blocks = p(value)?,
            "warmup" => w.warmup = p(value)?,
            "output" => w.output = Some(PathBuf::from(value)),
            "format" => w.format = p(value).map_err(|_| Some(()))?,
            _ => return Err(None),
        }
        Ok(())
    }

    /// Parses configuration text and validates the result.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            match cfg.set(key, value) {
                Ok(()) => {}
                Err(None) => return Err(ConfigError::UnknownKey { line, key: key.into() }),
                Err(Some(())) => {
                    return Err(ConfigError::BadValue {
                        line,
                        key: key.into(),
                        value: value.into(),
                    })
                }
            }
        }
        cfg.scenario.validate()?;
        cfg.sweep.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.into(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Writes every key; [`RunConfig::parse`] of the result is lossless.
    pub fn serialize(&self) -> String {
        let s = &self.scenario;
        let w = &self.sweep;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("r_i", s.r_i.to_string());
        kv("r_e", s.r_e.to_string());
        kv("M", s.antennas.to_string());
        kv("B", s.subarrays.to_string());
        kv("array_length", s.array_length.to_string());
        kv("P_b", s.p_visible.to_string());
        kv("P_a", s.p_access.to_string());
        kv("tau_ra", s.tau_ra.to_string());
        kv("kappa", s.kappa.to_string());
        kv("g_db", s.g_db.to_string());
        kv("sigma_sf_db", s.sigma_sf_db.to_string());
        kv("noise_power", s.noise_power.to_string());
        kv("ue_tx_power", s.ue_tx_power.to_string());
        kv("bs_tx_power", s.bs_tx_power.to_string());
        kv("data_tx_power", s.data_tx_power.to_string());
        kv("decode_threshold_db", s.decode_threshold_db.to_string());
        kv("T", s.coherence_uses.to_string());
        kv("t_c", s.coherence_time.to_string());
        kv("bandwidth_w", s.bandwidth_hz.to_string());
        kv("mu_pd", s.payload_intervals.to_string());
        kv("max_attempts", s.max_attempts.to_string());
        kv("backoff_retx_prob", s.backoff_retx_prob.to_string());
        kv("sucre_bias", s.sucre_bias.to_string());
        kv("dl_cross_term", cross_term_name(s.cross_term).into());
        kv("protocols", join(&w.protocols));
        kv("k_values", join(&w.k_values));
        kv("seeds", join(&w.seeds));
        kv("n_blocks", w.n_blocks.to_string());
        kv("warmup", w.warmup.to_string());
        if let Some(o) = &w.output {
            kv("output", o.display().to_string());
        }
        kv("format", w.format.as_str().into());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        let s = &cfg.scenario;
        assert_eq!((s.r_e, s.r_i, s.p_access, s.tau_ra), (200.0, 20.0, 0.01, 10));
        assert_eq!(
            (s.antennas, s.p_visible, s.subarrays, s.coherence_uses),
            (400, 0.5, 10, 200)
        );
        assert_eq!(
            (s.coherence_time, s.bandwidth_hz, s.payload_intervals, s.max_attempts),
            (1e-3, 2e7, 10, 10)
        );
    }

    #[test]
    fn comments_and_whitespace() {
        let cfg = RunConfig::parse("# header\n  B = 20   # more SAs\n\nprotocols = novr-xl, sucre-xl\n").unwrap();
        assert_eq!(cfg.scenario.subarrays, 20);
        assert_eq!(cfg.sweep.protocols, vec![Protocol::NovrXl, Protocol::SucreXl]);
    }

    #[test]
    fn range_errors_name_the_bound() {
        let e = RunConfig::parse("P_b = 1.5").unwrap_err().to_string();
        assert!(e.contains("P_b") && e.contains("(0, 1]"), "{e}");
        let e = RunConfig::parse("k_values = 0,10").unwrap_err().to_string();
        assert!(e.contains("k_values"), "{e}");
    }

    #[test]
    fn unknown_and_malformed_lines() {
        assert!(matches!(
            RunConfig::parse("P_c = 1"),
            Err(ConfigError::UnknownKey { line: 1, .. })
        ));
        assert!(matches!(
            RunConfig::parse("\nB 10"),
            Err(ConfigError::Syntax { line: 2 })
        ));
        assert!(matches!(RunConfig::parse("B = ten"), Err(ConfigError::BadValue { .. })));
        assert!(matches!(
            RunConfig::parse("protocols = aloha"),
            Err(ConfigError::BadValue { .. })
        ));
        assert!(matches!(
            RunConfig::parse("format = xml"),
            Err(ConfigError::BadValue { .. })
        ));
    }

    #[test]
    fn serialize_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.scenario.noise_power = 10f64.powf(-12.2);
        cfg.scenario.ue_tx_power = 5e-5;
        cfg.scenario.cross_term = CrossTerm::GainOverAlpha;
        cfg.sweep.seeds = vec![3, 1, 4];
        cfg.sweep.output = Some("out/results.csv".into());
        cfg.sweep.format = Format::JsonLines;
        assert_eq!(RunConfig::parse(&cfg.serialize()).unwrap(), cfg);
        assert_eq!(
            RunConfig::parse(&RunConfig::default().serialize()).unwrap(),
            RunConfig::default()
        );
    }
}
