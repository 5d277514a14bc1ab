//! Flat `key = value` experiment configuration.
//!
//! Keys live in three namespaces (`physics.`, `numerics.`, `output.`) plus the
//! top-level `method`. Lines starting with `#` and blank lines are ignored.
//! [`ExperimentConfig::to_canonical`] writes every key in a fixed order, and
//! parsing that text gives back the same config.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{RunError, RunResult};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Method {
    EdQuench,
    EdKick,
    Twa,
    Dtwa,
    Cumulant,
    Hp,
    Classical,
    Poincare,
    Lyapunov,
    Spectrum,
    FullEd,
    /// A named figure recipe, written `figure:<name>`.
    Figure(String),
}

impl Method {
    pub const SIMPLE: [Method; 11] = [
        Method::EdQuench,
        Method::EdKick,
        Method::Twa,
        Method::Dtwa,
        Method::Cumulant,
        Method::Hp,
        Method::Classical,
        Method::Poincare,
        Method::Lyapunov,
        Method::Spectrum,
        Method::FullEd,
    ];

    pub fn name(&self) -> String {
        match self {
            Method::EdQuench => "ed-quench".into(),
            Method::EdKick => "ed-kick".into(),
            Method::Twa => "twa".into(),
            Method::Dtwa => "dtwa".into(),
            Method::Cumulant => "cumulant".into(),
            Method::Hp => "hp".into(),
            Method::Classical => "classical".into(),
            Method::Poincare => "poincare".into(),
            Method::Lyapunov => "lyapunov".into(),
            Method::Spectrum => "spectrum".into(),
            Method::FullEd => "full-ed".into(),
            Method::Figure(name) => format!("figure:{name}"),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Method {
    type Err = RunError;

    fn from_str(s: &str) -> RunResult<Self> {
        if let Some(name) = s.strip_prefix("figure:") {
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
                return Err(RunError::config(format!("invalid figure name {name:?}")));
            }
            return Ok(Method::Figure(name.to_string()));
        }
        Method::SIMPLE
            .iter()
            .find(|m| m.name() == s)
            .cloned()
            .ok_or_else(|| RunError::config(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Physics {
    pub n: usize,
    pub j: f64,
    pub h0: f64,
    pub hf: f64,
    pub k: f64,
    pub tau: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Numerics {
    /// Output grid spacing. Integrators never step further than this.
    pub dt: f64,
    pub t_max: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub thread_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub method: Method,
    pub physics: Physics,
    pub numerics: Numerics,
    pub output: OutputSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            method: Method::EdQuench,
            physics: Physics { n: 100, j: 1.0, h0: 0.0, hf: 2.0, k: 0.0, tau: 1.0, alpha: 0.0 },
            numerics: Numerics { dt: 0.05, t_max: 20.0, n_samples: 1000, seed: 1, thread_count: 1 },
            output: OutputSpec { directory: PathBuf::from("out"), formats: vec![Format::Csv] },
        }
    }
}

/// Every accepted key, in canonical order.
pub const KEYS: [&str; 15] = [
    "method",
    "physics.N",
    "physics.J",
    "physics.h0",
    "physics.hf",
    "physics.K",
    "physics.tau",
    "physics.alpha",
    "numerics.dt",
    "numerics.t_max",
    "numerics.n_samples",
    "numerics.seed",
    "numerics.thread_count",
    "output.directory",
    "output.formats",
];

fn parse_num<T: FromStr>(key: &str, value: &str) -> RunResult<T> {
    value.parse().map_err(|_| RunError::config(format!("{key}: cannot parse {value:?}")))
}

fn parse_real(key: &str, value: &str) -> RunResult<f64> {
    let v: f64 = parse_num(key, value)?;
    if !v.is_finite() {
        return Err(RunError::config(format!("{key}: value must be finite, got {value}")));
    }
    // -0 would not survive the canonical form
    Ok(if v == 0.0 { 0.0 } else { v })
}

fn parse_formats(value: &str) -> RunResult<Vec<Format>> {
    let mut out = Vec::new();
    for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let f = match item {
            "csv" => Format::Csv,
            "json" => Format::Json,
            other => return Err(RunError::config(format!("output.formats: unknown format {other:?}"))),
        };
        if !out.contains(&f) {
            out.push(f);
        }
    }
    if out.is_empty() {
        return Err(RunError::config("output.formats: at least one format is required"));
    }
    out.sort();
    Ok(out)
}

impl ExperimentConfig {
    /// Assigns one key. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> RunResult<()> {
        let value = value.trim();
        match key {
            "method" => self.method = value.parse()?,
            "physics.N" => self.physics.n = parse_num(key, value)?,
            "physics.J" => self.physics.j = parse_real(key, value)?,
            "physics.h0" => self.physics.h0 = parse_real(key, value)?,
            "physics.hf" => self.physics.hf = parse_real(key, value)?,
            "physics.K" => self.physics.k = parse_real(key, value)?,
            "physics.tau" => self.physics.tau = parse_real(key, value)?,
            "physics.alpha" => self.physics.alpha = parse_real(key, value)?,
            "numerics.dt" => self.numerics.dt = parse_real(key, value)?,
            "numerics.t_max" => self.numerics.t_max = parse_real(key, value)?,
            "numerics.n_samples" => self.numerics.n_samples = parse_num(key, value)?,
            "numerics.seed" => self.numerics.seed = parse_num(key, value)?,
            "numerics.thread_count" => self.numerics.thread_count = parse_num(key, value)?,
            "output.directory" => {
                if value.is_empty() || value.contains('\n') {
                    return Err(RunError::config("output.directory must be a non-empty single line"));
                }
                self.output.directory = PathBuf::from(value)
            }
            "output.formats" => self.output.formats = parse_formats(value)?,
            _ => return Err(RunError::config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies a `key=value` override as given on the command line.
    pub fn apply_override(&mut self, assignment: &str) -> RunResult<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| RunError::config(format!("override {assignment:?} is not key=value")))?;
        self.set(k.trim(), v)
    }

    /// Parses config text on top of the defaults. A key may appear once.
    pub fn parse(text: &str) -> RunResult<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut seen = std::collections::BTreeSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| RunError::config(format!("line {}: expected key = value", lineno + 1)))?;
            let k = k.trim();
            if !seen.insert(k.to_string()) {
                return Err(RunError::config(format!("line {}: duplicate key {k:?}", lineno + 1)));
            }
            cfg.set(k, v).map_err(|e| match e {
                RunError::Config(m) => RunError::config(format!("line {}: {m}", lineno + 1)),
                other => other,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> RunResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Value of one key as written in the canonical form.
    pub fn get(&self, key: &str) -> Option<String> {
        let p = &self.physics;
        let n = &self.numerics;
        Some(match key {
            "method" => self.method.name(),
            "physics.N" => p.n.to_string(),
            "physics.J" => p.j.to_string(),
            "physics.h0" => p.h0.to_string(),
            "physics.hf" => p.hf.to_string(),
            "physics.K" => p.k.to_string(),
            "physics.tau" => p.tau.to_string(),
            "physics.alpha" => p.alpha.to_string(),
            "numerics.dt" => n.dt.to_string(),
            "numerics.t_max" => n.t_max.to_string(),
            "numerics.n_samples" => n.n_samples.to_string(),
            "numerics.seed" => n.seed.to_string(),
            "numerics.thread_count" => n.thread_count.to_string(),
            "output.directory" => self.output.directory.display().to_string(),
            "output.formats" => self.output.formats.iter().map(|f| f.name()).collect::<Vec<_>>().join(","),
            _ => return None,
        })
    }

    pub fn to_canonical(&self) -> String {
        KEYS.iter().map(|k| format!("{k} = {}\n", self.get(k).unwrap_or_default())).collect()
    }

    /// `physics.*` pairs exactly as they appear in the canonical form.
    pub fn physics_metadata(&self) -> Vec<(String, String)> {
        KEYS.iter()
            .filter(|k| k.starts_with("physics."))
            .map(|k| (k.to_string(), self.get(k).unwrap_or_default()))
            .collect()
    }

    /// Checks that do not depend on the method.
    pub fn validate(&self) -> RunResult<()> {
        let n = &self.numerics;
        if !(n.dt > 0.0) {
            return Err(RunError::config(format!("numerics.dt must be positive, got {}", n.dt)));
        }
        if !(n.t_max >= 0.0) {
            return Err(RunError::config(format!("numerics.t_max must be non-negative, got {}", n.t_max)));
        }
        if n.thread_count == 0 {
            return Err(RunError::config("numerics.thread_count must be at least 1"));
        }
        if !(self.physics.tau > 0.0) {
            return Err(RunError::config(format!("physics.tau must be positive, got {}", self.physics.tau)));
        }
        Ok(())
    }

    /// Worker count: the configured value, capped by `SCRAMBLE_THREADS` if set.
    pub fn effective_threads(&self) -> RunResult<usize> {
        thread_cap(self.numerics.thread_count, std::env::var("SCRAMBLE_THREADS").ok().as_deref())
    }
}

/// `configured` capped by the value of `SCRAMBLE_THREADS`, if any.
pub fn thread_cap(configured: usize, env: Option<&str>) -> RunResult<usize> {
    match env.map(str::trim).filter(|s| !s.is_empty()) {
        None => Ok(configured.max(1)),
        Some(s) => {
            let cap: usize = s
                .parse()
                .ok()
                .filter(|&c| c > 0)
                .ok_or_else(|| RunError::config(format!("SCRAMBLE_THREADS must be a positive integer, got {s:?}")))?;
            Ok(configured.clamp(1, cap))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = ExperimentConfig::default();
        let text = c.to_canonical();
        let back = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_canonical(), text);
    }

    #[test]
    fn comments_and_spacing() {
        let c = ExperimentConfig::parse("# quench\n\n  method=dtwa \nphysics.N =  40\nphysics.hf=0.5\n").unwrap();
        assert_eq!(c.method, Method::Dtwa);
        assert_eq!(c.physics.n, 40);
        assert_eq!(c.physics.hf, 0.5);
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        assert!(matches!(ExperimentConfig::parse("physics.M = 3"), Err(RunError::Config(_))));
        assert!(matches!(ExperimentConfig::parse("physics.N = 3\nphysics.N = 4"), Err(RunError::Config(_))));
        assert!(matches!(ExperimentConfig::parse("method = ed"), Err(RunError::Config(_))));
        assert!(matches!(ExperimentConfig::parse("no equals sign"), Err(RunError::Config(_))));
        assert!(matches!(ExperimentConfig::parse("numerics.dt = 0"), Err(RunError::Config(_))));
    }

    #[test]
    fn figure_methods() {
        assert_eq!("figure:table1".parse::<Method>().unwrap(), Method::Figure("table1".into()));
        assert!("figure:".parse::<Method>().is_err());
        assert!("figure:a b".parse::<Method>().is_err());
    }

    #[test]
    fn overrides() {
        let mut c = ExperimentConfig::default();
        c.apply_override("physics.N=200").unwrap();
        c.apply_override("output.formats = json, csv,csv").unwrap();
        assert_eq!(c.physics.n, 200);
        assert_eq!(c.output.formats, vec![Format::Csv, Format::Json]);
        assert!(c.apply_override("physics.N").is_err());
    }

    #[test]
    fn thread_capping() {
        assert_eq!(thread_cap(8, None).unwrap(), 8);
        assert_eq!(thread_cap(8, Some("2")).unwrap(), 2);
        assert_eq!(thread_cap(1, Some("4")).unwrap(), 1);
        assert!(thread_cap(4, Some("zero")).is_err());
        assert!(thread_cap(4, Some("0")).is_err());
    }
}
