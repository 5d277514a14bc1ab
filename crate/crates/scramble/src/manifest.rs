use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Format};
use crate::error::{RunError, RunResult};
use crate::methods;
use crate::output::{body_checksum, sha256_hex, write_atomic, Table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub file: String,
    /// SHA-256 of the CSV without its `#` lines; of the whole file for JSON.
    pub sha256: String,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub method: String,
    pub config_hash: String,
    pub config: String,
    pub code_version: String,
    pub seed: u64,
    pub threads: usize,
    /// Unix time in seconds.
    pub started: f64,
    pub finished: f64,
    pub outputs: Vec<OutputEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Adds the method and every physics field to each table's metadata.
/// Recipes that set their own `physics.*` values keep them.
fn stamp(tables: &mut [Table], cfg: &ExperimentConfig) {
    for t in tables {
        t.metadata.entry("method".into()).or_insert_with(|| cfg.method.name());
        for (k, v) in cfg.physics_metadata() {
            t.metadata.entry(k).or_insert(v);
        }
        if cfg.numerics.n_samples > 0 && !t.metadata.contains_key("numerics.seed") {
            t.metadata.insert("numerics.seed".into(), cfg.numerics.seed.to_string());
        }
    }
}

/// Runs one experiment on the current rayon pool and writes its outputs.
pub fn run(cfg: &ExperimentConfig, threads: usize) -> RunResult<RunManifest> {
    let started = now();
    let mut tables = methods::execute(cfg)?;
    stamp(&mut tables, cfg);
    let dir = &cfg.output.directory;
    let mut outputs = Vec::new();
    let mut columns_doc = String::new();
    for t in &tables {
        for f in &cfg.output.formats {
            let (file, bytes, sha) = match f {
                Format::Csv => {
                    let text = t.to_csv();
                    let sha = body_checksum(&text);
                    (format!("{}.csv", t.name), text.into_bytes(), sha)
                }
                Format::Json => {
                    let bytes = serde_json::to_vec_pretty(t).map_err(|e| RunError::config(e.to_string()))?;
                    let sha = sha256_hex(&bytes);
                    (format!("{}.json", t.name), bytes, sha)
                }
            };
            write_atomic(&dir.join(&file), &bytes)?;
            outputs.push(OutputEntry { file, sha256: sha, rows: t.rows.len() });
        }
        if let Some(plot) = t.metadata.get("plot") {
            columns_doc.push_str(&format!("{}: columns {} | {plot}\n", t.name, t.columns.join(",")));
        }
    }
    if !columns_doc.is_empty() {
        write_atomic(&dir.join("COLUMNS.txt"), columns_doc.as_bytes())?;
    }
    let canonical = cfg.to_canonical();
    let manifest = RunManifest {
        method: cfg.method.name(),
        config_hash: sha256_hex(canonical.as_bytes()),
        config: canonical,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.numerics.seed,
        threads,
        started,
        finished: now(),
        outputs,
    };
    let json = serde_json::to_vec_pretty(&manifest).map_err(|e| RunError::config(e.to_string()))?;
    write_atomic(&dir.join(MANIFEST_FILE), &json)?;
    Ok(manifest)
}

pub fn read_manifest(path: &Path) -> RunResult<RunManifest> {
    let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| RunError::Parse { path: path.to_path_buf(), reason: e.to_string() })
}

/// Runs inside a dedicated pool of `threads` workers.
pub fn run_with_threads(cfg: &ExperimentConfig, threads: usize) -> RunResult<RunManifest> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| RunError::config(format!("cannot start {threads} workers: {e}")))?;
    pool.install(|| run(cfg, threads))
}
