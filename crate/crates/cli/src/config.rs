//! Pipeline configuration: a JSON file with CLI flag overrides
//! (flags > file > defaults).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use homesim_core::grounding::{GroundingThresholds, SynonymEntry, DEFAULT_EMBEDDING_DIM};
use homesim_core::rng::fnv1a64;
use homesim_core::sensors::DEFAULT_SENSOR_RADIUS;
use homesim_core::sim_engine::SimParams;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HomeConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub layout: String,
    #[serde(default)]
    pub scripts: Vec<String>,
    #[serde(default)]
    pub scripts_dir: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_walk")]
    pub walk_speed: f64,
    #[serde(default = "default_run")]
    pub run_speed: f64,
    #[serde(default = "default_eps")]
    pub jitter_eps: f64,
    #[serde(default = "default_date")]
    pub date: String,
}

fn default_dt() -> f64 {
    0.2
}
fn default_walk() -> f64 {
    1.2
}
fn default_run() -> f64 {
    3.0
}
fn default_eps() -> f64 {
    0.1
}
fn default_date() -> String {
    "2024-01-01".to_string()
}
fn default_radius() -> f64 {
    DEFAULT_SENSOR_RADIUS
}
fn default_true() -> bool {
    true
}
fn default_dim() -> usize {
    DEFAULT_EMBEDDING_DIM
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: default_dt(),
            walk_speed: default_walk(),
            run_speed: default_run(),
            jitter_eps: default_eps(),
            date: default_date(),
        }
    }
}

impl SimConfig {
    pub fn to_params(&self) -> Result<SimParams> {
        let epoch_date = parse_date(&self.date)?;
        Ok(SimParams {
            dt: self.dt,
            walk_speed: self.walk_speed,
            run_speed: self.run_speed,
            jitter_eps: self.jitter_eps,
            epoch_date,
        })
    }
}

pub fn parse_date(s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").with_context(|| format!("bad date {s:?} (YYYY-MM-DD)"))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub homes: Vec<HomeConfig>,
    /// Vocabulary file; derived from each layout when absent.
    #[serde(default)]
    pub vocabulary: Option<String>,
    pub label_mapping: String,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub thresholds: GroundingThresholds,
    #[serde(default = "default_radius")]
    pub sensor_radius: f64,
    #[serde(default = "default_true")]
    pub emit_reverse: bool,
    /// Near-miss tokens for the deterministic embedding provider.
    #[serde(default)]
    pub synonyms: BTreeMap<String, SynonymEntry>,
    pub out_dir: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_dim")]
    pub embedding_dim: usize,
}

/// A home with every path resolved and its script list expanded.
#[derive(Debug, Clone)]
pub struct ResolvedHome {
    pub name: String,
    pub layout: PathBuf,
    pub scripts: Vec<PathBuf>,
}

/// A validated configuration with all paths resolved against the config
/// file's directory.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub config: PipelineConfig,
    pub homes: Vec<ResolvedHome>,
    pub vocabulary: Option<PathBuf>,
    pub label_mapping: PathBuf,
    pub out_dir: PathBuf,
    /// Stable fingerprint of the effective configuration.
    pub config_hash: String,
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let path = Path::new(p);
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

fn require_file(path: &Path, what: &str) -> Result<()> {
    if !path.is_file() {
        bail!("{what} {path:?} does not exist");
    }
    Ok(())
}

/// Flag overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out_dir: Option<String>,
    pub seed: Option<u64>,
    pub tau_act: Option<f64>,
    pub tau_obj: Option<f64>,
    pub max_retries: Option<u32>,
    pub dt: Option<f64>,
    pub date: Option<String>,
}

/// Load, override, resolve, and validate a pipeline config. Every
/// referenced file must exist before any work starts.
pub fn load_config(path: &Path, overrides: &Overrides) -> Result<ResolvedConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {path:?}"))?;
    let mut config: PipelineConfig =
        serde_json::from_str(&text).with_context(|| format!("parsing config {path:?}"))?;

    if let Some(out_dir) = &overrides.out_dir {
        config.out_dir = out_dir.clone();
    }
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if let Some(v) = overrides.tau_act {
        config.thresholds.tau_act = v;
    }
    if let Some(v) = overrides.tau_obj {
        config.thresholds.tau_obj = v;
    }
    if let Some(v) = overrides.max_retries {
        config.thresholds.max_retries = v;
    }
    if let Some(v) = overrides.dt {
        config.sim.dt = v;
    }
    if let Some(v) = &overrides.date {
        config.sim.date = v.clone();
    }

    if config.homes.is_empty() {
        bail!("config lists no homes");
    }
    config.sim.to_params()?; // validates dt/speeds/date early

    let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let mut homes = Vec::with_capacity(config.homes.len());
    for (i, home) in config.homes.iter().enumerate() {
        let layout = resolve(&base, &home.layout);
        require_file(&layout, "layout")?;
        let name = match &home.name {
            Some(name) => name.clone(),
            None => layout
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| format!("home_{i}")),
        };
        let mut scripts: Vec<PathBuf> = home.scripts.iter().map(|s| resolve(&base, s)).collect();
        if let Some(dir) = &home.scripts_dir {
            let dir = resolve(&base, dir);
            if !dir.is_dir() {
                bail!("scripts_dir {dir:?} does not exist");
            }
            for entry in std::fs::read_dir(&dir)? {
                let p = entry?.path();
                if p.extension().map(|e| e == "txt").unwrap_or(false) {
                    scripts.push(p);
                }
            }
        }
        scripts.sort();
        if scripts.is_empty() {
            bail!("home {name:?} has no scripts");
        }
        for script in &scripts {
            require_file(script, "script")?;
        }
        homes.push(ResolvedHome {
            name,
            layout,
            scripts,
        });
    }

    let vocabulary = match &config.vocabulary {
        Some(v) => {
            let p = resolve(&base, v);
            require_file(&p, "vocabulary file")?;
            Some(p)
        }
        None => None,
    };
    let label_mapping = resolve(&base, &config.label_mapping);
    require_file(&label_mapping, "label mapping")?;
    let out_dir = resolve(&base, &config.out_dir);

    // The fingerprint covers the generation parameters; where the output
    // lands does not change what is generated.
    let mut hashable = config.clone();
    hashable.out_dir = String::new();
    let config_hash = format!(
        "{:016x}",
        fnv1a64(serde_json::to_string(&hashable)?.as_bytes())
    );
    Ok(ResolvedConfig {
        config,
        homes,
        vocabulary,
        label_mapping,
        out_dir,
        config_hash,
    })
}
