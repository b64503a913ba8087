use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Directory for reports when `--out` is not given.
pub const OUT_DIR_ENV: &str = "SIMPLEX_LEARN_OUT_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    Simplex,
    Lp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Landscape,
    Scaling,
    Tv,
}

/// Parameters shared by every command. Each field may come from a config
/// file or a flag; flags win.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t3: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<Suite>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<Problem>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shared_sample: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let config: RunConfig =
            serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        if config.schema_version != CONFIG_SCHEMA_VERSION {
            bail!(
                "config {} has schema_version {}, expected {CONFIG_SCHEMA_VERSION}",
                path.display(),
                config.schema_version
            );
        }
        Ok(config)
    }

    /// Fields set in `over` replace those in `self`.
    pub fn merged(self, over: RunConfig) -> RunConfig {
        RunConfig {
            schema_version: CONFIG_SCHEMA_VERSION,
            n: over.n.or(self.n),
            p: over.p.or(self.p),
            t: over.t.or(self.t),
            t1: over.t1.or(self.t1),
            t3: over.t3.or(self.t3),
            m: over.m.or(self.m),
            r: over.r.or(self.r),
            seed: over.seed.or(self.seed),
            threads: over.threads.or(self.threads),
            out: over.out.or(self.out),
            suite: over.suite.or(self.suite),
            problem: over.problem.or(self.problem),
            mc_points: over.mc_points.or(self.mc_points),
            shared_sample: over.shared_sample.or(self.shared_sample),
            input: over.input.or(self.input),
            csv: over.csv.or(self.csv),
        }
    }

    pub fn require_n(&self) -> Result<usize> {
        match self.n {
            Some(0) => bail!("invalid config: n must be at least 1"),
            Some(n) => Ok(n),
            None => bail!("invalid config: n is required"),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// `--out`, else `<$SIMPLEX_LEARN_OUT_DIR or .>/<command>-report.json`.
    pub fn report_path(&self, command: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| {
            let dir = std::env::var_os(OUT_DIR_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("."));
            dir.join(format!("{command}-report.json"))
        })
    }
}
