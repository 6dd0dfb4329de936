//! `basis.toml`: defaults for the flags, the auth mode and engine tuning.

use std::path::{Path, PathBuf};

use anyhow::Context;
use basis_core::{PolicyConfig, SliceBudget};
use serde::Deserialize;

pub const DEFAULT_DIR: &str = ".basis";
pub const DEFAULT_LISTEN: &str = "127.0.0.1:7341";

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub dir: Option<PathBuf>,
    pub actor: Option<String>,
    /// When set, the expert role requires this token.
    pub token: Option<String>,
    pub listen: Option<String>,
    pub policy: PolicyConfig,
    pub slice: Option<SliceBudget>,
}

impl Config {
    pub fn load(path: &Path) -> anyhow::Result<Config> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Config::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(text: &str) -> anyhow::Result<Config> {
        let cfg: Config = toml::from_str(text)?;
        cfg.policy.validate()?;
        Ok(cfg)
    }
}
