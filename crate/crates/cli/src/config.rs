//! Key-value configuration files and the resolved run configuration.
//!
//! A config file holds one `key = value` per line; `#` starts a comment.
//! Keys use the long flag names with either `-` or `_`. Command-line flags
//! always override file entries.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use connect_core::backends::RemoteConfig;
use connect_core::pathfind::ChainParams;

/// Configuration problems map to exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

pub fn usage<T>(msg: impl Into<String>) -> anyhow::Result<T> {
    Err(UsageError(msg.into()).into())
}

#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return usage(format!("config line {}: expected `key = value`", idx + 1));
            };
            let key = key.trim().replace('-', "_");
            if key.is_empty() {
                return usage(format!("config line {}: empty key", idx + 1));
            }
            entries.insert(key, value.trim().to_string());
        }
        Ok(ConfigFile { entries })
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> anyhow::Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|e| UsageError(format!("config key {key}: {e}")).into()),
        }
    }

    /// The flag value if given, else the file entry.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> anyhow::Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    /// A presence flag that a file entry can also switch on.
    pub fn switch(&self, flag: bool, key: &str) -> anyhow::Result<bool> {
        Ok(flag || self.get::<bool>(key)?.unwrap_or(false))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BackendKind {
    Oracle,
    Remote,
}

impl FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oracle" => Ok(BackendKind::Oracle),
            "remote" => Ok(BackendKind::Remote),
            other => Err(format!("unknown backend {other:?} (expected oracle or remote)")),
        }
    }
}

/// Everything a pipeline run needs, after merging flags and config file.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub graph: Option<PathBuf>,
    pub inventory: Option<String>,
    pub embeddings: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub pre_extracted: Option<PathBuf>,
    pub backend: BackendKind,
    pub remote: RemoteConfig,
    pub threshold: f64,
    pub pos_filter: bool,
    pub chain: ChainParams,
    pub top_k: usize,
    pub workers: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// Checks thresholds and that every referenced file exists.
    pub fn validate(&self) -> anyhow::Result<()> {
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return usage(format!("threshold {} outside (0, 1]", self.threshold));
        }
        if let Err(e) = self.chain.validate() {
            return usage(e.to_string());
        }
        if self.top_k == 0 {
            return usage("top-k must be at least 1");
        }
        if self.workers == 0 {
            return usage("workers must be at least 1");
        }
        let inventory_file =
            self.inventory.as_deref().filter(|s| !matches!(*s, "cn13" | "baseline")).map(PathBuf::from);
        let files =
            [&self.graph, &self.embeddings, &self.stopwords, &self.corpus, &self.pre_extracted, &inventory_file];
        for path in files.into_iter().flatten() {
            if !path.is_file() {
                return usage(format!("file not found: {}", path.display()));
            }
        }
        Ok(())
    }

    pub fn require<'a>(value: &'a Option<PathBuf>, flag: &str) -> anyhow::Result<&'a Path> {
        match value {
            Some(p) => Ok(p),
            None => bail!(UsageError(format!("--{flag} is required (flag or config key)"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_flags_win() {
        let cfg = ConfigFile::parse("# run\nbeam = 5\nsim-gate=0.6\nreplace_vague = true\n\n").unwrap();
        assert_eq!(cfg.pick::<usize>(None, "beam").unwrap(), Some(5));
        assert_eq!(cfg.pick(Some(7usize), "beam").unwrap(), Some(7));
        assert_eq!(cfg.get::<f64>("sim_gate").unwrap(), Some(0.6));
        assert!(cfg.switch(false, "replace_vague").unwrap());
        assert_eq!(cfg.get::<usize>("missing").unwrap(), None);
    }

    #[test]
    fn bad_lines_are_usage_errors() {
        let err = ConfigFile::parse("beam 5\n").unwrap_err();
        assert!(err.downcast_ref::<UsageError>().is_some());
        let cfg = ConfigFile::parse("beam = many\n").unwrap();
        assert!(cfg.get::<usize>("beam").unwrap_err().downcast_ref::<UsageError>().is_some());
    }
}
