//! Run configuration. Each setting is taken from the first source that has
//! it: command-line flag, config file, environment, built-in default.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use factcheck_core::pipeline::{Strategy, DEFAULT_TAU, DEFAULT_WORKERS};
use factcheck_core::search::{DEFAULT_REQUESTED_RESULTS, MAX_REQUESTED_RESULTS};
use serde::{Deserialize, Serialize};

pub const DEFAULT_MODEL: &str = "gpt-4o-mini";
pub const DEFAULT_CACHE: &str = ".factcheck/search-cache.json";
pub const ENV_PREFIX: &str = "FACTCHECK_";

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse()
}

#[derive(Args, Debug, Clone, Default)]
pub struct RunArgs {
    /// TOML config file. Defaults to DIR/config.toml under --mock when present.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Serve all model and search calls from fixtures in DIR (llm.jsonl,
    /// search.json). No network access.
    #[arg(long, value_name = "DIR")]
    pub mock: Option<PathBuf>,
    /// Model used for extraction, query generation, translation and verification.
    #[arg(long)]
    pub model: Option<String>,
    /// monolingual, translated or thresholded.
    #[arg(long, value_parser = parse_strategy)]
    pub strategy: Option<Strategy>,
    /// Minimum Urdu evidence count before falling back to translated search.
    #[arg(long)]
    pub tau: Option<usize>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Results requested per search query (1-20).
    #[arg(long)]
    pub requested_results: Option<usize>,
    /// Seed for sampling; required with --mock.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Search cache file for live runs.
    #[arg(long, value_name = "FILE")]
    pub cache: Option<PathBuf>,
    /// Ignore cached search results (fresh results still overwrite them).
    #[arg(long)]
    pub no_cache: bool,
    /// JSON pricing table.
    #[arg(long, value_name = "FILE")]
    pub pricing: Option<PathBuf>,
    #[arg(long)]
    pub temperature: Option<f64>,
}

/// Settings read from a TOML file. Relative paths are resolved against the
/// file's directory.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub model: Option<String>,
    pub strategy: Option<String>,
    pub tau: Option<usize>,
    pub workers: Option<usize>,
    pub requested_results: Option<usize>,
    pub seed: Option<u64>,
    pub cache: Option<PathBuf>,
    pub pricing: Option<PathBuf>,
    pub temperature: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.cache, &mut cfg.pricing].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "dir")]
pub enum Backend {
    Live,
    Mock(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub backend: Backend,
    pub model_id: String,
    pub strategy: Strategy,
    pub tau: usize,
    pub workers: usize,
    pub requested_results: usize,
    pub seed: Option<u64>,
    pub cache_path: Option<PathBuf>,
    pub bypass_cache: bool,
    pub pricing_path: Option<PathBuf>,
    pub temperature: f64,
}

fn env_parse<T: std::str::FromStr>(env: &dyn Fn(&str) -> Option<String>, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    let name = format!("{ENV_PREFIX}{key}");
    match env(&name) {
        None => Ok(None),
        Some(v) if v.trim().is_empty() => Ok(None),
        Some(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|e| anyhow::anyhow!("{name}={v:?}: {e}")),
    }
}

impl RunConfig {
    /// Merges flags, config file and environment (looked up through `env`).
    pub fn resolve(args: &RunArgs, env: &dyn Fn(&str) -> Option<String>) -> Result<Self> {
        let config_path = args.config.clone().or_else(|| {
            args.mock
                .as_ref()
                .map(|d| d.join("config.toml"))
                .filter(|p| p.is_file())
        });
        let file = match &config_path {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let file_strategy = file
            .strategy
            .as_deref()
            .map(str::parse::<Strategy>)
            .transpose()
            .map_err(|e| anyhow::anyhow!("config file: {e}"))?;
        let env_strategy = env_parse::<String>(env, "STRATEGY")?
            .map(|s| s.parse::<Strategy>())
            .transpose()
            .map_err(|e| anyhow::anyhow!("{ENV_PREFIX}STRATEGY: {e}"))?;

        let cfg = RunConfig {
            backend: match &args.mock {
                Some(dir) => Backend::Mock(dir.clone()),
                None => Backend::Live,
            },
            model_id: args
                .model
                .clone()
                .or(file.model)
                .or(env_parse(env, "MODEL")?)
                .unwrap_or_else(|| DEFAULT_MODEL.to_string()),
            strategy: args
                .strategy
                .or(file_strategy)
                .or(env_strategy)
                .unwrap_or(Strategy::Thresholded),
            tau: args.tau.or(file.tau).or(env_parse(env, "TAU")?).unwrap_or(DEFAULT_TAU),
            workers: args
                .workers
                .or(file.workers)
                .or(env_parse(env, "WORKERS")?)
                .unwrap_or(DEFAULT_WORKERS),
            requested_results: args
                .requested_results
                .or(file.requested_results)
                .or(env_parse(env, "REQUESTED_RESULTS")?)
                .unwrap_or(DEFAULT_REQUESTED_RESULTS),
            seed: args.seed.or(file.seed).or(env_parse(env, "SEED")?),
            cache_path: args.cache.clone().or(file.cache).or(env_parse(env, "CACHE")?),
            bypass_cache: args.no_cache,
            pricing_path: args.pricing.clone().or(file.pricing).or(env_parse(env, "PRICING")?),
            temperature: args
                .temperature
                .or(file.temperature)
                .or(env_parse(env, "TEMPERATURE")?)
                .unwrap_or(0.0),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if matches!(self.backend, Backend::Mock(_)) && self.seed.is_none() {
            bail!("mock runs need a seed (--seed, `seed` in the config file, or {ENV_PREFIX}SEED)");
        }
        if self.strategy == Strategy::Thresholded && self.tau == 0 {
            bail!("tau must be at least 1");
        }
        if self.workers == 0 {
            bail!("workers must be at least 1");
        }
        if !(1..=MAX_REQUESTED_RESULTS).contains(&self.requested_results) {
            bail!(
                "requested results must be between 1 and {MAX_REQUESTED_RESULTS}, got {}",
                self.requested_results
            );
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            bail!("temperature must be between 0 and 2");
        }
        Ok(())
    }

    pub fn seed_or_default(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn env_of(pairs: &[(&str, &str)]) -> impl Fn(&str) -> Option<String> {
        let map: HashMap<String, String> = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        move |k| map.get(k).cloned()
    }

    #[test]
    fn defaults() {
        let cfg = RunConfig::resolve(&RunArgs::default(), &env_of(&[])).unwrap();
        assert_eq!(cfg.strategy, Strategy::Thresholded);
        assert_eq!(cfg.tau, 5);
        assert_eq!(cfg.workers, 4);
        assert_eq!(cfg.requested_results, 10);
        assert_eq!(cfg.backend, Backend::Live);
    }

    #[test]
    fn precedence_flag_file_env() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "tau = 7\nworkers = 2\npricing = \"p.json\"\n").unwrap();
        let env = env_of(&[
            ("FACTCHECK_TAU", "9"),
            ("FACTCHECK_WORKERS", "8"),
            ("FACTCHECK_MODEL", "env-model"),
        ]);
        let args = RunArgs {
            config: Some(path),
            tau: Some(3),
            ..RunArgs::default()
        };
        let cfg = RunConfig::resolve(&args, &env).unwrap();
        assert_eq!(cfg.tau, 3);
        assert_eq!(cfg.workers, 2);
        assert_eq!(cfg.model_id, "env-model");
        assert_eq!(cfg.pricing_path, Some(dir.path().join("p.json")));
    }

    #[test]
    fn mock_needs_seed() {
        let dir = tempfile::tempdir().unwrap();
        let args = RunArgs {
            mock: Some(dir.path().to_path_buf()),
            ..RunArgs::default()
        };
        let err = RunConfig::resolve(&args, &env_of(&[])).unwrap_err();
        assert!(err.to_string().contains("seed"));
        std::fs::write(dir.path().join("config.toml"), "seed = 3\n").unwrap();
        assert_eq!(RunConfig::resolve(&args, &env_of(&[])).unwrap().seed, Some(3));
    }

    #[test]
    fn bad_values_are_rejected() {
        let args = RunArgs {
            tau: Some(0),
            ..RunArgs::default()
        };
        assert!(RunConfig::resolve(&args, &env_of(&[])).is_err());
        assert!(RunConfig::resolve(&RunArgs::default(), &env_of(&[("FACTCHECK_STRATEGY", "bogus")])).is_err());
        assert!(RunConfig::resolve(&RunArgs::default(), &env_of(&[("FACTCHECK_TAU", "x")])).is_err());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "unknown_key = 1\n").unwrap();
        let args = RunArgs {
            config: Some(path),
            ..RunArgs::default()
        };
        assert!(RunConfig::resolve(&args, &env_of(&[])).is_err());
    }
}
