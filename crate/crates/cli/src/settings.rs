//! Effective settings: flags override the `--config` file, which overrides
//! built-in defaults.
//!
//! The config file holds one `key = value` per line; blank lines and lines
//! starting with `#` are ignored. Recognized keys: `format`, `seed`,
//! `samples`, `streams`, `resolution`, `boundary_tolerance`, `multistart`,
//! `max_bisection_iters`, `clamp_negative`, `sequential`.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::ValueEnum;
use gport_core::{Exec, SolveConfig};

use crate::cli::GlobalArgs;
use crate::output::{sig9, Format};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_SAMPLES: u64 = 1_000_000;
pub const DEFAULT_STREAMS: u32 = 64;
pub const DEFAULT_RESOLUTION: f64 = 1e-3;

const KEYS: [&str; 10] = [
    "format",
    "seed",
    "samples",
    "streams",
    "resolution",
    "boundary_tolerance",
    "multistart",
    "max_bisection_iters",
    "clamp_negative",
    "sequential",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", n + 1))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                bail!("line {}: unknown key `{key}`", n + 1);
            }
            if values
                .insert(key.to_string(), value.trim().to_string())
                .is_some()
            {
                bail!("line {}: duplicate key `{key}`", n + 1);
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.values
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| anyhow!("config key `{key}`: {e}"))
            })
            .transpose()
    }

    fn format(&self) -> Result<Option<Format>> {
        self.values
            .get("format")
            .map(|v| Format::from_str(v, true).map_err(|e| anyhow!("config key `format`: {e}")))
            .transpose()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub format: Format,
    pub seed: u64,
    pub solve: SolveConfig,
    /// Unset means "use the command's own default".
    pub samples: Option<u64>,
    pub streams: Option<u32>,
    pub resolution: Option<f64>,
}

impl Settings {
    pub fn resolve(flags: &GlobalArgs, file: &FileConfig) -> Result<Self> {
        let defaults = SolveConfig::default();
        let clamp_negative = flags.clamp_negative || file.get("clamp_negative")?.unwrap_or(false);
        let sequential = flags.sequential || file.get("sequential")?.unwrap_or(false);
        let solve = SolveConfig {
            boundary_tolerance: flags
                .boundary_tolerance
                .or(file.get("boundary_tolerance")?)
                .unwrap_or(defaults.boundary_tolerance),
            max_bisection_iters: flags
                .max_bisection_iters
                .or(file.get("max_bisection_iters")?)
                .unwrap_or(defaults.max_bisection_iters),
            multistart_count: flags
                .multistart
                .or(file.get("multistart")?)
                .unwrap_or(defaults.multistart_count),
            clamp_negative,
            exec: if sequential {
                Exec::Sequential
            } else {
                defaults.exec
            },
        };
        solve.validate()?;
        Ok(Self {
            format: flags.format.or(file.format()?).unwrap_or(Format::Table),
            seed: flags.seed.or(file.get("seed")?).unwrap_or(DEFAULT_SEED),
            solve,
            samples: file.get("samples")?,
            streams: file.get("streams")?,
            resolution: file.get("resolution")?,
        })
    }

    /// Everything that can change the numbers, for the run manifest.
    pub fn parameters(&self) -> BTreeMap<String, String> {
        let s = &self.solve;
        BTreeMap::from([
            ("format".into(), self.format.name().into()),
            ("seed".into(), self.seed.to_string()),
            ("boundary_tolerance".into(), sig9(s.boundary_tolerance)),
            (
                "max_bisection_iters".into(),
                s.max_bisection_iters.to_string(),
            ),
            ("multistart".into(), s.multistart_count.to_string()),
            ("clamp_negative".into(), s.clamp_negative.to_string()),
        ])
    }
}
