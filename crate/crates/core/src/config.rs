//! Suite files: TOML lists of estimate entries.
//!
//! ```toml
//! suite = "core"
//! seed = 1
//! jobs = 4
//!
//! [output]
//! json = "reports/core.json"
//! csv = "reports/core.csv"
//!
//! [[estimate]]
//! id = "MAX-LP"
//! ladder = [1.5, 2.0, 4.0]
//! ```

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{check_ladder, default_ladder, run_estimate_check, EstimateId, EstimateSpec, SuiteReport};
use crate::par;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default)]
    pub json: Option<PathBuf>,
    #[serde(default)]
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub suite: String,
    /// Required: runs never depend on the clock.
    pub seed: u64,
    /// Worker threads; `0` or absent uses every core.
    #[serde(default)]
    pub jobs: Option<usize>,
    #[serde(default)]
    pub output: OutputPaths,
    #[serde(default)]
    pub estimate: Vec<EstimateSpec>,
}

/// Command-line adjustments applied on top of a suite file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    /// Directory receiving `<suite>.json` and `<suite>.csv`.
    pub out: Option<PathBuf>,
    /// Keep only these ids.
    pub only: Option<Vec<EstimateId>>,
}

impl SuiteConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(describe(text, &e)))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.suite.trim().is_empty() {
            return Err(Error::Config("suite name is empty".into()));
        }
        let mut names = BTreeSet::new();
        for (i, e) in self.estimate.iter().enumerate() {
            let name = e.display_name();
            if !names.insert(name.clone()) {
                return Err(Error::Config(format!("estimate {i}: duplicate name '{name}'")));
            }
            let ladder = e.ladder.clone().unwrap_or_else(|| default_ladder(e.id));
            check_ladder(e.id.ladder_kind(), &ladder)
                .map_err(|err| Error::Config(format!("estimate {i} ({name}): {err}")))?;
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(j) = o.jobs {
            self.jobs = Some(j);
        }
        if let Some(dir) = &o.out {
            self.output.json = Some(dir.join(format!("{}.json", self.suite)));
            self.output.csv = Some(dir.join(format!("{}.csv", self.suite)));
        }
        if let Some(only) = &o.only {
            self.estimate.retain(|e| only.contains(&e.id));
        }
    }

    /// JSON path, defaulting to `reports/<suite>.json`.
    pub fn json_path(&self) -> PathBuf {
        self.output
            .json
            .clone()
            .unwrap_or_else(|| PathBuf::from("reports").join(format!("{}.json", self.suite)))
    }

    pub fn csv_path(&self) -> PathBuf {
        self.output
            .csv
            .clone()
            .unwrap_or_else(|| PathBuf::from("reports").join(format!("{}.csv", self.suite)))
    }
}

/// `message (line L, column C)` for a TOML error.
fn describe(text: &str, e: &toml::de::Error) -> String {
    let msg = e.message().to_string();
    match e.span() {
        Some(span) => {
            let before = &text[..span.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
            format!("line {line}, column {col}: {msg}")
        }
        None => msg,
    }
}

/// Runs every entry; entries run concurrently and the report is ordered by
/// id and name, so the output does not depend on the thread count.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let jobs = cfg.jobs.unwrap_or(0);
    let results = par::with_threads(jobs, || par::map_slice(&cfg.estimate, |e| run_estimate_check(e, cfg.seed)));
    let mut entries = Vec::with_capacity(results.len());
    for (e, r) in cfg.estimate.iter().zip(results) {
        entries.push(r.map_err(|err| annotate(&e.display_name(), err))?);
    }
    Ok(SuiteReport::new(&cfg.suite, cfg.seed, entries))
}

fn annotate(name: &str, err: Error) -> Error {
    match err {
        Error::InvalidParameter(m) => Error::InvalidParameter(format!("{name}: {m}")),
        Error::Hypothesis(m) => Error::Hypothesis(format!("{name}: {m}")),
        Error::Unknown { kind, name: n } => Error::Config(format!("{name}: unknown {kind} '{n}'")),
        other => other,
    }
}

/// Writes the JSON and CSV files, creating parent directories.
pub fn write_report(cfg: &SuiteConfig, report: &SuiteReport) -> Result<(PathBuf, PathBuf)> {
    let json = cfg.json_path();
    let csv = cfg.csv_path();
    for p in [&json, &csv] {
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(&json, report.to_json()?)?;
    std::fs::write(&csv, report.to_csv()?)?;
    Ok((json, csv))
}
