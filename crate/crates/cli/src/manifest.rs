use std::path::{Path, PathBuf};

use anyhow::Context;
use ptme_core::{Benchmark, Error, Method, RunConfig};
use serde::{Deserialize, Serialize};

use crate::RunArgs;

/// Experiment description; every field may also come from a command-line flag.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentManifest {
    pub problem: Option<String>,
    pub method: Option<String>,
    pub config: RunConfig,
    pub seeds: Option<Vec<u64>>,
    pub output_dir: Option<PathBuf>,
}

/// A manifest with every field checked and defaults applied.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub problem: Benchmark,
    pub method: Method,
    pub config: RunConfig,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
}

impl Experiment {
    pub fn run_dir(&self, seed: u64) -> PathBuf {
        self.output_dir.join(self.method.to_string()).join(seed.to_string())
    }
}

impl ExperimentManifest {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io { path: path.to_path_buf(), source: e })?;
        let manifest = serde_json::from_str(&text)
            .map_err(|e| Error::Validation(vec![format!("manifest: {e}")]))
            .with_context(|| format!("reading {}", path.display()))?;
        Ok(manifest)
    }

    /// Flags win over manifest fields.
    pub fn apply_flags(&mut self, args: &RunArgs) -> Result<(), Error> {
        let mut problems = Vec::new();
        if let Some(p) = &args.problem {
            self.problem = Some(p.clone());
        }
        if let Some(m) = &args.method {
            self.method = Some(m.clone());
        }
        if let Some(b) = args.budget {
            self.config.budget = b;
        }
        if let Some(c) = args.cells {
            self.config.cells = c;
        }
        if let Some(s) = args.sigma_sbx {
            self.config.sigma_sbx = s;
        }
        if let Some(s) = args.sigma_reg {
            self.config.sigma_reg = s;
        }
        if let Some(sizes) = &args.tournament_sizes {
            match parse_list::<usize>(sizes) {
                Some(v) => self.config.tournament_sizes = v,
                None => problems.push(format!("tournament_sizes: cannot parse '{sizes}'")),
            }
        }
        if let Some(s) = &args.seeds {
            match parse_seeds(s) {
                Some(v) => self.seeds = Some(v),
                None => problems.push(format!("seeds: cannot parse '{s}'")),
            }
        }
        if let Some(o) = &args.out {
            self.output_dir = Some(o.clone());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    /// Checks every field and reports all problems at once.
    pub fn resolve(&self) -> Result<Experiment, Error> {
        let mut problems = Vec::new();
        let problem = match self.problem.as_deref() {
            None => {
                problems.push("problem: missing".to_string());
                None
            }
            Some(p) => p
                .parse::<Benchmark>()
                .map_err(|e| problems.push(format!("problem: {e}")))
                .ok(),
        };
        let method = self
            .method
            .as_deref()
            .unwrap_or("ptme")
            .parse::<Method>()
            .map_err(|e| problems.push(format!("method: {e}")))
            .ok();
        let seeds = self.seeds.clone().unwrap_or_else(|| vec![self.config.seed]);
        if seeds.is_empty() {
            problems.push("seeds: empty".to_string());
        }
        let mut config = self.config.clone();
        if let Some(m) = method {
            config = m.configure(&config);
            if let Err(Error::Validation(list)) = config.validate() {
                problems.extend(list.into_iter().map(|p| format!("config: {p}")));
            }
        }
        match (problem, method, problems.is_empty()) {
            (Some(problem), Some(method), true) => Ok(Experiment {
                problem,
                method,
                config,
                seeds,
                output_dir: self.output_dir.clone().unwrap_or_else(|| PathBuf::from("runs")),
            }),
            _ => Err(Error::Validation(problems)),
        }
    }
}

pub fn parse_list<T: std::str::FromStr>(s: &str) -> Option<Vec<T>> {
    s.split(',').map(|p| p.trim().parse().ok()).collect()
}

/// `A..B` and `A..=B` are both inclusive; otherwise a comma-separated list.
pub fn parse_seeds(s: &str) -> Option<Vec<u64>> {
    if let Some((lo, hi)) = s.split_once("..") {
        let hi = hi.strip_prefix('=').unwrap_or(hi);
        let (lo, hi): (u64, u64) = (lo.trim().parse().ok()?, hi.trim().parse().ok()?);
        return (lo <= hi).then(|| (lo..=hi).collect());
    }
    parse_list(s)
}
