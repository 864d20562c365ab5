//! The parametric-task MAP-Elites loop, its ablations, the fixed-task
//! (multi-task MAP-Elites) baseline and uniform random search.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::archive::Archive;
use crate::error::{Error, Result};
use crate::problems::Problem;
use crate::seed::{derive_seed, rng_from_seed, RunRng, Stream};
use crate::tessellation::Tessellation;
use crate::variation::{
    local_linear_candidate, sbx_crossover, tournament_select_from_pool, tournament_select_task,
    BanditState,
};

pub const DEFAULT_TOURNAMENT_SIZES: [usize; 6] = [1, 5, 10, 50, 100, 500];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Operator {
    #[serde(rename = "init")]
    Init,
    #[serde(rename = "sbx")]
    Sbx,
    #[serde(rename = "regression")]
    Regression,
    #[serde(rename = "random")]
    Random,
    #[serde(rename = "fixed-task")]
    FixedTask,
}

impl Operator {
    pub fn tag(self) -> &'static str {
        match self {
            Operator::Init => "init",
            Operator::Sbx => "sbx",
            Operator::Regression => "regression",
            Operator::Random => "random",
            Operator::FixedTask => "fixed-task",
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// One fitness evaluation, in log order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    #[serde(rename = "i")]
    pub iteration: u64,
    #[serde(rename = "op")]
    pub operator: Operator,
    pub theta: Vec<f64>,
    pub x: Vec<f64>,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunMode {
    Parametric,
    FixedTasks { count: usize },
    RandomSearch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub budget: usize,
    pub cells: usize,
    pub tournament_sizes: Vec<usize>,
    /// SBX distribution index.
    pub sigma_sbx: f64,
    /// Noise multiplier of the regression operator.
    pub sigma_reg: f64,
    pub regression_fraction: f64,
    pub tournament_enabled: bool,
    pub mode: RunMode,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            budget: 100_000,
            cells: 200,
            tournament_sizes: DEFAULT_TOURNAMENT_SIZES.to_vec(),
            sigma_sbx: 10.0,
            sigma_reg: 1.0,
            regression_fraction: 0.5,
            tournament_enabled: true,
            mode: RunMode::Parametric,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    /// Number of archive cells the run maintains (0 for random search).
    pub fn archive_cells(&self) -> usize {
        match self.mode {
            RunMode::Parametric => self.cells,
            RunMode::FixedTasks { count } => count,
            RunMode::RandomSearch => 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.budget == 0 {
            problems.push("budget must be positive".to_string());
        }
        match self.mode {
            RunMode::Parametric => {
                if self.cells == 0 {
                    problems.push("cells must be at least 1".into());
                } else if self.budget <= self.cells {
                    problems.push(format!(
                        "budget ({}) must exceed cells ({})",
                        self.budget, self.cells
                    ));
                }
            }
            RunMode::FixedTasks { count } => {
                if count == 0 {
                    problems.push("mode.count must be at least 1".into());
                } else if self.budget <= count {
                    problems.push(format!(
                        "budget ({}) must exceed the fixed task count ({count})",
                        self.budget
                    ));
                }
            }
            RunMode::RandomSearch => {}
        }
        if self.tournament_sizes.is_empty() || self.tournament_sizes.contains(&0) {
            problems.push("tournament_sizes must be a non-empty list of positive sizes".into());
        } else {
            let mut sorted = self.tournament_sizes.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != self.tournament_sizes.len() {
                problems.push("tournament_sizes must be distinct".into());
            }
        }
        if !(self.sigma_sbx.is_finite() && self.sigma_sbx >= 0.0) {
            problems.push("sigma_sbx must be a finite non-negative number".into());
        }
        if !(self.sigma_reg.is_finite() && self.sigma_reg >= 0.0) {
            problems.push("sigma_reg must be a finite non-negative number".into());
        }
        if !(0.0..=1.0).contains(&self.regression_fraction) {
            problems.push("regression_fraction must lie in [0, 1]".into());
        }
        if matches!(self.mode, RunMode::FixedTasks { .. }) && self.regression_fraction > 0.0 {
            problems.push("fixed-task mode has no regression operator; set regression_fraction to 0".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }
}

/// Named algorithm variants: the full method, its four ablations, and the two baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    Ptme,
    PtmeNoRegression,
    PtmeFullRegression,
    PtmeNoTournament,
    PtmeNoRegressionNoTournament,
    MultiTask { tasks: usize },
    Random,
}

impl Method {
    pub const PARAMETRIC: [Method; 5] = [
        Method::Ptme,
        Method::PtmeNoRegression,
        Method::PtmeFullRegression,
        Method::PtmeNoTournament,
        Method::PtmeNoRegressionNoTournament,
    ];

    /// Applies the variant's switches on top of `base` (budget, cells, seed, ...).
    pub fn configure(&self, base: &RunConfig) -> RunConfig {
        let mut cfg = base.clone();
        let (fraction, tournament, mode) = match *self {
            Method::Ptme => (0.5, true, RunMode::Parametric),
            Method::PtmeNoRegression => (0.0, true, RunMode::Parametric),
            Method::PtmeFullRegression => (1.0, false, RunMode::Parametric),
            Method::PtmeNoTournament => (0.5, false, RunMode::Parametric),
            Method::PtmeNoRegressionNoTournament => (0.0, false, RunMode::Parametric),
            Method::MultiTask { tasks } => (0.0, true, RunMode::FixedTasks { count: tasks }),
            Method::Random => (0.0, false, RunMode::RandomSearch),
        };
        cfg.regression_fraction = fraction;
        cfg.tournament_enabled = tournament;
        cfg.mode = mode;
        cfg
    }

    /// Recovers the variant a configuration realises, if any.
    pub fn from_config(cfg: &RunConfig) -> Option<Method> {
        match cfg.mode {
            RunMode::RandomSearch => Some(Method::Random),
            RunMode::FixedTasks { count } => Some(Method::MultiTask { tasks: count }),
            RunMode::Parametric => {
                let reg = cfg.regression_fraction;
                match (reg, cfg.tournament_enabled) {
                    (r, true) if r == 0.5 => Some(Method::Ptme),
                    (r, true) if r == 0.0 => Some(Method::PtmeNoRegression),
                    (r, _) if r == 1.0 => Some(Method::PtmeFullRegression),
                    (r, false) if r == 0.5 => Some(Method::PtmeNoTournament),
                    (r, false) if r == 0.0 => Some(Method::PtmeNoRegressionNoTournament),
                    _ => None,
                }
            }
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Ptme => f.write_str("ptme"),
            Method::PtmeNoRegression => f.write_str("ptme_no_reg"),
            Method::PtmeFullRegression => f.write_str("ptme_full_reg"),
            Method::PtmeNoTournament => f.write_str("ptme_no_tournament"),
            Method::PtmeNoRegressionNoTournament => f.write_str("ptme_no_reg_no_tournament"),
            Method::MultiTask { tasks } => write!(f, "mtme({tasks})"),
            Method::Random => f.write_str("random"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let method = match s {
            "ptme" => Method::Ptme,
            "ptme_no_reg" => Method::PtmeNoRegression,
            "ptme_full_reg" => Method::PtmeFullRegression,
            "ptme_no_tournament" => Method::PtmeNoTournament,
            "ptme_no_reg_no_tournament" => Method::PtmeNoRegressionNoTournament,
            "random" => Method::Random,
            "mtme" => Method::MultiTask { tasks: 5_000 },
            _ => {
                let tasks = s
                    .strip_prefix("mtme(")
                    .and_then(|r| r.strip_suffix(')'))
                    .and_then(|k| k.trim().parse::<usize>().ok())
                    .ok_or_else(|| {
                        Error::invalid(format!(
                            "unknown method '{s}' (expected ptme, ptme_no_reg, ptme_full_reg, \
                             ptme_no_tournament, ptme_no_reg_no_tournament, mtme(K) or random)"
                        ))
                    })?;
                Method::MultiTask { tasks }
            }
        };
        Ok(method)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub problem: String,
    pub method: Option<String>,
    pub config: RunConfig,
    pub evaluations: usize,
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationLog {
    pub records: Vec<Evaluation>,
    pub meta: RunMetadata,
}

impl EvaluationLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// What a single engine step did to the archive.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub operator: Operator,
    pub cell: Option<usize>,
    pub previous_f: f64,
    pub f: f64,
    pub became_elite: bool,
}

/// Step-by-step driver for every run mode. Owns the archive, bandit and log.
pub struct Engine<'p, P: Problem + ?Sized> {
    problem: &'p P,
    config: RunConfig,
    rng: RunRng,
    tessellation: Option<Arc<Tessellation>>,
    archive: Archive,
    bandit: Option<BanditState>,
    records: Vec<Evaluation>,
}

impl<'p, P: Problem + ?Sized> Engine<'p, P> {
    /// Validates the configuration, builds the geometry and consumes the
    /// initialisation evaluations (one per cell).
    pub fn new(problem: &'p P, config: RunConfig) -> Result<Self> {
        config.validate()?;
        let rng = rng_from_seed(derive_seed(config.seed, Stream::Engine, 0));
        let cells = config.archive_cells();
        let tessellation = match config.mode {
            RunMode::RandomSearch => None,
            _ => {
                let mut tess = Tessellation::cvt(
                    cells,
                    problem.task_dim(),
                    derive_seed(config.seed, Stream::Geometry, 0),
                )?;
                if config.regression_fraction > 0.0 {
                    tess.build_adjacency()?;
                }
                Some(Arc::new(tess))
            }
        };
        let bandit = if config.tournament_enabled && config.mode != RunMode::RandomSearch {
            Some(BanditState::new(config.tournament_sizes.clone())?)
        } else {
            None
        };
        let mut engine = Engine {
            problem,
            records: Vec::with_capacity(config.budget),
            config,
            rng,
            tessellation,
            archive: Archive::empty(cells),
            bandit,
        };
        engine.initialize();
        Ok(engine)
    }

    fn initialize(&mut self) {
        let Some(tess) = self.tessellation.clone() else {
            return;
        };
        let dx = self.problem.solution_dim();
        for cell in 0..tess.len() {
            let theta = tess.centroid(cell).to_vec();
            let x: Vec<f64> = (0..dx).map(|_| self.rng.random()).collect();
            let f = self.problem.evaluate(&x, &theta);
            self.push(Operator::Init, theta.clone(), x.clone(), f);
            self.archive.update(cell, &theta, &x, f);
        }
    }

    fn push(&mut self, operator: Operator, theta: Vec<f64>, x: Vec<f64>, f: f64) {
        let iteration = self.records.len() as u64;
        self.records.push(Evaluation {
            iteration,
            operator,
            theta,
            x,
            f,
        });
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn archive(&self) -> &Archive {
        &self.archive
    }

    pub fn tessellation(&self) -> Option<&Arc<Tessellation>> {
        self.tessellation.as_ref()
    }

    pub fn bandit(&self) -> Option<&BanditState> {
        self.bandit.as_ref()
    }

    pub fn evaluations(&self) -> &[Evaluation] {
        &self.records
    }

    pub fn remaining(&self) -> usize {
        self.config.budget - self.records.len()
    }

    /// Runs one iteration; `None` once the budget is spent.
    pub fn step(&mut self) -> Option<StepOutcome> {
        if self.remaining() == 0 {
            return None;
        }
        Some(match self.config.mode {
            RunMode::RandomSearch => self.random_step(),
            RunMode::Parametric => self.parametric_step(),
            RunMode::FixedTasks { .. } => self.fixed_task_step(),
        })
    }

    fn random_step(&mut self) -> StepOutcome {
        let theta: Vec<f64> = (0..self.problem.task_dim()).map(|_| self.rng.random()).collect();
        let x: Vec<f64> = (0..self.problem.solution_dim()).map(|_| self.rng.random()).collect();
        let f = self.problem.evaluate(&x, &theta);
        self.push(Operator::Random, theta, x, f);
        StepOutcome {
            operator: Operator::Random,
            cell: None,
            previous_f: 0.0,
            f,
            became_elite: false,
        }
    }

    /// Tournament size for an SBX iteration, counted as selected immediately.
    fn draw_tournament_size(&mut self) -> Option<usize> {
        let bandit = self.bandit.as_mut()?;
        let size = bandit.next_size();
        bandit.record_selection(size).expect("size drawn from the bandit");
        Some(size)
    }

    fn pick_parents(&mut self) -> (usize, usize) {
        let n = self.archive.len();
        (self.rng.random_range(0..n), self.rng.random_range(0..n))
    }

    fn parametric_step(&mut self) -> StepOutcome {
        let tess = Arc::clone(self.tessellation.as_ref().expect("parametric mode has geometry"));
        let dim = self.problem.task_dim();
        let coin: f64 = self.rng.random();
        let (operator, theta, x, size) = if coin < self.config.regression_fraction {
            let theta: Vec<f64> = (0..dim).map(|_| self.rng.random()).collect();
            let x = local_linear_candidate(
                &self.archive,
                &tess,
                &theta,
                self.config.sigma_reg,
                &mut self.rng,
            );
            (Operator::Regression, theta, x, None)
        } else {
            let (a, b) = self.pick_parents();
            let size = self.draw_tournament_size();
            let p1 = self.archive.elite(a).expect("archive is full");
            let p2 = self.archive.elite(b).expect("archive is full");
            let theta = tournament_select_task(&p1.theta, size.unwrap_or(1), dim, &mut self.rng);
            let x = sbx_crossover(&p1.x, &p2.x, self.config.sigma_sbx, &mut self.rng);
            (Operator::Sbx, theta, x, size)
        };
        let cell = tess.locate(&theta);
        self.finish(operator, cell, theta, x, size)
    }

    fn fixed_task_step(&mut self) -> StepOutcome {
        let tess = Arc::clone(self.tessellation.as_ref().expect("fixed-task mode has a pool"));
        let (a, b) = self.pick_parents();
        let size = self.draw_tournament_size();
        let p1 = self.archive.elite(a).expect("archive is full");
        let p2 = self.archive.elite(b).expect("archive is full");
        let cell =
            tournament_select_from_pool(&p1.theta, size.unwrap_or(1), tess.centroids(), &mut self.rng);
        let x = sbx_crossover(&p1.x, &p2.x, self.config.sigma_sbx, &mut self.rng);
        let theta = tess.centroid(cell).to_vec();
        self.finish(Operator::FixedTask, cell, theta, x, size)
    }

    fn finish(
        &mut self,
        operator: Operator,
        cell: usize,
        theta: Vec<f64>,
        x: Vec<f64>,
        size: Option<usize>,
    ) -> StepOutcome {
        let f = self.problem.evaluate(&x, &theta);
        let previous_f = self.archive.fitness(cell);
        let became_elite = self.archive.update(cell, &theta, &x, f);
        self.push(operator, theta, x, f);
        if let (Some(size), true) = (size, became_elite) {
            if let Some(bandit) = self.bandit.as_mut() {
                bandit.record_success(size).expect("selected earlier this iteration");
            }
        }
        StepOutcome {
            operator,
            cell: Some(cell),
            previous_f,
            f,
            became_elite,
        }
    }

    /// Spends the remaining budget.
    pub fn run_to_completion(&mut self) {
        while self.step().is_some() {}
    }

    pub fn into_output(self, wall_time_secs: f64) -> RunOutput {
        let meta = RunMetadata {
            problem: self.problem.name(),
            method: Method::from_config(&self.config).map(|m| m.to_string()),
            evaluations: self.records.len(),
            config: self.config,
            wall_time_secs,
        };
        RunOutput {
            log: EvaluationLog {
                records: self.records,
                meta,
            },
            archive: self.archive,
            tessellation: self.tessellation,
            bandit: self.bandit,
        }
    }
}

/// Everything a finished run leaves behind.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub log: EvaluationLog,
    pub archive: Archive,
    pub tessellation: Option<Arc<Tessellation>>,
    pub bandit: Option<BanditState>,
}

/// Runs any mode to completion.
pub fn run<P: Problem + ?Sized>(problem: &P, config: &RunConfig) -> Result<RunOutput> {
    let start = Instant::now();
    let mut engine = Engine::new(problem, config.clone())?;
    engine.run_to_completion();
    Ok(engine.into_output(start.elapsed().as_secs_f64()))
}

fn run_mode<P: Problem + ?Sized>(
    problem: &P,
    config: &RunConfig,
    wanted: fn(&RunMode) -> bool,
    label: &str,
) -> Result<EvaluationLog> {
    if !wanted(&config.mode) {
        return Err(Error::invalid(format!("configuration is not in {label} mode")));
    }
    Ok(run(problem, config)?.log)
}

pub fn ptme_run<P: Problem + ?Sized>(problem: &P, config: &RunConfig) -> Result<EvaluationLog> {
    run_mode(problem, config, |m| *m == RunMode::Parametric, "parametric")
}

pub fn fixed_task_run<P: Problem + ?Sized>(problem: &P, config: &RunConfig) -> Result<EvaluationLog> {
    run_mode(problem, config, |m| matches!(m, RunMode::FixedTasks { .. }), "fixed-task")
}

pub fn random_search_run<P: Problem + ?Sized>(problem: &P, config: &RunConfig) -> Result<EvaluationLog> {
    run_mode(problem, config, |m| *m == RunMode::RandomSearch, "random-search")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{Archery, LinearToy};

    fn small(method: Method, budget: usize, cells: usize, seed: u64) -> RunConfig {
        let base = RunConfig {
            budget,
            cells,
            seed,
            ..RunConfig::default()
        };
        method.configure(&base)
    }

    #[test]
    fn initialisation_uses_one_evaluation_per_centroid() {
        let cfg = small(Method::Ptme, 500, 200, 1);
        let engine = Engine::new(&Archery, cfg).unwrap();
        let evals = engine.evaluations();
        assert_eq!(evals.len(), 200);
        let tess = engine.tessellation().unwrap();
        for (cell, e) in evals.iter().enumerate() {
            assert_eq!(e.operator, Operator::Init);
            assert_eq!(e.theta, tess.centroid(cell));
            assert!((0.0..=1.0).contains(&e.f));
        }
        assert_eq!(engine.archive().filled(), 200);
    }

    #[test]
    fn every_mode_spends_exactly_the_budget() {
        let toy = LinearToy::new(0);
        for method in Method::PARAMETRIC
            .into_iter()
            .chain([Method::MultiTask { tasks: 50 }, Method::Random])
        {
            let out = run(&toy, &small(method, 700, 50, 3)).unwrap();
            assert_eq!(out.log.len(), 700, "{method}");
            for (i, e) in out.log.records.iter().enumerate() {
                assert_eq!(e.iteration, i as u64);
            }
        }
    }

    #[test]
    fn ablation_wiring() {
        let toy = LinearToy::new(1);
        let ops = |m: Method| -> Vec<Operator> {
            run(&toy, &small(m, 800, 50, 2)).unwrap().log.records.iter().map(|e| e.operator).collect()
        };
        assert!(!ops(Method::PtmeNoRegressionNoTournament).contains(&Operator::Regression));
        assert!(!ops(Method::PtmeNoRegression).contains(&Operator::Regression));
        assert!(!ops(Method::PtmeFullRegression).contains(&Operator::Sbx));
        let full = ops(Method::Ptme);
        assert!(full.contains(&Operator::Sbx) && full.contains(&Operator::Regression));
    }

    #[test]
    fn bandit_only_moves_on_tournament_iterations() {
        let toy = LinearToy::new(2);
        let out = run(&toy, &small(Method::Ptme, 2_000, 50, 4)).unwrap();
        let sbx = out.log.records.iter().filter(|e| e.operator == Operator::Sbx).count() as u64;
        let bandit = out.bandit.unwrap();
        assert_eq!(bandit.selected().iter().sum::<u64>(), sbx);
        assert!(run(&toy, &small(Method::PtmeNoTournament, 600, 50, 4)).unwrap().bandit.is_none());
    }

    #[test]
    fn cell_fitness_never_decreases() {
        let mut engine = Engine::new(&Archery, small(Method::Ptme, 5_000, 100, 5)).unwrap();
        let mut trace: Vec<f64> = (0..100).map(|c| engine.archive().fitness(c)).collect();
        while let Some(step) = engine.step() {
            let cell = step.cell.unwrap();
            let now = engine.archive().fitness(cell);
            assert!(now >= trace[cell]);
            assert_eq!(step.became_elite, step.f >= step.previous_f);
            trace[cell] = now;
        }
    }

    #[test]
    fn elites_stay_in_their_own_cell() {
        let out = run(&Archery, &small(Method::Ptme, 3_000, 100, 6)).unwrap();
        let tess = out.tessellation.unwrap();
        for (cell, slot) in out.archive.cells().iter().enumerate() {
            let elite = slot.as_ref().unwrap();
            assert_eq!(tess.nearest_cell(&elite.theta).unwrap(), cell);
        }
    }

    #[test]
    fn same_seed_same_log() {
        let cfg = small(Method::Ptme, 2_000, 100, 7);
        let a = run(&Archery, &cfg).unwrap().log.records;
        let b = run(&Archery, &cfg).unwrap().log.records;
        assert_eq!(a, b);
        let c = run(&Archery, &cfg.clone().with_seed(8)).unwrap().log.records;
        assert_ne!(a, c);
    }

    #[test]
    fn fixed_tasks_stay_in_the_pool() {
        let cfg = small(Method::MultiTask { tasks: 200 }, 3_000, 200, 9);
        let out = run(&Archery, &cfg).unwrap();
        let pool = out.tessellation.unwrap();
        for e in &out.log.records {
            assert!(pool.centroids().iter().any(|c| *c == e.theta));
        }
        assert_eq!(out.archive.len(), 200);
    }

    #[test]
    fn single_fixed_task_is_elitist() {
        let cfg = small(Method::MultiTask { tasks: 1 }, 400, 1, 10);
        let mut engine = Engine::new(&Archery, cfg).unwrap();
        let mut best = engine.archive().fitness(0);
        while engine.step().is_some() {
            let now = engine.archive().fitness(0);
            assert!(now >= best);
            best = now;
        }
    }

    #[test]
    fn parametric_tasks_are_distinct() {
        let out = run(&Archery, &small(Method::Ptme, 5_000, 100, 11)).unwrap();
        let mut thetas: Vec<_> = out.log.records.iter().map(|e| (e.theta[0].to_bits(), e.theta[1].to_bits())).collect();
        thetas.sort_unstable();
        thetas.dedup();
        assert!(thetas.len() as f64 >= 0.999 * 5_000.0);
    }

    #[test]
    fn validation_lists_every_offending_field() {
        let cfg = RunConfig {
            budget: 10,
            cells: 20,
            sigma_sbx: -1.0,
            regression_fraction: 1.5,
            tournament_sizes: vec![],
            ..RunConfig::default()
        };
        match cfg.validate() {
            Err(Error::Validation(list)) => assert_eq!(list.len(), 4, "{list:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::PARAMETRIC
            .into_iter()
            .chain([Method::MultiTask { tasks: 1000 }, Method::Random])
        {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
            assert_eq!(Method::from_config(&m.configure(&RunConfig::default())), Some(m));
        }
        assert!("ptme_turbo".parse::<Method>().is_err());
    }

    #[test]
    fn mode_specific_entry_points_check_the_mode() {
        let toy = LinearToy::new(0);
        let cfg = small(Method::Random, 100, 10, 0);
        assert!(ptme_run(&toy, &cfg).is_err());
        assert_eq!(random_search_run(&toy, &cfg).unwrap().len(), 100);
    }
}
