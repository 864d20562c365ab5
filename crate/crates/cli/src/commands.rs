use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use ptme_core::distill::distill_records;
use ptme_core::engine;
use ptme_core::logfile::{self, LOG_FILE};
use ptme_core::metrics::{mean_score, probe_tasks, ResolutionSchedule};
use ptme_core::{Benchmark, Error, Evaluation, GeometryCache, MlpPolicy, Problem, Rearchiver, RunMetadata, TrainSettings};
use rayon::prelude::*;

use crate::manifest::{parse_list, ExperimentManifest};
use crate::tables::{self, InferenceRow, QdRow, SummaryRow};
use crate::{CompareArgs, DistillArgs, InferArgs, MetricsArgs, RunArgs};

/// 0 success, 1 validation, 2 I/O, 3 numerical failure.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<Error>() {
            return match err {
                Error::Io { .. } => 2,
                Error::Numerical(_) => 3,
                _ => 1,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 2;
        }
    }
    1
}

fn thread_pool(jobs: Option<usize>) -> anyhow::Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()?)
}

fn create_dir(dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.to_path_buf(), source: e })
}

pub fn run(args: RunArgs) -> anyhow::Result<()> {
    let mut manifest = match &args.manifest {
        Some(path) => ExperimentManifest::load(path)?,
        None => ExperimentManifest::default(),
    };
    manifest.apply_flags(&args)?;
    let exp = manifest.resolve()?;
    let pool = thread_pool(args.jobs)?;
    let written: Vec<ptme_core::Result<PathBuf>> = pool.install(|| {
        exp.seeds
            .par_iter()
            .map(|&seed| {
                let config = exp.config.clone().with_seed(seed);
                let mut out = engine::run(&exp.problem, &config)?;
                out.log.meta.method = Some(exp.method.to_string());
                logfile::save_run(&out.log, &exp.run_dir(seed))
            })
            .collect()
    });
    for path in written {
        println!("{}", path?.display());
    }
    Ok(())
}

/// Log files under `paths`: files as given, directories searched for `log.jsonl`.
fn discover_logs(paths: &[PathBuf]) -> anyhow::Result<Vec<PathBuf>> {
    fn walk(dir: &Path, found: &mut Vec<PathBuf>) -> Result<(), Error> {
        let entries = fs::read_dir(dir).map_err(|e| Error::Io { path: dir.to_path_buf(), source: e })?;
        let mut children: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
        children.sort();
        for child in children {
            if child.is_dir() {
                walk(&child, found)?;
            } else if child.file_name().is_some_and(|n| n == LOG_FILE) {
                found.push(child);
            }
        }
        Ok(())
    }
    let mut found = Vec::new();
    for p in paths {
        if p.is_dir() {
            walk(p, &mut found)?;
        } else {
            found.push(p.clone());
        }
    }
    if found.is_empty() {
        return Err(Error::Validation(vec!["no log files found".into()]).into());
    }
    Ok(found)
}

/// Method and seed of a run: from its metadata, else from `<method>/<seed>/log.jsonl`.
fn run_label(path: &Path, meta: Option<&RunMetadata>) -> (String, u64) {
    let dir = path.parent();
    let dir_seed = dir.and_then(|d| d.file_name()).and_then(|n| n.to_str()?.parse().ok());
    let dir_method = dir
        .and_then(Path::parent)
        .and_then(|d| d.file_name())
        .map(|n| n.to_string_lossy().into_owned());
    match meta {
        Some(m) => (
            m.method.clone().or(dir_method).unwrap_or_else(|| m.problem.clone()),
            m.config.seed,
        ),
        None => (dir_method.unwrap_or_else(|| "unknown".into()), dir_seed.unwrap_or(0)),
    }
}

fn task_dim(records: &[Evaluation], meta: Option<&RunMetadata>, path: &Path) -> anyhow::Result<usize> {
    if let Some(problem) = meta.and_then(|m| m.problem.parse::<Benchmark>().ok()) {
        return Ok(problem.task_dim());
    }
    records
        .first()
        .map(|r| r.theta.len())
        .ok_or_else(|| Error::Validation(vec![format!("{}: log is empty", path.display())]).into())
}

struct RunMetrics {
    method: String,
    seed: u64,
    profile: Vec<ptme_core::ResolutionScore>,
    inference: Option<f64>,
}

fn previous_inference(log: &Path) -> anyhow::Result<Option<f64>> {
    let report = log.with_file_name(tables::INFERENCE_CSV);
    if !report.exists() {
        return Ok(None);
    }
    let rows: Vec<InferenceRow> = tables::read_csv(&report)?;
    Ok(rows.last().map(|r| r.inference_score))
}

pub fn metrics(args: MetricsArgs) -> anyhow::Result<()> {
    let schedule = args.schedule.as_deref().map(str::parse::<ResolutionSchedule>).transpose()?;
    let logs = discover_logs(&args.logs)?;
    let cache = GeometryCache::new();
    let pool = thread_pool(args.jobs)?;
    let results: Vec<anyhow::Result<RunMetrics>> = pool.install(|| {
        logs.par_iter()
            .map(|path| {
                let records = logfile::load_records(path)?;
                let meta = logfile::load_metadata(path)?;
                let (method, seed) = run_label(path, meta.as_ref());
                let dim = task_dim(&records, meta.as_ref(), path)?;
                let schedule = match &schedule {
                    Some(s) => s.clone(),
                    None => ResolutionSchedule::for_budget(records.len())?,
                };
                let profile = Rearchiver::new(dim, args.geometry_seed, &cache).qd_profile(&records, &schedule)?;
                Ok(RunMetrics {
                    method,
                    seed,
                    profile,
                    inference: previous_inference(path)?,
                })
            })
            .collect()
    });
    let runs = results.into_iter().collect::<anyhow::Result<Vec<_>>>()?;

    let mut qd_rows = Vec::new();
    let mut summary = Vec::new();
    for r in &runs {
        qd_rows.extend(r.profile.iter().map(|p| QdRow {
            method: r.method.clone(),
            seed: r.seed,
            resolution: p.resolution,
            qd_score: p.qd_score,
        }));
        summary.push(SummaryRow {
            method: r.method.clone(),
            seed: r.seed,
            mr_qd_score: mean_score(&r.profile),
            inference_score: r.inference,
        });
    }
    let samples: Vec<(String, f64)> = summary.iter().map(|s| (s.method.clone(), s.mr_qd_score)).collect();
    let pvalues = tables::pvalue_table(&samples)?;

    create_dir(&args.out)?;
    tables::write_csv(&args.out.join(tables::QD_SCORES_CSV), &qd_rows)?;
    tables::write_csv(&args.out.join(tables::SUMMARY_CSV), &summary)?;
    tables::write_csv(&args.out.join(tables::PVALUES_CSV), &pvalues)?;
    for s in &summary {
        println!("{} seed {}: MR-QD-Score {}", s.method, s.seed, s.mr_qd_score);
    }
    Ok(())
}

fn resolve_problem(flag: Option<&str>, meta: Option<&RunMetadata>) -> anyhow::Result<Benchmark> {
    let name = flag.or(meta.map(|m| m.problem.as_str())).ok_or_else(|| {
        Error::Validation(vec!["problem: not recorded next to the log; pass --problem".into()])
    })?;
    Ok(name.parse()?)
}

pub fn distill(args: DistillArgs) -> anyhow::Result<()> {
    if let Some(n) = args.resolution.filter(|&n| n < 2) {
        return Err(Error::Validation(vec![format!(
            "resolution: must be at least 2 to fit a map (got {n})"
        )])
        .into());
    }
    let records = logfile::load_records(&args.log)?;
    let meta = logfile::load_metadata(&args.log)?;
    let problem = resolve_problem(args.problem.as_deref(), meta.as_ref())?;
    let (method, seed) = run_label(&args.log, meta.as_ref());
    let resolution = args.resolution.unwrap_or((records.len() / 20).max(2));

    let cache = GeometryCache::new();
    let rearchiver = Rearchiver::new(problem.task_dim(), args.geometry_seed, &cache);
    let d = distill_records(&records, &rearchiver, resolution, &TrainSettings::default(), seed)?;
    let probes = probe_tasks(args.probes, problem.task_dim(), args.probe_seed)?;
    let score = d.policy.inference_score(&problem, probes.centroids())?;

    let policy_path = args.policy.unwrap_or_else(|| args.log.with_file_name(tables::POLICY_JSON));
    d.policy.save(&policy_path)?;
    let report_path = args.report.unwrap_or_else(|| args.log.with_file_name(tables::INFERENCE_CSV));
    let row = InferenceRow {
        method,
        seed,
        resolution,
        elites: d.elites,
        best_epoch: d.report.best_epoch,
        validation_loss: d.report.best_validation_loss,
        probes: args.probes,
        inference_score: score,
    };
    tables::write_csv(&report_path, &[row])?;
    println!("inference score {score} ({} elites at resolution {resolution})", d.elites);
    Ok(())
}

pub fn infer(args: InferArgs) -> anyhow::Result<()> {
    let policy = MlpPolicy::load(&args.policy)?;
    if let Some(theta) = &args.theta {
        let theta: Vec<f64> = parse_list(theta)
            .ok_or_else(|| Error::Validation(vec![format!("theta: cannot parse '{theta}'")]))?;
        let x = policy.infer(&theta)?;
        let text: Vec<String> = x.iter().map(f64::to_string).collect();
        println!("{}", text.join(","));
        return Ok(());
    }
    let problem = resolve_problem(args.problem.as_deref(), None)?;
    let probes = probe_tasks(args.probes, problem.task_dim(), args.probe_seed)?;
    let score = policy.inference_score(&problem, probes.centroids())?;
    println!("{score}");
    Ok(())
}

pub fn compare(args: CompareArgs) -> anyhow::Result<()> {
    let rows: Vec<SummaryRow> = tables::read_csv(&args.summary)?;
    let samples = rows
        .iter()
        .map(|r| {
            let value = match args.metric.as_str() {
                "mr_qd_score" => Some(r.mr_qd_score),
                "inference_score" => r.inference_score,
                other => {
                    return Err(Error::Validation(vec![format!(
                        "metric: expected mr_qd_score or inference_score, got '{other}'"
                    )]))
                }
            };
            value.map(|v| (r.method.clone(), v)).ok_or_else(|| {
                Error::Validation(vec![format!("{} seed {} has no {}", r.method, r.seed, args.metric)])
            })
        })
        .collect::<Result<Vec<_>, _>>()
        .with_context(|| format!("reading {}", args.summary.display()))?;
    let table = tables::pvalue_table(&samples)?;
    let mut stdout = csv::Writer::from_writer(std::io::stdout());
    for r in &table {
        stdout.serialize(r)?;
    }
    stdout.flush()?;
    if let Some(out) = &args.out {
        tables::write_csv(out, &table)?;
    }
    Ok(())
}
