//! Multi-start experiments: shared start points, parallel runs, per-variant
//! Pareto ratios.

use std::collections::BTreeMap;
use std::time::Instant;

use mgd_core::descent::{run_mgd, RunResult, Termination};
use mgd_core::metrics::{globally_nondominated, pareto_ratio_of_runs};
use mgd_core::problems::{sample_starts, StartSampler, GENERATOR_NAME};
use mgd_core::Problem;
use rayon::prelude::*;
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, TraceLevel, Variant};
use crate::error::{HarnessError, HarnessResult};
use crate::output;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub index: usize,
    pub termination: Option<Termination>,
    pub steps: usize,
    pub fallback_steps: usize,
    pub stored_points: usize,
    pub stored_before_pruning: usize,
    pub contributes: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantReport {
    pub variant: Variant,
    pub label: String,
    /// Global Pareto ratio over the runs that completed; `None` if none did.
    pub pareto_ratio: Option<f64>,
    pub contributing: usize,
    pub completed: usize,
    pub failures: usize,
    pub terminations: BTreeMap<String, usize>,
    pub mean_steps: f64,
    pub mean_fallback_steps: f64,
    pub runs: Vec<RunSummary>,
}

/// Settings that determine the results, echoed into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub problem: String,
    pub n: usize,
    pub m: usize,
    pub n_starts: usize,
    pub seed: u64,
    pub generator: String,
    pub shared_starts: bool,
    pub c1: f64,
    pub alpha: f64,
    pub eta0: f64,
    pub theta: usize,
    pub eta_hat: f64,
    pub epsilon: f64,
    pub max_iters: usize,
    pub strict_semantics: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ConfigEcho,
    pub variants: Vec<VariantReport>,
}

impl ExperimentReport {
    pub fn variant(&self, v: Variant) -> Option<&VariantReport> {
        self.variants.iter().find(|r| r.variant == v)
    }
}

/// Wall-clock times, kept apart from the report so identical configurations
/// give byte-identical reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total_secs: f64,
    pub per_variant: BTreeMap<String, f64>,
}

#[derive(Debug)]
pub struct VariantRuns {
    pub variant: Variant,
    pub runs: Vec<Result<RunResult, String>>,
}

impl VariantRuns {
    fn completed(&self) -> Vec<(usize, &RunResult)> {
        self.runs.iter().enumerate().filter_map(|(j, r)| r.as_ref().ok().map(|r| (j, r))).collect()
    }
}

/// A globally non-dominated output point and the run that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontPoint {
    pub run: usize,
    pub x: Vec<f64>,
    pub f: Vec<f64>,
}

pub fn build_pool(workers: Option<usize>) -> HarnessResult<ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))
}

pub fn experiment_starts(cfg: &ExperimentConfig, problem: &Problem) -> HarnessResult<Vec<Vec<f64>>> {
    let sampler = StartSampler { bounds: problem.domain.clone(), count: cfg.n_starts, seed: cfg.seed };
    Ok(sample_starts(&sampler)?)
}

pub fn run_variant(
    problem: &Problem,
    starts: &[Vec<f64>],
    cfg: &ExperimentConfig,
    variant: Variant,
    pool: &ThreadPool,
) -> VariantRuns {
    let mgd = cfg.mgd_config(variant, problem);
    let runs = pool.install(|| {
        starts.par_iter().map(|x0| run_mgd(problem, x0, &mgd).map_err(|e| e.to_string())).collect()
    });
    VariantRuns { variant, runs }
}

pub fn summarize(vr: &VariantRuns) -> VariantReport {
    let completed = vr.completed();
    let refs: Vec<&RunResult> = completed.iter().map(|(_, r)| *r).collect();
    let ratio = (!refs.is_empty()).then(|| pareto_ratio_of_runs(&refs).expect("completed runs have output points"));

    let mut contributes = vec![false; vr.runs.len()];
    if let Some(r) = &ratio {
        for ((j, _), c) in completed.iter().zip(&r.per_run) {
            contributes[*j] = *c;
        }
    }
    let mut terminations = BTreeMap::new();
    let runs: Vec<RunSummary> = vr
        .runs
        .iter()
        .enumerate()
        .map(|(j, r)| match r {
            Ok(run) => {
                *terminations.entry(format!("{:?}", run.termination)).or_insert(0) += 1;
                RunSummary {
                    index: j,
                    termination: Some(run.termination),
                    steps: run.steps,
                    fallback_steps: run.fallback_steps,
                    stored_points: run.stored_set.len(),
                    stored_before_pruning: run.stored_before_pruning,
                    contributes: contributes[j],
                    error: None,
                }
            }
            Err(e) => RunSummary {
                index: j,
                termination: None,
                steps: 0,
                fallback_steps: 0,
                stored_points: 0,
                stored_before_pruning: 0,
                contributes: false,
                error: Some(e.clone()),
            },
        })
        .collect();
    let n_ok = refs.len().max(1) as f64;
    VariantReport {
        variant: vr.variant,
        label: vr.variant.label(),
        pareto_ratio: ratio.as_ref().map(|r| r.ratio),
        contributing: ratio.as_ref().map_or(0, |r| r.contributing),
        completed: refs.len(),
        failures: vr.runs.len() - refs.len(),
        terminations,
        mean_steps: refs.iter().map(|r| r.steps as f64).sum::<f64>() / n_ok,
        mean_fallback_steps: refs.iter().map(|r| r.fallback_steps as f64).sum::<f64>() / n_ok,
        runs,
    }
}

/// The union of every run's globally non-dominated output points.
pub fn front_points(vr: &VariantRuns) -> Vec<FrontPoint> {
    let completed = vr.completed();
    let refs: Vec<&RunResult> = completed.iter().map(|(_, r)| *r).collect();
    let kept = globally_nondominated(&refs);
    let mut out = Vec::new();
    for ((j, run), ks) in completed.iter().zip(kept) {
        for k in ks {
            let (x, f) = match run.stored_set.get(k) {
                Some(p) => (p.x.clone(), p.f.clone()),
                None => (run.x_hat.clone(), run.f_hat.clone()),
            };
            out.push(FrontPoint { run: *j, x, f });
        }
    }
    out
}

pub fn config_echo(cfg: &ExperimentConfig, problem: &Problem) -> ConfigEcho {
    let eta_hat = cfg.mgd_config(cfg.variants[0], problem).backtrack.eta_hat;
    ConfigEcho {
        problem: cfg.problem.to_string(),
        n: problem.n,
        m: problem.m,
        n_starts: cfg.n_starts,
        seed: cfg.seed,
        generator: GENERATOR_NAME.to_string(),
        shared_starts: true,
        c1: cfg.c1,
        alpha: cfg.alpha,
        eta0: cfg.eta0,
        theta: cfg.theta,
        eta_hat,
        epsilon: cfg.epsilon,
        max_iters: cfg.max_iters_for(problem),
        strict_semantics: cfg.strict_semantics,
    }
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    pub timings: Timings,
}

/// Runs every requested variant from one shared set of start points.
///
/// When `cfg.out_dir` is set, each variant's files are written as soon as
/// it finishes and its runs are dropped, followed by the report.
pub fn run_experiment(cfg: &ExperimentConfig) -> HarnessResult<ExperimentOutcome> {
    run_experiment_with(cfg, |_| {})
}

/// [`run_experiment`] that also hands each variant's runs to `inspect`
/// before they are dropped.
pub fn run_experiment_with(
    cfg: &ExperimentConfig,
    mut inspect: impl FnMut(&VariantRuns),
) -> HarnessResult<ExperimentOutcome> {
    cfg.validate()?;
    let t0 = Instant::now();
    let problem = cfg.problem.build();
    let starts = experiment_starts(cfg, &problem)?;
    let pool = build_pool(cfg.workers)?;
    let mut variants = Vec::new();
    let mut per_variant = BTreeMap::new();
    for &variant in &cfg.variants {
        let t = Instant::now();
        let vr = run_variant(&problem, &starts, cfg, variant, &pool);
        variants.push(summarize(&vr));
        if let Some(dir) = &cfg.out_dir {
            output::write_variant_files(dir, &vr, cfg.format, cfg.trace != TraceLevel::Off)?;
        }
        inspect(&vr);
        per_variant.insert(variant.label(), t.elapsed().as_secs_f64());
    }
    let report = ExperimentReport { config: config_echo(cfg, &problem), variants };
    let timings = Timings { total_secs: t0.elapsed().as_secs_f64(), per_variant };
    if let Some(dir) = &cfg.out_dir {
        output::write_report(dir, &report, Some(&timings))?;
    }
    Ok(ExperimentOutcome { report, timings })
}
