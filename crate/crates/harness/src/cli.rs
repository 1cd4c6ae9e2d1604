//! Command-line interface of the `mgd` binary.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mgd_core::metrics::{scan_row, GridMask, ScanSpec};
use rayon::prelude::*;

use crate::config::{parse_kv, BacktrackArg, DirectionArg, ExperimentConfig, OutputFormat, ProblemId, TraceLevel, Variant};
use crate::error::{HarnessError, HarnessResult};
use crate::experiment::{build_pool, front_points, run_experiment, run_experiment_with, ExperimentReport};
use crate::output::{self, fmt_f64};

/// Environment variable used as the seed when neither a config file nor
/// `--seed` gives one.
pub const SEED_ENV: &str = "MGD_SEED";

pub const DEFAULT_OUT: &str = "mgd-output";

#[derive(Debug, Parser)]
#[command(name = "mgd", version, about = "Multi-start multiple-gradient descent experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one problem with the selected variants (all four by default).
    Run(RunArgs),
    /// Run every problem with all four variants and print the ratio table.
    #[command(name = "table1")]
    AllProblems(SettingsArgs),
    /// Mark grid cells where two normalized gradients cancel.
    Scan(ScanArgs),
    /// Run like `run` and print the globally non-dominated output points.
    Fronts(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, value_enum)]
    pub problem: Option<ProblemId>,
    #[arg(long, value_enum)]
    pub direction: Option<DirectionArg>,
    #[arg(long, value_enum)]
    pub backtracking: Option<BacktrackArg>,
    #[command(flatten)]
    pub settings: SettingsArgs,
}

#[derive(Debug, Args)]
pub struct SettingsArgs {
    #[arg(long)]
    pub n_starts: Option<usize>,
    /// Falls back to MGD_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub eta0: Option<f64>,
    #[arg(long)]
    pub theta: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Output directory [default: mgd-output]
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Worker threads [default: all cores]
    #[arg(long)]
    pub workers: Option<usize>,
    /// Do not stop early on a null direction; repeat null steps until the
    /// iteration budget runs out.
    #[arg(long = "paper-semantics", alias = "strict-semantics")]
    pub strict_semantics: bool,
    /// Trajectory files to write.
    #[arg(long, value_enum)]
    pub trace: Option<TraceLevel>,
    /// Flat key=value file; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long, value_enum)]
    pub problem: ProblemId,
    /// Two 1-based objective indices, e.g. `1,3`.
    #[arg(long, value_parser = parse_pair)]
    pub pair: (usize, usize),
    #[arg(long)]
    pub tol: f64,
    /// Cells per coordinate [default: 400 in 2-D, 60 otherwise]
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutputFormat,
    #[arg(long)]
    pub workers: Option<usize>,
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected two indices like `1,3`")?;
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("invalid index `{t}`"));
    let (a, b) = (parse(a)?, parse(b)?);
    if a == 0 || b == 0 {
        return Err("indices are 1-based".into());
    }
    Ok((a, b))
}

impl SettingsArgs {
    /// Builds the configuration: defaults, then MGD_SEED, then the config
    /// file, then flags. Returns whether `problem` was set by the file.
    fn build(&self, seed_env: Option<&str>) -> HarnessResult<(ExperimentConfig, bool)> {
        let mut cfg = ExperimentConfig::default();
        if let Some(s) = seed_env {
            cfg.seed = s.trim().parse().map_err(|_| HarnessError::Config(format!("invalid {SEED_ENV} `{s}`")))?;
        }
        let mut file_problem = false;
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(HarnessError::io(path))?;
            for (lineno, k, v) in parse_kv(&text)? {
                file_problem |= k == "problem";
                cfg.apply(&k, &v).map_err(|e| HarnessError::Config(format!("{}:{lineno}: {e}", path.display())))?;
            }
        }
        macro_rules! set {
            ($($field:ident),*) => {$(if let Some(v) = self.$field { cfg.$field = v; })*};
        }
        set!(n_starts, seed, c1, alpha, eta0, theta, epsilon, format, trace);
        if self.max_iters.is_some() {
            cfg.max_iters = self.max_iters;
        }
        if self.workers.is_some() {
            cfg.workers = self.workers;
        }
        if self.strict_semantics {
            cfg.strict_semantics = true;
        }
        if let Some(out) = &self.out {
            cfg.out_dir = Some(out.clone());
        }
        if cfg.out_dir.is_none() {
            cfg.out_dir = Some(PathBuf::from(DEFAULT_OUT));
        }
        Ok((cfg, file_problem))
    }
}

impl RunArgs {
    fn build(&self, seed_env: Option<&str>) -> HarnessResult<ExperimentConfig> {
        let (mut cfg, file_problem) = self.settings.build(seed_env)?;
        match self.problem {
            Some(p) => cfg.problem = p,
            None if file_problem => {}
            None => return Err(HarnessError::Config("--problem is required".into())),
        }
        if let Some(d) = self.direction {
            cfg.apply("direction", d_str(d))?;
        }
        if let Some(b) = self.backtracking {
            cfg.apply("backtracking", b_str(b))?;
        }
        Ok(cfg)
    }
}

fn d_str(d: DirectionArg) -> &'static str {
    match d {
        DirectionArg::LpBase => "lp-base",
        DirectionArg::LpNew => "lp-new",
    }
}

fn b_str(b: BacktrackArg) -> &'static str {
    match b {
        BacktrackArg::BtBase => "bt-base",
        BacktrackArg::BtNew => "bt-new",
    }
}

/// Parses `args` (program name first) and runs the command. Help and
/// version exit 0, usage errors 1, runtime failures 2.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let seed_env = std::env::var(SEED_ENV).ok();
    match execute(&cli.command, seed_env.as_deref()) {
        Ok(text) => {
            let mut out = std::io::stdout().lock();
            let _ = out.write_all(text.as_bytes());
            let _ = out.flush();
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 1 } else { 2 })
        }
    }
}

/// Runs one command and returns what it prints on success.
pub fn execute(command: &Command, seed_env: Option<&str>) -> HarnessResult<String> {
    match command {
        Command::Run(args) => {
            let cfg = args.build(seed_env)?;
            let outcome = run_experiment(&cfg)?;
            let mut text = output::render_report(&outcome.report);
            let _ = writeln!(text, "\nwrote {}", out_dir(&cfg).display());
            Ok(text)
        }
        Command::AllProblems(settings) => all_problems(settings, seed_env),
        Command::Scan(args) => scan(args),
        Command::Fronts(args) => fronts(&args.build(seed_env)?),
    }
}

fn out_dir(cfg: &ExperimentConfig) -> &Path {
    cfg.out_dir.as_deref().unwrap_or(Path::new(DEFAULT_OUT))
}

fn all_problems(settings: &SettingsArgs, seed_env: Option<&str>) -> HarnessResult<String> {
    let (base, _) = settings.build(seed_env)?;
    let root = out_dir(&base).to_path_buf();
    let mut reports: Vec<ExperimentReport> = Vec::new();
    for problem in ProblemId::ALL {
        let cfg = ExperimentConfig {
            problem,
            variants: Variant::ALL.to_vec(),
            out_dir: Some(root.join(problem.as_str())),
            ..base.clone()
        };
        reports.push(run_experiment(&cfg)?.report);
    }
    Ok(render_table(&reports, &root))
}

fn render_table(reports: &[ExperimentReport], root: &Path) -> String {
    let mut s = String::new();
    let _ = write!(s, "{:<16}", "problem");
    for v in Variant::ALL {
        let _ = write!(s, " {:>16}", v.label());
    }
    let _ = writeln!(s);
    for r in reports {
        let _ = write!(s, "{:<16}", r.config.problem);
        for v in Variant::ALL {
            let cell = r
                .variant(v)
                .and_then(|vr| vr.pareto_ratio)
                .map_or_else(|| "n/a".to_string(), |p| format!("{:.2}%", 100.0 * p));
            let _ = write!(s, " {cell:>16}");
        }
        let _ = writeln!(s);
    }
    let _ = writeln!(s, "\nwrote {}", root.display());
    s
}

fn fronts(cfg: &ExperimentConfig) -> HarnessResult<String> {
    let mut text = String::new();
    let mut header_done = false;
    run_experiment_with(cfg, |vr| {
        for p in front_points(vr) {
            if !header_done {
                let xs = (1..=p.x.len()).map(|i| format!(",x{i}")).collect::<String>();
                let fs = (1..=p.f.len()).map(|i| format!(",f{i}")).collect::<String>();
                let _ = writeln!(text, "variant,run{xs}{fs}");
                header_done = true;
            }
            let vals: String = p.x.iter().chain(&p.f).map(|v| format!(",{}", fmt_f64(*v))).collect();
            let _ = writeln!(text, "{},{}{vals}", vr.variant.label(), p.run);
        }
    })?;
    Ok(text)
}

/// Runs a critical-region scan, rows in parallel, and writes the mask.
pub fn scan(args: &ScanArgs) -> HarnessResult<String> {
    let problem = args.problem.build();
    let resolution = args.resolution.unwrap_or(if problem.n <= 2 { 400 } else { 60 });
    let spec = ScanSpec::new(problem.domain.clone(), resolution, (args.pair.0 - 1, args.pair.1 - 1), args.tol);
    spec.validate(&problem).map_err(|e| HarnessError::Config(e.to_string()))?;
    if args.workers == Some(0) {
        return Err(HarnessError::Config("workers must be positive".into()));
    }
    let pool = build_pool(args.workers)?;
    let rows: Vec<Vec<bool>> = pool.install(|| {
        (0..spec.num_rows()).into_par_iter().map(|r| scan_row(&problem, &spec, r)).collect::<Result<_, _>>()
    })?;
    let mask = GridMask { resolution, dim: problem.n, marks: rows.concat() };
    let dir = args.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let path = dir.join(format!("scan_{}_{}-{}.{}", args.problem, args.pair.0, args.pair.1, args.format.extension()));
    output::write_scan(&path, args.problem.as_str(), &spec, &mask, args.format)?;
    Ok(format!("marked {} of {} cells\nwrote {}\n", mask.count(), mask.marks.len(), path.display()))
}
