//! Experiment configuration: defaults, flat `key=value` files and overrides.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use mgd_core::descent::{BacktrackParams, BacktrackVariant, MgdConfig, TraceMode};
use mgd_core::direction::{DirectionConfig, DirectionVariant};
use mgd_core::problems::{fonseca_fleming, kursawe, viennet};
use mgd_core::Problem;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, HarnessResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemId {
    FonsecaFleming,
    Kursawe,
    Viennet,
}

impl ProblemId {
    pub const ALL: [ProblemId; 3] = [ProblemId::FonsecaFleming, ProblemId::Kursawe, ProblemId::Viennet];

    pub fn build(self) -> Problem {
        match self {
            ProblemId::FonsecaFleming => fonseca_fleming(3).expect("n = 3 is valid"),
            ProblemId::Kursawe => kursawe(),
            ProblemId::Viennet => viennet(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ProblemId::FonsecaFleming => "fonseca-fleming",
            ProblemId::Kursawe => "kursawe",
            ProblemId::Viennet => "viennet",
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionArg {
    LpBase,
    LpNew,
}

impl From<DirectionArg> for DirectionVariant {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::LpBase => DirectionVariant::LpBase,
            DirectionArg::LpNew => DirectionVariant::LpNew,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BacktrackArg {
    BtBase,
    BtNew,
}

impl From<BacktrackArg> for BacktrackVariant {
    fn from(b: BacktrackArg) -> Self {
        match b {
            BacktrackArg::BtBase => BacktrackVariant::BtBase,
            BacktrackArg::BtNew => BacktrackVariant::BtNew,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

/// How much of each trajectory is kept and written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TraceLevel {
    /// No trajectory files.
    Off,
    /// First and last iterate of each run.
    Endpoints,
    /// Every iterate.
    Full,
}

/// One direction subproblem paired with one step strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Variant {
    pub direction: DirectionArg,
    pub backtracking: BacktrackArg,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant { direction: DirectionArg::LpBase, backtracking: BacktrackArg::BtBase },
        Variant { direction: DirectionArg::LpBase, backtracking: BacktrackArg::BtNew },
        Variant { direction: DirectionArg::LpNew, backtracking: BacktrackArg::BtBase },
        Variant { direction: DirectionArg::LpNew, backtracking: BacktrackArg::BtNew },
    ];

    pub fn new(direction: DirectionArg, backtracking: BacktrackArg) -> Self {
        Self { direction, backtracking }
    }

    /// File-system friendly label, e.g. `lp-new_bt-base`.
    pub fn label(&self) -> String {
        let d = match self.direction {
            DirectionArg::LpBase => "lp-base",
            DirectionArg::LpNew => "lp-new",
        };
        let b = match self.backtracking {
            BacktrackArg::BtBase => "bt-base",
            BacktrackArg::BtNew => "bt-new",
        };
        format!("{d}_{b}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: ProblemId,
    pub variants: Vec<Variant>,
    pub n_starts: usize,
    pub seed: u64,
    pub c1: f64,
    pub alpha: f64,
    pub eta0: f64,
    pub theta: usize,
    pub epsilon: f64,
    /// Overrides the problem's iteration budget.
    pub max_iters: Option<usize>,
    /// Keep repeating null steps until the budget runs out.
    pub strict_semantics: bool,
    pub out_dir: Option<PathBuf>,
    pub format: OutputFormat,
    pub trace: TraceLevel,
    /// Worker threads; `None` uses every available core.
    pub workers: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: ProblemId::FonsecaFleming,
            variants: Variant::ALL.to_vec(),
            n_starts: 500,
            seed: 0,
            c1: 1e-9,
            alpha: 0.8,
            eta0: 1.0,
            theta: 40,
            epsilon: 1.0,
            max_iters: None,
            strict_semantics: false,
            out_dir: None,
            format: OutputFormat::Csv,
            trace: TraceLevel::Off,
            workers: None,
        }
    }
}

impl ExperimentConfig {
    pub fn for_problem(problem: ProblemId) -> Self {
        Self { problem, ..Self::default() }
    }

    pub fn validate(&self) -> HarnessResult<()> {
        if self.n_starts == 0 {
            return Err(HarnessError::Config("n-starts must be at least 1".into()));
        }
        if self.variants.is_empty() {
            return Err(HarnessError::Config("at least one variant is required".into()));
        }
        if self.max_iters == Some(0) {
            return Err(HarnessError::Config("max-iters must be positive".into()));
        }
        if self.workers == Some(0) {
            return Err(HarnessError::Config("workers must be positive".into()));
        }
        let problem = self.problem.build();
        for v in &self.variants {
            let cfg = self.mgd_config(*v, &problem);
            cfg.backtrack.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
            cfg.direction.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn max_iters_for(&self, problem: &Problem) -> usize {
        self.max_iters.unwrap_or(problem.default_max_iters)
    }

    pub fn mgd_config(&self, variant: Variant, problem: &Problem) -> MgdConfig {
        let mut backtrack = BacktrackParams::new(variant.backtracking.into());
        backtrack.c1 = self.c1;
        backtrack.alpha = self.alpha;
        backtrack.eta0 = self.eta0;
        backtrack.theta = self.theta;
        backtrack.reset_eta_hat();
        let mut direction = DirectionConfig::new(variant.direction.into());
        direction.epsilon = self.epsilon;
        let mut cfg = MgdConfig::new(direction, backtrack, self.max_iters_for(problem));
        cfg.stop_on_zero_direction = !self.strict_semantics;
        cfg.trace = match self.trace {
            TraceLevel::Full => TraceMode::Full,
            TraceLevel::Off | TraceLevel::Endpoints => TraceMode::Endpoints,
        };
        cfg
    }

    /// Applies one `key=value` setting. Keys use the long flag names, with
    /// `-` and `_` interchangeable.
    pub fn apply(&mut self, key: &str, value: &str) -> HarnessResult<()> {
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        match key.as_str() {
            "problem" => self.problem = parse_enum(&key, value)?,
            "direction" => {
                let d: DirectionArg = parse_enum(&key, value)?;
                self.variants.retain(|v| v.direction == d);
                if self.variants.is_empty() {
                    self.variants = Variant::ALL.iter().copied().filter(|v| v.direction == d).collect();
                }
            }
            "backtracking" => {
                let b: BacktrackArg = parse_enum(&key, value)?;
                self.variants.retain(|v| v.backtracking == b);
                if self.variants.is_empty() {
                    self.variants = Variant::ALL.iter().copied().filter(|v| v.backtracking == b).collect();
                }
            }
            "n-starts" => self.n_starts = parse_num(&key, value)?,
            "seed" => self.seed = parse_num(&key, value)?,
            "c1" => self.c1 = parse_num(&key, value)?,
            "alpha" => self.alpha = parse_num(&key, value)?,
            "eta0" => self.eta0 = parse_num(&key, value)?,
            "theta" => self.theta = parse_num(&key, value)?,
            "epsilon" => self.epsilon = parse_num(&key, value)?,
            "max-iters" => self.max_iters = Some(parse_num(&key, value)?),
            "paper-semantics" | "strict-semantics" => self.strict_semantics = parse_num(&key, value)?,
            "out" => self.out_dir = Some(PathBuf::from(value)),
            "format" => self.format = parse_enum(&key, value)?,
            "trace" => self.trace = parse_enum(&key, value)?,
            "workers" => self.workers = Some(parse_num(&key, value)?),
            _ => return Err(HarnessError::Config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Applies a flat `key=value` document (see [`parse_kv`]).
    pub fn apply_file_contents(&mut self, text: &str) -> HarnessResult<()> {
        for (lineno, k, v) in parse_kv(text)? {
            self.apply(&k, &v).map_err(|e| HarnessError::Config(format!("line {lineno}: {e}")))?;
        }
        Ok(())
    }
}

/// Splits a flat `key=value` document into `(line number, key, value)`.
/// Blank lines and lines starting with `#` are skipped; keys are normalized
/// to use `-`.
pub fn parse_kv(text: &str) -> HarnessResult<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) =
            line.split_once('=').ok_or_else(|| HarnessError::Config(format!("line {}: expected key=value", i + 1)))?;
        out.push((i + 1, k.trim().replace('_', "-"), v.trim().to_string()));
    }
    Ok(out)
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> HarnessResult<T> {
    value.parse().map_err(|_| HarnessError::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_enum<T: clap::ValueEnum>(key: &str, value: &str) -> HarnessResult<T> {
    T::from_str(value, true).map_err(|_| HarnessError::Config(format!("invalid value `{value}` for `{key}`")))
}
