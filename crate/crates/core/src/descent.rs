//! Armijo backtracking and the multiple-gradient descent loop.
//!
//! Two step strategies are provided:
//!
//! * [`BacktrackVariant::BtBase`] only accepts steps that satisfy the Armijo
//!   condition for every objective and stops the run otherwise.
//! * [`BacktrackVariant::BtNew`] falls back to the small step `η̂` when
//!   backtracking fails and accepts it as long as the new point is not
//!   dominated by the current one. Iterates that are not dominated by their
//!   successor are stored and returned, pruned to an antichain.

use alloc::vec;
use alloc::vec::Vec;

use crate::direction::{solve_blockwise, solve_direction, CriticalCase, DirectionConfig, DirectionResult};
use crate::matrix::{dot, norm_inf};
use crate::moo::{dominates, evaluate, nondominated_indices, Evaluation, Problem};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum BacktrackVariant {
    BtBase,
    BtNew,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BacktrackParams {
    /// Armijo constant in `(0, 1)`.
    pub c1: f64,
    /// Shrink factor in `(0, 1)`.
    pub alpha: f64,
    pub eta0: f64,
    /// Number of Armijo tests before giving up.
    pub theta: usize,
    /// Fallback step for `BtNew`.
    pub eta_hat: f64,
    pub variant: BacktrackVariant,
    pub store_critical: bool,
}

impl BacktrackParams {
    /// `c1 = 1e-9`, `α = 0.8`, `η₀ = 1`, `Θ = 40`, `η̂ = η₀ α^Θ`; storage on
    /// for `BtNew`.
    pub fn new(variant: BacktrackVariant) -> Self {
        let mut params = Self {
            c1: 1e-9,
            alpha: 0.8,
            eta0: 1.0,
            theta: 40,
            eta_hat: 0.0,
            variant,
            store_critical: variant == BacktrackVariant::BtNew,
        };
        params.reset_eta_hat();
        params
    }

    /// Sets `η̂` to the last backtracking step `η₀ α^Θ`, computed by the same
    /// repeated multiplication the backtracking loop uses.
    pub fn reset_eta_hat(&mut self) {
        self.eta_hat = (0..self.theta).fold(self.eta0, |eta, _| eta * self.alpha);
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c1 > 0.0 && self.c1 < 1.0) {
            return Err(Error::InvalidParameter("c1 must lie in (0, 1)"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter("alpha must lie in (0, 1)"));
        }
        if !(self.eta0 > 0.0) || !self.eta0.is_finite() {
            return Err(Error::InvalidParameter("eta0 must be positive"));
        }
        if self.theta == 0 {
            return Err(Error::InvalidParameter("theta must be positive"));
        }
        if !(self.eta_hat >= 0.0) || !self.eta_hat.is_finite() {
            return Err(Error::InvalidParameter("eta_hat must be non-negative"));
        }
        Ok(())
    }
}

/// How much of each run to keep in [`RunResult::trace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum TraceMode {
    Full,
    /// First and last record only.
    Endpoints,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MgdConfig {
    pub direction: DirectionConfig,
    pub backtrack: BacktrackParams,
    pub max_iters: usize,
    /// Stop as soon as the direction (or the accepted step) is null instead
    /// of repeating the same iterate until `max_iters`.
    pub stop_on_zero_direction: bool,
    pub trace: TraceMode,
}

impl MgdConfig {
    pub fn new(direction: DirectionConfig, backtrack: BacktrackParams, max_iters: usize) -> Self {
        Self { direction, backtrack, max_iters, stop_on_zero_direction: true, trace: TraceMode::Full }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepRecord {
    pub p_star: Vec<f64>,
    pub beta_star: f64,
    /// Step taken from this iterate; 0 where the run stopped.
    pub eta: f64,
    pub armijo_satisfied: bool,
    pub case: CriticalCase,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IterateRecord {
    pub k: usize,
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    /// `None` for the last iterate of a run that used its whole budget.
    pub step: Option<StepRecord>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StoredPoint {
    pub x: Vec<f64>,
    pub f: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Termination {
    MaxIters,
    /// `BtBase`: no backtracking step satisfied Armijo.
    ArmijoFailure,
    /// `BtNew`: the fallback point was dominated by the current iterate.
    DominatedStep,
    /// The direction or the accepted step left the iterate unchanged.
    ZeroDirection,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunResult {
    pub trace: Vec<IterateRecord>,
    pub x_hat: Vec<f64>,
    pub f_hat: Vec<f64>,
    /// Stored iterates pruned to those not dominated by any other stored
    /// point nor by `x_hat`. Never contains `x_hat` itself.
    pub stored_set: Vec<StoredPoint>,
    pub stored_before_pruning: usize,
    pub termination: Termination,
    /// Number of accepted steps.
    pub steps: usize,
    /// Accepted steps that used the `η̂` fallback.
    pub fallback_steps: usize,
}

impl RunResult {
    /// `x_hat` together with the stored set: the run's output points.
    pub fn output_points(&self) -> Vec<StoredPoint> {
        let mut out = self.stored_set.clone();
        out.push(StoredPoint { x: self.x_hat.clone(), f: self.f_hat.clone() });
        out
    }
}

/// `f_new_i <= f_i + c1 η ∇f_i·p` for every objective.
pub fn armijo_holds(eval_k: &Evaluation, p: &[f64], eta: f64, c1: f64, f_new: &[f64]) -> bool {
    eval_k
        .jac
        .row_iter()
        .zip(eval_k.f.iter().zip(f_new))
        .all(|(g, (f, fn_))| *fn_ <= f + c1 * eta * dot(g, p))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktrackOutcome {
    pub eta: f64,
    pub x_new: Vec<f64>,
    pub satisfied_all: bool,
    /// Evaluation at `x_new`, present when `satisfied_all`.
    pub evaluation: Option<Evaluation>,
}

/// Tries `η = η₀ α^t` for `t = 0..Θ-1` and returns the first step that
/// satisfies Armijo for all objectives. On failure returns `η₀ α^Θ`
/// without evaluating it.
pub fn backtrack(
    problem: &Problem,
    eval_k: &Evaluation,
    p: &[f64],
    params: &BacktrackParams,
) -> Result<BacktrackOutcome> {
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("search direction must be finite"));
    }
    let mut eta = params.eta0;
    for _ in 0..params.theta {
        let x_new = axpy(&eval_k.x, eta, p);
        let trial = evaluate(problem, &x_new)?;
        if armijo_holds(eval_k, p, eta, params.c1, &trial.f) {
            return Ok(BacktrackOutcome { eta, x_new, satisfied_all: true, evaluation: Some(trial) });
        }
        eta *= params.alpha;
    }
    Ok(BacktrackOutcome { eta, x_new: axpy(&eval_k.x, eta, p), satisfied_all: false, evaluation: None })
}

fn axpy(x: &[f64], eta: f64, p: &[f64]) -> Vec<f64> {
    x.iter().zip(p).map(|(a, b)| a + eta * b).collect()
}

/// State of a single descent run, advanced one direction at a time.
///
/// [`run_mgd`] drives it with per-iterate direction solves;
/// [`run_mgd_lockstep`] drives several runs with one blockwise solve per
/// iteration.
#[derive(Debug, Clone)]
pub struct MgdRun {
    cfg: MgdConfig,
    current: Evaluation,
    k: usize,
    trace: Vec<IterateRecord>,
    first: Option<IterateRecord>,
    stored: Vec<StoredPoint>,
    steps: usize,
    fallback_steps: usize,
    termination: Option<Termination>,
}

impl MgdRun {
    pub fn start(problem: &Problem, x0: &[f64], cfg: &MgdConfig) -> Result<Self> {
        cfg.direction.validate()?;
        cfg.backtrack.validate()?;
        if cfg.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be positive"));
        }
        let current = evaluate(problem, x0)?;
        Ok(Self {
            cfg: *cfg,
            current,
            k: 0,
            trace: Vec::new(),
            first: None,
            stored: Vec::new(),
            steps: 0,
            fallback_steps: 0,
            termination: None,
        })
    }

    pub fn is_done(&self) -> bool {
        self.termination.is_some()
    }

    pub fn jacobian(&self) -> &crate::Matrix {
        &self.current.jac
    }

    /// One iteration using a direction computed at the current iterate.
    pub fn advance(&mut self, problem: &Problem, dir: &DirectionResult) -> Result<()> {
        if self.is_done() {
            return Ok(());
        }
        let k = self.k;
        self.step(problem, dir).map_err(|e| e.at_iteration(k))?;
        self.k += 1;
        if self.termination.is_none() && self.k >= self.cfg.max_iters {
            let last = IterateRecord { k: self.k, x: self.current.x.clone(), f: self.current.f.clone(), step: None };
            self.push_record(last);
            self.termination = Some(Termination::MaxIters);
        }
        Ok(())
    }

    fn step(&mut self, problem: &Problem, dir: &DirectionResult) -> Result<()> {
        let params = self.cfg.backtrack;
        let p = &dir.p_star;
        let record = |eta: f64, armijo: bool| StepRecord {
            p_star: p.clone(),
            beta_star: dir.beta_star,
            eta,
            armijo_satisfied: armijo,
            case: dir.case,
        };

        if self.cfg.stop_on_zero_direction && norm_inf(p) <= self.cfg.direction.tol_zero_dir {
            self.stop(record(0.0, false), Termination::ZeroDirection);
            return Ok(());
        }

        let outcome = backtrack(problem, &self.current, p, &params)?;
        let (next, step) = if let Some(eval) = outcome.evaluation {
            (eval, record(outcome.eta, true))
        } else {
            match params.variant {
                BacktrackVariant::BtBase => {
                    self.stop(record(0.0, false), Termination::ArmijoFailure);
                    return Ok(());
                }
                BacktrackVariant::BtNew => {
                    let fallback = evaluate(problem, &axpy(&self.current.x, params.eta_hat, p))?;
                    if dominates(&self.current.f, &fallback.f) {
                        self.stop(record(0.0, false), Termination::DominatedStep);
                        return Ok(());
                    }
                    (fallback, record(params.eta_hat, false))
                }
            }
        };

        if self.cfg.stop_on_zero_direction && next.x == self.current.x {
            self.stop(record(0.0, false), Termination::ZeroDirection);
            return Ok(());
        }

        if !step.armijo_satisfied {
            self.fallback_steps += 1;
        }
        self.steps += 1;
        if params.store_critical && !dominates(&next.f, &self.current.f) {
            let duplicate = self.stored.last().is_some_and(|s| s.x == self.current.x);
            if !duplicate {
                self.stored.push(StoredPoint { x: self.current.x.clone(), f: self.current.f.clone() });
            }
        }
        let rec = IterateRecord { k: self.k, x: self.current.x.clone(), f: self.current.f.clone(), step: Some(step) };
        self.push_record(rec);
        self.current = next;
        Ok(())
    }

    fn stop(&mut self, step: StepRecord, why: Termination) {
        let rec = IterateRecord { k: self.k, x: self.current.x.clone(), f: self.current.f.clone(), step: Some(step) };
        self.push_record(rec);
        self.termination = Some(why);
    }

    fn push_record(&mut self, rec: IterateRecord) {
        match self.cfg.trace {
            TraceMode::Full => self.trace.push(rec),
            TraceMode::Endpoints => {
                if self.first.is_none() {
                    self.first = Some(rec);
                } else {
                    self.trace.clear();
                    self.trace.push(rec);
                }
            }
        }
    }

    pub fn finish(mut self) -> RunResult {
        let termination = self.termination.unwrap_or(Termination::MaxIters);
        if let Some(first) = self.first.take() {
            self.trace.insert(0, first);
        }
        let x_hat = self.current.x;
        let f_hat = self.current.f;
        let stored_before_pruning = self.stored.len();
        let stored_set = prune_stored(self.stored, &x_hat, &f_hat);
        RunResult {
            trace: self.trace,
            x_hat,
            f_hat,
            stored_set,
            stored_before_pruning,
            termination,
            steps: self.steps,
            fallback_steps: self.fallback_steps,
        }
    }
}

/// Keeps the stored points not dominated by any other stored point nor by
/// the final iterate; copies of the final iterate are dropped.
pub fn prune_stored(stored: Vec<StoredPoint>, x_hat: &[f64], f_hat: &[f64]) -> Vec<StoredPoint> {
    let candidates: Vec<StoredPoint> = stored.into_iter().filter(|s| s.x != x_hat).collect();
    let mut values: Vec<&[f64]> = candidates.iter().map(|s| s.f.as_slice()).collect();
    values.push(f_hat);
    let mut keep = vec![false; candidates.len()];
    for i in nondominated_indices(&values) {
        if i < candidates.len() {
            keep[i] = true;
        }
    }
    candidates.into_iter().zip(keep).filter_map(|(s, k)| k.then_some(s)).collect()
}

/// Runs multiple-gradient descent from `x0`.
pub fn run_mgd(problem: &Problem, x0: &[f64], cfg: &MgdConfig) -> Result<RunResult> {
    let mut run = MgdRun::start(problem, x0, cfg)?;
    while !run.is_done() {
        let dir = solve_direction(run.jacobian(), &cfg.direction).map_err(|e| e.at_iteration(run.k))?;
        run.advance(problem, &dir)?;
    }
    Ok(run.finish())
}

/// Runs one descent per start, solving all active direction problems of an
/// iteration together with [`solve_blockwise`]. Results match independent
/// [`run_mgd`] calls.
pub fn run_mgd_lockstep(problem: &Problem, starts: &[Vec<f64>], cfg: &MgdConfig) -> Result<Vec<RunResult>> {
    let mut runs: Vec<MgdRun> = starts
        .iter()
        .enumerate()
        .map(|(j, x0)| MgdRun::start(problem, x0, cfg).map_err(|e| e.in_block(j)))
        .collect::<Result<_>>()?;
    loop {
        let active: Vec<usize> = (0..runs.len()).filter(|&j| !runs[j].is_done()).collect();
        if active.is_empty() {
            break;
        }
        let jacs: Vec<crate::Matrix> = active.iter().map(|&j| runs[j].jacobian().clone()).collect();
        let dirs = solve_blockwise(&jacs, &cfg.direction).map_err(|e| match e {
            Error::Block { index, source } => Error::Block { index: active[index], source },
            other => other,
        })?;
        for (&j, dir) in active.iter().zip(&dirs) {
            runs[j].advance(problem, dir).map_err(|e| e.in_block(j))?;
        }
    }
    Ok(runs.into_iter().map(MgdRun::finish).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SegmentKind {
    /// Ends with an accepted fallback step at a point where Armijo failed.
    PcEtaHat,
    /// Ends where the run stopped with a zero step.
    Pc0,
    /// Only Armijo-accepted steps.
    NPc,
}

/// Consecutive trace records `start..=end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Segment {
    pub kind: SegmentKind,
    pub start: usize,
    pub end: usize,
}

/// Splits a trace into maximal segments: each Armijo failure closes a
/// segment, as `PcEtaHat` if the fallback step was taken or `Pc0` if the run
/// stopped there. Trailing Armijo-accepted records form an `NPc` segment; a
/// final record without step information joins the segment before it.
pub fn classify_subsequences(trace: &[IterateRecord]) -> Vec<Segment> {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, rec) in trace.iter().enumerate() {
        let Some(step) = &rec.step else { continue };
        if !step.armijo_satisfied {
            let kind = if step.eta > 0.0 { SegmentKind::PcEtaHat } else { SegmentKind::Pc0 };
            out.push(Segment { kind, start, end: i });
            start = i + 1;
        }
    }
    if start < trace.len() {
        let tail_has_steps = trace[start..].iter().any(|r| r.step.is_some());
        match out.last_mut() {
            Some(last) if !tail_has_steps => last.end = trace.len() - 1,
            _ => out.push(Segment { kind: SegmentKind::NPc, start, end: trace.len() - 1 }),
        }
    }
    out
}

/// Default configuration for a direction/backtracking pair.
pub fn default_config(
    direction: crate::direction::DirectionVariant,
    backtrack: BacktrackVariant,
    max_iters: usize,
) -> MgdConfig {
    MgdConfig::new(DirectionConfig::new(direction), BacktrackParams::new(backtrack), max_iters)
}
