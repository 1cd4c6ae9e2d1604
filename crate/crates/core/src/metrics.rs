//! Run-level metrics: non-dominated filtering, the global Pareto ratio and
//! grid scans for points where two normalized gradients cancel.

use alloc::vec::Vec;

use crate::descent::{RunResult, StoredPoint};
use crate::direction::normalize_rows;
use crate::matrix::norm2;
use crate::moo::{evaluate, nondominated_indices, BoxBounds, Problem};
use crate::{Error, Result};

/// Indices of the points not dominated by any other point. Points with
/// equal objective vectors do not dominate each other, so all copies stay.
pub fn nondominated_filter<F: AsRef<[f64]>>(points: &[F]) -> Vec<usize> {
    nondominated_indices(points)
}

/// Output points of one run: the final iterate plus the pruned stored set.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunOutputSet {
    pub points: Vec<StoredPoint>,
}

impl From<&RunResult> for RunOutputSet {
    fn from(run: &RunResult) -> Self {
        Self { points: run.output_points() }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParetoRatio {
    /// Fraction of runs contributing at least one globally non-dominated point.
    pub ratio: f64,
    pub contributing: usize,
    pub runs: usize,
    /// Per run, whether it contributed.
    pub per_run: Vec<bool>,
}

/// Pools every run's output points and counts the runs that keep at least
/// one point after a global non-dominated filter.
pub fn global_pareto_ratio(sets: &[RunOutputSet]) -> Result<ParetoRatio> {
    ratio_of_groups(sets.iter().map(|s| s.points.iter().map(|p| p.f.as_slice()).collect()).collect())
}

/// [`global_pareto_ratio`] computed straight from run results.
pub fn pareto_ratio_of_runs(runs: &[&RunResult]) -> Result<ParetoRatio> {
    ratio_of_groups(
        runs.iter()
            .map(|r| {
                let mut fs: Vec<&[f64]> = r.stored_set.iter().map(|p| p.f.as_slice()).collect();
                fs.push(&r.f_hat);
                fs
            })
            .collect(),
    )
}

/// For each run, the positions within its output points (stored set first,
/// final iterate last) that are globally non-dominated.
pub fn globally_nondominated(runs: &[&RunResult]) -> Vec<Vec<usize>> {
    let mut pooled: Vec<&[f64]> = Vec::new();
    let mut owner: Vec<(usize, usize)> = Vec::new();
    for (j, r) in runs.iter().enumerate() {
        for (k, p) in r.stored_set.iter().enumerate() {
            pooled.push(&p.f);
            owner.push((j, k));
        }
        pooled.push(&r.f_hat);
        owner.push((j, r.stored_set.len()));
    }
    let mut out = alloc::vec![Vec::new(); runs.len()];
    for i in nondominated_indices(&pooled) {
        let (j, k) = owner[i];
        out[j].push(k);
    }
    out
}

fn ratio_of_groups(groups: Vec<Vec<&[f64]>>) -> Result<ParetoRatio> {
    if groups.is_empty() {
        return Err(Error::InvalidParameter("Pareto ratio needs at least one run"));
    }
    let mut pooled: Vec<&[f64]> = Vec::new();
    let mut owner: Vec<usize> = Vec::new();
    for (j, group) in groups.iter().enumerate() {
        if group.is_empty() {
            return Err(Error::InvalidParameter("run output set must contain the final iterate"));
        }
        for f in group {
            if let Some(m) = pooled.first().map(|q| q.len()) {
                if f.len() != m {
                    return Err(Error::DimensionMismatch { expected: m, found: f.len() });
                }
            }
            pooled.push(f);
            owner.push(j);
        }
    }
    let mut per_run = alloc::vec![false; groups.len()];
    for i in nondominated_indices(&pooled) {
        per_run[owner[i]] = true;
    }
    let contributing = per_run.iter().filter(|b| **b).count();
    Ok(ParetoRatio { ratio: contributing as f64 / groups.len() as f64, contributing, runs: groups.len(), per_run })
}

/// Boolean mask over a regular grid of cell centres covering a box.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridMask {
    /// Cells per coordinate.
    pub resolution: usize,
    pub dim: usize,
    /// Flat marks; coordinate 0 varies fastest, so each run of
    /// `resolution` entries is one grid row.
    pub marks: Vec<bool>,
}

impl GridMask {
    pub fn count(&self) -> usize {
        self.marks.iter().filter(|b| **b).count()
    }

    pub fn num_rows(&self) -> usize {
        self.marks.len() / self.resolution
    }

    pub fn row(&self, row: usize) -> &[bool] {
        &self.marks[row * self.resolution..(row + 1) * self.resolution]
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScanSpec {
    pub bounds: BoxBounds,
    pub resolution: usize,
    /// Objectives whose normalized gradients are compared.
    pub pair: (usize, usize),
    pub tol: f64,
    /// Gradients at or below this norm are treated as zero.
    pub tol_grad: f64,
}

impl ScanSpec {
    pub fn new(bounds: BoxBounds, resolution: usize, pair: (usize, usize), tol: f64) -> Self {
        Self { bounds, resolution, pair, tol, tol_grad: 1e-12 }
    }

    pub fn validate(&self, problem: &Problem) -> Result<()> {
        if self.bounds.dim() != problem.n {
            return Err(Error::DimensionMismatch { expected: problem.n, found: self.bounds.dim() });
        }
        if self.resolution == 0 {
            return Err(Error::InvalidParameter("scan resolution must be positive"));
        }
        let (i, j) = self.pair;
        if i == j || i >= problem.m || j >= problem.m {
            return Err(Error::InvalidParameter("scan pair must name two distinct objectives"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("scan tolerance must be positive"));
        }
        let cells = (0..problem.n).try_fold(1usize, |acc, _| acc.checked_mul(self.resolution));
        if cells.is_none() {
            return Err(Error::InvalidParameter("scan grid is too large"));
        }
        Ok(())
    }

    /// Number of grid rows, `resolution^(n-1)`.
    pub fn num_rows(&self) -> usize {
        self.resolution.pow(self.bounds.dim().saturating_sub(1) as u32)
    }

    /// Centre of cell `index` in the flat ordering of [`GridMask::marks`].
    pub fn cell_center(&self, mut index: usize) -> Vec<f64> {
        let res = self.resolution as f64;
        self.bounds
            .lower
            .iter()
            .zip(&self.bounds.upper)
            .map(|(l, u)| {
                let k = index % self.resolution;
                index /= self.resolution;
                l + (u - l) * (k as f64 + 0.5) / res
            })
            .collect()
    }
}

/// Marks for one grid row. Exposed so callers can scan rows in parallel.
pub fn scan_row(problem: &Problem, spec: &ScanSpec, row: usize) -> Result<Vec<bool>> {
    spec.validate(problem)?;
    let base = row * spec.resolution;
    (0..spec.resolution).map(|col| cancels(problem, spec, &spec.cell_center(base + col))).collect()
}

fn cancels(problem: &Problem, spec: &ScanSpec, x: &[f64]) -> Result<bool> {
    let eval = evaluate(problem, x)?;
    let (i, j) = spec.pair;
    let (gi, gj) = (eval.jac.row(i), eval.jac.row(j));
    if norm2(gi) <= spec.tol_grad || norm2(gj) <= spec.tol_grad {
        return Ok(false);
    }
    let (normalized, _) = normalize_rows(&crate::Matrix::from_rows(&[gi, gj]), spec.tol_grad);
    let sum: Vec<f64> = normalized.row(0).iter().zip(normalized.row(1)).map(|(a, b)| a + b).collect();
    Ok(norm2(&sum) < spec.tol)
}

/// Marks grid cells whose centre has `‖ḡ_i + ḡ_j‖ < tol`, i.e. the two
/// objectives pull in opposite directions. Points where either gradient is
/// (numerically) zero are left unmarked.
pub fn critical_region_scan(problem: &Problem, spec: &ScanSpec) -> Result<GridMask> {
    spec.validate(problem)?;
    let mut marks = Vec::with_capacity(spec.num_rows() * spec.resolution);
    for row in 0..spec.num_rows() {
        marks.extend(scan_row(problem, spec, row)?);
    }
    Ok(GridMask { resolution: spec.resolution, dim: problem.n, marks })
}
