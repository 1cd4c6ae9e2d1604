//! Dense bounded-variable primal simplex for small linear programs.
//!
//! Solves
//!
//! ```text
//! min c·ρ   s.t.   A ρ <= b,   lower <= ρ <= upper
//! ```
//!
//! where bounds may be infinite. Nonbasic variables sit at one of their
//! bounds (or at zero when free), so box constraints never enter the
//! tableau. Entering and leaving variables follow Bland's rule, which makes
//! the method terminate and makes the returned vertex a deterministic
//! function of the input.

use alloc::vec;
use alloc::vec::Vec;

use crate::matrix::{dot, Matrix};
use crate::{Error, Result};

/// Reduced-cost and phase-one feasibility tolerance.
pub const OPT_TOL: f64 = 1e-9;
/// Tolerance accepted by the post-solve feasibility check.
pub const FEAS_CHECK_TOL: f64 = 1e-8;
/// Smallest tableau entry eligible in the ratio test.
const RATIO_PIVOT_TOL: f64 = 1e-9;
/// Pivots smaller than this are a numerical breakdown.
const BREAKDOWN_PIVOT: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LpSpec {
    pub c: Vec<f64>,
    /// `r x d` inequality matrix.
    pub a: Matrix,
    pub b: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpSpec {
    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn num_rows(&self) -> usize {
        self.b.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.c.len();
        for len in [self.a.cols(), self.lower.len(), self.upper.len()] {
            if len != d {
                return Err(Error::DimensionMismatch { expected: d, found: len });
            }
        }
        if self.a.rows() != self.b.len() {
            return Err(Error::DimensionMismatch { expected: self.a.rows(), found: self.b.len() });
        }
        if self.c.iter().chain(&self.b).any(|v| !v.is_finite()) || !self.a.is_finite() {
            return Err(Error::InvalidParameter("LP data must be finite"));
        }
        for (l, u) in self.lower.iter().zip(&self.upper) {
            if l.is_nan() || u.is_nan() || l > u || *l == f64::INFINITY || *u == f64::NEG_INFINITY {
                return Err(Error::InvalidParameter("LP bounds must satisfy lower <= upper"));
            }
        }
        Ok(())
    }

    /// Objective value `c·rho`.
    pub fn objective(&self, rho: &[f64]) -> f64 {
        dot(&self.c, rho)
    }

    /// Largest violation of the rows and bounds at `rho` (0 when feasible).
    pub fn max_violation(&self, rho: &[f64]) -> f64 {
        let rows = self.a.row_iter().zip(&self.b).map(|(a, b)| dot(a, rho) - b);
        let bounds = rho
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .flat_map(|(v, (l, u))| [l - v, v - u]);
        rows.chain(bounds).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LpResult {
    pub status: LpStatus,
    pub rho: Option<Vec<f64>>,
    pub objective_value: Option<f64>,
}

impl LpResult {
    fn without_solution(status: LpStatus) -> Self {
        Self { status, rho: None, objective_value: None }
    }
}

/// Solves the LP. Infeasibility and unboundedness are reported in the
/// status; only numerical breakdown is an error.
pub fn solve_lp(spec: &LpSpec) -> Result<LpResult> {
    spec.validate()?;
    let mut tableau = Tableau::new(spec);

    if tableau.num_artificial > 0 {
        let mut cost = vec![0.0; tableau.ncols];
        cost[tableau.first_artificial..].fill(1.0);
        if tableau.run(&cost)? == Outcome::Unbounded {
            // phase one is bounded below by zero
            return Err(Error::SolverFailure("phase one reported unbounded"));
        }
        let infeasibility: f64 = tableau.val[tableau.first_artificial..].iter().sum();
        let scale = spec.b.iter().fold(1.0, |m: f64, v| m.max(v.abs()));
        if infeasibility > OPT_TOL * scale {
            return Ok(LpResult::without_solution(LpStatus::Infeasible));
        }
        // pin artificials at zero for the rest of the solve
        for j in tableau.first_artificial..tableau.ncols {
            tableau.lo[j] = 0.0;
            tableau.up[j] = 0.0;
            if !tableau.is_basic[j] {
                tableau.val[j] = 0.0;
            }
        }
    }

    let mut cost = vec![0.0; tableau.ncols];
    cost[..spec.num_vars()].copy_from_slice(&spec.c);
    if tableau.run(&cost)? == Outcome::Unbounded {
        return Ok(LpResult::without_solution(LpStatus::Unbounded));
    }

    let d = spec.num_vars();
    let rho: Vec<f64> = tableau.val[..d]
        .iter()
        .zip(spec.lower.iter().zip(&spec.upper))
        .map(|(v, (l, u))| v.clamp(*l, *u))
        .collect();
    if spec.max_violation(&rho) > FEAS_CHECK_TOL {
        return Err(Error::SolverFailure("optimal point violates constraints"));
    }
    let objective_value = spec.objective(&rho);
    Ok(LpResult { status: LpStatus::Optimal, rho: Some(rho), objective_value: Some(objective_value) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Optimal,
    Unbounded,
}

/// Column layout: `d` structural, `r` slacks, then one artificial per row
/// whose initial slack would be negative.
///
/// `t` holds `B^-1 [A | I | art]`, so for basic variable `basis[i]`
/// `x_B = const - sum_j t[i][j] x_j` over nonbasic `j`.
struct Tableau {
    t: Matrix,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    val: Vec<f64>,
    lo: Vec<f64>,
    up: Vec<f64>,
    ncols: usize,
    first_artificial: usize,
    num_artificial: usize,
}

impl Tableau {
    fn new(spec: &LpSpec) -> Self {
        let d = spec.num_vars();
        let r = spec.num_rows();

        let start: Vec<f64> = spec
            .lower
            .iter()
            .zip(&spec.upper)
            .map(|(&l, &u)| {
                if l.is_finite() {
                    l
                } else if u.is_finite() {
                    u
                } else {
                    0.0
                }
            })
            .collect();
        let residual: Vec<f64> =
            spec.a.row_iter().zip(&spec.b).map(|(a, b)| b - dot(a, &start)).collect();
        let num_artificial = residual.iter().filter(|v| **v < 0.0).count();
        let first_artificial = d + r;
        let ncols = d + r + num_artificial;

        let mut t = Matrix::zeros(r, ncols);
        let mut basis = vec![0; r];
        let mut is_basic = vec![false; ncols];
        let mut val = vec![0.0; ncols];
        let mut lo = vec![0.0; ncols];
        let mut up = vec![f64::INFINITY; ncols];
        lo[..d].copy_from_slice(&spec.lower);
        up[..d].copy_from_slice(&spec.upper);
        val[..d].copy_from_slice(&start);

        let mut next_art = first_artificial;
        for i in 0..r {
            let row = t.row_mut(i);
            if residual[i] >= 0.0 {
                row[..d].copy_from_slice(spec.a.row(i));
                row[d + i] = 1.0;
                basis[i] = d + i;
                val[d + i] = residual[i];
            } else {
                // A x + s - a = b, written with the artificial as basic
                for (dst, src) in row[..d].iter_mut().zip(spec.a.row(i)) {
                    *dst = -src;
                }
                row[d + i] = -1.0;
                row[next_art] = 1.0;
                basis[i] = next_art;
                val[next_art] = -residual[i];
                next_art += 1;
            }
            is_basic[basis[i]] = true;
        }

        Self { t, basis, is_basic, val, lo, up, ncols, first_artificial, num_artificial }
    }

    fn run(&mut self, cost: &[f64]) -> Result<Outcome> {
        let max_iters = 1000 + 200 * (self.ncols + self.basis.len());
        for _ in 0..max_iters {
            let Some((enter, dir)) = self.entering(cost) else {
                return Ok(Outcome::Optimal);
            };
            if !self.step(enter, dir)? {
                return Ok(Outcome::Unbounded);
            }
        }
        Err(Error::SolverFailure("iteration limit reached"))
    }

    /// Bland: lowest-index nonbasic column with an improving reduced cost.
    fn entering(&self, cost: &[f64]) -> Option<(usize, f64)> {
        let r = self.basis.len();
        for j in 0..self.ncols {
            if self.is_basic[j] {
                continue;
            }
            let mut d = cost[j];
            for i in 0..r {
                d -= cost[self.basis[i]] * self.t[(i, j)];
            }
            if d < -OPT_TOL && self.val[j] < self.up[j] {
                return Some((j, 1.0));
            }
            if d > OPT_TOL && self.val[j] > self.lo[j] {
                return Some((j, -1.0));
            }
        }
        None
    }

    /// Moves `enter` in direction `dir`. Returns `false` when unbounded.
    fn step(&mut self, enter: usize, dir: f64) -> Result<bool> {
        let r = self.basis.len();
        let mut step = self.up[enter] - self.lo[enter];
        let mut leave: Option<usize> = None;

        for i in 0..r {
            let coef = -dir * self.t[(i, enter)];
            let b = self.basis[i];
            let room = if coef < -RATIO_PIVOT_TOL {
                (self.val[b] - self.lo[b]) / -coef
            } else if coef > RATIO_PIVOT_TOL {
                (self.up[b] - self.val[b]) / coef
            } else {
                continue;
            };
            let room = room.max(0.0);
            let better = match leave {
                _ if room < step => true,
                Some(l) => room == step && b < self.basis[l],
                None => false,
            };
            if better {
                step = room;
                leave = Some(i);
            }
        }

        if step == f64::INFINITY {
            return Ok(false);
        }

        self.val[enter] += dir * step;
        for i in 0..r {
            let b = self.basis[i];
            self.val[b] -= dir * step * self.t[(i, enter)];
        }

        let Some(row) = leave else {
            // bound flip
            self.val[enter] = if dir > 0.0 { self.up[enter] } else { self.lo[enter] };
            return Ok(true);
        };

        let out = self.basis[row];
        let coef = -dir * self.t[(row, enter)];
        self.val[out] = if coef < 0.0 { self.lo[out] } else { self.up[out] };

        let pivot = self.t[(row, enter)];
        if pivot.abs() < BREAKDOWN_PIVOT {
            return Err(Error::SolverFailure("pivot below breakdown threshold"));
        }
        let inv = 1.0 / pivot;
        for v in self.t.row_mut(row) {
            *v *= inv;
        }
        let pivot_row: Vec<f64> = self.t.row(row).to_vec();
        for i in 0..r {
            if i == row {
                continue;
            }
            let factor = self.t[(i, enter)];
            if factor != 0.0 {
                for (v, p) in self.t.row_mut(i).iter_mut().zip(&pivot_row) {
                    *v -= factor * p;
                }
                self.t[(i, enter)] = 0.0;
            }
        }
        self.t[(row, enter)] = 1.0;

        self.is_basic[out] = false;
        self.is_basic[enter] = true;
        self.basis[row] = enter;
        Ok(true)
    }
}

/// Brute-force cross-check for [`solve_lp`] on tiny, fully boxed LPs.
pub mod oracle {
    use super::*;

    /// The LP has no feasible point.
    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    pub struct OracleInfeasible;

    /// Returns the optimal value by enumerating every point where `d`
    /// constraints or bounds are active and keeping the best feasible one.
    ///
    /// Requires finite bounds, `d <= 6` and `r <= 10`.
    pub fn enumerate_vertices_oracle(spec: &LpSpec) -> core::result::Result<f64, OracleInfeasible> {
        let d = spec.num_vars();
        let r = spec.num_rows();
        assert!(d <= 6 && r <= 10, "oracle limited to d <= 6, r <= 10");
        assert!(
            spec.lower.iter().chain(&spec.upper).all(|v| v.is_finite()),
            "oracle needs finite bounds"
        );

        // every constraint as (normal, rhs) with normal·x <= rhs
        let mut halfspaces: Vec<(Vec<f64>, f64)> =
            spec.a.row_iter().zip(&spec.b).map(|(a, b)| (a.to_vec(), *b)).collect();
        for j in 0..d {
            let mut e = vec![0.0; d];
            e[j] = 1.0;
            halfspaces.push((e.clone(), spec.upper[j]));
            e[j] = -1.0;
            halfspaces.push((e, -spec.lower[j]));
        }

        let total = halfspaces.len();
        let mut best: Option<f64> = None;
        let mut pick: Vec<usize> = (0..d).collect();
        if d == 0 {
            return if spec.b.iter().all(|b| *b >= -1e-9) { Ok(0.0) } else { Err(OracleInfeasible) };
        }
        loop {
            let mut m = Matrix::zeros(d, d);
            let mut rhs = vec![0.0; d];
            for (row, &k) in pick.iter().enumerate() {
                m.row_mut(row).copy_from_slice(&halfspaces[k].0);
                rhs[row] = halfspaces[k].1;
            }
            if let Some(x) = solve_square(m, rhs) {
                let feasible = halfspaces.iter().all(|(a, b)| dot(a, &x) <= b + 1e-9);
                if feasible {
                    let v = spec.objective(&x);
                    best = Some(best.map_or(v, |b: f64| b.min(v)));
                }
            }
            if !next_combination(&mut pick, total) {
                break;
            }
        }
        best.ok_or(OracleInfeasible)
    }

    fn next_combination(pick: &mut [usize], n: usize) -> bool {
        let k = pick.len();
        let mut i = k;
        while i > 0 {
            i -= 1;
            if pick[i] < n - k + i {
                pick[i] += 1;
                for j in i + 1..k {
                    pick[j] = pick[j - 1] + 1;
                }
                return true;
            }
        }
        false
    }

    /// Gaussian elimination with partial pivoting; `None` when singular.
    fn solve_square(mut m: Matrix, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
        let n = rhs.len();
        for col in 0..n {
            let p = (col..n).max_by(|&a, &b| m[(a, col)].abs().total_cmp(&m[(b, col)].abs()))?;
            if m[(p, col)].abs() < 1e-12 {
                return None;
            }
            if p != col {
                for j in 0..n {
                    let tmp = m[(p, j)];
                    m[(p, j)] = m[(col, j)];
                    m[(col, j)] = tmp;
                }
                rhs.swap(p, col);
            }
            for i in col + 1..n {
                let f = m[(i, col)] / m[(col, col)];
                if f != 0.0 {
                    for j in col..n {
                        m[(i, j)] -= f * m[(col, j)];
                    }
                    rhs[i] -= f * rhs[col];
                }
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| m[(i, j)] * x[j]).sum();
            x[i] = (rhs[i] - s) / m[(i, i)];
        }
        Some(x)
    }
}

#[cfg(test)]
mod tests {
    use super::oracle::*;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(c: &[f64], rows: &[&[f64]], b: &[f64], lower: &[f64], upper: &[f64]) -> LpSpec {
        let a = if rows.is_empty() {
            Matrix::zeros(0, c.len())
        } else {
            Matrix::from_rows(rows)
        };
        LpSpec { c: c.to_vec(), a, b: b.to_vec(), lower: lower.to_vec(), upper: upper.to_vec() }
    }

    #[test]
    fn single_variable_row_bound() {
        let s = spec(&[-1.0], &[&[1.0]], &[1.0], &[0.0], &[2.0]);
        let r = solve_lp(&s).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert_eq!(r.rho.unwrap(), vec![1.0]);
        assert_eq!(r.objective_value.unwrap(), -1.0);
        assert_eq!(enumerate_vertices_oracle(&s), Ok(-1.0));
    }

    #[test]
    fn box_only_corner() {
        let s = spec(&[1.0, 1.0], &[], &[], &[-1.0, -1.0], &[1.0, 1.0]);
        let r = solve_lp(&s).unwrap();
        assert_eq!(r.rho.unwrap(), vec![-1.0, -1.0]);
        assert_eq!(r.objective_value.unwrap(), -2.0);
        assert_eq!(enumerate_vertices_oracle(&s), Ok(-2.0));
    }

    #[test]
    fn abs_value_epigraph() {
        // min beta s.t. p <= beta, -p <= beta, p in [-1, 1], beta <= 0
        let s = spec(
            &[0.0, 1.0],
            &[&[1.0, -1.0], &[-1.0, -1.0]],
            &[0.0, 0.0],
            &[-1.0, f64::NEG_INFINITY],
            &[1.0, 0.0],
        );
        let r = solve_lp(&s).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        let rho = r.rho.unwrap();
        assert!(rho[0].abs() < 1e-12 && rho[1].abs() < 1e-12);
        assert!(r.objective_value.unwrap().abs() < 1e-12);
        let mut boxed = s.clone();
        boxed.lower[1] = -10.0;
        assert!(enumerate_vertices_oracle(&boxed).unwrap().abs() < 1e-12);
    }

    #[test]
    fn oracle_edge_cases() {
        let infeasible = spec(&[1.0], &[&[1.0]], &[-1.0], &[1.0], &[2.0]);
        assert_eq!(enumerate_vertices_oracle(&infeasible), Err(OracleInfeasible));
        assert_eq!(solve_lp(&infeasible).unwrap().status, LpStatus::Infeasible);
        let zero = spec(&[0.0], &[], &[], &[0.0], &[1.0]);
        assert_eq!(enumerate_vertices_oracle(&zero), Ok(0.0));
    }

    #[test]
    fn infeasible_and_unbounded_are_statuses() {
        let infeasible = spec(&[1.0, 0.0], &[&[1.0, 1.0], &[-1.0, -1.0]], &[-1.0, -1.0], &[-5.0; 2], &[5.0; 2]);
        let r = solve_lp(&infeasible).unwrap();
        assert_eq!(r.status, LpStatus::Infeasible);
        assert!(r.rho.is_none() && r.objective_value.is_none());

        let unbounded = spec(&[-1.0], &[], &[], &[0.0], &[f64::INFINITY]);
        assert_eq!(solve_lp(&unbounded).unwrap().status, LpStatus::Unbounded);

        let free_unbounded = spec(&[1.0, 0.0], &[&[0.0, 1.0]], &[1.0], &[f64::NEG_INFINITY; 2], &[f64::INFINITY; 2]);
        assert_eq!(solve_lp(&free_unbounded).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn free_variables_reach_optimum() {
        // min -x - y s.t. x + 2y <= 4, 3x + y <= 6, both free
        let s = spec(
            &[-1.0, -1.0],
            &[&[1.0, 2.0], &[3.0, 1.0]],
            &[4.0, 6.0],
            &[f64::NEG_INFINITY; 2],
            &[f64::INFINITY; 2],
        );
        let r = solve_lp(&s).unwrap();
        let rho = r.rho.unwrap();
        assert!((rho[0] - 1.6).abs() < 1e-12 && (rho[1] - 1.2).abs() < 1e-12);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let s = spec(&[1.0], &[], &[], &[1.0], &[0.0]);
        assert!(solve_lp(&s).is_err());
        let s = spec(&[1.0, 2.0], &[], &[], &[0.0], &[1.0]);
        assert!(solve_lp(&s).is_err());
    }

    pub(crate) fn random_spec(rng: &mut ChaCha8Rng) -> LpSpec {
        let d = rng.random_range(1..=4);
        let r = rng.random_range(0..=6);
        let mut a = Matrix::zeros(r, d);
        for i in 0..r {
            for j in 0..d {
                // integers make degenerate vertices and ties common
                a[(i, j)] = if rng.random_bool(0.5) {
                    f64::from(rng.random_range(-3i32..=3))
                } else {
                    rng.random_range(-3.0..3.0)
                };
            }
        }
        let b = (0..r).map(|_| rng.random_range(-3.0..5.0)).collect();
        let c = (0..d).map(|_| f64::from(rng.random_range(-3i32..=3))).collect();
        let mut lower = Vec::with_capacity(d);
        let mut upper = Vec::with_capacity(d);
        for _ in 0..d {
            let l: f64 = rng.random_range(-5.0..5.0);
            let u: f64 = rng.random_range(-5.0..5.0);
            lower.push(l.min(u));
            upper.push(l.max(u));
        }
        LpSpec { c, a, b, lower, upper }
    }

    #[test]
    fn matches_vertex_oracle_on_random_specs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for case in 0..300 {
            let s = random_spec(&mut rng);
            let r = solve_lp(&s).unwrap();
            match enumerate_vertices_oracle(&s) {
                Ok(v) => {
                    assert_eq!(r.status, LpStatus::Optimal, "case {case}");
                    let got = r.objective_value.unwrap();
                    assert!((got - v).abs() <= 1e-8, "case {case}: {got} vs {v}");
                    let rho = r.rho.unwrap();
                    assert!((s.objective(&rho) - got).abs() <= 1e-9);
                    assert!(s.max_violation(&rho) <= FEAS_CHECK_TOL);
                }
                Err(OracleInfeasible) => assert_eq!(r.status, LpStatus::Infeasible, "case {case}"),
            }
        }
    }

    #[test]
    fn deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let s = random_spec(&mut rng);
            assert_eq!(solve_lp(&s).unwrap(), solve_lp(&s).unwrap());
        }
    }
}
