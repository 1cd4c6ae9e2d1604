//! Shared descent directions from linear programs.
//!
//! Two subproblems are available. [`DirectionVariant::LpBase`] minimizes
//! `β` subject to `G p <= β e` and `‖p‖∞ <= 1`. [`DirectionVariant::LpNew`]
//! minimizes `g·p + c_β β` subject to `Ḡ p <= β e`, `‖p‖∞ <= γ` and
//! `β <= 0`, where `g` is the sum of the gradients, `Ḡ` the row-normalized
//! Jacobian, `γ` the largest infinity norm among the gradients and their sum,
//! and `c_β = ‖g‖₂ + ε`.
//!
//! At a Pareto critical point the second program still returns a nonzero
//! non-ascent direction whenever one exists that strictly decreases some
//! objective; [`CriticalCase`] reports which situation was found.

use alloc::vec;
use alloc::vec::Vec;

use crate::lp::{solve_lp, LpSpec, LpStatus};
use crate::matrix::{dot, norm2, norm_inf, Matrix};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum DirectionVariant {
    LpBase,
    LpNew,
}

/// Classification of the point the direction was computed at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum CriticalCase {
    /// A shared descent direction exists (`β* < 0`).
    NotCritical,
    /// Critical, and every feasible non-ascent direction is orthogonal to `g`.
    CriticalPerpendicular,
    /// Critical, and the null vector is the only non-ascent direction.
    CriticalZeroOnly,
    /// Critical, with a non-ascent direction that descends some objective.
    CriticalNonNull,
}

impl CriticalCase {
    pub fn is_critical(self) -> bool {
        self != CriticalCase::NotCritical
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DirectionConfig {
    pub variant: DirectionVariant,
    /// `c_β = ‖g‖₂ + epsilon`; must be positive.
    pub epsilon: f64,
    /// Gradients with Euclidean norm at or below this are dropped.
    pub tol_grad: f64,
    /// Threshold for `β* < 0` and for null directions.
    pub tol_zero_dir: f64,
}

impl DirectionConfig {
    pub fn new(variant: DirectionVariant) -> Self {
        Self { variant, epsilon: 1.0, tol_grad: 1e-12, tol_zero_dir: 1e-9 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidParameter("epsilon must be positive"));
        }
        if !(self.tol_grad > 0.0) || !(self.tol_zero_dir > 0.0) {
            return Err(Error::InvalidParameter("direction tolerances must be positive"));
        }
        Ok(())
    }
}

impl Default for DirectionConfig {
    fn default() -> Self {
        Self::new(DirectionVariant::LpNew)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DirectionResult {
    pub p_star: Vec<f64>,
    pub beta_star: f64,
    /// Objectives whose gradient was too small to normalize.
    pub dropped_rows: Vec<usize>,
    pub case: CriticalCase,
    /// Half-width of the `p` box (`γ` for `LpNew`, 1 for `LpBase`).
    pub gamma: f64,
    /// Weight on `β`, only for `LpNew`.
    pub c_beta: Option<f64>,
    pub objective_value: f64,
}

/// `g = Σ_i row_i`
pub fn sum_gradient(jac: &Matrix) -> Vec<f64> {
    let mut g = vec![0.0; jac.cols()];
    for row in jac.row_iter() {
        for (s, v) in g.iter_mut().zip(row) {
            *s += v;
        }
    }
    g
}

/// Divides each row by its Euclidean norm. Rows with norm `<= tol_grad`
/// are removed and their indices returned.
pub fn normalize_rows(jac: &Matrix, tol_grad: f64) -> (Matrix, Vec<usize>) {
    let mut kept = Vec::with_capacity(jac.rows() * jac.cols());
    let mut dropped = Vec::new();
    for (i, row) in jac.row_iter().enumerate() {
        let norm = norm2(row);
        if norm <= tol_grad {
            dropped.push(i);
        } else {
            kept.extend(row.iter().map(|v| v / norm));
        }
    }
    let rows = jac.rows() - dropped.len();
    (Matrix::from_row_major(rows, jac.cols(), kept), dropped)
}

/// `γ = max(‖g_1‖∞, …, ‖g_m‖∞, ‖Σ g_i‖∞)`
pub fn gamma(jac: &Matrix) -> f64 {
    jac.row_iter().map(norm_inf).fold(norm_inf(&sum_gradient(jac)), f64::max)
}

/// Variables `(p, β)`, rows `G p - β <= 0`, `-1 <= p <= 1`, `β <= 0`.
pub fn build_lp_base(jac: &Matrix) -> LpSpec {
    epigraph_lp(jac, 1.0, {
        let mut c = vec![0.0; jac.cols() + 1];
        c[jac.cols()] = 1.0;
        c
    })
}

/// Variables `(p, β)`, objective `g·p + c_β β`, rows `Ḡ p - β <= 0`,
/// `-γ <= p <= γ`, `β <= 0`.
///
/// When every gradient is dropped all bounds collapse to zero, so the only
/// feasible point is the origin.
pub fn build_lp_new(jac: &Matrix, epsilon: f64, tol_grad: f64) -> LpSpec {
    build_lp_new_parts(jac, epsilon, tol_grad).0
}

fn build_lp_new_parts(jac: &Matrix, epsilon: f64, tol_grad: f64) -> (LpSpec, Vec<usize>, f64, f64) {
    let n = jac.cols();
    let g = sum_gradient(jac);
    let c_beta = norm2(&g) + epsilon;
    let (normalized, dropped) = normalize_rows(jac, tol_grad);
    if normalized.rows() == 0 {
        let spec = LpSpec {
            c: vec![0.0; n + 1],
            a: Matrix::zeros(0, n + 1),
            b: Vec::new(),
            lower: vec![0.0; n + 1],
            upper: vec![0.0; n + 1],
        };
        return (spec, dropped, 0.0, c_beta);
    }
    let radius = gamma(jac);
    let mut c = g;
    c.push(c_beta);
    (epigraph_lp(&normalized, radius, c), dropped, radius, c_beta)
}

fn epigraph_lp(rows: &Matrix, radius: f64, c: Vec<f64>) -> LpSpec {
    let n = rows.cols();
    let mut a = Matrix::zeros(rows.rows(), n + 1);
    for i in 0..rows.rows() {
        let dst = a.row_mut(i);
        dst[..n].copy_from_slice(rows.row(i));
        dst[n] = -1.0;
    }
    let mut lower = vec![-radius; n + 1];
    let mut upper = vec![radius; n + 1];
    lower[n] = f64::NEG_INFINITY;
    upper[n] = 0.0;
    LpSpec { c, a, b: vec![0.0; rows.rows()], lower, upper }
}

/// Solves the chosen subproblem at a Jacobian and classifies the point.
pub fn solve_direction(jac: &Matrix, cfg: &DirectionConfig) -> Result<DirectionResult> {
    cfg.validate()?;
    if !jac.is_finite() {
        return Err(Error::InvalidParameter("Jacobian must be finite"));
    }
    let n = jac.cols();

    let (spec, dropped_rows, radius, c_beta) = match cfg.variant {
        DirectionVariant::LpBase => (build_lp_base(jac), Vec::new(), 1.0, None),
        DirectionVariant::LpNew => {
            let (spec, dropped, radius, c_beta) = build_lp_new_parts(jac, cfg.epsilon, cfg.tol_grad);
            (spec, dropped, radius, Some(c_beta))
        }
    };

    let all_dropped = cfg.variant == DirectionVariant::LpNew && dropped_rows.len() == jac.rows();
    let res = solve_lp(&spec)?;
    if res.status != LpStatus::Optimal {
        // the origin is always feasible and the p-box bounds β from below
        return Err(Error::SolverFailure("direction LP not solved to optimality"));
    }
    let rho = res.rho.unwrap_or_default();
    let p_star = rho[..n].to_vec();
    let beta_star = rho[n].min(0.0);
    let objective_value = res.objective_value.unwrap_or(0.0);

    let case = if all_dropped {
        CriticalCase::CriticalZeroOnly
    } else if beta_star < -cfg.tol_zero_dir {
        CriticalCase::NotCritical
    } else {
        classify_critical(jac, cfg, &p_star, radius, objective_value)?
    };

    Ok(DirectionResult { p_star, beta_star, dropped_rows, case, gamma: radius, c_beta, objective_value })
}

/// Distinguishes the three critical situations by probing the feasible
/// non-ascent set `Π = {p : Ḡ p <= 0, ‖p‖∞ <= radius}`.
fn classify_critical(
    jac: &Matrix,
    cfg: &DirectionConfig,
    p_star: &[f64],
    radius: f64,
    objective_value: f64,
) -> Result<CriticalCase> {
    let tol = cfg.tol_zero_dir;
    let (normalized, _) = normalize_rows(jac, cfg.tol_grad);
    let g = sum_gradient(jac);

    // with β* = 0 the LP_new value is min g·p over Π
    let min_descent = match cfg.variant {
        DirectionVariant::LpNew => objective_value,
        DirectionVariant::LpBase => probe(&normalized, radius, g)?,
    };
    if min_descent < -tol {
        return Ok(CriticalCase::CriticalNonNull);
    }
    if norm_inf(p_star) > tol * radius.max(1.0) {
        return Ok(CriticalCase::CriticalPerpendicular);
    }
    let n = jac.cols();
    for j in 0..n {
        for sign in [1.0, -1.0] {
            let mut c = vec![0.0; n];
            c[j] = -sign;
            if -probe(&normalized, radius, c)? > tol * radius.max(1.0) {
                return Ok(CriticalCase::CriticalPerpendicular);
            }
        }
    }
    Ok(CriticalCase::CriticalZeroOnly)
}

/// `min c·p` over `Π`.
fn probe(normalized: &Matrix, radius: f64, c: Vec<f64>) -> Result<f64> {
    let n = normalized.cols();
    let spec = LpSpec {
        c,
        a: normalized.clone(),
        b: vec![0.0; normalized.rows()],
        lower: vec![-radius; n],
        upper: vec![radius; n],
    };
    let res = solve_lp(&spec)?;
    res.objective_value.ok_or(Error::SolverFailure("non-ascent probe LP not solved"))
}

/// Solves one direction problem per Jacobian, returning results in input
/// order.
///
/// The stacked problem is block diagonal (see [`build_blockwise_lp`]), so it
/// separates into independent per-block solves.
pub fn solve_blockwise(jacs: &[Matrix], cfg: &DirectionConfig) -> Result<Vec<DirectionResult>> {
    if jacs.is_empty() {
        return Err(Error::InvalidParameter("blockwise solve needs at least one block"));
    }
    jacs.iter()
        .enumerate()
        .map(|(k, jac)| solve_direction(jac, cfg).map_err(|e| e.in_block(k)))
        .collect()
}

/// Stacks independent LPs into one block-diagonal LP over the concatenated
/// variables `(ρ_1, …, ρ_N)`.
pub fn build_blockwise_lp(blocks: &[LpSpec]) -> LpSpec {
    let d: usize = blocks.iter().map(LpSpec::num_vars).sum();
    let r: usize = blocks.iter().map(LpSpec::num_rows).sum();
    let mut a = Matrix::zeros(r, d);
    let mut c = Vec::with_capacity(d);
    let mut b = Vec::with_capacity(r);
    let mut lower = Vec::with_capacity(d);
    let mut upper = Vec::with_capacity(d);
    let (mut row0, mut col0) = (0, 0);
    for blk in blocks {
        for i in 0..blk.num_rows() {
            a.row_mut(row0 + i)[col0..col0 + blk.num_vars()].copy_from_slice(blk.a.row(i));
        }
        c.extend_from_slice(&blk.c);
        b.extend_from_slice(&blk.b);
        lower.extend_from_slice(&blk.lower);
        upper.extend_from_slice(&blk.upper);
        row0 += blk.num_rows();
        col0 += blk.num_vars();
    }
    LpSpec { c, a, b, lower, upper }
}

/// `max_i ḡ_i·p` over the kept normalized rows.
pub fn max_normalized_slope(jac: &Matrix, tol_grad: f64, p: &[f64]) -> f64 {
    let (normalized, _) = normalize_rows(jac, tol_grad);
    normalized.row_iter().map(|r| dot(r, p)).fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::oracle::enumerate_vertices_oracle;
    use crate::moo::{critical_oracle, Evaluation};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows)
    }

    fn cfg(variant: DirectionVariant) -> DirectionConfig {
        DirectionConfig::new(variant)
    }

    /// Same LP with a non-binding finite floor on β so the oracle applies.
    fn boxed(mut spec: LpSpec, floor: f64) -> LpSpec {
        let n = spec.num_vars() - 1;
        spec.lower[n] = floor;
        spec
    }

    #[test]
    fn sum_gradient_examples() {
        assert_eq!(sum_gradient(&m(&[&[1.0, 0.0], &[-1.0, 0.0]])), vec![0.0, 0.0]);
        assert_eq!(sum_gradient(&m(&[&[1.0, 2.0], &[-3.0, 0.0]])), vec![-2.0, 2.0]);
        assert_eq!(sum_gradient(&m(&[&[3.0, 4.0]])), vec![3.0, 4.0]);
    }

    #[test]
    fn normalize_rows_examples() {
        let (n, d) = normalize_rows(&m(&[&[3.0, 4.0]]), 1e-12);
        assert_eq!(n.row(0), &[0.6, 0.8]);
        assert!(d.is_empty());
        let (n, d) = normalize_rows(&m(&[&[0.0, 0.0]]), 1e-12);
        assert_eq!(n.rows(), 0);
        assert_eq!(d, vec![0]);
        let (n, _) = normalize_rows(&m(&[&[2.0, 0.0], &[0.0, -5.0]]), 1e-12);
        assert_eq!(n, m(&[&[1.0, 0.0], &[0.0, -1.0]]));
    }

    #[test]
    fn gamma_examples() {
        assert_eq!(gamma(&m(&[&[1.0, 2.0], &[-3.0, 0.0]])), 3.0);
        assert_eq!(gamma(&m(&[&[1.0, 0.0], &[-1.0, 0.0]])), 1.0);
        assert_eq!(gamma(&m(&[&[0.0, 0.0], &[0.0, 0.0]])), 0.0);
    }

    #[test]
    fn lp_base_single_row() {
        let spec = build_lp_base(&m(&[&[1.0, 0.0]]));
        let r = solve_direction(&m(&[&[1.0, 0.0]]), &cfg(DirectionVariant::LpBase)).unwrap();
        assert_eq!(r.beta_star, -1.0);
        assert_eq!(r.p_star[0], -1.0);
        assert!(r.p_star[1].abs() <= 1.0);
        assert_eq!(enumerate_vertices_oracle(&boxed(spec, -10.0)), Ok(-1.0));
    }

    #[test]
    fn lp_base_opposed_rows_is_critical() {
        let jac = m(&[&[1.0, 0.0], &[-1.0, 0.0]]);
        let r = solve_direction(&jac, &cfg(DirectionVariant::LpBase)).unwrap();
        assert_eq!(r.beta_star, 0.0);
        assert!(r.case.is_critical());
        // p = 0 attains the optimum
        assert_eq!(build_lp_base(&jac).objective(&[0.0, 0.0, 0.0]), r.objective_value);
    }

    #[test]
    fn lp_base_orthogonal_rows_descend() {
        let r = solve_direction(&m(&[&[1.0, 0.0], &[0.0, 1.0]]), &cfg(DirectionVariant::LpBase)).unwrap();
        assert!(r.beta_star < 0.0);
        assert_eq!(r.case, CriticalCase::NotCritical);
    }

    #[test]
    fn lp_new_opposed_rows() {
        let jac = m(&[&[1.0, 0.0], &[-1.0, 0.0]]);
        let spec = build_lp_new(&jac, 1.0, 1e-12);
        assert_eq!(enumerate_vertices_oracle(&boxed(spec, -10.0)), Ok(0.0));
        let r = solve_direction(&jac, &cfg(DirectionVariant::LpNew)).unwrap();
        assert_eq!(r.beta_star, 0.0);
        assert_eq!(r.p_star[0], 0.0);
        assert!(r.p_star[1].abs() <= 1.0);
        assert_eq!(r.objective_value, 0.0);
        assert_eq!(r.case, CriticalCase::CriticalPerpendicular);
    }

    #[test]
    fn lp_new_three_rows_nonnull() {
        let jac = m(&[&[1.0, 0.0], &[0.0, 1.0], &[-1.0, 0.0]]);
        let spec = build_lp_new(&jac, 1.0, 1e-12);
        assert_eq!(enumerate_vertices_oracle(&boxed(spec, -10.0)), Ok(-1.0));
        let r = solve_direction(&jac, &cfg(DirectionVariant::LpNew)).unwrap();
        assert_eq!(r.p_star, vec![0.0, -1.0]);
        assert_eq!(r.beta_star, 0.0);
        assert_eq!(r.case, CriticalCase::CriticalNonNull);
        assert_eq!(dot(&sum_gradient(&jac), &r.p_star), -1.0);
    }

    #[test]
    fn lp_new_one_dimensional_corner() {
        let jac = m(&[&[6.0], &[2.0]]);
        let r = solve_direction(&jac, &cfg(DirectionVariant::LpNew)).unwrap();
        assert_eq!(r.gamma, 8.0);
        assert_eq!(r.c_beta, Some(9.0));
        assert_eq!(r.p_star, vec![-8.0]);
        assert_eq!(r.beta_star, -8.0);
    }

    #[test]
    fn lp_new_orthogonal_rows_descend() {
        let jac = m(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let r = solve_direction(&jac, &cfg(DirectionVariant::LpNew)).unwrap();
        assert_eq!(r.case, CriticalCase::NotCritical);
        assert!(r.beta_star < 0.0);
        assert!(jac.mul_vec(&r.p_star).iter().all(|v| *v < 0.0));
    }

    #[test]
    fn base_variant_classifies_point_cases() {
        let jac = m(&[&[1.0, 0.0], &[0.0, 1.0], &[-1.0, 0.0]]);
        let r = solve_direction(&jac, &cfg(DirectionVariant::LpBase)).unwrap();
        assert_eq!(r.case, CriticalCase::CriticalNonNull);
    }

    #[test]
    fn zero_only_case() {
        // three directions spanning the plane positively: only p = 0 is non-ascent
        let jac = m(&[&[1.0, 0.0], &[-0.5, 0.8], &[-0.5, -0.8]]);
        for variant in [DirectionVariant::LpNew, DirectionVariant::LpBase] {
            let r = solve_direction(&jac, &cfg(variant)).unwrap();
            assert_eq!(r.case, CriticalCase::CriticalZeroOnly, "{variant:?}");
            assert!(norm_inf(&r.p_star) <= 1e-12);
        }
    }

    #[test]
    fn all_rows_dropped_sentinel() {
        let jac = m(&[&[0.0, 0.0], &[1e-14, 0.0]]);
        let r = solve_direction(&jac, &cfg(DirectionVariant::LpNew)).unwrap();
        assert_eq!(r.p_star, vec![0.0, 0.0]);
        assert_eq!(r.beta_star, 0.0);
        assert_eq!(r.dropped_rows, vec![0, 1]);
        assert_eq!(r.case, CriticalCase::CriticalZeroOnly);
    }

    #[test]
    fn zero_row_is_dropped_not_blocking() {
        let jac = m(&[&[0.0, 0.0], &[1.0, 1.0]]);
        let r = solve_direction(&jac, &cfg(DirectionVariant::LpNew)).unwrap();
        assert_eq!(r.dropped_rows, vec![0]);
        assert_eq!(r.case, CriticalCase::NotCritical);
    }

    #[test]
    fn rejects_bad_config() {
        let mut c = cfg(DirectionVariant::LpNew);
        c.epsilon = 0.0;
        assert!(solve_direction(&m(&[&[1.0]]), &c).is_err());
    }

    #[test]
    fn blockwise_examples() {
        let c = cfg(DirectionVariant::LpNew);
        let jacs = [
            m(&[&[1.0, 0.0], &[-1.0, 0.0]]),
            m(&[&[1.0, 0.0], &[0.0, 1.0], &[-1.0, 0.0]]),
            m(&[&[1.0, 0.0], &[0.0, 1.0]]),
        ];
        let all = solve_blockwise(&jacs, &c).unwrap();
        for (jac, got) in jacs.iter().zip(&all) {
            assert_eq!(&solve_direction(jac, &c).unwrap(), got);
        }
        assert_eq!(solve_blockwise(&jacs[..1], &c).unwrap()[0], all[0]);

        let mixed = [m(&[&[0.0, 0.0], &[0.0, 0.0]]), m(&[&[1.0, 0.0], &[0.0, 1.0]])];
        let r = solve_blockwise(&mixed, &c).unwrap();
        assert_eq!(r[0].p_star, vec![0.0, 0.0]);
        assert_eq!(r[0].case, CriticalCase::CriticalZeroOnly);
        assert_eq!(r[1].case, CriticalCase::NotCritical);

        assert!(solve_blockwise(&[], &c).is_err());
    }

    #[test]
    fn stacked_lp_value_is_sum_of_blocks() {
        let jacs = [
            m(&[&[1.0, 2.0], &[-3.0, 0.5]]),
            m(&[&[1.0, 0.0], &[0.0, 1.0], &[-1.0, 0.0]]),
            m(&[&[0.3, -0.2], &[0.1, 0.4]]),
        ];
        let specs: Vec<LpSpec> = jacs.iter().map(|j| build_lp_new(j, 1.0, 1e-12)).collect();
        let stacked = solve_lp(&build_blockwise_lp(&specs)).unwrap();
        let separate: f64 = specs.iter().map(|s| solve_lp(s).unwrap().objective_value.unwrap()).sum();
        assert!((stacked.objective_value.unwrap() - separate).abs() < 1e-9);
    }

    fn unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = norm2(&v);
        v.into_iter().map(|x| x / norm).collect()
    }

    /// Rows `u` and `-λu` plus random extras: always critical.
    fn critical_instance(rng: &mut ChaCha8Rng, n: usize, m_extra: usize) -> Matrix {
        let u = unit(rng, n);
        let lambda: f64 = rng.random_range(0.2..5.0);
        let mut rows = vec![u.clone(), u.iter().map(|v| -lambda * v).collect()];
        for _ in 0..m_extra {
            let scale: f64 = rng.random_range(0.1..4.0);
            rows.push(unit(rng, n).into_iter().map(|v| v * scale).collect());
        }
        Matrix::from_rows(&rows)
    }

    /// Rows inside an open half-space around `w`: never critical.
    fn noncritical_instance(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Matrix {
        let w = unit(rng, n);
        let rows: Vec<Vec<f64>> = (0..m)
            .map(|_| {
                let mut r: Vec<f64> = unit(rng, n).iter().zip(&w).map(|(a, b)| 0.6 * a + b).collect();
                let scale: f64 = rng.random_range(0.1..4.0);
                r.iter_mut().for_each(|v| *v *= scale);
                r
            })
            .collect();
        Matrix::from_rows(&rows)
    }

    fn as_eval(jac: &Matrix) -> Evaluation {
        Evaluation::from_parts(vec![0.0; jac.cols()], vec![0.0; jac.rows()], jac.clone())
    }

    #[test]
    fn critical_instances_give_zero_beta() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        for _ in 0..100 {
            let n = rng.random_range(2..=4);
            let extra = rng.random_range(0..=3);
            let jac = critical_instance(&mut rng, n, extra);
            assert!(critical_oracle(&as_eval(&jac), 2000, 7));
            for variant in [DirectionVariant::LpNew, DirectionVariant::LpBase] {
                let r = solve_direction(&jac, &cfg(variant)).unwrap();
                assert!(r.beta_star.abs() <= 1e-9, "{variant:?} beta {}", r.beta_star);
                assert!(r.case.is_critical());
                if extra == 0 {
                    assert_ne!(r.case, CriticalCase::CriticalNonNull);
                }
            }
        }
    }

    #[test]
    fn noncritical_instances_give_descent() {
        let mut rng = ChaCha8Rng::seed_from_u64(202);
        for _ in 0..200 {
            let n = rng.random_range(2..=4);
            let mm = rng.random_range(1..=5);
            let jac = noncritical_instance(&mut rng, n, mm);
            assert!(!critical_oracle(&as_eval(&jac), 10_000, 9));
            for variant in [DirectionVariant::LpNew, DirectionVariant::LpBase] {
                let r = solve_direction(&jac, &cfg(variant)).unwrap();
                assert!(r.beta_star < 0.0);
                assert_eq!(r.case, CriticalCase::NotCritical);
                assert!(jac.mul_vec(&r.p_star).iter().all(|v| *v < 0.0));
                let bound = if variant == DirectionVariant::LpNew { gamma(&jac) } else { 1.0 };
                assert!(norm_inf(&r.p_star) <= bound + 1e-8);
                if variant == DirectionVariant::LpNew {
                    let slope = max_normalized_slope(&jac, 1e-12, &r.p_star);
                    assert!((r.beta_star - slope).abs() <= 1e-7);
                    let (normalized, _) = normalize_rows(&jac, 1e-12);
                    for row in normalized.row_iter() {
                        assert!(dot(row, &r.p_star).abs() >= r.beta_star.abs() - 1e-7);
                    }
                }
            }
        }
    }

    #[test]
    fn c_beta_margin_bounds_objective_gap() {
        // for ‖p0 - p1‖ <= β0 - β1 the objective drops by at least (β0 - β1)·ε
        let mut rng = ChaCha8Rng::seed_from_u64(303);
        for _ in 0..100 {
            let n = rng.random_range(1..=4);
            let g: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let eps: f64 = rng.random_range(0.05..2.0);
            let c_beta = norm2(&g) + eps;
            let beta0: f64 = rng.random_range(-2.0..0.0);
            let beta1 = beta0 - rng.random_range(0.01..2.0);
            let dist = (beta0 - beta1) * rng.random_range(0.0..1.0);
            let p0: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let p1: Vec<f64> = p0.iter().zip(unit(&mut rng, n)).map(|(a, u)| a + dist * u).collect();
            let value = |p: &[f64], b: f64| dot(&g, p) + c_beta * b;
            let gap = value(&p0, beta0) - value(&p1, beta1);
            assert!(gap >= (beta0 - beta1) * eps - 1e-9);
        }
    }

    #[test]
    fn c_beta_margin_fails_for_far_directions() {
        // with ‖p0 - p1‖ >= β0 - β1 the bound does not hold in general
        let g = [1.0, 0.0];
        let c_beta = norm2(&g) + 1.0;
        let (p0, beta0) = ([0.0, 0.0], 0.0);
        let (p1, beta1) = ([10.0, 0.0], -1.0);
        let gap = dot(&g, &p0) + c_beta * beta0 - (dot(&g, &p1) + c_beta * beta1);
        assert!(gap < (beta0 - beta1) * 1.0);
    }
}
