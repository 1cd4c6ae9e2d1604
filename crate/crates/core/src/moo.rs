//! Problems, evaluations and Pareto dominance.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matrix::{dot, Matrix};
use crate::{Error, Result};

/// Writes `f(x)` into the value slice and the Jacobian (row `i` is the
/// gradient of objective `i`) into the matrix.
pub type Evaluator = dyn Fn(&[f64], &mut [f64], &mut Matrix) + Send + Sync;

/// Axis-aligned box `lower <= x <= upper`, used for start sampling and scans.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoxBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), found: upper.len() });
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u) || !l.is_finite() || !u.is_finite()) {
            return Err(Error::InvalidParameter("box bounds must be finite with lower <= upper"));
        }
        Ok(Self { lower, upper })
    }

    pub fn cube(n: usize, lo: f64, hi: f64) -> Self {
        Self { lower: vec![lo; n], upper: vec![hi; n] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| l <= v && v <= u)
    }
}

/// An unconstrained `m`-objective problem on `R^n` with analytic Jacobian.
#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub domain: BoxBounds,
    pub default_max_iters: usize,
    evaluator: Arc<Evaluator>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("m", &self.m)
            .field("domain", &self.domain)
            .field("default_max_iters", &self.default_max_iters)
            .finish_non_exhaustive()
    }
}

impl Problem {
    pub fn new<F>(
        name: impl Into<String>,
        n: usize,
        m: usize,
        domain: BoxBounds,
        default_max_iters: usize,
        evaluator: F,
    ) -> Result<Self>
    where
        F: Fn(&[f64], &mut [f64], &mut Matrix) + Send + Sync + 'static,
    {
        if n == 0 || m == 0 {
            return Err(Error::InvalidParameter("problem needs n >= 1 and m >= 1"));
        }
        if domain.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: domain.dim() });
        }
        if domain.lower.iter().zip(&domain.upper).any(|(l, u)| !(l < u)) {
            return Err(Error::InvalidParameter("problem domain box must have lower < upper"));
        }
        if default_max_iters == 0 {
            return Err(Error::InvalidParameter("default_max_iters must be positive"));
        }
        Ok(Self {
            name: name.into(),
            n,
            m,
            domain,
            default_max_iters,
            evaluator: Arc::new(evaluator),
        })
    }
}

/// Objective values and Jacobian at a point.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Evaluation {
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    pub jac: Matrix,
}

impl Evaluation {
    /// Builds an evaluation from raw parts, mostly for direction tests that
    /// only care about the Jacobian.
    pub fn from_parts(x: Vec<f64>, f: Vec<f64>, jac: Matrix) -> Self {
        Self { x, f, jac }
    }
}

/// Evaluates `f(x)` and its Jacobian.
pub fn evaluate(problem: &Problem, x: &[f64]) -> Result<Evaluation> {
    if x.len() != problem.n {
        return Err(Error::DimensionMismatch { expected: problem.n, found: x.len() });
    }
    if let Some(index) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput { index });
    }
    let mut f = vec![0.0; problem.m];
    let mut jac = Matrix::zeros(problem.m, problem.n);
    (problem.evaluator)(x, &mut f, &mut jac);
    for (i, fi) in f.iter().enumerate() {
        if !fi.is_finite() || jac.row(i).iter().any(|v| !v.is_finite()) {
            return Err(Error::EvaluationFailed { objective: i });
        }
    }
    Ok(Evaluation { x: x.to_vec(), f, jac })
}

/// `fa` dominates `fb`: `fa <= fb` componentwise and `fa != fb`.
///
/// Comparisons are exact. Panics if the lengths differ.
pub fn dominates(fa: &[f64], fb: &[f64]) -> bool {
    assert_eq!(fa.len(), fb.len(), "dominance between vectors of different length");
    let mut strictly_better = false;
    for (a, b) in fa.iter().zip(fb) {
        if a > b {
            return false;
        }
        if a < b {
            strictly_better = true;
        }
    }
    strictly_better
}

/// Indices, in input order, of the vectors not dominated by any other.
///
/// Vectors with equal values do not dominate each other, so every copy is
/// kept. Sorting lexicographically first means each vector only needs
/// checking against the survivors before it.
pub fn nondominated_indices<F: AsRef<[f64]>>(points: &[F]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        let (fa, fb) = (points[a].as_ref(), points[b].as_ref());
        fa.iter()
            .zip(fb)
            .map(|(x, y)| x.partial_cmp(y).unwrap_or(Ordering::Equal))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
    });
    let mut front: Vec<usize> = Vec::new();
    for i in order {
        let p = points[i].as_ref();
        if !front.iter().any(|&k| dominates(points[k].as_ref(), p)) {
            front.push(i);
        }
    }
    front.sort_unstable();
    front
}

/// Sampling check for Pareto criticality, for tests only.
///
/// Draws `n_samples` directions uniformly on the unit sphere and returns
/// `false` as soon as one of them descends every objective (`jac * v < 0`).
/// A `true` answer only means no shared descent direction was sampled.
pub fn critical_oracle(evaluation: &Evaluation, n_samples: usize, seed: u64) -> bool {
    let jac = &evaluation.jac;
    let n = jac.cols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = vec![0.0; n];
    for _ in 0..n_samples {
        for vi in v.iter_mut() {
            *vi = rng.sample(StandardNormal);
        }
        // scale is irrelevant for the sign test
        if jac.row_iter().all(|g| dot(g, &v) < 0.0) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn jac_eval(rows: &[&[f64]]) -> Evaluation {
        let jac = Matrix::from_rows(rows);
        Evaluation::from_parts(vec![0.0; jac.cols()], vec![0.0; jac.rows()], jac)
    }

    #[test]
    fn dominance_examples() {
        assert!(dominates(&[0.0, 0.0], &[1.0, 1.0]));
        assert!(!dominates(&[0.0, 1.0], &[1.0, 0.0]));
        assert!(!dominates(&[1.0, 1.0], &[1.0, 1.0]));
        assert!(dominates(&[1.0, 0.0], &[1.0, 1.0]));
    }

    #[test]
    #[should_panic]
    fn dominance_length_mismatch() {
        dominates(&[0.0], &[0.0, 1.0]);
    }

    #[test]
    fn oracle_examples() {
        assert!(critical_oracle(&jac_eval(&[&[1.0, 0.0], &[-1.0, 0.0]]), 10_000, 3));
        assert!(!critical_oracle(&jac_eval(&[&[1.0, 0.0], &[0.0, 1.0]]), 10_000, 3));
        assert!(!critical_oracle(&jac_eval(&[&[1.0, 1.0]]), 10_000, 3));
    }

    #[test]
    fn evaluate_rejects_bad_input() {
        let p = Problem::new("lin", 2, 1, BoxBounds::cube(2, -1.0, 1.0), 10, |x, f, j| {
            f[0] = x[0] / x[1];
            j[(0, 0)] = 1.0 / x[1];
            j[(0, 1)] = -x[0] / (x[1] * x[1]);
        })
        .unwrap();
        assert_eq!(evaluate(&p, &[1.0]), Err(Error::DimensionMismatch { expected: 2, found: 1 }));
        assert_eq!(evaluate(&p, &[f64::NAN, 1.0]), Err(Error::NonFiniteInput { index: 0 }));
        assert_eq!(evaluate(&p, &[1.0, 0.0]), Err(Error::EvaluationFailed { objective: 0 }));
        let e = evaluate(&p, &[1.0, 2.0]).unwrap();
        assert_eq!(e.f, vec![0.5]);
    }

    #[test]
    fn problem_rejects_degenerate_box() {
        let r = Problem::new("bad", 1, 1, BoxBounds::cube(1, 0.0, 0.0), 10, |_, _, _| {});
        assert!(r.is_err());
    }

    fn small_vec() -> impl Strategy<Value = Vec<f64>> {
        // a coarse grid makes ties and equal components common
        prop::collection::vec((-3i32..=3).prop_map(f64::from), 3)
    }

    proptest! {
        #[test]
        fn dominance_irreflexive_and_asymmetric(a in small_vec(), b in small_vec()) {
            prop_assert!(!dominates(&a, &a));
            if dominates(&a, &b) {
                prop_assert!(!dominates(&b, &a));
            }
        }

        #[test]
        fn dominance_transitive(a in small_vec(), b in small_vec(), c in small_vec()) {
            if dominates(&a, &b) && dominates(&b, &c) {
                prop_assert!(dominates(&a, &c));
            }
        }

        #[test]
        fn sweep_filter_matches_pairwise_scan(
            pts in prop::collection::vec(prop::collection::vec(prop::sample::select(vec![-1.0, -0.0, 0.0, 0.5, 1.0]), 3), 0..40)
        ) {
            let brute: Vec<usize> = (0..pts.len())
                .filter(|&i| !pts.iter().enumerate().any(|(j, q)| i != j && dominates(q, &pts[i])))
                .collect();
            prop_assert_eq!(nondominated_indices(&pts), brute);
        }
    }
}
