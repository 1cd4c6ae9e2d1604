//! Benchmark problems with analytic Jacobians, start sampling and a
//! finite-difference Jacobian for checking them.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use libm::{cos, exp, fabs, pow, sin, sqrt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matrix::Matrix;
use crate::moo::{evaluate, BoxBounds, Problem};
use crate::{Error, Result};

/// Name of the generator behind [`sample_starts`], echoed in run metadata.
pub const GENERATOR_NAME: &str = "ChaCha8Rng";

/// `f_{1,2} = 1 - exp(-Σ (x_i ∓ 1/√n)²)` on `[-2, 2]^n`, 250 iterations.
pub fn fonseca_fleming(n: usize) -> Result<Problem> {
    if n == 0 {
        return Err(Error::InvalidParameter("Fonseca-Fleming needs n >= 1"));
    }
    let shift = 1.0 / sqrt(n as f64);
    Problem::new(
        format!("fonseca-fleming-{n}"),
        n,
        2,
        BoxBounds::cube(n, -2.0, 2.0),
        250,
        move |x, f, jac| {
            for (obj, s) in [(0, shift), (1, -shift)] {
                let sq: f64 = x.iter().map(|v| (v - s) * (v - s)).sum();
                let e = exp(-sq);
                f[obj] = 1.0 - e;
                for (g, v) in jac.row_mut(obj).iter_mut().zip(x) {
                    *g = 2.0 * (v - s) * e;
                }
            }
        },
    )
}

/// Kursawe on `[-1.5, 0.5]^3`, 1500 iterations.
///
/// `d|x|^0.8/dx` is unbounded at 0; it is taken as 0 there.
pub fn kursawe() -> Problem {
    Problem::new("kursawe", 3, 2, BoxBounds::cube(3, -1.5, 0.5), 1500, |x, f, jac| {
        f[0] = 0.0;
        jac.row_mut(0).fill(0.0);
        for i in 0..2 {
            let r = sqrt(x[i] * x[i] + x[i + 1] * x[i + 1]);
            let e = exp(-0.2 * r);
            f[0] -= 10.0 * e;
            if r > 0.0 {
                jac[(0, i)] += 2.0 * e * x[i] / r;
                jac[(0, i + 1)] += 2.0 * e * x[i + 1] / r;
            }
        }
        f[1] = 0.0;
        for i in 0..3 {
            let a = fabs(x[i]);
            let cube = x[i] * x[i] * x[i];
            f[1] += pow(a, 0.8) + 5.0 * sin(cube);
            let abs_term = if a > 0.0 { 0.8 * x[i].signum() * pow(a, -0.2) } else { 0.0 };
            jac[(1, i)] = abs_term + 15.0 * x[i] * x[i] * cos(cube);
        }
    })
    .expect("static Kursawe definition is valid")
}

/// Viennet on `[-3, 1.5]^2`, 7500 iterations.
pub fn viennet() -> Problem {
    Problem::new("viennet", 2, 3, BoxBounds::cube(2, -3.0, 1.5), 7500, |x, f, jac| {
        let (x1, x2) = (x[0], x[1]);
        let r = x1 * x1 + x2 * x2;

        f[0] = 0.5 * r + sin(r);
        let d0 = 0.5 + cos(r);
        jac[(0, 0)] = 2.0 * x1 * d0;
        jac[(0, 1)] = 2.0 * x2 * d0;

        let a = 3.0 * x1 - 2.0 * x2 + 4.0;
        let b = x1 + x2 + 1.0;
        f[1] = a * a / 8.0 + b * b / 27.0 + 15.0;
        jac[(1, 0)] = 0.75 * a + 2.0 * b / 27.0;
        jac[(1, 1)] = -0.5 * a + 2.0 * b / 27.0;

        let e = exp(-r);
        f[2] = 1.0 / (r + 1.0) - 1.1 * e;
        let d2 = -1.0 / ((r + 1.0) * (r + 1.0)) + 1.1 * e;
        jac[(2, 0)] = 2.0 * x1 * d2;
        jac[(2, 1)] = 2.0 * x2 * d2;
    })
    .expect("static Viennet definition is valid")
}

/// Uniform i.i.d. start points in a box.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StartSampler {
    pub bounds: BoxBounds,
    pub count: usize,
    pub seed: u64,
}

pub fn sample_starts(sampler: &StartSampler) -> Result<Vec<Vec<f64>>> {
    if sampler.count == 0 {
        return Err(Error::InvalidParameter("start count must be positive"));
    }
    let b = &sampler.bounds;
    let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
    Ok((0..sampler.count)
        .map(|_| {
            b.lower
                .iter()
                .zip(&b.upper)
                .map(|(l, u)| {
                    let t: f64 = rng.random();
                    l + (u - l) * t
                })
                .collect()
        })
        .collect())
}

/// Central differences `(f(x + h e_j) - f(x - h e_j)) / 2h`.
pub fn finite_difference_jacobian(problem: &Problem, x: &[f64], h: f64) -> Result<Matrix> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter("finite-difference step must be positive"));
    }
    let mut jac = Matrix::zeros(problem.m, problem.n);
    let mut probe = x.to_vec();
    for j in 0..problem.n {
        probe[j] = x[j] + h;
        let plus = evaluate(problem, &probe)?.f;
        probe[j] = x[j] - h;
        let minus = evaluate(problem, &probe)?.f;
        probe[j] = x[j];
        for i in 0..problem.m {
            jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Largest entrywise `|a - b| / max(|a|, 1)`.
pub fn jacobian_relative_error(analytic: &Matrix, approx: &Matrix) -> f64 {
    analytic
        .as_slice()
        .iter()
        .zip(approx.as_slice())
        .map(|(a, b)| fabs(a - b) / fabs(*a).max(1.0))
        .fold(0.0, f64::max)
}

/// All problems with their default settings.
pub fn all_problems() -> Vec<Problem> {
    vec![fonseca_fleming(3).expect("n = 3 is valid"), kursawe(), viennet()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fonseca_fleming_values() {
        let p = fonseca_fleming(3).unwrap();
        let e = evaluate(&p, &[0.0; 3]).unwrap();
        assert_eq!(e.f[0], e.f[1]);
        assert_relative_eq!(e.f[0], 1.0 - (-1.0f64).exp(), max_relative = 1e-15);
        let s = 1.0 / 3.0f64.sqrt();
        assert_eq!(evaluate(&p, &[s, s, s]).unwrap().f[0], 0.0);
        assert_eq!(p.default_max_iters, 250);
        assert!(fonseca_fleming(0).is_err());
    }

    #[test]
    fn kursawe_values() {
        let p = kursawe();
        assert_eq!(evaluate(&p, &[0.0; 3]).unwrap().f, vec![-20.0, 0.0]);
        let a = evaluate(&p, &[0.3, -1.1, 0.2]).unwrap().f[0];
        let b = evaluate(&p, &[0.2, -1.1, 0.3]).unwrap().f[0];
        assert_relative_eq!(a, b, max_relative = 1e-15);
        assert_eq!(p.default_max_iters, 1500);
    }

    #[test]
    fn viennet_values() {
        let p = viennet();
        let f = evaluate(&p, &[0.0, 0.0]).unwrap().f;
        assert_eq!(f[0], 0.0);
        assert_relative_eq!(f[1], 2.0 + 1.0 / 27.0 + 15.0, max_relative = 1e-15);
        assert_relative_eq!(f[2], -0.1, max_relative = 1e-14);
        let a = evaluate(&p, &[0.7, -1.2]).unwrap().f;
        let b = evaluate(&p, &[-0.7, 1.2]).unwrap().f;
        assert_eq!((a[0], a[2]), (b[0], b[2]));
        assert_eq!(p.default_max_iters, 7500);
    }

    #[test]
    fn analytic_jacobians_at_named_points() {
        let cases: [(Problem, Vec<f64>, f64); 4] = [
            (fonseca_fleming(3).unwrap(), vec![0.0; 3], 1e-6),
            (kursawe(), vec![0.5; 3], 1e-5),
            (viennet(), vec![1.0, 1.0], 1e-6),
            (viennet(), vec![0.3, -0.7], 1e-5),
        ];
        for (p, x, tol) in cases {
            let analytic = evaluate(&p, &x).unwrap().jac;
            let fd = finite_difference_jacobian(&p, &x, 1e-6).unwrap();
            assert!(jacobian_relative_error(&analytic, &fd) <= tol, "{}", p.name);
        }
    }

    #[test]
    fn finite_differences_exact_cases() {
        let lin = Problem::new("lin", 2, 1, BoxBounds::cube(2, -1.0, 1.0), 1, |x, f, _| {
            f[0] = 2.0 * x[0] - 3.0 * x[1];
        })
        .unwrap();
        let fd = finite_difference_jacobian(&lin, &[0.25, 0.5], 1e-3).unwrap();
        assert_relative_eq!(fd[(0, 0)], 2.0, max_relative = 1e-10);
        assert_relative_eq!(fd[(0, 1)], -3.0, max_relative = 1e-10);

        let quad = Problem::new("sq", 1, 1, BoxBounds::cube(1, -1.0, 1.0), 1, |x, f, _| {
            f[0] = x[0] * x[0];
        })
        .unwrap();
        for h in [0.5, 0.125, 0.0625] {
            assert_eq!(finite_difference_jacobian(&quad, &[1.0], h).unwrap()[(0, 0)], 2.0);
        }
        assert!(finite_difference_jacobian(&quad, &[1.0], 0.0).is_err());
    }

    #[test]
    fn sampler_contract() {
        let origin = StartSampler { bounds: BoxBounds::cube(3, 0.0, 0.0), count: 1, seed: 4 };
        assert_eq!(sample_starts(&origin).unwrap(), vec![vec![0.0; 3]]);

        let s = StartSampler { bounds: BoxBounds::cube(2, -3.0, 1.5), count: 50, seed: 9 };
        let a = sample_starts(&s).unwrap();
        assert_eq!(a, sample_starts(&s).unwrap());
        assert!(a.iter().all(|x| s.bounds.contains(x)));
        assert_ne!(a, sample_starts(&StartSampler { seed: 10, ..s.clone() }).unwrap());

        let unit = StartSampler { bounds: BoxBounds::cube(2, 0.0, 1.0), count: 10_000, seed: 1 };
        let pts = sample_starts(&unit).unwrap();
        for j in 0..2 {
            let mean = pts.iter().map(|x| x[j]).sum::<f64>() / pts.len() as f64;
            assert!((mean - 0.5).abs() < 0.02);
        }
        assert!(sample_starts(&StartSampler { count: 0, ..unit }).is_err());
    }
}
