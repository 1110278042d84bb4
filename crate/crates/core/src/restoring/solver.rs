//! Damped least squares with random restarts.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::solution::{rank, RestoreSolution};
use super::system::{LeastSquares, RestoringSystem};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::sampling::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobianMethod {
    Analytic,
    CentralDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub n_starts: usize,
    pub seed: u64,
    /// Acceptance threshold on the root-sum-square residual.
    pub tol: f64,
    pub max_iter: usize,
    pub jacobian: JacobianMethod,
    pub fd_step: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            n_starts: 1000,
            seed: 42,
            tol: 1e-8,
            max_iter: 400,
            jacobian: JacobianMethod::Analytic,
            fd_step: 1e-6,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.n_starts == 0 {
            return Err(Error::InvalidConfig(
                "solver.n_starts must be at least 1".into(),
            ));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "solver.tol must be positive, got {}",
                self.tol
            )));
        }
        if !(self.fd_step > 0.0 && self.fd_step.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "solver.fd_step must be positive, got {}",
                self.fd_step
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub x: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn jacobian_of<P: LeastSquares + ?Sized>(
    problem: &P,
    x: &[f64],
    opts: &SolverOptions,
) -> DMatrix<f64> {
    match opts.jacobian {
        JacobianMethod::Analytic => problem.jacobian(x),
        JacobianMethod::CentralDifference => problem.jacobian_central_difference(x, opts.fd_step),
    }
}

/// Solves `(J Jᵀ + μI) y = r`, `δ = −Jᵀ y` when there are fewer residuals
/// than parameters, `(JᵀJ + μI) δ = −Jᵀ r` otherwise. Both are the same
/// damped step.
fn damped_step(jac: &DMatrix<f64>, r: &DVector<f64>, mu: f64) -> Option<DVector<f64>> {
    let (m, n) = jac.shape();
    if m <= n {
        let a = jac * jac.transpose() + DMatrix::identity(m, m) * mu;
        let y = a.cholesky()?.solve(r);
        Some(-(jac.transpose() * y))
    } else {
        let a = jac.transpose() * jac + DMatrix::identity(n, n) * mu;
        Some(-a.cholesky()?.solve(&(jac.transpose() * r)))
    }
}

pub fn levenberg_marquardt<P: LeastSquares + ?Sized>(
    problem: &P,
    x0: &[f64],
    opts: &SolverOptions,
) -> LmOutcome {
    let mut x = DVector::from_column_slice(x0);
    let mut r = problem.residual(x.as_slice());
    let mut cost = r.norm_squared();
    let mut iterations = 0;
    if cost.sqrt() <= opts.tol {
        return LmOutcome {
            x: x.as_slice().to_vec(),
            residual_norm: cost.sqrt(),
            iterations,
            converged: true,
        };
    }
    let mut jac = jacobian_of(problem, x.as_slice(), opts);
    let max_diag = jac
        .column_iter()
        .map(|c| c.norm_squared())
        .fold(0.0, f64::max);
    let mut mu = 1e-3 * max_diag.max(1e-12);
    let mut nu = 2.0;

    while iterations < opts.max_iter {
        iterations += 1;
        let Some(step) = damped_step(&jac, &r, mu) else {
            mu *= nu;
            nu *= 2.0;
            continue;
        };
        if step.norm() <= 1e-15 * (x.norm() + 1e-15) {
            break;
        }
        let x_new = &x + &step;
        let r_new = problem.residual(x_new.as_slice());
        let cost_new = r_new.norm_squared();
        let predicted = cost - (&r + &jac * &step).norm_squared();
        let gain = if predicted > 0.0 {
            (cost - cost_new) / predicted
        } else {
            -1.0
        };
        if gain > 0.0 && cost_new.is_finite() {
            x = x_new;
            r = r_new;
            cost = cost_new;
            if cost.sqrt() <= opts.tol {
                return LmOutcome {
                    x: x.as_slice().to_vec(),
                    residual_norm: cost.sqrt(),
                    iterations,
                    converged: true,
                };
            }
            jac = jacobian_of(problem, x.as_slice(), opts);
            mu *= (1.0 - (2.0 * gain - 1.0).powi(3)).max(1.0 / 3.0);
            nu = 2.0;
        } else {
            mu *= nu;
            nu *= 2.0;
            if mu > 1e20 {
                break;
            }
        }
    }
    LmOutcome {
        x: x.as_slice().to_vec(),
        residual_norm: cost.sqrt(),
        iterations,
        converged: cost.sqrt() <= opts.tol,
    }
}

/// Starting angles for start `index`: uniform on `[−π, π]^P`, drawn from
/// the seed's counter stream `index`.
pub fn start_point(seed: u64, index: usize, n_params: usize) -> Vec<f64> {
    let mut rng = stream_rng(seed, index as u64);
    let pi = std::f64::consts::PI;
    (0..n_params).map(|_| rng.random_range(-pi..=pi)).collect()
}

/// Every start that reaches the tolerance, best first.
pub fn solve_restoring(
    system: &RestoringSystem,
    opts: &SolverOptions,
    exec: Exec,
) -> Result<Vec<RestoreSolution>> {
    opts.validate()?;
    let n_params = system.n_params();
    let outcomes = exec.map(opts.n_starts, |k| {
        let x0 = start_point(opts.seed, k, n_params);
        levenberg_marquardt(system, &x0, opts)
    });
    let best_residual = outcomes
        .iter()
        .map(|o| o.residual_norm)
        .fold(f64::INFINITY, f64::min);
    let mut solutions: Vec<RestoreSolution> = outcomes
        .into_iter()
        .enumerate()
        .filter(|(_, o)| o.converged)
        .map(|(k, o)| RestoreSolution::from_system(system, o.x, o.residual_norm, opts.seed, k))
        .collect();
    if solutions.is_empty() {
        return Err(Error::NoSolution {
            starts: opts.n_starts,
            best_residual,
        });
    }
    solutions.sort_by(rank);
    Ok(solutions)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Intersection of the unit circle with the line `x = y`, plus an
    /// unconstrained third parameter.
    struct Circle;

    impl LeastSquares for Circle {
        fn n_params(&self) -> usize {
            3
        }
        fn n_residuals(&self) -> usize {
            2
        }
        fn residual(&self, x: &[f64]) -> DVector<f64> {
            DVector::from_vec(vec![x[0] * x[0] + x[1] * x[1] - 1.0, x[0] - x[1]])
        }
        fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
            DMatrix::from_row_slice(2, 3, &[2.0 * x[0], 2.0 * x[1], 0.0, 1.0, -1.0, 0.0])
        }
    }

    struct Overdetermined;

    impl LeastSquares for Overdetermined {
        fn n_params(&self) -> usize {
            1
        }
        fn n_residuals(&self) -> usize {
            3
        }
        fn residual(&self, x: &[f64]) -> DVector<f64> {
            DVector::from_vec(vec![x[0] - 2.0, 2.0 * x[0] - 4.0, (x[0] - 2.0).powi(3)])
        }
        fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
            DMatrix::from_vec(3, 1, vec![1.0, 2.0, 3.0 * (x[0] - 2.0).powi(2)])
        }
    }

    #[test]
    fn underdetermined_converges() {
        let out = levenberg_marquardt(&Circle, &[2.0, 0.5, 7.0], &SolverOptions::default());
        assert!(out.converged);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((out.x[0] - h).abs() < 1e-8 && (out.x[1] - h).abs() < 1e-8);
        assert_eq!(out.x[2], 7.0);
    }

    #[test]
    fn overdetermined_converges() {
        let out = levenberg_marquardt(&Overdetermined, &[-5.0], &SolverOptions::default());
        assert!(out.converged);
        assert!((out.x[0] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn central_difference_mode() {
        let opts = SolverOptions {
            jacobian: JacobianMethod::CentralDifference,
            ..Default::default()
        };
        let out = levenberg_marquardt(&Circle, &[-0.3, -2.0, 0.0], &opts);
        assert!(out.converged);
        assert!(out.x[0] < 0.0);
    }

    #[test]
    fn start_points_are_reproducible() {
        let a = start_point(7, 3, 112);
        assert_eq!(a, start_point(7, 3, 112));
        assert_ne!(a, start_point(7, 4, 112));
        assert_ne!(a, start_point(8, 3, 112));
        let pi = std::f64::consts::PI;
        assert!(a.iter().all(|x| (-pi..=pi).contains(x)));
    }

    #[test]
    fn invalid_options() {
        assert!(SolverOptions {
            n_starts: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SolverOptions {
            tol: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
