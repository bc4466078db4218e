//! Damped Newton iteration with a finite-difference Jacobian for square systems.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonConfig {
    pub max_iter: usize,
    /// Sup-norm tolerance on the residual.
    pub tol: f64,
    pub fd_step: f64,
    /// Smallest backtracking factor before giving up.
    pub min_damping: f64,
    /// Jacobians with a larger condition estimate are reported as singular.
    pub max_condition: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig { max_iter: 50, tol: 1e-10, fd_step: 1e-6, min_damping: 2f64.powi(-20), max_condition: 1e12 }
    }
}

#[derive(Clone, Debug)]
pub struct NewtonOutcome {
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    /// Condition estimate of the Jacobian at the returned point.
    pub condition: f64,
}

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Central finite-difference Jacobian of `f` at `x`.
pub fn fd_jacobian(f: &mut impl FnMut(&[f64]) -> Result<Vec<f64>>, x: &[f64], h: f64) -> Result<DMatrix<f64>> {
    let n = x.len();
    let mut jac = DMatrix::zeros(n, n);
    let mut xp = x.to_vec();
    for j in 0..n {
        xp[j] = x[j] + h;
        let up = f(&xp)?;
        xp[j] = x[j] - h;
        let down = f(&xp)?;
        xp[j] = x[j];
        for i in 0..n {
            jac[(i, j)] = (up[i] - down[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Systems above this size use a cheap pivot-ratio estimate instead of an SVD.
const SVD_LIMIT: usize = 64;

/// Ratio of extreme singular values (pivot ratio of the LU factors for large
/// systems); infinite for a singular matrix.
pub fn condition_estimate(jac: &DMatrix<f64>) -> f64 {
    if jac.nrows() > SVD_LIMIT {
        let u = jac.clone().lu().u();
        let d: Vec<f64> = u.diagonal().iter().map(|x| x.abs()).collect();
        let (max, min) = d.iter().fold((0.0f64, f64::INFINITY), |(a, b), &x| (a.max(x), b.min(x)));
        return if min == 0.0 { f64::INFINITY } else { max / min };
    }
    let sv = jac.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn solve(mut f: impl FnMut(&[f64]) -> Result<Vec<f64>>, x0: &[f64], cfg: &NewtonConfig) -> Result<NewtonOutcome> {
    let mut x = x0.to_vec();
    let mut r = f(&x)?;
    for it in 0..=cfg.max_iter {
        let jac = fd_jacobian(&mut f, &x, cfg.fd_step)?;
        let condition = condition_estimate(&jac);
        if sup_norm(&r) <= cfg.tol {
            return Ok(NewtonOutcome { residual: sup_norm(&r), x, iterations: it, condition });
        }
        if it == cfg.max_iter {
            break;
        }
        if condition > cfg.max_condition {
            return Err(Error::SingularJacobian { condition });
        }
        let dx = jac
            .lu()
            .solve(&DVector::from_column_slice(&r))
            .ok_or(Error::SingularJacobian { condition })?;
        let base = l2(&r);
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a - lambda * d).collect();
            let rt = f(&trial)?;
            if l2(&rt) < base || sup_norm(&rt) <= cfg.tol {
                x = trial;
                r = rt;
                break;
            }
            lambda *= 0.5;
            if lambda < cfg.min_damping {
                return Err(Error::NoConvergence { iterations: it + 1, residual: sup_norm(&r) });
            }
        }
    }
    Err(Error::NoConvergence { iterations: cfg.max_iter, residual: sup_norm(&r) })
}
