//! Reduced-form comparison models fitted by exact conditional maximum
//! likelihood. Like the storage model likelihood, every log-likelihood here
//! conditions on the first price.

mod ar1;
mod garch;
mod msar;

pub use ar1::{ar1_loglik, fit_ar1, Ar1Fit, Ar1Params};
pub use garch::{fit_garch, garch_loglik, GarchFit, GarchParams};
pub use msar::{fit_ms_ar1, hamilton_filter, MsAr1Fit, MsAr1Params, MsRegime};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::optim::{nelder_mead_maximize, NelderMeadOptions, NelderMeadResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchmarkModel {
    Ar1,
    Garch,
    MsAr1,
}

impl BenchmarkModel {
    pub const ALL: [BenchmarkModel; 3] = [BenchmarkModel::Ar1, BenchmarkModel::Garch, BenchmarkModel::MsAr1];

    pub fn name(self) -> &'static str {
        match self {
            BenchmarkModel::Ar1 => "ar1",
            BenchmarkModel::Garch => "ar1-garch11",
            BenchmarkModel::MsAr1 => "ms-ar1",
        }
    }
}

impl fmt::Display for BenchmarkModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchmarkModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ar1" => Ok(BenchmarkModel::Ar1),
            "garch" | "ar1-garch" | "ar1-garch11" => Ok(BenchmarkModel::Garch),
            "ms" | "msar" | "ms-ar1" => Ok(BenchmarkModel::MsAr1),
            other => Err(Error::InvalidInput(format!("unknown benchmark model `{other}`"))),
        }
    }
}

/// Model-independent view of a benchmark fit.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkFit {
    pub model: BenchmarkModel,
    pub loglik: f64,
    pub converged: bool,
    /// Named parameter estimates in a fixed order.
    pub parameters: Vec<(&'static str, f64)>,
}

pub fn fit_benchmark(model: BenchmarkModel, prices: &[f64]) -> Result<BenchmarkFit> {
    Ok(match model {
        BenchmarkModel::Ar1 => {
            let fit = fit_ar1(prices)?;
            let p = fit.params;
            BenchmarkFit { model, loglik: fit.loglik, converged: true, parameters: vec![("rho", p.rho), ("a", p.a), ("b", p.b)] }
        }
        BenchmarkModel::Garch => {
            let fit = fit_garch(prices)?;
            let p = fit.params;
            BenchmarkFit {
                model,
                loglik: fit.loglik,
                converged: fit.converged,
                parameters: vec![("rho", p.rho), ("a", p.a), ("alpha0", p.alpha0), ("alpha1", p.alpha1), ("beta1", p.beta1)],
            }
        }
        BenchmarkModel::MsAr1 => {
            let fit = fit_ms_ar1(prices)?;
            let p = fit.params;
            BenchmarkFit {
                model,
                loglik: fit.loglik,
                converged: fit.converged,
                parameters: vec![
                    ("rho1", p.regimes[0].rho),
                    ("a1", p.regimes[0].a),
                    ("b1", p.regimes[0].b),
                    ("rho2", p.regimes[1].rho),
                    ("a2", p.regimes[1].a),
                    ("b2", p.regimes[1].b),
                    ("p11", p.p11),
                    ("p21", p.p21),
                ],
            }
        }
    })
}

pub(crate) fn benchmark_options() -> NelderMeadOptions {
    NelderMeadOptions { max_evaluations: 20_000, initial_step: 0.1, ..Default::default() }
}

/// Runs the optimizer from each start and once more from each optimum,
/// keeping the best result.
pub(crate) fn multi_start(
    mut objective: impl FnMut(&[f64]) -> f64,
    starts: &[Vec<f64>],
) -> Result<NelderMeadResult<f64>> {
    let options = benchmark_options();
    let mut best: Option<NelderMeadResult<f64>> = None;
    for start in starts {
        let first = match nelder_mead_maximize(&mut objective, start, &options) {
            Ok(r) => r,
            Err(_) => continue,
        };
        let second = nelder_mead_maximize(&mut objective, &first.x, &options)?;
        let run = if second.value >= first.value { second } else { first };
        if best.as_ref().is_none_or(|b| run.value > b.value) {
            best = Some(run);
        }
    }
    best.ok_or_else(|| Error::Optimization("no starting point gave a finite likelihood".into()))
}

/// Standard errors from the inverse of the negative numerical Hessian of
/// `loglik` at `x`; `None` where the matrix is not positive definite.
pub fn observed_fisher_se(loglik: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<Option<f64>> {
    let n = x.len();
    let h: Vec<f64> = x.iter().map(|v| 1e-4 * v.abs().max(1e-2)).collect();
    let f0 = loglik(x);
    let mut hess = vec![vec![0.0; n]; n];
    let at = |shifts: &[(usize, f64)]| {
        let mut y = x.to_vec();
        for &(i, d) in shifts {
            y[i] += d;
        }
        loglik(&y)
    };
    for i in 0..n {
        hess[i][i] = (at(&[(i, h[i])]) - 2.0 * f0 + at(&[(i, -h[i])])) / (h[i] * h[i]);
        for j in 0..i {
            let v = (at(&[(i, h[i]), (j, h[j])]) - at(&[(i, h[i]), (j, -h[j])]) - at(&[(i, -h[i]), (j, h[j])])
                + at(&[(i, -h[i]), (j, -h[j])]))
                / (4.0 * h[i] * h[j]);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    let info: Vec<Vec<f64>> = hess.iter().map(|row| row.iter().map(|v| -v).collect()).collect();
    match invert(info) {
        Some(cov) => (0..n).map(|i| (cov[i][i] > 0.0).then(|| cov[i][i].sqrt())).collect(),
        None => vec![None; n],
    }
}

/// Gauss-Jordan inverse with partial pivoting.
fn invert(mut a: Vec<Vec<f64>>) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut inv: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 || !a[pivot][col].is_finite() {
            return None;
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let d = a[col][col];
        for j in 0..n {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for j in 0..n {
                        a[r][j] -= f * a[col][j];
                        inv[r][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    Some(inv)
}

pub(crate) fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub(crate) fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

pub(crate) const HALF_LOG_TWO_PI: f64 = 0.918_938_533_204_672_8;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_small_matrix() {
        let inv = invert(vec![vec![4.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let det = 11.0;
        assert!((inv[0][0] - 3.0 / det).abs() < 1e-15);
        assert!((inv[0][1] + 1.0 / det).abs() < 1e-15);
        assert!(invert(vec![vec![1.0, 2.0], vec![2.0, 4.0]]).is_none());
    }

    #[test]
    fn fisher_se_of_gaussian_mean() {
        // loglik of 100 N(mu, 1) draws has curvature -100
        let se = observed_fisher_se(|x| -50.0 * x[0] * x[0], &[0.3]);
        assert!((se[0].unwrap() - 0.1).abs() < 1e-6);
    }

    #[test]
    fn model_names_parse() {
        for m in BenchmarkModel::ALL {
            assert_eq!(m.name().parse::<BenchmarkModel>().unwrap(), m);
        }
        assert!("arma".parse::<BenchmarkModel>().is_err());
    }
}
