use crate::error::{Error, Result};

use super::{observed_fisher_se, HALF_LOG_TWO_PI};

/// `p_{t+1} = a + rho (p_t - a) + b eps_{t+1}`; the sign of `b` is not
/// identified and is reported negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ar1Params {
    pub rho: f64,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ar1Fit {
    pub params: Ar1Params,
    pub loglik: f64,
    /// Observed-information standard errors of `(rho, a, b)`.
    pub std_errors: [Option<f64>; 3],
}

pub fn ar1_loglik(prices: &[f64], params: &Ar1Params) -> f64 {
    let var = params.b * params.b;
    let mut ll = 0.0;
    for w in prices.windows(2) {
        let e = w[1] - params.a - params.rho * (w[0] - params.a);
        ll += -HALF_LOG_TWO_PI - 0.5 * var.ln() - 0.5 * e * e / var;
    }
    ll
}

/// Conditional least squares, which is the exact conditional Gaussian MLE.
pub fn fit_ar1(prices: &[f64]) -> Result<Ar1Fit> {
    if prices.len() < 3 {
        return Err(Error::InvalidInput("AR(1) fit needs at least three prices".into()));
    }
    let x = &prices[..prices.len() - 1];
    let y = &prices[1..];
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(u, v)| (u - mx) * (v - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InvalidInput("AR(1) fit needs a non-constant series".into()));
    }
    let rho = sxy / sxx;
    if !(rho.abs() < 1.0) {
        return Err(Error::Optimization(format!("AR(1) slope {rho} is not stationary")));
    }
    let c = my - rho * mx;
    let a = c / (1.0 - rho);
    let rss: f64 = x.iter().zip(y).map(|(u, v)| (v - c - rho * u).powi(2)).sum();
    let b = -(rss / n).sqrt();
    if !(b < 0.0) {
        return Err(Error::InvalidInput("AR(1) fit has zero residual variance".into()));
    }
    let params = Ar1Params { rho, a, b };
    let loglik = ar1_loglik(prices, &params);
    let se = observed_fisher_se(|t| ar1_loglik(prices, &Ar1Params { rho: t[0], a: t[1], b: t[2] }), &[rho, a, b]);
    Ok(Ar1Fit { params, loglik, std_errors: [se[0], se[1], se[2]] })
}
