use crate::error::{Error, Result};

use super::{fit_ar1, multi_start, observed_fisher_se, HALF_LOG_TWO_PI};

/// AR(1) mean with GARCH(1,1) errors:
/// `p_{t+1} = a + rho (p_t - a) + e_{t+1}`,
/// `sigma_{t+1}^2 = alpha0 + alpha1 e_t^2 + beta1 sigma_t^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GarchParams {
    pub rho: f64,
    pub a: f64,
    pub alpha0: f64,
    pub alpha1: f64,
    pub beta1: f64,
}

impl GarchParams {
    pub fn is_admissible(&self) -> bool {
        self.rho.abs() < 1.0
            && self.alpha0 > 0.0
            && self.alpha1 >= 0.0
            && self.beta1 >= 0.0
            && self.alpha1 + self.beta1 < 1.0
    }

    pub fn unconditional_variance(&self) -> f64 {
        self.alpha0 / (1.0 - self.alpha1 - self.beta1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GarchFit {
    pub params: GarchParams,
    pub loglik: f64,
    pub converged: bool,
    /// Observed-information standard errors in field order.
    pub std_errors: [Option<f64>; 5],
}

/// The first error's variance is the unconditional variance.
pub fn garch_loglik(prices: &[f64], params: &GarchParams) -> f64 {
    if !params.is_admissible() {
        return f64::NEG_INFINITY;
    }
    let mut var = params.unconditional_variance();
    let mut ll = 0.0;
    for w in prices.windows(2) {
        let e = w[1] - params.a - params.rho * (w[0] - params.a);
        ll += -HALF_LOG_TWO_PI - 0.5 * var.ln() - 0.5 * e * e / var;
        var = params.alpha0 + params.alpha1 * e * e + params.beta1 * var;
    }
    ll
}

fn from_phi(phi: &[f64]) -> GarchParams {
    GarchParams { rho: phi[0].tanh(), a: phi[1], alpha0: phi[2].exp(), alpha1: phi[3] * phi[3], beta1: phi[4] * phi[4] }
}

fn to_phi(p: &GarchParams) -> Vec<f64> {
    vec![p.rho.atanh(), p.a, p.alpha0.ln(), p.alpha1.sqrt(), p.beta1.sqrt()]
}

/// Starts include the AR(1) fit with `alpha1 = beta1 = 0`, where the
/// likelihood equals the AR(1) one, so the fit never falls below it.
pub fn fit_garch(prices: &[f64]) -> Result<GarchFit> {
    if prices.len() < 30 {
        return Err(Error::InvalidInput("GARCH fit needs at least 30 prices".into()));
    }
    let ar = fit_ar1(prices)?.params;
    let var = ar.b * ar.b;
    let starts: Vec<Vec<f64>> = [(0.0, 0.0), (0.1, 0.8), (0.05, 0.9), (0.3, 0.5)]
        .iter()
        .map(|&(a1, b1)| to_phi(&GarchParams { rho: ar.rho, a: ar.a, alpha0: var * (1.0 - a1 - b1), alpha1: a1, beta1: b1 }))
        .collect();
    let best = multi_start(|phi| garch_loglik(prices, &from_phi(phi)), &starts)?;
    let params = from_phi(&best.x);
    let se = observed_fisher_se(
        |t| garch_loglik(prices, &GarchParams { rho: t[0], a: t[1], alpha0: t[2], alpha1: t[3], beta1: t[4] }),
        &[params.rho, params.a, params.alpha0, params.alpha1, params.beta1],
    );
    Ok(GarchFit {
        params,
        loglik: best.value,
        converged: best.converged,
        std_errors: [se[0], se[1], se[2], se[3], se[4]],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::ar1_loglik;
    use crate::rng::seeded_rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn simulate(p: GarchParams, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = seeded_rng(seed);
        let mut price = p.a;
        let mut var = p.unconditional_variance();
        let mut out = vec![price];
        for _ in 1..n {
            let e = var.sqrt() * rng.sample::<f64, _>(StandardNormal);
            price = p.a + p.rho * (price - p.a) + e;
            var = p.alpha0 + p.alpha1 * e * e + p.beta1 * var;
            out.push(price);
        }
        out
    }

    #[test]
    fn homoskedastic_case_reduces_to_ar1() {
        // the gain over AR(1) is half a likelihood-ratio statistic with two
        // boundary restrictions: never negative, and typically below 0.5
        let params = GarchParams { rho: 0.8, a: 1.0, alpha0: 0.04, alpha1: 0.0, beta1: 0.0 };
        let mut gains = Vec::new();
        for seed in 0..10 {
            let prices = simulate(params, 500, seed);
            let ar = super::super::fit_ar1(&prices).unwrap();
            let g = fit_garch(&prices).unwrap();
            assert!(g.loglik >= ar.loglik - 1e-9, "seed {seed}: garch {} below ar1 {}", g.loglik, ar.loglik);
            gains.push(g.loglik - ar.loglik);
        }
        gains.sort_by(f64::total_cmp);
        assert!(gains[4] < 0.5, "median gain {}", gains[4]);
        let prices = simulate(params, 500, 0);
        let ar = super::super::fit_ar1(&prices).unwrap();
        let same = GarchParams { rho: ar.params.rho, a: ar.params.a, alpha0: ar.params.b.powi(2), alpha1: 0.0, beta1: 0.0 };
        assert!((garch_loglik(&prices, &same) - ar1_loglik(&prices, &ar.params)).abs() < 1e-9);
    }

    #[test]
    fn recovers_parameters() {
        let truth = GarchParams { rho: 0.9, a: 1.0, alpha0: 0.01, alpha1: 0.1, beta1: 0.8 };
        let prices = simulate(truth, 100_000, 11);
        let fit = fit_garch(&prices).unwrap();
        let est = fit.params;
        let pairs = [
            (est.rho, truth.rho),
            (est.a, truth.a),
            (est.alpha0, truth.alpha0),
            (est.alpha1, truth.alpha1),
            (est.beta1, truth.beta1),
        ];
        for (i, (e, t)) in pairs.iter().enumerate() {
            let se = fit.std_errors[i].unwrap();
            assert!((e - t).abs() < 3.0 * se, "param {i}: {e} vs {t} (se {se})");
        }
    }

    #[test]
    fn inadmissible_params_have_no_likelihood() {
        let p = GarchParams { rho: 0.5, a: 0.0, alpha0: 0.1, alpha1: 0.6, beta1: 0.5 };
        assert_eq!(garch_loglik(&[1.0, 2.0, 3.0], &p), f64::NEG_INFINITY);
    }
}
