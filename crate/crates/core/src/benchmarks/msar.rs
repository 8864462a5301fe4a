use crate::error::{Error, Result};

use super::{fit_ar1, logistic, logit, multi_start, HALF_LOG_TWO_PI};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsRegime {
    pub rho: f64,
    pub a: f64,
    pub b: f64,
}

/// Two-regime AR(1). The regime of period `t + 1` selects the coefficients
/// of `p_{t+1} = a_s + rho_s (p_t - a_s) + b_s eps_{t+1}`; `p11` and `p21`
/// are the probabilities of moving into regime 1 from regimes 1 and 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsAr1Params {
    pub regimes: [MsRegime; 2],
    pub p11: f64,
    pub p21: f64,
}

impl MsAr1Params {
    /// Stationary probability of regime 1.
    pub fn ergodic_regime1(&self) -> f64 {
        self.p21 / (1.0 - self.p11 + self.p21)
    }

    /// Swaps the regime labels so regime 1 has the smaller intercept.
    pub fn ordered(self) -> Self {
        if self.regimes[0].a <= self.regimes[1].a {
            return self;
        }
        MsAr1Params { regimes: [self.regimes[1], self.regimes[0]], p11: 1.0 - self.p21, p21: 1.0 - self.p11 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MsAr1Fit {
    pub params: MsAr1Params,
    pub loglik: f64,
    pub converged: bool,
    /// `P(s_{t+1} = k | p_1..p_{t+1})` for each transition.
    pub filtered: Vec<[f64; 2]>,
}

/// Log-likelihood and filtered regime probabilities, starting from the
/// ergodic regime distribution.
pub fn hamilton_filter(prices: &[f64], params: &MsAr1Params) -> (f64, Vec<[f64; 2]>) {
    let mut filtered = Vec::with_capacity(prices.len().saturating_sub(1));
    let pi1 = params.ergodic_regime1();
    let mut prob = [pi1, 1.0 - pi1];
    let mut ll = 0.0;
    for (t, w) in prices.windows(2).enumerate() {
        let predicted = if t == 0 {
            prob
        } else {
            let p1 = params.p11 * prob[0] + params.p21 * prob[1];
            [p1, 1.0 - p1]
        };
        let mut joint = [0.0; 2];
        for (k, r) in params.regimes.iter().enumerate() {
            let e = w[1] - r.a - r.rho * (w[0] - r.a);
            let var = r.b * r.b;
            joint[k] = predicted[k] * (-HALF_LOG_TWO_PI - 0.5 * var.ln() - 0.5 * e * e / var).exp();
        }
        let total = joint[0] + joint[1];
        if !(total > 0.0) || !total.is_finite() {
            return (f64::NEG_INFINITY, filtered);
        }
        ll += total.ln();
        prob = [joint[0] / total, joint[1] / total];
        filtered.push(prob);
    }
    (ll, filtered)
}

fn from_phi(phi: &[f64]) -> MsAr1Params {
    let regime = |x: &[f64]| MsRegime { rho: x[0].tanh(), a: x[1], b: -x[2].exp() };
    MsAr1Params { regimes: [regime(&phi[0..3]), regime(&phi[3..6])], p11: logistic(phi[6]), p21: logistic(phi[7]) }
}

fn to_phi(p: &MsAr1Params) -> Vec<f64> {
    let mut phi = Vec::with_capacity(8);
    for r in &p.regimes {
        phi.extend([r.rho.atanh(), r.a, (-r.b).ln()]);
    }
    phi.extend([logit(p.p11), logit(p.p21)]);
    phi
}

/// One start puts both regimes at the AR(1) fit, where the likelihood is
/// the AR(1) likelihood whatever the transition probabilities, so the fit
/// never falls below it. The others split the regimes by volatility and by
/// level; the last one puts the intercepts at the means of the lower and
/// upper halves of the data.
pub fn fit_ms_ar1(prices: &[f64]) -> Result<MsAr1Fit> {
    if prices.len() < 30 {
        return Err(Error::InvalidInput("Markov-switching fit needs at least 30 prices".into()));
    }
    let ar = fit_ar1(prices)?.params;
    let base = MsRegime { rho: ar.rho, a: ar.a, b: ar.b };
    let sd = ar.b.abs();
    let level = (1.0 - ar.rho).max(0.05) * sd * 2.0;
    let candidates = [
        MsAr1Params { regimes: [base, base], p11: 0.9, p21: 0.1 },
        MsAr1Params {
            regimes: [MsRegime { b: 0.5 * ar.b, ..base }, MsRegime { b: 2.0 * ar.b, ..base }],
            p11: 0.95,
            p21: 0.1,
        },
        MsAr1Params {
            regimes: [MsRegime { a: ar.a - level / (1.0 - ar.rho), ..base }, MsRegime { a: ar.a + level / (1.0 - ar.rho), ..base }],
            p11: 0.95,
            p21: 0.05,
        },
        MsAr1Params {
            regimes: [MsRegime { rho: ar.rho * 0.5, b: 0.7 * ar.b, ..base }, MsRegime { b: 1.5 * ar.b, ..base }],
            p11: 0.8,
            p21: 0.2,
        },
    ];
    // level split: intercepts at the means of the lower and upper halves
    let mut sorted = prices.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let low = sorted[..mid].iter().sum::<f64>() / mid as f64;
    let high = sorted[mid..].iter().sum::<f64>() / (sorted.len() - mid) as f64;
    let split = MsAr1Params {
        regimes: [MsRegime { rho: 0.5, a: low, b: ar.b }, MsRegime { rho: 0.5, a: high, b: ar.b }],
        p11: 0.9,
        p21: 0.1,
    };
    let starts: Vec<Vec<f64>> = candidates.iter().chain([&split]).map(to_phi).collect();
    let best = multi_start(|phi| hamilton_filter(prices, &from_phi(phi)).0, &starts)?;
    let params = from_phi(&best.x).ordered();
    let (loglik, filtered) = hamilton_filter(prices, &params);
    Ok(MsAr1Fit { params, loglik, converged: best.converged, filtered })
}
