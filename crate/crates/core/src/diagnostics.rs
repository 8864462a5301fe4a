//! Specification tests on transformed generalized residuals, which are
//! iid standard normal under a correctly specified model.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::stats::{autocorrelation, central_moments, negligible_spread};

pub const LJUNG_BOX_LAGS: usize = 20;
pub const ARCH_LAGS: usize = 1;

/// Summary and p-values. P-values are `None` when the statistic is
/// undefined (constant input or too few points); `degenerate` is set for
/// constant input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsReport {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub skewness: Option<f64>,
    pub excess_kurtosis: Option<f64>,
    pub ac1: Option<f64>,
    pub jarque_bera_p: Option<f64>,
    pub kolmogorov_smirnov_p: Option<f64>,
    pub ljung_box_p: Option<f64>,
    pub arch_p: Option<f64>,
    pub degenerate: bool,
}

pub fn residual_diagnostics(eta: &[f64]) -> DiagnosticsReport {
    let n = eta.len();
    if n < 2 {
        return DiagnosticsReport {
            n,
            mean: eta.first().copied().unwrap_or(f64::NAN),
            sd: 0.0,
            skewness: None,
            excess_kurtosis: None,
            ac1: None,
            jarque_bera_p: None,
            kolmogorov_smirnov_p: None,
            ljung_box_p: None,
            arch_p: None,
            degenerate: true,
        };
    }
    let (mean, m2, m3, m4) = central_moments(eta);
    let nf = n as f64;
    let sd = (m2 * nf / (nf - 1.0)).sqrt();
    let degenerate = negligible_spread(m2, mean);
    let skewness = (!degenerate).then(|| m3 / m2.powf(1.5));
    let excess_kurtosis = (!degenerate).then(|| m4 / (m2 * m2) - 3.0);
    let jarque_bera_p = skewness.zip(excess_kurtosis).map(|(s, k)| jarque_bera_p(nf, s, k));
    DiagnosticsReport {
        n,
        mean,
        sd,
        skewness,
        excess_kurtosis,
        ac1: autocorrelation(eta, 1),
        jarque_bera_p,
        kolmogorov_smirnov_p: Some(ks_normal_p(eta)),
        ljung_box_p: if degenerate { None } else { ljung_box_p(eta, LJUNG_BOX_LAGS) },
        arch_p: if degenerate { None } else { arch_lm_p(eta) },
        degenerate,
    }
}

fn chi2_sf(stat: f64, dof: f64) -> f64 {
    ChiSquared::new(dof).expect("positive degrees of freedom").sf(stat)
}

pub fn jarque_bera_p(n: f64, skewness: f64, excess_kurtosis: f64) -> f64 {
    let jb = n / 6.0 * (skewness * skewness + 0.25 * excess_kurtosis * excess_kurtosis);
    chi2_sf(jb, 2.0)
}

/// Kolmogorov-Smirnov distance to `N(0, 1)`.
pub fn ks_distance_normal(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let normal = Normal::standard();
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal.cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value with the small-sample correction
/// `lambda = (sqrt(n) + 0.12 + 0.11 / sqrt(n)) D`.
pub fn ks_normal_p(values: &[f64]) -> f64 {
    let d = ks_distance_normal(values);
    let rn = (values.len() as f64).sqrt();
    kolmogorov_sf((rn + 0.12 + 0.11 / rn) * d)
}

/// `P(K > lambda) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lambda^2)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

pub fn ljung_box_p(values: &[f64], lags: usize) -> Option<f64> {
    let n = values.len();
    if n <= lags + 1 {
        return None;
    }
    let nf = n as f64;
    let mut q = 0.0;
    for k in 1..=lags {
        let r = autocorrelation(values, k)?;
        q += r * r / (nf - k as f64);
    }
    Some(chi2_sf(nf * (nf + 2.0) * q, lags as f64))
}

/// Engle's LM test with one lag: `T R^2` from regressing `e_t^2` on a
/// constant and `e_{t-1}^2`.
pub fn arch_lm_p(values: &[f64]) -> Option<f64> {
    if values.len() < 3 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let y = &sq[ARCH_LAGS..];
    let x = &sq[..sq.len() - ARCH_LAGS];
    let m = y.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / m, y.iter().sum::<f64>() / m);
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    if !(sxx > 0.0) || !(syy > 0.0) {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let r2 = sxy * sxy / (sxx * syy);
    Some(chi2_sf(m * r2, ARCH_LAGS as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn constant_input_is_degenerate() {
        let r = residual_diagnostics(&[0.3; 50]);
        assert!(r.degenerate);
        assert_eq!(r.jarque_bera_p, None);
        assert_eq!(r.ljung_box_p, None);
        assert_eq!(r.arch_p, None);
        assert!(r.sd < 1e-12);
    }

    #[test]
    fn kolmogorov_tail_values() {
        // P(K > 1.36) ~ 0.049, P(K > 1.63) ~ 0.010
        assert!((kolmogorov_sf(1.36) - 0.0494).abs() < 1e-3);
        assert!((kolmogorov_sf(1.63) - 0.0098).abs() < 1e-3);
        assert_eq!(kolmogorov_sf(0.0), 1.0);
    }

    #[test]
    fn autocorrelated_series_fails_ljung_box() {
        let mut rng = seeded_rng(3);
        let mut x = 0.0;
        let v: Vec<f64> = (0..2000)
            .map(|_| {
                x = 0.5 * x + rng.sample::<f64, _>(StandardNormal);
                x
            })
            .collect();
        assert!(ljung_box_p(&v, 20).unwrap() < 0.01);
    }

    #[test]
    fn shifted_sample_fails_ks() {
        let mut rng = seeded_rng(4);
        let v: Vec<f64> = (0..2000).map(|_| 0.3 + rng.sample::<f64, _>(StandardNormal)).collect();
        assert!(ks_normal_p(&v) < 0.01);
    }
}
