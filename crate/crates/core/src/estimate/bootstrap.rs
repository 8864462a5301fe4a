use rayon::prelude::*;

use crate::error::Result;
use crate::model::ShockDistribution;
use crate::rng::{derive_seed, Stream};
use crate::simulate::simulate_dgp;
use crate::solver::solve_price_function;
use crate::{Params, Series};

use super::{estimate, sample_sd, EstimationConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapResult {
    /// Synthetic series, one per replica.
    pub series: Vec<Series>,
    /// Estimates for replicas that converged, `None` for dropped ones.
    pub estimates: Vec<Option<Params>>,
    /// Optimized objective per replica (`-inf` when dropped).
    pub logliks: Vec<f64>,
    pub failed: usize,
    /// Standard deviation of each parameter across kept replicas; `None`
    /// with fewer than two.
    pub std_errors: [Option<f64>; 4],
}

/// Simulates `replicas` series of length `len` at `theta_hat` and
/// re-estimates each from `theta_hat`. Replica `i` simulates with
/// `derive_seed(seed, Simulation, i)` and estimates with
/// `derive_seed(seed, Bootstrap, i)`.
pub fn parametric_bootstrap(
    theta_hat: &Params,
    len: usize,
    periods_per_year: u32,
    replicas: usize,
    config: &EstimationConfig,
    seed: u64,
) -> Result<BootstrapResult> {
    let table = solve_price_function(theta_hat, &config.solver)?;
    let series: Vec<Series> = (0..replicas as u64)
        .map(|i| {
            simulate_dgp(theta_hat, &table, len, derive_seed(seed, Stream::Simulation, i), ShockDistribution::Gaussian, periods_per_year)
                .map(|p| p.series)
        })
        .collect::<Result<_>>()?;
    let fits: Vec<Option<(Params, f64)>> = series
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let cfg = EstimationConfig { seed: derive_seed(seed, Stream::Bootstrap, i as u64), ..*config };
            match estimate(s, theta_hat, &cfg) {
                Ok(r) if !r.failed => Some((r.theta_hat, r.loglik)),
                _ => None,
            }
        })
        .collect();
    let estimates: Vec<Option<Params>> = fits.iter().map(|f| f.map(|(p, _)| p)).collect();
    let logliks = fits.iter().map(|f| f.map_or(f64::NEG_INFINITY, |(_, l)| l)).collect();
    let kept: Vec<Params> = estimates.iter().flatten().copied().collect();
    let column = |k: usize| sample_sd(kept.iter().map(move |p| p.theta()[k]));
    Ok(BootstrapResult {
        series,
        failed: estimates.iter().filter(|e| e.is_none()).count(),
        estimates,
        logliks,
        std_errors: [column(0), column(1), column(2), column(3)],
    })
}
