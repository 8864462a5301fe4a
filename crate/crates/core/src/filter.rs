//! Sequential importance resampling filter with continuous resampling.
//!
//! The filter conditions on the first price. Particles for `z_1` come from
//! the stationary shock law; each step weights the particles by the
//! Gaussian predictive density of the next price, accumulates the log of
//! the mean weight, and moves the cloud to the next period by drawing from
//! the mixture `sum_j w*_j N(rho z_j, 1)` with stratified uniforms. All
//! randomness comes from one stream per seed and the number of draws never
//! depends on the parameters, so the estimate is continuous in them.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::model::StructuralParams;
use crate::moments::MomentEvaluator;
use crate::resample::{mixture_cdf, inverse_sample_uniforms, MixtureResampler, MixtureSpec, DEFAULT_GRID_SIZE};
use crate::rng::{stream_rng, Stream};
use crate::scalar::Scalar;
use crate::series::PriceSeries;
use crate::solver::{solve_price_function, PriceFunctionTable, SolverConfig};

/// Bounds applied to the predictive probabilities before `Phi^-1`.
pub const RESIDUAL_CLIP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FilterConfig {
    pub particles: usize,
    pub quad_order: usize,
    pub resample_grid: usize,
    /// Record filtered stock-out probabilities and storage. Estimation turns
    /// this off; it does not change the likelihood.
    pub track_states: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self { particles: 4096, quad_order: 16, resample_grid: DEFAULT_GRID_SIZE, track_states: true }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.particles == 0 {
            return Err(Error::InvalidParameter("particle count must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutput<F> {
    /// `sum_t log L_t`, or `-inf` when the filter degenerated.
    pub loglik: F,
    /// `log L_t` for each transition `t -> t+1` (length `T - 1` on success).
    pub step_loglik: Vec<F>,
    /// Predictive probabilities `u_t = P(p_t' <= p_t | p_1..p_{t-1})`, `t = 2..T`.
    pub residual_u: Vec<F>,
    /// `Phi^-1` of the clipped `residual_u`.
    pub residual_eta: Vec<F>,
    /// `P(p_t >= p*(z_t) | p_1..p_t)`, `t = 1..T` (empty unless tracked).
    pub stockout_prob: Vec<F>,
    /// Filtered median of the implied storage (empty unless tracked).
    pub storage_median: Vec<F>,
    pub degenerate: bool,
    /// First transition whose weights all vanished.
    pub degenerate_step: Option<usize>,
    /// Mixture components that fell outside the resampling grid.
    pub clamped_components: usize,
}

impl<F: Scalar> FilterOutput<F> {
    pub fn is_finite(&self) -> bool {
        !self.degenerate && self.loglik.is_finite()
    }
}

/// Solves the price function at `params` and runs the filter.
pub fn pf_loglik<F: Scalar>(
    params: &StructuralParams<F>,
    series: &PriceSeries<F>,
    config: &FilterConfig,
    solver: &SolverConfig,
    seed: u64,
) -> Result<FilterOutput<F>> {
    let table = solve_price_function(params, solver)?;
    run_filter(&table, series, config, seed)
}

/// Runs the filter on a solved price function.
pub fn run_filter<F: Scalar>(
    table: &PriceFunctionTable<F>,
    series: &PriceSeries<F>,
    config: &FilterConfig,
    seed: u64,
) -> Result<FilterOutput<F>> {
    config.validate()?;
    if series.len() < 2 {
        return Err(Error::InvalidInput("filtering needs at least two prices".into()));
    }
    let params = &table.params;
    let evaluator = MomentEvaluator::new(table, config.quad_order)?;
    let mut resampler = MixtureResampler::new(config.resample_grid)?;
    let n = config.particles;
    let nf = F::from_usize_lossy(n);
    let mut rng = stream_rng(seed, Stream::Filter, 0);

    let sd = params.shock_sd();
    let mut particles: Vec<F> = (0..n).map(|_| sd * F::lit(rng.sample::<f64, _>(StandardNormal))).collect();
    let prices = &series.values;
    let steps = prices.len() - 1;

    let mut out = FilterOutput {
        loglik: F::zero(),
        step_loglik: Vec::with_capacity(steps),
        residual_u: Vec::with_capacity(steps),
        residual_eta: Vec::with_capacity(steps),
        stockout_prob: Vec::new(),
        storage_median: Vec::new(),
        degenerate: false,
        degenerate_step: None,
        clamped_components: 0,
    };
    let standard = Normal::standard();
    let half_log_two_pi = F::lit(0.5 * (2.0 * std::f64::consts::PI).ln());
    let mut moments = Vec::with_capacity(n);
    let mut log_w = vec![F::zero(); n];
    let mut tilde = vec![F::zero(); n];

    for t in 0..steps {
        let (p, p_next) = (prices[t], prices[t + 1]);
        particles.par_iter().map(|&z| evaluator.moments(p, z)).collect_into_vec(&mut moments);

        if config.track_states {
            record_states(table, p, &particles, &moments, &mut out);
        }

        let mut u = 0.0f64;
        for (lw, m) in log_w.iter_mut().zip(&moments) {
            let d = p_next - m.mu;
            *lw = -half_log_two_pi - F::half() * m.sigma2.ln() - d * d / (m.sigma2 + m.sigma2);
            u += standard.cdf((d / m.sigma2.sqrt()).to_f64_lossy());
        }
        let max = log_w.iter().copied().fold(F::neg_infinity(), F::max);
        if !max.is_finite() {
            out.loglik = F::neg_infinity();
            out.degenerate = true;
            out.degenerate_step = Some(t + 1);
            return Ok(out);
        }
        let mut weights: Vec<F> = log_w.iter().map(|&lw| (lw - max).exp()).collect();
        let total: F = weights.iter().copied().sum();
        let step = max + (total / nf).ln();
        out.step_loglik.push(step);
        out.loglik += step;

        let u = F::lit((u / n as f64).clamp(RESIDUAL_CLIP, 1.0 - RESIDUAL_CLIP));
        out.residual_u.push(u);
        out.residual_eta.push(F::lit(standard.inverse_cdf(u.to_f64_lossy())));

        for w in &mut weights {
            *w /= total;
        }
        let means: Vec<F> = particles.iter().map(|&z| params.rho * z).collect();
        let spec = MixtureSpec { means, weights, variance: F::one() };
        for v in &mut tilde {
            *v = F::lit(rng.random::<f64>());
        }
        let resampled = resampler.mixture_pdf_fft(&spec).and_then(|mut grid| {
            mixture_cdf(&mut grid)?;
            Ok(grid)
        });
        match resampled {
            Ok(grid) => {
                out.clamped_components += grid.clamped;
                particles = inverse_sample_uniforms(&grid, &tilde);
            }
            Err(Error::InvalidGrid(_)) | Err(Error::NonFinite(_)) => {
                out.loglik = F::neg_infinity();
                out.degenerate = true;
                out.degenerate_step = Some(t + 1);
                return Ok(out);
            }
            Err(e) => return Err(e),
        }
    }

    if config.track_states {
        let p = prices[steps];
        particles.par_iter().map(|&z| evaluator.moments(p, z)).collect_into_vec(&mut moments);
        record_states(table, p, &particles, &moments, &mut out);
    }
    Ok(out)
}

fn record_states<F: Scalar>(
    table: &PriceFunctionTable<F>,
    p: F,
    particles: &[F],
    moments: &[crate::moments::PredictiveMoments<F>],
    out: &mut FilterOutput<F>,
) {
    let hits = particles.iter().filter(|&&z| table.is_stock_out(p, z)).count();
    out.stockout_prob.push(F::from_usize_lossy(hits) / F::from_usize_lossy(particles.len()));
    let mut storage: Vec<F> = moments.iter().map(|m| m.implied_storage).collect();
    let w = F::one() / F::from_usize_lossy(storage.len());
    let weights = vec![w; storage.len()];
    out.storage_median.push(weighted_median(&mut storage, &weights));
}

/// Smallest value whose cumulative normalized weight reaches 1/2.
pub fn weighted_median<F: Scalar>(values: &mut [F], weights: &[F]) -> F {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
    let total: F = weights.iter().copied().sum();
    let mut acc = F::zero();
    for &i in &idx {
        acc += weights[i] / total;
        if acc >= F::half() {
            return values[i];
        }
    }
    values[*idx.last().expect("non-empty")]
}

/// `eta_t = Phi^-1(u_t)` with `u_t` clipped to `[1e-12, 1 - 1e-12]`.
pub fn generalized_residuals<F: Scalar>(output: &FilterOutput<F>) -> Vec<F> {
    let standard = Normal::standard();
    output
        .residual_u
        .iter()
        .map(|u| F::lit(standard.inverse_cdf(u.to_f64_lossy().clamp(RESIDUAL_CLIP, 1.0 - RESIDUAL_CLIP))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Preset, ShockDistribution};
    use crate::simulate::simulate_dgp;

    fn small_solver() -> SolverConfig {
        SolverConfig { mz: 32, mx1: 64, mx2: 64, iterations: 200, ..Default::default() }
    }

    #[test]
    fn weighted_median_picks_smallest_half() {
        assert_eq!(weighted_median(&mut [3.0, 1.0, 2.0, 4.0], &[0.25; 4]), 2.0);
        assert_eq!(weighted_median(&mut [3.0, 1.0, 2.0], &[0.1, 0.1, 0.8]), 2.0);
        assert_eq!(weighted_median(&mut [5.0], &[1.0]), 5.0);
    }

    #[test]
    fn residual_clipping() {
        let out = FilterOutput::<f64> {
            loglik: 0.0,
            step_loglik: vec![],
            residual_u: vec![0.5, 1.0, 0.0],
            residual_eta: vec![],
            stockout_prob: vec![],
            storage_median: vec![],
            degenerate: false,
            degenerate_step: None,
            clamped_components: 0,
        };
        let eta = generalized_residuals(&out);
        assert!(eta[0].abs() < 1e-12);
        assert!(eta[1].is_finite() && eta[1] > 6.0);
        assert!(eta[2].is_finite() && eta[2] < -6.0);
    }

    #[test]
    fn deterministic_and_well_formed() {
        let p: StructuralParams<f64> = Preset::Monthly.params();
        let table = solve_price_function(&p, &small_solver()).unwrap();
        let sim = simulate_dgp(&p, &table, 40, 3, ShockDistribution::Gaussian, 12).unwrap();
        let cfg = FilterConfig { particles: 512, ..Default::default() };
        let a = run_filter(&table, &sim.series, &cfg, 9).unwrap();
        let b = run_filter(&table, &sim.series, &cfg, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.is_finite());
        assert_eq!(a.step_loglik.len(), 39);
        assert_eq!(a.residual_u.len(), 39);
        assert_eq!(a.stockout_prob.len(), 40);
        assert_eq!(a.storage_median.len(), 40);
        assert!(a.stockout_prob.iter().all(|q| (0.0..=1.0).contains(q)));
        assert!(a.storage_median.iter().all(|s| *s >= 0.0));
        let untracked = run_filter(&table, &sim.series, &FilterConfig { track_states: false, ..cfg }, 9).unwrap();
        assert_eq!(untracked.loglik, a.loglik);
        assert!(untracked.stockout_prob.is_empty());
    }

    #[test]
    fn impossible_jump_is_degenerate() {
        let p: StructuralParams<f64> = Preset::Monthly.params();
        let table = solve_price_function(&p, &small_solver()).unwrap();
        let series = PriceSeries::new(vec![1.0, 1.0, 1e200], 12).unwrap();
        let cfg = FilterConfig { particles: 64, ..Default::default() };
        let out = run_filter(&table, &series, &cfg, 1).unwrap();
        assert!(out.degenerate);
        assert_eq!(out.loglik, f64::NEG_INFINITY);
        assert_eq!(out.degenerate_step, Some(2));
    }
}
