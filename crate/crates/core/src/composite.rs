//! Composite quasi-likelihood over consecutive price pairs.
//!
//! The conditional law of `z_t` given `p_t` alone is estimated by a
//! Gaussian product kernel on a long thinned simulation from the price
//! process, evaluated over a uniform `z` grid. The predictive mean and
//! variance of each pair are the kernel-weighted averages of the
//! conditional moments across that grid.

use ndarray::{s, Array1, Array2, Axis};

use crate::error::{Error, Result};
use crate::model::{ShockDistribution, StructuralParams};
use crate::moments::MomentEvaluator;
use crate::rng::{derive_seed, Stream};
use crate::scalar::Scalar;
use crate::series::PriceSeries;
use crate::simulate::simulate_dgp;
use crate::solver::{solve_price_function, PriceFunctionTable, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CmlConfig {
    /// Retained simulated pairs.
    pub n_i: usize,
    /// Thinning interval.
    pub n_t: usize,
    /// Size of the `z` grid.
    pub n_g: usize,
    /// `h = bandwidth_scale * n_i^(-1/6) * sd`.
    pub bandwidth_scale: f64,
    /// Grid spans the sample mean of `z` +/- this many sample sds.
    pub grid_half_width: f64,
    pub quad_order: usize,
}

impl Default for CmlConfig {
    fn default() -> Self {
        Self { n_i: 50_000, n_t: 32, n_g: 128, bandwidth_scale: 2.0, grid_half_width: 4.0, quad_order: 16 }
    }
}

impl CmlConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_i < 2 || self.n_t == 0 {
            return Err(Error::InvalidParameter(format!("need n_i >= 2 and n_t >= 1, got {} and {}", self.n_i, self.n_t)));
        }
        if self.n_g < 8 {
            return Err(Error::InvalidParameter(format!("z grid needs at least 8 points, got {}", self.n_g)));
        }
        if self.n_i.checked_mul(self.n_t).is_none_or(|n| n > 200_000_000) {
            return Err(Error::InvalidParameter("n_i * n_t exceeds the simulation budget".into()));
        }
        if !(self.bandwidth_scale > 0.0) || !(self.grid_half_width > 0.0) {
            return Err(Error::InvalidParameter("bandwidth scale and grid width must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CmlOutput<F> {
    /// Quasi log-likelihood, or `-inf` when some observed price had no
    /// kernel mass.
    pub loglik: F,
    /// Per-pair `mu_bar(p_t)`, `t = 1..T-1`.
    pub mean: Vec<F>,
    /// Per-pair `sigma2_bar(p_t)`.
    pub variance: Vec<F>,
    pub degenerate: bool,
    pub degenerate_step: Option<usize>,
}

impl<F: Scalar> CmlOutput<F> {
    pub fn is_finite(&self) -> bool {
        !self.degenerate && self.loglik.is_finite()
    }
}

/// Thinned simulated sample with its bandwidths and `z` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSample<F> {
    pub p: Vec<F>,
    pub z: Vec<F>,
    pub h_p: F,
    pub h_z: F,
    pub z_grid: Vec<F>,
}

fn mean_sd<F: Scalar>(v: &[F]) -> (F, F) {
    let n = F::from_usize_lossy(v.len());
    let mean = v.iter().copied().sum::<F>() / n;
    let ss: F = v.iter().map(|&x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - F::one())).sqrt())
}

impl<F: Scalar> KernelSample<F> {
    /// Computes bandwidths and the grid from the sample moments.
    pub fn from_pairs(p: Vec<F>, z: Vec<F>, config: &CmlConfig) -> Result<Self> {
        if p.len() != z.len() || p.len() < 2 {
            return Err(Error::InvalidInput("kernel sample needs matching p and z of length >= 2".into()));
        }
        let (_, s_p) = mean_sd(&p);
        let (m_z, s_z) = mean_sd(&z);
        let factor = F::lit(config.bandwidth_scale * (p.len() as f64).powf(-1.0 / 6.0));
        let half = F::lit(config.grid_half_width) * s_z;
        let step = (half + half) / F::from_usize_lossy(config.n_g - 1);
        let z_grid = (0..config.n_g).map(|j| m_z - half + F::from_usize_lossy(j) * step).collect();
        Ok(Self { p, z, h_p: factor * s_p, h_z: factor * s_z, z_grid })
    }

    /// Kernel weights of each grid point for each price, normalized so each
    /// row sums to one. Rows whose weights all vanish are left as zeros.
    pub fn weights(&self, prices: &[F]) -> Array2<F> {
        let n_i = self.p.len();
        let n_g = self.z_grid.len();
        let half = F::half();
        let b = Array2::from_shape_fn((n_i, n_g), |(i, j)| {
            let d = (self.z_grid[j] - self.z[i]) / self.h_z;
            (-half * d * d).exp()
        });
        let mut out = Array2::zeros((prices.len(), n_g));
        const CHUNK: usize = 32;
        for (c, block) in prices.chunks(CHUNK).enumerate() {
            // shift each row's exponent by its largest term so the leading
            // contribution is exactly one
            let a = Array2::from_shape_fn((block.len(), n_i), |(t, i)| {
                let d = (block[t] - self.p[i]) / self.h_p;
                -half * d * d
            });
            let shifts: Array1<F> =
                a.map_axis(Axis(1), |row| row.iter().copied().fold(F::neg_infinity(), F::max));
            let a = Array2::from_shape_fn(a.dim(), |(t, i)| (a[[t, i]] - shifts[t]).exp());
            let w = a.dot(&b);
            let start = c * CHUNK;
            out.slice_mut(s![start..start + block.len(), ..]).assign(&w);
        }
        for mut row in out.rows_mut() {
            let total: F = row.iter().copied().sum();
            if total > F::zero() && total.is_finite() {
                row.mapv_inplace(|w| w / total);
            } else {
                row.fill(F::zero());
            }
        }
        out
    }
}

/// Simulates `n_i * n_t` periods at the table's parameters and keeps every
/// `n_t`-th pair, starting with the first.
pub fn simulate_kernel_sample<F: Scalar>(
    table: &PriceFunctionTable<F>,
    config: &CmlConfig,
    seed: u64,
) -> Result<KernelSample<F>> {
    config.validate()?;
    let len = config.n_i * config.n_t;
    let path = simulate_dgp(
        &table.params,
        table,
        len.max(2),
        derive_seed(seed, Stream::Composite, 0),
        ShockDistribution::Gaussian,
        1,
    )?;
    let p = path.series.values.iter().step_by(config.n_t).copied().take(config.n_i).collect();
    let z = path.shocks.iter().step_by(config.n_t).copied().take(config.n_i).collect();
    KernelSample::from_pairs(p, z, config)
}

/// Solves the price function at `params` and evaluates the composite
/// quasi log-likelihood.
pub fn cml_loglik<F: Scalar>(
    params: &StructuralParams<F>,
    series: &PriceSeries<F>,
    config: &CmlConfig,
    solver: &SolverConfig,
    seed: u64,
) -> Result<CmlOutput<F>> {
    let table = solve_price_function(params, solver)?;
    let sample = simulate_kernel_sample(&table, config, seed)?;
    cml_with_sample(&table, series, &sample, config.quad_order)
}

/// Composite quasi log-likelihood with a given kernel sample.
pub fn cml_with_sample<F: Scalar>(
    table: &PriceFunctionTable<F>,
    series: &PriceSeries<F>,
    sample: &KernelSample<F>,
    quad_order: usize,
) -> Result<CmlOutput<F>> {
    if series.len() < 2 {
        return Err(Error::InvalidInput("composite likelihood needs at least two prices".into()));
    }
    let evaluator = MomentEvaluator::new(table, quad_order)?;
    let prices = &series.values;
    let steps = prices.len() - 1;
    let weights = sample.weights(&prices[..steps]);
    let half_log_two_pi = F::lit(0.5 * (2.0 * std::f64::consts::PI).ln());
    let mut out = CmlOutput {
        loglik: F::zero(),
        mean: Vec::with_capacity(steps),
        variance: Vec::with_capacity(steps),
        degenerate: false,
        degenerate_step: None,
    };
    for t in 0..steps {
        let row = weights.row(t);
        if row.iter().all(|&w| w == F::zero()) {
            out.loglik = F::neg_infinity();
            out.degenerate = true;
            out.degenerate_step = Some(t + 1);
            return Ok(out);
        }
        let (mut mu, mut var) = (F::zero(), F::zero());
        for (&w, &z) in row.iter().zip(&sample.z_grid) {
            if w > F::zero() {
                let (m, v) = evaluator.mean_var(prices[t], z);
                mu += w * m;
                var += w * v;
            }
        }
        let d = prices[t + 1] - mu;
        out.loglik += -d * d / (var + var) - half_log_two_pi - F::half() * var.ln();
        out.mean.push(mu);
        out.variance.push(var);
    }
    if !out.loglik.is_finite() {
        out.degenerate = true;
        out.loglik = F::neg_infinity();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Preset;

    #[test]
    fn three_point_grid_by_hand() {
        let config = CmlConfig { n_g: 8, ..Default::default() };
        let mut sample = KernelSample::from_pairs(vec![1.0f64, 2.0], vec![-1.0, 1.0], &config).unwrap();
        sample.h_p = 0.5;
        sample.h_z = 1.0;
        sample.z_grid = vec![-1.0, 0.0, 1.0];
        let w = sample.weights(&[1.5, 1.0]);
        let k = |p: f64, zj: f64| -> f64 {
            [(1.0, -1.0), (2.0, 1.0)]
                .iter()
                .map(|(pi, zi)| (-0.5 * ((p - pi) / 0.5f64).powi(2) - 0.5 * (zj - zi) * (zj - zi)).exp())
                .sum()
        };
        for (t, &p) in [1.5, 1.0].iter().enumerate() {
            let raw: Vec<f64> = [-1.0, 0.0, 1.0].iter().map(|&z| k(p, z)).collect();
            let total: f64 = raw.iter().sum();
            for j in 0..3 {
                assert!((w[[t, j]] - raw[j] / total).abs() < 1e-14);
            }
        }
        // equidistant price: symmetric weights
        assert!((w[[0, 0]] - w[[0, 2]]).abs() < 1e-15);
    }

    #[test]
    fn bandwidths_follow_plug_in_rule() {
        let config = CmlConfig { n_g: 8, ..Default::default() };
        let p = vec![1.0f64, 2.0, 3.0, 4.0];
        let z = vec![0.0, 0.0, 2.0, 2.0];
        let s = KernelSample::from_pairs(p, z, &config).unwrap();
        let sd_p = (5.0f64 / 3.0).sqrt();
        let sd_z = (4.0f64 / 3.0).sqrt();
        assert!((s.h_p - 2.0 * 4f64.powf(-1.0 / 6.0) * sd_p).abs() < 1e-14);
        assert!((s.h_z - 2.0 * 4f64.powf(-1.0 / 6.0) * sd_z).abs() < 1e-14);
        assert!((s.z_grid[0] - (1.0 - 4.0 * sd_z)).abs() < 1e-14);
        assert!((s.z_grid[7] - (1.0 + 4.0 * sd_z)).abs() < 1e-14);
    }

    #[test]
    fn deterministic_and_convex() {
        let params: StructuralParams<f64> = Preset::Monthly.params();
        let solver = SolverConfig { mz: 32, mx1: 64, mx2: 64, iterations: 200, ..Default::default() };
        let table = solve_price_function(&params, &solver).unwrap();
        let series = simulate_dgp(&params, &table, 60, 4, ShockDistribution::Gaussian, 12).unwrap().series;
        let config = CmlConfig { n_i: 2000, n_t: 4, n_g: 32, ..Default::default() };
        let sample = simulate_kernel_sample(&table, &config, 8).unwrap();
        let a = cml_with_sample(&table, &series, &sample, 16).unwrap();
        let b = cml_with_sample(&table, &series, &simulate_kernel_sample(&table, &config, 8).unwrap(), 16).unwrap();
        assert_eq!(a, b);
        assert!(a.is_finite());
        let eval = MomentEvaluator::new(&table, 16).unwrap();
        for (t, &mu) in a.mean.iter().enumerate() {
            let mus: Vec<f64> = sample.z_grid.iter().map(|&z| eval.mean_var(series.values[t], z).0).collect();
            let lo = mus.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = mus.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert!(mu >= lo - 1e-12 && mu <= hi + 1e-12);
        }
    }

    #[test]
    fn far_price_is_degenerate() {
        let params: StructuralParams<f64> = Preset::Monthly.params();
        let solver = SolverConfig { mz: 16, mx1: 32, mx2: 32, iterations: 50, ..Default::default() };
        let table = solve_price_function(&params, &solver).unwrap();
        let config = CmlConfig { n_i: 200, n_t: 2, n_g: 16, ..Default::default() };
        let sample = simulate_kernel_sample(&table, &config, 1).unwrap();
        let series = PriceSeries::new(vec![1.0, 1e160, 1.0], 12).unwrap();
        let out = cml_with_sample(&table, &series, &sample, 16).unwrap();
        assert!(out.degenerate);
    }
}
