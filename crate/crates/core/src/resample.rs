//! Continuous resampling from an equal-variance Gaussian mixture.
//!
//! The mixture density is evaluated on a cell-centred grid by linear binning
//! of the weighted component means followed by a circular convolution with
//! the sampled Gaussian kernel (zero padded, so no wrap-around). The CDF is
//! the running midpoint-rule integral of that density, and draws come from
//! inverting the piecewise-linear CDF at stratified uniforms in one pass.

use std::sync::Arc;

use rand::Rng;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_GRID_SIZE: usize = 1024;
/// Half-width of the grid in mixture standard deviations.
pub const GRID_HALF_WIDTH: f64 = 8.0;

/// `sum_j w_j N(mu_j, variance)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec<F> {
    pub means: Vec<F>,
    pub weights: Vec<F>,
    pub variance: F,
}

impl<F: Scalar> MixtureSpec<F> {
    pub fn new(means: Vec<F>, weights: Vec<F>, variance: F) -> Result<Self> {
        let spec = Self { means, weights, variance };
        spec.validate()?;
        Ok(spec)
    }

    /// Equal weights `1/N`.
    pub fn equal_weights(means: Vec<F>, variance: F) -> Result<Self> {
        let w = F::one() / F::from_usize_lossy(means.len().max(1));
        let weights = vec![w; means.len()];
        Self::new(means, weights, variance)
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.means.is_empty() || self.means.len() != self.weights.len() {
            return Err(Error::InvalidInput(format!(
                "mixture needs matching non-empty means and weights, got {} and {}",
                self.means.len(),
                self.weights.len()
            )));
        }
        if !(self.variance > F::zero()) || !self.variance.is_finite() {
            return Err(Error::InvalidParameter(format!("mixture variance must be positive, got {}", self.variance)));
        }
        if self.means.iter().any(|m| !m.is_finite()) || self.weights.iter().any(|w| !w.is_finite() || *w < F::zero()) {
            return Err(Error::InvalidInput("mixture means and weights must be finite, weights non-negative".into()));
        }
        let total: f64 = self.weights.iter().map(|w| w.to_f64_lossy()).sum();
        let tol = if std::mem::size_of::<F>() == 4 { 1e-5 } else { 1e-10 };
        if (total - 1.0).abs() > tol {
            return Err(Error::InvalidInput(format!("mixture weights sum to {total}, expected 1")));
        }
        Ok(())
    }

    pub fn mean(&self) -> F {
        self.means.iter().zip(&self.weights).map(|(&m, &w)| m * w).sum()
    }

    pub fn total_variance(&self) -> F {
        let mean = self.mean();
        let between: F = self.means.iter().zip(&self.weights).map(|(&m, &w)| w * (m - mean) * (m - mean)).sum();
        self.variance + between
    }

    /// Exact mixture CDF, `sum_j w_j Phi((x - mu_j) / sigma)`.
    pub fn cdf(&self, x: F) -> f64 {
        let sd = self.variance.to_f64_lossy().sqrt();
        let x = x.to_f64_lossy();
        self.means
            .iter()
            .zip(&self.weights)
            .map(|(&m, &w)| w.to_f64_lossy() * normal_cdf((x - m.to_f64_lossy()) / sd))
            .sum()
    }
}

fn normal_cdf(x: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::standard().cdf(x)
}

/// Density and CDF of a mixture on `n_g` cells of width `step` starting at
/// `lo`; the cells cover the mixture mean +/- 8 mixture standard
/// deviations up to half a cell. `pdf[i]` is the density at the cell centre `lo + (i + 1/2) step`,
/// `cdf[i]` the integral up to the left edge `lo + i step`; `cdf` has
/// `n_g + 1` entries, starts at 0 and ends at exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ResampleGrid<F> {
    pub lo: F,
    pub hi: F,
    pub step: F,
    pub pdf: Vec<F>,
    pub cdf: Vec<F>,
    /// Number of components whose mean fell outside the grid and whose mass
    /// was put on a boundary cell.
    pub clamped: usize,
}

impl<F: Scalar> ResampleGrid<F> {
    pub fn n_g(&self) -> usize {
        self.pdf.len()
    }

    pub fn centre(&self, i: usize) -> F {
        self.lo + (F::from_usize_lossy(i) + F::half()) * self.step
    }

    pub fn edge(&self, i: usize) -> F {
        self.lo + F::from_usize_lossy(i) * self.step
    }

    /// Piecewise-linear CDF between cell edges.
    pub fn cdf_at(&self, x: F) -> F {
        if x <= self.lo {
            return F::zero();
        }
        if x >= self.hi {
            return F::one();
        }
        let s = (x - self.lo) / self.step;
        let i = s.floor().to_usize().unwrap_or(0).min(self.n_g() - 1);
        let t = s - F::from_usize_lossy(i);
        self.cdf[i] + t * (self.cdf[i + 1] - self.cdf[i])
    }
}

/// Reusable FFT plans and buffers for a fixed grid size.
pub struct MixtureResampler<F: Scalar> {
    n_g: usize,
    forward: Arc<dyn Fft<F>>,
    inverse: Arc<dyn Fft<F>>,
    signal: Vec<Complex<F>>,
    kernel: Vec<Complex<F>>,
    scratch: Vec<Complex<F>>,
}

impl<F: Scalar> std::fmt::Debug for MixtureResampler<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MixtureResampler").field("n_g", &self.n_g).finish()
    }
}

impl<F: Scalar> MixtureResampler<F> {
    pub fn new(n_g: usize) -> Result<Self> {
        if n_g < 8 {
            return Err(Error::InvalidGrid(format!("resampling grid needs at least 8 cells, got {n_g}")));
        }
        let len = (2 * n_g).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        let zero = Complex::new(F::zero(), F::zero());
        Ok(Self {
            n_g,
            forward,
            inverse,
            signal: vec![zero; len],
            kernel: vec![zero; len],
            scratch: vec![zero; scratch_len],
        })
    }

    pub fn n_g(&self) -> usize {
        self.n_g
    }

    /// Mixture density on a grid spanning the mixture mean +/- 8 mixture
    /// standard deviations. Fails when the component standard deviation is
    /// below one cell width.
    pub fn mixture_pdf_fft(&mut self, spec: &MixtureSpec<F>) -> Result<ResampleGrid<F>> {
        spec.validate()?;
        let centre = spec.mean();
        let half = F::lit(GRID_HALF_WIDTH) * spec.total_variance().sqrt();
        let n = self.n_g;
        let step = (half + half) / F::from_usize_lossy(n);
        // shift by half a cell so the mixture mean sits on a cell centre
        let lo = centre - half - F::half() * step;
        let hi = lo + F::from_usize_lossy(n) * step;
        let sigma = spec.variance.sqrt();
        if sigma < step {
            return Err(Error::InvalidGrid(format!(
                "component sd {sigma} is below the resampling cell width {step}; increase the grid size"
            )));
        }

        let zero = Complex::new(F::zero(), F::zero());
        self.signal.iter_mut().for_each(|c| *c = zero);
        let last = F::from_usize_lossy(n - 1);
        let mut clamped = 0;
        for (&m, &w) in spec.means.iter().zip(&spec.weights) {
            let s = (m - lo) / step - F::half();
            if s <= F::zero() {
                if s < -F::half() {
                    clamped += 1;
                }
                self.signal[0].re += w;
            } else if s >= last {
                if s > last + F::half() {
                    clamped += 1;
                }
                self.signal[n - 1].re += w;
            } else {
                let i = s.floor().to_usize().unwrap_or(0).min(n - 2);
                let t = s - F::from_usize_lossy(i);
                self.signal[i].re += (F::one() - t) * w;
                self.signal[i + 1].re += t * w;
            }
        }

        // Gaussian kernel at lags -(len/2)..len/2, stored in wrapped order.
        let len = self.signal.len();
        let norm = F::one() / (sigma * F::lit((2.0 * std::f64::consts::PI).sqrt()));
        for (k, c) in self.kernel.iter_mut().enumerate() {
            let lag = if k <= len / 2 { k as f64 } else { k as f64 - len as f64 };
            let u = F::lit(lag) * step / sigma;
            *c = Complex::new(norm * (-F::half() * u * u).exp(), F::zero());
        }

        self.forward.process_with_scratch(&mut self.signal, &mut self.scratch);
        self.forward.process_with_scratch(&mut self.kernel, &mut self.scratch);
        for (a, b) in self.signal.iter_mut().zip(&self.kernel) {
            *a = *a * *b;
        }
        self.inverse.process_with_scratch(&mut self.signal, &mut self.scratch);
        let scale = F::one() / F::from_usize_lossy(len);
        let pdf = self.signal[..n].iter().map(|c| (c.re * scale).max(F::zero())).collect();
        Ok(ResampleGrid { lo, hi, step, pdf, cdf: Vec::new(), clamped })
    }

    /// Density, CDF and `uniforms.len()` draws in one call.
    pub fn resample(&mut self, spec: &MixtureSpec<F>, tilde: &[F]) -> Result<(ResampleGrid<F>, Vec<F>)> {
        let mut grid = self.mixture_pdf_fft(spec)?;
        mixture_cdf(&mut grid)?;
        let draws = inverse_sample_uniforms(&grid, tilde);
        Ok((grid, draws))
    }
}

/// One-off density evaluation on `n_g` cells.
pub fn mixture_pdf_fft<F: Scalar>(spec: &MixtureSpec<F>, n_g: usize) -> Result<ResampleGrid<F>> {
    MixtureResampler::new(n_g)?.mixture_pdf_fft(spec)
}

/// Fills `grid.cdf` by the midpoint rule and renormalizes so the last
/// entry is exactly 1.
pub fn mixture_cdf<F: Scalar>(grid: &mut ResampleGrid<F>) -> Result<()> {
    let mut cdf = Vec::with_capacity(grid.pdf.len() + 1);
    let mut acc = F::zero();
    cdf.push(acc);
    for &d in &grid.pdf {
        acc += d * grid.step;
        cdf.push(acc);
    }
    if !(acc > F::zero()) || !acc.is_finite() {
        return Err(Error::NonFinite(format!("mixture density integrates to {acc}")));
    }
    for c in &mut cdf {
        *c /= acc;
    }
    *cdf.last_mut().expect("non-empty") = F::one();
    grid.cdf = cdf;
    Ok(())
}

/// Inverts the CDF at `u_j = (j + tilde_j) / N`. Output is ascending.
pub fn inverse_sample_uniforms<F: Scalar>(grid: &ResampleGrid<F>, tilde: &[F]) -> Vec<F> {
    let n = tilde.len();
    let nf = F::from_usize_lossy(n);
    let cells = grid.n_g();
    let mut out = Vec::with_capacity(n);
    let mut k = 0usize;
    for (j, &t) in tilde.iter().enumerate() {
        let u = (F::from_usize_lossy(j) + t) / nf;
        while k + 1 < cells && grid.cdf[k + 1] < u {
            k += 1;
        }
        let (c0, c1) = (grid.cdf[k], grid.cdf[k + 1]);
        let frac = if c1 > c0 { ((u - c0) / (c1 - c0)).max(F::zero()).min(F::one()) } else { F::zero() };
        out.push(grid.edge(k) + frac * grid.step);
    }
    out
}

/// Draws `n` stratified uniforms from `rng` and inverts the CDF.
pub fn stratified_inverse_sample<F: Scalar, R: Rng + ?Sized>(grid: &ResampleGrid<F>, n: usize, rng: &mut R) -> Vec<F> {
    let tilde: Vec<F> = (0..n).map(|_| F::lit(rng.random::<f64>())).collect();
    inverse_sample_uniforms(grid, &tilde)
}
