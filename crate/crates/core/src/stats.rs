//! Descriptive statistics of price paths.

use crate::scalar::Scalar;
use crate::series::PriceSeries;
use crate::solver::PriceFunctionTable;

/// Summary statistics; entries that are undefined for the input (zero
/// variance, too few points) are `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatsRecord<F> {
    pub n: usize,
    pub mean: F,
    /// Sample standard deviation (n - 1 denominator).
    pub sd: F,
    pub skewness: Option<F>,
    /// Raw kurtosis, 3 for a Gaussian.
    pub kurtosis: Option<F>,
    /// Kurtosis minus 3.
    pub excess_kurtosis: Option<F>,
    pub ac1: Option<F>,
    pub ac2: Option<F>,
    /// First-order autocorrelation of `|p_t - p_{t-1}|`.
    pub ac1_abs_diff: Option<F>,
    /// Fraction of periods with the price at or above the threshold price.
    pub stockout_frequency: Option<F>,
}

/// Mean and central moments `m2, m3, m4` (n denominators).
pub fn central_moments<F: Scalar>(values: &[F]) -> (F, F, F, F) {
    let n = F::from_usize_lossy(values.len());
    let mean = values.iter().copied().sum::<F>() / n;
    let (mut m2, mut m3, mut m4) = (F::zero(), F::zero(), F::zero());
    for &v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    (mean, m2 / n, m3 / n, m4 / n)
}

/// True when the spread is indistinguishable from summation round-off.
pub fn negligible_spread<F: Scalar>(m2: F, mean: F) -> bool {
    let scale = F::lit(1e-12) * (F::one() + mean.abs());
    !(m2 > scale * scale)
}

/// Lag-`k` sample autocorrelation; `None` for zero variance or `k >= n`.
pub fn autocorrelation<F: Scalar>(values: &[F], lag: usize) -> Option<F> {
    if lag >= values.len() {
        return None;
    }
    let n = F::from_usize_lossy(values.len());
    let mean = values.iter().copied().sum::<F>() / n;
    let denom: F = values.iter().map(|&v| (v - mean) * (v - mean)).sum();
    if negligible_spread(denom / n, mean) {
        return None;
    }
    let num: F = values.windows(lag + 1).map(|w| (w[0] - mean) * (w[lag] - mean)).sum();
    Some(num / denom)
}

pub fn describe<F: Scalar>(values: &[F]) -> StatsRecord<F> {
    let n = values.len();
    let (mean, m2, m3, m4) = central_moments(values);
    let nf = F::from_usize_lossy(n);
    let sd = if n > 1 { (m2 * nf / (nf - F::one())).sqrt() } else { F::zero() };
    let spread = !negligible_spread(m2, mean);
    let skewness = spread.then(|| m3 / m2.powf(F::lit(1.5)));
    let kurtosis = spread.then(|| m4 / (m2 * m2));
    let diffs: Vec<F> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    StatsRecord {
        n,
        mean,
        sd,
        skewness,
        kurtosis,
        excess_kurtosis: kurtosis.map(|k| k - F::lit(3.0)),
        ac1: autocorrelation(values, 1),
        ac2: autocorrelation(values, 2),
        ac1_abs_diff: autocorrelation(&diffs, 1),
        stockout_frequency: None,
    }
}

/// Statistics of a price path; with the solved table and the latent shock
/// path also the stock-out frequency `P(p_t >= p*(z_t))`.
pub fn price_stats<F: Scalar>(
    series: &PriceSeries<F>,
    pf: Option<&PriceFunctionTable<F>>,
    shocks: Option<&[F]>,
) -> StatsRecord<F> {
    let mut record = describe(&series.values);
    if let (Some(pf), Some(z)) = (pf, shocks) {
        let hits = series.values.iter().zip(z).filter(|(&p, &z)| pf.is_stock_out(p, z)).count();
        record.stockout_frequency = Some(F::from_usize_lossy(hits) / F::from_usize_lossy(series.len().min(z.len())));
    }
    record
}
