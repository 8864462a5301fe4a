use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// An observed or simulated price path.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries<F> {
    pub values: Vec<F>,
    /// 12 monthly, 52 weekly, 1 yearly.
    pub periods_per_year: u32,
    /// Mean of the raw prices before normalization (1 when not normalized).
    pub normalization_factor: F,
}

impl<F: Scalar> PriceSeries<F> {
    /// Wraps prices that are already on the model scale.
    pub fn new(values: Vec<F>, periods_per_year: u32) -> Result<Self> {
        check_values(&values)?;
        if periods_per_year == 0 {
            return Err(Error::InvalidInput("periods_per_year must be positive".into()));
        }
        Ok(Self { values, periods_per_year, normalization_factor: F::one() })
    }

    /// Rescales raw prices to unit sample mean, recording the factor.
    pub fn normalized(raw: Vec<F>, periods_per_year: u32) -> Result<Self> {
        check_values(&raw)?;
        let mean = raw.iter().copied().sum::<F>() / F::from_usize_lossy(raw.len());
        if mean == F::zero() || !mean.is_finite() {
            return Err(Error::InvalidInput("cannot normalize a series with zero mean".into()));
        }
        let values = raw.iter().map(|&v| v / mean).collect();
        let mut series = Self::new(values, periods_per_year)?;
        series.normalization_factor = mean;
        Ok(series)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Prices on the original scale.
    pub fn raw_values(&self) -> Vec<F> {
        self.values.iter().map(|&v| v * self.normalization_factor).collect()
    }

    pub fn mean(&self) -> F {
        self.values.iter().copied().sum::<F>() / F::from_usize_lossy(self.len())
    }
}

fn check_values<F: Scalar>(values: &[F]) -> Result<()> {
    if values.len() < 2 {
        return Err(Error::InvalidInput(format!("price series needs at least 2 values, got {}", values.len())));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite price at index {i}")));
    }
    Ok(())
}
