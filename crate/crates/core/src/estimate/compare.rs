use std::fmt;

use crate::benchmarks::{fit_benchmark, BenchmarkModel};
use crate::error::{Error, Result};
use crate::Series;

use super::{BootstrapResult, EstimationReport};

/// Model compared against the storage model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Competitor {
    /// The storage model itself; every ratio is zero.
    Storage,
    Benchmark(BenchmarkModel),
}

impl fmt::Display for Competitor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Competitor::Storage => f.write_str("storage"),
            Competitor::Benchmark(m) => write!(f, "{m}"),
        }
    }
}

impl std::str::FromStr for Competitor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("storage") {
            Ok(Competitor::Storage)
        } else {
            s.parse().map(Competitor::Benchmark)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LrComparison {
    pub competitor: Competitor,
    pub storage_loglik: f64,
    pub competitor_loglik: f64,
    /// `2 (l_storage - l_competitor)` on the observed data.
    pub observed_lr: f64,
    /// Ratios on the bootstrap replicas, ascending.
    pub simulated_lr: Vec<f64>,
    /// Number of simulated ratios below the observed one, ties counted as
    /// one half.
    pub rank: f64,
    /// Replicas dropped because either fit failed.
    pub failed: usize,
}

/// Compares the storage fit with a competitor on the observed series and
/// on each storage-model bootstrap replica.
pub fn lr_bootstrap_compare(
    observed: &Series,
    storage_fit: &EstimationReport,
    competitor: Competitor,
    bootstrap: &BootstrapResult,
) -> Result<LrComparison> {
    let fit_competitor = |s: &Series, storage_ll: f64| -> Result<f64> {
        match competitor {
            Competitor::Storage => Ok(storage_ll),
            Competitor::Benchmark(m) => fit_benchmark(m, &s.values).map(|f| f.loglik),
        }
    };
    let competitor_loglik = fit_competitor(observed, storage_fit.loglik)?;
    let observed_lr = 2.0 * (storage_fit.loglik - competitor_loglik);
    let mut simulated_lr = Vec::with_capacity(bootstrap.series.len());
    let mut failed = 0;
    for (s, &ll) in bootstrap.series.iter().zip(&bootstrap.logliks) {
        match (ll.is_finite(), fit_competitor(s, ll)) {
            (true, Ok(c)) if c.is_finite() => simulated_lr.push(2.0 * (ll - c)),
            _ => failed += 1,
        }
    }
    simulated_lr.sort_by(f64::total_cmp);
    let below = simulated_lr.iter().filter(|&&l| l < observed_lr).count() as f64;
    let ties = simulated_lr.iter().filter(|&&l| l == observed_lr).count() as f64;
    Ok(LrComparison {
        competitor,
        storage_loglik: storage_fit.loglik,
        competitor_loglik,
        observed_lr,
        simulated_lr,
        rank: below + 0.5 * ties,
        failed,
    })
}
