//! Simulated and composite maximum likelihood estimation, the parametric
//! bootstrap, Monte Carlo experiments and likelihood-ratio comparisons
//! against the benchmark models.

mod bootstrap;
mod compare;
mod experiment;

pub use bootstrap::{parametric_bootstrap, BootstrapResult};
pub use compare::{lr_bootstrap_compare, Competitor, LrComparison};
pub use experiment::{
    run_experiment, run_experiment_with, ExperimentResult, ExperimentSpec, MethodSummary, ParamSummary, ReplicaEstimate,
};

use std::fmt;
use std::str::FromStr;

use crate::composite::{cml_loglik, CmlConfig};
use crate::diagnostics::{residual_diagnostics, DiagnosticsReport};
use crate::error::{Error, Result};
use crate::filter::{pf_loglik, run_filter, FilterConfig, FilterOutput};
use crate::optim::{nelder_mead_maximize, NelderMeadOptions, ParamTransform};
use crate::solver::{solve_price_function, SolverConfig};
use crate::{Params, Series};

/// Diameter above which a run that exhausted its budget counts as failed.
pub const FAILED_DIAMETER: f64 = 1e-2;
/// Shortest residual series for which diagnostics are reported.
pub const MIN_DIAGNOSTIC_LEN: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Particle-filter simulated maximum likelihood.
    Sml,
    /// Composite quasi maximum likelihood.
    Cml,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Sml => "sml",
            Method::Cml => "cml",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sml" => Ok(Method::Sml),
            "cml" => Ok(Method::Cml),
            other => Err(Error::InvalidInput(format!("unknown estimator `{other}` (expected sml or cml)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationConfig {
    pub method: Method,
    pub solver: SolverConfig,
    pub filter: FilterConfig,
    pub cml: CmlConfig,
    pub optimizer: NelderMeadOptions,
    /// Holds `rho` at this value (the iid-shock restriction uses 0).
    pub fixed_rho: Option<f64>,
    pub seed: u64,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self {
            method: Method::Sml,
            solver: SolverConfig::default(),
            filter: FilterConfig::default(),
            cml: CmlConfig::default(),
            optimizer: NelderMeadOptions::default(),
            fixed_rho: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationReport {
    pub method: Method,
    pub theta_hat: Params,
    pub loglik: f64,
    pub evaluations: usize,
    pub iterations: usize,
    pub diameter: f64,
    pub converged: bool,
    /// Non-finite optimum, or budget exhausted with a wide simplex.
    pub failed: bool,
    /// Filter pass at `theta_hat` with state tracking.
    pub filter: Option<FilterOutput<f64>>,
    pub diagnostics: Option<DiagnosticsReport>,
    pub bootstrap_se: Option<[Option<f64>; 4]>,
    /// Monte Carlo standard deviation of `(rho, a, b, delta, loglik)`
    /// across estimation seeds.
    pub mc_std: Option<[f64; 5]>,
}

/// The objective maximized by `estimate`, at one parameter value. Errors
/// and degenerate runs map to `-inf`.
pub fn objective(params: &Params, series: &Series, config: &EstimationConfig) -> f64 {
    if params.validate().is_err() {
        return f64::NEG_INFINITY;
    }
    let value = match config.method {
        Method::Sml => {
            let filter = FilterConfig { track_states: false, ..config.filter };
            pf_loglik(params, series, &filter, &config.solver, config.seed).map(|o| o.loglik)
        }
        Method::Cml => cml_loglik(params, series, &config.cml, &config.solver, config.seed).map(|o| o.loglik),
    };
    match value {
        Ok(v) if v.is_finite() => v,
        _ => f64::NEG_INFINITY,
    }
}

/// Maximizes the chosen objective from `start` with a fixed seed across
/// all evaluations, then runs the filter once more at the optimum for
/// residuals, stock-out probabilities and storage.
pub fn estimate(series: &Series, start: &Params, config: &EstimationConfig) -> Result<EstimationReport> {
    config.solver.validate()?;
    config.filter.validate()?;
    if config.method == Method::Cml {
        config.cml.validate()?;
    }
    let mut start = *start;
    if let Some(rho) = config.fixed_rho {
        start.rho = rho;
    }
    start.validate()?;
    let transform = ParamTransform::new(start.r, config.fixed_rho);
    let phi0 = transform.to_unconstrained(&start)?;
    let nm = nelder_mead_maximize(|phi| objective(&transform.to_params(phi), series, config), &phi0, &config.optimizer)?;
    let theta_hat = transform.to_params(&nm.x);
    let failed = !nm.value.is_finite() || (!nm.converged && nm.diameter > FAILED_DIAMETER);

    let table = solve_price_function(&theta_hat, &config.solver)?;
    let filter = run_filter(&table, series, &FilterConfig { track_states: true, ..config.filter }, config.seed)?;
    let diagnostics = (filter.is_finite() && filter.residual_eta.len() >= MIN_DIAGNOSTIC_LEN)
        .then(|| residual_diagnostics(&filter.residual_eta));
    Ok(EstimationReport {
        method: config.method,
        theta_hat,
        loglik: nm.value,
        evaluations: nm.evaluations,
        iterations: nm.iterations,
        diameter: nm.diameter,
        converged: nm.converged,
        failed,
        filter: Some(filter),
        diagnostics,
        bootstrap_se: None,
        mc_std: None,
    })
}

/// Re-estimates on the same data with `repeats` different seeds and
/// returns the standard deviation of each parameter and of the optimum.
pub fn monte_carlo_std(series: &Series, start: &Params, config: &EstimationConfig, repeats: usize) -> Result<[f64; 5]> {
    use rayon::prelude::*;
    if repeats < 2 {
        return Err(Error::InvalidParameter("Monte Carlo spread needs at least two repeats".into()));
    }
    let runs: Vec<Result<[f64; 5]>> = (0..repeats as u64)
        .into_par_iter()
        .map(|i| {
            let cfg = EstimationConfig {
                seed: crate::rng::derive_seed(config.seed, crate::rng::Stream::MonteCarlo, i),
                ..*config
            };
            let r = estimate(series, start, &cfg)?;
            let t = r.theta_hat;
            Ok([t.rho, t.a, t.b, t.delta, r.loglik])
        })
        .collect();
    let runs: Vec<[f64; 5]> = runs.into_iter().collect::<Result<_>>()?;
    let mut out = [0.0; 5];
    for (k, slot) in out.iter_mut().enumerate() {
        *slot = sample_sd(runs.iter().map(|r| r[k])).unwrap_or(0.0);
    }
    Ok(out)
}

pub(crate) fn sample_sd(values: impl Iterator<Item = f64> + Clone) -> Option<f64> {
    let n = values.clone().count();
    if n < 2 {
        return None;
    }
    // shift by the first value so identical inputs give exactly zero
    let origin = values.clone().next()?;
    let mean = values.clone().map(|v| v - origin).sum::<f64>() / n as f64;
    Some((values.map(|v| (v - origin - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt())
}
