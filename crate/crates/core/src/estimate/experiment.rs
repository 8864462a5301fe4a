use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::ShockDistribution;
use crate::rng::{derive_seed, Stream};
use crate::simulate::simulate_dgp;
use crate::solver::solve_price_function;
use crate::{Params, Series};

use super::{estimate, objective, sample_sd, EstimationConfig, Method};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub truth: Params,
    pub len: usize,
    pub replicas: usize,
    pub periods_per_year: u32,
    pub methods: Vec<Method>,
    pub shocks: ShockDistribution,
    pub seed: u64,
    /// Repeated estimations of the first replica with different seeds for
    /// the Monte Carlo standard deviation; below 2 disables it.
    pub mc_repeats: usize,
    /// Settings shared by all estimations; `method` and `seed` are
    /// overridden per run.
    pub config: EstimationConfig,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.truth.validate()?;
        self.shocks.validate()?;
        if self.replicas == 0 || self.methods.is_empty() || self.len < 2 {
            return Err(Error::InvalidParameter(
                "an experiment needs at least one replica, one method and two periods".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of one estimation inside an experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicaEstimate {
    pub params: Params,
    pub loglik: f64,
    pub converged: bool,
    pub failed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ParamSummary {
    pub bias: f64,
    pub sd: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    /// `(rho, a, b, delta)` in that order.
    pub params: [ParamSummary; 4],
    pub mean_loglik: f64,
    pub used: usize,
    pub failed: usize,
    /// Monte Carlo standard deviation of `(rho, a, b, delta, loglik)`.
    pub mc_std: Option<[f64; 5]>,
    /// Wall time of one objective evaluation at the true parameters.
    pub tau_seconds: Option<f64>,
    /// Per-replica results; `None` when the estimator returned an error.
    pub estimates: Vec<Option<ReplicaEstimate>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub methods: Vec<MethodSummary>,
}

impl ExperimentResult {
    pub fn method(&self, method: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == method)
    }
}

/// The real estimator, starting at the true parameters.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    let config = spec.config;
    let estimator = move |series: &Series, method: Method, start: &Params, seed: u64| -> Result<ReplicaEstimate> {
        let r = estimate(series, start, &EstimationConfig { method, seed, ..config })?;
        Ok(ReplicaEstimate { params: r.theta_hat, loglik: r.loglik, converged: r.converged, failed: r.failed })
    };
    let mut result = run_experiment_with(spec, &estimator)?;
    let data = first_replica(spec)?;
    for summary in &mut result.methods {
        let cfg = EstimationConfig { method: summary.method, ..config };
        let start = Instant::now();
        let _ = objective(&spec.truth, &data, &cfg);
        summary.tau_seconds = Some(start.elapsed().as_secs_f64());
    }
    Ok(result)
}

fn replica_series(spec: &ExperimentSpec, table: &crate::PriceFunction, i: u64) -> Result<Series> {
    simulate_dgp(&spec.truth, table, spec.len, derive_seed(spec.seed, Stream::Experiment, i), spec.shocks, spec.periods_per_year)
        .map(|p| p.series)
}

fn first_replica(spec: &ExperimentSpec) -> Result<Series> {
    let table = solve_price_function(&spec.truth, &spec.config.solver)?;
    replica_series(spec, &table, 0)
}

/// Simulates the replicas at the true parameters and applies `estimator`
/// (started at the truth) to each, for each method. Replica `i` uses
/// simulation seed `derive_seed(seed, Experiment, i)` and estimation seed
/// `derive_seed(seed, Filter, i)`.
pub fn run_experiment_with<E>(spec: &ExperimentSpec, estimator: &E) -> Result<ExperimentResult>
where
    E: Fn(&Series, Method, &Params, u64) -> Result<ReplicaEstimate> + Sync,
{
    spec.validate()?;
    let table = solve_price_function(&spec.truth, &spec.config.solver)?;
    let data: Vec<Series> = (0..spec.replicas as u64).map(|i| replica_series(spec, &table, i)).collect::<Result<_>>()?;

    let mut methods = Vec::with_capacity(spec.methods.len());
    for &method in &spec.methods {
        let estimates: Vec<Option<ReplicaEstimate>> = data
            .par_iter()
            .enumerate()
            .map(|(i, s)| estimator(s, method, &spec.truth, derive_seed(spec.seed, Stream::Filter, i as u64)).ok())
            .collect();
        let kept: Vec<&ReplicaEstimate> = estimates.iter().flatten().filter(|e| !e.failed).collect();
        let mut params = [ParamSummary::default(); 4];
        let truth = spec.truth.theta();
        for (k, slot) in params.iter_mut().enumerate() {
            if kept.is_empty() {
                *slot = ParamSummary { bias: f64::NAN, sd: f64::NAN, rmse: f64::NAN };
                continue;
            }
            let values: Vec<f64> = kept.iter().map(|e| e.params.theta()[k]).collect();
            let n = values.len() as f64;
            let bias = values.iter().map(|v| v - truth[k]).sum::<f64>() / n;
            let rmse = (values.iter().map(|v| (v - truth[k]).powi(2)).sum::<f64>() / n).sqrt();
            *slot = ParamSummary { bias, sd: sample_sd(values.iter().copied()).unwrap_or(f64::NAN), rmse };
        }
        let mean_loglik = if kept.is_empty() {
            f64::NAN
        } else {
            kept.iter().map(|e| e.loglik).sum::<f64>() / kept.len() as f64
        };

        let mc_std = if spec.mc_repeats >= 2 {
            let runs: Vec<ReplicaEstimate> = (0..spec.mc_repeats as u64)
                .into_par_iter()
                .map(|k| estimator(&data[0], method, &spec.truth, derive_seed(spec.seed, Stream::MonteCarlo, k)))
                .collect::<Result<_>>()?;
            let mut out = [0.0; 5];
            for (k, slot) in out.iter_mut().enumerate() {
                let column = runs.iter().map(move |r| if k < 4 { r.params.theta()[k] } else { r.loglik });
                *slot = sample_sd(column).unwrap_or(0.0);
            }
            Some(out)
        } else {
            None
        };

        methods.push(MethodSummary {
            method,
            params,
            mean_loglik,
            used: kept.len(),
            failed: spec.replicas - kept.len(),
            mc_std,
            tau_seconds: None,
            estimates,
        });
    }
    Ok(ExperimentResult { spec: spec.clone(), methods })
}
