//! Numerical solution and likelihood-based estimation of the competitive
//! storage model with autocorrelated supply shocks, using only price data.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the type
//! aliases at the bottom of this file fix it to `f64`, which is what the CLI
//! and the estimation harness use.

pub mod benchmarks;
pub mod composite;
pub mod diagnostics;
pub mod error;
pub mod estimate;
pub mod filter;
pub mod model;
pub mod moments;
pub mod optim;
pub mod quadrature;
pub mod resample;
pub mod rng;
pub mod scalar;
pub mod series;
pub mod simulate;
pub mod solver;
pub mod stats;

pub use benchmarks::{fit_benchmark, BenchmarkFit, BenchmarkModel};
pub use composite::{cml_loglik, cml_with_sample, simulate_kernel_sample, CmlConfig, CmlOutput, KernelSample};
pub use diagnostics::{residual_diagnostics, DiagnosticsReport};
pub use error::{Error, Result};
pub use estimate::{estimate, parametric_bootstrap, run_experiment, EstimationConfig, EstimationReport, Method};
pub use filter::{generalized_residuals, pf_loglik, run_filter, FilterConfig, FilterOutput};
pub use moments::{invert_state, predictive_moments, MomentEvaluator, PredictiveMoments};
pub use optim::{nelder_mead_maximize, NelderMeadOptions, NelderMeadResult, ParamTransform};
pub use quadrature::{gauss_hermite_nodes, GaussHermite};
pub use model::{inverse_demand, period_rate, Preset, ShockDistribution, StructuralParams};
pub use resample::{inverse_sample_uniforms, mixture_cdf, mixture_pdf_fft, stratified_inverse_sample, MixtureResampler, MixtureSpec, ResampleGrid};
pub use scalar::Scalar;
pub use series::PriceSeries;
pub use simulate::{simulate_dgp, SimulatedPath};
pub use stats::{price_stats, StatsRecord};
pub use solver::{build_grid, build_weight_matrix, solve_price_function, PriceFunctionTable, SolverConfig, SolverGrid};

pub type Params = StructuralParams<f64>;
pub type Series = PriceSeries<f64>;
pub type PriceFunction = PriceFunctionTable<f64>;
