//! Simulation from the conditionally Gaussian price process implied by a
//! solved price function.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{ShockDistribution, StructuralParams};
use crate::moments::MomentEvaluator;
use crate::rng::seeded_rng;
use crate::scalar::Scalar;
use crate::series::PriceSeries;
use crate::solver::PriceFunctionTable;

/// Structural periods simulated and discarded before the first price.
pub const BURN_IN: usize = 1_000;

/// A simulated price path together with the latent supply shocks.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPath<F> {
    pub series: PriceSeries<F>,
    pub shocks: Vec<F>,
}

/// Simulates `len` periods of
///
/// ```text
/// p_{t+1} = mu(p_t, z_t) + sigma(p_t, z_t) eta_{t+1}
/// z_{t+1} = rho z_t + eps_{t+1}
/// ```
///
/// with `eta` drawn from `shocks` and `eps ~ N(0, 1)`. The initial pair
/// `(p_1, z_1)` comes from a structural warm-up: `z` starts from its
/// stationary law, stock starts at `E(z)/delta = 0`, and the storage
/// recursion `x' = (1 - delta)(x - P^-1(f(x, z))) + z'` runs for
/// [`BURN_IN`] periods.
pub fn simulate_dgp<F: Scalar>(
    params: &StructuralParams<F>,
    pf: &PriceFunctionTable<F>,
    len: usize,
    seed: u64,
    shocks: ShockDistribution,
    periods_per_year: u32,
) -> Result<SimulatedPath<F>> {
    if len < 2 {
        return Err(Error::InvalidInput(format!("simulation length must be at least 2, got {len}")));
    }
    params.validate()?;
    shocks.validate()?;
    let evaluator = MomentEvaluator::new(pf, 16)?;
    let mut rng = seeded_rng(seed);
    let normal = |rng: &mut crate::rng::StreamRng| -> F { F::lit(rng.sample::<f64, _>(StandardNormal)) };

    let mut z = params.shock_sd() * normal(&mut rng);
    let mut x = F::zero().max(pf.grid.x_min()).min(pf.grid.x_max());
    for _ in 0..BURN_IN {
        let p = pf.eval(x, z);
        let storage = (x - params.inverse_demand(p)).max(F::zero());
        z = params.rho * z + normal(&mut rng);
        x = (F::one() - params.delta) * storage + z;
    }
    let mut p = pf.eval(x, z);

    let mut prices = Vec::with_capacity(len);
    let mut path = Vec::with_capacity(len);
    prices.push(p);
    path.push(z);
    for t in 1..len {
        let (mu, sigma2) = evaluator.mean_var(p, z);
        let eta: F = shocks.sample(&mut rng);
        let eps = normal(&mut rng);
        p = mu + sigma2.sqrt() * eta;
        z = params.rho * z + eps;
        if !p.is_finite() {
            return Err(Error::NonFinite(format!("simulated price at period {}", t + 1)));
        }
        prices.push(p);
        path.push(z);
    }
    Ok(SimulatedPath { series: PriceSeries::new(prices, periods_per_year)?, shocks: path })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Preset;
    use crate::solver::{solve_price_function, SolverConfig};

    fn small_cfg() -> SolverConfig {
        SolverConfig { mz: 32, mx1: 64, mx2: 64, iterations: 150, ..Default::default() }
    }

    #[test]
    fn deterministic_given_seed() {
        let p: StructuralParams<f64> = Preset::Monthly.params();
        let t = solve_price_function(&p, &small_cfg()).unwrap();
        let a = simulate_dgp(&p, &t, 300, 5, ShockDistribution::Gaussian, 12).unwrap();
        let b = simulate_dgp(&p, &t, 300, 5, ShockDistribution::Gaussian, 12).unwrap();
        let c = simulate_dgp(&p, &t, 300, 6, ShockDistribution::Gaussian, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.series.values, c.series.values);
    }

    #[test]
    fn iid_shocks_have_unit_variance() {
        let mut p: StructuralParams<f64> = Preset::Yearly.params();
        p.rho = 0.0;
        let t = solve_price_function(&p, &small_cfg()).unwrap();
        let n = 100_000;
        let sim = simulate_dgp(&p, &t, n, 17, ShockDistribution::Gaussian, 1).unwrap();
        let m = sim.shocks.iter().sum::<f64>() / n as f64;
        let v = sim.shocks.iter().map(|z| (z - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        // se of a normal sample variance is sqrt(2/n)
        assert!((v - 1.0).abs() < 3.0 * (2.0 / n as f64).sqrt(), "var {v}");
    }

    #[test]
    fn persistent_shocks_have_stationary_variance() {
        let p: StructuralParams<f64> = Preset::Yearly.params();
        let t = solve_price_function(&p, &small_cfg()).unwrap();
        let n = 400_000;
        let sim = simulate_dgp(&p, &t, n, 23, ShockDistribution::Gaussian, 1).unwrap();
        let m = sim.shocks.iter().sum::<f64>() / n as f64;
        let v = sim.shocks.iter().map(|z| (z - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        let target = 1.0 / (1.0 - p.rho * p.rho);
        // effective sample size of an AR(1) variance estimate: n (1 - rho^2) / (1 + rho^2)
        let se = target * (2.0 * (1.0 + p.rho * p.rho) / ((1.0 - p.rho * p.rho) * n as f64)).sqrt();
        assert!((v - target).abs() < 3.0 * se, "var {v} target {target} se {se}");
    }

    #[test]
    fn rejects_short_paths() {
        let p: StructuralParams<f64> = Preset::Yearly.params();
        let t = solve_price_function(&p, &SolverConfig { iterations: 1, ..small_cfg() }).unwrap();
        assert!(simulate_dgp(&p, &t, 1, 0, ShockDistribution::Gaussian, 1).is_err());
    }
}
