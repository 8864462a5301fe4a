//! Implied stock and one-step predictive moments of the price.

use crate::error::Result;
use crate::model::StructuralParams;
use crate::quadrature::{gauss_hermite_nodes, GaussHermite};
use crate::scalar::Scalar;
use crate::solver::PriceFunctionTable;

/// `E(p_{t+1} | p_t, z_t)`, `Var(p_{t+1} | p_t, z_t)` and the implied state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictiveMoments<F> {
    pub mu: F,
    pub sigma2: F,
    pub implied_stock: F,
    /// `x_t - P^-1(p_t)`, floored at zero.
    pub implied_storage: F,
}

/// Stock `x` solving `f(x, z) = p`.
///
/// For fixed `z` the interpolated table is piecewise linear and
/// non-increasing in `x`, so a binary search over the stock nodes followed by
/// a linear solve in the bracketing cell gives the root exactly. Prices above
/// the table at the lowest stock return the lower edge; prices below it at
/// the highest stock return the upper edge.
pub fn invert_state<F: Scalar>(pf: &PriceFunctionTable<F>, p: F, z: F) -> F {
    let grid = &pf.grid;
    let (j, wz) = grid.locate_z(z);
    let lo = pf.column(j);
    let hi = pf.column(j + 1);
    let col = |i: usize| lo[i] + wz * (hi[i] - lo[i]);
    let n = grid.nx();
    if !(p < col(0)) {
        return grid.x_min();
    }
    if !(p > col(n - 1)) {
        return grid.x_max();
    }
    // invariant: col(left) > p >= col(right)
    let (mut left, mut right) = (0usize, n - 1);
    while right - left > 1 {
        let mid = (left + right) / 2;
        if col(mid) > p {
            left = mid;
        } else {
            right = mid;
        }
    }
    let (f_left, f_right) = (col(left), col(right));
    let xs = &grid.x_nodes;
    let frac = (f_left - p) / (f_left - f_right);
    xs[left] + frac.min(F::one()) * (xs[right] - xs[left])
}

/// Evaluates predictive moments with a fixed quadrature rule.
#[derive(Debug, Clone)]
pub struct MomentEvaluator<'a, F> {
    pub table: &'a PriceFunctionTable<F>,
    pub rule: GaussHermite<F>,
}

impl<'a, F: Scalar> MomentEvaluator<'a, F> {
    pub fn new(table: &'a PriceFunctionTable<F>, quad_order: usize) -> Result<Self> {
        Ok(Self { table, rule: gauss_hermite_nodes(quad_order)? })
    }

    pub fn params(&self) -> &StructuralParams<F> {
        &self.table.params
    }

    pub fn moments(&self, p: F, z: F) -> PredictiveMoments<F> {
        let params = &self.table.params;
        let stock = invert_state(self.table, p, z);
        let storage = (stock - params.inverse_demand(p)).max(F::zero());
        let carried = (F::one() - params.delta) * storage;
        let centre = params.rho * z;

        let mut prices = [F::zero(); crate::quadrature::MAX_ORDER];
        let k = self.rule.order();
        let mut mu = F::zero();
        for (slot, (&n, &w)) in prices.iter_mut().zip(self.rule.nodes.iter().zip(&self.rule.weights)) {
            let z_next = centre + n;
            let price = self.table.eval(carried + z_next, z_next);
            *slot = price;
            mu += w * price;
        }
        // second central moment, two-pass
        let mut var = F::zero();
        for (&price, &w) in prices[..k].iter().zip(&self.rule.weights) {
            let d = price - mu;
            var += w * d * d;
        }
        let floor = F::lit(1e-12) * (F::one() + mu * mu);
        PredictiveMoments { mu, sigma2: var.max(floor), implied_stock: stock, implied_storage: storage }
    }

    /// Predictive mean and variance only.
    #[inline]
    pub fn mean_var(&self, p: F, z: F) -> (F, F) {
        let m = self.moments(p, z);
        (m.mu, m.sigma2)
    }
}

/// One-shot form of [`MomentEvaluator::moments`].
pub fn predictive_moments<F: Scalar>(
    pf: &PriceFunctionTable<F>,
    p: F,
    z: F,
    quad_order: usize,
) -> Result<PredictiveMoments<F>> {
    Ok(MomentEvaluator::new(pf, quad_order)?.moments(p, z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Preset;
    use crate::rng::seeded_rng;
    use crate::solver::{solve_price_function, SolverConfig};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn solved() -> PriceFunctionTable<f64> {
        let p = Preset::Monthly.params();
        let cfg = SolverConfig { mz: 32, mx1: 64, mx2: 64, iterations: 200, ..Default::default() };
        solve_price_function(&p, &cfg).unwrap()
    }

    #[test]
    fn node_round_trip() {
        let t = solved();
        for j in [3usize, 10, 16, 25] {
            for i in [5usize, 40, 63, 70, 100] {
                let p = t.value(i, j);
                let x = invert_state(&t, p, t.grid.z_nodes[j]);
                let col = t.column(j);
                // flat cells are ambiguous; otherwise the node is recovered
                if col[i - 1] > col[i] && col[i] > col[i + 1] {
                    assert!((x - t.grid.x_nodes[i]).abs() < 1e-9 * (1.0 + x.abs()), "i={i} j={j}");
                }
            }
        }
    }

    #[test]
    fn inversion_round_trip_and_monotone() {
        let t = solved();
        let mut rng = seeded_rng(3);
        for _ in 0..2000 {
            let z: f64 = rng.random_range(-20.0..20.0);
            let p: f64 = rng.random_range(0.05..8.0);
            let x = invert_state(&t, p, z);
            if x > t.grid.x_min() && x < t.grid.x_max() {
                assert!((t.eval(x, z) - p).abs() <= 1e-8, "p={p} z={z}");
            }
            let x2 = invert_state(&t, p * 1.01, z);
            assert!(x2 <= x + 1e-12);
        }
    }

    #[test]
    fn inversion_clamps_at_edges() {
        let t = solved();
        assert_eq!(invert_state(&t, 1e6, 0.0), t.grid.x_min());
        assert_eq!(invert_state(&t, -1e6, 0.0), t.grid.x_max());
    }

    #[test]
    fn constant_table_has_floor_variance() {
        let p = Preset::Monthly.params();
        let cfg = SolverConfig { mz: 8, mx1: 8, mx2: 8, ..Default::default() };
        let t = PriceFunctionTable::from_fn(p, &cfg, |_, _| 1.7f64).unwrap();
        let m = predictive_moments(&t, 1.7, 0.3, 16).unwrap();
        assert!((m.mu - 1.7).abs() < 1e-14);
        assert!(m.sigma2 <= 1e-12 * (1.0 + 1.7f64 * 1.7) * (1.0 + 1e-12));
        assert!(m.sigma2 > 0.0);
    }

    #[test]
    fn affine_table_moments_are_exact() {
        // with full depreciation nothing is carried, so p_{t+1} = f(z', z')
        // with z' = rho z + eps, which is affine in eps for an affine table
        let mut p: StructuralParams<f64> = Preset::Monthly.params();
        p.delta = 1.0;
        p.rho = 0.5;
        let cfg = SolverConfig { mz: 16, mx1: 16, mx2: 8, ..Default::default() };
        let t = PriceFunctionTable::from_fn(p, &cfg, |x, z| 3.0 - 0.2 * x + 0.05 * z).unwrap();
        let m = predictive_moments(&t, 1.0, -0.2, 16).unwrap();
        let slope = -0.2 + 0.05;
        assert!((m.mu - (3.0 - slope * 0.1)).abs() < 1e-12);
        assert!((m.sigma2 - slope * slope).abs() < 1e-12);
    }

    #[test]
    fn sixteen_point_rule_exact_on_quintic() {
        let gh = gauss_hermite_nodes::<f64>(16).unwrap();
        let poly = |e: f64| 1.0 + 2.0 * e - 0.5 * e.powi(3) + 0.1 * e.powi(5) + 0.25 * e.powi(4);
        assert!((gh.expect(poly) - 1.75).abs() < 1e-12);
    }

    #[test]
    fn mean_matches_monte_carlo() {
        let t = solved();
        let ev = MomentEvaluator::new(&t, 16).unwrap();
        let (p, z) = (1.0, 0.0);
        let m = ev.moments(p, z);
        let params = t.params;
        let carried = (1.0 - params.delta) * m.implied_storage;
        let mut rng = seeded_rng(99);
        let n = 2_000_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let e: f64 = rng.sample(StandardNormal);
            let zn = params.rho * z + e;
            let v = t.eval(carried + zn, zn);
            s1 += v;
            s2 += v * v;
        }
        let mean = s1 / n as f64;
        let sd = (s2 / n as f64 - mean * mean).sqrt();
        let se = sd / (n as f64).sqrt();
        assert!((m.mu - mean).abs() < 4.0 * se, "gh {} mc {} se {}", m.mu, mean, se);
    }
}
