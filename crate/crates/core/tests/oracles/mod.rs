//! Independent reference computations shared by the integration and
//! acceptance tests. Nothing here calls the filter, the resampler or the
//! benchmark fitting code.
#![allow(dead_code)]

use storage_core::{MomentEvaluator, PriceFunction};

fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    (-0.5 * d * d / var).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

fn trapezoid_weights(lo: f64, hi: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let h = (hi - lo) / (n - 1) as f64;
    let nodes = (0..n).map(|i| lo + i as f64 * h).collect();
    let weights = (0..n).map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h }).collect();
    (nodes, weights)
}

/// Log-likelihood of `p_2, p_3` given `p_1` by nested trapezoid quadrature
/// over `z_1 ~ N(0, 1/(1 - rho^2))` and `z_2 | z_1 ~ N(rho z_1, 1)`.
pub fn three_period_loglik(table: &PriceFunction, prices: [f64; 3], points: usize) -> f64 {
    let params = table.params;
    let rho = params.rho;
    let stat_var = 1.0 / (1.0 - rho * rho);
    let half = 8.0 * stat_var.sqrt();
    let eval = MomentEvaluator::new(table, 16).unwrap();
    let (z1, w1) = trapezoid_weights(-half, half, points);
    let (z2, w2) = trapezoid_weights(-half - 8.0, half + 8.0, points);
    let second: Vec<f64> = z2
        .iter()
        .map(|&z| {
            let (mu, var) = eval.mean_var(prices[1], z);
            normal_pdf(prices[2], mu, var)
        })
        .collect();
    let mut total = 0.0;
    for (&za, &wa) in z1.iter().zip(&w1) {
        let (mu, var) = eval.mean_var(prices[0], za);
        let first = normal_pdf(prices[1], mu, var) * normal_pdf(za, 0.0, stat_var);
        if first == 0.0 {
            continue;
        }
        let inner: f64 = z2
            .iter()
            .zip(&w2)
            .zip(&second)
            .map(|((&zb, &wb), &s)| wb * normal_pdf(zb, rho * za, 1.0) * s)
            .sum();
        total += wa * first * inner;
    }
    total.ln()
}
