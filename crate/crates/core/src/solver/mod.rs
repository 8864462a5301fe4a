//! Rational-expectations price function by fixed-point iteration on the
//! two-part `(x, z)` grid.
//!
//! Each sweep computes, for every node `(X_i, Z_j)`,
//!
//! ```text
//! G(X_i, Z_j) = beta * sum_k W[j,k] f(Z_k + (1 - delta)(X_i - P^-1(f(X_i, Z_j))), Z_k)
//! f(X_i, Z_j) = max(P(X_i), G(X_i, Z_j))
//! ```
//!
//! starting from `max(P(x), 0)`. The sweep is Jacobi style: every update
//! reads the previous iterate only, so columns can be processed in parallel
//! without affecting the result.

mod grid;
mod table;
mod weights;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::StructuralParams;
use crate::scalar::Scalar;

pub use grid::{build_grid, SolverConfig, SolverGrid};
pub use table::{kink_tolerance, PriceFunctionTable};
pub use weights::{build_weight_matrix, weights_for_nodes, WeightMatrix};

/// Solves the price function at `params`, always running exactly
/// `config.iterations` sweeps.
pub fn solve_price_function<F: Scalar>(
    params: &StructuralParams<F>,
    config: &SolverConfig,
) -> Result<PriceFunctionTable<F>> {
    let grid = build_grid(params, config)?;
    let weights = build_weight_matrix(&grid, params.rho)?;
    let nx = grid.nx();
    let mz = grid.mz;
    let demand: Vec<F> = grid.x_nodes.iter().map(|&x| params.demand(x)).collect();

    let mut current = vec![F::zero(); nx * mz];
    for col in current.chunks_mut(nx) {
        for (v, &p) in col.iter_mut().zip(&demand) {
            *v = p.max(F::zero());
        }
    }
    let mut next = current.clone();

    let beta = params.beta();
    let carry = F::one() - params.delta;
    let mut sup_change = F::zero();

    let mut scratch = PriceFunctionTable::from_values(current, grid, *params, 0, F::zero());
    for sweep in 0..config.iterations {
        let table = &scratch;
        let column_changes: Vec<F> = next
            .par_chunks_mut(nx)
            .enumerate()
            .map(|(j, out)| {
                let (k_lo, k_hi) = weights.support[j];
                let row = weights.row(j);
                let own = table.column(j);
                let mut change = F::zero();
                for i in 0..nx {
                    let x = table.grid.x_nodes[i];
                    let storage = x - params.inverse_demand(own[i]);
                    let shift = carry * storage;
                    let mut expectation = F::zero();
                    for k in k_lo..k_hi {
                        expectation += row[k] * table.eval_on_node(table.grid.z_nodes[k] + shift, k);
                    }
                    let updated = demand[i].max(beta * expectation);
                    // NaN propagates through max() as the other operand, so check explicitly
                    change = if updated.is_finite() { change.max((updated - own[i]).abs()) } else { F::nan() };
                    out[i] = updated;
                }
                change
            })
            .collect();
        std::mem::swap(&mut scratch.values, &mut next);
        sup_change = F::zero();
        for c in column_changes {
            if !c.is_finite() {
                return Err(Error::NonFinite(format!("price function sweep {}", sweep + 1)));
            }
            sup_change = sup_change.max(c);
        }
    }
    let mut table = scratch;
    table.iterations = config.iterations;
    table.final_sup_change = sup_change;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Preset;

    #[test]
    fn full_depreciation_gives_demand_floor() {
        let mut p: StructuralParams<f64> = Preset::Monthly.params();
        p.delta = 1.0;
        let cfg = SolverConfig { iterations: 1, ..Default::default() };
        let t = solve_price_function(&p, &cfg).unwrap();
        for (i, &x) in t.grid.x_nodes.iter().enumerate() {
            for j in 0..t.grid.mz {
                assert_eq!(t.value(i, j), p.demand(x).max(0.0));
            }
        }
    }

    #[test]
    fn solution_respects_floor_and_monotonicity() {
        let p: StructuralParams<f64> = Preset::Monthly.params();
        let cfg = SolverConfig { mz: 32, mx1: 64, mx2: 64, iterations: 120, ..Default::default() };
        let t = solve_price_function(&p, &cfg).unwrap();
        assert!(t.min_margin_over_floor() >= 0.0);
        assert!(t.max_monotonicity_violation() <= 1e-10);
        assert_eq!(t.iterations, 120);
    }

    #[test]
    fn zero_iterations_returns_initial_guess() {
        let p: StructuralParams<f64> = Preset::Yearly.params();
        let cfg = SolverConfig { iterations: 0, mz: 8, mx1: 8, mx2: 8, ..Default::default() };
        let t = solve_price_function(&p, &cfg).unwrap();
        assert_eq!(t.value(0, 0), p.demand(t.grid.x_nodes[0]).max(0.0));
    }

    #[test]
    fn runs_in_single_precision() {
        let p: StructuralParams<f32> = Preset::Monthly.params();
        let cfg = SolverConfig { mz: 16, mx1: 32, mx2: 32, iterations: 50, ..Default::default() };
        let t = solve_price_function(&p, &cfg).unwrap();
        assert!(t.min_margin_over_floor() >= 0.0);
        assert!(t.final_sup_change.is_finite());
    }
}
