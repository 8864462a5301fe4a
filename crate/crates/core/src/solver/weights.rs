use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::grid::SolverGrid;

/// Row-stochastic transition matrix over the shock nodes: row `j` holds
/// masses proportional to `N(Z_k; rho Z_j, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix<F> {
    pub mz: usize,
    /// Row-major `mz x mz`.
    pub entries: Vec<F>,
    /// Per row, the half-open column range holding all non-negligible mass.
    pub(crate) support: Vec<(usize, usize)>,
}

/// Entries below this fraction of the row maximum are skipped in the sweep.
const NEGLIGIBLE: f64 = 1e-15;

impl<F: Scalar> WeightMatrix<F> {
    #[inline]
    pub fn get(&self, j: usize, k: usize) -> F {
        self.entries[j * self.mz + k]
    }

    pub fn row(&self, j: usize) -> &[F] {
        &self.entries[j * self.mz..(j + 1) * self.mz]
    }
}

pub fn build_weight_matrix<F: Scalar>(grid: &SolverGrid<F>, rho: F) -> Result<WeightMatrix<F>> {
    weights_for_nodes(&grid.z_nodes, rho)
}

/// Same as [`build_weight_matrix`] for an arbitrary ordered node set.
pub fn weights_for_nodes<F: Scalar>(nodes: &[F], rho: F) -> Result<WeightMatrix<F>> {
    let mz = nodes.len();
    let mut entries = vec![F::zero(); mz * mz];
    let mut support = Vec::with_capacity(mz);
    for (j, &zj) in nodes.iter().enumerate() {
        let row = &mut entries[j * mz..(j + 1) * mz];
        let centre = rho * zj;
        for (w, &zk) in row.iter_mut().zip(nodes) {
            let d = zk - centre;
            *w = (-F::half() * d * d).exp();
        }
        let total: F = row.iter().copied().sum();
        if !(total > F::zero()) || !total.is_finite() {
            return Err(Error::InvalidGrid(format!("weight row {j} normalizer underflows")));
        }
        let mut peak = F::zero();
        for w in row.iter_mut() {
            *w /= total;
            peak = peak.max(*w);
        }
        let cut = peak * F::lit(NEGLIGIBLE);
        let lo = row.iter().position(|&w| w >= cut).unwrap_or(0);
        let hi = mz - row.iter().rev().position(|&w| w >= cut).unwrap_or(0);
        support.push((lo, hi));
    }
    Ok(WeightMatrix { mz, entries, support })
}
