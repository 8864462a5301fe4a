use crate::error::{Error, Result};
use crate::model::StructuralParams;
use crate::scalar::Scalar;

/// Grid sizes and solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Number of supply-shock nodes.
    pub mz: usize,
    /// Nodes in the fine lower stock grid.
    pub mx1: usize,
    /// Nodes in the coarse upper stock grid.
    pub mx2: usize,
    /// Highest price the table must represent.
    pub p_max: f64,
    /// Safety factor on the upper stock range.
    pub c: f64,
    /// Number of fixed-point sweeps; always performed in full.
    pub iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { mz: 64, mx1: 128, mx2: 128, p_max: 20.0, c: 1.5, iterations: 400 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mz < 2 || self.mx1 < 2 || self.mx2 < 1 {
            return Err(Error::InvalidGrid(format!(
                "need mz >= 2, mx1 >= 2, mx2 >= 1 (got {}, {}, {})",
                self.mz, self.mx1, self.mx2
            )));
        }
        if !(self.c >= 1.0) || !self.p_max.is_finite() {
            return Err(Error::InvalidGrid(format!("bad c={} or p_max={}", self.c, self.p_max)));
        }
        Ok(())
    }
}

/// The two-part `(x, z)` grid. Shock nodes are equally spaced over six
/// stationary standard deviations; stock nodes are a fine uniform grid over
/// the range containing the kink followed by a coarse uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverGrid<F> {
    pub mz: usize,
    pub mx1: usize,
    pub mx2: usize,
    pub z_nodes: Vec<F>,
    pub x_nodes: Vec<F>,
    pub p_max: F,
    pub c: F,
    z_step: F,
    fine_step: F,
    coarse_step: F,
}

impl<F: Scalar> SolverGrid<F> {
    pub fn nx(&self) -> usize {
        self.x_nodes.len()
    }

    pub fn x_min(&self) -> F {
        self.x_nodes[0]
    }

    pub fn x_max(&self) -> F {
        self.x_nodes[self.nx() - 1]
    }

    pub fn z_min(&self) -> F {
        self.z_nodes[0]
    }

    pub fn z_max(&self) -> F {
        self.z_nodes[self.mz - 1]
    }

    /// Cell index and local coordinate in `[0, 1]` for a shock value,
    /// clamped to the grid.
    #[inline]
    pub fn locate_z(&self, z: F) -> (usize, F) {
        locate_uniform(z, self.z_nodes[0], self.z_step, self.mz)
    }

    /// Cell index and local coordinate for a stock value, clamped to the grid.
    #[inline]
    pub fn locate_x(&self, x: F) -> (usize, F) {
        let nx = self.nx();
        let split = self.x_nodes[self.mx1 - 1];
        if x < split {
            locate_uniform(x, self.x_nodes[0], self.fine_step, self.mx1)
        } else {
            let (k, w) = locate_uniform(x, split, self.coarse_step, self.mx2 + 1);
            ((self.mx1 - 1 + k).min(nx - 2), w)
        }
    }
}

#[inline]
fn locate_uniform<F: Scalar>(v: F, lo: F, step: F, n: usize) -> (usize, F) {
    let s = (v - lo) / step;
    if !(s > F::zero()) {
        return (0, F::zero());
    }
    let last = F::from_usize_lossy(n - 1);
    if s >= last {
        return (n - 2, F::one());
    }
    let i = s.floor().to_usize().unwrap_or(0).min(n - 2);
    (i, s - F::from_usize_lossy(i))
}

/// Builds the solver grid for `params`.
///
/// Fails for `delta = 0`, where the upper stock range `c Z_max / delta` is
/// unbounded.
pub fn build_grid<F: Scalar>(params: &StructuralParams<F>, config: &SolverConfig) -> Result<SolverGrid<F>> {
    params.validate()?;
    config.validate()?;
    if params.delta <= F::zero() {
        return Err(Error::InvalidGrid("delta = 0 leaves the upper stock range unbounded".into()));
    }
    let mz = config.mz;
    let z_hi = F::lit(6.0) * params.shock_sd();
    let z_lo = -z_hi;
    let z_step = (z_hi - z_lo) / F::from_usize_lossy(mz - 1);
    let mut z_nodes: Vec<F> = (0..mz).map(|j| z_lo + z_step * F::from_usize_lossy(j)).collect();
    z_nodes[mz - 1] = z_hi;

    let p_max = F::lit(config.p_max);
    let c = F::lit(config.c);
    let x_lo = params.inverse_demand(p_max).min(z_lo);
    let x_mid = (-params.a / params.b).max(z_hi);
    // c * x_mid keeps the coarse grid increasing when -a/b dominates c Z_max / delta
    let x_hi = (c * z_hi / params.delta).max(c * x_mid);
    if !(x_lo < x_mid && x_mid < x_hi) || !x_hi.is_finite() {
        return Err(Error::InvalidGrid(format!("degenerate stock range [{x_lo}, {x_mid}, {x_hi}]")));
    }

    let (mx1, mx2) = (config.mx1, config.mx2);
    let fine_step = (x_mid - x_lo) / F::from_usize_lossy(mx1 - 1);
    let coarse_step = (x_hi - x_mid) / F::from_usize_lossy(mx2);
    let mut x_nodes = Vec::with_capacity(mx1 + mx2);
    x_nodes.extend((0..mx1).map(|i| x_lo + fine_step * F::from_usize_lossy(i)));
    x_nodes[mx1 - 1] = x_mid;
    x_nodes.extend((1..=mx2).map(|k| x_mid + coarse_step * F::from_usize_lossy(k)));
    x_nodes[mx1 + mx2 - 1] = x_hi;

    Ok(SolverGrid { mz, mx1, mx2, z_nodes, x_nodes, p_max, c, z_step, fine_step, coarse_step })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Preset;

    #[test]
    fn shock_nodes_cover_six_sd() {
        let mut p: StructuralParams<f64> = Preset::Monthly.params();
        p.rho = 0.0;
        let g = build_grid(&p, &SolverConfig::default()).unwrap();
        assert_eq!(g.z_nodes[0], -6.0);
        assert_eq!(g.z_nodes[63], 6.0);

        let p: StructuralParams<f64> = Preset::Monthly.params();
        let g = build_grid(&p, &SolverConfig::default()).unwrap();
        assert!((g.z_nodes[0] + 24.680702093691806).abs() < 1e-12);
    }

    #[test]
    fn default_sizes_and_stock_layout() {
        let p: StructuralParams<f64> = Preset::Monthly.params();
        let cfg = SolverConfig::default();
        assert_eq!((cfg.mz, cfg.mx1, cfg.mx2, cfg.iterations), (64, 128, 128, 400));
        let g = build_grid(&p, &cfg).unwrap();
        assert_eq!(g.nx(), 256);
        // X_1 = min(P^-1(20), Z_1) = P^-1(20) = -46.25
        assert!((g.x_nodes[0] + 46.25).abs() < 1e-12);
        // X_Mx1 = max(-a/b, Z_Mz) = Z_Mz
        assert_eq!(g.x_nodes[127], g.z_max());
        assert!((g.x_max() - 1.5 * g.z_max() / 0.02).abs() < 1e-9);
        let first_coarse = g.x_nodes[127] + (g.x_max() - g.x_nodes[127]) / 128.0;
        assert!((g.x_nodes[128] - first_coarse).abs() < 1e-9);
        assert!(g.x_nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn zero_delta_is_rejected() {
        let mut p: StructuralParams<f64> = Preset::Monthly.params();
        p.delta = 0.0;
        assert!(matches!(build_grid(&p, &SolverConfig::default()), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn locate_is_consistent_with_nodes() {
        let p: StructuralParams<f64> = Preset::Monthly.params();
        let g = build_grid(&p, &SolverConfig::default()).unwrap();
        for (i, &x) in g.x_nodes.iter().enumerate().take(g.nx() - 1) {
            let (k, w) = g.locate_x(x);
            let rebuilt = g.x_nodes[k] + w * (g.x_nodes[k + 1] - g.x_nodes[k]);
            assert!((rebuilt - x).abs() < 1e-9 * (1.0 + x.abs()), "node {i}");
        }
        assert_eq!(g.locate_x(-1e9), (0, 0.0));
        assert_eq!(g.locate_x(1e9), (g.nx() - 2, 1.0));
        assert_eq!(g.locate_z(1e9), (g.mz - 2, 1.0));
    }

    #[test]
    fn grid_is_continuous_in_parameters() {
        let p: StructuralParams<f64> = Preset::Monthly.params();
        let g0 = build_grid(&p, &SolverConfig::default()).unwrap();
        let mut q = p;
        q.b -= 1e-9;
        let g1 = build_grid(&q, &SolverConfig::default()).unwrap();
        let dmax = g0.x_nodes.iter().zip(&g1.x_nodes).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(dmax < 1e-5);
    }
}
