use std::io::{self, BufRead, Write};

use crate::error::{Error, Result};
use crate::model::StructuralParams;
use crate::scalar::Scalar;

use super::grid::{build_grid, SolverConfig, SolverGrid};

/// Tabulated price function `f(x, z)` with bilinear evaluation off the nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceFunctionTable<F> {
    /// Node values, z-major: entry `(i, j)` lives at `j * nx + i`.
    pub(crate) values: Vec<F>,
    pub grid: SolverGrid<F>,
    /// Parameters the table was solved at.
    pub params: StructuralParams<F>,
    pub iterations: usize,
    /// Largest absolute node update in the last sweep.
    pub final_sup_change: F,
}

impl<F: Scalar> PriceFunctionTable<F> {
    pub(crate) fn from_values(
        values: Vec<F>,
        grid: SolverGrid<F>,
        params: StructuralParams<F>,
        iterations: usize,
        final_sup_change: F,
    ) -> Self {
        debug_assert_eq!(values.len(), grid.nx() * grid.mz);
        Self { values, grid, params, iterations, final_sup_change }
    }

    /// Builds a table from a function of `(x, z)` evaluated at the nodes.
    pub fn from_fn(params: StructuralParams<F>, config: &SolverConfig, g: impl Fn(F, F) -> F) -> Result<Self> {
        let grid = build_grid(&params, config)?;
        let nx = grid.nx();
        let mut values = vec![F::zero(); nx * grid.mz];
        for (j, &z) in grid.z_nodes.iter().enumerate() {
            for (i, &x) in grid.x_nodes.iter().enumerate() {
                values[j * nx + i] = g(x, z);
            }
        }
        Ok(Self::from_values(values, grid, params, 0, F::zero()))
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> F {
        self.values[j * self.grid.nx() + i]
    }

    /// Values along the stock direction at shock node `j`.
    #[inline]
    pub fn column(&self, j: usize) -> &[F] {
        let nx = self.grid.nx();
        &self.values[j * nx..(j + 1) * nx]
    }

    /// Bilinear interpolation; queries outside the grid are clamped to the
    /// nearest edge first.
    #[inline]
    pub fn eval(&self, x: F, z: F) -> F {
        let (j, wz) = self.grid.locate_z(z);
        let (i, wx) = self.grid.locate_x(x);
        let nx = self.grid.nx();
        let lo = &self.values[j * nx..];
        let hi = &self.values[(j + 1) * nx..];
        let f0 = lo[i] + wx * (lo[i + 1] - lo[i]);
        let f1 = hi[i] + wx * (hi[i + 1] - hi[i]);
        f0 + wz * (f1 - f0)
    }

    /// Linear interpolation in `x` along shock node `j`, edge-clamped.
    #[inline]
    pub fn eval_on_node(&self, x: F, j: usize) -> F {
        let (i, wx) = self.grid.locate_x(x);
        let col = self.column(j);
        col[i] + wx * (col[i + 1] - col[i])
    }

    /// Largest stock `x*(z)` at which the non-negativity constraint still
    /// binds, i.e. where `f(x, z) <= P(x) + tol` holds on `[X_1, x]`.
    /// Returns `None` when the price exceeds demand at the lowest node.
    pub fn threshold_stock(&self, z: F) -> Option<F> {
        let (j, wz) = self.grid.locate_z(z);
        let xs = &self.grid.x_nodes;
        let lo = self.column(j);
        let hi = self.column(j + 1);
        let gap = |i: usize| {
            let f = lo[i] + wz * (hi[i] - lo[i]);
            let p = self.params.demand(xs[i]);
            (f - p, kink_tolerance(p))
        };
        let (g0, t0) = gap(0);
        if g0 > t0 {
            return None;
        }
        for i in 1..xs.len() {
            let (g, t) = gap(i);
            if g > t {
                let (gp, tp) = gap(i - 1);
                // the gap is linear on the cell, so cross at the tolerance level
                let tol = F::half() * (t + tp);
                let frac = ((tol - gp) / (g - gp)).max(F::zero()).min(F::one());
                return Some(xs[i - 1] + frac * (xs[i] - xs[i - 1]));
            }
        }
        Some(self.grid.x_max())
    }

    /// Threshold price `p*(z) = P(x*(z))`; prices at or above it mean a
    /// stock-out. `+inf` when storage is active everywhere on the grid.
    pub fn threshold_price(&self, z: F) -> F {
        match self.threshold_stock(z) {
            Some(x) => self.params.demand(x),
            None => F::infinity(),
        }
    }

    /// Whether `p` signals a binding non-negativity constraint at shock `z`.
    pub fn is_stock_out(&self, p: F, z: F) -> bool {
        let ps = self.threshold_price(z);
        p >= ps - kink_tolerance(ps)
    }

    /// Largest violation of `x -> f(x, Z_j)` being non-increasing.
    pub fn max_monotonicity_violation(&self) -> F {
        let mut worst = F::zero();
        for j in 0..self.grid.mz {
            for w in self.column(j).windows(2) {
                worst = worst.max(w[1] - w[0]);
            }
        }
        worst
    }

    /// Smallest margin of `f - max(P, 0)` over the nodes.
    pub fn min_margin_over_floor(&self) -> F {
        let mut worst = F::infinity();
        for j in 0..self.grid.mz {
            for (i, &f) in self.column(j).iter().enumerate() {
                let floor = self.params.demand(self.grid.x_nodes[i]).max(F::zero());
                worst = worst.min(f - floor);
            }
        }
        worst
    }

    /// Writes the table as text: `key = value` header lines, then a CSV block
    /// whose first row holds the shock nodes and each further row holds a
    /// stock node followed by its prices (row-major over stock).
    pub fn write_dump<W: Write>(&self, mut out: W) -> io::Result<()> {
        let p = &self.params;
        writeln!(out, "# tabulated storage-model price function")?;
        writeln!(out, "mz = {}", self.grid.mz)?;
        writeln!(out, "mx1 = {}", self.grid.mx1)?;
        writeln!(out, "mx2 = {}", self.grid.mx2)?;
        writeln!(out, "rho = {}", p.rho)?;
        writeln!(out, "a = {}", p.a)?;
        writeln!(out, "b = {}", p.b)?;
        writeln!(out, "delta = {}", p.delta)?;
        writeln!(out, "r = {}", p.r)?;
        writeln!(out, "iterations = {}", self.iterations)?;
        writeln!(out, "final_sup_change = {}", self.final_sup_change)?;
        write!(out, "x\\z")?;
        for z in &self.grid.z_nodes {
            write!(out, ",{z}")?;
        }
        writeln!(out)?;
        for (i, x) in self.grid.x_nodes.iter().enumerate() {
            write!(out, "{x}")?;
            for j in 0..self.grid.mz {
                write!(out, ",{}", self.value(i, j))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Reads a dump produced by [`write_dump`](Self::write_dump). `p_max` and
    /// `c` are not part of the dump and are taken from `config`.
    pub fn read_dump<R: BufRead>(input: R, config: &SolverConfig) -> Result<Self> {
        let mut header = std::collections::HashMap::new();
        let mut rows: Vec<Vec<F>> = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::InvalidInput(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("x\\z") {
                continue;
            }
            if let Some((k, v)) = line.split_once('=') {
                header.insert(k.trim().to_string(), v.trim().to_string());
                continue;
            }
            let row = line
                .split(',')
                .map(|s| s.trim().parse::<f64>().map(F::lit))
                .collect::<std::result::Result<Vec<F>, _>>()
                .map_err(|e| Error::InvalidInput(format!("dump line {}: {e}", lineno + 1)))?;
            rows.push(row);
        }
        let get = |k: &str| -> Result<f64> {
            header
                .get(k)
                .ok_or_else(|| Error::InvalidInput(format!("dump missing `{k}`")))?
                .parse::<f64>()
                .map_err(|e| Error::InvalidInput(format!("dump `{k}`: {e}")))
        };
        let cfg = SolverConfig {
            mz: get("mz")? as usize,
            mx1: get("mx1")? as usize,
            mx2: get("mx2")? as usize,
            iterations: get("iterations")? as usize,
            ..*config
        };
        let params = StructuralParams::new(
            F::lit(get("rho")?),
            F::lit(get("a")?),
            F::lit(get("b")?),
            F::lit(get("delta")?),
            F::lit(get("r")?),
        )?;
        let grid = build_grid(&params, &cfg)?;
        let nx = grid.nx();
        if rows.len() != nx || rows.iter().any(|r| r.len() != grid.mz + 1) {
            return Err(Error::InvalidInput("dump body does not match header sizes".into()));
        }
        let mut values = vec![F::zero(); nx * grid.mz];
        for (i, row) in rows.iter().enumerate() {
            for j in 0..grid.mz {
                values[j * nx + i] = row[j + 1];
            }
        }
        let sup = F::lit(get("final_sup_change")?);
        Ok(Self::from_values(values, grid, params, cfg.iterations, sup))
    }
}

/// Tolerance used to decide that the price sits on the demand curve.
#[inline]
pub fn kink_tolerance<F: Scalar>(p: F) -> F {
    if p.is_finite() {
        F::lit(1e-8) * (F::one() + p.abs())
    } else {
        F::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Preset;

    fn affine_table() -> PriceFunctionTable<f64> {
        let p = Preset::Monthly.params();
        let cfg = SolverConfig { mz: 9, mx1: 12, mx2: 6, ..Default::default() };
        PriceFunctionTable::from_fn(p, &cfg, |x, z| 2.0 * x + 3.0 * z).unwrap()
    }

    #[test]
    fn interpolation_reproduces_nodes() {
        let t = affine_table();
        for (i, &x) in t.grid.x_nodes.iter().enumerate() {
            for (j, &z) in t.grid.z_nodes.iter().enumerate() {
                assert!((t.eval(x, z) - t.value(i, j)).abs() < 1e-9 * (1.0 + t.value(i, j).abs()));
            }
        }
    }

    #[test]
    fn bilinear_exact_on_affine() {
        let t = affine_table();
        let g = &t.grid;
        for k in 0..50 {
            let u = (k as f64 * 0.618_033_988_7).fract();
            let v = (k as f64 * 0.414_213_562_3).fract();
            let x = g.x_min() + u * (g.x_max() - g.x_min());
            let z = g.z_min() + v * (g.z_max() - g.z_min());
            assert!((t.eval(x, z) - (2.0 * x + 3.0 * z)).abs() < 1e-8 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn cell_midpoint_is_corner_mean() {
        let p: StructuralParams<f64> = Preset::Monthly.params();
        let cfg = SolverConfig { mz: 4, mx1: 3, mx2: 2, ..Default::default() };
        let t = PriceFunctionTable::from_fn(p, &cfg, |x, z| (x * 0.1).sin() + z * z * x).unwrap();
        let (i, j) = (1, 2);
        let g = &t.grid;
        let xm = 0.5 * (g.x_nodes[i] + g.x_nodes[i + 1]);
        let zm = 0.5 * (g.z_nodes[j] + g.z_nodes[j + 1]);
        let mean = 0.25 * (t.value(i, j) + t.value(i + 1, j) + t.value(i, j + 1) + t.value(i + 1, j + 1));
        assert!((t.eval(xm, zm) - mean).abs() < 1e-9 * (1.0 + mean.abs()));
    }

    #[test]
    fn off_grid_queries_clamp() {
        let t = affine_table();
        let g = &t.grid;
        assert_eq!(t.eval(g.x_max() + 1e6, 0.0), t.eval(g.x_max(), 0.0));
        assert_eq!(t.eval(0.0, g.z_min() - 50.0), t.eval(0.0, g.z_min()));
    }

    #[test]
    fn dump_round_trips() {
        let t = affine_table();
        let mut buf = Vec::new();
        t.write_dump(&mut buf).unwrap();
        let cfg = SolverConfig { mz: 9, mx1: 12, mx2: 6, ..Default::default() };
        let back = PriceFunctionTable::<f64>::read_dump(&buf[..], &cfg).unwrap();
        assert_eq!(back.values, t.values);
        assert_eq!(back.params, t.params);
    }
}
