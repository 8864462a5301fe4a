//! Gauss-Hermite rules via the eigen-decomposition of the Jacobi matrix.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Nodes and weights rescaled for standard-normal expectations:
/// `sum_i w_i g(n_i) ~ E[g(eps)]`, `eps ~ N(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite<F> {
    pub nodes: Vec<F>,
    pub weights: Vec<F>,
}

impl<F: Scalar> GaussHermite<F> {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn expect(&self, mut g: impl FnMut(F) -> F) -> F {
        self.nodes.iter().zip(&self.weights).map(|(&n, &w)| w * g(n)).sum()
    }
}

pub const MAX_ORDER: usize = 64;

/// Gauss-Hermite rule of the given order for the weight `exp(-u^2)`,
/// returned with nodes scaled by `sqrt(2)` and weights by `1/sqrt(pi)`.
pub fn gauss_hermite_nodes<F: Scalar>(order: usize) -> Result<GaussHermite<F>> {
    if !(2..=MAX_ORDER).contains(&order) {
        return Err(Error::Unsupported(format!("Gauss-Hermite order {order} outside 2..={MAX_ORDER}")));
    }
    // Jacobi matrix of the physicists' Hermite recurrence: zero diagonal,
    // off-diagonal sqrt(k/2).
    let mut diag = vec![0.0f64; order];
    let mut off: Vec<f64> = (1..order).map(|k| (k as f64 / 2.0).sqrt()).collect();
    off.push(0.0);
    let mut first_row = vec![0.0f64; order];
    first_row[0] = 1.0;
    tridiagonal_ql(&mut diag, &mut off, &mut first_row)?;

    let mut pairs: Vec<(f64, f64)> = diag.into_iter().zip(first_row.into_iter().map(|v| v * v)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // symmetrize to remove round-off asymmetry
    let n = pairs.len();
    for i in 0..n / 2 {
        let (x_lo, w_lo) = pairs[i];
        let (x_hi, w_hi) = pairs[n - 1 - i];
        let x = 0.5 * (x_hi - x_lo);
        let w = 0.5 * (w_lo + w_hi);
        pairs[i] = (-x, w);
        pairs[n - 1 - i] = (x, w);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let nodes = pairs.iter().map(|p| F::lit(p.0 * std::f64::consts::SQRT_2)).collect();
    let weights = pairs.iter().map(|p| F::lit(p.1 / total)).collect();
    Ok(GaussHermite { nodes, weights })
}

/// Implicit QL with Wilkinson shifts on a symmetric tridiagonal matrix.
/// On return `diag` holds the eigenvalues and `first_row` the first
/// components of the normalized eigenvectors.
fn tridiagonal_ql(diag: &mut [f64], off: &mut [f64], first_row: &mut [f64]) -> Result<()> {
    let n = diag.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::NonFinite("Gauss-Hermite eigenvalue iteration".into()));
            }
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
                let v = first_row[i + 1];
                first_row[i + 1] = s * first_row[i] + c * v;
                first_row[i] = c * first_row[i] - s * v;
            }
            if deflated {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_of_standard_normal() {
        let gh = gauss_hermite_nodes::<f64>(16).unwrap();
        let m0: f64 = gh.expect(|_| 1.0);
        let m2: f64 = gh.expect(|x| x * x);
        let m4: f64 = gh.expect(|x| x.powi(4));
        let m6: f64 = gh.expect(|x| x.powi(6));
        assert!((m0 - 1.0).abs() < 1e-14);
        assert!((m2 - 1.0).abs() < 1e-13);
        assert!((m4 - 3.0).abs() < 1e-12);
        assert!((m6 - 15.0).abs() < 1e-11);
        assert!(gh.expect(|x| x.powi(5)).abs() < 1e-12);
    }

    #[test]
    fn known_two_point_rule() {
        let gh = gauss_hermite_nodes::<f64>(2).unwrap();
        assert!((gh.nodes[1] - 1.0).abs() < 1e-14);
        assert!((gh.weights[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn high_order_integrates_polynomials() {
        for order in [5, 31, 64] {
            let gh = gauss_hermite_nodes::<f64>(order).unwrap();
            assert!((gh.expect(|_| 1.0) - 1.0).abs() < 1e-13);
            assert!((gh.expect(|x| x * x) - 1.0).abs() < 1e-12, "order {order}");
            assert!((gh.expect(|x| (0.5 * x).cos()) - (-0.125f64).exp()).abs() < 1e-9 || order < 10);
        }
    }

    #[test]
    fn rejects_unsupported_orders() {
        assert!(gauss_hermite_nodes::<f64>(1).is_err());
        assert!(gauss_hermite_nodes::<f64>(65).is_err());
    }
}
