//! Derivative-free maximization and the unconstrained parameterization
//! used by the estimators.

use crate::error::{Error, Result};
use crate::model::StructuralParams;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub f_tol: f64,
    pub x_tol: f64,
    pub max_evaluations: usize,
    /// Per-coordinate offset of the initial simplex vertices.
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { f_tol: 1e-6, x_tol: 1e-6, max_evaluations: 2000, initial_step: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult<F> {
    pub x: Vec<F>,
    pub value: F,
    pub evaluations: usize,
    pub iterations: usize,
    /// Largest sup-norm distance of a vertex from the best one at exit.
    pub diameter: F,
    /// Best value after each iteration; non-decreasing.
    pub best_trace: Vec<F>,
    pub converged: bool,
}

impl<F: Scalar> NelderMeadResult<F> {
    pub fn budget_exhausted(&self) -> bool {
        !self.converged
    }
}

/// Maximizes `objective` with reflection 1, expansion 2, contraction 1/2
/// and shrink 1/2. Non-finite objective values are treated as `-inf`, so
/// the simplex retreats from them. Stops once the spread of values and the
/// simplex diameter are both within tolerance, or when the evaluation
/// budget runs out (`converged = false`).
pub fn nelder_mead_maximize<F: Scalar>(
    mut objective: impl FnMut(&[F]) -> F,
    start: &[F],
    options: &NelderMeadOptions,
) -> Result<NelderMeadResult<F>> {
    let n = start.len();
    if n == 0 {
        return Err(Error::InvalidInput("optimizer needs at least one coordinate".into()));
    }
    let mut evaluations = 0usize;
    let mut eval = |x: &[F], count: &mut usize| -> F {
        *count += 1;
        let v = objective(x);
        if v.is_finite() {
            v
        } else {
            F::neg_infinity()
        }
    };
    let f0 = eval(start, &mut evaluations);
    if !f0.is_finite() {
        return Err(Error::Optimization("objective is not finite at the starting point".into()));
    }
    let step = F::lit(options.initial_step);
    let mut simplex: Vec<(Vec<F>, F)> = vec![(start.to_vec(), f0)];
    for i in 0..n {
        let mut x = start.to_vec();
        x[i] += step;
        let v = eval(&x, &mut evaluations);
        simplex.push((x, v));
    }
    let (f_tol, x_tol) = (F::lit(options.f_tol), F::lit(options.x_tol));
    let (half, two) = (F::half(), F::two());
    let mut best_trace = Vec::new();
    let mut iterations = 0;

    let diameter = |s: &[(Vec<F>, F)]| -> F {
        s[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&s[0].0).map(|(a, b)| (*a - *b).abs()))
            .fold(F::zero(), F::max)
    };

    loop {
        // descending by value; NaN cannot occur after `eval`
        simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("values are never NaN"));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let diam = diameter(&simplex);
        if best - worst <= f_tol && diam <= x_tol {
            return Ok(finish(simplex, evaluations, iterations, diam, best_trace, true));
        }
        if evaluations >= options.max_evaluations {
            return Ok(finish(simplex, evaluations, iterations, diam, best_trace, false));
        }
        iterations += 1;

        let mut centroid = vec![F::zero(); n];
        for (x, _) in &simplex[..n] {
            for (c, &v) in centroid.iter_mut().zip(x) {
                *c += v;
            }
        }
        let nf = F::from_usize_lossy(n);
        centroid.iter_mut().for_each(|c| *c /= nf);
        let along = |t: F, worst: &[F]| -> Vec<F> {
            centroid.iter().zip(worst).map(|(&c, &w)| c + t * (c - w)).collect()
        };

        let worst_x = simplex[n].0.clone();
        let second = simplex[n - 1].1;
        let reflected = along(F::one(), &worst_x);
        let f_r = eval(&reflected, &mut evaluations);
        if f_r > best {
            let expanded = along(two, &worst_x);
            let f_e = eval(&expanded, &mut evaluations);
            simplex[n] = if f_e > f_r { (expanded, f_e) } else { (reflected, f_r) };
        } else if f_r > second {
            simplex[n] = (reflected, f_r);
        } else {
            let outside = f_r > worst;
            let candidate = along(if outside { half } else { -half }, &worst_x);
            let f_c = eval(&candidate, &mut evaluations);
            // outside contraction must not lose to the reflected point, inside
            // contraction must strictly improve on the worst vertex
            let accept = if outside { f_c >= f_r } else { f_c > worst };
            if accept {
                simplex[n] = (candidate, f_c);
            } else {
                let anchor = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    for (x, &a) in vertex.0.iter_mut().zip(&anchor) {
                        *x = a + half * (*x - a);
                    }
                    vertex.1 = eval(&vertex.0, &mut evaluations);
                }
            }
        }
        let current = simplex.iter().map(|v| v.1).fold(F::neg_infinity(), F::max);
        best_trace.push(current);
    }
}

fn finish<F: Scalar>(
    simplex: Vec<(Vec<F>, F)>,
    evaluations: usize,
    iterations: usize,
    diameter: F,
    best_trace: Vec<F>,
    converged: bool,
) -> NelderMeadResult<F> {
    let (x, value) = simplex.into_iter().next().expect("simplex is non-empty");
    NelderMeadResult { x, value, evaluations, iterations, diameter, best_trace, converged }
}

/// Lower bound of the depreciation rate in the search space.
pub const DELTA_FLOOR: f64 = 1e-4;

/// Maps `(rho, a, b, delta)` to and from an unconstrained vector:
/// `rho = tanh(phi_1)`, `a = phi_2`, `b = -exp(phi_3)`,
/// `delta = eps + (1 - eps) logistic(phi_4)`. With `fixed_rho` the first
/// coordinate is dropped and `rho` is held at the given value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamTransform<F> {
    pub fixed_rho: Option<F>,
    /// Interest rate carried through unchanged.
    pub r: F,
}

impl<F: Scalar> ParamTransform<F> {
    pub fn new(r: F, fixed_rho: Option<F>) -> Self {
        Self { fixed_rho, r }
    }

    pub fn dim(&self) -> usize {
        if self.fixed_rho.is_some() {
            3
        } else {
            4
        }
    }

    pub fn to_unconstrained(&self, params: &StructuralParams<F>) -> Result<Vec<F>> {
        params.validate()?;
        let eps = F::lit(DELTA_FLOOR);
        if params.rho.abs() >= F::one() || params.delta <= eps {
            return Err(Error::InvalidParameter(format!(
                "starting values outside the search region (rho = {}, delta = {})",
                params.rho, params.delta
            )));
        }
        let s = (params.delta - eps) / (F::one() - eps);
        let logit = if s >= F::one() { F::lit(36.0) } else { (s / (F::one() - s)).ln() };
        let mut phi = Vec::with_capacity(4);
        if self.fixed_rho.is_none() {
            phi.push(params.rho.atanh());
        }
        phi.push(params.a);
        phi.push((-params.b).ln());
        phi.push(logit);
        Ok(phi)
    }

    pub fn to_params(&self, phi: &[F]) -> StructuralParams<F> {
        let (rho, rest) = match self.fixed_rho {
            Some(rho) => (rho, phi),
            None => (phi[0].tanh(), &phi[1..]),
        };
        let eps = F::lit(DELTA_FLOOR);
        let logistic = F::one() / (F::one() + (-rest[2]).exp());
        StructuralParams {
            rho,
            a: rest[0],
            b: -rest[1].exp(),
            delta: eps + (F::one() - eps) * logistic,
            r: self.r,
        }
    }
}
