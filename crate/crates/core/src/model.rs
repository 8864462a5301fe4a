//! Structural parameters, demand primitives and the shock law.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// The structural parameter vector `(rho, a, b, delta)` plus the fixed
/// per-period interest rate `r`.
///
/// The discount factor `beta = (1 - delta) / (1 + r)` is always derived from
/// `delta` and `r` and never stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructuralParams<F> {
    /// AR(1) coefficient of the supply shock.
    pub rho: F,
    /// Demand intercept (price units).
    pub a: F,
    /// Demand slope, negative.
    pub b: F,
    /// Per-period depreciation of stocks in storage.
    pub delta: F,
    /// Per-period real interest rate.
    pub r: F,
}

impl<F: Scalar> StructuralParams<F> {
    pub fn new(rho: F, a: F, b: F, delta: F, r: F) -> Result<Self> {
        let params = Self { rho, a, b, delta, r };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.rho, self.a, self.b, self.delta, self.r];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite component in {self:?}")));
        }
        if self.rho.abs() >= F::one() {
            return Err(Error::InvalidParameter(format!("|rho| must be < 1, got {}", self.rho)));
        }
        if self.b >= F::zero() {
            return Err(Error::InvalidParameter(format!("b must be negative, got {}", self.b)));
        }
        if self.delta < F::zero() || self.delta > F::one() {
            return Err(Error::InvalidParameter(format!("delta must lie in [0,1], got {}", self.delta)));
        }
        if self.r <= F::zero() {
            return Err(Error::InvalidParameter(format!("r must be positive, got {}", self.r)));
        }
        Ok(())
    }

    #[inline]
    pub fn beta(&self) -> F {
        (F::one() - self.delta) / (F::one() + self.r)
    }

    /// Inverse demand `P(x) = a + b x`.
    #[inline]
    pub fn demand(&self, x: F) -> F {
        self.a + self.b * x
    }

    /// Quantity consumed at price `p`, `(p - a) / b`.
    #[inline]
    pub fn inverse_demand(&self, p: F) -> F {
        (p - self.a) / self.b
    }

    /// Standard deviation of the stationary supply shock, `1/sqrt(1 - rho^2)`.
    #[inline]
    pub fn shock_sd(&self) -> F {
        (F::one() - self.rho * self.rho).sqrt().recip()
    }

    /// `[rho, a, b, delta]`.
    pub fn theta(&self) -> [F; 4] {
        [self.rho, self.a, self.b, self.delta]
    }

    pub fn with_theta(&self, theta: [F; 4]) -> Self {
        Self { rho: theta[0], a: theta[1], b: theta[2], delta: theta[3], r: self.r }
    }

    pub fn cast<G: Scalar>(&self) -> StructuralParams<G> {
        StructuralParams {
            rho: G::lit(self.rho.to_f64_lossy()),
            a: G::lit(self.a.to_f64_lossy()),
            b: G::lit(self.b.to_f64_lossy()),
            delta: G::lit(self.delta.to_f64_lossy()),
            r: G::lit(self.r.to_f64_lossy()),
        }
    }
}

/// Free-function form of [`StructuralParams::inverse_demand`].
#[inline]
pub fn inverse_demand<F: Scalar>(p: F, params: &StructuralParams<F>) -> F {
    params.inverse_demand(p)
}

/// Converts an annual rate to a per-period rate by geometric compounding,
/// `(1 + annual)^(1/m) - 1`.
pub fn period_rate<F: Scalar>(annual_rate: F, periods_per_year: u32) -> F {
    assert!(periods_per_year >= 1, "periods_per_year must be at least 1");
    assert!(annual_rate > -F::one(), "annual rate must exceed -1");
    if periods_per_year == 1 {
        return annual_rate;
    }
    // ln_1p/exp_m1 keep full precision for small rates
    (annual_rate.ln_1p() / F::from_u32(periods_per_year).unwrap()).exp_m1()
}

/// Law of the standardized price innovation `eta` in the simulated DGP.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ShockDistribution {
    #[default]
    Gaussian,
    /// Student-t rescaled to unit variance; `dof > 2`.
    ScaledStudentT { dof: f64 },
}

impl ShockDistribution {
    pub fn scaled_student_t(dof: f64) -> Result<Self> {
        if !(dof > 2.0) || !dof.is_finite() {
            return Err(Error::InvalidParameter(format!("student-t dof must exceed 2, got {dof}")));
        }
        Ok(Self::ScaledStudentT { dof })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Gaussian => Ok(()),
            Self::ScaledStudentT { dof } => Self::scaled_student_t(dof).map(|_| ()),
        }
    }

    /// One unit-variance draw.
    pub fn sample<F: Scalar, R: Rng + ?Sized>(&self, rng: &mut R) -> F {
        let v: f64 = match *self {
            Self::Gaussian => StandardNormal.sample(rng),
            Self::ScaledStudentT { dof } => {
                let t: f64 = StudentT::new(dof).expect("validated dof").sample(rng);
                t * ((dof - 2.0) / dof).sqrt()
            }
        };
        F::lit(v)
    }
}

/// Reference parameter sets used by the simulation experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Monthly,
    Weekly,
    Yearly,
}

impl Preset {
    pub fn periods_per_year(self) -> u32 {
        match self {
            Self::Monthly => 12,
            Self::Weekly => 52,
            Self::Yearly => 1,
        }
    }

    /// True parameters with `r` equivalent to a 5% yearly rate.
    pub fn params<F: Scalar>(self) -> StructuralParams<F> {
        let (rho, a, b, delta) = match self {
            Self::Monthly => (0.97, 1.5, -0.4, 0.02),
            Self::Weekly => (0.99, 1.65, -0.09, 0.0035),
            Self::Yearly => (0.918, 0.223, -0.038, 0.046),
        };
        StructuralParams {
            rho: F::lit(rho),
            a: F::lit(a),
            b: F::lit(b),
            delta: F::lit(delta),
            r: period_rate(F::lit(0.05), self.periods_per_year()),
        }
    }

    pub fn from_frequency(periods_per_year: u32) -> Option<Self> {
        match periods_per_year {
            12 => Some(Self::Monthly),
            52 => Some(Self::Weekly),
            1 => Some(Self::Yearly),
            _ => None,
        }
    }
}
