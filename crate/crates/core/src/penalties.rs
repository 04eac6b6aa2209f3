//! Convex penalties `J`, their proximal maps, and the subgradient selected by
//! the optimality condition of the Tikhonov functional.

use std::f64::consts::PI;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linops::LinearOperator;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Penalty {
    /// `J(x) = ½‖x‖²`
    Quadratic,
    /// `J(x) = ‖x‖₁`
    L1,
}

impl Penalty {
    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        match self {
            Penalty::Quadratic => 0.5 * x.norm_squared(),
            Penalty::L1 => x.lp_norm(1),
        }
    }

    /// `argmin_x ½‖x − z‖² + τ J(x)`.
    pub fn prox(&self, z: &DVector<f64>, tau: f64) -> Result<DVector<f64>> {
        if !(tau > 0.0) {
            return Err(Error::Domain(format!("prox step must be positive, got {tau}")));
        }
        Ok(match self {
            Penalty::Quadratic => z / (1.0 + tau),
            Penalty::L1 => z.map(|v| soft_threshold(v, tau)),
        })
    }

    /// `J(t x) = t J(x)` for `t ≥ 0`.
    pub fn is_positively_homogeneous(&self) -> bool {
        matches!(self, Penalty::L1)
    }

    /// Euclidean distance from `g` to the scaled subdifferential `α ∂J(x)`.
    pub fn subdifferential_gap(&self, x: &DVector<f64>, g: &DVector<f64>, alpha: f64) -> f64 {
        match self {
            Penalty::Quadratic => (g - x * alpha).norm(),
            Penalty::L1 => x
                .iter()
                .zip(g.iter())
                .map(|(&xk, &gk)| {
                    let r = if xk != 0.0 { gk - alpha * xk.signum() } else { (gk.abs() - alpha).max(0.0) };
                    r * r
                })
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Largest violation of `J(u) ≥ J(x) + ⟨ξ, u − x⟩` over the probes,
    /// relative to `1 + J(u)`. Nonpositive when `ξ ∈ ∂J(x)` on the probes.
    pub fn subgradient_violation(&self, x: &DVector<f64>, xi: &DVector<f64>, probes: &[DVector<f64>]) -> f64 {
        let jx = self.eval(x);
        probes
            .iter()
            .map(|u| {
                let ju = self.eval(u);
                (jx + xi.dot(&(u - x)) - ju) / (1.0 + ju)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn soft_threshold(v: f64, tau: f64) -> f64 {
    v.signum() * (v.abs() - tau).max(0.0)
}

/// `ξ = A*(v − A x)/α`, the element of `∂J(x)` singled out by the optimality
/// condition `A*(A x − v) + α ξ = 0` at a Tikhonov minimizer `x`.
pub fn subgradient_from_optimality(
    op: &LinearOperator,
    x: &DVector<f64>,
    v: &DVector<f64>,
    alpha: f64,
) -> Result<DVector<f64>> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
    }
    let residual = v - op.apply(x)?;
    Ok(op.adjoint_apply(&residual)? / alpha)
}

/// Indicator of the disc `B(0, R)` in the plane, penalized by total variation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RofBallGeometry {
    radius: f64,
}

impl RofBallGeometry {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Domain(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Self { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// `|χ_B|_TV`, the perimeter.
    pub fn perimeter(&self) -> f64 {
        2.0 * PI * self.radius
    }

    /// `‖χ_B‖²`, the area.
    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }
}

/// Indicator of the unit square; `r_star` is the radius below which the
/// rounded-square level sets describe the minimizer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RofSquareGeometry {
    r_star: f64,
}

impl RofSquareGeometry {
    pub fn new(r_star: f64) -> Result<Self> {
        if !(r_star > 0.0 && r_star.is_finite()) {
            return Err(Error::Domain(format!("R* must be positive, got {r_star}")));
        }
        Ok(Self { r_star })
    }

    pub fn r_star(&self) -> f64 {
        self.r_star
    }

    pub fn perimeter(&self) -> f64 {
        4.0
    }

    pub fn area(&self) -> f64 {
        1.0
    }
}
