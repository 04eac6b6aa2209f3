//! Bregman distances and the residual identities that drive the error
//! splitting. Subgradients are always the optimality-condition elements
//! `ξ = A*(v − Ax)/α`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linops::LinearOperator;
use crate::penalties::{subgradient_from_optimality, Penalty};

/// `B_ξ(z; x) = J(x) − J(z) − ⟨ξ, x − z⟩`.
pub fn bregman_distance(j: Penalty, xi: &DVector<f64>, z: &DVector<f64>, x: &DVector<f64>) -> f64 {
    j.eval(x) - j.eval(z) - xi.dot(&(x - z))
}

/// `|B_ξ(w;u) − B_η(v;u) − B_ξ(w;v) − ⟨η − ξ, u − v⟩|`.
pub fn three_point_identity_check(
    j: Penalty,
    xi_w: &DVector<f64>,
    w: &DVector<f64>,
    eta_v: &DVector<f64>,
    v: &DVector<f64>,
    u: &DVector<f64>,
) -> f64 {
    let lhs = bregman_distance(j, xi_w, w, u);
    let rhs = bregman_distance(j, eta_v, v, u) + bregman_distance(j, xi_w, w, v) + (eta_v - xi_w).dot(&(u - v));
    (lhs - rhs).abs()
}

/// Residuals of the noisy and exact regularized solutions.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualSet {
    /// `A x_α^δ − y^δ`
    pub r_alpha_delta: DVector<f64>,
    /// `A x_α − y`
    pub r_alpha: DVector<f64>,
    /// `y^δ − y`
    pub delta_vec: DVector<f64>,
}

impl ResidualSet {
    pub fn new(
        op: &LinearOperator,
        x_alpha: &DVector<f64>,
        x_alpha_delta: &DVector<f64>,
        y: &DVector<f64>,
        y_delta: &DVector<f64>,
    ) -> Result<Self> {
        if y.len() != y_delta.len() {
            return Err(Error::DimensionMismatch { expected: y.len(), found: y_delta.len() });
        }
        Ok(Self {
            r_alpha_delta: op.apply(x_alpha_delta)? - y_delta,
            r_alpha: op.apply(x_alpha)? - y,
            delta_vec: y_delta - y,
        })
    }
}

/// Absolute mismatches of the three inner-product identities
///
/// ```text
/// ⟨ξ_α − ξ_α^δ, x† − x_α⟩ = −(1/α)⟨r^δ − r, r⟩
/// −⟨ξ_α^δ, x_α − x_α^δ⟩   = (1/α)⟨r^δ, r − r^δ − (y^δ − y)⟩
/// −⟨ξ_α, x† − x_α⟩       = −‖r‖²/α
/// ```
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityMismatches {
    pub cross: f64,
    pub noisy: f64,
    pub exact: f64,
}

impl IdentityMismatches {
    pub fn max(&self) -> f64 {
        self.cross.max(self.noisy).max(self.exact)
    }
}

/// Evaluates both sides of the identities for given minimizers with exact
/// data `y = A x†`. The left sides use the optimality subgradients, the
/// right sides only residuals.
pub fn appendix_identities_check(
    op: &LinearOperator,
    x_dagger: &DVector<f64>,
    alpha: f64,
    x_alpha: &DVector<f64>,
    x_alpha_delta: &DVector<f64>,
    y_delta: &DVector<f64>,
) -> Result<IdentityMismatches> {
    let y = op.apply(x_dagger)?;
    let res = ResidualSet::new(op, x_alpha, x_alpha_delta, &y, y_delta)?;
    let xi = subgradient_from_optimality(op, x_alpha, &y, alpha)?;
    let xi_d = subgradient_from_optimality(op, x_alpha_delta, y_delta, alpha)?;
    let (r, rd) = (&res.r_alpha, &res.r_alpha_delta);

    let cross = ((&xi - &xi_d).dot(&(x_dagger - x_alpha)) + (rd - r).dot(r) / alpha).abs();
    let noisy = (-xi_d.dot(&(x_alpha - x_alpha_delta)) - rd.dot(&(r - rd - &res.delta_vec)) / alpha).abs();
    let exact = (-xi.dot(&(x_dagger - x_alpha)) + r.norm_squared() / alpha).abs();
    Ok(IdentityMismatches { cross, noisy, exact })
}

/// The two distance bounds behind the error splitting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceBounds {
    /// `|B_ξα(x_α; x†) − (defect_T − ‖r‖²/(2α))|`
    pub exact_mismatch: f64,
    /// `δ²/(2α) − ‖r‖²/(2α) + ⟨r^δ, r⟩/α − B_ξαδ(x_α^δ; x_α)`, nonnegative
    pub noisy_slack: f64,
}

pub fn distance_bounds(
    op: &LinearOperator,
    penalty: Penalty,
    x_dagger: &DVector<f64>,
    alpha: f64,
    x_alpha: &DVector<f64>,
    x_alpha_delta: &DVector<f64>,
    y_delta: &DVector<f64>,
) -> Result<DistanceBounds> {
    let y = op.apply(x_dagger)?;
    let res = ResidualSet::new(op, x_alpha, x_alpha_delta, &y, y_delta)?;
    let r2 = res.r_alpha.norm_squared();
    let delta = res.delta_vec.norm();

    let xi = subgradient_from_optimality(op, x_alpha, &y, alpha)?;
    let b_exact = bregman_distance(penalty, &xi, x_alpha, x_dagger);
    let defect_t = penalty.eval(x_dagger) - penalty.eval(x_alpha) - r2 / (2.0 * alpha);
    let exact_mismatch = (b_exact - (defect_t - r2 / (2.0 * alpha))).abs();

    let xi_d = subgradient_from_optimality(op, x_alpha_delta, y_delta, alpha)?;
    let b_noisy = bregman_distance(penalty, &xi_d, x_alpha_delta, x_alpha);
    let bound = delta * delta / (2.0 * alpha) - r2 / (2.0 * alpha) + res.r_alpha_delta.dot(&res.r_alpha) / alpha;
    Ok(DistanceBounds { exact_mismatch, noisy_slack: bound - b_noisy })
}

/// A pair `(z, x)` with subgradients at each point for which
/// `B_ξ(z; x) ≠ B_η(x; z)` under the `ℓ¹` penalty. Returns both distances.
pub fn l1_asymmetry_witness() -> (f64, f64) {
    let z = DVector::from_vec(vec![1.0, 0.0]);
    let xi = DVector::from_vec(vec![1.0, 0.0]);
    let x = DVector::from_vec(vec![0.0, 2.0]);
    let eta = DVector::from_vec(vec![0.0, 1.0]);
    (bregman_distance(Penalty::L1, &xi, &z, &x), bregman_distance(Penalty::L1, &eta, &x, &z))
}
