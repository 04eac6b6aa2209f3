//! Minimizers of the Tikhonov functional `T_α(x; v) = ½‖Ax − v‖² + α J(x)`.
//!
//! The quadratic penalty is solved directly (normal equations, or the filter
//! `σ_k/(σ_k² + α)` on diagonal operators). The `ℓ¹` penalty uses FISTA with
//! function-value restart from a zero start, followed by an active-set
//! polish that solves the KKT system on the identified support exactly.
//! The ROF examples are closed-form evaluators.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::indexfn::IndexFunction;
use crate::linops::{DiagonalOperator, LinearOperator};
use crate::penalties::{Penalty, RofBallGeometry, RofSquareGeometry};

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub minimizer: DVector<f64>,
    /// `T_α` at the minimizer.
    pub objective: f64,
    pub iterations: usize,
    /// `dist(A*(v − Ax), α ∂J(x))`.
    pub kkt_residual: f64,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 100_000 }
    }
}

pub fn tikhonov_value(
    op: &LinearOperator,
    penalty: Penalty,
    x: &DVector<f64>,
    v: &DVector<f64>,
    alpha: f64,
) -> Result<f64> {
    Ok(0.5 * (op.apply(x)? - v).norm_squared() + alpha * penalty.eval(x))
}

pub fn kkt_residual(
    op: &LinearOperator,
    penalty: Penalty,
    x: &DVector<f64>,
    v: &DVector<f64>,
    alpha: f64,
) -> Result<f64> {
    let g = op.adjoint_apply(&(v - op.apply(x)?))?;
    Ok(penalty.subdifferential_gap(x, &g, alpha))
}

/// Dispatches on the penalty.
pub fn solve(
    op: &LinearOperator,
    penalty: Penalty,
    v: &DVector<f64>,
    alpha: f64,
    settings: SolverSettings,
) -> Result<SolveReport> {
    match penalty {
        Penalty::Quadratic => solve_quadratic(op, v, alpha),
        Penalty::L1 => solve_l1(op, v, alpha, settings.tol, settings.max_iter),
    }
}

/// `x = (A*A + αI)⁻¹ A* v`.
pub fn solve_quadratic(op: &LinearOperator, v: &DVector<f64>, alpha: f64) -> Result<SolveReport> {
    check_alpha(alpha)?;
    let x = match op {
        LinearOperator::Diagonal(d) => {
            if v.len() != d.dim() {
                return Err(Error::DimensionMismatch { expected: d.dim(), found: v.len() });
            }
            DVector::from_fn(d.dim(), |k, _| {
                let s = d.singular_values()[k];
                s * v[k] / (s * s + alpha)
            })
        }
        LinearOperator::Dense(_) => {
            let rhs = op.adjoint_apply(v)?;
            let mut normal = op.gram();
            for i in 0..normal.nrows() {
                normal[(i, i)] += alpha;
            }
            let chol = normal
                .cholesky()
                .ok_or_else(|| Error::LinearSolve(format!("A*A + αI not positive definite at α={alpha}")))?;
            chol.solve(&rhs)
        }
    };
    let objective = tikhonov_value(op, Penalty::Quadratic, &x, v, alpha)?;
    let kkt = kkt_residual(op, Penalty::Quadratic, &x, v, alpha)?;
    Ok(SolveReport { minimizer: x, objective, iterations: 1, kkt_residual: kkt, converged: true })
}

/// Largest eigenvalue of `A*A` by 100 power iterations from a fixed start.
pub fn operator_norm_sq(op: &LinearOperator) -> Result<f64> {
    if let LinearOperator::Diagonal(d) = op {
        return Ok(d.singular_values()[0].powi(2));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    let mut x = DVector::from_fn(op.cols(), |_, _| rng.random_range(-1.0..1.0));
    let mut estimate = 0.0;
    for _ in 0..100 {
        let norm = x.norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        x /= norm;
        let y = op.adjoint_apply(&op.apply(&x)?)?;
        estimate = x.dot(&y);
        x = y;
    }
    Ok(estimate)
}

/// FISTA for `½‖Ax − v‖² + α‖x‖₁` from a zero start.
pub fn solve_l1(op: &LinearOperator, v: &DVector<f64>, alpha: f64, tol: f64, max_iter: usize) -> Result<SolveReport> {
    solve_l1_from(op, v, alpha, tol, max_iter, &DVector::zeros(op.cols()))
}

/// FISTA from an arbitrary start. Stops once the objective decrease falls
/// below `tol·(1 + T)` with KKT residual below `√tol`; a non-converged run
/// still returns its last iterate with `converged = false`.
pub fn solve_l1_from(
    op: &LinearOperator,
    v: &DVector<f64>,
    alpha: f64,
    tol: f64,
    max_iter: usize,
    start: &DVector<f64>,
) -> Result<SolveReport> {
    check_alpha(alpha)?;
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    if start.len() != op.cols() {
        return Err(Error::DimensionMismatch { expected: op.cols(), found: start.len() });
    }
    let lipschitz = operator_norm_sq(op)?;
    let step = if lipschitz > 0.0 { 0.95 / lipschitz } else { 1.0 };
    let objective = |x: &DVector<f64>| tikhonov_value(op, Penalty::L1, x, v, alpha);

    let mut x = start.clone();
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut obj = objective(&x)?;
    let mut iterations = 0;
    let mut converged = false;
    let mut restarted = false;
    while iterations < max_iter {
        iterations += 1;
        let grad = op.adjoint_apply(&(op.apply(&y)? - v))?;
        let x_next = Penalty::L1.prox(&(&y - grad * step), step * alpha)?;
        let obj_next = objective(&x_next)?;
        if obj_next > obj && !restarted {
            // momentum overshoot: restart from the last accepted iterate
            t = 1.0;
            y = x.clone();
            restarted = true;
            continue;
        }
        restarted = false;
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = &x_next + (&x_next - &x) * ((t - 1.0) / t_next);
        let decrease = obj - obj_next;
        x = x_next;
        obj = obj_next;
        t = t_next;
        if decrease.abs() < tol * (1.0 + obj) && kkt_residual(op, Penalty::L1, &x, v, alpha)? < tol.sqrt() {
            converged = true;
            break;
        }
    }

    let mut kkt = kkt_residual(op, Penalty::L1, &x, v, alpha)?;
    if let Some(polished) = polish_l1(op, v, alpha, &x) {
        let polished_kkt = kkt_residual(op, Penalty::L1, &polished, v, alpha)?;
        let polished_obj = objective(&polished)?;
        if polished_kkt < kkt && polished_obj <= obj + tol * (1.0 + obj.abs()) {
            x = polished;
            kkt = polished_kkt;
            obj = polished_obj;
        }
    }
    converged = converged || kkt < tol.sqrt();
    Ok(SolveReport { minimizer: x, objective: obj, iterations, kkt_residual: kkt, converged })
}

/// Active-set refinement: on a signed support `S`, the `ℓ¹` minimizer solves
/// `A_S*A_S z = A_S*v − α s`. Indices are added while dual feasibility fails
/// off the support and dropped when their sign flips.
fn polish_l1(op: &LinearOperator, v: &DVector<f64>, alpha: f64, x: &DVector<f64>) -> Option<DVector<f64>> {
    let n = op.cols();
    let gram = op.gram();
    let atv = op.adjoint_apply(v).ok()?;
    let mut support: Vec<(usize, f64)> = x.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(k, v)| (k, v.signum())).collect();

    for _ in 0..(4 * n + 8) {
        let z_s = if support.is_empty() {
            DVector::zeros(0)
        } else {
            let m = support.len();
            let sub = DMatrix::from_fn(m, m, |i, j| gram[(support[i].0, support[j].0)]);
            let rhs = DVector::from_fn(m, |i, _| atv[support[i].0] - alpha * support[i].1);
            sub.cholesky()?.solve(&rhs)
        };
        // drop the worst sign inconsistency
        let flip = support
            .iter()
            .zip(z_s.iter())
            .enumerate()
            .filter(|(_, ((_, s), z))| *z * *s <= 0.0)
            .max_by(|a, b| (-a.1 .1 * a.1 .0 .1).total_cmp(&(-b.1 .1 * b.1 .0 .1)))
            .map(|(i, _)| i);
        if let Some(i) = flip {
            support.remove(i);
            continue;
        }
        let mut full = DVector::zeros(n);
        for (&(k, _), &z) in support.iter().zip(z_s.iter()) {
            full[k] = z;
        }
        let g = &atv - &gram * &full;
        let worst = (0..n)
            .filter(|k| full[*k] == 0.0)
            .map(|k| (k, g[k].abs()))
            .filter(|(_, a)| *a > alpha * (1.0 + 1e-12))
            .max_by(|a, b| a.1.total_cmp(&b.1));
        match worst {
            Some((k, _)) => {
                support.push((k, g[k].signum()));
                support.sort_by_key(|s| s.0);
            }
            None => return Some(full),
        }
    }
    None
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
    }
    Ok(())
}

/// Amplitude `c` of the ROF minimizer `c·χ_B` for exact data `χ_B`.
pub fn rof_ball_minimizer(geom: &RofBallGeometry, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok((1.0 - 2.0 * alpha / geom.radius()).max(0.0))
}

/// Amplitude of the ROF minimizer for data `c·χ_B` (`c ≥ 0`).
pub fn rof_ball_minimizer_scaled(geom: &RofBallGeometry, data_amplitude: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok((data_amplitude - 2.0 * alpha / geom.radius()).max(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RofQuantities {
    /// `J(x†) − J(x_α)`
    pub defect_j: f64,
    /// `‖A x_α − y‖²`
    pub residual_sq: f64,
    /// `B_{ξ_α}(x_α; x†)` with the optimality-condition subgradient.
    pub bregman: f64,
}

pub fn rof_ball_quantities(geom: &RofBallGeometry, alpha: f64) -> Result<RofQuantities> {
    check_alpha(alpha)?;
    let r = geom.radius();
    if alpha < r / 2.0 {
        Ok(RofQuantities { defect_j: 4.0 * PI * alpha, residual_sq: 4.0 * PI * alpha * alpha, bregman: 0.0 })
    } else {
        // x_α = 0 and ξ_α = χ_B/α
        Ok(RofQuantities {
            defect_j: geom.perimeter(),
            residual_sq: geom.area(),
            bregman: geom.perimeter() - geom.area() / alpha,
        })
    }
}

/// Rounded-square closed forms, valid for `0 < α ≤ R*`.
pub fn rof_square_quantities(geom: &RofSquareGeometry, alpha: f64) -> Result<RofQuantities> {
    check_alpha(alpha)?;
    let rs = geom.r_star();
    if alpha > rs {
        return Err(Error::Domain(format!("rounded-square formulas need α ≤ R* = {rs}, got α = {alpha}")));
    }
    let log = (rs / alpha).ln();
    let c = 2.0 * (4.0 - PI);
    Ok(RofQuantities {
        defect_j: 4.0 / rs * alpha + c * alpha * log,
        residual_sq: alpha * alpha / (rs * rs) + c * alpha * alpha * log,
        bregman: 3.0 * alpha / (rs * rs),
    })
}

/// Spectral bookkeeping for `J = ½‖·‖²` on a diagonal operator with
/// `r_α(λ) = α/(α + λ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralQuantities {
    pub minimizer: DVector<f64>,
    /// `‖A x_α − A x†‖²/(2α)`
    pub residual_over_2alpha: f64,
    /// `(T_α(x†; y) − T_α(x_α; y))/α = ½‖r_α^{1/2} x†‖²`
    pub defect_t: f64,
    /// `½(‖x†‖² − ‖x_α‖²)`
    pub defect_j: f64,
    /// `½‖x_α − x†‖² = ½‖r_α x†‖²`
    pub bregman: f64,
}

pub fn spectral_quantities(op: &DiagonalOperator, x_dagger: &DVector<f64>, alpha: f64) -> Result<SpectralQuantities> {
    check_alpha(alpha)?;
    if x_dagger.len() != op.dim() {
        return Err(Error::DimensionMismatch { expected: op.dim(), found: x_dagger.len() });
    }
    let lambda = op.eigenvalues();
    let mut q = SpectralQuantities {
        minimizer: DVector::zeros(op.dim()),
        residual_over_2alpha: 0.0,
        defect_t: 0.0,
        defect_j: 0.0,
        bregman: 0.0,
    };
    for k in 0..op.dim() {
        let (l, x2) = (lambda[k], x_dagger[k] * x_dagger[k]);
        let r = alpha / (alpha + l);
        q.minimizer[k] = l / (alpha + l) * x_dagger[k];
        q.residual_over_2alpha += r * r * l * x2 / (2.0 * alpha);
        q.defect_t += 0.5 * r * x2;
        // 1 − (1 − r)² = r(2 − r), free of cancellation
        q.defect_j += 0.5 * r * (2.0 - r) * x2;
        q.bregman += 0.5 * r * r * x2;
    }
    Ok(q)
}

/// `x† = φ(A*A) v` with `‖v‖ ≤ 1`.
pub fn source_element(op: &DiagonalOperator, phi: &IndexFunction, v: &DVector<f64>) -> Result<DVector<f64>> {
    if v.len() != op.dim() {
        return Err(Error::DimensionMismatch { expected: op.dim(), found: v.len() });
    }
    if v.norm() > 1.0 + 1e-12 {
        return Err(Error::Precondition(format!("source element needs ‖v‖ ≤ 1, got {}", v.norm())));
    }
    let lambda = op.eigenvalues();
    let mut x = DVector::zeros(op.dim());
    for k in 0..op.dim() {
        x[k] = phi.eval(lambda[k])? * v[k];
    }
    Ok(x)
}
