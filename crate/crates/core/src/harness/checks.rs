use std::fmt;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::bregman::{appendix_identities_check, distance_bounds};
use crate::error::{Error, Result};
use crate::indexfn::{IndexFunction, PsiProfile};
use crate::linops::{derive_seed, LinearOperator};
use crate::penalties::Penalty;

use super::instance::{Model, NoiseFreePoint, NoisyPoint, RegularizationInstance};
use super::{with_pool, ExperimentRecord};

/// Outcome of an inequality check over grid points. `excess` is
/// `lhs − rhs`; a point violates when `excess > tol`. Points whose solver
/// did not converge are counted separately and not asserted.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub tol: f64,
    pub points: usize,
    pub violations: usize,
    pub max_excess: f64,
    /// `(α, δ)` of the largest excess.
    pub worst: Option<(f64, f64)>,
    pub nonconverged: usize,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, tol: f64) -> Self {
        Self {
            name: name.into(),
            tol,
            points: 0,
            violations: 0,
            max_excess: f64::NEG_INFINITY,
            worst: None,
            nonconverged: 0,
        }
    }

    pub fn observe(&mut self, alpha: f64, delta: f64, excess: f64, converged: bool) {
        self.points += 1;
        if !converged {
            self.nonconverged += 1;
            return;
        }
        if excess > self.tol || excess.is_nan() {
            self.violations += 1;
        }
        if excess > self.max_excess || excess.is_nan() {
            self.max_excess = excess;
            self.worst = Some((alpha, delta));
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} violations over {} points, max excess {:.3e}", self.name, self.violations, self.points, self.max_excess)?;
        if let (false, Some((a, d))) = (self.passed(), self.worst) {
            write!(f, " at alpha={a:.6e}, delta={d:.6e}")?;
        }
        if self.nonconverged > 0 {
            write!(f, " ({} not converged)", self.nonconverged)?;
        }
        Ok(())
    }
}

fn converged_point(inst: &RegularizationInstance, alpha: f64) -> Result<NoiseFreePoint> {
    let p = inst.noise_free(alpha)?;
    if !p.converged {
        return Err(Error::NotConverged(format!(
            "{} at alpha={alpha}: kkt residual {:.3e}",
            inst.label(),
            p.kkt_residual
        )));
    }
    Ok(p)
}

/// `J(x†) − J(x_α)`.
pub fn defect_penalty(inst: &RegularizationInstance, alpha: f64) -> Result<f64> {
    Ok(converged_point(inst, alpha)?.defect_j)
}

/// `(T_α(x†; y) − T_α(x_α; y))/α`.
pub fn defect_tikhonov(inst: &RegularizationInstance, alpha: f64) -> Result<f64> {
    Ok(converged_point(inst, alpha)?.defect_t)
}

fn noise_free_grid(inst: &RegularizationInstance, alphas: &[f64]) -> Result<Vec<NoiseFreePoint>> {
    with_pool(|| alphas.par_iter().map(|&a| inst.noise_free(a)).collect())
}

/// `defect_J ≤ 2 defect_T` at every `α`.
pub fn check_equivalence(inst: &RegularizationInstance, alphas: &[f64]) -> Result<CheckReport> {
    let mut report = CheckReport::new(format!("{}: defect_J <= 2 defect_T", inst.label()), 1e-10);
    for p in noise_free_grid(inst, alphas)? {
        report.observe(p.alpha, 0.0, p.defect_j - 2.0 * p.defect_t, p.converged);
    }
    Ok(report)
}

/// `‖A x_α − y‖²/(2α) ≤ defect_J` at every `α`.
pub fn check_residual_bound(inst: &RegularizationInstance, alphas: &[f64]) -> Result<CheckReport> {
    let mut report = CheckReport::new(format!("{}: residual_sq/(2 alpha) <= defect_J", inst.label()), 1e-10);
    for p in noise_free_grid(inst, alphas)? {
        report.observe(p.alpha, 0.0, p.residual_sq / (2.0 * p.alpha) - p.defect_j, p.converged);
    }
    Ok(report)
}

type Cell = (usize, usize, u64);

fn cells(alphas: &[f64], deltas: &[f64], replicates: usize, base_seed: u64) -> Vec<Cell> {
    let mut out = Vec::with_capacity(alphas.len() * deltas.len() * replicates);
    for i in 0..alphas.len() {
        for j in 0..deltas.len() {
            for r in 0..replicates {
                out.push((i, j, derive_seed(base_seed, &[i as u64, j as u64, r as u64])));
            }
        }
    }
    out
}

fn noisy_grid(
    inst: &RegularizationInstance,
    alphas: &[f64],
    deltas: &[f64],
    replicates: usize,
    base_seed: u64,
) -> Result<Vec<(Cell, NoisyPoint)>> {
    let cells = cells(alphas, deltas, replicates, base_seed);
    with_pool(|| {
        cells
            .par_iter()
            .map(|&(i, j, seed)| Ok(((i, j, seed), inst.noisy(alphas[i], deltas[j], seed)?)))
            .collect()
    })
}

/// Full `(α, δ, replicate)` sweep, rows ordered with `α` outermost and the
/// replicate innermost.
pub fn sweep(
    inst: &RegularizationInstance,
    psi: &PsiProfile,
    alphas: &[f64],
    deltas: &[f64],
    replicates: usize,
    base_seed: u64,
) -> Result<Vec<ExperimentRecord>> {
    let exact = noise_free_grid(inst, alphas)?;
    let psis: Vec<f64> = alphas.iter().map(|&a| psi.psi_at(a)).collect::<Result<_>>()?;
    let noisy = noisy_grid(inst, alphas, deltas, replicates, base_seed)?;
    Ok(noisy
        .into_iter()
        .map(|((i, j, seed), n)| {
            let (alpha, delta, p) = (alphas[i], deltas[j], &exact[i]);
            let bound = delta * delta / (2.0 * alpha) + psis[i];
            ExperimentRecord {
                alpha,
                delta,
                seed,
                defect_j: p.defect_j,
                defect_t: p.defect_t,
                residual_sq: p.residual_sq,
                bregman_noisy: n.bregman,
                psi: psis[i],
                bound,
                violation: n.bregman - bound,
                converged: p.converged && n.converged,
            }
        })
        .collect())
}

/// `B_{ξ_α^δ}(x_α^δ; x†) ≤ δ²/(2α) + Ψ(α)` at every sweep cell.
pub fn check_error_splitting(
    inst: &RegularizationInstance,
    psi: &PsiProfile,
    alphas: &[f64],
    deltas: &[f64],
    replicates: usize,
    base_seed: u64,
) -> Result<(CheckReport, Vec<ExperimentRecord>)> {
    let records = sweep(inst, psi, alphas, deltas, replicates, base_seed)?;
    let mut report = CheckReport::new(format!("{}: bregman <= delta^2/(2 alpha) + psi", inst.label()), 1e-9);
    for r in &records {
        report.observe(r.alpha, r.delta, r.violation, r.converged);
    }
    Ok((report, records))
}

/// `J(x†) − J(x) ≤ Φ(‖Ax − Ax†‖)` on random probes: half Gaussian
/// perturbations of `x†`, half perturbations of one to three coordinates,
/// with log-uniform scales.
pub fn check_vi(inst: &RegularizationInstance, phi: &IndexFunction, probes: usize, seed: u64) -> Result<CheckReport> {
    if probes == 0 {
        return Err(Error::Precondition("at least one probe required".into()));
    }
    let Model::Linear { op, x_dagger, penalty } = inst.model() else {
        return Err(Error::Precondition("variational inequality check needs a linear model".into()));
    };
    let n = x_dagger.len();
    let j_dagger = penalty.eval(x_dagger);
    let scale0 = 1.0 + x_dagger.amax();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CheckReport::new(format!("{}: variational inequality", inst.label()), 1e-12 * (1.0 + j_dagger));
    for p in 0..probes {
        let scale = scale0 * 10f64.powf(rng.random_range(-3.0..1.0));
        let mut x = x_dagger.clone();
        if p % 2 == 0 {
            let g = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let norm = g.norm();
            if norm > 0.0 {
                x += g * (scale / norm);
            }
        } else {
            for _ in 0..rng.random_range(1..=3usize.min(n)) {
                let k = rng.random_range(0..n);
                x[k] += scale * rng.sample::<f64, _>(StandardNormal);
            }
        }
        let t = (op.apply(&x)? - op.apply(x_dagger)?).norm();
        let bound = if t > 0.0 { phi.eval(t)? } else { 0.0 };
        report.observe(t, 0.0, j_dagger - penalty.eval(&x) - bound, true);
    }
    Ok(report)
}

/// `Φ(t) = 2 min_{0≤n≤N} (Σ_{k>n} |x†_k| + t Σ_{k≤n} ‖f^(k)‖)`.
pub fn l1_phi(x_dagger: &[f64], source_norms: &[f64], t: f64) -> f64 {
    let mut tail: f64 = x_dagger.iter().map(|v| v.abs()).sum();
    let mut head = 0.0;
    let mut best = tail;
    for (x, f) in x_dagger.iter().zip(source_norms) {
        tail -= x.abs();
        head += f;
        best = best.min(tail.max(0.0) + t * head);
    }
    2.0 * best
}

pub fn l1_phi_function(x_dagger: &[f64], source_norms: &[f64]) -> IndexFunction {
    let (x, f) = (x_dagger.to_vec(), source_norms.to_vec());
    IndexFunction::composite("l1_phi", move |t| l1_phi(&x, &f, t), (1e-6, 1.0))
}

/// `‖f^(k)‖` for `e_k = A* f^(k)`, i.e. the row norms of `A⁻¹`.
pub fn l1_source_norms(op: &LinearOperator) -> Result<Vec<f64>> {
    if op.rows() != op.cols() {
        return Err(Error::DimensionMismatch { expected: op.cols(), found: op.rows() });
    }
    let inv = op
        .to_dense()
        .try_inverse()
        .ok_or_else(|| Error::LinearSolve("operator is not invertible".into()))?;
    Ok((0..inv.nrows()).map(|k| inv.row(k).norm()).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct DichotomyReport {
    pub label: String,
    pub singular: bool,
    /// `(α, defect_J(α)/α)` in increasing `α`.
    pub quotients: Vec<(f64, f64)>,
    /// Minimum quotient over the lower half of the grid.
    pub tail_min: f64,
    /// `tail_min / 2`.
    pub c0: f64,
    /// Smallest per-decade ratio of consecutive tail quotients (toward small `α`).
    pub worst_decay_per_decade: f64,
    pub max_abs_defect: f64,
    pub passed: bool,
}

impl fmt::Display for DichotomyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.singular {
            write!(f, "{}: singular, max |defect_J| = {:.3e}", self.label, self.max_abs_defect)
        } else {
            write!(
                f,
                "{}: defect_J/alpha >= c0 = {:.6e}, worst decay per decade {:.4}",
                self.label, self.c0, self.worst_decay_per_decade
            )
        }
    }
}

/// Either `defect_J ≡ 0` (singular) or `defect_J(α)/α` stays bounded below
/// on the small-`α` half of the grid, decaying by at most a factor 2 per
/// decade between neighbours.
pub fn check_dichotomy(inst: &RegularizationInstance, alphas: &[f64]) -> Result<DichotomyReport> {
    let mut grid: Vec<f64> = alphas.to_vec();
    grid.sort_by(f64::total_cmp);
    if grid.len() < 2 || grid[grid.len() - 1] / grid[0] < 1e3 * (1.0 - 1e-12) {
        return Err(Error::Precondition("dichotomy check needs a grid spanning at least 3 decades".into()));
    }
    let points = noise_free_grid(inst, &grid)?;
    if let Some(p) = points.iter().find(|p| !p.converged) {
        return Err(Error::NotConverged(format!("{} at alpha={}", inst.label(), p.alpha)));
    }
    let quotients: Vec<(f64, f64)> = points.iter().map(|p| (p.alpha, p.defect_j / p.alpha)).collect();
    let max_abs_defect = points.iter().map(|p| p.defect_j.abs()).fold(0.0, f64::max);
    let singular = inst.is_singular();
    let tail = &quotients[..quotients.len().div_ceil(2)];
    let tail_min = tail.iter().map(|q| q.1).fold(f64::INFINITY, f64::min);
    let worst = tail
        .windows(2)
        .map(|w| (w[0].1 / w[1].1).powf(1.0 / (w[1].0 / w[0].0).log10()))
        .fold(f64::INFINITY, f64::min);
    let passed = if singular { max_abs_defect <= 1e-12 } else { tail_min > 0.0 && worst >= 0.5 };
    Ok(DichotomyReport {
        label: inst.label().to_string(),
        singular,
        quotients,
        tail_min,
        c0: tail_min / 2.0,
        worst_decay_per_decade: worst,
        max_abs_defect,
        passed,
    })
}

/// `B_{ξ_α^δ}(x_α^δ; x†) ≤ 1e-8` everywhere when `J(x†) = min J`.
pub fn singular_bregman_check(
    inst: &RegularizationInstance,
    alphas: &[f64],
    deltas: &[f64],
    replicates: usize,
    base_seed: u64,
) -> Result<CheckReport> {
    if !inst.is_singular() {
        return Err(Error::Precondition(format!("{} is not singular", inst.label())));
    }
    let mut report = CheckReport::new(format!("{}: bregman vanishes", inst.label()), 1e-8);
    for ((i, j, _), n) in noisy_grid(inst, alphas, deltas, replicates, base_seed)? {
        report.observe(alphas[i], deltas[j], n.bregman, n.converged);
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HigherOrderReport {
    pub label: String,
    /// `max |B_ξα(x_α; x†) − ((2/α)(T_α(x†) − T_α(x_α)) − defect_J)|`
    pub identity_residual: f64,
    /// Quadratic only: `max |B_ξα(x_α; x†) − ½‖r_α(A*A) x†‖²|`.
    pub filter_residual: Option<f64>,
    /// Quadratic only: `B^δ ≤ 2 B + δ²/α`.
    pub inequality: Option<CheckReport>,
    /// Smallest `C₁` with `B^δ ≤ C₁ B + δ²/α` over the sweep.
    pub empirical_c1: f64,
}

/// Noise-free identity for the Bregman distance and the two-constant
/// comparison between noisy and exact distances.
pub fn higher_order_probe(
    inst: &RegularizationInstance,
    alphas: &[f64],
    deltas: &[f64],
    replicates: usize,
    base_seed: u64,
) -> Result<HigherOrderReport> {
    if alphas.is_empty() || deltas.is_empty() {
        return Err(Error::Precondition("grids must be nonempty".into()));
    }
    let exact = noise_free_grid(inst, alphas)?;
    let identity_residual =
        exact.iter().map(|p| (p.bregman - (2.0 * p.defect_t - p.defect_j)).abs()).fold(0.0, f64::max);

    let quadratic = inst.penalty() == Some(Penalty::Quadratic);
    let filter_residual = match (quadratic, inst.model()) {
        (true, Model::Linear { op: LinearOperator::Diagonal(d), x_dagger, .. }) => {
            let lambda = d.eigenvalues();
            let mut worst: f64 = 0.0;
            for p in &exact {
                let filtered: f64 = (0..x_dagger.len())
                    .map(|k| (p.alpha / (p.alpha + lambda[k]) * x_dagger[k]).powi(2))
                    .sum::<f64>()
                    * 0.5;
                worst = worst.max((p.bregman - filtered).abs());
            }
            Some(worst)
        }
        _ => None,
    };

    let mut inequality = quadratic.then(|| CheckReport::new(format!("{}: noisy <= 2 exact + delta^2/alpha", inst.label()), 1e-12));
    let mut c1: f64 = 0.0;
    for ((i, j, _), n) in noisy_grid(inst, alphas, deltas, replicates, base_seed)? {
        let (alpha, delta, b) = (alphas[i], deltas[j], exact[i].bregman);
        let noise_term = delta * delta / alpha;
        if let Some(rep) = inequality.as_mut() {
            rep.observe(alpha, delta, n.bregman - (2.0 * b + noise_term), n.converged && exact[i].converged);
        }
        if b > 0.0 {
            c1 = c1.max((n.bregman - noise_term) / b);
        }
    }
    Ok(HigherOrderReport {
        label: inst.label().to_string(),
        identity_residual,
        filter_residual,
        inequality,
        empirical_c1: c1,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityReport {
    pub label: String,
    pub points: usize,
    /// Largest mismatch of the three residual identities.
    pub max_identity_mismatch: f64,
    /// Largest mismatch of `B_ξα(x_α; x†) = defect_T − ‖r‖²/(2α)`.
    pub max_exact_mismatch: f64,
    /// Smallest slack of the noisy distance bound (negative = violated).
    pub min_noisy_slack: f64,
    pub max_kkt: f64,
}

/// Residual identities and both distance bounds at every sweep cell of a
/// linear instance.
pub fn check_identities(
    inst: &RegularizationInstance,
    alphas: &[f64],
    deltas: &[f64],
    replicates: usize,
    base_seed: u64,
) -> Result<IdentityReport> {
    let Model::Linear { op, x_dagger, penalty } = inst.model() else {
        return Err(Error::Precondition("identity check needs a linear model".into()));
    };
    let exact = noise_free_grid(inst, alphas)?;
    let noisy = noisy_grid(inst, alphas, deltas, replicates, base_seed)?;
    let mut report = IdentityReport {
        label: inst.label().to_string(),
        points: 0,
        max_identity_mismatch: 0.0,
        max_exact_mismatch: 0.0,
        min_noisy_slack: f64::INFINITY,
        max_kkt: 0.0,
    };
    for ((i, _, _), n) in noisy {
        let (Some(xa), Some(xd), Some(yd)) = (&exact[i].minimizer, &n.minimizer, &n.data) else {
            continue;
        };
        let alpha = alphas[i];
        let ids = appendix_identities_check(op, x_dagger, alpha, xa, xd, yd)?;
        let lb = distance_bounds(op, *penalty, x_dagger, alpha, xa, xd, yd)?;
        report.points += 1;
        report.max_identity_mismatch = report.max_identity_mismatch.max(ids.max());
        report.max_exact_mismatch = report.max_exact_mismatch.max(lb.exact_mismatch);
        report.min_noisy_slack = report.min_noisy_slack.min(lb.noisy_slack);
        report.max_kkt = report.max_kkt.max(exact[i].kkt_residual).max(n.kkt_residual);
    }
    Ok(report)
}
