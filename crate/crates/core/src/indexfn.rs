//! Index functions and the convex-analysis calculus built on them.
//!
//! An index function is continuous, strictly increasing on `(0, ∞)` and
//! tends to zero at `0+`. This module evaluates and inverts such functions,
//! computes Fenchel conjugates numerically, turns a variational-inequality
//! bound `Φ` into the defect bound `Ψ(α) = sup_t [Φ(t) − t²/(2α)]`, and
//! calibrates the regularization parameter from the companion
//! `Θ(α) = √(α Ψ(α))`.
//!
//! Suprema over the half line are located on a factor-2 geometric grid
//! spanning `[2⁻¹⁰⁰, 2¹⁰⁰]` and refined by golden-section search. A supremum
//! still increasing at the top of the grid (beyond `1e30`) is reported as
//! unbounded; callers receive `f64::INFINITY` as the marker.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linops::LinearOperator;
use crate::penalties::Penalty;

/// Shared scalar map used by composite index functions.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const GRID_EXP: i32 = 100;
const GOLDEN_REL_TOL: f64 = 1e-10;
const BRACKET_DOUBLINGS: usize = 20;
const VALIDATION_POINTS: usize = 64;

#[derive(Clone)]
pub enum IndexKind {
    /// `t^μ`
    Monomial { exponent: f64 },
    /// `slope · t`
    Linear { slope: f64 },
    /// `a t + b t ln(r*/t)`, the rounded-square defect profile.
    LogLinear { a: f64, b: f64, r_star: f64 },
    /// Piecewise-linear through `(0, 0)` and the knots; last slope extended.
    Tabulated { knots: Vec<(f64, f64)> },
    Composite { name: String, f: ScalarFn },
}

impl fmt::Debug for IndexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexKind::Monomial { exponent } => write!(f, "Monomial({exponent})"),
            IndexKind::Linear { slope } => write!(f, "Linear({slope})"),
            IndexKind::LogLinear { a, b, r_star } => {
                write!(f, "LogLinear(a={a}, b={b}, r*={r_star})")
            }
            IndexKind::Tabulated { knots } => write!(f, "Tabulated({} knots)", knots.len()),
            IndexKind::Composite { name, .. } => write!(f, "Composite({name})"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct IndexFunction {
    kind: IndexKind,
    domain: (f64, f64),
}

const DEFAULT_DOMAIN: (f64, f64) = (1e-2, 1.0);

impl IndexFunction {
    pub fn monomial(exponent: f64) -> Result<Self> {
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(Error::Domain(format!("monomial exponent must be positive, got {exponent}")));
        }
        Ok(Self { kind: IndexKind::Monomial { exponent }, domain: DEFAULT_DOMAIN })
    }

    pub fn linear(slope: f64) -> Result<Self> {
        if !(slope > 0.0 && slope.is_finite()) {
            return Err(Error::Domain(format!("linear slope must be positive, got {slope}")));
        }
        Ok(Self { kind: IndexKind::Linear { slope }, domain: DEFAULT_DOMAIN })
    }

    pub fn log_linear(a: f64, b: f64, r_star: f64) -> Result<Self> {
        if !(a > 0.0 && b >= 0.0 && r_star > 0.0) {
            return Err(Error::Domain(format!(
                "log-linear needs a > 0, b >= 0, r* > 0; got a={a}, b={b}, r*={r_star}"
            )));
        }
        Ok(Self {
            kind: IndexKind::LogLinear { a, b, r_star },
            domain: (1e-3 * r_star, r_star),
        })
    }

    /// Knots must have strictly increasing positive abscissae and strictly
    /// increasing positive values.
    pub fn tabulated(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::Precondition("tabulated function needs at least one knot".into()));
        }
        let mut prev = (0.0, 0.0);
        for &(t, v) in &knots {
            if !(t > prev.0 && v > prev.1) {
                return Err(Error::Precondition(format!(
                    "tabulated knots must increase strictly in both coordinates: ({t}, {v}) after ({}, {})",
                    prev.0, prev.1
                )));
            }
            prev = (t, v);
        }
        let domain = (knots[0].0, knots[knots.len() - 1].0);
        Ok(Self { kind: IndexKind::Tabulated { knots }, domain })
    }

    pub fn composite<F>(name: impl Into<String>, f: F, domain: (f64, f64)) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            kind: IndexKind::Composite { name: name.into(), f: Arc::new(f) },
            domain,
        }
    }

    pub fn with_domain(mut self, lo: f64, hi: f64) -> Self {
        self.domain = (lo, hi);
        self
    }

    pub fn kind(&self) -> &IndexKind {
        &self.kind
    }

    pub fn domain_hint(&self) -> (f64, f64) {
        self.domain
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("index function evaluated at t = {t}")));
        }
        Ok(self.value(t))
    }

    /// Unchecked evaluation for `t > 0`.
    pub(crate) fn value(&self, t: f64) -> f64 {
        match &self.kind {
            IndexKind::Monomial { exponent } => t.powf(*exponent),
            IndexKind::Linear { slope } => slope * t,
            IndexKind::LogLinear { a, b, r_star } => a * t + b * t * (r_star / t).ln(),
            IndexKind::Tabulated { knots } => interpolate(knots, t),
            IndexKind::Composite { f, .. } => f(t),
        }
    }

    /// Solves `f(t) = y`. The result satisfies `|f(t) − y| ≤ tol·max(1, y)`.
    pub fn invert(&self, y: f64, tol: f64) -> Result<f64> {
        if !(y > 0.0) || !(tol > 0.0) {
            return Err(Error::Domain(format!("invert needs y > 0 and tol > 0, got y={y}, tol={tol}")));
        }
        match self.kind {
            IndexKind::Monomial { exponent } => return Ok(y.powf(exponent.recip())),
            IndexKind::Linear { slope } => return Ok(y / slope),
            _ => {}
        }
        let (mut lo, mut hi) = self.domain;
        let mut doublings = 0;
        while self.value(hi) < y {
            hi *= 2.0;
            doublings += 1;
            if doublings > BRACKET_DOUBLINGS {
                return Err(Error::Range { value: y, lo, hi });
            }
        }
        let mut halvings = 0;
        while self.value(lo) > y {
            lo *= 0.5;
            halvings += 1;
            if halvings > BRACKET_DOUBLINGS {
                return Err(Error::Range { value: y, lo, hi });
            }
        }
        for _ in 0..400 {
            let mid = if hi > 4.0 * lo { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
            let fm = self.value(mid);
            if (fm - y).abs() <= tol * y || hi - lo <= 4.0 * f64::EPSILON * hi {
                return Ok(mid);
            }
            if fm < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Samples the index-function properties on 64 log-spaced points of
    /// `[lo, hi]`: strict increase, decay toward zero below `lo`, and
    /// continuity under a relative perturbation of `1e-9`.
    pub fn validate_on_grid(&self, lo: f64, hi: f64) -> Result<()> {
        let grid = log_points(lo, hi, VALIDATION_POINTS);
        let values: Vec<f64> = grid.iter().map(|&t| self.value(t)).collect();
        for (w, t) in values.windows(2).zip(grid.windows(2)) {
            if !(w[1] > w[0]) {
                return Err(Error::Precondition(format!(
                    "not strictly increasing between t={} and t={}",
                    t[0], t[1]
                )));
            }
        }
        let mut prev = self.value(lo);
        for k in 1..=20 {
            let v = self.value(lo * 0.5f64.powi(k));
            if !(v < prev && v >= 0.0) {
                return Err(Error::Precondition(format!(
                    "no monotone decay toward 0 below t={lo} (step {k})"
                )));
            }
            prev = v;
        }
        for (&t, &v) in grid.iter().zip(&values) {
            let jump = (self.value(t * (1.0 + 1e-9)) - v).abs();
            if jump > 1e-6 * (1.0 + v.abs()) {
                return Err(Error::Precondition(format!("discontinuity near t={t}")));
            }
        }
        Ok(())
    }
}

fn interpolate(knots: &[(f64, f64)], t: f64) -> f64 {
    let mut prev = (0.0, 0.0);
    for &(kt, kv) in knots {
        if t <= kt {
            return prev.1 + (t - prev.0) * (kv - prev.1) / (kt - prev.0);
        }
        prev = (kt, kv);
    }
    // extend the final segment
    let n = knots.len();
    let (t0, v0) = if n >= 2 { knots[n - 2] } else { (0.0, 0.0) };
    let (t1, v1) = knots[n - 1];
    v1 + (t - t1) * (v1 - v0) / (t1 - t0)
}

fn log_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Outcome of a supremum over the positive half line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Supremum {
    Finite { argmax: f64, value: f64 },
    Unbounded,
}

impl Supremum {
    /// Value with `+∞` standing in for an unbounded supremum.
    pub fn value(self) -> f64 {
        match self {
            Supremum::Finite { value, .. } => value,
            Supremum::Unbounded => f64::INFINITY,
        }
    }
}

/// Supremum of `g` over `t > 0`, assuming `g` is unimodal (concave in the
/// cases of interest).
pub fn sup_half_line<G: Fn(f64) -> f64>(g: G) -> Supremum {
    let eval = |t: f64| {
        let v = g(t);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let grid: Vec<f64> = (-GRID_EXP..=GRID_EXP).map(|k| 2f64.powi(k)).collect();
    let values: Vec<f64> = grid.iter().map(|&t| eval(t)).collect();
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    let last = grid.len() - 1;
    if best == last && values[last] > values[last - 1] {
        return Supremum::Unbounded;
    }
    if values[best] == f64::INFINITY {
        return Supremum::Unbounded;
    }
    if best == 0 {
        // sup approached as t -> 0+
        return Supremum::Finite { argmax: grid[0], value: values[0] };
    }
    let hi_idx = (best + 1).min(last);
    let (arg, val) = golden_max(&eval, grid[best - 1], grid[hi_idx]);
    if val >= values[best] {
        Supremum::Finite { argmax: arg, value: val }
    } else {
        Supremum::Finite { argmax: grid[best], value: values[best] }
    }
}

fn golden_max<G: Fn(f64) -> f64>(g: &G, mut a: f64, mut b: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = g(c);
    let mut fd = g(d);
    for _ in 0..300 {
        if b - a <= GOLDEN_REL_TOL * 0.5 * (c + d) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = g(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// `f*(t) = sup_{s≥0} (s t − f(s))` for a convex index function `f`.
/// Returns `f64::INFINITY` when the supremum diverges.
pub fn fenchel_conjugate(f: &IndexFunction, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("conjugate evaluated at t = {t}")));
    }
    // s = 0 contributes -f(0+) = 0
    Ok(sup_half_line(|s| s * t - f.value(s)).value().max(0.0))
}

/// `Ψ(α) = sup_{t>0} [Φ(t) − t²/(2α)]`, or `f64::INFINITY` when `Φ` outgrows
/// the parabola.
pub fn psi_from_phi(phi: &IndexFunction, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
    }
    let two_alpha = 2.0 * alpha;
    // the objective tends to 0 as t -> 0+, so the sup is nonnegative
    Ok(sup_half_line(|t| phi.value(t) - t * t / two_alpha).value().max(0.0))
}

/// `Ψ(α) = Φ̃^{-*}(2α)/(2α)` where `phi_tilde_inverse` is the convex inverse
/// of `Φ̃(t) = Φ(√t)`. Agrees with [`psi_from_phi`] when `Φ̃` is concave.
pub fn psi_closed_form_concave(phi_tilde_inverse: &IndexFunction, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
    }
    Ok(fenchel_conjugate(phi_tilde_inverse, 2.0 * alpha)? / (2.0 * alpha))
}

/// Closed form of `Ψ` for `Φ(t) = t^μ`, `0 < μ < 2`.
pub fn monomial_psi(mu: f64, alpha: f64) -> f64 {
    (2.0 - mu) / 2.0 * (mu * alpha).powf(mu / (2.0 - mu))
}

#[derive(Clone, Debug)]
pub enum PsiSource {
    Assumed,
    FromPhi(IndexFunction),
    Empirical,
}

/// A defect bound `Ψ` together with its companion `Θ(α) = √(α Ψ(α))`.
#[derive(Clone, Debug)]
pub struct PsiProfile {
    psi: IndexFunction,
    source: PsiSource,
}

impl PsiProfile {
    pub fn assumed(psi: IndexFunction) -> Self {
        Self { psi, source: PsiSource::Assumed }
    }

    /// `Ψ` computed pointwise by [`psi_from_phi`].
    pub fn from_phi(phi: IndexFunction) -> Self {
        let inner = phi.clone();
        let domain = phi.domain_hint();
        let psi = IndexFunction::composite(
            "psi_from_phi",
            move |a| psi_from_phi(&inner, a).unwrap_or(f64::NAN),
            domain,
        );
        Self { psi, source: PsiSource::FromPhi(phi) }
    }

    /// Monotone envelope (running maximum) of measured defects on a grid.
    pub fn empirical(alphas: &[f64], defects: &[f64]) -> Result<Self> {
        if alphas.len() != defects.len() || alphas.is_empty() {
            return Err(Error::DimensionMismatch { expected: alphas.len(), found: defects.len() });
        }
        let mut pairs: Vec<(f64, f64)> = alphas.iter().copied().zip(defects.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut knots: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
        let mut running: f64 = 0.0;
        for (a, d) in pairs {
            running = running.max(d);
            // keep knots strictly increasing
            let floor = knots.last().map_or(0.0, |k| k.1);
            let v = running.max(floor * (1.0 + 1e-15) + f64::MIN_POSITIVE);
            knots.push((a, v));
        }
        Ok(Self { psi: IndexFunction::tabulated(knots)?, source: PsiSource::Empirical })
    }

    pub fn psi(&self) -> &IndexFunction {
        &self.psi
    }

    pub fn source(&self) -> &PsiSource {
        &self.source
    }

    pub fn psi_at(&self, alpha: f64) -> Result<f64> {
        self.psi.eval(alpha)
    }

    pub fn theta(&self, alpha: f64) -> Result<f64> {
        Ok((alpha * self.psi.eval(alpha)?).sqrt())
    }

    pub fn theta_function(&self) -> IndexFunction {
        let psi = self.psi.clone();
        IndexFunction::composite("theta", move |a| (a * psi.value(a)).sqrt(), self.psi.domain_hint())
    }
}

/// `α* = Θ⁻¹(δ/√2)`, which equalizes `δ²/(2α)` and `Ψ(α)`.
pub fn calibrate_alpha(profile: &PsiProfile, delta: f64, tol: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("delta must be positive, got {delta}")));
    }
    profile.theta_function().invert(delta / std::f64::consts::SQRT_2, tol)
}

/// Parameter choice `2α ∈ ∂Φ̃⁻¹(Φ(δ))` that turns the Fenchel–Young bound
/// `δ²/(2α) + Ψ(α) ≥ Φ(δ)` into an equality. The subgradient is a central
/// difference with relative step `1e-6`.
pub fn rate_alpha_from_subgradient(phi: &IndexFunction, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("delta must be positive, got {delta}")));
    }
    // Φ̃⁻¹(u) = (Φ⁻¹(u))²
    let phi_tilde_inv = |u: f64| -> Result<f64> {
        let s = phi.invert(u, 1e-15)?;
        Ok(s * s)
    };
    let u = phi.eval(delta)?;
    let h = 1e-6 * u;
    let slope = (phi_tilde_inv(u + h)? - phi_tilde_inv(u - h)?) / (2.0 * h);
    Ok(slope / 2.0)
}

/// `max_{x ∈ candidates} J(x†) − J(x) − R‖Ax† − Ax‖`, a lower bound on the
/// distance function. `candidates` must contain `x_dagger`.
pub fn distance_function(
    op: &LinearOperator,
    penalty: Penalty,
    x_dagger: &DVector<f64>,
    candidates: &[DVector<f64>],
    radius: f64,
) -> Result<f64> {
    if candidates.is_empty() {
        return Err(Error::Precondition("candidate set is empty".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::Domain(format!("radius must be positive, got {radius}")));
    }
    let j_dagger = penalty.eval(x_dagger);
    let ax_dagger = op.apply(x_dagger)?;
    let mut best = f64::NEG_INFINITY;
    for x in candidates {
        let misfit = (&ax_dagger - op.apply(x)?).norm();
        best = best.max(j_dagger - penalty.eval(x) - radius * misfit);
    }
    Ok(best)
}

/// Sampled distance function `R ↦ d(R)`.
#[derive(Clone, Debug)]
pub struct DistanceFunction {
    samples: Vec<(f64, f64)>,
}

impl DistanceFunction {
    /// Radii must increase strictly; `d` must be nonnegative and nonincreasing.
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Precondition("distance function needs two samples".into()));
        }
        for w in samples.windows(2) {
            if !(w[0].0 > 0.0 && w[1].0 > w[0].0) {
                return Err(Error::Precondition("radii must be positive and increasing".into()));
            }
            if w[1].1 > w[0].1 {
                return Err(Error::Precondition(format!(
                    "distance increases between R={} and R={}",
                    w[0].0, w[1].0
                )));
            }
        }
        if samples.iter().any(|s| !(s.1 >= 0.0)) {
            return Err(Error::Precondition("distance values must be nonnegative".into()));
        }
        Ok(Self { samples })
    }

    /// Tabulates [`distance_function`] on the given radii.
    pub fn tabulate(
        op: &LinearOperator,
        penalty: Penalty,
        x_dagger: &DVector<f64>,
        candidates: &[DVector<f64>],
        radii: &[f64],
    ) -> Result<Self> {
        let samples = radii
            .iter()
            .map(|&r| Ok((r, distance_function(op, penalty, x_dagger, candidates, r)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(samples)
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    /// Samples up to and including the first zero, which is where a finite
    /// candidate set stops decreasing.
    pub fn positive_part(&self) -> Result<Self> {
        let cut = self.samples.iter().position(|s| s.1 == 0.0).map_or(self.samples.len(), |i| i + 1);
        Self::new(self.samples[..cut].to_vec())
    }

    fn interpolate(&self, i: usize, r: f64) -> f64 {
        let (r0, d0) = self.samples[i];
        let (r1, d1) = self.samples[i + 1];
        d0 + (r - r0) * (d1 - d0) / (r1 - r0)
    }
}

/// `Φ(α) = 2 d(Θ⁻¹(α))` with `Θ(R) = d(R)/R`, using piecewise-linear `d`.
pub fn phi_from_distance(d: &DistanceFunction, alpha: f64, tol: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
    }
    let s = d.samples();
    for w in s.windows(2) {
        if !(w[1].1 < w[0].1) {
            return Err(Error::Precondition(format!(
                "distance function not strictly decreasing between R={} and R={}",
                w[0].0, w[1].0
            )));
        }
    }
    let theta: Vec<f64> = s.iter().map(|&(r, dv)| dv / r).collect();
    let (hi, lo) = (theta[0], theta[theta.len() - 1]);
    if alpha > hi || alpha < lo {
        return Err(Error::Range { value: alpha, lo, hi });
    }
    let i = theta.windows(2).position(|w| w[0] >= alpha && alpha >= w[1]).unwrap_or(theta.len() - 2);
    let (mut r_lo, mut r_hi) = (s[i].0, s[i + 1].0);
    let mut r = r_lo;
    for _ in 0..200 {
        r = 0.5 * (r_lo + r_hi);
        let th = d.interpolate(i, r) / r;
        if (th - alpha).abs() <= tol * alpha {
            break;
        }
        if th > alpha {
            r_lo = r;
        } else {
            r_hi = r;
        }
    }
    Ok(2.0 * d.interpolate(i, r))
}

/// Representation of a convex index function `f` whose quotient
/// `q(t) = f(t)/t` is a strictly increasing index function:
/// `φ(q(t)) = √t`, `Θ(t) = √t φ(t)` and `f(t) = Θ²((φ²)⁻¹(t))`.
#[derive(Clone, Debug)]
pub struct ConvexRepresentation {
    f: IndexFunction,
    quotient: IndexFunction,
}

impl ConvexRepresentation {
    pub fn new(f: IndexFunction) -> Result<Self> {
        let inner = f.clone();
        let quotient = IndexFunction::composite("f(t)/t", move |t| inner.value(t) / t, f.domain_hint());
        let (lo, hi) = f.domain_hint();
        quotient.validate_on_grid(lo, hi)?;
        Ok(Self { f, quotient })
    }

    pub fn f(&self) -> &IndexFunction {
        &self.f
    }

    /// `φ²(u) = q⁻¹(u)`.
    pub fn phi_squared(&self, u: f64) -> Result<f64> {
        self.quotient.invert(u, 1e-15)
    }

    pub fn phi(&self, u: f64) -> Result<f64> {
        Ok(self.phi_squared(u)?.sqrt())
    }

    pub fn theta(&self, u: f64) -> Result<f64> {
        Ok(u.sqrt() * self.phi(u)?)
    }

    /// `Θ²((φ²)⁻¹(t))` with the inner inverse computed by bisection.
    pub fn reconstruct(&self, t: f64) -> Result<f64> {
        let rep = self.clone();
        let phi_sq = IndexFunction::composite(
            "phi^2",
            move |u| rep.phi_squared(u).unwrap_or(f64::NAN),
            self.quotient.domain_hint(),
        );
        let s = phi_sq.invert(t, 1e-15)?;
        let theta = self.theta(s)?;
        Ok(theta * theta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * (1.0 + b.abs())
    }

    #[test]
    fn eval_examples() {
        assert_eq!(IndexFunction::monomial(1.0).unwrap().eval(0.3).unwrap(), 0.3);
        assert_eq!(IndexFunction::monomial(0.5).unwrap().eval(4.0).unwrap(), 2.0);
        let ll = IndexFunction::log_linear(4.0, 2.0 * (4.0 - PI), 1.0).unwrap();
        let expected = 0.4 + 2.0 * (4.0 - PI) * 0.1 * 10f64.ln();
        assert!((ll.eval(0.1).unwrap() - expected).abs() < 1e-15);
        assert!((ll.eval(0.1).unwrap() - 0.7953).abs() < 1e-4);
    }

    #[test]
    fn eval_rejects_nonpositive() {
        let f = IndexFunction::monomial(1.0).unwrap();
        assert!(matches!(f.eval(0.0), Err(Error::Domain(_))));
        assert!(matches!(f.eval(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn invert_examples() {
        let tol = 1e-12;
        let sq = IndexFunction::monomial(2.0).unwrap();
        assert!((sq.invert(9.0, tol).unwrap() - 3.0).abs() <= tol);
        let id = IndexFunction::monomial(1.0).unwrap();
        assert!((id.invert(0.7, tol).unwrap() - 0.7).abs() <= tol);
        // Θ(α) = √(α·4α) = 2α through the generic bisection path
        let psi = IndexFunction::linear(4.0).unwrap();
        let theta = PsiProfile::assumed(psi).theta_function();
        assert!((theta.invert(1.0, tol).unwrap() - 0.5).abs() <= tol);
    }

    #[test]
    fn invert_bisection_meets_contract() {
        let f = IndexFunction::composite("cubic+lin", |t| t * t * t + t, (0.1, 1.0));
        for &y in &[1e-6, 0.3, 2.0, 1e3] {
            let t = f.invert(y, 1e-10).unwrap();
            assert!((f.value(t) - y).abs() <= 1e-10 * y.max(1.0));
        }
    }

    #[test]
    fn invert_range_error() {
        let bounded = IndexFunction::composite("bounded", |t| t / (1.0 + t), (0.1, 1.0));
        assert!(matches!(bounded.invert(2.0, 1e-10), Err(Error::Range { .. })));
    }

    #[test]
    fn conjugate_examples() {
        let half_sq = IndexFunction::composite("s^2/2", |s| 0.5 * s * s, (0.1, 1.0));
        assert!(close(fenchel_conjugate(&half_sq, 3.0).unwrap(), 4.5, 1e-12));
        let cube = IndexFunction::composite("s^3/3", |s| s * s * s / 3.0, (0.1, 1.0));
        assert!(close(fenchel_conjugate(&cube, 1.0).unwrap(), 2.0 / 3.0, 1e-12));
        let mu: f64 = 1.0;
        let f = IndexFunction::monomial(2.0 / mu).unwrap();
        let closed = (2.0 - mu) / mu * (mu * 2.0 / 2.0).powf(2.0 / (2.0 - mu));
        assert!(close(fenchel_conjugate(&f, 2.0).unwrap(), closed, 1e-12));
        assert!(close(closed, 1.0, 0.0));
    }

    #[test]
    fn conjugate_of_linear_growth_is_unbounded() {
        // sup_s (s t − s) diverges for t > 1
        let lin = IndexFunction::linear(1.0).unwrap();
        assert_eq!(fenchel_conjugate(&lin, 2.0).unwrap(), f64::INFINITY);
        assert!(fenchel_conjugate(&lin, 0.5).unwrap().abs() < 1e-12);
    }

    #[test]
    fn psi_from_phi_examples() {
        let lin = IndexFunction::monomial(1.0).unwrap();
        assert!(close(psi_from_phi(&lin, 0.2).unwrap(), 0.1, 1e-12));
        let m = IndexFunction::monomial(1.5).unwrap();
        let v = psi_from_phi(&m, 0.1).unwrap();
        assert!(close(v, 8.4375e-4, 1e-10), "{v}");
        assert!(close(monomial_psi(1.5, 0.1), 0.25 * 0.15f64.powi(3), 1e-14));
        let cubic = IndexFunction::monomial(3.0).unwrap();
        for &a in &[1e-3, 0.1, 1.0, 10.0] {
            assert_eq!(psi_from_phi(&cubic, a).unwrap(), f64::INFINITY);
        }
    }

    #[test]
    fn psi_closed_form_examples() {
        // μ = 1: Φ̃⁻¹(t) = t²
        let inv = IndexFunction::monomial(2.0).unwrap();
        let phi = IndexFunction::monomial(1.0).unwrap();
        for &a in &[1e-3, 0.05, 0.7] {
            let c = psi_closed_form_concave(&inv, a).unwrap();
            assert!(close(c, a / 2.0, 1e-10));
            assert!(close(c, psi_from_phi(&phi, a).unwrap(), 1e-8));
        }
        // μ = 0.5: Φ̃⁻¹(t) = t⁴
        let inv = IndexFunction::monomial(4.0).unwrap();
        let v = psi_closed_form_concave(&inv, 0.1).unwrap();
        assert!(close(v, 0.75 * 0.05f64.powf(1.0 / 3.0), 1e-10));
        assert!((v - 0.2763).abs() < 1e-4);
    }

    #[test]
    fn calibrate_examples() {
        let tol = 1e-13;
        let lin = PsiProfile::assumed(IndexFunction::linear(1.0).unwrap());
        let a = calibrate_alpha(&lin, 0.2, tol).unwrap();
        assert!((a - 0.2 / 2f64.sqrt()).abs() < 1e-10);
        let four = PsiProfile::assumed(IndexFunction::linear(4.0).unwrap());
        let a = calibrate_alpha(&four, 1.0, tol).unwrap();
        assert!((a - 1.0 / (2.0 * 2f64.sqrt())).abs() < 1e-10);
        let sq = PsiProfile::assumed(IndexFunction::monomial(2.0).unwrap());
        for &d in &[1e-3, 0.05, 0.4] {
            let a = calibrate_alpha(&sq, d, tol).unwrap();
            assert!(close(a, (d / 2f64.sqrt()).powf(2.0 / 3.0), 1e-9));
            let psi = a * a;
            assert!((d * d / (2.0 * a) - psi).abs() <= 1e-8 * psi);
        }
    }

    #[test]
    fn rate_alpha_examples() {
        for &d in &[1e-3, 1e-2, 1e-1] {
            let lin = IndexFunction::monomial(1.0).unwrap();
            assert!(close(rate_alpha_from_subgradient(&lin, d).unwrap(), d, 1e-8));
            let sqrt = IndexFunction::monomial(0.5).unwrap();
            let a = rate_alpha_from_subgradient(&sqrt, d).unwrap();
            assert!(close(a, 2.0 * d.powf(1.5), 1e-8));
        }
    }

    #[test]
    fn distance_function_trivial_cases() {
        let op = LinearOperator::identity(3);
        let xd = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let only = vec![xd.clone()];
        for &r in &[0.1, 1.0, 100.0] {
            assert_eq!(distance_function(&op, Penalty::L1, &xd, &only, r).unwrap(), 0.0);
        }
        let cands = vec![xd.clone(), DVector::zeros(3), DVector::from_vec(vec![0.5, -1.0, 0.0])];
        assert_eq!(distance_function(&op, Penalty::L1, &xd, &cands, 1e6).unwrap(), 0.0);
        assert!(distance_function(&op, Penalty::L1, &xd, &cands, 0.1).unwrap() > 0.0);
        assert!(distance_function(&op, Penalty::L1, &xd, &[], 1.0).is_err());
    }

    #[test]
    fn phi_from_distance_power_law() {
        let radii = log_points(0.1, 100.0, 4000);
        let d = DistanceFunction::new(radii.iter().map(|&r| (r, 1.0 / r)).collect()).unwrap();
        for &a in &[1e-3, 0.01, 0.5, 10.0] {
            let phi = phi_from_distance(&d, a, 1e-12).unwrap();
            assert!(close(phi, 2.0 * a.sqrt(), 1e-4), "{a}: {phi}");
        }
        assert!(matches!(phi_from_distance(&d, 1e3, 1e-12), Err(Error::Range { .. })));
    }

    #[test]
    fn phi_from_distance_rejects_constant() {
        let d = DistanceFunction::new(vec![(1.0, 0.5), (2.0, 0.5), (3.0, 0.5)]).unwrap();
        assert!(matches!(phi_from_distance(&d, 0.2, 1e-10), Err(Error::Precondition(_))));
    }

    #[test]
    fn index_validation() {
        IndexFunction::monomial(0.5).unwrap().validate_on_grid(1e-3, 10.0).unwrap();
        IndexFunction::log_linear(4.0, 2.0 * (4.0 - PI), 1.0).unwrap().validate_on_grid(1e-6, 1.0).unwrap();
        let flat = IndexFunction::composite("flat", |_| 1.0, (0.1, 1.0));
        assert!(flat.validate_on_grid(0.1, 1.0).is_err());
    }

    #[test]
    fn empirical_profile_is_monotone_envelope() {
        let p = PsiProfile::empirical(&[0.1, 0.2, 0.4], &[0.3, 0.2, 0.5]).unwrap();
        assert!(p.psi_at(0.2).unwrap() >= 0.3);
        assert!((p.psi_at(0.4).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn representation_of_square() {
        let f = IndexFunction::monomial(2.0).unwrap();
        let rep = ConvexRepresentation::new(f).unwrap();
        for &t in &[1e-3, 0.1, 1.0, 5.0] {
            assert!((rep.phi(t).unwrap() - t.sqrt()).abs() < 1e-12);
            assert!(close(rep.reconstruct(t).unwrap(), t * t, 1e-10));
        }
    }
}
