use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bregman::bregman_distance;
use crate::error::{Error, Result};
use crate::indexfn::{IndexFunction, PsiProfile};
use crate::linops::{DiagonalOperator, LinearOperator, NoiseModel};
use crate::penalties::{subgradient_from_optimality, Penalty, RofBallGeometry, RofSquareGeometry};
use crate::solvers::{
    rof_ball_minimizer_scaled, rof_ball_quantities, rof_square_quantities, solve, source_element,
    spectral_quantities, tikhonov_value, SolveReport, SolverSettings,
};

use super::checks::{l1_phi_function, l1_source_norms};

#[derive(Clone, Debug)]
pub enum Model {
    Linear { op: LinearOperator, x_dagger: DVector<f64>, penalty: Penalty },
    /// Total-variation denoising of the indicator of a disc.
    RofBall(RofBallGeometry),
    /// Total-variation denoising of the indicator of the unit square.
    RofSquare(RofSquareGeometry),
}

/// A problem `A x = y` with known `x†`, a penalty, a noise model and the
/// defect bound `Ψ` used for the splitting check. `y = A x†` is recomputed on
/// demand.
#[derive(Clone, Debug)]
pub struct RegularizationInstance {
    label: String,
    model: Model,
    noise: NoiseModel,
    psi: PsiProfile,
    settings: SolverSettings,
}

/// Noise-free quantities at one `α`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseFreePoint {
    pub alpha: f64,
    pub defect_j: f64,
    pub defect_t: f64,
    pub residual_sq: f64,
    /// `B_{ξ_α}(x_α; x†)`
    pub bregman: f64,
    pub minimizer: Option<DVector<f64>>,
    pub kkt_residual: f64,
    pub converged: bool,
}

/// Noisy solve at one `(α, δ, seed)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoisyPoint {
    /// `B_{ξ_α^δ}(x_α^δ; x†)`
    pub bregman: f64,
    pub minimizer: Option<DVector<f64>>,
    pub data: Option<DVector<f64>>,
    pub kkt_residual: f64,
    pub converged: bool,
}

impl RegularizationInstance {
    pub fn new(label: impl Into<String>, model: Model, noise: NoiseModel, psi: PsiProfile) -> Result<Self> {
        if let Model::Linear { op, x_dagger, .. } = &model {
            if x_dagger.len() != op.cols() {
                return Err(Error::DimensionMismatch { expected: op.cols(), found: x_dagger.len() });
            }
        }
        Ok(Self { label: label.into(), model, noise, psi, settings: SolverSettings::default() })
    }

    pub fn with_settings(mut self, settings: SolverSettings) -> Self {
        self.settings = settings;
        self
    }

    pub fn with_psi(mut self, psi: PsiProfile) -> Self {
        self.psi = psi;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn psi(&self) -> &PsiProfile {
        &self.psi
    }

    pub fn settings(&self) -> SolverSettings {
        self.settings
    }

    pub fn penalty(&self) -> Option<Penalty> {
        match &self.model {
            Model::Linear { penalty, .. } => Some(*penalty),
            _ => None,
        }
    }

    pub fn x_dagger(&self) -> Option<&DVector<f64>> {
        match &self.model {
            Model::Linear { x_dagger, .. } => Some(x_dagger),
            _ => None,
        }
    }

    pub fn operator(&self) -> Option<&LinearOperator> {
        match &self.model {
            Model::Linear { op, .. } => Some(op),
            _ => None,
        }
    }

    /// `J(x†) = min J`; both penalties attain their minimum only at `0`.
    pub fn is_singular(&self) -> bool {
        match &self.model {
            Model::Linear { x_dagger, .. } => x_dagger.iter().all(|v| *v == 0.0),
            _ => false,
        }
    }

    pub fn exact_data(&self) -> Option<DVector<f64>> {
        match &self.model {
            Model::Linear { op, x_dagger, .. } => op.apply(x_dagger).ok(),
            _ => None,
        }
    }

    /// Minimizer of `T_α(·; v)` for linear models.
    pub fn solve_with_data(&self, v: &DVector<f64>, alpha: f64) -> Result<SolveReport> {
        match &self.model {
            Model::Linear { op, penalty, .. } => solve(op, *penalty, v, alpha, self.settings),
            _ => Err(Error::Precondition("closed-form model has no discrete solver".into())),
        }
    }

    pub fn noise_free(&self, alpha: f64) -> Result<NoiseFreePoint> {
        if !(alpha > 0.0) {
            return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
        }
        match &self.model {
            Model::RofBall(g) => Ok(closed_form_point(alpha, rof_ball_quantities(g, alpha)?)),
            Model::RofSquare(g) => Ok(closed_form_point(alpha, rof_square_quantities(g, alpha)?)),
            Model::Linear { op: LinearOperator::Diagonal(d), x_dagger, penalty: Penalty::Quadratic } => {
                let q = spectral_quantities(d, x_dagger, alpha)?;
                Ok(NoiseFreePoint {
                    alpha,
                    defect_j: q.defect_j,
                    defect_t: q.defect_t,
                    residual_sq: 2.0 * alpha * q.residual_over_2alpha,
                    bregman: q.bregman,
                    minimizer: Some(q.minimizer),
                    kkt_residual: 0.0,
                    converged: true,
                })
            }
            Model::Linear { op, x_dagger, penalty } => {
                let y = op.apply(x_dagger)?;
                let rep = solve(op, *penalty, &y, alpha, self.settings)?;
                let x = &rep.minimizer;
                let residual_sq = (op.apply(x)? - &y).norm_squared();
                let t_dagger = tikhonov_value(op, *penalty, x_dagger, &y, alpha)?;
                let xi = subgradient_from_optimality(op, x, &y, alpha)?;
                Ok(NoiseFreePoint {
                    alpha,
                    defect_j: penalty.eval(x_dagger) - penalty.eval(x),
                    defect_t: (t_dagger - rep.objective) / alpha,
                    residual_sq,
                    bregman: bregman_distance(*penalty, &xi, x, x_dagger),
                    minimizer: Some(rep.minimizer.clone()),
                    kkt_residual: rep.kkt_residual,
                    converged: rep.converged,
                })
            }
        }
    }

    /// Solves with `y^δ = y + Δ`, `‖Δ‖ = δ`, the noise drawn from `seed`.
    /// The ROF models perturb along the indicator itself, `y^δ = c χ`.
    pub fn noisy(&self, alpha: f64, delta: f64, seed: u64) -> Result<NoisyPoint> {
        if !(alpha > 0.0) {
            return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
        }
        match &self.model {
            Model::RofBall(g) => {
                let c = self.rof_amplitude(delta, g.area(), seed)?;
                let a = rof_ball_minimizer_scaled(g, c, alpha)?;
                // B = 0 whenever the minimizer is a nonzero multiple of χ
                let bregman = if a > 0.0 { 0.0 } else { g.perimeter() - c * g.area() / alpha };
                Ok(closed_form_noisy(bregman))
            }
            Model::RofSquare(g) => {
                // x_α^δ = c x_{α/c}, and the optimality subgradients coincide
                let c = self.rof_amplitude(delta, g.area(), seed)?;
                Ok(closed_form_noisy(rof_square_quantities(g, alpha / c)?.bregman))
            }
            Model::Linear { op, x_dagger, penalty } => {
                let y = op.apply(x_dagger)?;
                let y_delta = y + self.noise.with_seed(seed).sample(op.rows(), delta)?;
                let rep = solve(op, *penalty, &y_delta, alpha, self.settings)?;
                let xi = subgradient_from_optimality(op, &rep.minimizer, &y_delta, alpha)?;
                Ok(NoisyPoint {
                    bregman: bregman_distance(*penalty, &xi, &rep.minimizer, x_dagger),
                    minimizer: Some(rep.minimizer),
                    data: Some(y_delta),
                    kkt_residual: rep.kkt_residual,
                    converged: rep.converged,
                })
            }
        }
    }

    /// `c = 1 ± δ/‖χ‖`, so that `‖cχ − χ‖ = δ`.
    fn rof_amplitude(&self, delta: f64, area: f64, seed: u64) -> Result<f64> {
        let sign = if delta > 0.0 { self.noise.with_seed(seed).sample(1, 1.0)?[0].signum() } else { 1.0 };
        let c = 1.0 + sign * delta / area.sqrt();
        if !(c > 0.0) {
            return Err(Error::Domain(format!("noise level {delta} exceeds the data norm")));
        }
        Ok(c)
    }

    /// `J = ½‖·‖²`, diagonal operator with eigenvalues `λ`, `x† = φ(A*A) v`
    /// and `Ψ = φ²`.
    pub fn quadratic_source(
        label: impl Into<String>,
        eigenvalues: &[f64],
        source_exponent: f64,
        v: &DVector<f64>,
    ) -> Result<Self> {
        let d = DiagonalOperator::from_eigenvalues(eigenvalues)?;
        let phi = IndexFunction::monomial(source_exponent)?;
        let x_dagger = source_element(&d, &phi, v)?;
        let psi = PsiProfile::assumed(IndexFunction::monomial(2.0 * source_exponent)?);
        Self::new(
            label,
            Model::Linear { op: LinearOperator::Diagonal(d), x_dagger, penalty: Penalty::Quadratic },
            NoiseModel::gaussian(0),
            psi,
        )
    }

    /// `n = 1`, `λ = 1`, `x† = 1`.
    pub fn quadratic_scalar() -> Self {
        Self::quadratic_source("quadratic-scalar", &[1.0], 0.5, &DVector::from_element(1, 1.0))
            .expect("valid scalar instance")
    }

    /// `λ_k = k⁻²`, `x† = λ^{1/2} v` with `v` uniform of unit norm.
    pub fn quadratic_decay(n: usize) -> Result<Self> {
        let lambda: Vec<f64> = (1..=n).map(|k| (k as f64).powi(-2)).collect();
        let v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
        Self::quadratic_source("quadratic", &lambda, 0.5, &v)
    }

    /// Eigenvalues log-spaced from `1` to `1e-10`, `x† = λ^{1/2} v`. Both
    /// the approximation and the noise term scale linearly in `α` and `δ²/α`.
    pub fn quadratic_benchmark(n: usize) -> Result<Self> {
        let lambda = super::log_grid(1.0, 1e-10, n);
        let v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
        Self::quadratic_source("quadratic-benchmark", &lambda, 0.5, &v)
    }

    /// `ℓ¹` penalty, `A = I + 0.2 G/√n`, `x†` supported on the first
    /// `support` coordinates with magnitudes `10^{−j/4}` and alternating
    /// signs. `Ψ` comes from the linear `Φ(t) = 2 t Σ_{k≤support} ‖f^(k)‖`.
    pub fn l1_sparse(n: usize, support: usize, seed: u64) -> Result<Self> {
        if support == 0 || support > n {
            return Err(Error::Domain(format!("support size must lie in 1..={n}, got {support}")));
        }
        let op = perturbed_identity(n, seed);
        let x_dagger = DVector::from_fn(n, |k, _| {
            if k < support {
                let s = if k % 2 == 0 { 1.0 } else { -1.0 };
                s * 10f64.powf(-(k as f64) / 4.0)
            } else {
                0.0
            }
        });
        let norms = l1_source_norms(&op)?;
        let c = 2.0 * norms[..support].iter().sum::<f64>();
        Self::new(
            "l1-sparse",
            Model::Linear { op, x_dagger, penalty: Penalty::L1 },
            NoiseModel::gaussian(seed),
            PsiProfile::from_phi(IndexFunction::linear(c)?),
        )
    }

    /// `ℓ¹` penalty with `x†_k = k^{−ν}`, `Ψ` from the `ℓ¹` index function.
    pub fn l1_dense(n: usize, nu: f64, seed: u64) -> Result<Self> {
        if !(nu > 0.0) {
            return Err(Error::Domain(format!("decay exponent must be positive, got {nu}")));
        }
        let op = perturbed_identity(n, seed);
        let x_dagger = DVector::from_fn(n, |k, _| ((k + 1) as f64).powf(-nu));
        let norms = l1_source_norms(&op)?;
        let phi = l1_phi_function(x_dagger.as_slice(), &norms);
        Self::new(
            "l1-dense",
            Model::Linear { op, x_dagger, penalty: Penalty::L1 },
            NoiseModel::gaussian(seed),
            PsiProfile::from_phi(phi),
        )
    }

    /// `x† = 0` under the `ℓ¹` penalty; every index function is a valid `Φ`.
    pub fn singular_l1(n: usize, seed: u64) -> Self {
        Self::new(
            "singular",
            Model::Linear { op: perturbed_identity(n, seed), x_dagger: DVector::zeros(n), penalty: Penalty::L1 },
            NoiseModel::gaussian(seed),
            PsiProfile::from_phi(IndexFunction::linear(1.0).expect("positive slope")),
        )
        .expect("consistent dimensions")
    }

    /// `x† = 0` under the quadratic penalty.
    pub fn singular_quadratic(n: usize) -> Self {
        let lambda: Vec<f64> = (1..=n).map(|k| (k as f64).powi(-2)).collect();
        Self::new(
            "singular-quadratic",
            Model::Linear {
                op: LinearOperator::Diagonal(DiagonalOperator::from_eigenvalues(&lambda).expect("decreasing")),
                x_dagger: DVector::zeros(n),
                penalty: Penalty::Quadratic,
            },
            NoiseModel::gaussian(0),
            PsiProfile::from_phi(IndexFunction::linear(1.0).expect("positive slope")),
        )
        .expect("consistent dimensions")
    }

    /// Disc of radius `R`, `Ψ(α) = 4πα`.
    pub fn rof_ball(radius: f64) -> Result<Self> {
        Self::new(
            "rof-ball",
            Model::RofBall(RofBallGeometry::new(radius)?),
            NoiseModel::gaussian(0),
            PsiProfile::assumed(IndexFunction::linear(4.0 * std::f64::consts::PI)?),
        )
    }

    /// Unit square, `Ψ(α) = (4/R*)α + 2(4 − π)α ln(R*/α)`.
    pub fn rof_square(r_star: f64) -> Result<Self> {
        let psi = IndexFunction::log_linear(4.0 / r_star, 2.0 * (4.0 - std::f64::consts::PI), r_star)?;
        Self::new(
            "rof-square",
            Model::RofSquare(RofSquareGeometry::new(r_star)?),
            NoiseModel::gaussian(0),
            PsiProfile::assumed(psi),
        )
    }
}

fn closed_form_point(alpha: f64, q: crate::solvers::RofQuantities) -> NoiseFreePoint {
    NoiseFreePoint {
        alpha,
        defect_j: q.defect_j,
        defect_t: q.defect_j - q.residual_sq / (2.0 * alpha),
        residual_sq: q.residual_sq,
        bregman: q.bregman,
        minimizer: None,
        kkt_residual: 0.0,
        converged: true,
    }
}

fn closed_form_noisy(bregman: f64) -> NoisyPoint {
    NoisyPoint { bregman, minimizer: None, data: None, kkt_residual: 0.0, converged: true }
}

/// `I + 0.2 G/√n` with `G` standard Gaussian from `seed`.
pub(crate) fn perturbed_identity(n: usize, seed: u64) -> LinearOperator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 0.2 / (n as f64).sqrt();
    let m = DMatrix::from_fn(n, n, |i, j| {
        let g: f64 = rng.sample(StandardNormal);
        if i == j {
            1.0 + scale * g
        } else {
            scale * g
        }
    });
    LinearOperator::dense(m)
}
