//! Finite-dimensional forward operators and the noise model.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    matrix: DMatrix<f64>,
}

impl DenseOperator {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

/// Square diagonal operator `diag(σ)`; `A*A` has eigenvalues `λ_k = σ_k²`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalOperator {
    singular_values: DVector<f64>,
}

impl DiagonalOperator {
    /// Singular values must be positive and sorted in descending order.
    pub fn new(singular_values: Vec<f64>) -> Result<Self> {
        if singular_values.is_empty() {
            return Err(Error::Precondition("diagonal operator needs at least one value".into()));
        }
        if let Some(s) = singular_values.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(Error::Precondition(format!("singular value {s} is not positive")));
        }
        if singular_values.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::Precondition("singular values must be sorted descending".into()));
        }
        Ok(Self { singular_values: DVector::from_vec(singular_values) })
    }

    /// Builds the operator from the eigenvalues `λ_k` of `A*A`.
    pub fn from_eigenvalues(eigenvalues: &[f64]) -> Result<Self> {
        Self::new(eigenvalues.iter().map(|l| l.sqrt()).collect())
    }

    pub fn singular_values(&self) -> &DVector<f64> {
        &self.singular_values
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        self.singular_values.map(|s| s * s)
    }

    pub fn dim(&self) -> usize {
        self.singular_values.len()
    }
}

/// Bounded linear map `ℝⁿ → ℝᵐ` with its Euclidean adjoint.
#[derive(Clone, Debug, PartialEq)]
pub enum LinearOperator {
    Dense(DenseOperator),
    Diagonal(DiagonalOperator),
}

impl LinearOperator {
    pub fn identity(n: usize) -> Self {
        LinearOperator::Dense(DenseOperator::new(DMatrix::identity(n, n)))
    }

    pub fn dense(matrix: DMatrix<f64>) -> Self {
        LinearOperator::Dense(DenseOperator::new(matrix))
    }

    pub fn diagonal(singular_values: Vec<f64>) -> Result<Self> {
        Ok(LinearOperator::Diagonal(DiagonalOperator::new(singular_values)?))
    }

    pub fn rows(&self) -> usize {
        match self {
            LinearOperator::Dense(d) => d.matrix.nrows(),
            LinearOperator::Diagonal(d) => d.dim(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            LinearOperator::Dense(d) => d.matrix.ncols(),
            LinearOperator::Diagonal(d) => d.dim(),
        }
    }

    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.cols(), x.len())?;
        Ok(match self {
            LinearOperator::Dense(d) => &d.matrix * x,
            LinearOperator::Diagonal(d) => d.singular_values.component_mul(x),
        })
    }

    pub fn adjoint_apply(&self, w: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.rows(), w.len())?;
        Ok(match self {
            LinearOperator::Dense(d) => d.matrix.tr_mul(w),
            LinearOperator::Diagonal(d) => d.singular_values.component_mul(w),
        })
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            LinearOperator::Dense(d) => d.matrix.clone(),
            LinearOperator::Diagonal(d) => DMatrix::from_diagonal(&d.singular_values),
        }
    }

    /// `A*A` as a dense matrix.
    pub fn gram(&self) -> DMatrix<f64> {
        match self {
            LinearOperator::Dense(d) => d.matrix.tr_mul(&d.matrix),
            LinearOperator::Diagonal(d) => DMatrix::from_diagonal(&d.eigenvalues()),
        }
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Parses the plain-text matrix format: a header line `m n` followed by `m`
/// rows of `n` whitespace-separated decimals.
pub fn parse_matrix(text: &str) -> Result<DenseOperator> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines.next().ok_or_else(|| Error::Config("empty matrix file".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Config(format!("bad matrix header `{header}`"))))
        .collect::<Result<_>>()?;
    let [m, n] = dims[..] else {
        return Err(Error::Config(format!("matrix header must be `m n`, got `{header}`")));
    };
    let mut data = Vec::with_capacity(m * n);
    for i in 0..m {
        let line = lines.next().ok_or_else(|| Error::Config(format!("missing matrix row {}", i + 1)))?;
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Config(format!("bad number `{t}` in row {}", i + 1))))
            .collect::<Result<_>>()?;
        if row.len() != n {
            return Err(Error::Config(format!("row {} has {} entries, expected {n}", i + 1, row.len())));
        }
        data.extend(row);
    }
    if lines.next().is_some() {
        return Err(Error::Config(format!("matrix file has more than {m} rows")));
    }
    Ok(DenseOperator::new(DMatrix::from_row_slice(m, n, &data)))
}

pub fn read_matrix(path: &Path) -> Result<DenseOperator> {
    parse_matrix(&fs::read_to_string(path)?)
}

pub fn format_matrix(op: &DenseOperator) -> String {
    let m = op.matrix();
    let mut out = format!("{} {}\n", m.nrows(), m.ncols());
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub enum NoiseKind {
    /// Standard Gaussian direction rescaled to norm `δ`.
    GaussianScaled,
    /// Fixed unit direction with a seeded random sign.
    FixedDirection(DVector<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub seed: u64,
}

impl NoiseModel {
    pub fn gaussian(seed: u64) -> Self {
        Self { kind: NoiseKind::GaussianScaled, seed }
    }

    pub fn fixed_direction(direction: DVector<f64>, seed: u64) -> Self {
        Self { kind: NoiseKind::FixedDirection(direction), seed }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { kind: self.kind.clone(), seed }
    }

    /// Noise vector `Δ` of length `dim` with `‖Δ‖ = δ`.
    pub fn sample(&self, dim: usize, delta: f64) -> Result<DVector<f64>> {
        if !(delta >= 0.0) {
            return Err(Error::Domain(format!("noise level must be nonnegative, got {delta}")));
        }
        if delta == 0.0 {
            return Ok(DVector::zeros(dim));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let direction = match &self.kind {
            NoiseKind::GaussianScaled => loop {
                let g = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
                if g.norm() > 0.0 {
                    break g;
                }
            },
            NoiseKind::FixedDirection(d) => {
                check_dim(dim, d.len())?;
                if d.norm() == 0.0 {
                    return Err(Error::Precondition("noise direction is zero".into()));
                }
                if rng.random::<bool>() {
                    d.clone()
                } else {
                    -d
                }
            }
        };
        let norm = direction.norm();
        Ok(direction * (delta / norm))
    }
}

/// `y^δ = y + Δ` with `‖Δ‖ = δ`; `δ = 0` returns `y` unchanged.
pub fn make_noisy(y: &DVector<f64>, delta: f64, model: &NoiseModel) -> Result<DVector<f64>> {
    Ok(y + model.sample(y.len(), delta)?)
}

/// Mixes a base seed with grid indices (splitmix64 finalizer per word).
pub fn derive_seed(base: u64, indices: &[u64]) -> u64 {
    let mut h = splitmix(base);
    for &i in indices {
        h = splitmix(h ^ splitmix(i.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apply_examples() {
        let x = DVector::from_vec(vec![0.3, -1.2, 4.0]);
        assert_eq!(LinearOperator::identity(3).apply(&x).unwrap(), x);
        let d = LinearOperator::diagonal(vec![2.0, 1.0]).unwrap();
        let ones = DVector::from_element(2, 1.0);
        assert_eq!(d.apply(&ones).unwrap().as_slice(), &[2.0, 1.0]);
        assert_eq!(d.adjoint_apply(&ones).unwrap().as_slice(), &[2.0, 1.0]);
        let z = LinearOperator::dense(DMatrix::zeros(2, 3));
        assert_eq!(z.apply(&x).unwrap(), DVector::zeros(2));
    }

    #[test]
    fn dimension_mismatch() {
        let a = LinearOperator::dense(DMatrix::zeros(2, 3));
        let e = a.apply(&DVector::zeros(2)).unwrap_err();
        assert_eq!(e, Error::DimensionMismatch { expected: 3, found: 2 });
        assert!(a.adjoint_apply(&DVector::zeros(3)).is_err());
    }

    #[test]
    fn diagonal_invariants() {
        assert!(DiagonalOperator::new(vec![1.0, 0.0]).is_err());
        assert!(DiagonalOperator::new(vec![1.0, 2.0]).is_err());
        let d = DiagonalOperator::from_eigenvalues(&[4.0, 1.0]).unwrap();
        assert_eq!(d.singular_values().as_slice(), &[2.0, 1.0]);
    }

    #[test]
    fn noise_examples() {
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        let m = NoiseModel::gaussian(11);
        assert_eq!(make_noisy(&y, 0.0, &m).unwrap(), y);
        for seed in 0..20 {
            let yd = make_noisy(&y, 0.1, &m.with_seed(seed)).unwrap();
            assert!(((yd - &y).norm() - 0.1).abs() <= 1e-14);
        }
        assert_eq!(make_noisy(&y, 0.1, &m).unwrap(), make_noisy(&y, 0.1, &m).unwrap());
        assert_ne!(make_noisy(&y, 0.1, &m).unwrap(), make_noisy(&y, 0.1, &m.with_seed(12)).unwrap());
    }

    #[test]
    fn fixed_direction_noise() {
        let dir = DVector::from_vec(vec![3.0, 4.0]);
        let m = NoiseModel::fixed_direction(dir, 5);
        let d = m.sample(2, 0.5).unwrap();
        assert!((d.norm() - 0.5).abs() < 1e-15);
        assert!((d[0].abs() - 0.3).abs() < 1e-15 && (d[1].abs() - 0.4).abs() < 1e-15);
        assert!(m.sample(3, 0.5).is_err());
    }

    #[test]
    fn matrix_file_parse() {
        let op = parse_matrix("2 3\n1 2 3\n4.5 -1e-2 0\n").unwrap();
        assert_eq!(op.matrix()[(1, 0)], 4.5);
        assert_eq!(op.matrix()[(1, 1)], -0.01);
        let again = parse_matrix(&format_matrix(&op)).unwrap();
        assert_eq!(again, op);
        assert!(parse_matrix("2 2\n1 2\n").is_err());
        assert!(parse_matrix("2 2\n1 2\n3\n").is_err());
        assert!(parse_matrix("x 2\n").is_err());
    }

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(7, &[0, 0, 0]);
        assert_eq!(a, derive_seed(7, &[0, 0, 0]));
        assert_ne!(a, derive_seed(7, &[0, 0, 1]));
        assert_ne!(a, derive_seed(7, &[1, 0, 0]));
        assert_ne!(a, derive_seed(8, &[0, 0, 0]));
    }
}
