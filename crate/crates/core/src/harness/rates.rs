use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::indexfn::{calibrate_alpha, PsiProfile};
use crate::linops::derive_seed;

use super::instance::RegularizationInstance;
use super::with_pool;

/// A priori parameter choice `δ ↦ α`.
#[derive(Clone, Debug)]
pub enum AlphaRule {
    /// `α = c δ`
    Proportional(f64),
    /// `α = Θ⁻¹(δ/√2)` for the given profile.
    Calibrated(PsiProfile),
    /// `α = c δ^p`
    FixedPower { c: f64, p: f64 },
}

impl AlphaRule {
    pub fn alpha(&self, delta: f64) -> Result<f64> {
        if !(delta > 0.0) {
            return Err(Error::Domain(format!("delta must be positive, got {delta}")));
        }
        match self {
            AlphaRule::Proportional(c) => Ok(c * delta),
            AlphaRule::Calibrated(profile) => calibrate_alpha(profile, delta, 1e-12),
            AlphaRule::FixedPower { c, p } => Ok(c * delta.powf(*p)),
        }
    }
}

/// Least-squares line `ln e = intercept + slope · ln δ`.
#[derive(Clone, Debug, PartialEq)]
pub struct RateFit {
    pub deltas: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log coordinates.
    pub residual: f64,
}

impl fmt::Display for RateFit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "slope = {:.4} ± {:.4} ({} points)", self.slope, self.residual, self.deltas.len())
    }
}

/// Fits on the points with positive finite `δ` and error; at least four
/// are required.
pub fn fit_loglog(deltas: &[f64], errors: &[f64]) -> Result<RateFit> {
    if deltas.len() != errors.len() {
        return Err(Error::DimensionMismatch { expected: deltas.len(), found: errors.len() });
    }
    let (d, e): (Vec<f64>, Vec<f64>) = deltas
        .iter()
        .zip(errors)
        .filter(|(d, e)| **d > 0.0 && **e > 0.0 && d.is_finite() && e.is_finite())
        .map(|(d, e)| (*d, *e))
        .unzip();
    if d.len() < 4 {
        return Err(Error::DegenerateFit { valid: d.len() });
    }
    let n = d.len() as f64;
    let xs: Vec<f64> = d.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit { valid: 1 });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum::<f64>() / n).sqrt();
    Ok(RateFit { deltas: d, errors: e, slope, intercept, residual })
}

/// Mean noisy Bregman distance over replicates at `α = rule(δ)`, fitted
/// against `δ`. Replicate `r` at `δ_j` uses `derive_seed(seed, [j, r])`.
pub fn rate_experiment(
    inst: &RegularizationInstance,
    deltas: &[f64],
    rule: &AlphaRule,
    replicates: usize,
    seed: u64,
) -> Result<RateFit> {
    if replicates == 0 {
        return Err(Error::Precondition("at least one replicate required".into()));
    }
    if deltas.len() < 4 {
        return Err(Error::DegenerateFit { valid: deltas.len() });
    }
    let alphas: Vec<f64> = deltas.iter().map(|&d| rule.alpha(d)).collect::<Result<_>>()?;
    let work: Vec<(usize, usize)> = (0..deltas.len()).flat_map(|j| (0..replicates).map(move |r| (j, r))).collect();
    let values: Vec<f64> = with_pool(|| {
        work.par_iter()
            .map(|&(j, r)| {
                let p = inst.noisy(alphas[j], deltas[j], derive_seed(seed, &[j as u64, r as u64]))?;
                if !p.converged {
                    return Err(Error::NotConverged(format!("{} at delta={}", inst.label(), deltas[j])));
                }
                Ok(p.bregman)
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    let errors: Vec<f64> =
        values.chunks(replicates).map(|c| c.iter().sum::<f64>() / replicates as f64).collect();
    fit_loglog(deltas, &errors)
}
