//! Experiment engine: regularization instances, `(α, δ)` sweeps, the
//! defect/splitting checks, and log–log rate fits.
//!
//! Every grid point is an independent work item. Noisy data for the cell
//! `(α_i, δ_j, replicate r)` is drawn from the seed
//! `derive_seed(base, [i, j, r])`, so results do not depend on scheduling.
//! The worker count is capped by `BREGLAB_THREADS` (unset or `0` = all cores).

mod checks;
mod instance;
mod rates;

pub use checks::{
    check_dichotomy, check_equivalence, check_error_splitting, check_identities, check_residual_bound, check_vi,
    defect_penalty, defect_tikhonov, higher_order_probe, l1_phi, l1_phi_function, l1_source_norms,
    singular_bregman_check, sweep, CheckReport, DichotomyReport, HigherOrderReport, IdentityReport,
};
pub use instance::{Model, NoiseFreePoint, NoisyPoint, RegularizationInstance};
pub use rates::{fit_loglog, rate_experiment, AlphaRule, RateFit};

use rayon::ThreadPoolBuilder;

/// One row of a sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExperimentRecord {
    pub alpha: f64,
    pub delta: f64,
    pub seed: u64,
    /// `J(x†) − J(x_α)`
    pub defect_j: f64,
    /// `(T_α(x†; y) − T_α(x_α; y))/α`
    pub defect_t: f64,
    /// `‖A x_α − y‖²`
    pub residual_sq: f64,
    /// `B_{ξ_α^δ}(x_α^δ; x†)`
    pub bregman_noisy: f64,
    pub psi: f64,
    /// `δ²/(2α) + Ψ(α)`
    pub bound: f64,
    /// `bregman_noisy − bound`; positive values violate the splitting bound.
    pub violation: f64,
    pub converged: bool,
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
        }
    }
}

/// Worker count from `BREGLAB_THREADS`; `0` means automatic.
pub fn configured_threads() -> usize {
    std::env::var("BREGLAB_THREADS").ok().and_then(|s| s.trim().parse().ok()).unwrap_or(0)
}

/// Runs `f` inside a pool sized by [`configured_threads`].
pub fn with_pool<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    match ThreadPoolBuilder::new().num_threads(configured_threads()).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints() {
        let g = log_grid(1e-4, 1.0, 5);
        assert_eq!(g.len(), 5);
        assert!((g[0] - 1e-4).abs() < 1e-18);
        assert!((g[4] - 1.0).abs() < 1e-14);
        assert!((g[1] - 1e-3).abs() < 1e-15);
        assert_eq!(log_grid(0.5, 2.0, 1), vec![0.5]);
        assert!(log_grid(0.5, 2.0, 0).is_empty());
    }
}
