//! Acceptance suite: one line per criterion.
//!
//! Runs without the libtest harness so that every line is printed. The
//! process fails if any criterion outside `KNOWN_FAILURES` fails, or if a
//! known failure unexpectedly passes.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use breglab::bregman::three_point_identity_check;
use breglab::cli::{run, RunOptions};
use breglab::harness::{
    check_dichotomy, check_equivalence, check_error_splitting, check_identities, check_residual_bound, fit_loglog,
    higher_order_probe, log_grid, singular_bregman_check, AlphaRule, RegularizationInstance,
};
use breglab::indexfn::{
    calibrate_alpha, fenchel_conjugate, psi_from_phi, rate_alpha_from_subgradient, ConvexRepresentation,
    IndexFunction,
};
use breglab::linops::derive_seed;
use breglab::penalties::Penalty;
use breglab::solvers::SolverSettings;

/// `Ψ` from `Φ(t) = t²` is `0` for `α ≤ ½` and `+∞` for `α > ½`; no positive
/// constant exists, so the constant-profile claim for `μ = 2` cannot hold.
const KNOWN_FAILURES: &[usize] = &[6];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn within_time(start: Instant, limit: Duration, o: Outcome) -> Outcome {
    let elapsed = start.elapsed();
    let ok = elapsed < limit;
    outcome(o.passed && ok, format!("{} [{:.2?}, limit {:?}]", o.detail, elapsed, limit))
}

fn l1_settings() -> SolverSettings {
    SolverSettings { tol: 1e-10, max_iter: 200_000 }
}

fn l1_sparse() -> RegularizationInstance {
    RegularizationInstance::l1_sparse(40, 25, 7).unwrap().with_settings(l1_settings())
}

fn l1_dense() -> RegularizationInstance {
    RegularizationInstance::l1_dense(40, 2.0, 7).unwrap().with_settings(l1_settings())
}

fn shipped_nonsingular() -> Vec<RegularizationInstance> {
    vec![
        RegularizationInstance::quadratic_scalar(),
        RegularizationInstance::quadratic_decay(50).unwrap(),
        RegularizationInstance::quadratic_benchmark(64).unwrap(),
        l1_sparse(),
        l1_dense(),
        RegularizationInstance::rof_ball(0.5).unwrap(),
        RegularizationInstance::rof_ball(1.0).unwrap(),
        RegularizationInstance::rof_ball(2.0).unwrap(),
        RegularizationInstance::rof_square(1.0).unwrap(),
    ]
}

fn shipped_singular() -> Vec<RegularizationInstance> {
    vec![
        RegularizationInstance::singular_l1(20, 7).with_settings(l1_settings()),
        RegularizationInstance::singular_quadratic(20),
    ]
}

fn rof_ball_closed_forms() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for r in [0.5, 1.0, 2.0] {
        let inst = RegularizationInstance::rof_ball(r).unwrap();
        for alpha in log_grid(1e-4, r / 4.0, 12) {
            let p = inst.noise_free(alpha).unwrap();
            worst = worst
                .max((p.defect_j - 4.0 * PI * alpha).abs())
                .max((p.residual_sq - 4.0 * PI * alpha * alpha).abs())
                .max(p.bregman.abs());
        }
    }
    within_time(start, Duration::from_secs(1), outcome(worst <= 1e-10, format!("max deviation {worst:.3e}")))
}

fn rof_square_formulas() -> Outcome {
    let start = Instant::now();
    let inst = RegularizationInstance::rof_square(1.0).unwrap();
    let d = inst.noise_free(0.1).unwrap().defect_j;
    let expected = 0.4 + 2.0 * (4.0 - PI) * 0.1 * 10f64.ln();
    let gap = (d - expected).abs();
    let alpha: f64 = 1e-6;
    let l = (1.0 / alpha).ln();
    let ratio = inst.noise_free(alpha).unwrap().defect_j / (alpha * l);
    let target = 2.0 * (4.0 - PI) + 4.0 / l;
    let rel = (ratio - target).abs() / target;
    within_time(
        start,
        Duration::from_secs(1),
        outcome(gap <= 1e-12 && rel <= 0.1, format!("|defect_J(0.1) - closed form| = {gap:.3e}; ratio at 1e-6 off by {rel:.3e}")),
    )
}

fn equivalence_factor() -> Outcome {
    let grid = log_grid(1e-4, 1e-1, 12);
    let mut lines = Vec::new();
    let mut ok = true;
    for inst in [RegularizationInstance::quadratic_decay(50).unwrap(), l1_sparse(), l1_dense()] {
        let r = check_equivalence(&inst, &grid).unwrap();
        ok &= r.passed() && r.nonconverged == 0;
        lines.push(format!("{} max excess {:.2e}", inst.label(), r.max_excess));
    }
    let scalar = RegularizationInstance::quadratic_scalar().noise_free(1.0).unwrap();
    let alpha = 1.0f64;
    let dj = 0.5 * (1.0 - (1.0 / (1.0 + alpha)).powi(2));
    let dt = alpha / (2.0 * (1.0 + alpha));
    let hand = (scalar.defect_j - dj).abs().max((scalar.defect_t - dt).abs());
    ok &= hand <= 1e-12 && (dj - 0.375).abs() < 1e-15 && (dt - 0.25).abs() < 1e-15;
    lines.push(format!("hand values off by {hand:.1e}"));
    outcome(ok, lines.join("; "))
}

fn residual_bound() -> Outcome {
    let grid = log_grid(1e-4, 1e-1, 12);
    let mut ok = true;
    let mut worst = f64::NEG_INFINITY;
    let mut count = 0;
    for inst in shipped_nonsingular().into_iter().chain(shipped_singular()) {
        let r = check_residual_bound(&inst, &grid).unwrap();
        ok &= r.passed() && r.nonconverged == 0;
        worst = worst.max(r.max_excess);
        count += 1;
    }
    outcome(ok, format!("{count} instances, max excess {worst:.3e}"))
}

fn error_splitting() -> Outcome {
    let start = Instant::now();
    let alphas = log_grid(1e-4, 1e-1, 10);
    let deltas = log_grid(1e-4, 1e-1, 10);
    let mut ok = true;
    let mut parts = Vec::new();
    let quad = RegularizationInstance::quadratic_decay(50).unwrap();
    let ball = RegularizationInstance::rof_ball(1.0).unwrap();
    let sparse = l1_sparse();
    for inst in [&quad, &ball, &sparse] {
        let (r, _) = check_error_splitting(inst, inst.psi(), &alphas, &deltas, 5, 2024).unwrap();
        ok &= r.passed() && r.points == 500 && r.nonconverged == 0;
        parts.push(format!("{} {}/{}", inst.label(), r.violations, r.points));
    }
    // ROF ball at α = δ: bound (4π + ½)δ
    let mut ball_ok = true;
    for (j, &d) in deltas.iter().enumerate() {
        for rep in 0..5 {
            let b = ball.noisy(d, d, derive_seed(2024, &[j as u64, rep])).unwrap().bregman;
            ball_ok &= b <= (4.0 * PI + 0.5) * d + 1e-12;
        }
    }
    ok &= ball_ok;
    parts.push(format!("ball at alpha = delta within (4 pi + 1/2) delta: {ball_ok}"));
    within_time(start, Duration::from_secs(60), outcome(ok, format!("violations {}", parts.join(", "))))
}

fn monomial_psi() -> Outcome {
    let alphas = log_grid(1e-3, 1.0, 16);
    let mut parts = Vec::new();
    let mut ok = true;
    for mu in [0.5, 1.0, 1.5] {
        let phi = IndexFunction::monomial(mu).unwrap();
        let worst = alphas
            .iter()
            .map(|&a| {
                let closed = (2.0 - mu) / 2.0 * (mu * a).powf(mu / (2.0 - mu));
                (psi_from_phi(&phi, a).unwrap() - closed).abs() / closed
            })
            .fold(0.0, f64::max);
        ok &= worst <= 1e-8;
        parts.push(format!("mu={mu}: rel {worst:.1e}"));
    }
    let cubic = IndexFunction::monomial(3.0).unwrap();
    let diverges = alphas.iter().all(|&a| psi_from_phi(&cubic, a).unwrap() == f64::INFINITY);
    ok &= diverges;
    parts.push(format!("mu=3 infinite: {diverges}"));
    let square = IndexFunction::monomial(2.0).unwrap();
    let values: Vec<f64> = alphas.iter().map(|&a| psi_from_phi(&square, a).unwrap()).collect();
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
    let constant = lo > 0.0 && hi.is_finite() && hi - lo < 1e-6;
    ok &= constant;
    parts.push(format!("mu=2 positive constant: {constant} (range [{lo:e}, {hi:e}])"));
    outcome(ok, parts.join("; "))
}

fn rate_fits() -> Outcome {
    let start = Instant::now();
    let deltas = log_grid(1e-4, 1e-1, 10);
    let sparse = l1_sparse();
    let fit = breglab::harness::rate_experiment(&sparse, &deltas, &AlphaRule::Proportional(1.0), 5, 11).unwrap();
    let l1_ok = (fit.slope - 1.0).abs() <= 0.15;

    let bench = RegularizationInstance::quadratic_benchmark(64).unwrap();
    let x_dagger = bench.x_dagger().unwrap().clone();
    let mut errors = Vec::new();
    for (j, &d) in deltas.iter().enumerate() {
        let alpha = calibrate_alpha(bench.psi(), d, 1e-12).unwrap();
        let mut sum = 0.0;
        for rep in 0..5u64 {
            let p = bench.noisy(alpha, d, derive_seed(11, &[j as u64, rep])).unwrap();
            sum += (p.minimizer.unwrap() - &x_dagger).norm_squared();
        }
        errors.push(sum / 5.0);
    }
    let qfit = fit_loglog(&deltas, &errors).unwrap();
    let q_ok = (qfit.slope - 1.0).abs() <= 0.15;
    within_time(
        start,
        Duration::from_secs(120),
        outcome(l1_ok && q_ok, format!("l1-sparse {fit}; quadratic benchmark {qfit}")),
    )
}

fn subgradient_rate() -> Outcome {
    let mut worst: f64 = 0.0;
    for mu in [0.5, 1.0] {
        let phi = IndexFunction::monomial(mu).unwrap();
        for delta in [1e-3, 1e-2, 1e-1] {
            let alpha = rate_alpha_from_subgradient(&phi, delta).unwrap();
            let total = delta * delta / (2.0 * alpha) + psi_from_phi(&phi, alpha).unwrap();
            let target = delta.powf(mu);
            worst = worst.max((total - target).abs() / target);
        }
    }
    outcome(worst <= 1e-6, format!("max relative gap {worst:.3e}"))
}

fn appendix_a() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut tp: f64 = 0.0;
    for _ in 0..1000 {
        let mut v = || DVector::from_fn(8, |_, _| rng.random_range(-1.0..1.0));
        let (u, w, z) = (v(), v(), v());
        tp = tp.max(three_point_identity_check(Penalty::Quadratic, &w, &w, &z, &z, &u));
    }
    let alphas = log_grid(1e-4, 1e-1, 8);
    let deltas = log_grid(1e-4, 1e-1, 8);
    let q = check_identities(&RegularizationInstance::quadratic_decay(50).unwrap(), &alphas, &deltas, 3, 5).unwrap();
    let l = check_identities(&l1_sparse(), &alphas, &deltas, 3, 5).unwrap();
    let ok = tp <= 1e-12
        && q.max_identity_mismatch <= 1e-12
        && l.max_identity_mismatch <= 1e-6
        && q.max_exact_mismatch <= 1e-12
        && l.max_exact_mismatch <= 1e-8
        && q.min_noisy_slack >= -1e-10
        && l.min_noisy_slack >= -1e-10;
    outcome(
        ok,
        format!(
            "three-point {tp:.1e}; identities quadratic {:.1e}, l1 {:.1e}; exact-distance identity {:.1e}/{:.1e}; noisy bound min slack {:.1e}/{:.1e}",
            q.max_identity_mismatch, l.max_identity_mismatch, q.max_exact_mismatch, l.max_exact_mismatch, q.min_noisy_slack, l.min_noisy_slack
        ),
    )
}

fn appendix_b() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let family: Vec<IndexFunction> = [1.5, 2.0, 3.0].iter().map(|&p| IndexFunction::monomial(p).unwrap()).collect();
    let mut fy: f64 = f64::NEG_INFINITY;
    for f in &family {
        for _ in 0..10_000 {
            let s: f64 = 10f64.powf(rng.random_range(-3.0..1.0));
            let t: f64 = 10f64.powf(rng.random_range(-3.0..1.0));
            let gap = s * t - f.eval(s).unwrap() - fenchel_conjugate(f, t).unwrap();
            fy = fy.max(gap / (1.0 + s * t));
        }
    }
    let mut rep: f64 = 0.0;
    let mut quotient: f64 = f64::NEG_INFINITY;
    for c in [0.5, 1.0, 2.0] {
        let f = IndexFunction::composite("c t^2", move |t| c * t * t, (1e-2, 1.0));
        let r = ConvexRepresentation::new(f.clone()).unwrap();
        for t in log_grid(1e-3, 10.0, 25) {
            let ft = c * t * t;
            rep = rep.max((r.reconstruct(t).unwrap() - ft).abs() / ft);
            let excess = fenchel_conjugate(&f, t).unwrap() / t - r.phi_squared(t).unwrap();
            quotient = quotient.max(excess);
        }
    }
    outcome(
        fy <= 1e-12 && rep <= 1e-8 && quotient <= 1e-8,
        format!("Fenchel-Young max violation {fy:.1e}; representation rel {rep:.1e}; quotient excess {quotient:.1e}"),
    )
}

fn singular_case() -> Outcome {
    let alphas = log_grid(1e-4, 1e-1, 10);
    let deltas = log_grid(1e-4, 1e-1, 10);
    let sing = RegularizationInstance::singular_l1(20, 7).with_settings(l1_settings());
    let r = singular_bregman_check(&sing, &alphas, &deltas, 3, 17).unwrap();
    let exact = singular_bregman_check(&RegularizationInstance::singular_quadratic(20), &alphas, &[0.0], 1, 17).unwrap();
    let mut ok = r.passed() && exact.passed() && r.nonconverged == 0;
    let grid = log_grid(1e-4, 1e-1, 12);
    let mut failing = Vec::new();
    for inst in shipped_nonsingular().into_iter().chain(shipped_singular()) {
        let d = check_dichotomy(&inst, &grid).unwrap();
        if !d.passed {
            failing.push(inst.label().to_string());
        }
    }
    ok &= failing.is_empty();
    outcome(
        ok,
        format!("singular max bregman {:.1e} (noise-free quadratic {:.1e}); dichotomy failures {failing:?}", r.max_excess, exact.max_excess),
    )
}

fn higher_order() -> Outcome {
    let alphas = log_grid(1e-4, 1e-1, 10);
    let deltas = log_grid(1e-4, 1e-1, 10);
    let mut ok = true;
    let mut parts = Vec::new();
    for inst in [RegularizationInstance::quadratic_decay(50).unwrap(), RegularizationInstance::quadratic_benchmark(64).unwrap()] {
        let h = higher_order_probe(&inst, &alphas, &deltas, 5, 3).unwrap();
        let ineq = h.inequality.as_ref().unwrap();
        ok &= h.identity_residual <= 1e-12 && h.filter_residual.unwrap() <= 1e-12 && ineq.passed();
        parts.push(format!("{} identity {:.1e}, inequality {}/{}", h.label, h.identity_residual, ineq.violations, ineq.points));
    }
    outcome(ok, parts.join("; "))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("quadratic.cfg");
    std::fs::write(&cfg, "experiment = quadratic\nn = 20\nalpha_points = 5\ndelta_points = 4\nreplicates = 3\n").unwrap();
    let mut outputs = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("run{i}.csv"));
        let o = run(&cfg, &RunOptions { seed: Some(7), out: Some(out.clone()), ..Default::default() });
        outputs.push((o.exit_code, std::fs::read(&out).unwrap()));
    }
    let same = outputs[0].1 == outputs[1].1 && !outputs[0].1.is_empty();
    outcome(same && outputs[0].0 == 0, format!("{} bytes, identical: {same}", outputs[0].1.len()))
}

type Criterion = (usize, &'static str, fn() -> Outcome);

fn main() {
    let criteria: Vec<Criterion> = vec![
        (1, "ROF ball closed forms", rof_ball_closed_forms),
        (2, "ROF rounded-square formulas", rof_square_formulas),
        (3, "penalty defect at most twice the functional defect", equivalence_factor),
        (4, "residual bound", residual_bound),
        (5, "error-splitting bound", error_splitting),
        (6, "monomial psi", monomial_psi),
        (7, "rate fits", rate_fits),
        (8, "rate from the subgradient choice", subgradient_rate),
        (9, "residual identities and distance bounds", appendix_a),
        (10, "Fenchel-Young and convex representation", appendix_b),
        (11, "singular case and dichotomy", singular_case),
        (12, "noise-free identity and two-constant inequality", higher_order),
        (13, "determinism", determinism),
    ];
    let mut unexpected = Vec::new();
    for (id, name, f) in criteria {
        let o = f();
        let status = if o.passed { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {status}  {name}: {}", o.detail);
        let known = KNOWN_FAILURES.contains(&id);
        if o.passed == known {
            unexpected.push(id);
        }
    }
    if !KNOWN_FAILURES.is_empty() {
        println!("known failures (analysed, not attainable as stated): {KNOWN_FAILURES:?}");
    }
    if unexpected.is_empty() {
        println!("acceptance: all outcomes as expected");
    } else {
        println!("acceptance: unexpected outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
