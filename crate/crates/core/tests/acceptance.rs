//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_UNATTAINABLE` are computed at their stated
//! tolerance and reported, but do not fail the run; the reason is given
//! next to the constant. A listed criterion that passes is an error.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;
use std::time::{Duration, Instant};

use kslab_core::flow::*;
use kslab_core::profiles::{u0_exact, ProfileSettings};
use kslab_core::spectrum::*;
use kslab_core::transforms::build_localized_modes;
use kslab_core::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Criterion 8 asserts `||r f||_rho <= ||f||_{H^1_rho}` with constant 1,
/// which is false in the Gaussian-weighted space: for the weight
/// `e^{-r^2/4}` in five dimensions, `f = 1` gives `||r f||^2 = 10 ||f||^2`.
const KNOWN_UNATTAINABLE: &[usize] = &[8];

struct Outcome {
    id: usize,
    pass: bool,
    detail: String,
    elapsed: Duration,
}

fn timed(id: usize, budget: Duration, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (ok, detail) = f();
    let elapsed = start.elapsed();
    let pass = ok && elapsed <= budget;
    let detail = if elapsed > budget { format!("{detail}; over the {budget:?} budget") } else { detail };
    Outcome { id, pass, detail, elapsed }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn grid0() -> Arc<RadialGrid> {
    make_grid(4001, 30.0, 1.0).unwrap()
}

fn grid1() -> Arc<RadialGrid> {
    make_grid(6001, 30.0, 2.0).unwrap()
}

fn sup_diff(a: &RadialField, b: &RadialField) -> f64 {
    a.values().iter().zip(b.values()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn c1_exact_profile() -> (bool, String) {
    let r = stationary_residual(phi0_exact(&grid0()).phi()).unwrap().norm_inf();
    (r <= 1e-8, format!("residual sup {r:.3e}"))
}

fn c2_partial_mass() -> (bool, String) {
    let g = grid0();
    let phi = phi0_exact(&g);
    let u0 = RadialField::from_fn(&g, u0_exact);
    let e1 = sup_diff(&partial_mass(&u0).unwrap(), phi.phi());
    let e2 = sup_diff(&density_from_mass(phi.phi()).unwrap(), &u0);
    (e1 <= 1e-8 && e2 <= 1e-6, format!("mass error {e1:.3e}, density error {e2:.3e}"))
}

fn c3_shooting(phi1: &mut Option<Profile>) -> (bool, String) {
    let s = ProfileSettings::default();
    let p0 = find_profile(0, (0.5, 2.0), 1e-10, &grid0(), &s).unwrap();
    let p1 = find_profile(1, (100.0, 1000.0), 1e-10, &grid1(), &s).unwrap();
    let positive = p1.phi().values().iter().all(|v| *v > 0.0);
    let ok = (p0.a() - 1.0).abs() <= 1e-6
        && p1.residual_sup() <= 1e-6
        && positive
        && p1.tail_c() > 0.0
        && p1.tail_c() <= 2.0;
    let detail = format!(
        "a0 = {:.12}, a1 = {:.10}, residual {:.2e}, tail_c {:.6}, positive {positive}",
        p0.a(),
        p1.a(),
        p1.residual_sup(),
        p1.tail_c()
    );
    *phi1 = Some(p1);
    (ok, detail)
}

fn c4_ground_spectrum() -> (bool, String) {
    let p = phi0_exact(&grid0());
    let m = build_measure(&p, p.grid()).unwrap();
    let rep = eigen_solve_refined(&p, 3).unwrap();
    let ex = rep.extrapolated.as_ref().unwrap()[0];
    let lp = RadialField::from_fn(p.grid(), |r| 8.0 / ((2.0 + r * r) * (2.0 + r * r)));
    let lp = lp.scaled(1.0 / norm(&lp, &m).unwrap());
    let diff = norm(&rep.pairs[0].eigenfunction.axpy(-1.0, &lp).unwrap(), &m).unwrap();
    let raw = rep.eigenvalues[0];
    let ok = (raw + 1.0).abs() <= 1e-3 && (ex + 1.0).abs() <= 1e-5 && diff <= 1e-4 && rep.nonpositive_count == 1;
    (ok, format!("lambda {raw:.8}, extrapolated {ex:.10}, eigenfunction error {diff:.2e}, N0 = {}", rep.nonpositive_count))
}

fn c5_excited_spectrum(p1: &Profile) -> (bool, String) {
    let m = build_measure(p1, p1.grid()).unwrap();
    let rep = eigen_solve(&assemble(p1, &m).unwrap(), 4).unwrap();
    let near = rep.nonpositive().iter().any(|p| (p.eigenvalue + 1.0).abs() <= 1e-3);
    let vals: Vec<String> = rep.nonpositive().iter().map(|p| format!("{:.6}", p.eigenvalue)).collect();
    (
        rep.nonpositive_count == 2 && near && rep.complete,
        format!("N1 = {}, nonpositive eigenvalues [{}]", rep.nonpositive_count, vals.join(", ")),
    )
}

fn c6_free_operator() -> (bool, String) {
    let g = grid0();
    let vals = free_eigenvalues_refined(&g, 3).unwrap();
    let m = WeightedMeasure::gaussian(&g);
    let rep = eigen_solve(&assemble_free(&g), 3).unwrap();
    let polys: [fn(f64) -> f64; 3] = [|_| 1.0, |r| r * r - 10.0, |r| r.powi(4) - 28.0 * r * r + 140.0];
    let mut worst_overlap = 0.0f64;
    for (pair, p) in rep.pairs.iter().zip(polys) {
        let q = RadialField::from_fn(&g, p);
        let c = inner_product(&pair.eigenfunction, &q, &m).unwrap() / norm(&q, &m).unwrap();
        worst_overlap = worst_overlap.max((c.abs() - 1.0).abs());
    }
    let worst_val = vals.iter().enumerate().fold(0.0f64, |w, (k, v)| w.max((v - (k + 1) as f64).abs()));
    (
        worst_val <= 1e-6 && worst_overlap <= 1e-6,
        format!("eigenvalue error {worst_val:.2e}, eigenfunction overlap defect {worst_overlap:.2e}"),
    )
}

fn c7_quadrature() -> (bool, String) {
    let g = grid0();
    let f = RadialField::from_fn(&g, |r| (-r * r / 4.0).exp());
    let want = 32.0 * PI.powf(2.5);
    let rel = (kslab_core::measure::integral_5d(&f) / want - 1.0).abs();
    (rel <= 1e-8, format!("relative error {rel:.2e}"))
}

fn c8_coercivity() -> (bool, String) {
    let g = grid0();
    let p = phi0_exact(&g);
    let m = build_measure(&p, &g).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut failures = 0;
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let f = random_smooth_field(&g, &mut rng);
        let (lhs, rhs) = coercivity_check(&f, &m).unwrap();
        if lhs > rhs + 1e-10 {
            failures += 1;
        }
        worst = worst.max(lhs / rhs);
    }
    (failures == 0, format!("{failures}/1000 fields violate the bound, worst ratio {worst:.3}"))
}

fn c9_stability() -> (bool, String) {
    let ctx = FlowContext::new(&phi0_exact(&grid0())).unwrap();
    let points: Vec<f64> = (0..8).map(|k| 0.05 * 10f64.powf(k as f64 / 7.0)).collect();
    let params = FlowParams { ustar_points: points, ..FlowParams::default() };
    let v0 = RadialField::from_fn(ctx.grid(), |r| 1e-2 * (-r * r).exp());
    let init = initial_state_from_deviation(&ctx, &v0, &[], &params).unwrap();
    let run = evolve(&init, &ctx, &params).unwrap();
    if let Some(e) = run.exit {
        return (false, format!("left the trapping region at s = {:.3} via {:?}", e.s, e.bound));
    }
    let rep = blowup_extract(&run, &ctx, &BlowupParams::default()).unwrap();
    let product = (rep.type_one_product / rep.profile_sup - 1.0).abs();
    let ok = rep.lambda_spread <= 0.01
        && (rep.rate_fit - 0.5).abs() <= 0.02
        && (rep.sup_growth + 1.0).abs() <= 0.05
        && product <= 0.05;
    (
        ok,
        format!(
            "lambda e^(s/2) spread {:.2e}, rate {:.6}, sup growth {:.6}, (T-t)|u| = {:.5} vs {:.5}, u* slope {:.4}",
            rep.lambda_spread,
            rep.rate_fit,
            rep.sup_growth,
            rep.type_one_product,
            rep.profile_sup,
            rep.u_star_slope.unwrap_or(f64::NAN)
        ),
    )
}

fn c10_codimension_one(p1: &Profile) -> (bool, String) {
    let ctx = FlowContext::new(p1).unwrap();
    let params = FlowParams::default();
    let zero = RadialField::zeros(ctx.grid());
    let shot = match shoot_stable_manifold(&ctx, &zero, (-1e-3, 1e-3), 1e-8, &params) {
        Ok(s) => s,
        Err(e) => return (false, format!("bisection failed: {e}")),
    };
    let ends = (shot.shots[0].side, shot.shots[1].side);
    let opposite = shot.shots[0].exited && shot.shots[1].exited && ends.0 * ends.1 < 0.0;
    let bounded = shot
        .trapped
        .samples
        .iter()
        .map(|s| s.a.iter().map(|a| a * a).sum::<f64>() * (2.0 * params.mu * s.s).exp())
        .fold(0.0f64, f64::max);
    let ok = opposite && shot.trapped_duration >= 10.0 && shot.trapped.exit.is_none() && bounded.is_finite() && bounded < 1.0;
    (
        ok,
        format!(
            "endpoint sides {:+} / {:+}, a2* = {:.3e}, trapped for {:.2}, max sum a^2 e^(2 mu s) {bounded:.2e}, {} shots",
            ends.0,
            ends.1,
            shot.a2_star,
            shot.trapped_duration,
            shot.shots.len()
        ),
    )
}

fn c11_tail() -> (bool, String) {
    let p = phi0_exact(&grid0());
    let m = build_measure(&p, p.grid()).unwrap();
    let rep = eigen_solve(&assemble(&p, &m).unwrap(), 1).unwrap();
    let t = tail_exponent_check(&rep.pairs[0], (8.0, 16.0)).unwrap();
    ((t.slope + 4.0).abs() <= 0.1, format!("slope {:.5}", t.slope))
}

fn c12_lipschitz() -> (bool, String) {
    let ctx = FlowContext::new(&phi0_exact(&grid0())).unwrap();
    let modes = build_localized_modes(&[], ctx.measure(), 20.0).unwrap();
    let s0 = FlowParams::default().s0;
    let base = RadialField::from_fn(ctx.grid(), |r| 1e-2 * (-r * r).exp());
    // A density change of sup 1e-3 in original variables is e^{-s0} 1e-3
    // at the initial scale e^{-s0/2}.
    let du = 1e-3;
    let bumped = base.axpy(du * (-s0).exp(), &RadialField::from_fn(ctx.grid(), |r| (-r * r / 4.0).exp())).unwrap();
    let time = |u: &RadialField, ds: f64| -> Option<f64> {
        let params = FlowParams { ds, ..FlowParams::default() };
        let (init, _) = build_initial_state(&ctx, &modes, u, &[], &params).ok()?;
        let run = evolve(&init, &ctx, &params).ok()?;
        if run.exit.is_some() {
            return None;
        }
        Some(blowup_extract(&run, &ctx, &BlowupParams::default()).ok()?.blowup_time)
    };
    let mut ratios = Vec::new();
    for ds in [1e-3, 5e-4] {
        match (time(&base, ds), time(&bumped, ds)) {
            (Some(a), Some(b)) => ratios.push((b - a).abs() / du),
            _ => return (false, format!("a probe run at ds = {ds} did not stay trapped")),
        }
    }
    let change = (ratios[1] / ratios[0] - 1.0).abs();
    (
        ratios.iter().all(|r| r.is_finite()) && change <= 0.05,
        format!("|dT| / |du0| = {:.6e} (ds 1e-3), {:.6e} (ds 5e-4), relative change {change:.2e}", ratios[0], ratios[1]),
    )
}

#[test]
fn acceptance() {
    let mut out = Vec::new();
    let mut phi1 = None;
    out.push(timed(1, secs(1), c1_exact_profile));
    out.push(timed(2, secs(1), c2_partial_mass));
    out.push(timed(3, secs(30), || c3_shooting(&mut phi1)));
    out.push(timed(4, secs(10), c4_ground_spectrum));
    let p1 = phi1.expect("criterion 3 produces the excited profile");
    out.push(timed(5, secs(10), || c5_excited_spectrum(&p1)));
    out.push(timed(6, secs(5), c6_free_operator));
    out.push(timed(7, secs(1), c7_quadrature));
    out.push(timed(8, secs(30), c8_coercivity));
    out.push(timed(9, secs(300), c9_stability));
    out.push(timed(10, secs(900), || c10_codimension_one(&p1)));
    out.push(timed(11, secs(5), c11_tail));
    out.push(timed(12, secs(900), c12_lipschitz));

    let mut unexpected = Vec::new();
    for o in &out {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        let note = if !o.pass && KNOWN_UNATTAINABLE.contains(&o.id) { " (known unattainable)" } else { "" };
        // Written to the handle directly so the lines show without --nocapture.
        let _ = writeln!(std::io::stderr(), "criterion {:>2}: {tag}{note} [{:.2?}] {}", o.id, o.elapsed, o.detail);
        if !o.pass && !KNOWN_UNATTAINABLE.contains(&o.id) {
            unexpected.push(o.id);
        }
    }
    assert!(unexpected.is_empty(), "criteria failed: {unexpected:?}");
    let resolved: Vec<usize> = out.iter().filter(|o| o.pass && KNOWN_UNATTAINABLE.contains(&o.id)).map(|o| o.id).collect();
    assert!(resolved.is_empty(), "criteria listed as unattainable now pass: {resolved:?}");
}
