use std::sync::{Arc, OnceLock};

use kslab_core::io::{profile_table, read_profile, ProfileMeta, Table};
use kslab_core::profiles::*;
use kslab_core::*;
use proptest::prelude::*;

const A1: f64 = 3.023929809787084e2;
const C1: f64 = 8.269392651310241e-1;

fn n1_grid() -> Arc<RadialGrid> {
    make_grid(6001, 30.0, 2.0).unwrap()
}

fn phi1() -> &'static Profile {
    static P: OnceLock<Profile> = OnceLock::new();
    P.get_or_init(|| find_profile(1, (100.0, 1000.0), 1e-10, &n1_grid(), &ProfileSettings::default()).unwrap())
}

#[test]
fn closed_form_profile() {
    let g = make_grid(4001, 30.0, 1.0).unwrap();
    let p = phi0_exact(&g);
    assert_eq!(p.phi().values()[0], 1.0);
    assert_eq!(p.a(), 1.0);
    assert_eq!(p.tail_c(), 2.0);
    assert_eq!(p.dphi().values()[0], 0.0);
    let r = 1e4;
    assert!((r * r * p.eval(r).0 - 2.0).abs() < 1e-7);
    assert!(p.residual_sup() <= 1e-8);
    assert!(stationary_residual(p.phi()).unwrap().norm_inf() <= 1e-8);
}

#[test]
fn residual_of_constants() {
    let g = make_grid(401, 10.0, 1.0).unwrap();
    let sixth = RadialField::from_fn(&g, |_| 1.0 / 6.0);
    // One-sided stencils at the outer node leave round-off of order 1e-12.
    assert!(stationary_residual(&sixth).unwrap().norm_inf() < 1e-10);
    let one = RadialField::from_fn(&g, |_| 1.0);
    let res = stationary_residual(&one).unwrap();
    assert!(res.values().iter().all(|v| (v - 5.0).abs() < 1e-9));
}

#[test]
fn taylor_coefficients() {
    // The second coefficient balances 5 Phi''(0) = a - 6 a^2.
    for a in [0.3, 1.0, 7.0, 302.0] {
        let t = taylor_coeffs(a, 3);
        assert!((t[1] - (a - 6.0 * a * a) / 10.0).abs() <= 1e-14 * t[1].abs());
    }
    // 2 / (2 + r^2) = sum (-1/2)^k r^{2k}.
    let t = taylor_coeffs(1.0, 12);
    for (k, v) in t.iter().enumerate() {
        assert!((v - (-0.5f64).powi(k as i32)).abs() < 1e-15, "k = {k}");
    }
}

#[test]
fn far_field_coefficients() {
    // 2 / (2 + r^2) = sum_{k >= 1} 2 (-2)^{k-1} r^{-2k}.
    let c = series_coeffs(2.0, 10);
    for (k, v) in c.iter().enumerate() {
        assert!((v - 2.0 * (-2.0f64).powi(k as i32)).abs() < 1e-10 * v.abs(), "k = {k}");
    }
    let (p, dp) = series_eval(2.0, 30.0);
    assert!((p - 2.0 / 902.0).abs() < 1e-16);
    assert!((dp + 120.0 / (902.0 * 902.0)).abs() < 1e-16);
}

#[test]
fn shooting_examples() {
    let params = ShootParams::default();
    let out = shoot_profile(1.0, &params).unwrap();
    assert_eq!(out.class, ShootClass::DecayLike);
    let (r, p) = (*out.r.last().unwrap(), *out.phi.last().unwrap());
    assert!((r * r * p - 2.0 * r * r / (2.0 + r * r)).abs() < 1e-9);

    let out = shoot_profile(1.0 / 6.0, &params).unwrap();
    assert_ne!(out.class, ShootClass::DecayLike);
    assert!(out.phi.iter().all(|v| (v - 1.0 / 6.0).abs() < 1e-12));

    let out = shoot_profile(0.0, &params).unwrap();
    assert!(out.phi.iter().all(|v| *v == 0.0));
    assert!(matches!(shoot_profile(-1.0, &params), Err(Error::Parameter(_))));
}

#[test]
fn ground_state_by_bisection() {
    let g = make_grid(4001, 30.0, 1.0).unwrap();
    let p = find_profile(0, (0.5, 2.0), 1e-10, &g, &ProfileSettings::default()).unwrap();
    assert!((p.a() - 1.0).abs() < 1e-6);
    assert!((p.tail_c() - 2.0).abs() < 1e-6);
    assert!(p.residual_sup() < 1e-8);
}

#[test]
fn bisection_input_errors() {
    let g = make_grid(401, 20.0, 1.0).unwrap();
    let s = ProfileSettings::default();
    assert!(matches!(find_profile(0, (0.5, 2.0), 0.0, &g, &s), Err(Error::Parameter(_))));
    assert!(matches!(find_profile(0, (2.0, 0.5), 1e-8, &g, &s), Err(Error::Parameter(_))));
    assert!(matches!(find_profile(0, (1.2, 2.0), 1e-8, &g, &s), Err(Error::Bracket(_))));
}

#[test]
fn excited_profile_fixture_and_invariants() {
    let p = phi1();
    assert_eq!(p.n(), 1);
    assert!((p.a() - A1).abs() < 1e-6 * A1, "a1 = {}", p.a());
    assert!((p.tail_c() - C1).abs() < 1e-6, "c1 = {}", p.tail_c());
    assert!(p.a() > 1.0);
    assert!(p.phi().values().iter().all(|v| *v > 0.0));
    assert_eq!(p.dphi().values()[0], 0.0);
    assert!(p.residual_sup() <= 1e-6);
    assert!(p.tail_c() > 0.0 && p.tail_c() <= 2.0);
}

#[test]
fn classification_flips_across_the_excited_profile() {
    let s = ProfileSettings::default();
    let below = fate(A1 * (1.0 - 1e-8), &s).unwrap();
    let above = fate(A1 * (1.0 + 1e-8), &s).unwrap();
    assert_ne!(below, above);
    assert_ne!(below, ShootClass::DecayLike);
}

#[test]
fn ladder_scan_finds_both_transitions() {
    let s = ProfileSettings::default();
    let tr = scan_transitions(0.5, 1000.0, 40, &s).unwrap();
    assert_eq!(tr.len(), 2);
    assert!(tr[0].0 < 1.0 && 1.0 < tr[0].1);
    assert!(tr[1].0 < A1 && A1 < tr[1].1);
}

#[test]
fn center_value_is_grid_independent() {
    let s = ProfileSettings::default();
    let a = find_profile(1, (100.0, 1000.0), 1e-10, &make_grid(3001, 30.0, 2.0).unwrap(), &ProfileSettings { residual_tol: 1.0, ..s })
        .unwrap()
        .a();
    assert!((a - phi1().a()).abs() < 1e-9 * a);
}

#[test]
fn tail_fit_examples() {
    let g = make_grid(4001, 30.0, 1.0).unwrap();
    let fit = tail_fit(phi0_exact(&g).phi(), (10.0, 20.0)).unwrap();
    assert!((fit.c - 2.0).abs() < 1e-3);
    let exact = RadialField::from_fn(&g, |r| if r == 0.0 { 0.0 } else { 2.0 / (r * r) });
    let fit = tail_fit(&exact, (10.0, 20.0)).unwrap();
    assert!((fit.c - 2.0).abs() < 1e-12 && fit.d.abs() < 1e-9);
    assert!(matches!(tail_fit(&RadialField::zeros(&g), (10.0, 20.0)), Err(Error::Domain(_))));
}

#[test]
fn profile_evaluation_off_grid() {
    let p = phi1();
    let r = p.grid().nodes();
    for i in [10, 500, 3000, 5999] {
        let (v, d) = p.eval(r[i]);
        assert!((v - p.phi().values()[i]).abs() < 1e-12 * v.abs());
        assert!((d - p.dphi().values()[i]).abs() < 1e-10 * d.abs().max(1.0));
    }
    let (v, _) = p.eval(60.0);
    assert!((v * 3600.0 - p.tail_c()).abs() < 1e-3);
}

#[test]
fn stored_profile_reads_back_identically() {
    let p = phi1();
    let text = profile_table(p).to_csv();
    let meta = ProfileMeta::of(p);
    let json = serde_json::to_string(&meta).unwrap();
    let meta: ProfileMeta = serde_json::from_str(&json).unwrap();
    let back = read_profile(&Table::parse(&text).unwrap(), &meta).unwrap();
    assert_eq!(back.phi().values(), p.phi().values());
    assert_eq!(back.a().to_bits(), p.a().to_bits());
    let coarse = make_grid(1001, 30.0, 2.0).unwrap();
    assert!(back.resample(&coarse).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn taylor_series_solves_the_ode(a in 0.01f64..400.0) {
        // Residual of the truncated series at the start radius.
        let (r, p, dp) = taylor_start(a);
        let t = taylor_coeffs(a, 12);
        let d2: f64 = t.iter().enumerate().skip(1)
            .map(|(k, c)| (2 * k * (2 * k - 1)) as f64 * c * r.powi(2 * k as i32 - 2))
            .sum();
        let res = d2 - profile_rhs(r, p, dp);
        prop_assert!(res.abs() < 1e-8 * (a + 6.0 * a * a), "{}", res);
    }

    #[test]
    fn profile_rhs_vanishes_on_the_closed_form(r in 0.0f64..50.0) {
        let q = 2.0 + r * r;
        let (p, dp, ddp) = (2.0 / q, -4.0 * r / (q * q), (12.0 * r * r - 8.0) / (q * q * q));
        prop_assert!((profile_rhs(r, p, dp) - ddp).abs() < 1e-13);
    }
}
