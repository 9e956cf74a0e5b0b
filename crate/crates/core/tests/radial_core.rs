use std::f64::consts::PI;

use kslab_core::measure::{integral_3d, integral_5d, radial_quadrature};
use kslab_core::*;
use proptest::prelude::*;

fn max_err(a: &[f64], b: impl Fn(usize) -> f64) -> f64 {
    a.iter().enumerate().map(|(i, v)| (v - b(i)).abs()).fold(0.0, f64::max)
}

#[test]
fn three_node_uniform_grid() {
    let g = make_grid(3, 2.0, 1.0).unwrap();
    assert_eq!(g.nodes(), &[0.0, 1.0, 2.0]);
}

#[test]
fn uniform_spacing_on_default_grid() {
    let g = make_grid(4001, 30.0, 1.0).unwrap();
    for i in 0..g.len() - 1 {
        assert!((g.spacing(i) - 0.0075).abs() < 1e-12);
    }
}

#[test]
fn stretched_grid_clusters_at_origin() {
    let g = make_grid(101, 10.0, 2.0).unwrap();
    assert!(g.spacing(0) < g.spacing(99));
}

#[test]
fn invalid_grids_are_rejected() {
    assert!(matches!(make_grid(2, 1.0, 1.0), Err(Error::Parameter(_))));
    assert!(matches!(make_grid(10, 0.0, 1.0), Err(Error::Parameter(_))));
    assert!(matches!(make_grid(10, 1.0, 0.5), Err(Error::Parameter(_))));
    assert!(matches!(make_grid(10, f64::NAN, 1.0), Err(Error::Parameter(_))));
}

#[test]
fn field_rejects_wrong_length_and_nan() {
    let g = make_grid(5, 1.0, 1.0).unwrap();
    assert!(RadialField::new(&g, vec![0.0; 4]).is_err());
    assert!(RadialField::new(&g, vec![0.0, 1.0, f64::NAN, 0.0, 0.0]).is_err());
}

#[test]
fn gaussian_moment_quadrature() {
    // (4 pi)^{5/2} = 32 pi^{5/2}.
    let g = make_grid(2001, 25.0, 1.0).unwrap();
    let m = WeightedMeasure::gaussian(&g);
    let one = RadialField::from_fn(&g, |_| 1.0);
    let v = inner_product(&one, &one, &m).unwrap();
    let exact = 32.0 * PI.powf(2.5);
    assert!(((v - exact) / exact).abs() < 1e-8, "{v} vs {exact}");
}

#[test]
fn plain_radial_integrals() {
    // int_{R^5} e^{-r^2} = pi^{5/2}, int_{R^3} e^{-r^2} = pi^{3/2}.
    let g = make_grid(3001, 12.0, 1.0).unwrap();
    let f = RadialField::from_fn(&g, |r| (-r * r).exp());
    assert!((integral_5d(&f) / PI.powf(2.5) - 1.0).abs() < 1e-10);
    assert!((integral_3d(&f) / PI.powf(1.5) - 1.0).abs() < 1e-10);
    let w = radial_quadrature(&g);
    assert_eq!(w.len(), g.len());
    assert!(w.iter().all(|v| *v >= 0.0));
}

#[test]
fn ground_state_weight_has_closed_form() {
    let g = make_grid(4001, 30.0, 1.0).unwrap();
    let p = phi0_exact(&g);
    let m = build_measure(&p, &g).unwrap();
    assert!((m.rho(0) - 1.0).abs() < 1e-15);
    let tilde = m.rho_tilde();
    for (i, r) in g.nodes().iter().enumerate() {
        if *r > 20.0 {
            break;
        }
        let exact = ((2.0 + r * r) / 2.0).powi(2);
        assert!((tilde[i] / exact - 1.0).abs() < 1e-8, "r = {r}");
        let log_exact = exact.ln() - r * r / 4.0;
        assert!((m.log_rho()[i] - log_exact).abs() < 1e-8);
    }
}

#[test]
fn zero_field_has_zero_product() {
    let g = make_grid(201, 10.0, 1.0).unwrap();
    let m = WeightedMeasure::gaussian(&g);
    let f = RadialField::from_fn(&g, |r| r.cos());
    assert_eq!(inner_product(&RadialField::zeros(&g), &f, &m).unwrap(), 0.0);
}

#[test]
fn mismatched_grids_are_a_domain_error() {
    let g1 = make_grid(201, 10.0, 1.0).unwrap();
    let g2 = make_grid(202, 10.0, 1.0).unwrap();
    let m = WeightedMeasure::gaussian(&g1);
    let f = RadialField::zeros(&g2);
    assert!(matches!(inner_product(&f, &f, &m), Err(Error::Domain(_))));
}

#[test]
fn laplacian_examples() {
    let g = make_grid(1001, 10.0, 1.0).unwrap();
    let r2 = RadialField::from_fn(&g, |r| r * r);
    let l = laplacian_radial(&r2).unwrap();
    // Round-off of the second difference grows like r^2 eps / h^2.
    assert!(max_err(l.values(), |_| 10.0) < 1e-7);
    let c = RadialField::from_fn(&g, |_| 3.0);
    assert!(laplacian_radial(&c).unwrap().norm_inf() < 1e-8);
    let p = phi0_exact(&g);
    let l = laplacian_radial(p.phi()).unwrap();
    assert!((l.values()[0] + 5.0).abs() < 1e-8);
    let exact = |r: f64| (-4.0 * r * r - 40.0) / (2.0 + r * r).powi(3);
    assert!(max_err(l.values(), |i| exact(g.nodes()[i])) < 1e-7);
}

#[test]
fn laplacian_needs_even_fields() {
    let g = make_grid(101, 10.0, 1.0).unwrap();
    let odd = RadialField::with_parity(&g, g.nodes().to_vec(), Parity::Odd).unwrap();
    assert!(laplacian_radial(&odd).is_err());
}

#[test]
fn laplacian_converges_at_least_second_order() {
    let err = |n: usize| {
        let g = make_grid(n, 20.0, 1.0).unwrap();
        let f = RadialField::from_fn(&g, |r| (-r * r / 8.0).exp());
        let l = laplacian_radial(&f).unwrap();
        // f'' + 4 f' / r for e^{-r^2/8}.
        let exact = |r: f64| (r * r / 16.0 - 1.25) * (-r * r / 8.0).exp();
        max_err(l.values(), |i| exact(g.nodes()[i]))
    };
    let (e1, e2) = (err(101), err(201));
    assert!(e1 / e2 >= 3.9, "ratio {}", e1 / e2);
}

#[test]
fn scaling_generator_examples() {
    let g = make_grid(2001, 20.0, 1.0).unwrap();
    let p = phi0_exact(&g);
    let l = lambda_op(p.phi()).unwrap();
    assert!((l.values()[0] - 2.0).abs() < 1e-12);
    let exact = |r: f64| 8.0 / (2.0 + r * r).powi(2);
    assert!(max_err(l.values(), |i| exact(g.nodes()[i])) < 1e-9);
    let c = RadialField::from_fn(&g, |_| 1.5);
    assert!(max_err(lambda_op(&c).unwrap().values(), |_| 3.0) < 1e-10);
    assert!(lambda_prime_op(&c).unwrap().norm_inf() < 1e-10);
    let r2 = RadialField::from_fn(&g, |r| r * r);
    let l = lambda_op(&r2).unwrap();
    assert!(max_err(l.values(), |i| 4.0 * g.nodes()[i].powi(2)) < 1e-7);
}

#[test]
fn summation_by_parts_for_compact_fields() {
    // -int (rho r^4 f')' h dr = int rho r^4 f' h' dr for h vanishing at r_max.
    let g = make_grid(4001, 20.0, 1.0).unwrap();
    let m = build_measure(&phi0_exact(&g), &g).unwrap();
    let bump = |c: f64, w: f64| move |r: f64| (-(r - c) * (r - c) / w).exp() + (-(r + c) * (r + c) / w).exp();
    let f = RadialField::from_fn(&g, bump(2.0, 1.0));
    let h = RadialField::from_fn(&g, bump(3.0, 2.0));
    let r = g.nodes();
    let flux: Vec<f64> = f.derivative().values().iter().enumerate().map(|(i, v)| m.rho(i) * r[i].powi(4) * v).collect();
    let dflux = RadialField::with_parity(&g, flux, Parity::Odd).unwrap().derivative();
    let w = radial_quadrature(&g);
    let lhs: f64 = -(1..g.len()).map(|i| w[i] / r[i].powi(4) * dflux.values()[i] * h.values()[i]).sum::<f64>();
    let rhs = inner_product(&f.derivative(), &h.derivative(), &m).unwrap() / SPHERE_AREA_5D;
    assert!((lhs - rhs).abs() < 1e-8 * rhs.abs().max(1.0), "{lhs} vs {rhs}");
}

#[test]
fn interpolation_is_exact_at_nodes_and_decays_outside() {
    let g = make_grid(301, 15.0, 1.5).unwrap();
    let f = RadialField::from_fn(&g, |r| 1.0 / (1.0 + r * r));
    for (i, r) in g.nodes().iter().enumerate().step_by(37) {
        assert_eq!(f.eval(*r), f.values()[i]);
    }
    assert!((f.eval(1.2345) - 1.0 / (1.0 + 1.2345f64.powi(2))).abs() < 1e-7);
    // Beyond r_max the tail continues as c / r^2 + d / r^4.
    let want = 1.0 / 901.0;
    assert!((f.eval(30.0) - want).abs() < 1e-4 * want, "{}", f.eval(30.0));
    assert!(f.eval(30.0) < f.values()[300]);
}

#[test]
fn fornberg_weights_for_centered_second_derivative() {
    let w = fornberg(0.0, &[-1.0, 0.0, 1.0], 2);
    assert!((w[2][0] - 1.0).abs() < 1e-14 && (w[2][1] + 2.0).abs() < 1e-14 && (w[2][2] - 1.0).abs() < 1e-14);
    assert!((w[1][0] + 0.5).abs() < 1e-14 && w[1][1].abs() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grids_satisfy_invariants(n in 3usize..600, r_max in 0.1f64..100.0, stretch in 1.0f64..4.0) {
        let g = make_grid(n, r_max, stretch).unwrap();
        let r = g.nodes();
        prop_assert_eq!(r.len(), n);
        prop_assert_eq!(r[0], 0.0);
        prop_assert_eq!(r[n - 1], r_max);
        prop_assert!(r.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(r.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn inner_product_is_symmetric_and_bilinear(
        a in prop::collection::vec(-1.0f64..1.0, 4),
        b in prop::collection::vec(-1.0f64..1.0, 4),
        s in -3.0f64..3.0,
    ) {
        let g = make_grid(401, 20.0, 1.0).unwrap();
        let m = build_measure(&phi0_exact(&g), &g).unwrap();
        let mk = |c: &[f64]| RadialField::from_fn(&g, |r| (c[0] + c[1] * r * r + c[2] * (r * r).cos()) * (-r * r / (4.0 + c[3].abs())).exp());
        let (f, h) = (mk(&a), mk(&b));
        prop_assert_eq!(inner_product(&f, &h, &m).unwrap(), inner_product(&h, &f, &m).unwrap());
        let lhs = inner_product(&f.axpy(s, &h).unwrap(), &h, &m).unwrap();
        let rhs = inner_product(&f, &h, &m).unwrap() + s * inner_product(&h, &h, &m).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs() + rhs.abs()));
        prop_assert!(norm(&f, &m).unwrap() >= 0.0);
    }

    #[test]
    fn laplacian_of_polynomials_is_exact(c0 in -5.0f64..5.0, c1 in -5.0f64..5.0, c2 in -1.0f64..1.0) {
        // Delta (c0 + c1 r^2 + c2 r^4) = 10 c1 + 28 c2 r^2 in five dimensions.
        let g = make_grid(201, 4.0, 1.3).unwrap();
        let f = RadialField::from_fn(&g, |r| c0 + c1 * r * r + c2 * r.powi(4));
        let l = laplacian_radial(&f).unwrap();
        for (r, v) in g.nodes().iter().zip(l.values()) {
            prop_assert!((v - 10.0 * c1 - 28.0 * c2 * r * r).abs() < 1e-8 * (1.0 + r * r));
        }
    }
}
