//! The mass transform between the three-dimensional density `u` and the
//! reduced mass `w`, and the localized modes built on top of it.

use std::f64::consts::PI;

use crate::error::{domain, param, Result};
use crate::field::{Parity, RadialField};
use crate::measure::{integral_3d, WeightedMeasure, SPHERE_AREA_5D};
use crate::spectrum::EigenPair;

/// `(partial_mass(u), psi)_rho = PAIRING_FACTOR * int_{R^3} u theta dx`:
/// ratio of the five- and three-dimensional sphere areas.
pub const PAIRING_FACTOR: f64 = SPHERE_AREA_5D / (4.0 * PI);

/// `w(r) = (2 r^3)^{-1} int_0^r u(s) s^2 ds`.
pub fn partial_mass(u: &RadialField) -> Result<RadialField> {
    if u.parity() != Parity::Even {
        return param("partial_mass expects an even density");
    }
    let integrand = u.map(|r, v| v * r * r);
    let cum = integrand.cumulative_integral();
    let values = u
        .nodes()
        .iter()
        .zip(cum)
        .zip(u.values())
        .map(|((&r, c), &u0)| if r == 0.0 { u0 / 6.0 } else { c / (2.0 * r * r * r) })
        .collect();
    Ok(RadialField::raw(u.grid(), values, Parity::Even))
}

/// `u = 6 w + 2 r w'`, the inverse of [`partial_mass`].
pub fn density_from_mass(w: &RadialField) -> Result<RadialField> {
    if w.parity() != Parity::Even {
        return param("density_from_mass expects an even field");
    }
    let dw = w.derivative();
    Ok(density_from_parts(w, &dw))
}

pub(crate) fn density_from_parts(w: &RadialField, dw: &RadialField) -> RadialField {
    let values = w
        .nodes()
        .iter()
        .zip(w.values().iter().zip(dw.values()))
        .map(|(r, (v, dv))| 6.0 * v + 2.0 * r * dv)
        .collect();
    RadialField::raw(w.grid(), values, Parity::Even)
}

fn bump(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

fn bump_prime(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        bump(t) / (t * t)
    }
}

/// Smooth cutoff: 1 on `[0, 1/4]`, 0 on `[1/2, inf)`.
pub fn cutoff(x: f64) -> f64 {
    let x = x.abs();
    if x <= 0.25 {
        1.0
    } else if x >= 0.5 {
        0.0
    } else {
        let s = 4.0 * (x - 0.25);
        let g = bump(1.0 - s);
        g / (g + bump(s))
    }
}

/// Derivative of [`cutoff`] for `x >= 0`.
pub fn cutoff_prime(x: f64) -> f64 {
    if x <= 0.25 || x >= 0.5 {
        return 0.0;
    }
    let s = 4.0 * (x - 0.25);
    let (g, h) = (bump(1.0 - s), bump(s));
    let (dg, dh) = (-bump_prime(1.0 - s), bump_prime(s));
    4.0 * (dg * h - g * dh) / ((g + h) * (g + h))
}

/// Tail weights and localized modes for a set of eigenfunctions.
#[derive(Debug, Clone)]
pub struct LocalizedModeSet {
    pub cutoff_radius: f64,
    /// Eigenpair indices the modes were built from.
    pub indices: Vec<usize>,
    /// `theta_j(r) = (1/2) int_r^inf psi_j rho s ds`.
    pub theta: Vec<RadialField>,
    /// `psi_bar_j = psi_j chi_R - r^{-3} int_0^r s^3 psi_j chi_R' ds`.
    pub psi_bar: Vec<RadialField>,
    /// `phi_bar_j = (6 psi_j + 2 r psi_j') chi_R`, whose partial mass is `psi_bar_j`.
    pub phi_bar: Vec<RadialField>,
}

pub fn build_localized_modes(
    pairs: &[EigenPair],
    measure: &WeightedMeasure,
    cutoff_radius: f64,
) -> Result<LocalizedModeSet> {
    if !(cutoff_radius.is_finite() && cutoff_radius > 0.0) {
        return param(format!("cutoff radius must be positive, got {cutoff_radius}"));
    }
    let grid = measure.grid();
    if 0.5 * cutoff_radius > grid.r_max() {
        return domain(format!(
            "cutoff support r <= {} exceeds the grid extent {}",
            0.5 * cutoff_radius,
            grid.r_max()
        ));
    }
    let mut set = LocalizedModeSet {
        cutoff_radius,
        indices: Vec::new(),
        theta: Vec::new(),
        psi_bar: Vec::new(),
        phi_bar: Vec::new(),
    };
    let chi: Vec<f64> = grid.nodes().iter().map(|r| cutoff(r / cutoff_radius)).collect();
    let dchi: Vec<f64> = grid.nodes().iter().map(|r| cutoff_prime(r / cutoff_radius) / cutoff_radius).collect();
    for pair in pairs {
        let psi = &pair.eigenfunction;
        if !grid.same_nodes(psi.grid()) {
            return domain("eigenfunction and measure live on different grids");
        }
        let integrand: Vec<f64> = psi
            .values()
            .iter()
            .zip(grid.nodes())
            .enumerate()
            .map(|(i, (p, r))| p * measure.rho(i) * r)
            .collect();
        let tail = RadialField::raw(grid, integrand, Parity::Odd).tail_integral();
        let theta = RadialField::raw(grid, tail.into_iter().map(|t| 0.5 * t).collect(), Parity::Even);

        let inner: Vec<f64> = grid
            .nodes()
            .iter()
            .zip(psi.values())
            .zip(&dchi)
            .map(|((r, p), dc)| r * r * r * p * dc)
            .collect();
        let inner = RadialField::raw(grid, inner, Parity::Even).cumulative_integral();
        let psi_bar = grid
            .nodes()
            .iter()
            .zip(psi.values())
            .zip(chi.iter().zip(&inner))
            .map(|((&r, p), (c, int))| if r == 0.0 { p * c } else { p * c - int / (r * r * r) })
            .collect();

        let dens = density_from_mass(psi)?;
        let phi_bar = dens.values().iter().zip(&chi).map(|(d, c)| d * c).collect();

        set.indices.push(pair.index);
        set.theta.push(theta);
        set.psi_bar.push(RadialField::raw(grid, psi_bar, Parity::Even));
        set.phi_bar.push(RadialField::raw(grid, phi_bar, Parity::Even));
    }
    Ok(set)
}

/// `int_{R^3} u theta dx`; multiplied by [`PAIRING_FACTOR`] it equals the
/// weighted product of the partial mass of `u` with the eigenfunction.
pub fn theta_pairing(u_bar: &RadialField, theta: &RadialField) -> Result<f64> {
    Ok(integral_3d(&u_bar.mul(theta)?))
}
