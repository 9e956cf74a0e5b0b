use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{domain, Result};
use crate::field::{Parity, RadialField};
use crate::grid::RadialGrid;

/// Area of the unit sphere in five dimensions.
pub const SPHERE_AREA_5D: f64 = 8.0 * PI * PI / 3.0;

/// The weight `rho = rho_tilde * exp(-r^2/4)` attached to a profile
/// together with the radial quadrature for five-dimensional integrals.
#[derive(Debug, Clone)]
pub struct WeightedMeasure {
    grid: Arc<RadialGrid>,
    log_rho: Vec<f64>,
    quad: Vec<f64>,
    log_mass: Vec<f64>,
    mass: Vec<f64>,
}

/// Quadrature weights for `int_0^{r_max} f(r) r^4 dr`. The first cell
/// `[0, r_1/2]` is integrated exactly for a constant integrand.
pub fn radial_quadrature(grid: &RadialGrid) -> Vec<f64> {
    let nodes = grid.nodes();
    (0..grid.len())
        .map(|i| {
            if i == 0 {
                (0.5 * nodes[1]).powi(5) / 5.0
            } else {
                nodes[i].powi(4) * grid.trapezoid_weight(i)
            }
        })
        .collect()
}

impl WeightedMeasure {
    /// Builds the weight from samples of a profile: `log rho_tilde` is the
    /// cumulative integral of `2 r Phi`.
    pub fn from_phi(phi: &RadialField) -> Result<Self> {
        if phi.parity() != Parity::Even {
            return domain("profile samples must be an even field");
        }
        let integrand = phi.map(|r, v| 2.0 * r * v);
        let integrand = RadialField::raw(phi.grid(), integrand.into_values(), Parity::Odd);
        let log_tilde = integrand.cumulative_integral();
        let log_rho = phi
            .nodes()
            .iter()
            .zip(log_tilde)
            .map(|(r, lt)| lt - 0.25 * r * r)
            .collect();
        Ok(Self::assemble(phi.grid(), log_rho))
    }

    /// Pure Gaussian weight (`Phi = 0`).
    pub fn gaussian(grid: &Arc<RadialGrid>) -> Self {
        let log_rho = grid.nodes().iter().map(|r| -0.25 * r * r).collect();
        Self::assemble(grid, log_rho)
    }

    fn assemble(grid: &Arc<RadialGrid>, log_rho: Vec<f64>) -> Self {
        let quad = radial_quadrature(grid);
        let log_mass: Vec<f64> = log_rho.iter().zip(&quad).map(|(l, q)| l + q.ln()).collect();
        let mass = log_mass.iter().map(|l| l.exp()).collect();
        Self { grid: grid.clone(), log_rho, quad, log_mass, mass }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn log_rho(&self) -> &[f64] {
        &self.log_rho
    }

    pub fn rho(&self, i: usize) -> f64 {
        self.log_rho[i].exp()
    }

    /// `rho / exp(-r^2/4)`.
    pub fn rho_tilde(&self) -> Vec<f64> {
        self.grid
            .nodes()
            .iter()
            .zip(&self.log_rho)
            .map(|(r, l)| (l + 0.25 * r * r).exp())
            .collect()
    }

    /// Unweighted quadrature weights for `int f r^4 dr`.
    pub fn quadrature(&self) -> &[f64] {
        &self.quad
    }

    /// `rho_i * w_i`: the discrete measure of node `i` (without the sphere area).
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn log_mass(&self) -> &[f64] {
        &self.log_mass
    }

    fn check(&self, f: &RadialField) -> Result<()> {
        if !self.grid.same_nodes(f.grid()) {
            return domain("field and measure live on different grids");
        }
        Ok(())
    }
}

/// `(f, g)_rho = int_{R^5} f g rho dy`.
pub fn inner_product(f: &RadialField, g: &RadialField, m: &WeightedMeasure) -> Result<f64> {
    m.check(f)?;
    m.check(g)?;
    Ok(weighted_dot(f.values(), g.values(), m))
}

pub(crate) fn weighted_dot(f: &[f64], g: &[f64], m: &WeightedMeasure) -> f64 {
    SPHERE_AREA_5D * f.iter().zip(g).zip(&m.mass).map(|((a, b), w)| a * b * w).sum::<f64>()
}

pub fn norm(f: &RadialField, m: &WeightedMeasure) -> Result<f64> {
    Ok(inner_product(f, f, m)?.sqrt())
}

/// `(||f||^2 + ||f'||^2)^{1/2}` in the weighted space.
pub fn norm_h1(f: &RadialField, m: &WeightedMeasure) -> Result<f64> {
    let df = f.derivative();
    Ok((inner_product(f, f, m)? + inner_product(&df, &df, m)?).sqrt())
}

/// `int_{R^5} f dy` without the weight.
pub fn integral_5d(f: &RadialField) -> f64 {
    let quad = radial_quadrature(f.grid());
    SPHERE_AREA_5D * f.values().iter().zip(&quad).map(|(v, q)| v * q).sum::<f64>()
}

/// `int_{R^3} f dx = 4 pi int f r^2 dr`.
pub fn integral_3d(f: &RadialField) -> f64 {
    let integrand = f.map(|r, v| r * r * v);
    4.0 * PI * integrand.cumulative_integral().last().copied().unwrap_or(0.0)
}
