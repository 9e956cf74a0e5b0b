use std::sync::Arc;

use crate::error::{domain, Result};
use crate::field::{Parity, RadialField};
use crate::grid::RadialGrid;
use crate::measure::{weighted_dot, WeightedMeasure, SPHERE_AREA_5D};
use crate::profiles::Profile;

/// Finite-volume discretization of
/// `L = -rho^{-1} div(rho grad) + V`, `V = 1 - 2 r Phi' - 12 Phi`,
/// with conductances `rho r^4` at cell faces and masses `rho_i w_i`.
/// Stored in the nodal basis; the matrix is symmetric in the weighted product.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    measure: WeightedMeasure,
    potential: Vec<f64>,
    log_cond: Vec<f64>,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

/// Operator linearized around `profile`.
pub fn assemble(profile: &Profile, measure: &WeightedMeasure) -> Result<DiscreteOperator> {
    if !profile.grid().same_nodes(measure.grid()) {
        return domain("profile and measure live on different grids");
    }
    Ok(assemble_fields(profile.phi().values(), profile.dphi().values(), measure))
}

/// Operator with `Phi = 0` and the pure Gaussian weight.
pub fn assemble_free(grid: &Arc<RadialGrid>) -> DiscreteOperator {
    let zeros = vec![0.0; grid.len()];
    assemble_fields(&zeros, &zeros, &WeightedMeasure::gaussian(grid))
}

pub(crate) fn assemble_fields(phi: &[f64], dphi: &[f64], measure: &WeightedMeasure) -> DiscreteOperator {
    let grid = measure.grid();
    let r = grid.nodes();
    let n = r.len();
    let lr = measure.log_rho();
    let lm = measure.log_mass();
    let potential: Vec<f64> = (0..n).map(|i| 1.0 - 2.0 * r[i] * dphi[i] - 12.0 * phi[i]).collect();
    // Face factor chosen so that the unweighted operator maps r^2 to -10
    // exactly against the quadrature masses; it tends to r_face^4.
    let quad = measure.quadrature();
    let mut cum = 0.0;
    let log_cond: Vec<f64> = (0..n - 1)
        .map(|i| {
            cum += quad[i];
            let face = 10.0 * grid.spacing(i) * cum / (r[i + 1] * r[i + 1] - r[i] * r[i]);
            0.5 * (lr[i] + lr[i + 1]) + face.ln()
        })
        .collect();
    let log_flux: Vec<f64> = (0..n - 1).map(|i| log_cond[i] - grid.spacing(i).ln()).collect();
    let mut lower = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut diag = potential.clone();
    for i in 0..n {
        if i + 1 < n {
            upper[i] = -(log_flux[i] - lm[i]).exp();
        }
        if i > 0 {
            lower[i] = -(log_flux[i - 1] - lm[i]).exp();
        }
        diag[i] -= upper[i] + lower[i];
    }
    DiscreteOperator { measure: measure.clone(), potential, log_cond, lower, diag, upper }
}

impl DiscreteOperator {
    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.measure.grid()
    }

    pub fn measure(&self) -> &WeightedMeasure {
        &self.measure
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// Row coefficients `(lower, diag, upper)`; `lower[i]` couples node `i`
    /// to `i - 1` and `upper[i]` to `i + 1`.
    pub fn rows(&self) -> (&[f64], &[f64], &[f64]) {
        (&self.lower, &self.diag, &self.upper)
    }

    /// `L f` with a no-flux last cell.
    pub fn apply(&self, f: &RadialField) -> Result<RadialField> {
        if !self.grid().same_nodes(f.grid()) {
            return domain("field and operator live on different grids");
        }
        Ok(RadialField::raw(self.grid(), self.apply_slice(f.values()), Parity::Even))
    }

    pub(crate) fn apply_slice(&self, f: &[f64]) -> Vec<f64> {
        let n = f.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * f[i];
                if i > 0 {
                    s += self.lower[i] * f[i - 1];
                }
                if i + 1 < n {
                    s += self.upper[i] * f[i + 1];
                }
                s
            })
            .collect()
    }

    /// `L f` with the Dirichlet condition at `r_max` (the last entry is zero).
    pub fn apply_dirichlet(&self, f: &[f64]) -> Vec<f64> {
        let n = f.len();
        let mut g = f.to_vec();
        g[n - 1] = 0.0;
        let mut out = self.apply_slice(&g);
        out[n - 1] = 0.0;
        out
    }

    /// Dirichlet system on nodes `0..N-1`: diagonal and squared off-diagonal
    /// of the symmetrized matrix.
    pub fn symmetric_form(&self) -> (Vec<f64>, Vec<f64>) {
        let m = self.diag.len() - 1;
        let d = self.diag[..m].to_vec();
        let e2 = (0..m - 1).map(|i| self.upper[i] * self.lower[i + 1]).collect();
        (d, e2)
    }

    /// `S int rho r^4 |f'|^2` in the discrete (face) form.
    pub fn gradient_energy(&self, f: &[f64]) -> f64 {
        let grid = self.grid();
        SPHERE_AREA_5D
            * (0..f.len() - 1)
                .map(|i| {
                    let df = f[i + 1] - f[i];
                    (self.log_cond[i]).exp() * df * df / grid.spacing(i)
                })
                .sum::<f64>()
    }

    /// `(L f, f)_rho` as gradient energy plus potential energy.
    pub fn quadratic_form(&self, f: &[f64]) -> f64 {
        let pot: Vec<f64> = f.iter().zip(&self.potential).map(|(v, p)| v * p).collect();
        self.gradient_energy(f) + weighted_dot(&pot, f, &self.measure)
    }
}
