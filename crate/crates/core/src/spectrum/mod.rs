//! Spectrum of the linearized operator around a profile in the weighted space.

mod checks;
mod kummer;
mod operator;
mod shooting;
pub mod tridiag;

pub use checks::{
    coercivity_check, gap_quadratic_form, random_smooth_field, spectral_gap_projection_check, tail_exponent_check,
    GapCheck, GapSample, TailExponent,
};
pub use kummer::{fundamental_pair, gamma, kummer_m_series, kummer_reduce, FundamentalPair};
pub use operator::{assemble, assemble_free, DiscreteOperator};
pub use shooting::{eigen_refine_shooting, shooting_mismatch, EigenShootParams};

use crate::error::{param, Error, Result};
use crate::field::{Parity, RadialField};
use crate::measure::weighted_dot;
use crate::profiles::Profile;
use tridiag::{bisect_eigenvalue, gershgorin, TridiagLu};

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub index: usize,
    pub eigenvalue: f64,
    /// Unit norm in the weighted space, positive at the origin.
    pub eigenfunction: RadialField,
    /// `||L psi - lambda psi||_rho`.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<f64>,
    pub pairs: Vec<EigenPair>,
    /// Number of computed eigenvalues that are `<= 0`.
    pub nonpositive_count: usize,
    /// Smallest computed positive eigenvalue.
    pub gap: Option<f64>,
    /// Whether a positive eigenvalue was reached, so every nonpositive one is listed.
    pub complete: bool,
    pub grid_nodes: usize,
    /// Two-grid Richardson values `(4 lambda_fine - lambda_coarse) / 3`.
    pub extrapolated: Option<Vec<f64>>,
}

impl SpectrumReport {
    /// Eigenpairs with nonpositive eigenvalue.
    pub fn nonpositive(&self) -> &[EigenPair] {
        &self.pairs[..self.nonpositive_count]
    }

    /// The pair closest to `-1`, i.e. the scaling mode.
    pub fn scaling_mode(&self) -> Option<&EigenPair> {
        self.pairs
            .iter()
            .min_by(|a, b| (a.eigenvalue + 1.0).abs().total_cmp(&(b.eigenvalue + 1.0).abs()))
    }
}

/// Eigenvalues of the Dirichlet-truncated operator, lowest first.
pub fn eigenvalues(op: &DiscreteOperator, k: usize) -> Result<Vec<f64>> {
    let (d, e2) = op.symmetric_form();
    if k == 0 {
        return param("requested zero eigenvalues");
    }
    if k > d.len() {
        return param(format!("requested {k} eigenvalues from a system of size {}", d.len()));
    }
    let bounds = gershgorin(&d, &e2);
    Ok((0..k).map(|j| bisect_eigenvalue(&d, &e2, j, bounds)).collect())
}

/// Eigenvector for an accurately known eigenvalue by inverse iteration in
/// the nodal basis.
fn eigenvector(op: &DiscreteOperator, lambda: f64) -> Result<(Vec<f64>, f64)> {
    let (lower, diag, upper) = op.rows();
    let m = diag.len() - 1;
    let shift = lambda + 1e-12 * lambda.abs().max(1.0);
    let d: Vec<f64> = diag[..m].iter().map(|v| v - shift).collect();
    let lu = TridiagLu::factor(&lower[1..m], &d, &upper[..m - 1])?;
    let measure = op.measure();
    let mut x = vec![1.0; diag.len()];
    x[m] = 0.0;
    for _ in 0..4 {
        lu.solve_in_place(&mut x[..m]);
        let nrm = weighted_dot(&x, &x, measure).sqrt();
        if !(nrm.is_finite() && nrm > 0.0) {
            return Err(Error::Numerical("inverse iteration produced a degenerate vector".into()));
        }
        x.iter_mut().for_each(|v| *v /= nrm);
    }
    if x[0] < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    let lx = op.apply_dirichlet(&x);
    let res: Vec<f64> = lx.iter().zip(&x).map(|(a, b)| a - lambda * b).collect();
    let residual = weighted_dot(&res, &res, measure).sqrt();
    Ok((x, residual))
}

/// The `k` lowest eigenpairs.
pub fn eigen_solve(op: &DiscreteOperator, k: usize) -> Result<SpectrumReport> {
    let vals = eigenvalues(op, k)?;
    let grid = op.grid();
    let mut pairs = Vec::with_capacity(k);
    for (index, &lambda) in vals.iter().enumerate() {
        let (x, residual) = eigenvector(op, lambda)?;
        let tol = 1e-6 * lambda.abs().max(1.0);
        if residual > tol {
            return Err(Error::Numerical(format!(
                "inverse iteration for eigenvalue {lambda} left residual {residual:e}"
            )));
        }
        pairs.push(EigenPair {
            index,
            eigenvalue: lambda,
            eigenfunction: RadialField::raw(grid, x, Parity::Even),
            residual,
        });
    }
    let nonpositive_count = vals.iter().take_while(|v| **v <= 0.0).count();
    let gap = vals.iter().copied().find(|v| *v > 0.0);
    Ok(SpectrumReport {
        eigenvalues: vals,
        pairs,
        nonpositive_count,
        gap,
        complete: gap.is_some(),
        grid_nodes: grid.len(),
        extrapolated: None,
    })
}

/// [`eigen_solve`] on the profile's grid plus Richardson extrapolation of
/// the eigenvalues against the grid with half the computational spacing.
pub fn eigen_solve_refined(profile: &Profile, k: usize) -> Result<SpectrumReport> {
    let grid = profile.grid();
    let measure = crate::profiles::build_measure(profile, grid)?;
    let mut report = eigen_solve(&assemble(profile, &measure)?, k)?;
    let fine_grid = grid.refined()?;
    let fine_profile = profile.resample(&fine_grid)?;
    let fine_measure = crate::profiles::build_measure(&fine_profile, &fine_grid)?;
    let fine = eigenvalues(&assemble(&fine_profile, &fine_measure)?, k)?;
    report.extrapolated = Some(
        report
            .eigenvalues
            .iter()
            .zip(&fine)
            .map(|(c, f)| (4.0 * f - c) / 3.0)
            .collect(),
    );
    Ok(report)
}

/// Richardson-extrapolated eigenvalues of the free operator.
pub fn free_eigenvalues_refined(grid: &std::sync::Arc<crate::grid::RadialGrid>, k: usize) -> Result<Vec<f64>> {
    let coarse = eigenvalues(&assemble_free(grid), k)?;
    let fine = eigenvalues(&assemble_free(&grid.refined()?), k)?;
    Ok(coarse.iter().zip(&fine).map(|(c, f)| (4.0 * f - c) / 3.0).collect())
}
