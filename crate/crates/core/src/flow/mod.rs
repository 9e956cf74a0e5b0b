//! Renormalized flow `v = epsilon + sum a_j psi_j` around a profile, in the
//! variables `y = x / lambda(t)`, `s = int dt / lambda^2`, with the scaling
//! parameter fixed by orthogonality to the scaling mode.

mod blowup;
mod decompose;
mod dynamics;

pub use blowup::{blowup_extract, shoot_stable_manifold, BlowupParams, BlowupReport, ManifoldShot, ShotRecord};
pub use decompose::{build_initial_state, decompose, initial_state_from_deviation, Decomposition, InitialReport};
pub use dynamics::{
    evolve, rhs_renormalized, step, Bound, ExitEvent, FlowRun, Rhs, StepOutcome, TrajectorySample, UStarSample,
};

use std::sync::Arc;

use crate::error::{param, Error, Result};
use crate::field::{Parity, RadialField};
use crate::grid::RadialGrid;
use crate::measure::WeightedMeasure;
use crate::profiles::{build_measure, Profile};
use crate::spectrum::{assemble, eigen_solve, DiscreteOperator, EigenPair};

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct FlowParams {
    pub s0: f64,
    pub ds: f64,
    pub s_end: f64,
    /// Decay rate in the bootstrap bounds.
    pub mu: f64,
    /// Constant in `||epsilon||_rho < K e^{-mu s}`.
    pub k_l2: f64,
    /// Constant in `||epsilon||_inf < K' e^{-mu s}`.
    pub k_inf: f64,
    /// Constant in `||y v'||_inf < K'' e^{-mu s}`.
    pub k_grad: f64,
    /// Bound on `sup |y^2 v / (1 + e^{-s} y^2)|`.
    pub delta: f64,
    /// Largest `||v||_inf` relative to `||Phi||_inf`.
    pub tube: f64,
    pub max_halvings: u32,
    /// Keep every `record_every`-th step in the trajectory.
    pub record_every: usize,
    /// Points `x` where `u(t, x)` is recorded once `x / lambda` reaches `ustar_radius`.
    pub ustar_points: Vec<f64>,
    pub ustar_radius: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            s0: 6.0,
            ds: 1e-3,
            s_end: 20.0,
            mu: 0.05,
            k_l2: 50.0,
            k_inf: 50.0,
            k_grad: 50.0,
            delta: 0.1,
            tube: 0.5,
            max_halvings: 4,
            record_every: 10,
            ustar_points: Vec::new(),
            ustar_radius: 15.0,
        }
    }
}

impl FlowParams {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("ds", self.ds),
            ("mu", self.mu),
            ("k_l2", self.k_l2),
            ("k_inf", self.k_inf),
            ("k_grad", self.k_grad),
            ("delta", self.delta),
            ("tube", self.tube),
            ("ustar_radius", self.ustar_radius),
        ];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return param(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.s_end > self.s0) {
            return param(format!("s_end = {} must exceed s0 = {}", self.s_end, self.s0));
        }
        if self.record_every == 0 {
            return param("record_every must be at least 1");
        }
        Ok(())
    }
}

/// Everything about the linearization that the flow reuses at every step.
#[derive(Debug, Clone)]
pub struct FlowContext {
    profile: Profile,
    measure: WeightedMeasure,
    op: DiscreteOperator,
    /// The scaling mode, eigenvalue close to `-1`.
    psi1: EigenPair,
    /// Remaining nonpositive modes; `a_j` multiplies `unstable[j]`.
    unstable: Vec<EigenPair>,
    lambda_phi: Vec<f64>,
    density: Vec<f64>,
    phi_sup: f64,
}

impl FlowContext {
    pub fn new(profile: &Profile) -> Result<Self> {
        let grid = profile.grid().clone();
        let measure = build_measure(profile, &grid)?;
        let op = assemble(profile, &measure)?;
        let mut k = 3;
        let report = loop {
            let r = eigen_solve(&op, k)?;
            if r.complete || k >= 8 {
                break r;
            }
            k += 1;
        };
        if !report.complete {
            return Err(Error::Numerical("could not reach a positive eigenvalue".into()));
        }
        let nonpos = report.nonpositive().to_vec();
        let i1 = nonpos
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1.eigenvalue + 1.0).abs().total_cmp(&(b.1.eigenvalue + 1.0).abs()))
            .map(|(i, _)| i)
            .ok_or_else(|| Error::Numerical("no nonpositive eigenvalue".into()))?;
        if (nonpos[i1].eigenvalue + 1.0).abs() > 1e-2 {
            return Err(Error::Numerical(format!(
                "scaling eigenvalue {} is not close to -1",
                nonpos[i1].eigenvalue
            )));
        }
        let psi1 = nonpos[i1].clone();
        let unstable: Vec<EigenPair> = nonpos.iter().enumerate().filter(|(i, _)| *i != i1).map(|(_, p)| p.clone()).collect();
        let phi = profile.phi().values();
        let dphi = profile.dphi().values();
        let lambda_phi = grid.nodes().iter().zip(phi.iter().zip(dphi)).map(|(r, (p, dp))| 2.0 * p + r * dp).collect();
        let density = profile.density().into_values();
        let phi_sup = profile.phi().norm_inf();
        Ok(Self {
            profile: profile.clone(),
            measure,
            op,
            psi1,
            unstable,
            lambda_phi,
            density,
            phi_sup,
        })
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.profile.grid()
    }

    pub fn measure(&self) -> &WeightedMeasure {
        &self.measure
    }

    pub fn operator(&self) -> &DiscreteOperator {
        &self.op
    }

    pub fn scaling_mode(&self) -> &EigenPair {
        &self.psi1
    }

    pub fn unstable_modes(&self) -> &[EigenPair] {
        &self.unstable
    }

    /// `mu_j = -lambda_j` for the unstable modes.
    pub fn growth_rates(&self) -> Vec<f64> {
        self.unstable.iter().map(|p| -p.eigenvalue).collect()
    }

    /// `||Phi||_inf * tube`.
    pub fn tube_radius(&self, tube: f64) -> f64 {
        tube * self.phi_sup
    }
}

/// Modulated state at renormalized time `s`.
#[derive(Debug, Clone)]
pub struct ModulationState {
    pub s: f64,
    pub lambda: f64,
    /// Physical time, `t(s0) = 0`.
    pub t: f64,
    pub a: Vec<f64>,
    pub eps: Vec<f64>,
}

impl ModulationState {
    pub fn eps_field(&self, ctx: &FlowContext) -> RadialField {
        RadialField::raw(ctx.grid(), self.eps.clone(), Parity::Even)
    }

    /// `v = epsilon + sum a_j psi_j`.
    pub fn v(&self, ctx: &FlowContext) -> Vec<f64> {
        let mut v = self.eps.clone();
        for (a, p) in self.a.iter().zip(&ctx.unstable) {
            v.iter_mut().zip(p.eigenfunction.values()).for_each(|(x, q)| *x += a * q);
        }
        v
    }

    /// The exact self-similar solution `v = 0`.
    pub fn self_similar(ctx: &FlowContext, s0: f64) -> Self {
        Self {
            s: s0,
            lambda: (-0.5 * s0).exp(),
            t: 0.0,
            a: vec![0.0; ctx.unstable.len()],
            eps: vec![0.0; ctx.grid().len()],
        }
    }
}
