use super::{FlowContext, FlowParams, ModulationState};
use crate::error::{param, Error, Result};
use crate::field::RadialField;
use crate::measure::weighted_dot;
use crate::transforms::{partial_mass, theta_pairing, LocalizedModeSet, PAIRING_FACTOR};

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub lambda: f64,
    pub a: Vec<f64>,
    pub eps: Vec<f64>,
    /// `kappa` with `lambda = reference_scale * kappa`.
    pub kappa: f64,
}

/// Writes `w(x) = lambda^{-2} (Phi + v)(x / lambda)` with `v` orthogonal to
/// the scaling mode. `w` is sampled in the variable `x / reference_scale`,
/// i.e. the caller passes `W` with `w(x) = s^{-2} W(x / s)`.
pub fn decompose(w: &RadialField, reference_scale: f64, ctx: &FlowContext, tube: f64) -> Result<Decomposition> {
    if !(reference_scale > 0.0) {
        return param("reference scale must be positive");
    }
    let grid = ctx.grid();
    if !grid.same_nodes(w.grid()) {
        return param("field must be sampled on the flow grid");
    }
    let m = ctx.measure();
    let phi = ctx.profile.phi().values();
    let psi1 = ctx.psi1.eigenfunction.values();
    let rescaled = |kappa: f64| -> Vec<f64> {
        if kappa == 1.0 {
            w.values().to_vec()
        } else {
            grid.nodes().iter().map(|r| kappa * kappa * w.eval(kappa * r)).collect()
        }
    };
    let g = |kappa: f64| -> f64 {
        let wk = rescaled(kappa);
        let diff: Vec<f64> = wk.iter().zip(phi).map(|(a, b)| a - b).collect();
        weighted_dot(&diff, psi1, m)
    };
    let scale = weighted_dot(&ctx.lambda_phi, psi1, m).abs();
    let tol = 1e-14 * scale.max(1.0);
    let mut kappa = 1.0;
    let mut gk = g(kappa);
    let mut iter = 0;
    while gk.abs() > tol {
        iter += 1;
        if iter > 60 {
            return Err(Error::OutsideTube("scaling parameter iteration did not converge".into()));
        }
        let h = 1e-6 * kappa;
        let slope = (g(kappa + h) - g(kappa - h)) / (2.0 * h);
        if !(slope.is_finite() && slope != 0.0) {
            return Err(Error::OutsideTube("degenerate scaling derivative".into()));
        }
        let next = kappa - gk / slope;
        if !(0.5..=2.0).contains(&next) {
            return Err(Error::OutsideTube(format!("scaling parameter left [0.5, 2] (kappa = {next})")));
        }
        let g_next = g(next);
        if (next - kappa).abs() <= 1e-15 * kappa && g_next.abs() >= gk.abs() {
            break;
        }
        kappa = next;
        gk = g_next;
    }
    let mut v: Vec<f64> = rescaled(kappa).iter().zip(phi).map(|(a, b)| a - b).collect();
    let sup = v.iter().fold(0.0f64, |s, x| s.max(x.abs()));
    if sup > ctx.tube_radius(tube) {
        return Err(Error::OutsideTube(format!(
            "deviation {sup:e} exceeds the tube radius {:e}",
            ctx.tube_radius(tube)
        )));
    }
    let c1 = weighted_dot(&v, psi1, m);
    v.iter_mut().zip(psi1).for_each(|(x, p)| *x -= c1 * p);
    let mut a = Vec::with_capacity(ctx.unstable.len());
    for p in &ctx.unstable {
        let psi = p.eigenfunction.values();
        let c = weighted_dot(&v, psi, m);
        v.iter_mut().zip(psi).for_each(|(x, q)| *x -= c * q);
        a.push(c);
    }
    Ok(Decomposition { lambda: reference_scale * kappa, a, eps: v, kappa })
}

/// State for `W = Phi + v0 + sum a_j psi_j` at reference scale `e^{-s0/2}`.
pub fn initial_state_from_deviation(
    ctx: &FlowContext,
    v0: &RadialField,
    a: &[f64],
    params: &FlowParams,
) -> Result<ModulationState> {
    if a.len() != ctx.unstable.len() {
        return param(format!("expected {} unstable coefficients, got {}", ctx.unstable.len(), a.len()));
    }
    let mut w = ctx.profile.phi().axpy(1.0, v0)?;
    for (c, p) in a.iter().zip(&ctx.unstable) {
        w.add_scaled_in_place(*c, &p.eigenfunction);
    }
    let dec = decompose(&w, (-0.5 * params.s0).exp(), ctx, params.tube)?;
    Ok(ModulationState { s: params.s0, lambda: dec.lambda, t: 0.0, a: dec.a, eps: dec.eps })
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct InitialReport {
    /// `lambda(s0) e^{s0/2}`.
    pub lambda_ratio: f64,
    /// `e^{mu s0}` times the sum of the four norms of the initial deviation.
    pub initial_size: f64,
}

/// Initial data `U_n + u_bar + sum a_bar_j phi_bar_j` in rescaled variables
/// at scale `e^{-s0/2}`, with `u_bar` required to lie in the admissible
/// class (orthogonal to the tail weights of the unstable modes).
pub fn build_initial_state(
    ctx: &FlowContext,
    modes: &LocalizedModeSet,
    u_bar: &RadialField,
    a_bar: &[f64],
    params: &FlowParams,
) -> Result<(ModulationState, InitialReport)> {
    params.validate()?;
    if a_bar.len() != modes.phi_bar.len() {
        return param(format!("expected {} coefficients, got {}", modes.phi_bar.len(), a_bar.len()));
    }
    let scale = u_bar.norm_inf().max(1e-300);
    for (j, theta) in modes.theta.iter().enumerate() {
        let c = PAIRING_FACTOR * theta_pairing(u_bar, theta)?;
        if c.abs() > 1e-10 * scale {
            return Err(Error::Precondition(format!(
                "perturbation has pairing {c:e} with tail weight {j}; it is not admissible"
            )));
        }
    }
    let mut density = u_bar.clone();
    for (c, pb) in a_bar.iter().zip(&modes.phi_bar) {
        density.add_scaled_in_place(*c, pb);
    }
    let w = ctx.profile.phi().axpy(1.0, &partial_mass(&density)?)?;
    let reference = (-0.5 * params.s0).exp();
    let dec = decompose(&w, reference, ctx, params.tube)?;
    let ratio = dec.lambda / reference;
    if !(ratio > 0.5 && ratio < 2.0) {
        return Err(Error::Precondition(format!("initial scale ratio {ratio} outside (1/2, 2)")));
    }
    let state = ModulationState { s: params.s0, lambda: dec.lambda, t: 0.0, a: dec.a, eps: dec.eps };
    let m = super::dynamics::measure_state(ctx, &state);
    let initial_size = (params.mu * params.s0).exp() * (m.eps_l2 + m.eps_inf + m.weighted_sup + m.grad_sup);
    Ok((state, InitialReport { lambda_ratio: ratio, initial_size }))
}
