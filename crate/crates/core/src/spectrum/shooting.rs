use crate::error::{param, Error, Result};
use crate::ode::{integrate, OdeOptions};
use crate::profiles::Profile;

#[derive(Debug, Clone, Copy)]
pub struct EigenShootParams {
    /// Radius where the solution is compared with the decaying branch.
    pub r_end: f64,
    pub ode: OdeOptions,
}

impl Default for EigenShootParams {
    fn default() -> Self {
        Self { r_end: 8.0, ode: OdeOptions { rtol: 1e-12, atol: 1e-300, h_init: 1e-6, ..OdeOptions::default() } }
    }
}

fn background(profile: Option<&Profile>, r: f64) -> (f64, f64) {
    profile.map_or((0.0, 0.0), |p| p.eval(r))
}

/// `u' - 2 (lambda - 1) u / r` at `r_end` for the solution of
/// `(L - lambda) u = 0` regular at the origin with `u(0) = 1`. It vanishes
/// when the solution follows the decaying branch `r^{2 (lambda - 1)}`.
/// `profile = None` selects the free operator.
pub fn shooting_mismatch(profile: Option<&Profile>, lambda: f64, params: &EigenShootParams) -> Result<f64> {
    let (p0, _) = background(profile, 0.0);
    let v0 = 1.0 - 12.0 * p0;
    let k = v0 - lambda;
    let eps = 1e-3 / k.abs().sqrt().max(1.0);
    let y0 = [1.0 + k * eps * eps / 10.0, k * eps / 5.0];
    let run = integrate(
        &mut |r, y: &[f64; 2]| {
            let (p, dp) = background(profile, r);
            let v = 1.0 - 2.0 * r * dp - 12.0 * p;
            [y[1], (0.5 * r - 4.0 / r - 2.0 * r * p) * y[1] + (v - lambda) * y[0]]
        },
        eps,
        y0,
        &[params.r_end],
        &params.ode,
        &mut |_, _| false,
    )?;
    let [u, du] = run.outputs[0];
    Ok(du - 2.0 * (lambda - 1.0) * u / params.r_end)
}

/// Eigenvalue inside `bracket` by bisection of [`shooting_mismatch`].
pub fn eigen_refine_shooting(profile: Option<&Profile>, bracket: (f64, f64), params: &EigenShootParams) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi && lo.is_finite() && hi.is_finite()) {
        return param(format!("invalid bracket ({lo}, {hi})"));
    }
    let mut f_lo = shooting_mismatch(profile, lo, params)?;
    let f_hi = shooting_mismatch(profile, hi, params)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Bracket(format!("no sign change of the shooting mismatch on ({lo}, {hi})")));
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-14 * mid.abs().max(1.0) {
            return Ok(mid);
        }
        let f = shooting_mismatch(profile, mid, params)?;
        if f == 0.0 {
            return Ok(mid);
        }
        if f.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f;
        } else {
            hi = mid;
        }
    }
}
