use super::dynamics::{evolve, sign, FlowRun};
use super::{initial_state_from_deviation, FlowContext, FlowParams};
use crate::error::{param, Error, Result};
use crate::field::RadialField;

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct BlowupParams {
    /// Trailing fraction of the trajectory used by the fits.
    pub fit_fraction: f64,
}

impl Default for BlowupParams {
    fn default() -> Self {
        Self { fit_fraction: 0.2 }
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct BlowupReport {
    /// Blow-up time, with `t(s0) = 0`.
    pub blowup_time: f64,
    /// Decay rate of `ln lambda^2` in `s` over the fit window.
    pub kappa: f64,
    /// Slope of `ln lambda` against `ln(T - t)`.
    pub rate_fit: f64,
    /// Slope of `ln ||u||_inf` against `ln(T - t)`.
    pub sup_growth: f64,
    /// `(T - t) ||u(t)||_inf` at the last sample.
    pub type_one_product: f64,
    /// `||U_n||_inf`.
    pub profile_sup: f64,
    /// `lambda e^{s/2}` at the last sample.
    pub lambda_limit: f64,
    /// Largest relative deviation of `lambda e^{s/2}` from `lambda_limit` over the fit window.
    pub lambda_spread: f64,
    /// `(x, u*(x))` samples.
    pub u_star: Vec<(f64, f64)>,
    /// Slope of `ln u*` against `ln x`, if at least two samples exist.
    pub u_star_slope: Option<f64>,
}

/// Least-squares slope and intercept.
pub(crate) fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

pub fn blowup_extract(run: &FlowRun, ctx: &FlowContext, params: &BlowupParams) -> Result<BlowupReport> {
    if !(params.fit_fraction > 0.0 && params.fit_fraction <= 1.0) {
        return param("fit_fraction must lie in (0, 1]");
    }
    if let Some(e) = run.exit {
        return Err(Error::Precondition(format!("trajectory exited at s = {} ({:?})", e.s, e.bound)));
    }
    let samples = &run.samples;
    let n = samples.len();
    let take = ((n as f64 * params.fit_fraction).ceil() as usize).max(3);
    if n < take || n < 3 {
        return Err(Error::Precondition("too few trajectory samples".into()));
    }
    let window = &samples[n - take..];
    let s: Vec<f64> = window.iter().map(|p| p.s).collect();
    let l2: Vec<f64> = window.iter().map(|p| 2.0 * p.lambda.ln()).collect();
    let kappa = -linear_fit(&s, &l2).0;
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::Precondition(format!("lambda is not decaying (rate {kappa})")));
    }
    let last = &samples[n - 1];
    // Geometric tail: int_{s_end}^inf lambda^2 ds with lambda^2 ~ e^{-kappa s}.
    let blowup_time = last.t + last.lambda * last.lambda / kappa;
    let remaining: Vec<f64> = window.iter().map(|p| blowup_time - p.t).collect();
    if remaining.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::Numerical("blow-up time estimate precedes the trajectory".into()));
    }
    let ln_rem: Vec<f64> = remaining.iter().map(|r| r.ln()).collect();
    let ln_lambda: Vec<f64> = window.iter().map(|p| p.lambda.ln()).collect();
    let ln_sup: Vec<f64> = window.iter().map(|p| (p.u_sup / (p.lambda * p.lambda)).ln()).collect();
    let rate_fit = linear_fit(&ln_rem, &ln_lambda).0;
    let sup_growth = linear_fit(&ln_rem, &ln_sup).0;
    let type_one_product = remaining[take - 1] * last.u_sup / (last.lambda * last.lambda);
    let profile_sup = ctx.density.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let lambda_limit = last.lambda * (0.5 * last.s).exp();
    let lambda_spread = window
        .iter()
        .map(|p| (p.lambda * (0.5 * p.s).exp() / lambda_limit - 1.0).abs())
        .fold(0.0f64, f64::max);
    let mut u_star: Vec<(f64, f64)> = run.ustar.iter().map(|p| (p.x, p.u)).collect();
    u_star.sort_by(|a, b| a.0.total_cmp(&b.0));
    let u_star_slope = if u_star.len() >= 2 && u_star.iter().all(|p| p.0 > 0.0 && p.1 > 0.0) {
        let lx: Vec<f64> = u_star.iter().map(|p| p.0.ln()).collect();
        let lu: Vec<f64> = u_star.iter().map(|p| p.1.ln()).collect();
        Some(linear_fit(&lx, &lu).0)
    } else {
        None
    };
    Ok(BlowupReport {
        blowup_time,
        kappa,
        rate_fit,
        sup_growth,
        type_one_product,
        profile_sup,
        lambda_limit,
        lambda_spread,
        u_star,
        u_star_slope,
    })
}

/// One trajectory of the bisection.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ShotRecord {
    pub a2: f64,
    /// Renormalized time of the exit, or `s_end` if the run stayed trapped.
    pub s_exit: f64,
    pub exited: bool,
    /// Side of the stable set: sign of `a_2` at exit, `0` if trapped.
    pub side: f64,
}

#[derive(Debug, Clone)]
pub struct ManifoldShot {
    /// Best estimate of the stable value of `a_2(s0)`.
    pub a2_star: f64,
    pub bracket: (f64, f64),
    pub shots: Vec<ShotRecord>,
    /// The longest-trapped run among the bisection midpoints.
    pub trapped: FlowRun,
    pub trapped_duration: f64,
}

fn shoot(ctx: &FlowContext, v0: &RadialField, a2: f64, params: &FlowParams) -> Result<(ShotRecord, FlowRun)> {
    let mut a = vec![0.0; ctx.unstable_modes().len()];
    a[0] = a2;
    let init = initial_state_from_deviation(ctx, v0, &a, params)?;
    let run = evolve(&init, ctx, params)?;
    let rec = match run.exit {
        Some(e) => ShotRecord { a2, s_exit: e.s, exited: true, side: e.a_sign },
        None => ShotRecord { a2, s_exit: run.final_state.s, exited: false, side: 0.0 },
    };
    Ok((rec, run))
}

/// Bisection on `a_2(s0)` between two initial data whose trajectories leave
/// the trapping region on opposite sides.
pub fn shoot_stable_manifold(
    ctx: &FlowContext,
    v0_base: &RadialField,
    bracket: (f64, f64),
    tol: f64,
    params: &FlowParams,
) -> Result<ManifoldShot> {
    if ctx.unstable_modes().len() != 1 {
        return param(format!(
            "bisection needs exactly one unstable direction, the profile has {}",
            ctx.unstable_modes().len()
        ));
    }
    if !(tol > 0.0) || !(bracket.0 < bracket.1) {
        return param("need tol > 0 and an increasing bracket");
    }
    let (lo_rec, _) = shoot(ctx, v0_base, bracket.0, params)?;
    let (hi_rec, _) = shoot(ctx, v0_base, bracket.1, params)?;
    if !(lo_rec.exited && hi_rec.exited) || lo_rec.side * hi_rec.side >= 0.0 {
        return Err(Error::Bracket(format!(
            "endpoints exit on sides {} and {}",
            lo_rec.side, hi_rec.side
        )));
    }
    let lo_side = lo_rec.side;
    let mut shots = vec![lo_rec, hi_rec];
    let (mut lo, mut hi) = bracket;
    let mut best: Option<(ShotRecord, FlowRun)> = None;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let (rec, run) = shoot(ctx, v0_base, mid, params)?;
        shots.push(rec.clone());
        let longer = best.as_ref().map_or(true, |(b, _)| rec.s_exit >= b.s_exit);
        if longer {
            best = Some((rec.clone(), run));
        }
        if !rec.exited {
            break;
        }
        if sign(rec.side) == sign(lo_side) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (rec, trapped) = match best {
        Some(b) => b,
        None => shoot(ctx, v0_base, 0.5 * (lo + hi), params)?,
    };
    Ok(ManifoldShot {
        a2_star: rec.a2,
        bracket: (lo, hi),
        trapped_duration: rec.s_exit - params.s0,
        shots,
        trapped,
    })
}
