use super::{FlowContext, FlowParams, ModulationState};
use crate::error::{Error, Result};
use crate::field::{Parity, RadialField};
use crate::measure::weighted_dot;
use crate::spectrum::tridiag::TridiagLu;

fn derivative(f: &[f64], ctx: &FlowContext) -> Vec<f64> {
    RadialField::raw(ctx.grid(), f.to_vec(), Parity::Even).derivative().into_values()
}

/// Right-hand side of the renormalized equation with the modulation
/// parameters solved from the orthogonality conditions.
#[derive(Debug, Clone)]
pub struct Rhs {
    /// `m = lambda_s / lambda + 1/2`.
    pub m: f64,
    /// `(a_j)_s`.
    pub da: Vec<f64>,
    /// `6 v^2 + y (v^2)'`.
    pub nonlinear: Vec<f64>,
    /// `-L v + NL + m Lambda(Phi + v)`.
    pub dv_ds: Vec<f64>,
    /// Explicit part of the `epsilon` equation.
    pub(crate) forcing: Vec<f64>,
}

/// Gaussian elimination with partial pivoting on a small dense system.
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if !(a[piv][col].abs() > 1e-13 * scale) {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

pub fn rhs_renormalized(state: &ModulationState, ctx: &FlowContext) -> Result<Rhs> {
    let grid = ctx.grid();
    let r = grid.nodes();
    let m_ = ctx.measure();
    let v = state.v(ctx);
    let dv = derivative(&v, ctx);
    let nonlinear: Vec<f64> = (0..v.len()).map(|i| 6.0 * v[i] * v[i] + 2.0 * r[i] * v[i] * dv[i]).collect();
    let lam_total: Vec<f64> = (0..v.len()).map(|i| ctx.lambda_phi[i] + 2.0 * v[i] + r[i] * dv[i]).collect();
    let mus = ctx.growth_rates();
    let mut modes: Vec<&[f64]> = vec![ctx.psi1.eigenfunction.values()];
    modes.extend(ctx.unstable.iter().map(|p| p.eigenfunction.values()));
    let n = modes.len();
    let gram: Vec<Vec<f64>> = modes.iter().map(|pi| modes.iter().map(|pj| weighted_dot(pi, pj, m_)).collect()).collect();
    let mut mat = vec![vec![0.0; n]; n];
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        mat[i][0] = weighted_dot(&lam_total, modes[i], m_);
        for j in 1..n {
            mat[i][j] = -gram[j][i];
        }
        rhs[i] = -weighted_dot(&nonlinear, modes[i], m_)
            - (1..n).map(|j| mus[j - 1] * state.a[j - 1] * gram[j][i]).sum::<f64>();
    }
    let x = dense_solve(mat, rhs).ok_or_else(|| Error::Modulation("modulation Gram matrix is singular".into()))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Modulation("non-finite modulation parameters".into()));
    }
    let m = x[0];
    let da = x[1..].to_vec();
    let mut forcing: Vec<f64> = (0..v.len()).map(|i| m * lam_total[i] + nonlinear[i]).collect();
    for j in 1..n {
        let c = mus[j - 1] * state.a[j - 1] - da[j - 1];
        forcing.iter_mut().zip(modes[j]).for_each(|(f, p)| *f += c * p);
    }
    let lv = ctx.op.apply_slice(&v);
    let dv_ds = (0..v.len()).map(|i| -lv[i] + nonlinear[i] + m * lam_total[i]).collect();
    Ok(Rhs { m, da, nonlinear, dv_ds, forcing })
}

/// `(I + ds L)` with the far-field condition `v ~ y^{-2}` in the last row.
pub(crate) struct Implicit {
    ds: f64,
    lu: TridiagLu,
}

impl Implicit {
    pub(crate) fn new(ctx: &FlowContext, ds: f64) -> Result<Self> {
        let (lower, diag, upper) = ctx.op.rows();
        let n = diag.len();
        let r = ctx.grid().nodes();
        let mut sub: Vec<f64> = (0..n - 1).map(|i| ds * lower[i + 1]).collect();
        let sup: Vec<f64> = (0..n - 1).map(|i| ds * upper[i]).collect();
        let mut d: Vec<f64> = diag.iter().map(|v| 1.0 + ds * v).collect();
        let ratio = r[n - 2] / r[n - 1];
        sub[n - 2] = -ratio * ratio;
        d[n - 1] = 1.0;
        Ok(Self { ds, lu: TridiagLu::factor(&sub, &d, &sup)? })
    }
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: ModulationState,
    pub m: f64,
    /// Largest component along a mode removed by the re-projection.
    pub drift: f64,
}

fn step_with(state: &ModulationState, ctx: &FlowContext, imp: &Implicit) -> Result<StepOutcome> {
    let ds = imp.ds;
    let rhs = rhs_renormalized(state, ctx)?;
    let n = state.eps.len();
    let mut eps: Vec<f64> = state.eps.iter().zip(&rhs.forcing).map(|(e, f)| e + ds * f).collect();
    eps[n - 1] = 0.0;
    imp.lu.solve_in_place(&mut eps);
    let m_ = ctx.measure();
    let norm = weighted_dot(&eps, &eps, m_).sqrt();
    let mut drift = 0.0f64;
    for p in std::iter::once(&ctx.psi1).chain(ctx.unstable.iter()) {
        let psi = p.eigenfunction.values();
        let c = weighted_dot(&eps, psi, m_);
        if norm > 0.0 {
            drift = drift.max(c.abs() / norm);
        }
        eps.iter_mut().zip(psi).for_each(|(e, q)| *e -= c * q);
    }
    let a = state.a.iter().zip(&rhs.da).map(|(a, b)| a + ds * b).collect();
    let g = rhs.m - 0.5;
    let lambda = state.lambda * (ds * g).exp();
    let dt = if (2.0 * g * ds).abs() < 1e-12 {
        state.lambda * state.lambda * ds
    } else {
        state.lambda * state.lambda * ((2.0 * g * ds).exp() - 1.0) / (2.0 * g)
    };
    let next = ModulationState { s: state.s + ds, lambda, t: state.t + dt, a, eps };
    if !(next.lambda.is_finite() && next.t.is_finite() && next.eps.iter().all(|v| v.is_finite()) && next.a.iter().all(|v| v.is_finite())) {
        return Err(Error::Numerical(format!("non-finite state at s = {}", next.s)));
    }
    Ok(StepOutcome { state: next, m: rhs.m, drift })
}

/// One implicit-explicit step of size `ds`.
pub fn step(state: &ModulationState, ctx: &FlowContext, ds: f64) -> Result<StepOutcome> {
    step_with(state, ctx, &Implicit::new(ctx, ds)?)
}

/// The bootstrap bound that a trajectory violated first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Bound {
    /// `lambda < e^{-mu s}`.
    Scaling,
    /// `sum a_j^2 e^{2 mu s} <= 1`.
    Unstable,
    /// `||epsilon||_rho < K e^{-mu s}`.
    EpsL2,
    /// `||epsilon||_inf < K' e^{-mu s}`.
    EpsInf,
    /// `sup |y^2 v / (1 + e^{-s} y^2)| < delta`.
    Weighted,
    /// `||y v'||_inf < K'' e^{-mu s}`.
    Gradient,
    /// `||v||_inf` beyond the tube radius.
    Tube,
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct ExitEvent {
    pub s: f64,
    pub bound: Bound,
    /// Sign of the first unstable coefficient at exit (0 if there is none).
    pub a_sign: f64,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct TrajectorySample {
    pub s: f64,
    pub t: f64,
    pub lambda: f64,
    pub m: f64,
    pub a: Vec<f64>,
    pub eps_l2: f64,
    pub eps_inf: f64,
    pub weighted_sup: f64,
    pub grad_sup: f64,
    pub v_inf: f64,
    /// `||U + u_tilde||_inf` in rescaled variables, so `||u||_inf = u_sup / lambda^2`.
    pub u_sup: f64,
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct UStarSample {
    pub x: f64,
    pub t: f64,
    pub u: f64,
}

#[derive(Debug, Clone)]
pub struct FlowRun {
    pub samples: Vec<TrajectorySample>,
    pub exit: Option<ExitEvent>,
    pub final_state: ModulationState,
    pub ustar: Vec<UStarSample>,
    pub steps: usize,
    pub halvings: usize,
    pub max_drift: f64,
    pub mu: f64,
}

pub(crate) struct Monitors {
    pub eps_l2: f64,
    pub eps_inf: f64,
    pub weighted_sup: f64,
    pub grad_sup: f64,
    pub v_inf: f64,
    pub u_sup: f64,
    pub u_rescaled: Vec<f64>,
}

pub(crate) fn measure_state(ctx: &FlowContext, state: &ModulationState) -> Monitors {
    let r = ctx.grid().nodes();
    let v = state.v(ctx);
    let dv = derivative(&v, ctx);
    let decay = (-state.s).exp();
    let sup = |f: &dyn Fn(usize) -> f64| (0..v.len()).fold(0.0f64, |m, i| m.max(f(i).abs()));
    let u_rescaled: Vec<f64> = (0..v.len()).map(|i| ctx.density[i] + 6.0 * v[i] + 2.0 * r[i] * dv[i]).collect();
    Monitors {
        eps_l2: weighted_dot(&state.eps, &state.eps, ctx.measure()).sqrt(),
        eps_inf: sup(&|i| state.eps[i]),
        weighted_sup: sup(&|i| r[i] * r[i] * v[i] / (1.0 + decay * r[i] * r[i])),
        grad_sup: sup(&|i| r[i] * dv[i]),
        v_inf: sup(&|i| v[i]),
        u_sup: sup(&|i| u_rescaled[i]),
        u_rescaled,
    }
}

fn violated(ctx: &FlowContext, state: &ModulationState, mon: &Monitors, p: &FlowParams) -> Option<Bound> {
    let e = (p.mu * state.s).exp();
    let a2: f64 = state.a.iter().map(|a| a * a).sum();
    if mon.v_inf > ctx.tube_radius(p.tube) {
        Some(Bound::Tube)
    } else if state.lambda >= 1.0 / e {
        Some(Bound::Scaling)
    } else if a2 * e * e > 1.0 {
        Some(Bound::Unstable)
    } else if mon.eps_l2 * e >= p.k_l2 {
        Some(Bound::EpsL2)
    } else if mon.eps_inf * e >= p.k_inf {
        Some(Bound::EpsInf)
    } else if mon.weighted_sup >= p.delta {
        Some(Bound::Weighted)
    } else if mon.grad_sup * e >= p.k_grad {
        Some(Bound::Gradient)
    } else {
        None
    }
}

fn sample(state: &ModulationState, m: f64, mon: &Monitors) -> TrajectorySample {
    TrajectorySample {
        s: state.s,
        t: state.t,
        lambda: state.lambda,
        m,
        a: state.a.clone(),
        eps_l2: mon.eps_l2,
        eps_inf: mon.eps_inf,
        weighted_sup: mon.weighted_sup,
        grad_sup: mon.grad_sup,
        v_inf: mon.v_inf,
        u_sup: mon.u_sup,
    }
}

/// Advances with step halving: a step whose `||v||_inf` more than doubles
/// (or fails) is redone as two half steps.
fn advance(
    state: &ModulationState,
    ctx: &FlowContext,
    imps: &[Implicit],
    level: usize,
    halvings: &mut usize,
) -> Result<StepOutcome> {
    let before = measure_state(ctx, state).v_inf;
    let floor = 1e-6 * ctx.phi_sup;
    let attempt = step_with(state, ctx, &imps[level]);
    let ok = match &attempt {
        Ok(out) => measure_state(ctx, &out.state).v_inf <= 2.0 * before + floor,
        Err(Error::Numerical(_)) => false,
        Err(_) => true,
    };
    if ok || level + 1 >= imps.len() {
        return attempt;
    }
    *halvings += 1;
    let first = advance(state, ctx, imps, level + 1, halvings)?;
    let second = advance(&first.state, ctx, imps, level + 1, halvings)?;
    Ok(StepOutcome { state: second.state, m: second.m, drift: first.drift.max(second.drift) })
}

/// Integrates from `initial` to `s_end`, stopping at the first violated
/// bootstrap bound.
pub fn evolve(initial: &ModulationState, ctx: &FlowContext, params: &FlowParams) -> Result<FlowRun> {
    params.validate()?;
    let imps = (0..=params.max_halvings)
        .map(|k| Implicit::new(ctx, params.ds / 2f64.powi(k as i32)))
        .collect::<Result<Vec<_>>>()?;
    let total = ((params.s_end - initial.s) / params.ds).round().max(0.0) as usize;
    let mut state = initial.clone();
    let mon = measure_state(ctx, &state);
    let m0 = rhs_renormalized(&state, ctx)?.m;
    let mut run = FlowRun {
        samples: vec![sample(&state, m0, &mon)],
        exit: None,
        final_state: state.clone(),
        ustar: Vec::new(),
        steps: 0,
        halvings: 0,
        max_drift: 0.0,
        mu: params.mu,
    };
    let mut pending: Vec<f64> = params.ustar_points.clone();
    if let Some(b) = violated(ctx, &state, &mon, params) {
        run.exit = Some(ExitEvent { s: state.s, bound: b, a_sign: state.a.first().map_or(0.0, |a| sign(*a)) });
        return Ok(run);
    }
    for k in 0..total {
        let out = advance(&state, ctx, &imps, 0, &mut run.halvings)?;
        state = out.state;
        state.s = initial.s + (k + 1) as f64 * params.ds;
        run.steps += 1;
        run.max_drift = run.max_drift.max(out.drift);
        let mon = measure_state(ctx, &state);
        if !pending.is_empty() {
            let field = RadialField::raw(ctx.grid(), mon.u_rescaled.clone(), Parity::Even);
            pending.retain(|&x| {
                let y = x / state.lambda;
                if y >= params.ustar_radius {
                    let u = field.eval(y) / (state.lambda * state.lambda);
                    run.ustar.push(UStarSample { x, t: state.t, u });
                    false
                } else {
                    true
                }
            });
        }
        let exit = violated(ctx, &state, &mon, params);
        if (k + 1) % params.record_every == 0 || k + 1 == total || exit.is_some() {
            run.samples.push(sample(&state, out.m, &mon));
        }
        if let Some(b) = exit {
            run.exit = Some(ExitEvent { s: state.s, bound: b, a_sign: state.a.first().map_or(0.0, |a| sign(*a)) });
            break;
        }
    }
    run.final_state = state;
    Ok(run)
}

pub(crate) fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
