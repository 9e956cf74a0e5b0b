//! Self-similar profiles: positive decaying solutions of
//! `Phi'' + (4/r) Phi' - Phi - (r/2) Phi' + 6 Phi^2 + 2 r Phi Phi' = 0`.

use std::sync::Arc;

use crate::error::{domain, param, Error, Result};
use crate::field::{Parity, RadialField};
use crate::grid::RadialGrid;
use crate::measure::WeightedMeasure;
use crate::ode::{integrate, OdeOptions};
use crate::transforms::density_from_parts;

/// `Phi''` from the profile equation.
#[inline]
pub fn profile_rhs(r: f64, phi: f64, dphi: f64) -> f64 {
    if r == 0.0 {
        return (phi - 6.0 * phi * phi) / 5.0;
    }
    -4.0 * dphi / r + phi + 0.5 * r * dphi - 6.0 * phi * phi - 2.0 * r * phi * dphi
}

/// Coefficients `t_k` of the regular expansion `Phi = sum t_k r^{2k}` with
/// `t_0 = a`.
pub fn taylor_coeffs(a: f64, terms: usize) -> Vec<f64> {
    let mut t = vec![0.0; terms.max(1)];
    t[0] = a;
    for k in 0..terms.saturating_sub(1) {
        let s: f64 = (0..=k).map(|i| t[i] * t[k - i]).sum();
        let kf = k as f64;
        t[k + 1] = ((1.0 + kf) * t[k] - (6.0 + 2.0 * kf) * s) / ((2.0 * kf + 2.0) * (2.0 * kf + 5.0));
    }
    t
}

const TAYLOR_TERMS: usize = 12;

/// Start radius and regular data `(Phi, Phi')` there.
pub fn taylor_start(a: f64) -> (f64, f64, f64) {
    let eps = 1e-3 / a.abs().sqrt().max(1.0);
    let (p, dp) = taylor_eval(a, eps);
    (eps, p, dp)
}

fn taylor_eval(a: f64, r: f64) -> (f64, f64) {
    let t = taylor_coeffs(a, TAYLOR_TERMS);
    let x = r * r;
    let mut p = 0.0;
    let mut dp = 0.0;
    for k in (0..t.len()).rev() {
        p = p * x + t[k];
        if k > 0 {
            dp = dp * x + 2.0 * k as f64 * t[k];
        }
    }
    (p, dp * r)
}

/// Coefficients `c_1..c_m` of the far-field expansion `sum c_k r^{-2k}`
/// with `c_1 = c`.
pub fn series_coeffs(c: f64, m: usize) -> Vec<f64> {
    let mut cs = vec![0.0; m + 1];
    if m == 0 {
        return vec![];
    }
    cs[1] = c;
    for k in 2..=m {
        let d: f64 = (1..k).map(|i| cs[i] * cs[k - i]).sum();
        let kf = k as f64;
        cs[k] = -(2.0 * (kf - 1.0) * (2.0 * kf - 5.0) * cs[k - 1] + (6.0 - 2.0 * kf) * d) / (kf - 1.0);
    }
    cs.remove(0);
    cs
}

/// Far-field expansion and its derivative at `r`.
pub fn series_eval(c: f64, r: f64) -> (f64, f64) {
    let cs = series_coeffs(c, 12);
    let x = 1.0 / (r * r);
    let mut p = 0.0;
    let mut dp = 0.0;
    let mut xk = x;
    for (k, ck) in cs.iter().enumerate() {
        let m = (k + 1) as f64;
        p += ck * xk;
        dp += -2.0 * m * ck * xk / r;
        xk *= x;
    }
    (p, dp)
}

/// Residual of the profile equation, derivatives by finite differences.
pub fn stationary_residual(phi: &RadialField) -> Result<RadialField> {
    if phi.parity() != Parity::Even {
        return param("stationary_residual expects an even field");
    }
    let dphi = phi.derivative();
    stationary_residual_with_derivative(phi, &dphi)
}

/// Residual using tabulated first derivatives; `Phi''` comes from
/// differentiating `Phi'`, which keeps round-off small on fine grids.
pub fn stationary_residual_with_derivative(phi: &RadialField, dphi: &RadialField) -> Result<RadialField> {
    phi.check_same_grid(dphi)?;
    let d2 = RadialField::raw(phi.grid(), dphi.values().to_vec(), Parity::Odd).derivative();
    let values = phi
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let (p, dp, ddp) = (phi.values()[i], dphi.values()[i], d2.values()[i]);
            if r == 0.0 {
                5.0 * ddp - p + 6.0 * p * p
            } else {
                ddp + 4.0 * dp / r - p - 0.5 * r * dp + 6.0 * p * p + 2.0 * r * p * dp
            }
        })
        .collect();
    Ok(RadialField::raw(phi.grid(), values, Parity::Even))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ShootClass {
    /// Reached the end radius positive with `r^2 Phi` levelling off.
    DecayLike,
    /// `Phi` crossed zero.
    Overshoot,
    /// `Phi` or `r^2 Phi` exceeded its cap.
    Blowup,
    /// Reached the end radius without an event or a decaying tail.
    Undecided,
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct ShootParams {
    pub r_end: f64,
    /// Blow-up when `Phi > blowup_factor * a`.
    pub blowup_factor: f64,
    /// Blow-up when `r^2 Phi > tail_cap`.
    pub tail_cap: f64,
    /// Largest `|d ln(r^2 Phi) / d ln r|` at `r_end` still counted as decaying.
    pub decay_slope: f64,
    pub ode: OdeOptions,
}

impl Default for ShootParams {
    fn default() -> Self {
        Self {
            r_end: 8.0,
            blowup_factor: 10.0,
            tail_cap: 10.0,
            decay_slope: 0.5,
            ode: OdeOptions { rtol: 1e-13, atol: 1e-16, h_init: 1e-5, ..OdeOptions::default() },
        }
    }
}

#[derive(Debug, Clone)]
pub struct ShootOutcome {
    pub a: f64,
    pub class: ShootClass,
    /// Radius of the classifying event, or `r_end`.
    pub radius: f64,
    pub r: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
}

/// Integrates the regular solution with `Phi(0) = a` outward and classifies it.
pub fn shoot_profile(a: f64, params: &ShootParams) -> Result<ShootOutcome> {
    if !(a.is_finite() && a >= 0.0) {
        return param(format!("shooting parameter must be >= 0, got {a}"));
    }
    if !(params.r_end > 0.0) {
        return param("r_end must be positive");
    }
    if a == 0.0 {
        return Ok(ShootOutcome {
            a,
            class: ShootClass::Undecided,
            radius: params.r_end,
            r: vec![0.0, params.r_end],
            phi: vec![0.0; 2],
            dphi: vec![0.0; 2],
        });
    }
    let (eps, p0, dp0) = taylor_start(a);
    let mut event = None;
    let cap = params.blowup_factor * a;
    let tail_cap = params.tail_cap;
    let run = integrate(
        &mut |r, y: &[f64; 2]| [y[1], profile_rhs(r, y[0], y[1])],
        eps,
        [p0, dp0],
        &[params.r_end],
        &params.ode,
        &mut |r, y| {
            if y[0] < 0.0 {
                event = Some(ShootClass::Overshoot);
            } else if y[0] > cap || r * r * y[0] > tail_cap {
                event = Some(ShootClass::Blowup);
            }
            event.is_some()
        },
    )?;
    let mut r = vec![0.0];
    let mut phi = vec![a];
    let mut dphi = vec![0.0];
    for (t, y) in &run.steps {
        r.push(*t);
        phi.push(y[0]);
        dphi.push(y[1]);
    }
    let (class, radius) = match (event, run.stopped_at) {
        (Some(c), Some(at)) => (c, at),
        _ => {
            let (&p, &dp) = (phi.last().unwrap(), dphi.last().unwrap());
            let slope = 2.0 + params.r_end * dp / p;
            let class = if p > 0.0 && slope.abs() < params.decay_slope {
                ShootClass::DecayLike
            } else {
                ShootClass::Undecided
            };
            (class, params.r_end)
        }
    };
    Ok(ShootOutcome { a, class, radius, r, phi, dphi })
}

/// Least-squares fit `r^2 Phi ~ c + d / r^2` over a window.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct TailFit {
    pub c: f64,
    pub d: f64,
    /// Root-mean-square misfit relative to `c`.
    pub rms: f64,
}

pub fn tail_fit(phi: &RadialField, window: (f64, f64)) -> Result<TailFit> {
    tail_fit_points(phi.nodes(), phi.values(), window)
}

pub fn tail_fit_points(r: &[f64], phi: &[f64], window: (f64, f64)) -> Result<TailFit> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) {
        return param(format!("invalid tail window ({lo}, {hi})"));
    }
    let pts: Vec<(f64, f64)> = r
        .iter()
        .zip(phi)
        .filter(|(x, _)| **x >= lo && **x <= hi)
        .map(|(x, p)| (*x, *p))
        .collect();
    if pts.len() < 3 {
        return domain("tail window contains fewer than 3 samples");
    }
    if pts.iter().any(|(_, p)| *p <= 0.0) {
        return domain("profile is not positive in the tail window");
    }
    let first = pts[0].0 * pts[0].0 * pts[0].1;
    let last = pts[pts.len() - 1];
    if last.0 * last.0 * last.1 > 2.0 * first {
        return domain("r^2 Phi grows across the tail window");
    }
    let (mut s00, mut s01, mut s11, mut b0, mut b1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (x, p) in &pts {
        let y = x * x * p;
        let z = 1.0 / (x * x);
        s00 += 1.0;
        s01 += z;
        s11 += z * z;
        b0 += y;
        b1 += y * z;
    }
    let det = s00 * s11 - s01 * s01;
    if det.abs() < 1e-300 {
        return domain("degenerate tail window");
    }
    let c = (b0 * s11 - b1 * s01) / det;
    let d = (s00 * b1 - s01 * b0) / det;
    let rms = (pts
        .iter()
        .map(|(x, p)| {
            let e = x * x * p - c - d / (x * x);
            e * e
        })
        .sum::<f64>()
        / pts.len() as f64)
        .sqrt()
        / c.abs().max(1e-300);
    if c <= 0.0 {
        return domain("fitted tail coefficient is not positive");
    }
    Ok(TailFit { c, d, rms })
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct ProfileSettings {
    pub shoot: ShootParams,
    /// Radius where the fate of a bisection trajectory is decided.
    pub fate_radius: f64,
    /// Matching radius between the inner shot and the outer solution.
    pub r_match: f64,
    /// Radius where the outer solution is seeded from the far-field series.
    pub r_far: f64,
    pub residual_tol: f64,
    pub max_newton: usize,
}

impl Default for ProfileSettings {
    fn default() -> Self {
        Self {
            shoot: ShootParams::default(),
            fate_radius: 40.0,
            r_match: 4.0,
            r_far: 40.0,
            residual_tol: 1e-6,
            max_newton: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum ProfileSource {
    /// Closed form `2 / (2 + r^2)`.
    Exact,
    /// Inner shot matched to the outer solution seeded by the tail series.
    Matched { r_match: f64, r_far: f64, ode: OdeOptions },
    /// Samples read back from storage.
    Tabulated,
}

/// A certified profile sampled on a grid together with its derivative.
#[derive(Debug, Clone)]
pub struct Profile {
    n: usize,
    a: f64,
    tail_c: f64,
    phi: RadialField,
    dphi: RadialField,
    residual_sup: f64,
    source: ProfileSource,
}

impl Profile {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `Phi(0)`.
    pub fn a(&self) -> f64 {
        self.a
    }

    /// `lim r^2 Phi(r)`.
    pub fn tail_c(&self) -> f64 {
        self.tail_c
    }

    pub fn phi(&self) -> &RadialField {
        &self.phi
    }

    pub fn dphi(&self) -> &RadialField {
        &self.dphi
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.phi.grid()
    }

    pub fn residual_sup(&self) -> f64 {
        self.residual_sup
    }

    pub fn source(&self) -> &ProfileSource {
        &self.source
    }

    /// `U = 6 Phi + 2 r Phi'`.
    pub fn density(&self) -> RadialField {
        density_from_parts(&self.phi, &self.dphi)
    }

    pub fn residual(&self) -> Result<RadialField> {
        stationary_residual_with_derivative(&self.phi, &self.dphi)
    }

    /// `(Phi, Phi')` at any radius: closed form, quintic Hermite
    /// interpolation between nodes, or the tail series beyond the grid.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        let r = r.abs();
        if let ProfileSource::Exact = self.source {
            let q = 2.0 + r * r;
            return (2.0 / q, -4.0 * r / (q * q));
        }
        let grid = self.phi.grid();
        if r >= grid.r_max() {
            return series_eval(self.tail_c, r);
        }
        let i = grid.locate(r);
        let nodes = grid.nodes();
        let (r0, r1) = (nodes[i], nodes[i + 1]);
        let h = r1 - r0;
        let t = (r - r0) / h;
        let (p0, p1) = (self.phi.values()[i], self.phi.values()[i + 1]);
        let (d0, d1) = (self.dphi.values()[i], self.dphi.values()[i + 1]);
        let (s0, s1) = (profile_rhs(r0, p0, d0), profile_rhs(r1, p1, d1));
        let (t2, t3) = (t * t, t * t * t);
        let (t4, t5) = (t3 * t, t3 * t2);
        let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
        let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
        let h2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
        let h3 = 1.0 - h0;
        let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
        let h5 = 0.5 * (t3 - 2.0 * t4 + t5);
        let g0 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
        let g1 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
        let g2 = 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4);
        let g3 = -g0;
        let g4 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
        let g5 = 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4);
        let p = h0 * p0 + h1 * h * d0 + h2 * h * h * s0 + h3 * p1 + h4 * h * d1 + h5 * h * h * s1;
        let dp = (g0 * p0 + g1 * h * d0 + g2 * h * h * s0 + g3 * p1 + g4 * h * d1 + g5 * h * h * s1) / h;
        (p, dp)
    }

    /// The same profile sampled on another grid.
    pub fn resample(&self, grid: &Arc<RadialGrid>) -> Result<Profile> {
        if grid.same_nodes(self.grid()) {
            return Ok(self.clone());
        }
        match self.source {
            ProfileSource::Exact => Ok(phi0_exact(grid)),
            ProfileSource::Matched { r_match, r_far, ode } => {
                let (phi, dphi) = sample_matched(grid, self.a, self.tail_c, r_match, r_far.max(grid.r_max()), &ode)?;
                Profile::assemble(self.n, self.a, self.tail_c, phi, dphi, self.source.clone())
            }
            ProfileSource::Tabulated => domain("tabulated profile cannot be resampled on a different grid"),
        }
    }

    /// Profile from stored samples.
    pub fn from_samples(n: usize, tail_c: f64, phi: RadialField, dphi: RadialField) -> Result<Profile> {
        phi.check_same_grid(&dphi)?;
        if phi.parity() != Parity::Even {
            return param("profile samples must be even");
        }
        let grid = dphi.grid().clone();
        let dphi = RadialField::raw(&grid, dphi.into_values(), Parity::Odd);
        let a = phi.values()[0];
        Profile::assemble(n, a, tail_c, phi, dphi, ProfileSource::Tabulated)
    }

    /// Profile from stored samples with a known origin, so it can still be
    /// resampled.
    pub(crate) fn restore(
        n: usize,
        a: f64,
        tail_c: f64,
        phi: RadialField,
        dphi: RadialField,
        source: ProfileSource,
    ) -> Result<Profile> {
        let grid = phi.grid().clone();
        let dphi = RadialField::raw(&grid, dphi.into_values(), Parity::Odd);
        Profile::assemble(n, a, tail_c, phi, dphi, source)
    }

    fn assemble(
        n: usize,
        a: f64,
        tail_c: f64,
        phi: RadialField,
        dphi: RadialField,
        source: ProfileSource,
    ) -> Result<Profile> {
        let residual_sup = stationary_residual_with_derivative(&phi, &dphi)?.norm_inf();
        Ok(Profile { n, a, tail_c, phi, dphi, residual_sup, source })
    }
}

/// The explicit ground-state profile `Phi_0 = 2 / (2 + r^2)`.
pub fn phi0_exact(grid: &Arc<RadialGrid>) -> Profile {
    let phi = RadialField::from_fn(grid, |r| 2.0 / (2.0 + r * r));
    let dphi = RadialField::raw(
        grid,
        grid.nodes()
            .iter()
            .map(|r| {
                let q = 2.0 + r * r;
                -4.0 * r / (q * q)
            })
            .collect(),
        Parity::Odd,
    );
    Profile::assemble(0, 1.0, 2.0, phi, dphi, ProfileSource::Exact).expect("closed-form samples are well formed")
}

/// `U_0 = 4 (6 + r^2) / (2 + r^2)^2`, the density of `Phi_0`.
pub fn u0_exact(r: f64) -> f64 {
    let q = 2.0 + r * r;
    4.0 * (6.0 + r * r) / (q * q)
}

pub fn build_measure(profile: &Profile, grid: &Arc<RadialGrid>) -> Result<WeightedMeasure> {
    if grid.r_max() > profile.grid().r_max() {
        if let ProfileSource::Tabulated = profile.source {
            return domain("profile samples do not cover the grid");
        }
    }
    let p = profile.resample(grid)?;
    WeightedMeasure::from_phi(&p.phi)
}

fn inner_at(a: f64, r_m: f64, ode: &OdeOptions) -> Result<[f64; 2]> {
    let (eps, p0, dp0) = taylor_start(a);
    if r_m <= eps {
        let (p, dp) = taylor_eval(a, r_m);
        return Ok([p, dp]);
    }
    let run = integrate(&mut |r, y: &[f64; 2]| [y[1], profile_rhs(r, y[0], y[1])], eps, [p0, dp0], &[r_m], ode, &mut |_, _| false)?;
    Ok(run.outputs[0])
}

fn outer_at(c: f64, r_m: f64, r_far: f64, ode: &OdeOptions) -> Result<[f64; 2]> {
    let (p, dp) = series_eval(c, r_far);
    let run = integrate(&mut |r, y: &[f64; 2]| [y[1], profile_rhs(r, y[0], y[1])], r_far, [p, dp], &[r_m], ode, &mut |_, _| false)?;
    Ok(run.outputs[0])
}

fn mismatch(a: f64, c: f64, r_m: f64, r_far: f64, ode: &OdeOptions) -> Result<[f64; 2]> {
    let i = inner_at(a, r_m, ode)?;
    let o = outer_at(c, r_m, r_far, ode)?;
    Ok([i[0] - o[0], r_m * (i[1] - o[1])])
}

/// Newton iteration on `(a, c)` so that the inner and outer solutions agree
/// in value and slope at `r_match`. Returns `(a, c, |mismatch|)`.
pub fn match_profile(a0: f64, c0: f64, settings: &ProfileSettings) -> Result<(f64, f64, f64)> {
    let (r_m, r_far, ode) = (settings.r_match, settings.r_far, &settings.shoot.ode);
    let (mut a, mut c) = (a0, c0);
    let mut f = mismatch(a, c, r_m, r_far, ode)?;
    let scale = 1.0 / (r_m * r_m);
    for _ in 0..settings.max_newton {
        let size = f[0].abs().max(f[1].abs());
        if size < 1e-14 * scale {
            return Ok((a, c, size));
        }
        let da = 1e-7 * a.abs().max(1.0);
        let dc = 1e-7;
        let fa = mismatch(a + da, c, r_m, r_far, ode)?;
        let fc = mismatch(a, c + dc, r_m, r_far, ode)?;
        let j = [[(fa[0] - f[0]) / da, (fc[0] - f[0]) / dc], [(fa[1] - f[1]) / da, (fc[1] - f[1]) / dc]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if !det.is_finite() || det == 0.0 {
            return Err(Error::Certification("singular matching Jacobian".into()));
        }
        let mut sa = (f[0] * j[1][1] - f[1] * j[0][1]) / det;
        let mut sc = (j[0][0] * f[1] - j[1][0] * f[0]) / det;
        // Damp steps that would leave the admissible region.
        let lim = 0.2 * a.abs().max(1e-3);
        if sa.abs() > lim {
            let k = lim / sa.abs();
            sa *= k;
            sc *= k;
        }
        let mut step = 1.0;
        loop {
            let (an, cn) = (a - step * sa, c - step * sc);
            match mismatch(an, cn, r_m, r_far, ode) {
                Ok(fn_) if fn_[0].abs().max(fn_[1].abs()) < size || step < 1e-3 => {
                    a = an;
                    c = cn;
                    f = fn_;
                    break;
                }
                _ if step < 1e-3 => return Err(Error::Certification("matching line search failed".into())),
                _ => step *= 0.5,
            }
        }
        if sa.abs() <= 4.0 * f64::EPSILON * a.abs() && sc.abs() <= 4.0 * f64::EPSILON * c.abs().max(1.0) {
            let size = f[0].abs().max(f[1].abs());
            return Ok((a, c, size));
        }
    }
    let size = f[0].abs().max(f[1].abs());
    if size < 1e-11 * scale {
        Ok((a, c, size))
    } else {
        Err(Error::Certification(format!("matching did not converge, mismatch {size:e}")))
    }
}

/// Samples the matched profile `(a, c)` on `grid`.
pub fn sample_matched(
    grid: &Arc<RadialGrid>,
    a: f64,
    c: f64,
    r_match: f64,
    r_far: f64,
    ode: &OdeOptions,
) -> Result<(RadialField, RadialField)> {
    let nodes = grid.nodes();
    let n = nodes.len();
    let mut phi = vec![0.0; n];
    let mut dphi = vec![0.0; n];
    let (eps, p0, dp0) = taylor_start(a);
    let split = nodes.partition_point(|&r| r <= r_match);
    let first_int = nodes.partition_point(|&r| r < eps);
    for i in 0..first_int.min(split) {
        let (p, dp) = taylor_eval(a, nodes[i]);
        phi[i] = p;
        dphi[i] = dp;
    }
    if split > first_int {
        let targets = &nodes[first_int..split];
        let run = integrate(&mut |r, y: &[f64; 2]| [y[1], profile_rhs(r, y[0], y[1])], eps, [p0, dp0], targets, ode, &mut |_, _| false)?;
        for (k, y) in run.outputs.iter().enumerate() {
            phi[first_int + k] = y[0];
            dphi[first_int + k] = y[1];
        }
    }
    if split < n {
        let r_far = r_far.max(nodes[n - 1]);
        let (p, dp) = series_eval(c, r_far);
        let targets: Vec<f64> = nodes[split..].iter().rev().copied().collect();
        let run = integrate(&mut |r, y: &[f64; 2]| [y[1], profile_rhs(r, y[0], y[1])], r_far, [p, dp], &targets, ode, &mut |_, _| false)?;
        for (k, y) in run.outputs.iter().enumerate() {
            phi[n - 1 - k] = y[0];
            dphi[n - 1 - k] = y[1];
        }
    }
    Ok((RadialField::raw(grid, phi, Parity::Even), RadialField::raw(grid, dphi, Parity::Odd)))
}

/// Fate of the trajectory with `Phi(0) = a` when followed far out; exact
/// profiles are the only trajectories that never trigger an event.
pub fn fate(a: f64, settings: &ProfileSettings) -> Result<ShootClass> {
    let params = ShootParams { r_end: settings.fate_radius, ..settings.shoot };
    let out = shoot_profile(a, &params)?;
    Ok(match out.class {
        ShootClass::Overshoot | ShootClass::Blowup => out.class,
        _ => ShootClass::DecayLike,
    })
}

/// Locates the `n`-th profile by bisecting the classification transition
/// inside `bracket`, polishes it by two-sided matching, samples it on `grid`
/// and certifies it.
pub fn find_profile(
    n: usize,
    bracket: (f64, f64),
    tol: f64,
    grid: &Arc<RadialGrid>,
    settings: &ProfileSettings,
) -> Result<Profile> {
    if !(tol > 0.0 && tol.is_finite()) {
        return param(format!("bisection tolerance must be positive, got {tol}"));
    }
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return param(format!("invalid bracket ({lo}, {hi})"));
    }
    let c_lo = fate(lo, settings)?;
    let c_hi = fate(hi, settings)?;
    let a_b = if c_lo == ShootClass::DecayLike {
        lo
    } else if c_hi == ShootClass::DecayLike {
        hi
    } else {
        if c_lo == c_hi {
            return Err(Error::Bracket(format!(
                "both ends of ({lo}, {hi}) classify as {c_lo:?}; no transition inside"
            )));
        }
        loop {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= tol || mid <= lo || mid >= hi {
                break mid;
            }
            match fate(mid, settings)? {
                ShootClass::DecayLike => break mid,
                c if c == c_lo => lo = mid,
                _ => hi = mid,
            }
        }
    };
    let inner = inner_at(a_b, settings.r_match, &settings.shoot.ode)?;
    let c0 = (settings.r_match * settings.r_match * inner[0]).clamp(0.05, 2.5);
    let (a, c, _) = match_profile(a_b, c0, settings)?;
    if (a - a_b).abs() > 1e-6 * a_b.max(1.0) {
        return Err(Error::Certification(format!(
            "matched Phi(0) = {a} drifted away from the bisection value {a_b}"
        )));
    }
    if !(c > 0.0 && c <= 2.0 + 1e-9) {
        return Err(Error::Certification(format!("tail coefficient {c} outside (0, 2]")));
    }
    let r_far = settings.r_far.max(grid.r_max());
    let (phi, dphi) = sample_matched(grid, a, c, settings.r_match, r_far, &settings.shoot.ode)?;
    let source = ProfileSource::Matched { r_match: settings.r_match, r_far: settings.r_far, ode: settings.shoot.ode };
    let profile = Profile::assemble(n, a, c, phi, dphi, source)?;
    if let Some(i) = profile.phi.values().iter().position(|v| *v <= 0.0) {
        return Err(Error::Certification(format!("profile not positive at r = {}", grid.nodes()[i])));
    }
    if profile.residual_sup > settings.residual_tol {
        return Err(Error::Certification(format!(
            "stationary residual {:e} exceeds {:e}",
            profile.residual_sup, settings.residual_tol
        )));
    }
    Ok(profile)
}

/// Brackets `(a_k, a_{k+1})` of consecutive ladder points with different fates.
pub fn scan_transitions(lo: f64, hi: f64, points: usize, settings: &ProfileSettings) -> Result<Vec<(f64, f64)>> {
    if !(lo > 0.0 && hi > lo) || points < 2 {
        return param("scan needs 0 < lo < hi and at least two points");
    }
    let ratio = (hi / lo).ln() / (points - 1) as f64;
    let ladder: Vec<f64> = (0..points).map(|k| lo * (ratio * k as f64).exp()).collect();
    let fates = ladder.iter().map(|&a| fate(a, settings)).collect::<Result<Vec<_>>>()?;
    Ok(ladder
        .windows(2)
        .zip(fates.windows(2))
        .filter(|(_, f)| f[0] != f[1])
        .map(|(a, _)| (a[0], a[1]))
        .collect())
}

/// Scans `[lo, hi]`, certifies every transition that carries a decaying
/// profile and indexes the survivors in increasing `Phi(0)`. Transitions
/// onto the constant state `1/6` fail certification and are dropped.
pub fn locate_profiles(
    lo: f64,
    hi: f64,
    points: usize,
    tol: f64,
    grid: &Arc<RadialGrid>,
    settings: &ProfileSettings,
) -> Result<Vec<Profile>> {
    let mut found = Vec::new();
    for br in scan_transitions(lo, hi, points, settings)? {
        match find_profile(found.len(), br, tol, grid, settings) {
            Ok(p) => found.push(p),
            Err(Error::Certification(_)) | Err(Error::Integration { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(found)
}
