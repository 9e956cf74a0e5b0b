//! Dormand-Prince 5(4) integrator with step-size control. Output is
//! produced at caller-supplied abscissae, which the stepper lands on exactly.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-12, atol: 1e-14, h_init: 1e-4, h_min: 1e-14, max_steps: 2_000_000 }
    }
}

#[derive(Debug, Clone)]
pub struct OdeRun<const N: usize> {
    /// Values at the requested abscissae that were reached.
    pub outputs: Vec<[f64; N]>,
    /// Every accepted step `(t, y)`, including the initial point.
    pub steps: Vec<(f64, [f64; N])>,
    /// Abscissa where the monitor requested a stop.
    pub stopped_at: Option<f64>,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn lin<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrates `y' = f(t, y)` from `t0` through the monotone list `targets`.
/// `monitor(t, y)` is called after every accepted step; returning `true`
/// stops the integration.
pub fn integrate<const N: usize>(
    f: &mut dyn FnMut(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    targets: &[f64],
    opts: &OdeOptions,
    monitor: &mut dyn FnMut(f64, &[f64; N]) -> bool,
) -> Result<OdeRun<N>> {
    let mut run = OdeRun { outputs: Vec::with_capacity(targets.len()), steps: vec![(t0, y0)], stopped_at: None };
    let Some(&t_last) = targets.last() else {
        return Ok(run);
    };
    let dir = if t_last >= t0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut h = opts.h_init.abs().max(opts.h_min) * dir;
    let mut next = 0;
    while next < targets.len() && (targets[next] - t) * dir <= 0.0 {
        run.outputs.push(y);
        next += 1;
    }
    let mut steps = 0usize;
    while next < targets.len() {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::Integration { at: t, reason: "step budget exhausted".into() });
        }
        let target = targets[next];
        let mut hit = false;
        if (t + h - target) * dir >= 0.0 {
            h = target - t;
            hit = true;
        }
        let k2 = f(t + C2 * h, &lin(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &lin(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &lin(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(t + C5 * h, &lin(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(t + h, &lin(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y_new = lin(&y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = f(t + h, &y_new);
        let mut err = 0.0;
        for i in 0..N {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err += (e / sc) * (e / sc);
        }
        let err = (err / N as f64).sqrt();
        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            h *= 0.25;
            if h.abs() < opts.h_min {
                return Err(Error::Integration { at: t, reason: "non-finite solution".into() });
            }
            continue;
        }
        if err <= 1.0 {
            t = if hit { target } else { t + h };
            y = y_new;
            k1 = k7;
            run.steps.push((t, y));
            while next < targets.len() && (targets[next] - t) * dir <= 0.0 {
                run.outputs.push(y);
                next += 1;
            }
            if monitor(t, &y) {
                run.stopped_at = Some(t);
                return Ok(run);
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            // A step shortened to land on a target says nothing about the
            // natural step size, so keep the previous one in that case.
            if !hit {
                h *= fac;
            } else if fac < 1.0 {
                h *= fac;
            }
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
        }
        if h.abs() < opts.h_min {
            return Err(Error::Integration { at: t, reason: "step size underflow".into() });
        }
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_to_tolerance() {
        let mut f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let targets: Vec<f64> = (1..=10).map(|k| k as f64).collect();
        let run = integrate(&mut f, 0.0, [1.0, 0.0], &targets, &OdeOptions::default(), &mut |_, _| false).unwrap();
        for (t, y) in targets.iter().zip(&run.outputs) {
            assert!((y[0] - t.cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn integrates_backwards_and_stops_on_monitor() {
        let mut f = |_t: f64, y: &[f64; 1]| [y[0]];
        let run = integrate(&mut f, 1.0, [1.0], &[0.0], &OdeOptions::default(), &mut |_, _| false).unwrap();
        assert!((run.outputs[0][0] - (-1.0f64).exp()).abs() < 1e-12);
        let run = integrate(&mut f, 0.0, [1.0], &[10.0], &OdeOptions::default(), &mut |_, y| y[0] > 2.0).unwrap();
        let stop = run.stopped_at.unwrap();
        assert!(stop > 2f64.ln() && stop < 1.0);
    }
}
