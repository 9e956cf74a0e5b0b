//! Far-field solutions of `(L - lambda) u = 0`. With `z = r^2 / 4` the
//! equation becomes Kummer's equation; `r^{-3} M(a, b, z)` with
//! `(a, b) = (-1/2 - lambda, -1/2)` is one solution.

use std::f64::consts::PI;

use crate::error::{domain, param, Result};

/// Kummer parameters `(a, b)` for the singular branch.
pub fn kummer_reduce(lambda: f64) -> (f64, f64) {
    (-0.5 - lambda, -0.5)
}

/// Gamma function by the Lanczos approximation (g = 7, 9 terms).
pub fn gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let s = (PI * x).sin();
        if s == 0.0 {
            return f64::INFINITY;
        }
        return PI / (s * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = C[0];
    for (i, c) in C.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

/// Confluent hypergeometric series `M(a, b, z)`.
pub fn kummer_m_series(a: f64, b: f64, z: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..10_000 {
        let kf = k as f64;
        term *= (a + kf) / (b + kf) * z / (kf + 1.0);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() && kf > z {
            break;
        }
    }
    sum
}

/// Leading asymptotics of the two branches at large `r`, each with its
/// first correction:
/// `u1 ~ r^p (1 + alpha / r^2)` with `p = 2 (lambda - 1)` and
/// `u2 ~ r^q e^{r^2/4} (1 + beta / r^2)` with `q = -3 - 2 lambda`.
#[derive(Debug, Clone, Copy)]
pub struct FundamentalPair {
    pub lambda: f64,
    pub window: (f64, f64),
    pub p: f64,
    pub alpha: f64,
    pub q: f64,
    pub beta: f64,
    /// `W = u1' u2 - u2' u1 ~ C r^{-4} e^{r^2/4}`.
    pub wronskian_c: f64,
}

const MIN_WINDOW_RADIUS: f64 = 3.0;

pub fn fundamental_pair(lambda: f64, window: (f64, f64)) -> Result<FundamentalPair> {
    if !(lambda < 0.0) {
        return param(format!("fundamental pair needs lambda < 0, got {lambda}"));
    }
    if !(window.0 >= MIN_WINDOW_RADIUS && window.1 > window.0) {
        return domain(format!(
            "asymptotic window ({}, {}) must satisfy {MIN_WINDOW_RADIUS} <= r0 < r1",
            window.0, window.1
        ));
    }
    let p = 2.0 * (lambda - 1.0);
    let q = -3.0 - 2.0 * lambda;
    Ok(FundamentalPair { lambda, window, p, alpha: -p * (p + 3.0), q, beta: q * (q + 3.0), wronskian_c: -0.5 })
}

impl FundamentalPair {
    /// `(u1, u1')`.
    pub fn u1(&self, r: f64) -> (f64, f64) {
        let (p, a) = (self.p, self.alpha);
        let rp = r.powf(p);
        (rp * (1.0 + a / (r * r)), rp * (p / r + a * (p - 2.0) / (r * r * r)))
    }

    /// `(g, g')` with `u2 = e^{r^2/4} g`.
    pub fn u2_scaled(&self, r: f64) -> (f64, f64) {
        let (q, b) = (self.q, self.beta);
        let rq = r.powf(q);
        (rq * (1.0 + b / (r * r)), rq * (q / r + b * (q - 2.0) / (r * r * r)))
    }

    /// `W(r) / (C r^{-4} e^{r^2/4})`, which tends to 1.
    pub fn wronskian_ratio(&self, r: f64) -> f64 {
        let (u, du) = self.u1(r);
        let (g, dg) = self.u2_scaled(r);
        (du * g - (dg + 0.5 * r * g) * u) / (self.wronskian_c * r.powi(-4))
    }

    /// `u2` expressed through the singular Kummer solution:
    /// `r^{-3} M(a, b, r^2/4) ~ prefactor * u2`.
    pub fn m_prefactor(&self) -> f64 {
        let (a, b) = kummer_reduce(self.lambda);
        gamma(b) / gamma(a) * 4f64.powf(b - a)
    }
}
