use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

use super::{DiscreteOperator, EigenPair, SpectrumReport};
use crate::error::{domain, param, Error, Result};
use crate::field::RadialField;
use crate::grid::RadialGrid;
use crate::measure::{inner_product, norm, norm_h1, weighted_dot, WeightedMeasure};

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct TailExponent {
    /// Least-squares slope of `ln |psi|` against `ln r`.
    pub slope: f64,
    /// `2 (lambda - 1)`.
    pub expected: f64,
}

/// Power-law decay rate of an eigenfunction over `window`.
pub fn tail_exponent_check(pair: &EigenPair, window: (f64, f64)) -> Result<TailExponent> {
    if pair.eigenvalue >= 0.0 {
        return domain(format!(
            "tail exponent is defined for negative eigenvalues, got {}",
            pair.eigenvalue
        ));
    }
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) {
        return param(format!("invalid window ({lo}, {hi})"));
    }
    let psi = &pair.eigenfunction;
    let r_max = psi.grid().r_max();
    if hi > 0.75 * r_max {
        return domain(format!("window end {hi} lies in the truncation layer of a grid ending at {r_max}"));
    }
    let pts: Vec<(f64, f64)> = psi
        .nodes()
        .iter()
        .zip(psi.values())
        .filter(|(r, _)| **r >= lo && **r <= hi)
        .map(|(r, v)| (*r, *v))
        .collect();
    if pts.len() < 3 {
        return domain("window contains fewer than 3 samples");
    }
    let sign = pts[0].1.signum();
    if pts.iter().any(|(_, v)| v.signum() != sign || v.abs() < 1e-280) {
        return domain("eigenfunction changes sign or underflows in the window");
    }
    let n = pts.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (r, v) in &pts {
        let (x, y) = (r.ln(), v.abs().ln());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    Ok(TailExponent { slope, expected: 2.0 * (pair.eigenvalue - 1.0) })
}

/// `(||r f||_rho, ||f||_{H^1_rho})`.
pub fn coercivity_check(f: &RadialField, m: &WeightedMeasure) -> Result<(f64, f64)> {
    let rf = f.map(|r, v| r * v);
    Ok((norm(&rf, m)?, norm_h1(f, m)?))
}

/// Quadratic-form data for one test field.
#[derive(Debug, Clone, Copy)]
pub struct GapSample {
    /// `(L f, f) / ||f||^2`.
    pub l2_ratio: f64,
    /// `(L f, f) / ||f||^2_{H^1}`.
    pub h1_ratio: f64,
}

/// Evaluates the quadratic form on `f`, which must vanish at `r_max` and be
/// orthogonal to every nonpositive eigenfunction listed in `report`.
pub fn gap_quadratic_form(op: &DiscreteOperator, report: &SpectrumReport, f: &RadialField) -> Result<GapSample> {
    if !report.complete {
        return Err(Error::Precondition(
            "spectrum report does not reach a positive eigenvalue; nonpositive modes may be missing".into(),
        ));
    }
    let m = op.measure();
    let nf = norm(f, m)?;
    if nf == 0.0 {
        return param("test field is zero");
    }
    if f.values()[f.values().len() - 1] != 0.0 {
        return Err(Error::Precondition("test field must vanish at r_max".into()));
    }
    for pair in report.nonpositive() {
        let c = inner_product(f, &pair.eigenfunction, m)?;
        if c.abs() > 1e-9 * nf {
            return Err(Error::Precondition(format!(
                "test field has component {c:e} along eigenfunction {}",
                pair.index
            )));
        }
    }
    let q = op.quadratic_form(f.values());
    let n2 = nf * nf;
    let g2 = op.gradient_energy(f.values());
    Ok(GapSample { l2_ratio: q / n2, h1_ratio: q / (n2 + g2) })
}

/// Smooth random field: a few Gaussian bumps plus a decaying polynomial part,
/// zero at `r_max`.
pub fn random_smooth_field(grid: &Arc<RadialGrid>, rng: &mut impl Rng) -> RadialField {
    let r_max = grid.r_max();
    let bumps: Vec<(f64, f64, f64)> = (0..4)
        .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..0.5 * r_max), rng.gen_range(0.3..3.0)))
        .collect();
    let poly: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let width = rng.gen_range(2.0..6.0);
    let mut f = RadialField::from_fn(grid, |r| {
        let b: f64 = bumps
            .iter()
            .map(|(a, c, w)| a * ((-(r - c) * (r - c) / (2.0 * w * w)).exp() + (-(r + c) * (r + c) / (2.0 * w * w)).exp()))
            .sum();
        let x = r * r;
        let p = poly[0] + poly[1] * x / 10.0 + poly[2] * x * x / 100.0;
        b + p * (-x / (width * width)).exp()
    });
    let n = f.values().len();
    f.values_mut()[n - 1] = 0.0;
    f
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct GapCheck {
    pub trials: usize,
    /// First positive eigenvalue of the discrete operator.
    pub gap: f64,
    pub min_l2_ratio: f64,
    pub min_h1_ratio: f64,
    /// Trials with `(L f, f) < gap ||f||^2` beyond round-off.
    pub violations: usize,
}

/// Checks `(L f, f) >= c ||f||^2` on `trials` random fields projected away
/// from the nonpositive modes, and reports the `H^1`-strengthened constant.
pub fn spectral_gap_projection_check(
    op: &DiscreteOperator,
    report: &SpectrumReport,
    trials: usize,
    seed: u64,
) -> Result<GapCheck> {
    let gap = report
        .gap
        .filter(|_| report.complete)
        .ok_or_else(|| Error::Precondition("spectrum report has no positive eigenvalue".into()))?;
    if trials == 0 {
        return param("need at least one trial");
    }
    let grid = op.grid();
    let m = op.measure();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut check = GapCheck { trials, gap, min_l2_ratio: f64::INFINITY, min_h1_ratio: f64::INFINITY, violations: 0 };
    for _ in 0..trials {
        let mut f = random_smooth_field(grid, &mut rng);
        for _ in 0..2 {
            for pair in report.nonpositive() {
                let psi = pair.eigenfunction.values();
                let c = weighted_dot(f.values(), psi, m);
                f.values_mut().iter_mut().zip(psi).for_each(|(v, p)| *v -= c * p);
            }
        }
        let s = gap_quadratic_form(op, report, &f)?;
        check.min_l2_ratio = check.min_l2_ratio.min(s.l2_ratio);
        check.min_h1_ratio = check.min_h1_ratio.min(s.h1_ratio);
        if s.l2_ratio < gap * (1.0 - 1e-9) - 1e-12 {
            check.violations += 1;
        }
    }
    Ok(check)
}
