//! Finite-difference, interpolation and cumulative-quadrature stencils on a
//! radial grid. Points left of the origin are mirror images of interior
//! nodes, so fields of known parity get symmetric stencils at `r = 0`.

use crate::field::Parity;

const DERIV_WIDTH: usize = 7;
const INTERP_WIDTH: usize = 6;

/// Fornberg's recursion: `c[k][j]` is the weight of `xs[j]` in the
/// approximation of the `k`-th derivative at `x0`, for `k <= m`.
pub fn fornberg(x0: f64, xs: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// A stencil point: node index plus whether it is the mirror image.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Tap {
    pub idx: usize,
    pub ghost: bool,
}

impl Tap {
    #[inline]
    pub fn value(&self, f: &[f64], parity: Parity) -> f64 {
        let v = f[self.idx];
        if self.ghost && parity == Parity::Odd {
            -v
        } else {
            v
        }
    }
}

#[derive(Debug)]
pub(crate) struct DerivStencil {
    pub taps: Vec<Tap>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

#[derive(Debug)]
pub(crate) struct IntervalStencil {
    pub taps: Vec<Tap>,
    pub w: Vec<f64>,
    /// Near the origin: taps and weights of an interpolant in `s^2` for
    /// even integrands and of `s` times one for odd integrands.
    pub origin: Option<(Vec<usize>, Vec<f64>, Vec<usize>, Vec<f64>)>,
}

#[derive(Debug)]
pub(crate) struct Stencils {
    pub deriv: Vec<DerivStencil>,
    pub interval: Vec<IntervalStencil>,
}

/// Parity-aware intervals: the first few, and all ending below this radius.
const ORIGIN_INTERVALS: usize = 5;
const ORIGIN_RADIUS: f64 = 1.0;

/// Six-point Gauss-Legendre rule on `[-1, 1]`.
const GAUSS6: [(f64, f64); 6] = [
    (-0.932_469_514_203_152_1, 0.171_324_492_379_170_3),
    (-0.661_209_386_466_264_5, 0.360_761_573_048_138_6),
    (-0.238_619_186_083_196_9, 0.467_913_934_572_691_0),
    (0.238_619_186_083_196_9, 0.467_913_934_572_691_0),
    (0.661_209_386_466_264_5, 0.360_761_573_048_138_6),
    (0.932_469_514_203_152_1, 0.171_324_492_379_170_3),
];

/// Weights for `int` over interval `i` of an even (odd) integrand `g`,
/// interpolating `g` (`g / s`) as a polynomial in `s^2` on six nodes.
fn origin_weights(nodes: &[f64], i: usize, odd: bool) -> (Vec<usize>, Vec<f64>) {
    let first = usize::from(odd);
    let k0 = i.saturating_sub(2).max(first).min(nodes.len() - INTERP_WIDTH);
    let idx: Vec<usize> = (k0..k0 + INTERP_WIDTH).collect();
    let xs: Vec<f64> = idx.iter().map(|&k| nodes[k] * nodes[k]).collect();
    let (a, b) = (nodes[i], nodes[i + 1]);
    let (half, mid) = (0.5 * (b - a), 0.5 * (a + b));
    let mut w = vec![0.0; INTERP_WIDTH];
    for (t, gw) in GAUSS6 {
        let s = mid + half * t;
        let l = fornberg(s * s, &xs, 0).swap_remove(0);
        for (j, &k) in idx.iter().enumerate() {
            let scale = if odd { s / nodes[k] } else { 1.0 };
            w[j] += half * gw * l[j] * scale;
        }
    }
    (idx, w)
}

/// Virtual node window `[lo, lo + width)` around `center`, where negative
/// virtual indices are mirror images. Shifted inward at the outer edge.
fn window(nodes: &[f64], center: isize, width: usize) -> (Vec<Tap>, Vec<f64>) {
    let n = nodes.len() as isize;
    let width = width.min((2 * n - 1) as usize) as isize;
    let mut lo = center - (width - 1) / 2;
    if lo + width - 1 > n - 1 {
        lo = n - width;
    }
    if lo < -(n - 1) {
        lo = -(n - 1);
    }
    let mut taps = Vec::with_capacity(width as usize);
    let mut xs = Vec::with_capacity(width as usize);
    for k in lo..lo + width {
        if k < 0 {
            taps.push(Tap { idx: (-k) as usize, ghost: true });
            xs.push(-nodes[(-k) as usize]);
        } else {
            taps.push(Tap { idx: k as usize, ghost: false });
            xs.push(nodes[k as usize]);
        }
    }
    (taps, xs)
}

/// Taps and weights of the interpolant through the window around interval
/// `i`, evaluated at `r`.
pub(crate) fn interp_weights(nodes: &[f64], i: usize, r: f64) -> (Vec<Tap>, Vec<f64>) {
    let (taps, xs) = window(nodes, i as isize, INTERP_WIDTH);
    let w = fornberg(r, &xs, 0).swap_remove(0);
    (taps, w)
}

impl Stencils {
    pub fn build(nodes: &[f64]) -> Self {
        let n = nodes.len();
        let deriv = (0..n)
            .map(|i| {
                let (taps, xs) = window(nodes, i as isize, DERIV_WIDTH);
                let mut c = fornberg(nodes[i], &xs, 2);
                let d2 = c.pop().unwrap();
                let d1 = c.pop().unwrap();
                DerivStencil { taps, d1, d2 }
            })
            .collect();
        // Three-point Gauss-Legendre integrates the degree-5 interpolant exactly.
        let g = (0.6f64).sqrt();
        let gauss = [(-g, 5.0 / 9.0), (0.0, 8.0 / 9.0), (g, 5.0 / 9.0)];
        let interval = (0..n - 1)
            .map(|i| {
                let (taps, xs) = window(nodes, i as isize, INTERP_WIDTH);
                let (a, b) = (nodes[i], nodes[i + 1]);
                let half = 0.5 * (b - a);
                let mid = 0.5 * (a + b);
                let mut w = vec![0.0; xs.len()];
                for (t, gw) in gauss {
                    let l = fornberg(mid + half * t, &xs, 0).swap_remove(0);
                    for (wj, lj) in w.iter_mut().zip(l) {
                        *wj += half * gw * lj;
                    }
                }
                let origin = ((i < ORIGIN_INTERVALS || b <= ORIGIN_RADIUS) && n > INTERP_WIDTH).then(|| {
                    let (ie, we) = origin_weights(nodes, i, false);
                    let (io, wo) = origin_weights(nodes, i, true);
                    (ie, we, io, wo)
                });
                IntervalStencil { taps, w, origin }
            })
            .collect();
        Stencils { deriv, interval }
    }

    pub fn first(&self, f: &[f64], parity: Parity, i: usize) -> f64 {
        let s = &self.deriv[i];
        s.taps.iter().zip(&s.d1).map(|(t, w)| w * t.value(f, parity)).sum()
    }

    pub fn second(&self, f: &[f64], parity: Parity, i: usize) -> f64 {
        let s = &self.deriv[i];
        s.taps.iter().zip(&s.d2).map(|(t, w)| w * t.value(f, parity)).sum()
    }

    pub fn interval_integral(&self, g: &[f64], parity: Parity, i: usize) -> f64 {
        let s = &self.interval[i];
        if let Some((ie, we, io, wo)) = &s.origin {
            let (idx, w) = match parity {
                Parity::Even => (ie, we),
                Parity::Odd => (io, wo),
            };
            return idx.iter().zip(w).map(|(&k, w)| w * g[k]).sum();
        }
        s.taps.iter().zip(&s.w).map(|(t, w)| w * t.value(g, parity)).sum()
    }
}
