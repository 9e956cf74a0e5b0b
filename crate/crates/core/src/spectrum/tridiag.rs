//! Tridiagonal kernels: Sturm counts, bisection and LU with partial pivoting.

use crate::error::{Error, Result};

/// Number of eigenvalues below `sigma` of the symmetric tridiagonal matrix
/// with diagonal `d` and squared off-diagonal `e2`.
pub fn sturm_count(d: &[f64], e2: &[f64], sigma: f64) -> usize {
    let mut count = 0;
    let mut q = d[0] - sigma;
    let tiny = f64::MIN_POSITIVE.sqrt();
    for i in 0..d.len() {
        if i > 0 {
            q = d[i] - sigma - e2[i - 1] / q;
        }
        if q == 0.0 {
            q = -tiny;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

pub fn gershgorin(d: &[f64], e2: &[f64]) -> (f64, f64) {
    let n = d.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let mut rad = 0.0;
        if i > 0 {
            rad += e2[i - 1].sqrt();
        }
        if i + 1 < n {
            rad += e2[i].sqrt();
        }
        lo = lo.min(d[i] - rad);
        hi = hi.max(d[i] + rad);
    }
    (lo, hi)
}

/// The `k`-th smallest eigenvalue (0-based), bisected to full precision.
pub fn bisect_eigenvalue(d: &[f64], e2: &[f64], k: usize, bounds: (f64, f64)) -> f64 {
    let (mut lo, mut hi) = bounds;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(d, e2, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// LU factorization of a general tridiagonal matrix with row interchanges.
#[derive(Debug, Clone)]
pub struct TridiagLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    ipiv: Vec<usize>,
}

impl TridiagLu {
    /// `lower[i] = A[i+1][i]`, `upper[i] = A[i][i+1]`.
    pub fn factor(lower: &[f64], diag: &[f64], upper: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut dl = lower.to_vec();
        let mut d = diag.to_vec();
        let mut du = upper.to_vec();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut ipiv: Vec<usize> = (0..n).collect();
        if n == 0 {
            return Ok(Self { dl, d, du, du2, ipiv });
        }
        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                if d[i] != 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                ipiv[i] = i + 1;
            }
        }
        if let Some(i) = d.iter().position(|v| *v == 0.0 || !v.is_finite()) {
            return Err(Error::Numerical(format!("singular tridiagonal matrix (pivot {i})")));
        }
        Ok(Self { dl, d, du, du2, ipiv })
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.d.len();
        if n == 0 {
            return;
        }
        for i in 0..n - 1 {
            let ip = self.ipiv[i];
            let temp = b[2 * i + 1 - ip] - self.dl[i] * b[ip];
            b[i] = b[ip];
            b[i + 1] = temp;
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sturm_bisection_on_laplacian() {
        let n = 50;
        let d = vec![2.0; n];
        let e2 = vec![1.0; n - 1];
        let b = gershgorin(&d, &e2);
        for k in [0, 7, 49] {
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64).cos();
            assert!((bisect_eigenvalue(&d, &e2, k, b) - exact).abs() < 1e-14);
        }
    }

    #[test]
    fn pivoted_solve_matches_product() {
        let lower = [3.0, -1.0, 4.0, 0.5];
        let diag = [0.0, 1.0, -2.0, 0.1, 3.0];
        let upper = [1.0, 2.0, -1.0, 7.0];
        let x = [1.0, -2.0, 0.5, 3.0, -1.0];
        let mut b: Vec<f64> = (0..5)
            .map(|i| {
                let mut s = diag[i] * x[i];
                if i > 0 {
                    s += lower[i - 1] * x[i - 1];
                }
                if i < 4 {
                    s += upper[i] * x[i + 1];
                }
                s
            })
            .collect();
        TridiagLu::factor(&lower, &diag, &upper).unwrap().solve_in_place(&mut b);
        for (a, e) in b.iter().zip(x) {
            assert!((a - e).abs() < 1e-13);
        }
    }
}
