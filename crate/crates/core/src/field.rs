use std::sync::Arc;

use crate::error::{domain, param, Result};
use crate::grid::RadialGrid;
use crate::stencil::interp_weights;

/// Behaviour under `r -> -r`, used to build stencils across the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn flip(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }
}

/// Samples of a radial function on a grid.
#[derive(Debug, Clone)]
pub struct RadialField {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
    parity: Parity,
}

impl RadialField {
    pub fn new(grid: &Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        Self::with_parity(grid, values, Parity::Even)
    }

    pub fn with_parity(grid: &Arc<RadialGrid>, values: Vec<f64>, parity: Parity) -> Result<Self> {
        if values.len() != grid.len() {
            return param(format!(
                "field has {} samples but the grid has {} nodes",
                values.len(),
                grid.len()
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return domain(format!("non-finite sample at node {i}"));
        }
        Ok(Self { grid: grid.clone(), values, parity })
    }

    /// Internal constructor for values known to be well formed.
    pub(crate) fn raw(grid: &Arc<RadialGrid>, values: Vec<f64>, parity: Parity) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid: grid.clone(), values, parity }
    }

    pub fn from_fn(grid: &Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::raw(grid, values, Parity::Even)
    }

    pub fn zeros(grid: &Arc<RadialGrid>) -> Self {
        Self::raw(grid, vec![0.0; grid.len()], Parity::Even)
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn nodes(&self) -> &[f64] {
        self.grid.nodes()
    }

    pub fn check_same_grid(&self, other: &RadialField) -> Result<()> {
        if self.grid.same_nodes(&other.grid) {
            Ok(())
        } else {
            domain("fields live on different grids")
        }
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> RadialField {
        let values = self.nodes().iter().zip(&self.values).map(|(&r, &v)| f(r, v)).collect();
        Self::raw(&self.grid, values, self.parity)
    }

    pub fn scaled(&self, c: f64) -> RadialField {
        self.map(|_, v| c * v)
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &RadialField) -> Result<RadialField> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect();
        Ok(Self::raw(&self.grid, values, self.parity))
    }

    pub fn add_scaled_in_place(&mut self, c: f64, other: &RadialField) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
    }

    pub fn mul(&self, other: &RadialField) -> Result<RadialField> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        let parity = if self.parity == other.parity { Parity::Even } else { Parity::Odd };
        Ok(Self::raw(&self.grid, values, parity))
    }

    /// First derivative by 7-point finite differences.
    pub fn derivative(&self) -> RadialField {
        let st = self.grid.stencils();
        let values = (0..self.values.len())
            .map(|i| st.first(&self.values, self.parity, i))
            .collect();
        Self::raw(&self.grid, values, self.parity.flip())
    }

    pub fn second_derivative(&self) -> RadialField {
        let st = self.grid.stencils();
        let values = (0..self.values.len())
            .map(|i| st.second(&self.values, self.parity, i))
            .collect();
        Self::raw(&self.grid, values, self.parity)
    }

    /// Value at an arbitrary radius: local degree-5 interpolation inside the
    /// grid, `c r^{-2} + d r^{-4}` through the last two nodes beyond `r_max`.
    pub fn eval(&self, r: f64) -> f64 {
        let r_max = self.grid.r_max();
        let n = self.values.len();
        if r >= r_max {
            let nodes = self.grid.nodes();
            let (r1, r0) = (nodes[n - 1], nodes[n - 2]);
            let (g1, g0) = (self.values[n - 1] * r1 * r1, self.values[n - 2] * r0 * r0);
            let d = (g1 - g0) / (1.0 / (r1 * r1) - 1.0 / (r0 * r0));
            let c = g1 - d / (r1 * r1);
            return (c + d / (r * r)) / (r * r);
        }
        let (r_abs, sign) = if r < 0.0 {
            (-r, if self.parity == Parity::Odd { -1.0 } else { 1.0 })
        } else {
            (r, 1.0)
        };
        let i = self.grid.locate(r_abs);
        let nodes = self.grid.nodes();
        if nodes[i] == r_abs {
            return sign * self.values[i];
        }
        let (taps, w) = interp_weights(nodes, i, r_abs);
        sign * taps.iter().zip(&w).map(|(t, wj)| wj * t.value(&self.values, self.parity)).sum::<f64>()
    }

    /// `I(r_i) = int_0^{r_i} f(s) ds` by exact integration of local
    /// degree-5 interpolants.
    pub fn cumulative_integral(&self) -> Vec<f64> {
        let st = self.grid.stencils();
        let mut out = Vec::with_capacity(self.values.len());
        out.push(0.0);
        let mut acc = 0.0;
        for i in 0..self.values.len() - 1 {
            acc += st.interval_integral(&self.values, self.parity, i);
            out.push(acc);
        }
        out
    }

    /// `J(r_i) = int_{r_i}^{r_max} f(s) ds`.
    pub fn tail_integral(&self) -> Vec<f64> {
        let st = self.grid.stencils();
        let n = self.values.len();
        let mut out = vec![0.0; n];
        let mut acc = 0.0;
        for i in (0..n - 1).rev() {
            acc += st.interval_integral(&self.values, self.parity, i);
            out[i] = acc;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn interpolation_matches_smooth_functions() {
        let g = make_grid(401, 10.0, 1.0).unwrap();
        let f = RadialField::from_fn(&g, |r| (-r * r / 8.0).exp());
        for &r in &[0.0, 0.0123, 1.337, 5.55, 9.999] {
            assert!((f.eval(r) - (-r * r / 8.0).exp()).abs() < 1e-11, "r = {r}");
        }
        let tail = RadialField::from_fn(&g, |r| (3.0 + 2.0 / (r * r)) / (r * r));
        for r in [10.0, 20.0, 100.0] {
            let want = (3.0 + 2.0 / (r * r)) / (r * r);
            assert!((tail.eval(r) - want).abs() < 1e-12 * want, "r = {r}");
        }
    }

    #[test]
    fn cumulative_integral_of_odd_integrand() {
        let g = make_grid(201, 4.0, 2.0).unwrap();
        let f = RadialField::with_parity(&g, g.nodes().iter().map(|r| r * (-r * r).exp()).collect(), Parity::Odd)
            .unwrap();
        let c = f.cumulative_integral();
        for (r, v) in g.nodes().iter().zip(&c) {
            assert!((v - 0.5 * (1.0 - (-r * r).exp())).abs() < 1e-10);
        }
        let t = f.tail_integral();
        assert!((t[0] - c[200]).abs() < 1e-14);
    }
}
