use std::sync::{Arc, OnceLock};

use sha2::{Digest, Sha256};

use crate::error::{param, Result};
use crate::stencil::Stencils;

/// Nodes `0 = r_0 < r_1 < ... < r_{N-1} = r_max` obtained from a uniform
/// computational coordinate `xi` through `r = r_max * xi^stretch`.
#[derive(Debug)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    r_max: f64,
    stretch: f64,
    stencils: OnceLock<Stencils>,
}

/// Builds a grid with `n` nodes on `[0, r_max]`; `stretch > 1` clusters
/// nodes near the origin.
pub fn make_grid(n: usize, r_max: f64, stretch: f64) -> Result<Arc<RadialGrid>> {
    if n < 3 {
        return param(format!("grid needs at least 3 nodes, got {n}"));
    }
    if !(r_max.is_finite() && r_max > 0.0) {
        return param(format!("r_max must be positive and finite, got {r_max}"));
    }
    if !(stretch.is_finite() && stretch >= 1.0) {
        return param(format!("stretch must be >= 1, got {stretch}"));
    }
    let last = (n - 1) as f64;
    let mut nodes: Vec<f64> = (0..n)
        .map(|i| {
            let xi = i as f64 / last;
            if stretch == 1.0 {
                r_max * xi
            } else {
                r_max * xi.powf(stretch)
            }
        })
        .collect();
    nodes[n - 1] = r_max;
    if nodes.windows(2).any(|w| w[1] <= w[0]) {
        return param("grid nodes are not strictly increasing (stretch too large for n)");
    }
    Ok(Arc::new(RadialGrid {
        nodes,
        r_max,
        stretch,
        stencils: OnceLock::new(),
    }))
}

impl RadialGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn stretch(&self) -> f64 {
        self.stretch
    }

    /// `r_{i+1} - r_i`.
    pub fn spacing(&self, i: usize) -> f64 {
        self.nodes[i + 1] - self.nodes[i]
    }

    /// Trapezoid weight of node `i` in the computational coordinate,
    /// mapped back to `r` (`r'(xi) * dxi`, halved at the end points).
    pub fn trapezoid_weight(&self, i: usize) -> f64 {
        let n = self.len();
        let dxi = 1.0 / (n - 1) as f64;
        let xi = i as f64 * dxi;
        let jac = if self.stretch == 1.0 {
            self.r_max
        } else {
            self.stretch * self.r_max * xi.powf(self.stretch - 1.0)
        };
        let w = jac * dxi;
        if i == 0 || i == n - 1 {
            0.5 * w
        } else {
            w
        }
    }

    /// Same stretch and extent with the computational spacing halved.
    pub fn refined(&self) -> Result<Arc<RadialGrid>> {
        make_grid(2 * self.len() - 1, self.r_max, self.stretch)
    }

    /// SHA-256 of the node coordinates, used to tag serialized artifacts.
    pub fn hash_hex(&self) -> String {
        let mut h = Sha256::new();
        for r in &self.nodes {
            h.update(r.to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    /// Index `i` with `r_i <= r < r_{i+1}` (clamped to the last interval).
    pub fn locate(&self, r: f64) -> usize {
        let n = self.len();
        match self.nodes.binary_search_by(|x| x.total_cmp(&r)) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    pub(crate) fn stencils(&self) -> &Stencils {
        self.stencils.get_or_init(|| Stencils::build(&self.nodes))
    }

    pub fn same_nodes(&self, other: &RadialGrid) -> bool {
        std::ptr::eq(self, other) || self.nodes == other.nodes
    }
}
