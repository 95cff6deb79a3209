//! Uniform radial meshes on `[0, 1]` and fields sampled on them.

use serde::{Deserialize, Serialize};

use crate::config::MIN_INTERVALS;
use crate::error::{Error, Result};

/// Uniform mesh `r_i = i / M`, `i = 0..=M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialMesh {
    nodes: Vec<f64>,
    h: f64,
}

impl RadialMesh {
    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn r(&self, i: usize) -> f64 {
        self.nodes[i]
    }

    /// Trapezoidal weights for `∫_0^1 f(r) r^(n-1) dr`.
    pub fn radial_weights(&self, n: usize) -> Vec<f64> {
        let m = self.intervals();
        let exp = (n - 1) as i32;
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                let end = if i == 0 || i == m { 0.5 } else { 1.0 };
                end * self.h * r.powi(exp)
            })
            .collect()
    }

    /// Index of the first node with `r >= r_cut`.
    pub fn first_node_at_or_beyond(&self, r_cut: f64) -> usize {
        // Nodes are exact multiples of h, so compare with a half-ulp cushion.
        let k = (r_cut / self.h - 1e-9).ceil().max(0.0) as usize;
        k.min(self.intervals())
    }
}

/// Build the uniform mesh with `intervals` subintervals.
pub fn build_mesh(intervals: usize) -> Result<RadialMesh> {
    if intervals < MIN_INTERVALS {
        return Err(Error::Config(format!(
            "mesh needs at least {MIN_INTERVALS} intervals, got {intervals}"
        )));
    }
    let h = 1.0 / intervals as f64;
    let nodes = (0..=intervals)
        .map(|i| i as f64 / intervals as f64)
        .collect();
    Ok(RadialMesh { nodes, h })
}

/// Values of a radial function at the mesh nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialField {
    pub values: Vec<f64>,
}

impl RadialField {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            values: vec![0.0; len],
        }
    }

    pub fn constant(len: usize, value: f64) -> Self {
        Self {
            values: vec![value; len],
        }
    }

    pub fn from_fn(mesh: &RadialMesh, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: mesh.nodes().iter().map(|&r| f(r)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| alpha * v).collect(),
        }
    }

    /// Largest value over the nodes that are not on the boundary `r = 1`.
    pub fn interior_max(&self) -> f64 {
        self.values[..self.values.len() - 1]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn interior_min(&self) -> f64 {
        self.values[..self.values.len() - 1]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &RadialField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub(crate) fn check_len(&self, expected: usize) -> Result<()> {
        if self.values.len() != expected {
            return Err(Error::Shape {
                expected,
                got: self.values.len(),
            });
        }
        Ok(())
    }
}

/// Weighted inner product `Σ w_i a_i b_i`.
pub fn weighted_dot(weights: &[f64], a: &[f64], b: &[f64]) -> f64 {
    weights
        .iter()
        .zip(a.iter().zip(b))
        .map(|(w, (x, y))| w * x * y)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixteen_intervals() {
        let mesh = build_mesh(16).unwrap();
        assert_eq!(mesh.len(), 17);
        assert_eq!(mesh.h(), 0.0625);
        for (i, &r) in mesh.nodes().iter().enumerate() {
            assert_eq!(r, i as f64 / 16.0);
        }
        assert_eq!(mesh.r(0), 0.0);
        assert_eq!(mesh.r(16), 1.0);
    }

    #[test]
    fn midpoint_is_exact() {
        let mesh = build_mesh(512).unwrap();
        assert_eq!(mesh.len(), 513);
        assert_eq!(mesh.r(256), 0.5);
        assert!(mesh.nodes().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn too_coarse() {
        assert!(matches!(build_mesh(15), Err(Error::Config(_))));
    }

    #[test]
    fn radial_weights_integrate_measure() {
        let mesh = build_mesh(256).unwrap();
        for n in 1..=6 {
            let total: f64 = mesh.radial_weights(n).iter().sum();
            assert!((total - 1.0 / n as f64).abs() < 1e-4, "n = {n}: {total}");
        }
    }

    #[test]
    fn cutoff_index() {
        let mesh = build_mesh(100).unwrap();
        assert_eq!(mesh.first_node_at_or_beyond(0.05), 5);
        assert_eq!(mesh.first_node_at_or_beyond(0.051), 6);
        assert_eq!(mesh.first_node_at_or_beyond(0.0), 0);
    }
}
