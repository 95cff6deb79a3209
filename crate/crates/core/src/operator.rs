//! Discrete radial biharmonic operator on the unit ball with clamped boundary.
//!
//! For a radial function the bilaplacian is
//!
//! ```text
//! Δ²u = u'''' + 2(n-1)/r u''' + (n-1)(n-3) (u'/r)' / r
//! ```
//!
//! where the last group equals `(n-1)(n-3)(u''/r² - u'/r³)`. Rows `1..M-1` use
//! second-order centered differences, with `u'/r` evaluated at half nodes so that
//! every term stays bounded as `r -> 0`. Row `0` uses the regular limit
//! `Δ²u(0) = n(n+2)/3 · u''''(0)`. Even symmetry supplies the ghost `u_{-1} = u_1`,
//! and the ghost `u_{M+1}` is eliminated through a six-point one-sided
//! discretization of `u'(1) = 0`. Row `M` is the constraint `u(1) = 0`.
//!
//! Even polynomials of degree four are reproduced exactly (`Δ²(1-r²)² = 8n(n+2)`).

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::linalg::BandMatrix;
use crate::mesh::{RadialField, RadialMesh};

/// Ghost value `u_{M+1} = Σ_k GHOST[k] u_{M-k}` enforcing `u'(1) = 0`.
///
/// Exact for polynomials of degree five.
pub const GHOST: [f64; 5] = [-65.0 / 12.0, 10.0, -5.0, 5.0 / 3.0, -0.25];

const LOWER_BANDWIDTH: usize = 3;
const UPPER_BANDWIDTH: usize = 2;

/// The assembled operator together with the mesh and dimension it belongs to.
#[derive(Debug, Clone)]
pub struct DiscreteBiharmonic {
    n: usize,
    mesh: RadialMesh,
    matrix: BandMatrix,
    weights: Vec<f64>,
    nu1: OnceLock<f64>,
}

impl DiscreteBiharmonic {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mesh(&self) -> &RadialMesh {
        &self.mesh
    }

    pub fn matrix(&self) -> &BandMatrix {
        &self.matrix
    }

    pub fn len(&self) -> usize {
        self.mesh.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mesh.is_empty()
    }

    pub fn h(&self) -> f64 {
        self.mesh.h()
    }

    /// Trapezoidal radial-measure weights `r^(n-1) dr`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub(crate) fn cached_nu1(&self) -> Option<f64> {
        self.nu1.get().copied()
    }

    pub(crate) fn store_nu1(&self, value: f64) {
        let _ = self.nu1.set(value);
    }

    /// Index of the boundary node `r = 1`.
    pub fn boundary(&self) -> usize {
        self.mesh.intervals()
    }
}

/// Assemble the clamped radial bilaplacian for dimension `n`.
pub fn assemble_biharmonic(mesh: &RadialMesh, n: usize) -> Result<DiscreteBiharmonic> {
    if n < 1 {
        return Err(Error::Config(format!("dimension n must be >= 1, got {n}")));
    }
    let m = mesh.intervals();
    let h = mesh.h();
    let nf = n as f64;
    let mut a = BandMatrix::zeros(m + 1, LOWER_BANDWIDTH, UPPER_BANDWIDTH);

    let c0 = nf * (nf + 2.0) / 3.0 / h.powi(4);
    a.add(0, 0, 6.0 * c0);
    a.add(0, 1, -8.0 * c0);
    a.add(0, 2, 2.0 * c0);

    let third = 2.0 * (nf - 1.0);
    let mixed = (nf - 1.0) * (nf - 3.0);
    for i in 1..m {
        let r = mesh.r(i);
        let mut stencil = [(0isize, 0.0f64); 5];
        for (k, slot) in stencil.iter_mut().enumerate() {
            slot.0 = i as isize + k as isize - 2;
        }
        // u''''
        for (slot, c) in stencil.iter_mut().zip([1.0, -4.0, 6.0, -4.0, 1.0]) {
            slot.1 += c / h.powi(4);
        }
        // 2(n-1)/r u'''
        for (slot, c) in stencil.iter_mut().zip([-1.0, 2.0, 0.0, -2.0, 1.0]) {
            slot.1 += third * c / (2.0 * h.powi(3) * r);
        }
        // (n-1)(n-3) (u'/r)'/r with u'/r at half nodes
        let r_plus = r + 0.5 * h;
        let r_minus = r - 0.5 * h;
        let k = mixed / (h * h * r);
        stencil[3].1 += k / r_plus;
        stencil[2].1 -= k / r_plus + k / r_minus;
        stencil[1].1 += k / r_minus;

        for (j, c) in stencil {
            if c == 0.0 {
                continue;
            }
            if j < 0 {
                a.add(i, (-j) as usize, c);
            } else if j as usize == m + 1 {
                for (q, g) in GHOST.iter().enumerate() {
                    a.add(i, m - q, c * g);
                }
            } else {
                a.add(i, j as usize, c);
            }
        }
    }
    a.add(m, m, 1.0);

    Ok(DiscreteBiharmonic {
        n,
        mesh: mesh.clone(),
        matrix: a,
        weights: mesh.radial_weights(n),
        nu1: OnceLock::new(),
    })
}

/// Matrix-vector product. Entry `M` of the result is the constraint residual `u(1)`.
pub fn apply(op: &DiscreteBiharmonic, f: &RadialField) -> Result<RadialField> {
    f.check_len(op.len())?;
    Ok(RadialField::new(op.matrix.mul_vec(&f.values)))
}

/// Bound on the floating-point error of [`apply`] at each row.
pub fn apply_rounding_bound(op: &DiscreteBiharmonic, f: &RadialField) -> Result<Vec<f64>> {
    f.check_len(op.len())?;
    let gamma = 16.0 * f64::EPSILON;
    Ok(op
        .matrix
        .abs_mul_vec(&f.values)
        .into_iter()
        .map(|s| gamma * s)
        .collect())
}

/// Discrete radial Laplacian `u'' + (n-1)/r u'` of a clamped field, at every node.
///
/// Uses `Δu(0) = n u''(0)` at the center and the same ghost value as the
/// bilaplacian at `r = 1`.
pub fn laplacian(op: &DiscreteBiharmonic, u: &RadialField) -> Result<RadialField> {
    u.check_len(op.len())?;
    let m = op.boundary();
    let h = op.h();
    let nf = op.n as f64;
    let v = &u.values;
    let mut out = vec![0.0; m + 1];
    out[0] = 2.0 * nf * (v[1] - v[0]) / (h * h);
    for i in 1..m {
        let r = op.mesh.r(i);
        out[i] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (h * h)
            + (nf - 1.0) * (v[i + 1] - v[i - 1]) / (2.0 * h * r);
    }
    let ghost: f64 = GHOST.iter().enumerate().map(|(q, g)| g * v[m - q]).sum();
    out[m] = (ghost - 2.0 * v[m] + v[m - 1]) / (h * h);
    Ok(RadialField::new(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh;

    fn op(n: usize, m: usize) -> DiscreteBiharmonic {
        assemble_biharmonic(&build_mesh(m).unwrap(), n).unwrap()
    }

    #[test]
    fn ghost_weights_differentiate_exactly() {
        // d/dx at 0 of x^k sampled at 1, 0, -1, ..., -4 must vanish when the
        // ghost is chosen from the other five samples and x^k has zero slope.
        for k in 2..=5 {
            let f = |x: f64| x.powi(k);
            let ghost: f64 = GHOST.iter().enumerate().map(|(q, g)| g * f(-(q as f64))).sum();
            assert!((ghost - f(1.0)).abs() < 1e-12, "degree {k}: {ghost}");
        }
    }

    #[test]
    fn zero_maps_to_zero() {
        let d = op(3, 64);
        let out = apply(&d, &RadialField::zeros(65)).unwrap();
        assert!(out.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_in_the_field() {
        let d = op(5, 64);
        let f = RadialField::from_fn(d.mesh(), |r| (1.0 - r * r).powi(2) * (1.0 + r.cos()));
        let a = apply(&d, &f).unwrap();
        let scaled = f.scaled(3.5);
        let b = apply(&d, &scaled).unwrap();
        let bound = apply_rounding_bound(&d, &scaled).unwrap();
        for ((x, y), e) in a.values.iter().zip(&b.values).zip(&bound) {
            assert!((3.5 * x - y).abs() <= 2.0 * e, "{x} {y} {e}");
        }
    }

    #[test]
    fn quartic_profile_gives_constant() {
        for n in [1, 2, 3, 5, 8] {
            let d = op(n, 128);
            let f = RadialField::from_fn(d.mesh(), |r| (1.0 - r * r).powi(2));
            let out = apply(&d, &f).unwrap();
            let exact = 8.0 * (n * (n + 2)) as f64;
            for (i, v) in out.values[..128].iter().enumerate() {
                assert!((v - exact).abs() < 1e-6 * exact, "n = {n}, node {i}: {v}");
            }
            assert_eq!(out.values[128], 0.0);
        }
    }

    #[test]
    fn length_mismatch_is_shape_error() {
        let d = op(3, 32);
        assert!(matches!(
            apply(&d, &RadialField::zeros(10)),
            Err(Error::Shape { expected: 33, got: 10 })
        ));
    }

    #[test]
    fn dimension_zero_rejected() {
        assert!(assemble_biharmonic(&build_mesh(32).unwrap(), 0).is_err());
    }

    #[test]
    fn band_structure() {
        let d = op(4, 32);
        assert_eq!(d.matrix().lower_bandwidth(), 3);
        assert_eq!(d.matrix().upper_bandwidth(), 2);
        // The boundary row only constrains u(1).
        assert_eq!(d.matrix().get(32, 32), 1.0);
        assert_eq!(d.matrix().get(32, 31), 0.0);
    }

    #[test]
    fn laplacian_of_quartic() {
        for n in [1, 3, 6] {
            let d = op(n, 64);
            let f = RadialField::from_fn(d.mesh(), |r| (1.0 - r * r).powi(2));
            let lap = laplacian(&d, &f).unwrap();
            let n = n as f64;
            for (i, &r) in d.mesh().nodes().iter().enumerate() {
                let exact = -4.0 * n + 4.0 * (n + 2.0) * r * r;
                let err = (lap.values[i] - exact).abs();
                assert!(err < 20.0 * d.h() * d.h() * (n + 1.0), "node {i}: {err}");
            }
        }
    }
}
