//! Ground states of the clamped operator: `ν₁`, the stability eigenvalue `μ₁(u)`,
//! and the weighted constant `β` of a singular comparison profile.
//!
//! All three are smallest eigenvalues of a pencil `(Δ²_h - S) φ = θ D φ` with
//! diagonal `S` and positive diagonal `D`, computed by shift-and-invert
//! iteration. Norms and Rayleigh quotients use the radial measure `r^(n-1) dr`.
//! Only radial modes are resolved.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{factor, solve_linear};
use crate::mesh::{weighted_dot, RadialField};
use crate::operator::DiscreteBiharmonic;

/// Iteration cap for inverse iteration.
pub const MAX_EIG_ITERATIONS: usize = 2000;

/// Default eigenvector residual tolerance when no configuration is at hand.
pub const DEFAULT_TOL_EIG: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub value: f64,
    /// Unit norm in the radial measure, nonnegative mean.
    pub field: RadialField,
    pub iterations: usize,
    /// `‖(θ - σ)(A - σD)⁻¹ D φ - φ‖` at exit.
    pub residual: f64,
}

struct Pencil<'a> {
    op: &'a DiscreteBiharmonic,
    shift: Option<Vec<f64>>,
    mass: Option<Vec<f64>>,
}

impl Pencil<'_> {
    fn mass_at(&self, i: usize) -> f64 {
        self.mass.as_ref().map_or(1.0, |d| d[i])
    }

    fn apply_mass(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .enumerate()
            .map(|(i, x)| self.mass_at(i) * x)
            .collect()
    }

    fn apply_shifted(&self, v: &[f64]) -> Vec<f64> {
        let mut out = self.op.matrix().mul_vec(v);
        if let Some(s) = &self.shift {
            for (o, (si, vi)) in out.iter_mut().zip(s.iter().zip(v)) {
                *o -= si * vi;
            }
        }
        out
    }

    /// Rayleigh quotient on the equation rows.
    fn rayleigh(&self, v: &[f64]) -> f64 {
        let w = self.op.weights();
        let m = self.op.boundary();
        let av = self.apply_shifted(v);
        let dv = self.apply_mass(v);
        weighted_dot(&w[..m], &v[..m], &av[..m]) / weighted_dot(&w[..m], &v[..m], &dv[..m])
    }

    fn factor_at(&self, sigma: f64) -> Result<crate::linalg::BandedFactorization> {
        let total_shift: Vec<f64> = (0..self.op.len())
            .map(|i| {
                let s = self.shift.as_ref().map_or(0.0, |s| s[i]);
                s + sigma * self.mass_at(i)
            })
            .collect();
        factor(self.op, Some(&RadialField::new(total_shift)))
    }

    /// Inverse iteration from a shift `sigma` below the smallest eigenvalue.
    ///
    /// While convergence is slow the shift is moved halfway towards the current
    /// eigenvalue estimate. The ground state is the only sign-definite
    /// eigenvector, so a converged vector that changes sign means the shift
    /// overshot, and the iteration is rerun with the initial shift held fixed.
    fn solve(&self, sigma: f64, tol: f64) -> Result<EigenPair> {
        let pair = self.iterate(sigma, tol, true)?;
        let m = self.op.boundary();
        let v = &pair.field.values[..m];
        let top = v.iter().copied().fold(0.0, f64::max);
        if v.iter().all(|&x| x >= -1e-8 * top) {
            return Ok(pair);
        }
        self.iterate(sigma, tol, false)
    }

    fn iterate(&self, sigma: f64, tol: f64, adaptive: bool) -> Result<EigenPair> {
        let op = self.op;
        let len = op.len();
        let m = op.boundary();
        let w = op.weights();
        let mut sigma = sigma;
        let mut fact = self.factor_at(sigma)?;

        let norm = |v: &[f64]| weighted_dot(w, v, v).sqrt();
        // Positive start vector with the clamped boundary shape.
        let mut v: Vec<f64> = op
            .mesh()
            .nodes()
            .iter()
            .map(|r| (1.0 - r * r).powi(2))
            .collect();
        let n0 = norm(&v);
        v.iter_mut().for_each(|x| *x /= n0);

        let mut residual = f64::INFINITY;
        let mut since_shift = 0;
        for it in 1..=MAX_EIG_ITERATIONS {
            let rhs = RadialField::new(self.apply_mass(&v));
            let x = solve_linear(&fact, &rhs)?.values;
            let vx = weighted_dot(w, &v, &self.apply_mass(&x));
            let vd = weighted_dot(w, &v, &self.apply_mass(&v));
            let theta_inv = vx / vd;
            let nx = norm(&x);
            let previous = residual;
            residual = {
                let scale = 1.0 / theta_inv;
                let r: Vec<f64> = x.iter().zip(&v).map(|(xi, vi)| scale * xi - vi).collect();
                norm(&r)
            };
            let sign = if weighted_dot(w, &x, &vec![1.0; len]) < 0.0 {
                -1.0
            } else {
                1.0
            };
            v = x.iter().map(|xi| sign * xi / nx).collect();
            if residual <= tol {
                v[m] = 0.0;
                return Ok(EigenPair {
                    value: self.rayleigh(&v),
                    field: RadialField::new(v),
                    iterations: it,
                    residual,
                });
            }
            since_shift += 1;
            let gap = 1.0 / theta_inv;
            if adaptive && since_shift >= 3 && residual > 0.5 * previous && gap > 0.0 {
                let next = sigma + 0.5 * gap;
                if let Ok(f) = self.factor_at(next) {
                    sigma = next;
                    fact = f;
                    since_shift = 0;
                }
            }
        }
        Err(Error::EigenNoConvergence {
            iterations: MAX_EIG_ITERATIONS,
            residual,
        })
    }
}

/// Smallest eigenvalue `ν₁` of the clamped operator and its positive eigenfunction.
pub fn nu1(op: &DiscreteBiharmonic) -> Result<EigenPair> {
    nu1_with_tol(op, DEFAULT_TOL_EIG)
}

pub fn nu1_with_tol(op: &DiscreteBiharmonic, tol: f64) -> Result<EigenPair> {
    let pair = Pencil {
        op,
        shift: None,
        mass: None,
    }
    .solve(0.0, tol)?;
    op.store_nu1(pair.value);
    Ok(pair)
}

fn nu1_value(op: &DiscreteBiharmonic) -> Result<f64> {
    match op.cached_nu1() {
        Some(v) => Ok(v),
        None => Ok(nu1(op)?.value),
    }
}

/// Linearization weight `λ p (1 - u)^(-p-1)` on the equation rows.
pub fn linearization_weight(u: &RadialField, lambda: f64, p: f64) -> Result<Vec<f64>> {
    let last = u.len() - 1;
    u.values
        .iter()
        .enumerate()
        .map(|(i, &ui)| {
            if i == last {
                return Ok(0.0);
            }
            if !(ui < 1.0) || !ui.is_finite() {
                return Err(Error::SingularWeight { node: i, value: ui });
            }
            Ok(lambda * p * (1.0 - ui).powf(-p - 1.0))
        })
        .collect()
}

/// Stability eigenvalue `μ₁(u)`: smallest eigenvalue of `Δ² - λ p (1-u)^(-p-1)`.
///
/// Positive means stable, negative unstable.
pub fn mu1(op: &DiscreteBiharmonic, u: &RadialField, lambda: f64, p: f64) -> Result<EigenPair> {
    mu1_with_tol(op, u, lambda, p, DEFAULT_TOL_EIG)
}

pub fn mu1_with_tol(
    op: &DiscreteBiharmonic,
    u: &RadialField,
    lambda: f64,
    p: f64,
    tol: f64,
) -> Result<EigenPair> {
    u.check_len(op.len())?;
    let weight = linearization_weight(u, lambda, p)?;
    let nu = nu1_value(op)?;
    let max_w = weight.iter().copied().fold(0.0, f64::max);
    // Rayleigh bound μ₁ ≥ ν₁ - max weight keeps the shift below the ground state.
    let sigma = (nu - max_w).min(0.0) - 0.05 * nu;
    Pencil {
        op,
        shift: Some(weight),
        mass: None,
    }
    .solve(sigma, tol)
}

/// Smallest `β` with `Δ²φ = β (1 - ω)^(-2) φ`.
///
/// With `cutoff = Some(r_min)`, nodes with `r < r_min` take the weight of the
/// first node at or beyond `r_min`; `ω` may be singular there. Every node that
/// is not cut off must satisfy `ω < 1`.
pub fn weighted_beta(
    op: &DiscreteBiharmonic,
    omega: &RadialField,
    cutoff: Option<f64>,
) -> Result<EigenPair> {
    weighted_beta_with_tol(op, omega, cutoff, DEFAULT_TOL_EIG)
}

pub fn weighted_beta_with_tol(
    op: &DiscreteBiharmonic,
    omega: &RadialField,
    cutoff: Option<f64>,
    tol: f64,
) -> Result<EigenPair> {
    omega.check_len(op.len())?;
    let mass = stability_weight(op, omega, cutoff)?;
    Pencil {
        op,
        shift: None,
        mass: Some(mass),
    }
    .solve(0.0, tol)
}

/// Weight `(1 - ω)^(-2)` with the cutoff rule of [`weighted_beta`].
pub fn stability_weight(
    op: &DiscreteBiharmonic,
    omega: &RadialField,
    cutoff: Option<f64>,
) -> Result<Vec<f64>> {
    let first = cutoff.map_or(0, |r| op.mesh().first_node_at_or_beyond(r));
    let m = op.boundary();
    let mut mass = vec![0.0; op.len()];
    for i in first..=m {
        let gap = 1.0 - omega.values[i];
        let wgt = gap.powi(-2);
        if !(gap > 0.0) || !wgt.is_finite() {
            return Err(Error::CertificateDomain {
                node: i,
                reason: format!("omega = {} gives a nonpositive or infinite weight", omega.values[i]),
            });
        }
        mass[i] = wgt;
    }
    let capped = mass[first];
    mass[..first].iter_mut().for_each(|x| *x = capped);
    Ok(mass)
}

/// Rayleigh quotient of `φ` for `Δ² - S`, in the radial measure.
pub fn rayleigh_quotient(op: &DiscreteBiharmonic, phi: &RadialField, shift: Option<&[f64]>) -> Result<f64> {
    phi.check_len(op.len())?;
    Ok(Pencil {
        op,
        shift: shift.map(|s| s.to_vec()),
        mass: None,
    }
    .rayleigh(&phi.values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh;
    use crate::operator::assemble_biharmonic;

    fn op(n: usize, m: usize) -> DiscreteBiharmonic {
        assemble_biharmonic(&build_mesh(m).unwrap(), n).unwrap()
    }

    #[test]
    fn ground_state_positive_and_decreasing() {
        for n in [1, 2, 3, 6] {
            let d = op(n, 128);
            let pair = nu1(&d).unwrap();
            assert!(pair.value > 0.0);
            let v = &pair.field.values;
            assert!(v[..128].iter().all(|&x| x > 0.0), "n = {n}");
            assert!(v.windows(2).all(|w| w[1] <= w[0]), "n = {n} not decreasing");
            let norm = weighted_dot(d.weights(), v, v);
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_field_shifts_by_lambda() {
        let d = op(3, 128);
        let nu = nu1(&d).unwrap().value;
        for lambda in [0.0, 0.25 * nu, 0.5 * nu] {
            let mu = mu1(&d, &RadialField::zeros(129), lambda, 1.0).unwrap().value;
            assert!(((mu - (nu - lambda)) / (nu - lambda)).abs() < 1e-8, "{mu} vs {}", nu - lambda);
        }
    }

    #[test]
    fn unit_weight_matches_nu1() {
        let d = op(2, 96);
        let nu = nu1(&d).unwrap().value;
        let beta = weighted_beta(&d, &RadialField::zeros(97), None).unwrap().value;
        assert!((beta - nu).abs() < 1e-8 * nu);
    }

    #[test]
    fn singular_weight_rejected() {
        let d = op(3, 32);
        let mut u = RadialField::zeros(33);
        u.values[4] = 1.0;
        assert!(matches!(
            mu1(&d, &u, 1.0, 1.0),
            Err(Error::SingularWeight { node: 4, .. })
        ));
        assert!(matches!(
            weighted_beta(&d, &u, None),
            Err(Error::CertificateDomain { node: 4, .. })
        ));
        // Cut off below the offending node: accepted.
        assert!(weighted_beta(&d, &u, Some(0.2)).is_ok());
    }

    #[test]
    fn rayleigh_quotient_consistent() {
        let d = op(3, 128);
        let pair = nu1(&d).unwrap();
        let rq = rayleigh_quotient(&d, &pair.field, None).unwrap();
        assert!((rq - pair.value).abs() < 1e-9 * pair.value);
    }
}
