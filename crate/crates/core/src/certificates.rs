//! Pointwise discrete checks of sub- and supersolution inequalities, the
//! eigenvalue upper bound on `λ*`, and the singularity certificate.
//!
//! A check passes when at every checked node
//!
//! ```text
//! LHS - RHS >= -(1e-8 · scale + h² · scale + rounding)
//! ```
//!
//! where `scale = max |LHS|` over the checked nodes and `rounding` bounds the
//! floating-point error in applying the discrete operator at that node.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::branch::ContinuationResult;
use crate::error::{Error, Result};
use crate::mesh::RadialField;
use crate::operator::{apply, apply_rounding_bound, DiscreteBiharmonic};
use crate::spectral::weighted_beta;

/// Relative part of the pass tolerance.
pub const RELATIVE_SLACK: f64 = 1e-8;

/// `max{4n(n-2), 2n(n+2)}`, a lower bound for `λ*`.
pub fn lower_bound(n: usize) -> f64 {
    let n = n as f64;
    (4.0 * n * (n - 2.0)).max(2.0 * n * (n + 2.0))
}

/// `8n² + 16n`, the constant value of `Δ²(1 - r²)²`.
pub fn quartic_constant(n: usize) -> f64 {
    let n = n as f64;
    8.0 * n * n + 16.0 * n
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CertificateParams {
    /// Subsolution `ω_α = α (1 - r²)²`.
    OmegaAlpha { alpha: f64 },
    /// Supersolution `1 - A r² (C₀ - log r)^β`.
    GBeta { c0: f64, beta: f64, a: f64 },
    /// Singular subsolution `ω` with parameter `λ'`.
    Singularity {
        omega: RadialField,
        lambda_prime: f64,
        beta_claim: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateSpec {
    pub n: usize,
    pub r_min: f64,
    pub params: CertificateParams,
}

impl CertificateSpec {
    pub fn omega_alpha(n: usize, alpha: f64) -> Self {
        Self {
            n,
            r_min: 0.05,
            params: CertificateParams::OmegaAlpha { alpha },
        }
    }

    pub fn g_beta(n: usize, c0: f64, beta: f64, a: f64, r_min: f64) -> Self {
        Self {
            n,
            r_min,
            params: CertificateParams::GBeta { c0, beta, a },
        }
    }

    /// `C₀ = 1/4`, `A = 2`, `β = 1/2`.
    pub fn standard_g_beta(n: usize, r_min: f64) -> Self {
        Self::g_beta(n, 0.25, 0.5, 2.0, r_min)
    }

    pub fn singularity(n: usize, omega: RadialField, lambda_prime: f64, r_min: f64) -> Self {
        Self {
            n,
            r_min,
            params: CertificateParams::Singularity {
                omega,
                lambda_prime,
                beta_claim: None,
            },
        }
    }

    pub fn kind(&self) -> CertificateKind {
        match self.params {
            CertificateParams::OmegaAlpha { .. } => CertificateKind::OmegaAlpha,
            CertificateParams::GBeta { .. } => CertificateKind::GBeta,
            CertificateParams::Singularity { .. } => CertificateKind::Singularity,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::Config("dimension n must be >= 1".into()));
        }
        if !(self.r_min > 0.0 && self.r_min < 0.5) {
            return Err(Error::Config(format!("r_min must lie in (0, 0.5), got {}", self.r_min)));
        }
        match &self.params {
            CertificateParams::OmegaAlpha { alpha } => {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")));
                }
            }
            CertificateParams::GBeta { c0, beta, a } => {
                if !(*c0 > 0.0 && c0.is_finite()) {
                    return Err(Error::Config(format!("C0 must be positive, got {c0}")));
                }
                if !(*beta > 0.0 && *beta < 1.0) {
                    return Err(Error::Config(format!("beta must lie in (0, 1), got {beta}")));
                }
                if !(*a > 0.0 && a.is_finite()) {
                    return Err(Error::Config(format!("A must be positive, got {a}")));
                }
            }
            CertificateParams::Singularity {
                lambda_prime,
                beta_claim,
                ..
            } => {
                if !(*lambda_prime > 0.0 && lambda_prime.is_finite()) {
                    return Err(Error::Config(format!("lambda' must be positive, got {lambda_prime}")));
                }
                if let Some(b) = beta_claim {
                    if !(*b > 0.0) {
                        return Err(Error::Config(format!("claimed beta must be positive, got {b}")));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    OmegaAlpha,
    GBeta,
    Singularity,
    UpperBound,
}

impl CertificateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CertificateKind::OmegaAlpha => "omega_alpha",
            CertificateKind::GBeta => "g_beta",
            CertificateKind::Singularity => "singularity",
            CertificateKind::UpperBound => "upper_bound",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
    /// The inequalities hold but the candidate is not singular.
    NoConclusion,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::NotApplicable => "not-applicable",
            Verdict::NoConclusion => "no-conclusion",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub kind: CertificateKind,
    pub n: usize,
    pub verdict: Verdict,
    /// Minimum of `LHS - RHS` over the checked nodes.
    pub margin: f64,
    pub scale: f64,
    /// Node of the minimum margin.
    pub worst_node: usize,
    /// Inclusive node range.
    pub nodes_checked: (usize, usize),
    /// The value of `λ` the certificate establishes as a bound, if any.
    pub derived_bound: Option<f64>,
    pub extras: BTreeMap<String, f64>,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

struct Margins {
    margin: f64,
    scale: f64,
    worst: usize,
    within: bool,
}

/// Evaluate `lhs[i] - rhs[i]` on `range` with the module tolerance.
fn margins(
    op: &DiscreteBiharmonic,
    range: std::ops::RangeInclusive<usize>,
    lhs: &[f64],
    rhs: &[f64],
    rounding: &[f64],
) -> Result<Margins> {
    let h2 = op.h() * op.h();
    let scale = range.clone().map(|i| lhs[i].abs()).fold(0.0, f64::max);
    let mut margin = f64::INFINITY;
    let mut worst = *range.start();
    let mut within = true;
    for i in range {
        let d = lhs[i] - rhs[i];
        if !d.is_finite() {
            return Err(Error::CertificateDomain {
                node: i,
                reason: format!("non-finite inequality sides ({}, {})", lhs[i], rhs[i]),
            });
        }
        if d < margin {
            margin = d;
            worst = i;
        }
        let allowance = (RELATIVE_SLACK + h2) * scale + rounding[i] + 4.0 * f64::EPSILON * rhs[i].abs();
        within &= d >= -allowance;
    }
    Ok(Margins {
        margin,
        scale,
        worst,
        within,
    })
}

fn check_dimension(spec: &CertificateSpec, op: &DiscreteBiharmonic) -> Result<()> {
    spec.validate()?;
    if spec.n != op.n() {
        return Err(Error::Config(format!(
            "certificate for n = {} checked against an operator for n = {}",
            spec.n,
            op.n()
        )));
    }
    Ok(())
}

/// `Δ²ω_α >= C(n) α (1 - α) / (1 - ω_α)` at every node with `r < 1`.
pub fn check_omega_alpha(spec: &CertificateSpec, op: &DiscreteBiharmonic) -> Result<CertificateReport> {
    check_dimension(spec, op)?;
    let CertificateParams::OmegaAlpha { alpha } = spec.params else {
        return Err(Error::Config("expected an omega_alpha certificate".into()));
    };
    let lam = quartic_constant(op.n()) * alpha * (1.0 - alpha);
    let omega = RadialField::from_fn(op.mesh(), |r| alpha * (1.0 - r * r).powi(2));
    let lhs = apply(op, &omega)?.values;
    let rounding = apply_rounding_bound(op, &omega)?;
    let rhs: Vec<f64> = omega.values.iter().map(|w| lam / (1.0 - w)).collect();
    let m = op.boundary();
    let res = margins(op, 0..=m - 1, &lhs, &rhs, &rounding)?;
    let mut extras = BTreeMap::new();
    extras.insert("alpha".into(), alpha);
    Ok(CertificateReport {
        kind: CertificateKind::OmegaAlpha,
        n: op.n(),
        verdict: if res.within { Verdict::Pass } else { Verdict::Fail },
        margin: res.margin,
        scale: res.scale,
        worst_node: res.worst,
        nodes_checked: (0, m - 1),
        derived_bound: Some(lam),
        extras,
    })
}

/// `r² (C₀ - log r)^β`, continued by its limit `0` at the origin.
pub fn g_beta_profile(r: f64, c0: f64, beta: f64) -> f64 {
    if r == 0.0 {
        0.0
    } else {
        r * r * (c0 - r.ln()).powf(beta)
    }
}

/// Supersolution check for `ū = 1 - A r² (C₀ - log r)^β`:
/// `Δ²ū >= n(n-2) A² / (1 - ū)` at the nodes in `[r_min, 1)`.
pub fn check_g_beta(spec: &CertificateSpec, op: &DiscreteBiharmonic) -> Result<CertificateReport> {
    check_dimension(spec, op)?;
    let CertificateParams::GBeta { c0, beta, a } = spec.params else {
        return Err(Error::Config("expected a g_beta certificate".into()));
    };
    let n = op.n();
    let m = op.boundary();
    let first = op.mesh().first_node_at_or_beyond(spec.r_min);
    let mut extras = BTreeMap::new();
    extras.insert("c0".into(), c0);
    extras.insert("beta".into(), beta);
    extras.insert("a".into(), a);
    extras.insert("u_bar_at_1".into(), 1.0 - a * c0.powf(beta));
    extras.insert(
        "u_bar_slope_at_1".into(),
        -a * c0.powf(beta - 1.0) * (2.0 * c0 - beta),
    );
    if n <= 2 {
        return Ok(CertificateReport {
            kind: CertificateKind::GBeta,
            n,
            verdict: Verdict::NotApplicable,
            margin: f64::NAN,
            scale: f64::NAN,
            worst_node: first,
            nodes_checked: (first, m - 1),
            derived_bound: None,
            extras,
        });
    }
    let lam = (n * (n - 2)) as f64 * a * a;
    let profile = RadialField::from_fn(op.mesh(), |r| a * g_beta_profile(r, c0, beta));
    let u_bar = RadialField::new(profile.values.iter().map(|q| 1.0 - q).collect());
    let lhs = apply(op, &u_bar)?.values;
    let rounding = apply_rounding_bound(op, &u_bar)?;
    let rhs: Vec<f64> = profile.values.iter().map(|q| lam / q).collect();
    let res = margins(op, first..=m - 1, &lhs, &rhs, &rounding)?;
    Ok(CertificateReport {
        kind: CertificateKind::GBeta,
        n,
        verdict: if res.within { Verdict::Pass } else { Verdict::Fail },
        margin: res.margin,
        scale: res.scale,
        worst_node: res.worst,
        nodes_checked: (first, m - 1),
        derived_bound: Some(lam),
        extras,
    })
}

/// Singularity certificate for a candidate `ω` and parameter `λ'`.
///
/// Checks `Δ²ω <= λ' / (1 - ω)` on `[r_min, 1)` and computes the weighted
/// constant `β` with the weight cut off below `r_min`. When both hold, `β > λ'`
/// and `ω(0) >= 1`, the verdict is a pass and `λ' ` is a strict upper bound for
/// `λ*`. With a regular `ω` the verdict is [`Verdict::NoConclusion`].
pub fn check_singularity_certificate(
    spec: &CertificateSpec,
    op: &DiscreteBiharmonic,
) -> Result<CertificateReport> {
    check_dimension(spec, op)?;
    let CertificateParams::Singularity {
        omega,
        lambda_prime,
        beta_claim,
    } = &spec.params
    else {
        return Err(Error::Config("expected a singularity certificate".into()));
    };
    omega.check_len(op.len())?;
    let m = op.boundary();
    if omega.values[m].abs() > 1e-12 {
        return Err(Error::CertificateDomain {
            node: m,
            reason: format!("omega(1) = {} violates the clamped condition", omega.values[m]),
        });
    }
    let first = op.mesh().first_node_at_or_beyond(spec.r_min);
    for i in first..=m {
        if !(omega.values[i] < 1.0) {
            return Err(Error::CertificateDomain {
                node: i,
                reason: format!("omega = {} >= 1 at an included node", omega.values[i]),
            });
        }
    }
    // The stencil at the first included node reaches two nodes inward.
    let reach = first.saturating_sub(2);
    let mut stencil_field = omega.clone();
    let spill = omega.values[first.min(m)];
    for v in &mut stencil_field.values[..reach] {
        *v = spill;
    }
    let lap2 = apply(op, &stencil_field)?.values;
    let rounding = apply_rounding_bound(op, &stencil_field)?;
    let rhs: Vec<f64> = omega.values.iter().map(|w| lambda_prime / (1.0 - w)).collect();
    // Margin of `λ'/(1-ω) - Δ²ω`: the subsolution side is the right-hand side.
    let res = margins(op, first..=m - 1, &rhs, &lap2, &rounding)?;

    let beta = weighted_beta(op, omega, Some(spec.r_min))?.value;
    let singular = !(omega.values[0] < 1.0);
    let mut extras = BTreeMap::new();
    extras.insert("beta".into(), beta);
    extras.insert("lambda_prime".into(), *lambda_prime);
    extras.insert("subsolution_margin".into(), res.margin);
    extras.insert("singular".into(), if singular { 1.0 } else { 0.0 });
    if let Some(b) = beta_claim {
        extras.insert("beta_claim".into(), *b);
        extras.insert("beta_minus_claim".into(), beta - b);
    }
    let (verdict, margin, derived) = if !res.within {
        (Verdict::Fail, res.margin, None)
    } else if beta <= *lambda_prime {
        (Verdict::Fail, beta - lambda_prime, None)
    } else if !singular {
        (Verdict::NoConclusion, res.margin, None)
    } else {
        (Verdict::Pass, res.margin, Some(*lambda_prime))
    };
    Ok(CertificateReport {
        kind: CertificateKind::Singularity,
        n: op.n(),
        verdict,
        margin,
        scale: res.scale,
        worst_node: res.worst,
        nodes_checked: (first, m - 1),
        derived_bound: derived,
        extras,
    })
}

/// `λ_hi <= ν₁/4 · (1 + 10h²)` for a continuation on the same mesh.
///
/// `extras` also records whether `lower_bound(n) <= λ_lo`.
pub fn upper_bound_check(op: &DiscreteBiharmonic, result: &ContinuationResult) -> Result<CertificateReport> {
    if result.n != op.n() || result.intervals != op.boundary() {
        return Err(Error::Config("continuation and operator use different meshes or dimensions".into()));
    }
    let h = op.h();
    let bound = 0.25 * result.nu1;
    let (lo, hi) = result.lambda_star_bracket;
    let allowed = bound * (1.0 + 10.0 * h * h);
    let lower = lower_bound(op.n());
    let mut extras = BTreeMap::new();
    extras.insert("nu1".into(), result.nu1);
    extras.insert("lambda_lo".into(), lo);
    extras.insert("lambda_hi".into(), hi);
    extras.insert("slack".into(), bound - result.lambda_star());
    extras.insert("lower_bound".into(), lower);
    extras.insert("lower_holds".into(), if lower <= lo { 1.0 } else { 0.0 });
    Ok(CertificateReport {
        kind: CertificateKind::UpperBound,
        n: op.n(),
        verdict: if hi <= allowed { Verdict::Pass } else { Verdict::Fail },
        margin: allowed - hi,
        scale: bound,
        worst_node: op.boundary(),
        nodes_checked: (0, op.boundary()),
        derived_bound: Some(bound),
        extras,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh;
    use crate::operator::assemble_biharmonic;
    use crate::spectral::nu1;

    fn op(n: usize, m: usize) -> DiscreteBiharmonic {
        assemble_biharmonic(&build_mesh(m).unwrap(), n).unwrap()
    }

    #[test]
    fn lower_bound_values() {
        assert_eq!(lower_bound(3), 30.0);
        assert_eq!(lower_bound(6), 96.0);
        assert_eq!(lower_bound(1), 6.0);
        assert_eq!(lower_bound(7), 140.0);
        assert!(lower_bound(8) > 2.0 * 8.0 * 10.0);
    }

    #[test]
    fn omega_alpha_half() {
        let d = op(3, 128);
        let rep = check_omega_alpha(&CertificateSpec::omega_alpha(3, 0.5), &d).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert_eq!(rep.derived_bound, Some(30.0));
        let rep = check_omega_alpha(&CertificateSpec::omega_alpha(3, 0.1), &d).unwrap();
        assert!(rep.passed());
        assert!((rep.derived_bound.unwrap() - 120.0 * 0.09).abs() < 1e-12);
    }

    #[test]
    fn omega_alpha_range() {
        let d = op(3, 32);
        assert!(check_omega_alpha(&CertificateSpec::omega_alpha(3, 1.0), &d).is_err());
        assert!(check_omega_alpha(&CertificateSpec::omega_alpha(2, 0.5), &d).is_err());
    }

    #[test]
    fn g_beta_standard() {
        let d = op(3, 256);
        let rep = check_g_beta(&CertificateSpec::standard_g_beta(3, 0.05), &d).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert_eq!(rep.derived_bound, Some(12.0));
        assert!(rep.extras["u_bar_at_1"].abs() < 1e-15);
        assert!(rep.extras["u_bar_slope_at_1"].abs() < 1e-15);
        let d2 = op(2, 64);
        let rep = check_g_beta(&CertificateSpec::standard_g_beta(2, 0.05), &d2).unwrap();
        assert_eq!(rep.verdict, Verdict::NotApplicable);
    }

    #[test]
    fn trivial_singularity_candidate() {
        let d = op(3, 64);
        let nu = nu1(&d).unwrap().value;
        let spec = CertificateSpec::singularity(3, RadialField::zeros(65), 0.5 * nu, 0.05);
        let rep = check_singularity_certificate(&spec, &d).unwrap();
        assert_eq!(rep.verdict, Verdict::NoConclusion);
        assert!((rep.extras["beta"] - nu).abs() < 1e-8 * nu);

        let spec = CertificateSpec::singularity(3, RadialField::zeros(65), 2.0 * nu, 0.05);
        let rep = check_singularity_certificate(&spec, &d).unwrap();
        assert_eq!(rep.verdict, Verdict::Fail);
        assert!((rep.margin - (nu - 2.0 * nu)).abs() < 1e-6 * nu);
    }

    #[test]
    fn singularity_domain_error() {
        let d = op(3, 64);
        let mut omega = RadialField::zeros(65);
        omega.values[30] = 1.0;
        let spec = CertificateSpec::singularity(3, omega, 10.0, 0.05);
        assert!(matches!(
            check_singularity_certificate(&spec, &d),
            Err(Error::CertificateDomain { node: 30, .. })
        ));
    }
}
