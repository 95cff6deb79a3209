//! Minimal solutions of `Δ²u = λ (1 - u)^(-p)`, continuation of the minimal
//! branch up to the fold, and diagnostics of the extremal solution.

use serde::{Deserialize, Serialize};

use crate::certificates::lower_bound;
use crate::config::ProblemConfig;
use crate::error::{Error, Result};
use crate::linalg::{factor, solve_linear, BandedFactorization};
use crate::mesh::{build_mesh, weighted_dot, RadialField};
use crate::operator::{assemble_biharmonic, laplacian, DiscreteBiharmonic};
use crate::spectral::{linearization_weight, mu1_with_tol, nu1_with_tol};

/// Monotone iterates stop once `sup u` reaches `1 - MONOTONE_CEILING`.
pub const MONOTONE_CEILING: f64 = 1e-3;
/// Newton steps are damped to keep `sup u < 1 - NEWTON_CEILING`.
pub const NEWTON_CEILING: f64 = 1e-6;
pub const MAX_MONOTONE_ITERATIONS: usize = 200_000;
pub const MAX_NEWTON_ITERATIONS: usize = 60;
/// Pointwise slack for the monotonicity of the branch.
pub const MONOTONE_SLACK: f64 = 1e-12;
/// Rounding allowance for the monotonicity of successive monotone iterates.
pub const ITERATE_SLACK: f64 = 1e-10;
/// Largest `λ / λ_lo` accepted by [`extinction_check`].
pub const EXTINCTION_MAX_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Monotone,
    Newton,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Monotone => "monotone",
            Method::Newton => "newton",
        }
    }
}

/// One converged solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub lambda: f64,
    pub u: RadialField,
    pub mu1: f64,
    pub sup_norm: f64,
    /// Fixed-point residual `‖u - (Δ²)⁻¹ λ (1-u)^(-p)‖∞`.
    pub residual: f64,
    pub method: Method,
    pub iterations: usize,
}

fn nonlinearity(u: &RadialField, lambda: f64, p: f64) -> RadialField {
    let last = u.len() - 1;
    RadialField::new(
        u.values
            .iter()
            .enumerate()
            .map(|(i, &v)| if i == last { 0.0 } else { lambda * (1.0 - v).powf(-p) })
            .collect(),
    )
}

/// `‖u - A⁻¹ λ f(u)‖∞` for a factorization of the unshifted operator.
pub fn fixed_point_residual(
    unshifted: &BandedFactorization,
    u: &RadialField,
    lambda: f64,
    p: f64,
) -> Result<f64> {
    let image = solve_linear(unshifted, &nonlinearity(u, lambda, p))?;
    Ok(image.max_abs_diff(u))
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::Config(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    Ok(())
}

fn finish(
    op: &DiscreteBiharmonic,
    lambda: f64,
    u: RadialField,
    residual: f64,
    method: Method,
    iterations: usize,
    config: &ProblemConfig,
) -> Result<BranchPoint> {
    let mu1 = mu1_with_tol(op, &u, lambda, config.p, config.tol_eig)?.value;
    Ok(BranchPoint {
        lambda,
        sup_norm: u.interior_max(),
        u,
        mu1,
        residual,
        method,
        iterations,
    })
}

struct Monotone<'a> {
    op: &'a DiscreteBiharmonic,
    fact: BandedFactorization,
    lambda: f64,
    p: f64,
    tol: f64,
}

impl Monotone<'_> {
    /// Iterate from `start` (a subsolution) until the increments fall below `tol`.
    fn run(&self, start: RadialField, cap: usize, mut keep: Option<&mut Vec<RadialField>>) -> Result<(RadialField, f64, usize)> {
        let mut u = start;
        for k in 1..=cap {
            let next = solve_linear(&self.fact, &nonlinearity(&u, self.lambda, self.p))?;
            let mut step = 0.0f64;
            for (i, (a, b)) in next.values.iter().zip(&u.values).enumerate() {
                let d = a - b;
                if d < -ITERATE_SLACK {
                    return Err(Error::NoConvergence {
                        iterations: k,
                        residual: -d,
                        reason: format!("iterate decreased at node {i}"),
                    });
                }
                step = step.max(d.abs());
            }
            let top = next.interior_max();
            if let Some(store) = keep.as_deref_mut() {
                store.push(next.clone());
            }
            if !(top < 1.0 - MONOTONE_CEILING) {
                return Err(Error::NoConvergence {
                    iterations: k,
                    residual: step,
                    reason: format!("iterates reached sup u = {top}"),
                });
            }
            u = next;
            if step <= self.tol {
                return Ok((u, step, k));
            }
        }
        let residual = fixed_point_residual(&self.fact, &u, self.lambda, self.p)?;
        Err(Error::NoConvergence {
            iterations: cap,
            residual,
            reason: "monotone iteration cap reached".into(),
        })
    }
}

fn monotone<'a>(op: &'a DiscreteBiharmonic, lambda: f64, config: &ProblemConfig) -> Result<Monotone<'a>> {
    Ok(Monotone {
        op,
        fact: factor(op, None)?,
        lambda,
        p: config.p,
        tol: config.tol_newton,
    })
}

/// Minimal solution by the monotone scheme `Δ²u_{k+1} = λ (1 - u_k)^(-p)`, `u_0 = 0`.
pub fn monotone_solve(op: &DiscreteBiharmonic, lambda: f64, config: &ProblemConfig) -> Result<BranchPoint> {
    monotone_solve_from(op, lambda, &RadialField::zeros(op.len()), config, MAX_MONOTONE_ITERATIONS)
}

/// Monotone scheme started from a subsolution `start` (for instance a minimal
/// solution at a smaller `λ`).
pub fn monotone_solve_from(
    op: &DiscreteBiharmonic,
    lambda: f64,
    start: &RadialField,
    config: &ProblemConfig,
    cap: usize,
) -> Result<BranchPoint> {
    check_lambda(lambda)?;
    start.check_len(op.len())?;
    let scheme = monotone(op, lambda, config)?;
    let (u, _, iterations) = scheme.run(start.clone(), cap, None)?;
    let residual = fixed_point_residual(&scheme.fact, &u, lambda, config.p)?;
    finish(scheme.op, lambda, u, residual, Method::Monotone, iterations, config)
}

/// The first `count` monotone iterates from zero (fewer if it converges or fails first).
pub fn monotone_iterates(
    op: &DiscreteBiharmonic,
    lambda: f64,
    config: &ProblemConfig,
    count: usize,
) -> Result<Vec<RadialField>> {
    check_lambda(lambda)?;
    let scheme = monotone(op, lambda, config)?;
    let mut store = Vec::with_capacity(count);
    match scheme.run(RadialField::zeros(op.len()), count, Some(&mut store)) {
        Ok(_) | Err(Error::NoConvergence { .. }) => Ok(store),
        Err(e) => Err(e),
    }
}

/// Newton's method on `F(u) = Δ²u - λ (1 - u)^(-p)` from `guess`.
pub fn newton_solve(
    op: &DiscreteBiharmonic,
    lambda: f64,
    guess: &RadialField,
    config: &ProblemConfig,
) -> Result<BranchPoint> {
    check_lambda(lambda)?;
    guess.check_len(op.len())?;
    let p = config.p;
    let mut u = guess.clone();
    let last = u.len() - 1;
    u.values[last] = 0.0;
    if let Some(i) = u.values[..last].iter().position(|&v| !(0.0..1.0).contains(&v)) {
        return Err(Error::Config(format!(
            "Newton guess must lie in [0, 1) at interior nodes; node {i} has {}",
            u.values[i]
        )));
    }
    let unshifted = factor(op, None)?;

    // Newton on the fixed-point map G(u) = u - A⁻¹ λ f(u). With W = λ f'(u),
    // the step (A - W)⁻¹ (λ f(u) - A u) equals -G - (A - W)⁻¹ W G, which never
    // forms A u and so avoids its h⁻⁴-scaled rounding error.
    let mut residual = f64::INFINITY;
    for it in 1..=MAX_NEWTON_ITERATIONS {
        let image = solve_linear(&unshifted, &nonlinearity(&u, lambda, p))?;
        let g: Vec<f64> = u.values.iter().zip(&image.values).map(|(a, b)| a - b).collect();
        residual = g.iter().fold(0.0, |m, v| m.max(v.abs()));
        if residual <= config.tol_newton {
            return finish(op, lambda, u, residual, Method::Newton, it - 1, config);
        }
        let weight = linearization_weight(&u, lambda, p)?;
        let wg = RadialField::new(weight.iter().zip(&g).map(|(w, x)| w * x).collect());
        let jac = match factor(op, Some(&RadialField::new(weight))) {
            Ok(f) => f,
            Err(Error::SingularOperator { .. }) => return Err(Error::FoldDetected { lambda }),
            Err(e) => return Err(e),
        };
        let corr = solve_linear(&jac, &wg)?;
        let delta: Vec<f64> = g.iter().zip(&corr.values).map(|(a, b)| -a - b).collect();

        let mut t = 1.0;
        u = loop {
            let cand = RadialField::new(u.values.iter().zip(&delta).map(|(a, d)| a + t * d).collect());
            if cand.is_finite() && cand.interior_max() < 1.0 - NEWTON_CEILING {
                break cand;
            }
            t *= 0.5;
            if t < 1e-10 {
                return Err(Error::NoConvergence {
                    iterations: it,
                    residual,
                    reason: "damping could not keep the iterate below 1".into(),
                });
            }
        };
    }
    Err(Error::NoConvergence {
        iterations: MAX_NEWTON_ITERATIONS,
        residual,
        reason: "Newton iteration cap reached".into(),
    })
}

/// The minimal branch from `λ = 0` up to a bracket of the fold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuationResult {
    pub n: usize,
    pub intervals: usize,
    pub p: f64,
    pub nu1: f64,
    /// Minimal-branch points with strictly increasing `λ` (λ = 0 excluded).
    pub points: Vec<BranchPoint>,
    pub lambda_star_bracket: (f64, f64),
    /// `u*` extrapolated in `sqrt(λ* - λ)` from the last two points.
    pub u_star: RadialField,
    pub u_star_sup: f64,
    /// `sup u* <= 1 - 10 h` on this mesh.
    pub regular_on_mesh: bool,
    /// Smallest rejected parameter at which a Newton Jacobian was singular.
    pub fold_signal: Option<f64>,
    pub rejected_attempts: usize,
}

impl ContinuationResult {
    pub fn lambda_star(&self) -> f64 {
        0.5 * (self.lambda_star_bracket.0 + self.lambda_star_bracket.1)
    }

    pub fn last_point(&self) -> &BranchPoint {
        self.points.last().expect("continuation keeps at least one point")
    }
}

enum Attempt {
    Accepted(BranchPoint),
    Rejected { fold: bool },
}

fn attempt(
    op: &DiscreteBiharmonic,
    lambda: f64,
    prev: &RadialField,
    config: &ProblemConfig,
) -> Result<Attempt> {
    let on_branch = |pt: &BranchPoint| {
        pt.mu1 > 0.0
            && pt
                .u
                .values
                .iter()
                .zip(&prev.values)
                .all(|(a, b)| *a >= b - MONOTONE_SLACK)
    };
    let mut fold = false;
    match newton_solve(op, lambda, prev, config) {
        Ok(pt) if on_branch(&pt) => return Ok(Attempt::Accepted(pt)),
        Ok(_) => {}
        Err(Error::FoldDetected { .. }) => fold = true,
        // No real ground state: the solution found is not on the minimal branch.
        Err(Error::EigenNoConvergence { .. }) => {}
        Err(e) if e.is_no_solution() => {}
        Err(e) => return Err(e),
    }
    // A minimal solution at a smaller λ is a subsolution, so the monotone
    // scheme from it reaches the minimal solution whenever one exists.
    match monotone_solve_from(op, lambda, prev, config, 20_000) {
        Ok(pt) if on_branch(&pt) => {
            // Polish to the Newton residual when possible.
            match newton_solve(op, lambda, &pt.u, config) {
                Ok(polished) if on_branch(&polished) && polished.u.max_abs_diff(&pt.u) < 1e-8 => {
                    Ok(Attempt::Accepted(polished))
                }
                _ => Ok(Attempt::Accepted(pt)),
            }
        }
        Ok(_) | Err(Error::EigenNoConvergence { .. }) => Ok(Attempt::Rejected { fold }),
        Err(e) if e.is_no_solution() => Ok(Attempt::Rejected { fold }),
        Err(e) => Err(e),
    }
}

/// Continue the minimal branch from `λ = 0` and bracket its fold.
///
/// Natural continuation with step `0.02 · lower_bound(n)` until the first
/// failure, then bisection until the bracket is relatively narrower than
/// `tol_fold`.
pub fn continue_branch(op: &DiscreteBiharmonic, config: &ProblemConfig) -> Result<ContinuationResult> {
    config.validate()?;
    let nu1 = nu1_with_tol(op, config.tol_eig)?.value;
    let step = 0.02 * lower_bound(op.n());
    let mut points: Vec<BranchPoint> = Vec::new();
    let mut current = RadialField::zeros(op.len());
    let mut lo = 0.0;
    let mut hi: Option<f64> = None;
    let mut fold_signal = None;
    let mut rejected = 0;

    loop {
        let trial = match hi {
            None => lo + step,
            Some(h) => {
                if h - lo <= config.tol_fold * h {
                    break;
                }
                0.5 * (lo + h)
            }
        };
        match attempt(op, trial, &current, config)? {
            Attempt::Accepted(pt) => {
                lo = trial;
                current = pt.u.clone();
                points.push(pt);
            }
            Attempt::Rejected { fold } => {
                rejected += 1;
                if fold {
                    fold_signal = Some(fold_signal.map_or(trial, |f: f64| f.min(trial)));
                }
                hi = Some(trial);
            }
        }
    }
    let hi = hi.expect("loop exits with a bracket");
    if points.is_empty() {
        return Err(Error::NoConvergence {
            iterations: rejected,
            residual: f64::NAN,
            reason: format!("no minimal solution found below lambda = {hi}"),
        });
    }
    let u_star = extrapolate_u_star(&points, hi);
    let u_star_sup = u_star.interior_max();
    Ok(ContinuationResult {
        n: op.n(),
        intervals: op.mesh().intervals(),
        p: config.p,
        nu1,
        u_star_sup,
        regular_on_mesh: u_star_sup <= 1.0 - 10.0 * op.h(),
        u_star,
        lambda_star_bracket: (lo, hi),
        points,
        fold_signal,
        rejected_attempts: rejected,
    })
}

/// Build the mesh and operator from `config` and continue the branch.
pub fn run_continuation(config: &ProblemConfig) -> Result<ContinuationResult> {
    config.validate()?;
    let op = assemble_biharmonic(&build_mesh(config.intervals)?, config.n)?;
    continue_branch(&op, config)
}

/// Linear extrapolation of `u` in `s = sqrt(λ* - λ)` to `s = 0`.
fn extrapolate_u_star(points: &[BranchPoint], lambda_star: f64) -> RadialField {
    let last = &points[points.len() - 1];
    if points.len() < 2 {
        return last.u.clone();
    }
    let prev = &points[points.len() - 2];
    let s_b = (lambda_star - last.lambda).max(0.0).sqrt();
    let s_a = (lambda_star - prev.lambda).max(0.0).sqrt();
    if !(s_a > s_b) {
        return last.u.clone();
    }
    let c = s_b / (s_a - s_b);
    let last_idx = last.u.len() - 1;
    RadialField::new(
        last.u
            .values
            .iter()
            .zip(&prev.u.values)
            .enumerate()
            .map(|(i, (b, a))| {
                if i == last_idx {
                    0.0
                } else {
                    (b + c * (b - a)).min(1.0 - NEWTON_CEILING)
                }
            })
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegularityVerdict {
    RegularConsistent,
    SingularSuspect,
}

impl RegularityVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            RegularityVerdict::RegularConsistent => "regular-consistent",
            RegularityVerdict::SingularSuspect => "singular-suspect",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementRow {
    pub intervals: usize,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub u_star_sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremalReport {
    pub n: usize,
    pub rows: Vec<RefinementRow>,
    /// Largest relative change of `sup u*` between consecutive meshes.
    pub sup_variation: f64,
    pub verdict: RegularityVerdict,
}

/// Largest relative change of `sup u*` tolerated between refinements.
pub const SUP_VARIATION_TOLERANCE: f64 = 0.01;

/// Regularity verdict from continuations of one dimension on several meshes.
///
/// Regular-consistent when `sup u* <= 1 - 10h` on every mesh and it changes by
/// at most 1% between consecutive meshes.
pub fn extremal_report(results: &[ContinuationResult]) -> Result<ExtremalReport> {
    let first = results
        .first()
        .ok_or_else(|| Error::Config("extremal report needs at least one continuation".into()))?;
    if results.iter().any(|r| r.n != first.n) {
        return Err(Error::Config("continuations of different dimensions".into()));
    }
    let mut sorted: Vec<&ContinuationResult> = results.iter().collect();
    sorted.sort_by_key(|r| r.intervals);
    let rows: Vec<RefinementRow> = sorted
        .iter()
        .map(|r| RefinementRow {
            intervals: r.intervals,
            lambda_lo: r.lambda_star_bracket.0,
            lambda_hi: r.lambda_star_bracket.1,
            u_star_sup: r.u_star_sup,
        })
        .collect();
    let sup_variation = rows
        .windows(2)
        .map(|w| (w[1].u_star_sup - w[0].u_star_sup).abs() / w[0].u_star_sup)
        .fold(0.0, f64::max);
    let bounded = sorted.iter().all(|r| r.regular_on_mesh);
    let verdict = if bounded && sup_variation <= SUP_VARIATION_TOLERANCE {
        RegularityVerdict::RegularConsistent
    } else {
        RegularityVerdict::SingularSuspect
    };
    Ok(ExtremalReport {
        n: first.n,
        rows,
        sup_variation,
        verdict,
    })
}

/// Extinction profile `V_λ = λ (1 - r²)² / (8n(n+2))`.
pub fn extinction_profile(op: &DiscreteBiharmonic, lambda: f64) -> RadialField {
    let n = op.n() as f64;
    let c = lambda / (8.0 * n * (n + 2.0));
    RadialField::from_fn(op.mesh(), |r| c * (1.0 - r * r).powi(2))
}

/// `u_λ - V_λ`, computed as the clamped solution with source `λ((1-u)^(-p) - 1)`.
///
/// The discrete operator maps `V_λ` to the constant `λ` exactly, so this equals
/// the difference of the discrete fields without cancellation near `r = 1`.
pub fn excess_over_profile(
    op: &DiscreteBiharmonic,
    unshifted: &BandedFactorization,
    point: &BranchPoint,
    p: f64,
) -> Result<RadialField> {
    let mut src = nonlinearity(&point.u, point.lambda, p);
    let last = src.len() - 1;
    for v in &mut src.values[..last] {
        *v -= point.lambda;
    }
    let _ = op;
    solve_linear(unshifted, &src)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionReport {
    pub lambda: f64,
    /// `sup |u_λ / V_λ - 1|` over the nodes with `r < 1`.
    pub sup_ratio_deviation: f64,
    /// `min (u_λ - V_λ)` over the nodes with `r < 1`.
    pub min_excess: f64,
    pub argmin_node: usize,
    pub point: BranchPoint,
}

/// Compare the minimal solution at small `λ` with the extinction profile.
pub fn extinction_check(
    op: &DiscreteBiharmonic,
    lambda: f64,
    lambda_lo: f64,
    config: &ProblemConfig,
) -> Result<ExtinctionReport> {
    if !(lambda > 0.0 && lambda < lambda_lo) {
        return Err(Error::Config(format!(
            "extinction check needs 0 < lambda < {lambda_lo}, got {lambda}"
        )));
    }
    if lambda > EXTINCTION_MAX_FRACTION * lambda_lo {
        return Err(Error::Config(format!(
            "lambda = {lambda} is beyond the small-parameter regime ({} x lambda_lo)",
            EXTINCTION_MAX_FRACTION
        )));
    }
    let point = monotone_solve(op, lambda, config)?;
    excess_report(op, &point, config.p)
}

/// Ratio and excess of a solved point against `V_λ`.
pub fn excess_report(op: &DiscreteBiharmonic, point: &BranchPoint, p: f64) -> Result<ExtinctionReport> {
    let unshifted = factor(op, None)?;
    let excess = excess_over_profile(op, &unshifted, point, p)?;
    let profile = extinction_profile(op, point.lambda);
    let m = op.boundary();
    let mut sup_dev = 0.0f64;
    let mut min_excess = f64::INFINITY;
    let mut argmin = 0;
    for i in 0..m {
        let e = excess.values[i];
        sup_dev = sup_dev.max((e / profile.values[i]).abs());
        if e < min_excess {
            min_excess = e;
            argmin = i;
        }
    }
    Ok(ExtinctionReport {
        lambda: point.lambda,
        sup_ratio_deviation: sup_dev,
        min_excess,
        argmin_node: argmin,
        point: point.clone(),
    })
}

/// `(∫(Δu)², ∫(1-u)^(-2))` in the radial measure `r^(n-1) dr`.
pub fn branch_integrals(op: &DiscreteBiharmonic, u: &RadialField) -> Result<(f64, f64)> {
    let lap = laplacian(op, u)?;
    let w = op.weights();
    let energy = weighted_dot(w, &lap.values, &lap.values);
    let inv: Vec<f64> = u.values.iter().map(|v| (1.0 - v).powi(-2)).collect();
    let inverse_square = weighted_dot(w, &inv, &vec![1.0; inv.len()]);
    Ok((energy, inverse_square))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H02Row {
    pub lambda: f64,
    pub energy: f64,
    pub inverse_square: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H02Report {
    pub rows: Vec<H02Row>,
    /// Energy at the last branch point over the energy at the last point with `λ <= 0.9 λ_hi`.
    pub energy_ratio: f64,
    pub max_inverse_square: f64,
    /// `energy_ratio <= 2` and every integral finite.
    pub bounded: bool,
}

/// H₀² energy and `‖(1-u)^(-1)‖²` along the branch.
pub fn h02_norm_bound_check(op: &DiscreteBiharmonic, result: &ContinuationResult) -> Result<H02Report> {
    let rows = result
        .points
        .iter()
        .map(|pt| {
            let (energy, inverse_square) = branch_integrals(op, &pt.u)?;
            Ok(H02Row {
                lambda: pt.lambda,
                energy,
                inverse_square,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let cut = 0.9 * result.lambda_star_bracket.1;
    let reference = rows
        .iter()
        .rfind(|r| r.lambda <= cut)
        .or_else(|| rows.first())
        .map_or(f64::NAN, |r| r.energy);
    let last = rows.last().map_or(f64::NAN, |r| r.energy);
    let energy_ratio = last / reference;
    let max_inverse_square = rows.iter().map(|r| r.inverse_square).fold(0.0, f64::max);
    let finite = rows.iter().all(|r| r.energy.is_finite() && r.inverse_square.is_finite());
    Ok(H02Report {
        bounded: finite && energy_ratio <= 2.0,
        rows,
        energy_ratio,
        max_inverse_square,
    })
}
