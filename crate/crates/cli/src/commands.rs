use std::collections::BTreeMap;

use clampfold::branch::{
    excess_over_profile, extinction_check, extinction_profile, extremal_report, run_continuation, ExtremalReport,
};
use clampfold::certificates::{check_g_beta, check_omega_alpha, upper_bound_check};
use clampfold::linalg::factor;
use clampfold::spectral::nu1_with_tol;
use clampfold::{
    assemble_biharmonic, build_mesh, lower_bound, monotone_solve, newton_solve, CertificateReport, CertificateSpec,
    ContinuationResult, DiscreteBiharmonic, Error, ProblemConfig, RadialField,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::args::*;
use crate::output::{resolve_dir, stem_float, write_table, Cell, Run, Table, RADIAL_CAVEAT};

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad flag values (exit 1).
    Usage(String),
    /// Evidence that no solution exists at the requested parameter (exit 2).
    NoSolution(Error),
    /// Solver or I/O failure (exit 3).
    Internal(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::NoSolution(_) => 2,
            Failure::Internal(_) => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(msg) => Failure::Usage(msg),
            other => Failure::Internal(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Internal(format!("i/o: {e}"))
    }
}

type Outcome = Result<serde_json::Value, Failure>;

fn config(n: usize, m: usize, p: f64) -> Result<ProblemConfig, Failure> {
    let cfg = ProblemConfig::new(n, m).with_p(p);
    cfg.validate()?;
    Ok(cfg)
}

fn operator(cfg: &ProblemConfig) -> Result<DiscreteBiharmonic, Failure> {
    Ok(assemble_biharmonic(&build_mesh(cfg.intervals)?, cfg.n)?)
}

fn dims_tag(d: &Dims) -> String {
    let v = &d.0;
    let contiguous = v.windows(2).all(|w| w[1] == w[0] + 1);
    match v.as_slice() {
        [one] => format!("n{one}"),
        [a, .., b] if contiguous => format!("n{a}-{b}"),
        _ => format!("n{}", v.iter().map(usize::to_string).collect::<Vec<_>>().join("+")),
    }
}

fn meshes_tag(m: &[usize]) -> String {
    format!("M{}", m.iter().map(usize::to_string).collect::<Vec<_>>().join("+"))
}

fn p_tag(p: f64) -> String {
    if p == 1.0 {
        String::new()
    } else {
        format!("_p{}", stem_float(p))
    }
}

fn lambda_tag(l: LambdaArg) -> String {
    match l {
        LambdaArg::Absolute(v) => stem_float(v),
        LambdaArg::Relative(f) => format!("{}xstar", stem_float(f)),
    }
}

fn continuation(cfg: &ProblemConfig) -> Result<ContinuationResult, Failure> {
    Ok(run_continuation(cfg)?)
}

/// Resolve `λ`, computing λ* only when a relative value asks for it.
fn resolve_lambda(l: LambdaArg, star: &mut Option<f64>, cfg: &ProblemConfig) -> Result<f64, Failure> {
    match l {
        LambdaArg::Absolute(v) => Ok(v),
        LambdaArg::Relative(f) => {
            if star.is_none() {
                *star = Some(continuation(cfg)?.lambda_star());
            }
            Ok(f * star.unwrap())
        }
    }
}

pub fn solve(a: &SolveArgs) -> Outcome {
    let cfg = config(a.n, a.m, a.common.p)?;
    let method = match a.method {
        MethodArg::Monotone => "monotone",
        MethodArg::Newton => "newton",
    };
    let stem = format!("solve_n{}_M{}{}_l{}_{method}", a.n, a.m, p_tag(cfg.p), lambda_tag(a.lambda));
    let mut run = Run::new(resolve_dir(a.common.out.as_deref()), "solve", stem)?;
    run.add_config(&cfg);
    let op = operator(&cfg)?;
    let mut star = None;
    let lambda = resolve_lambda(a.lambda, &mut star, &cfg)?;
    let solved = match a.method {
        MethodArg::Monotone => monotone_solve(&op, lambda, &cfg),
        MethodArg::Newton => newton_solve(&op, lambda, &RadialField::zeros(op.len()), &cfg),
    };
    let pt = match solved {
        Ok(pt) => pt,
        Err(e) if e.is_no_solution() => {
            let summary = json!({
                "n": a.n, "M": a.m, "p": cfg.p, "lambda": lambda, "lambda_star": star,
                "converged": false, "method": method, "reason": e.to_string(),
            });
            run.write_json("", &summary)?;
            run.finish(vec![a.m])?;
            return Err(Failure::NoSolution(e));
        }
        Err(e) => return Err(e.into()),
    };
    let profile = extinction_profile(&op, lambda);
    let excess = excess_over_profile(&op, &factor(&op, None)?, &pt, cfg.p)?;
    let mut t = Table::new(&["r", "u", "V_lambda", "u_minus_V"]);
    for i in 0..op.len() {
        t.push(vec![
            op.mesh().r(i).into(),
            pt.u.values[i].into(),
            profile.values[i].into(),
            excess.values[i].into(),
        ]);
    }
    run.write_csv("", &t)?;
    let summary = json!({
        "n": a.n, "M": a.m, "p": cfg.p, "lambda": lambda, "lambda_star": star,
        "converged": true, "method": pt.method.as_str(), "mu1": pt.mu1, "sup_norm": pt.sup_norm,
        "residual": pt.residual, "iterations": pt.iterations, "caveat": RADIAL_CAVEAT,
    });
    run.write_json("", &summary)?;
    run.finish(vec![a.m])?;
    Ok(summary)
}

fn continuation_summary(r: &ContinuationResult) -> serde_json::Value {
    json!({
        "n": r.n, "M": r.intervals, "p": r.p,
        "lambda_lo": r.lambda_star_bracket.0, "lambda_hi": r.lambda_star_bracket.1,
        "lambda_star": r.lambda_star(), "nu1": r.nu1, "nu1_over_4": 0.25 * r.nu1,
        "lower_bound": lower_bound(r.n), "u_star_sup": r.u_star_sup,
        "regular_on_mesh": r.regular_on_mesh, "fold_signal": r.fold_signal,
        "points": r.points.len(), "rejected_attempts": r.rejected_attempts,
    })
}

pub fn branch(a: &BranchArgs) -> Outcome {
    let cfg = config(a.n, a.m, a.common.p)?;
    let stem = format!("branch_n{}_M{}{}", a.n, a.m, p_tag(cfg.p));
    let mut run = Run::new(resolve_dir(a.common.out.as_deref()), "branch", stem)?;
    run.add_config(&cfg);
    let r = continuation(&cfg)?;
    let mut t = Table::new(&["lambda", "sup_norm", "mu1", "residual", "method", "iterations"]);
    for pt in &r.points {
        t.push(vec![
            pt.lambda.into(),
            pt.sup_norm.into(),
            pt.mu1.into(),
            pt.residual.into(),
            pt.method.as_str().into(),
            pt.iterations.into(),
        ]);
    }
    run.write_csv("", &t)?;
    let mesh = build_mesh(a.m)?;
    let mut prof = Table::new(&["r", "u_star"]);
    for (i, v) in r.u_star.values.iter().enumerate() {
        prof.push(vec![mesh.r(i).into(), (*v).into()]);
    }
    run.write_csv("_u_star", &prof)?;
    let mut summary = continuation_summary(&r);
    summary["caveat"] = RADIAL_CAVEAT.into();
    run.write_json("", &summary)?;
    run.finish(vec![a.m])?;
    Ok(summary)
}

fn extremal_rows(t: &mut Table, rep: &ExtremalReport) {
    for row in &rep.rows {
        t.push(vec![
            rep.n.into(),
            row.intervals.into(),
            row.lambda_lo.into(),
            row.lambda_hi.into(),
            row.u_star_sup.into(),
        ]);
    }
}

const REFINEMENT_HEADER: [&str; 5] = ["n", "M", "lambda_lo", "lambda_hi", "u_star_sup"];

pub fn lambda_star(a: &LambdaStarArgs) -> Outcome {
    let stem = format!("lambda-star_{}_{}{}", dims_tag(&a.n), meshes_tag(&a.m.0), p_tag(a.common.p));
    let mut run = Run::new(resolve_dir(a.common.out.as_deref()), "lambda-star", stem)?;
    let mut t = Table::new(&REFINEMENT_HEADER);
    let mut reports = Vec::new();
    for &n in &a.n.0 {
        let mut runs = Vec::new();
        for &m in &a.m.0 {
            let cfg = config(n, m, a.common.p)?;
            run.add_config(&cfg);
            runs.push(continuation(&cfg)?);
        }
        let rep = extremal_report(&runs)?;
        extremal_rows(&mut t, &rep);
        reports.push(json!({
            "n": n, "verdict": rep.verdict.as_str(), "sup_variation": rep.sup_variation,
            "lambda_star": runs.last().map(ContinuationResult::lambda_star), "rows": rep.rows,
        }));
    }
    run.write_csv("", &t)?;
    let summary = json!({ "reports": reports });
    run.write_json("", &summary)?;
    run.finish(a.m.0.clone())?;
    Ok(summary)
}

pub fn eigen(a: &EigenArgs) -> Outcome {
    let stem = format!("eigen_{}_M{}", dims_tag(&a.n), a.m);
    let mut run = Run::new(resolve_dir(a.common.out.as_deref()), "eigen", stem)?;
    let mut t = Table::new(&["n", "nu1", "nu1_over_4", "iterations", "residual"]);
    let mut rows = Vec::new();
    for &n in &a.n.0 {
        let cfg = config(n, a.m, a.common.p)?;
        run.add_config(&cfg);
        let op = operator(&cfg)?;
        let pair = nu1_with_tol(&op, cfg.tol_eig)?;
        t.push(vec![
            n.into(),
            pair.value.into(),
            (0.25 * pair.value).into(),
            pair.iterations.into(),
            pair.residual.into(),
        ]);
        let mut phi = Table::new(&["r", "phi"]);
        for (i, v) in pair.field.values.iter().enumerate() {
            phi.push(vec![op.mesh().r(i).into(), (*v).into()]);
        }
        run.write_csv(&format!("_phi_n{n}"), &phi)?;
        rows.push(json!({
            "n": n, "nu1": pair.value, "nu1_over_4": 0.25 * pair.value,
            "iterations": pair.iterations, "residual": pair.residual,
        }));
    }
    run.write_csv("", &t)?;
    let summary = json!({ "M": a.m, "eigenvalues": rows, "caveat": RADIAL_CAVEAT });
    run.write_json("", &summary)?;
    run.finish(vec![a.m])?;
    Ok(summary)
}

pub fn bounds(a: &BoundsArgs) -> Outcome {
    let stem = format!("bounds_{}_M{}{}", dims_tag(&a.n), a.m, p_tag(a.common.p));
    let mut run = Run::new(resolve_dir(a.common.out.as_deref()), "bounds", stem)?;
    let header = ["n", "lower_bound", "lambda_lo", "lambda_hi", "nu1_over_4", "lower_holds", "upper_holds"];
    let mut t = Table::new(&header);
    let mut rows = Vec::new();
    for &n in &a.n.0 {
        let cfg = config(n, a.m, a.common.p)?;
        run.add_config(&cfg);
        let op = operator(&cfg)?;
        let r = continue_on(&op, &cfg)?;
        let rep = upper_bound_check(&op, &r)?;
        let lower_holds = rep.extras["lower_holds"] == 1.0;
        let (lo, hi) = r.lambda_star_bracket;
        t.push(vec![
            n.into(),
            lower_bound(n).into(),
            lo.into(),
            hi.into(),
            (0.25 * r.nu1).into(),
            yes_no(lower_holds).into(),
            yes_no(rep.passed()).into(),
        ]);
        rows.push(json!({
            "n": n, "lower_bound": lower_bound(n), "lambda_lo": lo, "lambda_hi": hi,
            "nu1_over_4": 0.25 * r.nu1, "lower_holds": lower_holds, "upper_holds": rep.passed(),
        }));
    }
    run.write_csv("", &t)?;
    let summary = json!({ "M": a.m, "p": a.common.p, "rows": rows, "caveat": RADIAL_CAVEAT });
    run.write_json("", &summary)?;
    run.finish(vec![a.m])?;
    Ok(summary)
}

fn continue_on(op: &DiscreteBiharmonic, cfg: &ProblemConfig) -> Result<ContinuationResult, Failure> {
    Ok(clampfold::continue_branch(op, cfg)?)
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

pub fn extinction(a: &ExtinctionArgs) -> Outcome {
    let cfg = config(a.n, a.m, a.common.p)?;
    let tags: Vec<String> = a.lambdas.0.iter().map(|l| lambda_tag(*l)).collect();
    let stem = format!("extinction_n{}_M{}{}_l{}", a.n, a.m, p_tag(cfg.p), tags.join("+"));
    let mut run = Run::new(resolve_dir(a.common.out.as_deref()), "extinction", stem)?;
    run.add_config(&cfg);
    let op = operator(&cfg)?;
    let r = continue_on(&op, &cfg)?;
    let star = r.lambda_star();
    let lo = r.lambda_star_bracket.0;
    let header = ["lambda", "lambda_over_lambda_star", "sup_ratio_deviation", "min_excess", "argmin_node"];
    let mut t = Table::new(&header);
    let mut rows = Vec::new();
    for l in &a.lambdas.0 {
        let lambda = resolve_lambda(*l, &mut Some(star), &cfg)?;
        let rep = extinction_check(&op, lambda, lo, &cfg)?;
        t.push(vec![
            lambda.into(),
            (lambda / star).into(),
            rep.sup_ratio_deviation.into(),
            rep.min_excess.into(),
            rep.argmin_node.into(),
        ]);
        rows.push(json!({
            "lambda": lambda, "lambda_over_lambda_star": lambda / star,
            "sup_ratio_deviation": rep.sup_ratio_deviation, "min_excess": rep.min_excess,
            "argmin_node": rep.argmin_node,
        }));
    }
    run.write_csv("", &t)?;
    let summary = json!({ "n": a.n, "M": a.m, "p": cfg.p, "lambda_star": star, "rows": rows });
    run.write_json("", &summary)?;
    run.finish(vec![a.m])?;
    Ok(summary)
}

pub fn certify(a: &CertifyArgs) -> Outcome {
    let kind = match a.kind {
        CertKind::OmegaAlpha => "omega-alpha",
        CertKind::GBeta => "g-beta",
        CertKind::UpperBound => "upper-bound",
        CertKind::All => "all",
    };
    let stem = format!("certify_{}_M{}_{kind}", dims_tag(&a.n), a.m);
    let mut run = Run::new(resolve_dir(a.common.out.as_deref()), "certify", stem)?;
    let header = ["kind", "n", "verdict", "margin", "scale", "worst_node", "derived_bound"];
    let mut t = Table::new(&header);
    let mut reports: Vec<CertificateReport> = Vec::new();
    let wants = |k: CertKind| a.kind == k || a.kind == CertKind::All;
    for &n in &a.n.0 {
        let cfg = config(n, a.m, a.common.p)?;
        run.add_config(&cfg);
        let op = operator(&cfg)?;
        if wants(CertKind::OmegaAlpha) {
            reports.push(check_omega_alpha(&CertificateSpec::omega_alpha(n, a.alpha), &op)?);
        }
        if wants(CertKind::GBeta) {
            reports.push(check_g_beta(&CertificateSpec::standard_g_beta(n, a.r_min), &op)?);
        }
        if wants(CertKind::UpperBound) {
            let r = continue_on(&op, &cfg)?;
            reports.push(upper_bound_check(&op, &r)?);
        }
    }
    for rep in &reports {
        t.push(vec![
            rep.kind.as_str().into(),
            rep.n.into(),
            rep.verdict.as_str().into(),
            rep.margin.into(),
            rep.scale.into(),
            rep.worst_node.into(),
            rep.derived_bound.map_or(Cell::S(String::new()), Cell::F),
        ]);
    }
    run.write_csv("", &t)?;
    let summary = json!({ "M": a.m, "reports": reports });
    run.write_json("", &summary)?;
    run.finish(vec![a.m])?;
    Ok(summary)
}

#[derive(Serialize)]
struct SweepRow {
    n: usize,
    lambda_star: f64,
    nu1_over_4: f64,
    lower_bound: f64,
    u_star_sup: f64,
    regular_verdict: &'static str,
}

pub fn sweep(a: &SweepArgs) -> Outcome {
    let meshes = a.m.0.clone();
    let stem = format!("sweep_{}_{}{}", dims_tag(&a.n), meshes_tag(&meshes), p_tag(a.common.p));
    let mut run = Run::new(resolve_dir(a.common.out.as_deref()), "sweep", stem)?;
    let mut configs = BTreeMap::new();
    for &n in &a.n.0 {
        for &m in &meshes {
            configs.insert((n, m), config(n, m, a.common.p)?);
        }
    }
    for cfg in configs.values() {
        run.add_config(cfg);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs)
        .build()
        .map_err(|e| Failure::Internal(e.to_string()))?;
    let dir = run.dir().to_path_buf();
    let stem = run.stem().to_string();
    // Each dimension writes its own refinement file; the manifest is written once below.
    let per_n: Vec<Result<(SweepRow, String), Failure>> = pool.install(|| {
        a.n.0
            .par_iter()
            .map(|&n| {
                let runs = meshes
                    .iter()
                    .map(|&m| continuation(&configs[&(n, m)]))
                    .collect::<Result<Vec<_>, _>>()?;
                let rep = extremal_report(&runs)?;
                let mut t = Table::new(&REFINEMENT_HEADER);
                extremal_rows(&mut t, &rep);
                let name = format!("{stem}_n{n}.csv");
                write_table(&dir.join(&name), &t)?;
                let finest = runs.last().expect("at least one mesh");
                let row = SweepRow {
                    n,
                    lambda_star: finest.lambda_star(),
                    nu1_over_4: 0.25 * finest.nu1,
                    lower_bound: lower_bound(n),
                    u_star_sup: finest.u_star_sup,
                    regular_verdict: rep.verdict.as_str(),
                };
                Ok((row, name))
            })
            .collect()
    });
    let mut rows = Vec::new();
    for item in per_n {
        let (row, name) = item?;
        run.adopt(name);
        rows.push(row);
    }
    let header = ["n", "lambda_star", "nu1_over_4", "lower_bound", "u_star_sup", "regular_verdict"];
    let mut t = Table::new(&header);
    for r in &rows {
        t.push(vec![
            r.n.into(),
            r.lambda_star.into(),
            r.nu1_over_4.into(),
            r.lower_bound.into(),
            r.u_star_sup.into(),
            r.regular_verdict.into(),
        ]);
    }
    run.write_csv("", &t)?;
    let summary = json!({ "meshes": meshes, "p": a.common.p, "rows": rows, "caveat": RADIAL_CAVEAT });
    run.write_json("", &summary)?;
    run.finish(meshes)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(Failure::from(Error::Config("x".into())).code(), 1);
        assert_eq!(Failure::NoSolution(Error::FoldDetected { lambda: 1.0 }).code(), 2);
        let e = Error::SingularWeight { node: 0, value: 1.0 };
        assert_eq!(Failure::from(e).code(), 3);
    }

    #[test]
    fn tags() {
        assert_eq!(dims_tag(&Dims(vec![3])), "n3");
        assert_eq!(dims_tag(&Dims(vec![2, 3, 4])), "n2-4");
        assert_eq!(dims_tag(&Dims(vec![1, 3])), "n1+3");
        assert_eq!(meshes_tag(&[256, 512]), "M256+512");
        assert_eq!(lambda_tag(LambdaArg::Relative(0.9)), "0.9xstar");
        assert_eq!(p_tag(1.0), "");
        assert_eq!(p_tag(2.0), "_p2");
    }
}
