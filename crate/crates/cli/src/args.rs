use std::ops::RangeInclusive;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Radial clamped-plate MEMS toolkit: minimal branch, extremal parameter,
/// eigenvalues and certificates for Δ²u = λ/(1-u)^p on the unit ball.
#[derive(Debug, Parser)]
#[command(name = "clampfold", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve at one parameter value.
    Solve(SolveArgs),
    /// Continue the minimal branch up to the fold.
    Branch(BranchArgs),
    /// Bracket λ* on a list of meshes and compare.
    LambdaStar(LambdaStarArgs),
    /// Clamped-plate eigenvalue ν₁ and eigenfunction.
    Eigen(EigenArgs),
    /// lower_bound(n) ≤ λ* ≤ ν₁/4 table.
    Bounds(BoundsArgs),
    /// Ratio deviation u_λ/V_λ - 1 for small λ.
    Extinction(ExtinctionArgs),
    /// Check the supersolution and upper-bound certificates.
    Certify(CertifyArgs),
    /// λ*, bounds and regularity verdict for a range of dimensions.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Nonlinearity exponent p.
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    /// Output directory (overrides CLAMPFOLD_OUTPUT_DIR).
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Monotone,
    Newton,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub n: usize,
    /// Absolute value, or a fraction of λ* with an `xstar` suffix (e.g. 0.9xstar).
    #[arg(long, value_parser = parse_lambda)]
    pub lambda: LambdaArg,
    #[arg(long = "M", default_value_t = 256)]
    pub m: usize,
    #[arg(long, value_enum, default_value_t = MethodArg::Monotone)]
    pub method: MethodArg,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct BranchArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long = "M", default_value_t = 256)]
    pub m: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct LambdaStarArgs {
    /// Dimension, list (1,3,5) or inclusive range (2..6).
    #[arg(long, value_parser = parse_dims)]
    pub n: Dims,
    /// Comma-separated mesh sizes.
    #[arg(long = "M", value_parser = parse_meshes, default_value = "256,512")]
    pub m: Meshes,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct EigenArgs {
    #[arg(long, value_parser = parse_dims)]
    pub n: Dims,
    #[arg(long = "M", default_value_t = 256)]
    pub m: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long, value_parser = parse_dims)]
    pub n: Dims,
    #[arg(long = "M", default_value_t = 256)]
    pub m: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ExtinctionArgs {
    #[arg(long)]
    pub n: usize,
    /// Comma-separated values; each may carry an `xstar` suffix. A trailing
    /// suffix on the last value applies to the whole list (1e-2,1e-3xstar).
    #[arg(long, value_parser = parse_lambdas)]
    pub lambdas: Lambdas,
    #[arg(long = "M", default_value_t = 256)]
    pub m: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CertKind {
    OmegaAlpha,
    GBeta,
    UpperBound,
    All,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long, value_parser = parse_dims)]
    pub n: Dims,
    #[arg(long = "M", default_value_t = 512)]
    pub m: usize,
    #[arg(long, value_enum, default_value_t = CertKind::All)]
    pub kind: CertKind,
    /// Amplitude of the quartic subsolution α(1-r²)².
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Exclusion radius for the logarithmic supersolution.
    #[arg(long, default_value_t = 0.05)]
    pub r_min: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_parser = parse_dims, default_value = "1..12")]
    pub n: Dims,
    #[arg(long = "M", value_parser = parse_meshes, default_value = "256,512")]
    pub m: Meshes,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaArg {
    Absolute(f64),
    /// Fraction of a freshly computed λ*.
    Relative(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lambdas(pub Vec<LambdaArg>);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dims(pub Vec<usize>);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Meshes(pub Vec<usize>);

const RELATIVE_SUFFIXES: [&str; 4] = ["xstar", "×λ*", "x*", "×λ"];

fn strip_relative(s: &str) -> (&str, bool) {
    for suf in RELATIVE_SUFFIXES {
        if let Some(head) = s.strip_suffix(suf) {
            return (head.trim(), true);
        }
    }
    (s, false)
}

fn parse_value(s: &str, relative: bool) -> Result<LambdaArg, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("not a number: {s:?}"))?;
    if !(v.is_finite() && v >= 0.0) {
        return Err(format!("lambda must be finite and >= 0, got {v}"));
    }
    Ok(if relative { LambdaArg::Relative(v) } else { LambdaArg::Absolute(v) })
}

pub fn parse_lambda(s: &str) -> Result<LambdaArg, String> {
    let (head, rel) = strip_relative(s.trim());
    parse_value(head, rel)
}

pub fn parse_lambdas(s: &str) -> Result<Lambdas, String> {
    let (body, all_rel) = strip_relative(s.trim());
    let items: Vec<&str> = body.split(',').collect();
    if items.iter().any(|t| t.trim().is_empty()) {
        return Err(format!("empty entry in {s:?}"));
    }
    items
        .iter()
        .map(|t| {
            let (head, rel) = strip_relative(t.trim());
            parse_value(head, rel || all_rel)
        })
        .collect::<Result<_, _>>()
        .map(Lambdas)
}

fn parse_range(s: &str) -> Option<RangeInclusive<usize>> {
    let (a, b) = s.split_once("..")?;
    let b = b.strip_prefix('=').unwrap_or(b);
    Some(a.trim().parse().ok()?..=b.trim().parse().ok()?)
}

pub fn parse_dims(s: &str) -> Result<Dims, String> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        if let Some(r) = parse_range(part) {
            if r.is_empty() {
                return Err(format!("empty range {part:?}"));
            }
            out.extend(r);
        } else {
            out.push(part.parse().map_err(|_| format!("bad dimension {part:?}"))?);
        }
    }
    if out.contains(&0) {
        return Err("dimensions start at 1".into());
    }
    out.sort_unstable();
    out.dedup();
    Ok(Dims(out))
}

pub fn parse_meshes(s: &str) -> Result<Meshes, String> {
    let mut out: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse().map_err(|_| format!("bad mesh size {t:?}")))
        .collect::<Result<_, _>>()?;
    if out.is_empty() {
        return Err("no mesh sizes".into());
    }
    out.sort_unstable();
    out.dedup();
    Ok(Meshes(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_lists() {
        assert_eq!(parse_dims("2..6").unwrap().0, vec![2, 3, 4, 5, 6]);
        assert_eq!(parse_dims("1..=3,7").unwrap().0, vec![1, 2, 3, 7]);
        assert_eq!(parse_dims("5,3,5").unwrap().0, vec![3, 5]);
        assert!(parse_dims("6..2").is_err());
        assert!(parse_dims("0..2").is_err());
        assert!(parse_dims("a").is_err());
    }

    #[test]
    fn lambda_forms() {
        assert_eq!(parse_lambda("15").unwrap(), LambdaArg::Absolute(15.0));
        assert_eq!(parse_lambda("0.9xstar").unwrap(), LambdaArg::Relative(0.9));
        assert_eq!(parse_lambda("0.5×λ*").unwrap(), LambdaArg::Relative(0.5));
        assert!(parse_lambda("-1").is_err());
        assert_eq!(
            parse_lambdas("1e-2,1e-3xstar").unwrap().0,
            vec![LambdaArg::Relative(1e-2), LambdaArg::Relative(1e-3)]
        );
        assert!(parse_lambdas("0.1,0.01xstar,").is_err());
        assert_eq!(
            parse_lambdas("0.1,0.02xstar,0.3").unwrap().0,
            vec![LambdaArg::Absolute(0.1), LambdaArg::Relative(0.02), LambdaArg::Absolute(0.3)]
        );
    }
}
