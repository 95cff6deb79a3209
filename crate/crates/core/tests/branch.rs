use clampfold::branch::{
    extinction_check, extremal_report, h02_norm_bound_check, newton_solve, run_continuation, RegularityVerdict,
};
use clampfold::certificates::{
    check_singularity_certificate, lower_bound, quartic_constant, upper_bound_check, CertificateSpec, Verdict,
};
use clampfold::{assemble_biharmonic, build_mesh, DiscreteBiharmonic, Error, ProblemConfig, RadialField};

fn op(n: usize, m: usize) -> DiscreteBiharmonic {
    assemble_biharmonic(&build_mesh(m).unwrap(), n).unwrap()
}

#[test]
fn continuation_invariants() {
    for n in [1, 2, 4, 6] {
        let cfg = ProblemConfig::new(n, 128);
        let r = run_continuation(&cfg).unwrap();
        let (lo, hi) = r.lambda_star_bracket;
        assert!(hi - lo <= cfg.tol_fold * hi, "n = {n}: [{lo}, {hi}]");
        assert!(lo >= lower_bound(n), "n = {n}");
        assert_eq!(r.last_point().lambda, lo);
        if let Some(f) = r.fold_signal {
            assert!(f >= lo, "n = {n}: fold signal {f} inside accepted range");
        }
        for w in r.points.windows(2) {
            assert!(w[1].lambda > w[0].lambda);
            assert!(w[1].sup_norm >= w[0].sup_norm - 1e-12);
            assert!(w[1].mu1 > 0.0);
            for (a, b) in w[0].u.values.iter().zip(&w[1].u.values) {
                assert!(*b >= a - 1e-12);
            }
        }
        for pt in &r.points {
            assert!(pt.residual <= cfg.tol_newton, "n = {n}, lambda = {}: {}", pt.lambda, pt.residual);
            assert!(pt.sup_norm < 1.0);
        }
    }
}

#[test]
fn extremal_parameter_is_mesh_stable() {
    let a = run_continuation(&ProblemConfig::new(2, 128)).unwrap();
    let b = run_continuation(&ProblemConfig::new(2, 256)).unwrap();
    let rel = (a.lambda_star() - b.lambda_star()).abs() / b.lambda_star();
    assert!(rel <= 0.01, "{} vs {}", a.lambda_star(), b.lambda_star());
    assert!((b.lambda_star() - 22.915).abs() <= 0.05, "{}", b.lambda_star());
}

#[test]
fn high_dimension_verdict_is_singular_suspect() {
    let runs: Vec<_> = [128, 256]
        .iter()
        .map(|&m| run_continuation(&ProblemConfig::new(12, m)).unwrap())
        .collect();
    let rep = extremal_report(&runs).unwrap();
    assert_eq!(rep.verdict, RegularityVerdict::SingularSuspect);
    assert!(runs.iter().all(|r| !r.regular_on_mesh));
}

#[test]
fn low_dimension_verdict_is_regular() {
    let runs: Vec<_> = [128, 256]
        .iter()
        .map(|&m| run_continuation(&ProblemConfig::new(3, m)).unwrap())
        .collect();
    let rep = extremal_report(&runs).unwrap();
    assert_eq!(rep.verdict, RegularityVerdict::RegularConsistent);
    assert!(rep.sup_variation <= 0.01);
}

#[test]
fn energy_stays_bounded_up_to_the_fold() {
    for m in [128, 256] {
        let d = op(3, m);
        let r = run_continuation(&ProblemConfig::new(3, m)).unwrap();
        let rep = h02_norm_bound_check(&d, &r).unwrap();
        assert!(rep.bounded, "M = {m}: {rep:?}");
        assert!(rep.rows.windows(2).all(|w| w[1].energy >= w[0].energy));
    }
}

#[test]
fn extinction_deviation_vanishes_with_the_parameter() {
    let n = 4;
    let d = op(n, 128);
    let cfg = ProblemConfig::new(n, 128);
    let lo = run_continuation(&cfg).unwrap().lambda_star_bracket.0;
    let mut prev = f64::INFINITY;
    for frac in [0.1, 0.03, 0.01, 0.003] {
        let rep = extinction_check(&d, frac * lo, lo, &cfg).unwrap();
        assert!(rep.sup_ratio_deviation < prev, "{frac}: {}", rep.sup_ratio_deviation);
        assert!(rep.min_excess > 0.0, "{frac}: u <= V at node {}", rep.argmin_node);
        prev = rep.sup_ratio_deviation;
    }
    assert!(prev <= 0.01);
    assert!(matches!(extinction_check(&d, 0.5 * lo, lo, &cfg), Err(Error::Config(_))));
}

#[test]
fn newton_fails_beyond_the_fold() {
    let n = 2;
    let d = op(n, 128);
    let cfg = ProblemConfig::new(n, 128);
    let r = run_continuation(&cfg).unwrap();
    let err = newton_solve(&d, 1.05 * r.lambda_star_bracket.1, &r.last_point().u, &cfg).unwrap_err();
    assert!(err.is_no_solution(), "{err}");
}

#[test]
fn upper_bound_holds_across_dimensions() {
    for n in [1, 3, 5, 8] {
        let d = op(n, 128);
        let r = run_continuation(&ProblemConfig::new(n, 128)).unwrap();
        let rep = upper_bound_check(&d, &r).unwrap();
        assert!(rep.passed(), "n = {n}: {rep:?}");
        assert_eq!(rep.extras["lower_holds"], 1.0, "n = {n}");
    }
    let r = run_continuation(&ProblemConfig::new(3, 64)).unwrap();
    assert!(upper_bound_check(&op(3, 128), &r).is_err());
}

#[test]
fn regular_candidate_gives_no_conclusion() {
    for n in [3, 5] {
        let d = op(n, 256);
        let c = quartic_constant(n);
        let omega = RadialField::from_fn(d.mesh(), |r| 0.05 * (1.0 - r * r).powi(2));
        let ok = check_singularity_certificate(&CertificateSpec::singularity(n, omega.clone(), 0.05 * c, 0.05), &d);
        let rep = ok.unwrap();
        assert_eq!(rep.verdict, Verdict::NoConclusion, "n = {n}: {rep:?}");
        assert!(rep.derived_bound.is_none());
        let low = check_singularity_certificate(&CertificateSpec::singularity(n, omega, 0.02 * c, 0.05), &d);
        assert_eq!(low.unwrap().verdict, Verdict::Fail);
    }
}

#[test]
fn singular_quartic_candidate_is_rejected() {
    // ω = (1 - r²)² reaches 1 at the origin but its weighted constant collapses.
    let n = 5;
    let d = op(n, 256);
    let omega = RadialField::from_fn(d.mesh(), |r| 1.0 - r * r * (2.0 - r * r));
    let rep = check_singularity_certificate(&CertificateSpec::singularity(n, omega, quartic_constant(n), 0.05), &d)
        .unwrap();
    assert_eq!(rep.extras["singular"], 1.0);
    assert!(rep.extras["beta"] < quartic_constant(n));
    assert_eq!(rep.verdict, Verdict::Fail);
}
