use clampfold::branch::{monotone_iterates, monotone_solve, newton_solve};
use clampfold::linalg::{factor, solve_linear};
use clampfold::operator::apply_rounding_bound;
use clampfold::{apply, assemble_biharmonic, build_mesh, DiscreteBiharmonic, ProblemConfig, RadialField};
use proptest::prelude::*;

fn op(n: usize, m: usize) -> DiscreteBiharmonic {
    assemble_biharmonic(&build_mesh(m).unwrap(), n).unwrap()
}

fn nonnegative_rhs(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop_oneof![
        prop::collection::vec(0.0f64..1.0, m + 1),
        prop::collection::vec(prop_oneof![3 => Just(0.0), 1 => 0.0f64..1.0], m + 1),
        prop::collection::vec(-1.0f64..1.0, 5).prop_map(move |c| {
            (0..=m)
                .map(|i| {
                    let r = i as f64 / m as f64;
                    c.iter().rev().fold(0.0, |acc, a| acc * r + a).powi(2)
                })
                .collect()
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn clamped_solves_preserve_sign(n in prop::sample::select(vec![2usize, 3, 5]), rhs in nonnegative_rhs(64)) {
        let d = op(n, 64);
        let fact = factor(&d, None).unwrap();
        let u = solve_linear(&fact, &RadialField::new(rhs)).unwrap();
        let top = u.sup_norm();
        let low = u.values.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(low >= -1e-8 * top, "min {low}, max {top}");
    }

    #[test]
    fn operator_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, seed in 0u64..1000) {
        let d = op(4, 48);
        let f = RadialField::from_fn(d.mesh(), |r| (1.0 - r * r).powi(2) * (1.0 + (seed as f64 * r).sin()));
        let g = RadialField::from_fn(d.mesh(), |r| r * r * (1.0 - r * r).powi(2));
        let combo = RadialField::new(f.values.iter().zip(&g.values).map(|(x, y)| a * x + b * y).collect());
        let lhs = apply(&d, &combo).unwrap();
        let (af, ag) = (apply(&d, &f).unwrap(), apply(&d, &g).unwrap());
        let bound = apply_rounding_bound(&d, &combo).unwrap();
        let bf = apply_rounding_bound(&d, &f).unwrap();
        let bg = apply_rounding_bound(&d, &g).unwrap();
        for i in 0..lhs.len() {
            let rhs = a * af.values[i] + b * ag.values[i];
            let tol = bound[i] + a.abs() * bf[i] + b.abs() * bg[i];
            prop_assert!((lhs.values[i] - rhs).abs() <= 2.0 * tol);
        }
    }

    #[test]
    fn monotone_iterates_increase_to_their_limit(frac in 0.05f64..0.9) {
        let d = op(3, 64);
        let cfg = ProblemConfig::new(3, 64);
        let lam = frac * 49.0;
        let limit = monotone_solve(&d, lam, &cfg).unwrap();
        let iterates = monotone_iterates(&d, lam, &cfg, 12).unwrap();
        let mut prev = RadialField::zeros(65);
        for it in &iterates {
            for i in 0..65 {
                prop_assert!(it.values[i] >= prev.values[i] - 1e-12);
                prop_assert!(it.values[i] <= limit.u.values[i] + 1e-10);
            }
            prev = it.clone();
        }
    }

    #[test]
    fn methods_agree(frac in 0.05f64..0.9, n in prop::sample::select(vec![1usize, 2, 3])) {
        let star = [7.309, 22.91, 49.2][n - 1];
        let d = op(n, 64);
        let cfg = ProblemConfig::new(n, 64);
        let lam = frac * star;
        let a = monotone_solve(&d, lam, &cfg).unwrap();
        let b = newton_solve(&d, lam, &RadialField::zeros(65), &cfg).unwrap();
        prop_assert!(a.u.max_abs_diff(&b.u) <= 1e-8);
    }

    #[test]
    fn minimal_solutions_are_ordered(f1 in 0.05f64..0.9, f2 in 0.05f64..0.9) {
        let (lo, hi) = if f1 < f2 { (f1, f2) } else { (f2, f1) };
        prop_assume!(hi - lo > 1e-3);
        let d = op(3, 64);
        let cfg = ProblemConfig::new(3, 64);
        let a = monotone_solve(&d, lo * 49.0, &cfg).unwrap();
        let b = monotone_solve(&d, hi * 49.0, &cfg).unwrap();
        for i in 0..64 {
            prop_assert!(a.u.values[i] < b.u.values[i] + 1e-12);
        }
        prop_assert!(a.mu1 > b.mu1);
    }
}

/// Sources at the innermost nodes are under-resolved, and for n >= 4 their
/// discrete responses are not sign-definite. Every other column of the inverse
/// is nonnegative.
#[test]
fn point_source_responses() {
    for n in [1usize, 2, 3, 4, 5, 8] {
        let m = 96;
        let d = op(n, m);
        let fact = factor(&d, None).unwrap();
        for j in 0..m {
            if n >= 4 && j <= 2 {
                continue;
            }
            let mut v = vec![0.0; m + 1];
            v[j] = 1.0;
            let u = solve_linear(&fact, &RadialField::new(v)).unwrap();
            let top = u.sup_norm();
            let low = u.values.iter().copied().fold(f64::INFINITY, f64::min);
            assert!(low >= -1e-12 * top, "n = {n}, source {j}: min {low} (max {top})");
        }
    }
}
