use std::ffi::CString;

use pyo3::prelude::*;
use pyo3::types::PyDict;

fn run_python(code: &str) {
    Python::attach(|py| {
        let module = PyModule::new(py, "clampfold").unwrap();
        clampfold_py::clampfold_module(&module).unwrap();
        let globals = PyDict::new(py);
        globals.set_item("cf", module).unwrap();
        let code = CString::new(code).unwrap();
        if let Err(e) = py.run(&code, Some(&globals), None) {
            e.print(py);
            panic!("python snippet failed");
        }
    });
}

#[test]
fn solvers_and_spectrum() {
    run_python(
        r#"
cfg = cf.ProblemConfig(3, 128)
pt = cf.monotone_solve(cfg, 15.0)
assert pt.mu1 > 0 and pt.method == "monotone", pt
nw = cf.newton_solve(cfg, 15.0)
assert max(abs(a - b) for a, b in zip(pt.u, nw.u)) < 1e-8
op = cf.Operator(1, 256)
nu, phi = op.nu1()
assert abs(nu - 31.285) < 0.01, nu
assert len(phi) == len(op.nodes) == 257
q = [(1 - r * r) ** 2 for r in op.nodes]
assert max(abs(v - 24.0) for v in op.apply(q)[:-1]) < 1e-6
"#,
    );
}

#[test]
fn continuation_and_certificates() {
    run_python(
        r#"
runs = [cf.continue_branch(cf.ProblemConfig(2, m)) for m in (128, 256)]
r = runs[-1]
assert r.lambda_lo <= r.lambda_star <= r.lambda_hi
assert abs(r.lambda_star - 22.915) < 0.05, r
assert len(r) == len(r.points) and all(p.mu1 > 0 for p in r.points)
verdict, var = cf.extremal_verdict(runs)
assert verdict == "regular-consistent", (verdict, var)
assert cf.lower_bound(2) <= r.lambda_lo
assert cf.upper_bound_check(r)[0] == "pass"
assert cf.check_omega_alpha(cf.ProblemConfig(4, 256), 0.5)[0] == "pass"
assert cf.check_g_beta(cf.ProblemConfig(4, 256))[0] == "pass"
dev, excess = cf.extinction_check(cf.ProblemConfig(2, 256), 0.01 * r.lambda_lo, r.lambda_lo)
assert dev < 0.01 and excess > 0
"#,
    );
}

#[test]
fn errors_map_to_python_exceptions() {
    run_python(
        r#"
try:
    cf.ProblemConfig(0)
    raise AssertionError("accepted n = 0")
except ValueError:
    pass
try:
    cf.monotone_solve(cf.ProblemConfig(3, 64), 1e6)
    raise AssertionError("solved past the fold")
except cf.NoSolutionError:
    pass
cfg = cf.ProblemConfig(3, 64)
try:
    cfg.tol_newton = -1.0
    raise AssertionError("accepted a negative tolerance")
except ValueError:
    assert cfg.tol_newton == 1e-11
assert issubclass(cf.NoSolutionError, RuntimeError)
"#,
    );
}
