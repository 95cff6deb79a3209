"""Smoke test for the compiled `clampfold` extension module.

Build and install it first, for example with
`maturin develop -m crates/py/Cargo.toml --release`.
"""

import clampfold as cf


def main():
    cfg = cf.ProblemConfig(3, 256)
    pt = cf.monotone_solve(cfg, 15.0)
    assert pt.mu1 > 0, pt
    print(f"n=3 lambda=15: sup u = {pt.sup_norm:.6f}, mu1 = {pt.mu1:.3f}")

    run = cf.continue_branch(cfg)
    nu = cf.Operator(3, 256).nu1()[0]
    assert cf.lower_bound(3) <= run.lambda_lo <= run.lambda_hi <= nu / 4
    print(f"n=3: {cf.lower_bound(3)} <= lambda* = {run.lambda_star:.4f} <= nu1/4 = {nu / 4:.4f}")

    try:
        cf.monotone_solve(cfg, 1e6)
    except cf.NoSolutionError as e:
        print(f"lambda=1e6: no solution ({e})")
    else:
        raise AssertionError("expected NoSolutionError")
    print("ok")


if __name__ == "__main__":
    main()
