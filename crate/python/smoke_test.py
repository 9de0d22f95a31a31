"""Smoke test for the `sspg` extension module.

Build and install first:
    pip install --no-build-isolation -e crates/py
"""

import json
import math
import tempfile

import sspg


def main():
    p = sspg.SrProblem.generate(6, 24, 0.5, 1e-3, seed=3)
    c = p.constants()
    assert c["lipschitz"] > c["strong_convexity"] > 0

    x_star, _ = p.reference_solution(1e-10)
    z = p.prox([1.0] * 6, 2, 0.1)
    assert len(z) == 6 and all(math.isfinite(v) for v in z)

    t = sspg.run_sspg(p, 0.5, 500_000, seed=1, gamma=1.0, x0=[1.0] * 6, reference=x_star, eps=1e-2)
    assert t.converged, t.iterations
    assert t.to_csv().splitlines()[0] == "k,sq_dist_to_opt,objective,dist_to_feasible,wall_time_s"

    pg = sspg.run_pg(p, tol=1e-10, reference=x_star)
    assert math.dist(pg.final_x, x_star) < 1e-6

    mean = sspg.monte_carlo(p, 0.3, 2000, 50, x_star, gamma=0.75)
    slope, r2, _ = mean.fit_rate((100, 2000), 0.75)
    print(f"rate fit: slope {slope:.3f}, R^2 {r2:.3f}")

    cfp = sspg.CfpProblem.two_lines(math.pi / 3)
    kappa = cfp.estimate_kappa(2000, 10.0, 1)
    assert abs(kappa - 0.25) < 0.25 * 0.05, kappa
    rap = cfp.run_rap(5, 200, [1.0, 0.0])
    assert rap.records()[-1][3] < 1e-6

    try:
        p.prox([1.0], 0, 0.1)
    except ValueError:
        pass
    else:
        raise AssertionError("dimension mismatch not reported")

    cfg = {
        "format_version": 1,
        "experiment": {"kind": "cfp_linear", "horizon": 100, "kappa_samples": 500},
        "seeds": {"base": 1, "runs": 50},
    }
    with tempfile.TemporaryDirectory() as d:
        passed, verdicts = sspg.run_experiment(json.dumps(cfg), d)
    for name, ok, detail in verdicts:
        print(("PASS" if ok else "FAIL"), name, detail)
    assert passed
    try:
        sspg.run_experiment('{"format_version": 1, "experiment": {"kind": "cfp_linear", "bogus": 1}}', "unused")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown key accepted")
    print("smoke test ok", sspg.__version__, sspg.GENERATOR)


if __name__ == "__main__":
    main()
