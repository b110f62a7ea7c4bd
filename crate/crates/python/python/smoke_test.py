"""Smoke test for the conformal_py extension module.

Build and install first:

    pip install --no-build-isolation -e crates/python
    python crates/python/python/smoke_test.py
"""

import math
import random

import conformal_py as cp


def draw(n, d, seed):
    rng = random.Random(seed)
    x = [[rng.gauss(0, 1) for _ in range(d)] for _ in range(n)]
    y = [2.0 * r[0] - r[1] + rng.gauss(0, 1) for r in x]
    return x, y


def check_ols():
    x, y = draw(50, 2, 1)
    coef = cp.Estimator.ols().fit(x, y).coefficients()
    assert abs(coef[0] - 2.0) < 0.5 and abs(coef[1] + 1.0) < 0.5, coef


def check_split_coverage():
    x, y = draw(400, 3, 2)
    xt, yt = draw(2000, 3, 3)
    band = cp.conformal_band(cp.Estimator.ols(), x, y, alpha=0.1, variant="split", seed=7)
    ivs = band.evaluate_many(xt)
    cov = sum(v in iv for iv, v in zip(ivs, yt)) / len(yt)
    assert 0.85 < cov < 0.95, cov
    assert band.variant == "split" and band.alpha == 0.1


def check_full_zero_matches_ranks():
    x, y = draw(19, 2, 4)
    s = cp.full_conformal_set(cp.Estimator.zero(), x, y, [0.0, 0.0], alpha=0.2,
                              grid_lo=-6.0, grid_hi=6.0, grid_n=241)
    k = math.ceil(0.8 * 20)
    ok = [g for g in (-6.0 + i * 0.05 for i in range(241))
          if 1 + sum(abs(v) <= abs(g) for v in y) <= k]
    assert abs(s.hull.lo - ok[0]) < 1e-9 and abs(s.hull.hi - ok[-1]) < 1e-9


def check_loco():
    x, y = draw(200, 3, 5)
    rep = cp.loco_global(cp.Estimator.ols(), x, y, alpha=0.1, seed=1)
    assert abs(rep.adjusted_alpha - 0.1 / 3) < 1e-15
    rows = {r[0]: r for r in rep.rows()}
    assert rows["x1"][2].lo > 0, rows["x1"]
    assert rows["x3"][2].lo <= 0 <= rows["x3"][2].hi or rows["x3"][1] < 0.1
    local = cp.loco_local(cp.Estimator.ols(), x[:40], y[:40], columns=[0])
    assert len(local) == 40 and all(w.lo <= w.hi for _, _, w in local)


def check_simulation_and_errors():
    x, y, xt, yt = cp.simulate_setting("A", 30, 5, sparsity=2, seed=3, n_test=10)
    assert len(x) == 30 and len(x[0]) == 5 and len(yt) == 10
    csv, manifest = cp.run_experiment("T1", reps=2, scale=0.3)
    assert csv.count("\n") == 1 + 12 and "rep_seeds" in manifest
    for bad in (lambda: cp.Estimator.ridge(-1.0), lambda: cp.run_experiment("T9")):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")


if __name__ == "__main__":
    for check in (check_ols, check_split_coverage, check_full_zero_matches_ranks,
                  check_loco, check_simulation_and_errors):
        check()
        print(f"ok {check.__name__}")
