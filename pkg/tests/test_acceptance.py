"""Acceptance gate: one printed PASS/FAIL line per criterion, then the assertion.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines inline;
they are also printed (uncaptured) under plain ``pytest -v``.
"""

import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from refprior import estimators as est
from refprior import experiments as ex
from refprior import golden
from refprior.sampling import StreamKey, uniform_matrix

ROOT = Path(__file__).resolve().parents[1]
SEED = 2011  # fixed before any statistical criterion was run


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail, seconds, budget):
        in_time = seconds < budget
        status = "PASS" if ok and in_time else "FAIL"
        with capsys.disabled():
            print(f"\nCRITERION {n:2d}: {status}  {detail}  [{seconds:.1f}s / budget {budget:g}s]")
        assert ok, detail
        assert in_time, f"criterion {n} took {seconds:.1f}s, budget {budget}s"

    return emit


def _checks(prefixes):
    results = golden.run_checks()
    return [r for r in results if r.name.startswith(prefixes)]


def test_criterion_01_worked_example(report):
    t = time.perf_counter()
    w = golden.GOLDEN["worked_example"]
    xs, x0 = np.array(w["theta_samples"]), np.array(w["theta0_samples"])
    fk = est.fk_from_samples("unif0", 5.0, xs).value
    fk0 = est.fk_from_samples("unif0", 1.0, x0).value
    f = est.ratio_from_samples("unif0", 5.0, 1.0, xs, x0).value
    ok = abs(fk - 0.5437) <= 1e-3 and abs(fk0 - 1.5020) <= 1e-3 and abs(f - 0.3619) <= 1e-3
    report(1, ok, f"fk(5)={fk:.4f} fk(1)={fk0:.4f} f(5)={f:.4f} (tol 1e-3)", time.perf_counter() - t, 1)


def test_criterion_02_marginal_constants(report):
    t = time.perf_counter()
    checks = _checks(("c_j column",))
    ok = len(checks) == 4 and all(c.passed for c in checks)
    detail = "; ".join(c.detail for c in checks)
    report(2, ok, f"closed form vs table 1e-3 rel, vs quadrature 1e-9 rel: {detail}", time.perf_counter() - t, 1)


def test_criterion_03_constant_fitting(report):
    t = time.perf_counter()
    c = golden.GOLDEN["constant_fit"]
    theta = np.array(c["theta"], dtype=float)
    ref = lambda x: 1.0 / x  # noqa: E731
    parts, ok = [], True
    for label, ratios, want, want_earp in (("a", c["fk_ratio"], 19.883, 0.094), ("b", c["f_ratio"], 0.991, 0.145)):
        fit = est.fit_constant_earp(zip(theta, np.array(ratios) / theta), ref)
        grid = np.linspace(fit.ratios_sorted[0] * 0.5, fit.ratios_sorted[-1] * 2, 200_001)
        dense = np.abs(fit.ratios_sorted[None, :] / grid[:, None] - 1).mean(axis=1).min()
        ok &= abs(fit.a_hat - want) <= 1e-3 and fit.s_hat == 3 and abs(fit.earp_min - want_earp) <= 1e-3
        ok &= fit.earp_min <= dense + 1e-6
        parts.append(f"{label}={fit.a_hat:.3f} s={fit.s_hat} EARP={fit.earp_min:.4f} grid-min={dense:.4f}")
    report(3, ok, "; ".join(parts), time.perf_counter() - t, 1)


def test_criterion_04_coverage_numbers(report):
    t = time.perf_counter()
    checks = _checks(("CE ", "uncovered", "AMRP"))
    ok = len(checks) == 4 and all(c.passed for c in checks)
    report(4, ok, "; ".join(f"{c.name}: {c.detail}" for c in checks), time.perf_counter() - t, 5)


def test_criterion_05_nac_exactness(report):
    t = time.perf_counter()
    rng = np.random.default_rng(SEED)
    worst = {}
    for name, lo, hi in (("exp", 0.1, 10.0), ("unif0", 2.0, 899.0)):
        w = 0.0
        for _ in range(100):
            theta, theta0 = rng.uniform(lo, hi, size=2)
            U = uniform_matrix(StreamKey(int(rng.integers(2**63)), (0,)), 5, 5)
            w = max(w, abs(est.fnac_hat(name, theta, theta0, U).value - theta0 / theta))
        worst[name] = w
    ok = all(v <= 1e-12 for v in worst.values())
    detail = ", ".join(f"{k} max|fnac - theta0/theta|={v:.1e}" for k, v in worst.items())
    report(5, ok, detail + " (tol 1e-12)", time.perf_counter() - t, 10)


COVERAGE_MODELS = (("exp", 0.1, 10.0, 0.05), ("unifsq", 1.05, 3.0, 0.10), ("triangular", 0.05, 0.95, 0.08))


def test_criterion_06_coverage_convergence(report):
    t = time.perf_counter()
    parts, ok = [], True
    for name, lo, hi, alpha in COVERAGE_MODELS:
        c = ex.ExperimentConfig(name, ex.ThetaGrid(count=100, low=lo, high=hi, spacing="random"), (50,),
                                alpha=alpha, estimators=("fk", "f"), replications=20, master_seed=SEED)
        s = ex.k_sweep(c)
        for e in ("fk", "f"):
            ce = s.get(e, 50).CE
            ok &= abs(ce - (1 - alpha)) <= 0.07
            parts.append(f"{name}/{e} CE={ce:.3f} (target {1 - alpha:.2f})")
    report(6, ok, "; ".join(parts), time.perf_counter() - t, 300)


def test_criterion_07_estimator_ordering(report):
    t = time.perf_counter()
    parts, ok = [], True
    # grid sizes 10, 10 and 9 as in the reference experiments at k = 5
    for name, grid in (("exp", ex.ThetaGrid(count=10, low=0.1, high=10, spacing="log")),
                       ("unif0", ex.ThetaGrid(count=10, low=2, high=899)),
                       ("unifsq", ex.ThetaGrid(count=9, low=1.05, high=3))):
        c = ex.ExperimentConfig(name, grid, (5,), estimators=("fk", "f"), replications=10, master_seed=SEED)
        s = ex.k_sweep(c)
        fk = [x.EARP for x in s.cells if x.estimator == "fk"]
        f = [x.EARP for x in s.cells if x.estimator == "f"]
        wins = sum(a < b for a, b in zip(fk, f))
        ok &= wins >= 8
        parts.append(f"{name}: EARP(fk)<EARP(f) in {wins}/10")
    report(7, ok, "; ".join(parts), time.perf_counter() - t, 60)


def test_criterion_08_crn_benefit(report):
    t = time.perf_counter()
    c = ex.ExperimentConfig("unifsq", ex.ThetaGrid(count=140, low=1.05, high=3), (10,),
                            estimators=("fk", "fnac"), replications=10, master_seed=SEED)
    sq = ex.k_sweep(c).get("fnac", 10).EARP
    c = ex.ExperimentConfig("triangular", ex.ThetaGrid(count=99, low=0.05, high=0.95), (25,),
                            estimators=("fk", "fnac"), replications=10, master_seed=SEED)
    s = ex.k_sweep(c)
    tri_nac, tri_fk = s.get("fnac", 25).EARP, s.get("fk", 25).EARP
    ok = sq <= 0.15 and tri_nac < tri_fk
    detail = f"unifsq EARP(fnac)={sq:.4f} <= 0.15; triangular EARP(fnac)={tri_nac:.4f} < EARP(fk)={tri_fk:.4f}"
    report(8, ok, detail, time.perf_counter() - t, 120)


def test_criterion_09_delta_method_calibration(report):
    t = time.perf_counter()
    parts, ok = [], True
    for m in (50, 200):
        vals, pred = [], []
        for seed in range(1000):
            e = est.fk_hat("exp", 2.0, uniform_matrix(StreamKey(SEED + seed, (9,)), m, m))
            vals.append(e.value)
            pred.append(math.exp(e.mu1_hat) * e.sigma1_hat / math.sqrt(m))
        emp, want = float(np.std(vals, ddof=1)), float(np.mean(pred))
        ok &= abs(emp / want - 1) <= 0.10
        parts.append(f"m={m}: empirical sd {emp:.4f} vs predicted {want:.4f} ({emp / want - 1:+.1%})")
    report(9, ok, "; ".join(parts), time.perf_counter() - t, 120)


def test_criterion_10_determinism(report, tmp_path):
    t = time.perf_counter()
    cfg = ROOT / "configs" / "unifsq_sweep.cfg"
    outputs = []
    for run, workers in (("a", "1"), ("b", "1"), ("c", "3")):
        out_dir = tmp_path / run
        proc = subprocess.run(
            [sys.executable, "-m", "refprior.cli", "sweep", str(cfg), "--no-timestamp", "--k-values", "5,10",
             "--output", str(out_dir), "--workers", workers],
            capture_output=True, check=True,
        )
        outputs.append((proc.stdout, (out_dir / "records.csv").read_bytes(), (out_dir / "summary.csv").read_bytes()))
    ok = outputs[0] == outputs[1] == outputs[2]
    report(10, ok, f"three sweeps (workers 1, 1, 3) byte-identical: {ok}", time.perf_counter() - t, 120)
