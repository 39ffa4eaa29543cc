"""Walk through the Unif(0, theta) worked example step by step.

Feeds the five printed samples at theta = 5 and theta0 = 1 through the
estimators, then fits the proportionality constants and scores the intervals
on the six-point grid. Prints plain tables to stdout.

    python scripts/reproduce_worked_example.py
"""

import numpy as np

from refprior import estimators as est
from refprior import metrics
from refprior.golden import GOLDEN, back_solved_constant
from refprior.models import get_model


def main():
    w = GOLDEN["worked_example"]
    model = get_model("unif0")
    for label, theta, key in (("theta", w["theta"], "theta_samples"), ("theta0", w["theta0"], "theta0_samples")):
        x = np.array(w[key])
        c = np.exp(model.log_marginal_rows(x))
        r = model.r_rows(x, theta)
        print(f"\n{label} = {theta:g}")
        print(f"{'j':>2} {'max':>10} {'c_j':>12} {'r_j':>10}")
        for j, (row, cj, rj) in enumerate(zip(x, c, r), 1):
            print(f"{j:>2} {row.max():>10.6f} {cj:>12.6g} {rj:>10.6f}")
        print(f"fk = {est.fk_from_samples(model, theta, x).value:.4f}")

    ratio = est.ratio_from_samples(model, w["theta"], w["theta0"], np.array(w["theta_samples"]),
                                   np.array(w["theta0_samples"]))
    print(f"\nf = fk(theta) / fk(theta0) = {ratio.value:.4f}")

    c = GOLDEN["constant_fit"]
    theta = np.array(c["theta"], dtype=float)
    ref = lambda t: 1.0 / t  # noqa: E731
    print("\nconstant fit on the six-point grid")
    for name, ratios in (("fk", c["fk_ratio"]), ("f", c["f_ratio"])):
        fit = est.fit_constant_earp(zip(theta, np.array(ratios) / theta), ref)
        print(f"  {name:>2}: constant {fit.a_hat:.3f}  split s={fit.s_hat}  EARP {fit.earp_min:.4f}")

    iv = GOLDEN["intervals"]
    grid = metrics.GridEvaluation.from_arrays(theta, iv["fk_scaled"], iv["fk_scaled_hw"], 1 / theta)
    print(f"\nempirical coverage of the fk intervals: {metrics.coverage(grid):.4f}")
    rw = GOLDEN["relative_widths"]
    for name in ("fk", "f"):
        const = back_solved_constant(rw[f"hw_{name}"], theta, rw[f"rel_{name}"])
        g = metrics.grid_from_records(theta, np.zeros(6), rw[f"hw_{name}"], const, ref)
        print(f"AMRP {name:>2}: {metrics.amrp(g):.3f} (constant back-solved as {const:.3f})")


if __name__ == "__main__":
    main()
