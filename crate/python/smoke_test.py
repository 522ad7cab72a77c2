"""Quick check of the Python bindings: KPP speed, a ladder and a scenario run."""

import math
import pathlib
import sys

import frontlab

ROOT = pathlib.Path(__file__).resolve().parent.parent

HOMOGENEOUS = """
name = "smoke"
experiment = "speed"
[lattice]
periods = [1.0]
resolution = [20]
[domain]
whole_space = true
[reaction]
kind = "logistic"
rate = 4.0
[ladder]
gamma = 0.0
n_max = 0
[speed]
directions = [[1.0]]
"""


def main():
    names = [n for n, _ in frontlab.list_experiments()]
    assert "speed-ladder" in names and len(names) == 10, names

    p = frontlab.Problem.from_toml(HOMOGENEOUS)
    assert abs(p.eigenvalue() + 4.0) < 1e-8
    s = p.minimal_speed()
    assert abs(s["c_star"] - 4.0) < 0.04, s["c_star"]
    print(f"homogeneous rate 4: c* = {s['c_star']:.5f} (exact 4)")

    stripe = frontlab.Problem.load(str(ROOT / "scenarios" / "stripe.toml"))
    values = [stripe.eigenvalue(rung=n) for n in (0, 10, 100)]
    limit = stripe.eigenvalue(rung=None)
    assert values == sorted(values) and values[-1] < limit
    print("stripe eigenvalues", [round(v, 5) for v in values], "limit", round(limit, 5))

    speeds, bound = stripe.speed_ladder(rungs=[0, 20, 100])
    print("stripe speeds", [(n, round(c, 4)) for n, c in speeds], "lower bound", round(bound, 4))
    assert speeds[-1][1] >= bound - 1e-3

    p_inf = stripe.steady_state(rung=None)
    inside = stripe.inside()
    assert all(v == 0.0 for v, i in zip(p_inf, inside) if not i)
    assert max(p_inf) <= 1.0 + 1e-9

    findings = frontlab.validate(HOMOGENEOUS.replace("[20]", "[8]"))
    assert any(sev == "warning" for sev, _ in findings), findings

    passed, summary = frontlab.run(HOMOGENEOUS)
    assert passed, summary
    assert math.isfinite(s["lambda_star"])
    print("smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
