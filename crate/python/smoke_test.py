"""Smoke test for the pmm_slow extension module.

Run after building the module (see README):

    python python/smoke_test.py
"""

import json
import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import pmm_slow  # noqa: E402


def main():
    p = pmm_slow.ModelParams(20, theta=1.0, alpha=0.3, beta=0.6)
    assert p.n == 20 and p.big_m == 2
    print(p)

    c = pmm_slow.Configuration([1, 1, 0] + [0] * 16, p)
    assert c.particle_count() == 2
    kinds = {(k, x) for k, x, _ in c.transitions(p)}
    assert ("exchange", 2) in kinds and ("flip", 1) in kinds

    pure = pmm_slow.ModelParams(10, pure_pmm=True)
    assert pmm_slow.Configuration([1, 0, 0, 0, 0, 0, 0, 0, 1], pure).is_blocked(pure)

    sim = pmm_slow.Simulation(p, seed=3)
    assert sim.advance_to(0.01) is None
    assert math.isclose(sim.time, 0.01) and sim.events > 0
    again = pmm_slow.Simulation(p, seed=3)
    again.advance_to(0.01)
    assert again.occupations() == sim.occupations()

    us = [i / 10 for i in range(11)]
    rho = pmm_slow.stationary_profile(us, 0.2, 0.8)
    assert all(abs(r - math.sqrt(0.6 * u + 0.04)) < 1e-14 for u, r in zip(us, rho))

    initial = [0.2 + 0.6 * i / 32 for i in range(33)]
    times, rows = pmm_slow.solve(initial, 0.2, 0.8, 0.05, [0.0, 0.05])
    assert times == [0.0, 0.05] and len(rows[-1]) == 33

    text = pmm_slow.parse_config("theta=1 m=2.5")
    assert "kappa" not in text and "theta=1" in text
    try:
        pmm_slow.parse_config("alpha=1.2")
    except pmm_slow.UsageError as e:
        assert "alpha" in str(e)
    else:
        raise AssertionError("expected a usage error")

    result, files = pmm_slow.run("mode=stationary J=10")
    assert dict(files)["stationary.csv"].count("\n") == 12
    assert json.loads(result)["bc"]["kind"] == "dirichlet"

    print("smoke test passed")


if __name__ == "__main__":
    main()
