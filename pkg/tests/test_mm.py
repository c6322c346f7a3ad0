import csv

import numpy as np
import pytest

from scrn import mm
from scrn.errors import DescentViolation


def dc_objective(x):
    # x^2 - 2|x|: minima at +-1 with value -1.
    return float(x @ x - 2 * np.abs(x).sum())


def dc_oracle(anchor):
    s = np.where(anchor >= 0, 1.0, -1.0)

    def vs(x):
        return float(x @ x - 2 * s @ x), 2 * x - 2 * s

    return mm.ConvexSurrogate(vs)


def test_dc_reaches_local_minimum():
    x, trace = mm.mm_minimize(dc_objective, dc_oracle, np.array([0.3, -2.0]))
    np.testing.assert_allclose(x, [1.0, -1.0], atol=1e-3)
    assert trace.is_monotone()
    assert trace.converged and trace.stop_reason == "ftol"
    assert trace.iterations[0].step == "init"


def test_surrogate_property_holds_for_dc_oracle():
    rng = np.random.default_rng(0)
    for _ in range(20):
        anchor = rng.normal(size=3)
        report = mm.verify_surrogate(dc_oracle, dc_objective, anchor, rng.normal(size=(50, 3)) * 3)
        assert report.ok()


def test_bad_oracle_is_caught():
    # Minorizer instead of majorizer: its minimum can be worse than the anchor.
    def bad(anchor):
        return mm.ConvexSurrogate(lambda x: (float((x - 5) @ (x - 5)) - 100, 2 * (x - 5)))

    with pytest.raises(DescentViolation):
        mm.mm_minimize(lambda x: float(x @ x), bad, np.zeros(1), mm.MMConfig(inner_budget=500))


def test_max_outer_stop():
    _, trace = mm.mm_minimize(dc_objective, dc_oracle, np.array([5.0]), mm.MMConfig(max_outer=1, inner_budget=3))
    assert trace.stop_reason == "max_outer"
    assert len(trace.iterations) == 2


class TestSolveConvex:
    def test_never_worse_than_warm_start(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            A = rng.normal(size=(6, 3))
            c = rng.normal(size=6)

            def vs(x, A=A, c=c):
                i = int(np.argmax(A @ x + c))
                return float(A[i] @ x + c[i] + np.abs(x).sum()), A[i] + np.sign(x)

            g = mm.ConvexSurrogate(vs)
            x0 = rng.normal(size=3)
            assert g(mm.solve_convex(g, x0, budget=100)) <= g(x0)

    def test_approaches_minimum_of_abs(self):
        g = mm.ConvexSurrogate(lambda x: (float(np.abs(x - 1).sum()), np.sign(x - 1)))
        x = mm.solve_convex(g, np.zeros(2), budget=2000)
        assert g(x) < 0.05

    def test_projection_is_respected(self):
        proj = mm.clamp_projection(np.array([True, False]))
        g = mm.ConvexSurrogate(lambda x: (float(((x - 3) ** 2).sum()), 2 * (x - 3)))
        x = mm.solve_convex(g, np.zeros(2), proj, budget=2000)
        assert x[0] <= 0
        assert x[1] > 1.0

    def test_zero_budget_returns_warm_start(self):
        g = mm.ConvexSurrogate(lambda x: (float(x @ x), 2 * x))
        np.testing.assert_array_equal(mm.solve_convex(g, np.ones(2), budget=0), np.ones(2))


def test_trace_csv(tmp_path):
    _, trace = mm.mm_minimize(dc_objective, dc_oracle, np.array([0.3]))
    path = tmp_path / "trace.csv"
    trace.to_csv(path, timings=False)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["iteration", "objective", "surrogate_min", "time_ms", "step"]
    assert len(rows) == len(trace.iterations) + 1
    assert all(r[3] == "" for r in rows[1:])
    assert float(rows[-1][1]) == trace.objectives[-1]
    trace.to_csv(path)
    assert all(r[3] != "" for r in list(csv.reader(open(path)))[1:])
