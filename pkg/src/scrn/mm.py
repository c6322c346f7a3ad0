"""Majorization-minimization driver and its convex inner solver.

An *oracle* is any callable ``oracle(anchor) -> ConvexSurrogate`` whose
result upper-bounds the objective everywhere and equals it at ``anchor``.
Minimizing the surrogate (even inexactly, as long as the result is no worse
than the anchor) can never increase the objective, and
:func:`mm_minimize` enforces exactly that at runtime.
"""

import csv
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .errors import DescentViolation, NonFinite

DESCENT_TOL = 1e-9


@dataclass
class ConvexSurrogate:
    """Convex function given by a combined value/subgradient evaluator."""

    value_and_subgradient: Callable[[np.ndarray], tuple]

    def __call__(self, x):
        return self.value_and_subgradient(x)[0]

    def subgradient(self, x):
        return self.value_and_subgradient(x)[1]


@dataclass
class MMConfig:
    ftol: float = 1e-8
    max_outer: int = 100
    inner_budget: int = 2000
    check_descent: bool = True


@dataclass
class MMStep:
    objective: float
    surrogate_min: float
    time_ms: float
    step: str = "mm"


@dataclass
class MMTrace:
    """Objective at each anchor; ``iterations[0]`` is the starting point.

    ``outer_total`` counts every outer iteration spent producing the trace,
    including those of discarded restarts.
    """

    iterations: List[MMStep] = field(default_factory=list)
    converged: bool = False
    stop_reason: str = ""
    outer_total: int = 0

    @property
    def objectives(self):
        return np.array([it.objective for it in self.iterations])

    def is_monotone(self, tol=DESCENT_TOL):
        obj = self.objectives
        return bool(np.all(obj[1:] <= obj[:-1] + tol))

    def extend(self, other: "MMTrace", skip_first=True):
        self.iterations.extend(other.iterations[1:] if skip_first else other.iterations)
        self.outer_total += other.outer_total

    def to_csv(self, path, timings=True):
        """Write one row per anchor.  ``timings=False`` leaves ``time_ms``
        blank so that repeated runs produce identical files."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "objective", "surrogate_min", "time_ms", "step"])
            for i, it in enumerate(self.iterations):
                writer.writerow([i, repr(it.objective), repr(it.surrogate_min), f"{it.time_ms:.3f}" if timings else "", it.step])


def _finite(value, what):
    if not np.all(np.isfinite(value)):
        raise NonFinite(f"non-finite {what}")
    return value


def solve_convex(g, x_warm, projection: Optional[Callable] = None, budget: int = 2000):
    """Projected subgradient descent with best-iterate tracking.

    Step sizes are ``eta0 / sqrt(t + 1)`` with
    ``eta0 = 0.1 / (1 + ||subgradient at x_warm||)``.  The returned point is
    the best feasible iterate seen, so ``g(x_out) <= g(x_warm)`` always holds
    (``x_warm`` itself is returned if nothing beats it).
    """
    x = np.array(x_warm, dtype=np.float64)
    if projection is not None:
        x = projection(x)
    val, sub = g.value_and_subgradient(x)
    _finite(val, "surrogate value")
    best_x, best_val = x.copy(), float(val)
    eta0 = 0.1 / (1.0 + float(np.linalg.norm(sub)))
    for t in range(budget):
        if not np.any(sub):
            break
        x = x - (eta0 / np.sqrt(t + 1.0)) * sub
        if projection is not None:
            x = projection(x)
        val, sub = g.value_and_subgradient(x)
        _finite(val, "surrogate value")
        if val < best_val:
            best_x, best_val = x.copy(), float(val)
    return best_x


def mm_minimize(f: Callable, oracle: Callable, x0, config: MMConfig = None, projection=None, step="mm"):
    """Iterate ``x <- argmin g(., x)`` until the objective change drops below ftol.

    Returns ``(x_final, trace)``.  Raises :class:`DescentViolation` if an
    iteration increases ``f`` by more than ``1e-9``.
    """
    config = config or MMConfig()
    x = np.array(x0, dtype=np.float64)
    if projection is not None:
        x = projection(x)
    fx = float(_finite(f(x), "objective"))
    trace = MMTrace([MMStep(fx, fx, 0.0, "init")])
    for _ in range(config.max_outer):
        t0 = time.perf_counter()
        g = oracle(x)
        x_new = solve_convex(g, x, projection, config.inner_budget)
        g_new = float(g(x_new))
        f_new = float(_finite(f(x_new), "objective"))
        elapsed = (time.perf_counter() - t0) * 1e3
        if config.check_descent and f_new > fx + DESCENT_TOL:
            raise DescentViolation(f"objective rose from {fx!r} to {f_new!r}")
        trace.iterations.append(MMStep(f_new, g_new, elapsed, step))
        trace.outer_total += 1
        change = abs(f_new - fx)
        x, fx = x_new, f_new
        if change < config.ftol:
            trace.converged = True
            trace.stop_reason = "ftol"
            break
    else:
        trace.stop_reason = "max_outer"
    return x, trace


@dataclass
class SurrogateReport:
    bound_gap: float
    touch_gap: float
    scale: float

    def ok(self, rel=1e-9):
        return self.bound_gap <= rel * self.scale and self.touch_gap <= rel * self.scale


def verify_surrogate(oracle, f, anchor, probes) -> SurrogateReport:
    """Worst ``f(p) - g(p, anchor)`` over probes and ``|f(anchor) - g(anchor, anchor)|``."""
    g = oracle(np.asarray(anchor, dtype=np.float64))
    f_anchor = float(f(anchor))
    scale = 1.0 + abs(f_anchor)
    bound = -np.inf
    for p in probes:
        fp = float(f(p))
        bound = max(bound, fp - float(g(p)))
        scale = max(scale, 1.0 + abs(fp))
    touch = abs(f_anchor - float(g(anchor)))
    return SurrogateReport(float(bound), float(touch), float(scale))


def clamp_projection(upper_mask: np.ndarray) -> Callable:
    """Projection clamping the masked coordinates to ``<= 0``."""
    mask = np.asarray(upper_mask, dtype=bool)

    def project(x):
        y = np.array(x, dtype=np.float64)
        y[mask] = np.minimum(y[mask], 0.0)
        return y

    return project
