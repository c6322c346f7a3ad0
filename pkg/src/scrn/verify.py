"""Randomised property suites behind ``scrn verify``.

Each check returns a :class:`PropertyResult` carrying the worst observed
gap, so the command can report how close each property came to failing.
"""

import functools
import itertools
from dataclasses import dataclass
from typing import Callable, Dict, List

import numpy as np

from . import geometry, mm, network, train
from .network import CanonicalShl, CanonicalThl, ReluLayer, Scrn1Model, Scrn2Model, concavity_probe


@dataclass
class PropertyResult:
    name: str
    passed: bool
    worst: float
    detail: str = ""

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<40s} worst={self.worst:.3e}  {self.detail}"


@functools.lru_cache(maxsize=8)
def _simplex_grid(k, resolution):
    # Compositions of `resolution` into k parts via stars and bars.
    cuts = np.array(list(itertools.combinations(range(resolution + k - 1), k - 1)))
    bounds = np.hstack([-np.ones((len(cuts), 1)), cuts, np.full((len(cuts), 1), resolution + k - 1)])
    lam = (np.diff(bounds, axis=1) - 1) / resolution
    lam.setflags(write=False)
    return lam


def simplex_grid_distance(q, S, resolution=200, zoom_levels=2, zoom=25):
    """Brute-force ``min ||q - lam @ S||`` by grid search over simplex weights.

    A full grid of spacing ``1/resolution`` is followed by ``zoom_levels``
    local grids, each ``zoom`` times finer, spanning one coarse cell on
    either side of the incumbent.  Independent of any optimiser.
    """
    q = np.asarray(q, dtype=float)
    S = np.asarray(S, dtype=float)
    k = S.shape[0]
    if k == 1:
        return float(np.linalg.norm(q - S[0]))
    lam = _simplex_grid(k, resolution)
    d2 = np.sum((lam @ S - q) ** 2, axis=1)
    best = lam[int(np.argmin(d2))]
    best_d2 = float(d2.min())
    h = 1.0 / resolution
    for _ in range(zoom_levels):
        step = h / zoom
        axis = np.arange(-zoom, zoom + 1) * step
        offsets = np.array(np.meshgrid(*([axis] * (k - 1)), indexing="ij")).reshape(k - 1, -1).T
        cand = np.empty((len(offsets), k))
        cand[:, :-1] = best[:-1] + offsets
        cand[:, -1] = 1.0 - cand[:, :-1].sum(axis=1)
        cand = cand[np.all(cand >= -1e-15, axis=1)]
        d2 = np.sum((np.clip(cand, 0, None) @ S - q) ** 2, axis=1)
        i = int(np.argmin(d2))
        if d2[i] < best_d2:
            best, best_d2 = cand[i], float(d2[i])
        h = step
    return float(np.sqrt(best_d2))


# -- geometry ----------------------------------------------------------------

def check_bruteforce(rng, trials=100):
    worst = 0.0
    for _ in range(trials):
        k = int(rng.integers(1, 5))
        S = rng.uniform(-1, 1, size=(k, 2))
        q = rng.uniform(-1.5, 1.5, size=2)
        d = geometry.hull_distance(q, S)[0]
        worst = max(worst, abs(d - simplex_grid_distance(q, S)))
    return PropertyResult("hull distance vs simplex grid", worst <= 1e-3, worst)


def check_rigid_invariance(rng, trials=100):
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(2, 4))
        S = rng.normal(size=(int(rng.integers(2, 8)), n))
        q = rng.normal(size=n) * 1.5
        Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
        t = rng.normal(size=n) * 3
        d0 = geometry.hull_distance(q, S)[0]
        d1 = geometry.hull_distance(Q @ q + t, S @ Q.T + t)[0]
        worst = max(worst, abs(d0 - d1))
    return PropertyResult("rigid-motion invariance", worst < 1e-7, worst)


def check_linear_implies_mutual(rng, trials=500):
    violations = 0
    for _ in range(trials):
        A = rng.normal(size=(int(rng.integers(1, 6)), 2))
        B = rng.normal(size=(int(rng.integers(1, 6)), 2)) + rng.normal(size=2) * 2
        if geometry.is_linearly_separable(A, B).separable:
            violations += not geometry.is_mutually_convexly_separable(A, B)[0]
    return PropertyResult("linear => mutual convex separability", violations == 0, float(violations))


def check_witness_margins(rng, trials=200):
    worst = np.inf
    for _ in range(trials):
        A = rng.normal(size=(int(rng.integers(1, 6)), 2))
        B = rng.normal(size=(int(rng.integers(1, 6)), 2)) + rng.normal(size=2) * 3
        lin = geometry.is_linearly_separable(A, B)
        if lin.separable:
            margin = min((A @ lin.witness_w + lin.witness_b).min(), -(B @ lin.witness_w + lin.witness_b).max())
            worst = min(worst, margin - lin.tolerance_used)
        cvx = geometry.is_convexly_separable(A, B)
        if cvx.separable:
            b = B[cvx.witness_index]
            margin = min((A @ cvx.witness_w + cvx.witness_b).min(), -(b @ cvx.witness_w + cvx.witness_b))
            worst = min(worst, margin - cvx.tolerance_used)
    return PropertyResult("witness hyperplane margins", worst > 0, float(worst))


# -- surrogates and concavity ------------------------------------------------

def _random_shl(rng, n, m):
    return CanonicalShl(rng.normal(), rng.normal(size=(n, m)), rng.normal(size=m))


def _random_thl(rng, n, l1, l2):
    return CanonicalThl(
        rng.normal(), rng.normal(size=(n, l1)), rng.normal(size=l1),
        -np.abs(rng.normal(size=(l1, l2))), rng.normal(size=l2),
    )


def check_shl_surrogate(rng, anchors=100, probes=100):
    worst_bound, worst_touch = -np.inf, 0.0
    for _ in range(anchors):
        n, m = int(rng.integers(1, 4)), int(rng.integers(1, 5))
        Xpos = rng.normal(size=(6, n))
        Xneg = rng.normal(size=(6, n))
        prob = train.ShlProblem(Xpos, Xneg, 0.0, m)
        anchor = prob.pack(*_params(_random_shl(rng, n, m)))
        J_neg = _neg_hinge(prob)
        worst_touch = max(worst_touch, abs(prob.surrogate_neg(anchor, anchor) - J_neg(anchor)))
        for _ in range(probes):
            p = anchor + rng.normal(size=anchor.shape) * rng.uniform(0.01, 3)
            worst_bound = max(worst_bound, J_neg(p) - prob.surrogate_neg(p, anchor))
    passed = worst_bound <= 1e-9 and worst_touch <= 1e-9
    return PropertyResult(
        "SHL surrogate bound and touch", passed, max(worst_bound, worst_touch),
        f"bound={worst_bound:.2e} touch={worst_touch:.2e}",
    )


def _params(model):
    return model.b0, model.W, model.b


def _neg_hinge(prob):
    def J_neg(theta):
        b0, W, b = prob.unpack(theta)
        f = b0 - network.relu(prob.Fneg @ W + b).sum(axis=1)
        return float(np.maximum(0.0, 1.0 + f).sum())

    return J_neg


def check_sandwich(rng, trials=1000):
    worst, worst_touch = -np.inf, 0.0
    for _ in range(trials):
        n, l1, l2 = int(rng.integers(1, 4)), int(rng.integers(1, 6)), int(rng.integers(1, 5))
        params = _random_thl(rng, n, l1, l2)
        x = rng.normal(size=n) * 2
        f = float(params.forward(x))
        a1 = rng.integers(0, 2, size=l1)
        a2 = rng.integers(0, 2, size=l2)
        f1, f2 = train.thl_bounds(params, x, a1, a2)
        worst = max(worst, f1 - f, f - f2)
        t1 = (params.layer1_preactivation(x) > 0).astype(float)
        t2 = (params.layer2_preactivation(x) > 0).astype(float)
        g1, g2 = train.thl_bounds(params, x, t1, t2)
        worst_touch = max(worst_touch, abs(g1 - f), abs(g2 - f))
    passed = worst <= 1e-12 and worst_touch <= 1e-12
    return PropertyResult(
        "two-layer sandwich f1 <= f <= f2", passed, max(worst, worst_touch),
        f"order={worst:.2e} touch={worst_touch:.2e}",
    )


def _probe_all(rng, fs: List[Callable], dim, segments, scale=3.0):
    worst = 0.0
    for _ in range(segments):
        x0 = rng.normal(size=dim) * scale
        x1 = rng.normal(size=dim) * scale
        for f in fs:
            mag = 1 + max(abs(float(f(x0))), abs(float(f(x1))))
            worst = max(worst, concavity_probe(f, x0, x1, samples=9) / mag)
    return worst


def check_concavity(rng, segments=1000):
    n, l, m = 3, 6, 2
    W = rng.normal(size=(n, l))
    s1 = Scrn1Model(ReluLayer(W, rng.normal(size=l)), -np.abs(rng.normal(size=(l, m))), rng.normal(size=m))
    s2 = Scrn2Model(
        ReluLayer(rng.normal(size=(n, l)), rng.normal(size=l)),
        ReluLayer(-np.abs(rng.normal(size=(l, 4))), np.abs(rng.normal(size=4)), "nonpositive"),
        -np.abs(rng.normal(size=(4, m))), rng.normal(size=m),
    )
    out1 = [lambda x, k=k: s1.forward(x)[k] for k in range(m)]
    out2 = [lambda z, k=k: s2.forward_from_features(z)[k] for k in range(m)]
    w1 = _probe_all(rng, out1, n, segments)
    w2 = _probe_all(rng, out2, l, segments)

    x = rng.normal(size=n)
    a = -np.abs(rng.normal(size=l))

    def in_params(theta):
        Wt = theta[: n * l].reshape(n, l)
        bt = theta[n * l:]
        return a @ network.relu(x @ Wt + bt) + 0.7

    w3 = _probe_all(rng, [in_params], n * l + l, segments)
    worst = max(w1, w2, w3)
    return PropertyResult(
        "concavity of sign-constrained outputs", worst <= 1e-9, worst,
        f"scrn1(x)={w1:.1e} scrn2(z1)={w2:.1e} params={w3:.1e}",
    )


def check_midpoint_convexity(rng, pairs=1000):
    Xpos = rng.normal(size=(8, 2))
    Xneg = rng.normal(size=(8, 2))
    shl = train.ShlProblem(Xpos, Xneg, 1e-3, 4)
    g_shl = shl.surrogate(shl.pack(*_params(_random_shl(rng, 2, 4))))
    thl = _random_thl(rng, 2, 5, 3)
    first = train.FirstLayerProblem(thl, Xpos, Xneg, 1e-3)
    g_first = first.surrogate(first.pack(thl.W1, thl.b1))
    worst = -np.inf
    for g, size in ((g_shl, shl.size), (g_first, first.n * first.l1 + first.l1)):
        for _ in range(pairs // 2):
            u = rng.normal(size=size) * 2
            v = rng.normal(size=size) * 2
            worst = max(worst, g((u + v) / 2) - (g(u) + g(v)) / 2)
    return PropertyResult("surrogate midpoint convexity", worst <= 1e-9, float(worst))


# -- descent -----------------------------------------------------------------

def check_inner_solver(rng, trials=100):
    worst = -np.inf
    for _ in range(trials):
        k, d = int(rng.integers(2, 8)), int(rng.integers(1, 5))
        A = rng.normal(size=(k, d))
        c = rng.normal(size=k)

        def vs(x, A=A, c=c):
            vals = A @ x + c
            i = int(np.argmax(vals))
            return float(vals[i] + 0.1 * np.abs(x).sum()), A[i] + 0.1 * np.sign(x)

        g = mm.ConvexSurrogate(vs)
        x0 = rng.normal(size=d) * 3
        proj = mm.clamp_projection(rng.integers(0, 2, size=d).astype(bool))
        x0 = proj(x0)
        x = mm.solve_convex(g, x0, proj, budget=300)
        worst = max(worst, g(x) - g(x0))
        if not np.array_equal(proj(proj(x)), proj(x)):
            return PropertyResult("inner solver never worse than warm start", False, np.inf, "projection")
    return PropertyResult("inner solver never worse than warm start", worst <= 0, float(worst))


def check_trainer_descent(rng):
    xor_pos = np.array([[0.0, 0.0], [1.0, 1.0]])
    xor_neg = np.array([[0.0, 1.0], [1.0, 0.0]])
    traces = []
    _, tr = train.train_shl(xor_pos, xor_neg, train.TrainConfig(hidden=2, seed=int(rng.integers(1 << 16)), restarts=1))
    traces.append(tr)
    Xpos = rng.normal(size=(8, 2))
    Xneg = rng.normal(size=(8, 2)) * 2.5
    _, tr = train.train_thl(
        Xpos, Xneg,
        train.TrainConfig(hidden=(6, 3), seed=int(rng.integers(1 << 16)), max_outer=6, inner_budget=300),
    )
    traces.append(tr)
    worst = max(float(np.max(np.diff(t.objectives), initial=-np.inf)) for t in traces)
    return PropertyResult("MM traces non-increasing", worst <= 1e-9, worst)


SUITES: Dict[str, List[Callable]] = {
    "geometry": [check_bruteforce, check_rigid_invariance, check_linear_implies_mutual, check_witness_margins],
    "surrogates": [check_shl_surrogate, check_sandwich, check_concavity, check_midpoint_convexity],
    "descent": [check_inner_solver, check_trainer_descent],
}


def run_suite(name: str, seed: int = 0) -> List[PropertyResult]:
    names = list(SUITES) if name == "all" else [name]
    if any(n not in SUITES for n in names):
        raise KeyError(name)
    results = []
    for n in names:
        for check in SUITES[n]:
            results.append(check(np.random.default_rng([seed, len(results)])))
    return results
