"""Constructive sign-constrained separators.

* :func:`build_shl_separator` -- one hidden node per negative point, each
  cutting that point off from the positive hull; scaled so that the output
  is exactly 1 on the positives and at most -1 on the negatives.
* :func:`build_shl_multiclass` -- one-vs-rest stacking of the above.
* :func:`greedy_convex_cover` -- partition a set into clusters whose hulls
  avoid an opposing set.
* :func:`build_thl_separator` / :func:`build_thl_multiclass` -- two hidden
  layers, one second-layer node per convex cluster of the negative set.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np
from scipy.linalg import block_diag

from .errors import (
    DegenerateGamma,
    ModelDoesNotSeparate,
    NotConvexlySeparable,
    NotDisjoint,
    NotPairwiseMutuallyConvexSeparable,
)
from .geometry import (
    DEFAULT_TOL,
    SeparabilityVerdict,
    as_points,
    hull_distance,
    is_convexly_separable,
)
from .network import ReluLayer, Scrn1Model, Scrn2Model, relu

log = logging.getLogger(__name__)


def _verify_binary(model, Xpos, Xneg):
    fpos = model.forward(Xpos)[:, 0]
    fneg = model.forward(Xneg)[:, 0]
    bad = np.flatnonzero(fpos <= 0)
    if bad.size:
        i = int(bad[0])
        raise ModelDoesNotSeparate(f"positive point {i} has output {fpos[i]!r}", i, "pos", float(fpos[i]))
    bad = np.flatnonzero(fneg >= 0)
    if bad.size:
        i = int(bad[0])
        raise ModelDoesNotSeparate(f"negative point {i} has output {fneg[i]!r}", i, "neg", float(fneg[i]))


def shl_hidden_layer(Xpos, Xneg, tol=DEFAULT_TOL):
    """Cutting planes ``(W, b)``: node ``i`` is positive at negative point ``i``
    and negative on all of CH(Xpos).

    The plane is the perpendicular bisector between the negative point and
    its projection onto CH(Xpos).
    """
    Xpos = as_points(Xpos)
    Xneg = as_points(Xneg, dim=Xpos.shape[1])
    n, k = Xpos.shape[1], Xneg.shape[0]
    W = np.empty((n, k))
    b = np.empty(k)
    for i, x in enumerate(Xneg):
        dist, p, _ = hull_distance(x, Xpos)
        if dist <= tol:
            raise NotConvexlySeparable(
                f"negative point {i} {x.tolist()} lies within {dist:.3g} of the positive hull",
                point_index=i,
                point=x,
                distance=dist,
            )
        w = (x - p) / dist
        W[:, i] = w
        b[i] = -w @ (x + p) / 2.0
    return W, b


def _output_scale(activations_sum, tol):
    gamma_min = float(np.min(activations_sum))
    if gamma_min <= tol:
        raise DegenerateGamma(f"gamma_min = {gamma_min!r} is not above tolerance {tol!r}")
    return gamma_min


def build_shl_separator(Xpos, Xneg, tol: float = DEFAULT_TOL) -> Scrn1Model:
    """Single-hidden-layer SCRN with ``f == 1`` on Xpos and ``f <= -1`` on Xneg.

    Raises :class:`NotConvexlySeparable` if some negative point is within
    ``tol`` of CH(Xpos).
    """
    Xpos = as_points(Xpos)
    Xneg = as_points(Xneg, dim=Xpos.shape[1])
    W, b = shl_hidden_layer(Xpos, Xneg, tol)
    gamma_min = _output_scale(relu(Xneg @ W + b).sum(axis=1), tol)
    a = np.full((W.shape[1], 1), -2.0 / gamma_min)
    model = Scrn1Model(ReluLayer(W, b), a, np.array([1.0]))
    _verify_binary(model, Xpos, Xneg)
    return model


def _check_disjoint(sets, tol):
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            d = np.linalg.norm(sets[i][:, None, :] - sets[j][None, :, :], axis=2)
            hit = np.argwhere(d <= tol)
            if hit.size:
                p, q = hit[0]
                raise NotDisjoint(
                    f"point {sets[i][p].tolist()} of set {i} coincides with point {q} of set {j}"
                )


def _one_vs_rest(classes):
    sets = [as_points(c) for c in classes]
    dim = sets[0].shape[1]
    sets = [as_points(s, dim=dim) for s in sets]
    for k in range(len(sets)):
        rest = np.vstack([s for j, s in enumerate(sets) if j != k])
        yield k, sets[k], rest


def build_shl_multiclass(classes: Sequence, tol: float = DEFAULT_TOL) -> Scrn1Model:
    """m-output SCRN: output k is positive exactly on class k."""
    if len(classes) < 2:
        raise ValueError("need at least two classes")
    sets = [as_points(c) for c in classes]
    for i in range(len(sets)):
        for j in range(len(sets)):
            if i != j and not is_convexly_separable(sets[i], sets[j], tol).separable:
                raise NotPairwiseMutuallyConvexSeparable(
                    f"class {i} is not convexly separable from class {j}", pair=(i, j)
                )
    Ws, bs, As = [], [], []
    for _, Xk, rest in _one_vs_rest(sets):
        sub = build_shl_separator(Xk, rest, tol)
        Ws.append(sub.hidden.W)
        bs.append(sub.hidden.b)
        As.append(sub.A)
    model = Scrn1Model(
        ReluLayer(np.hstack(Ws), np.concatenate(bs)),
        block_diag(*As),
        np.ones(len(sets)),
    )
    return model


@dataclass
class ConvexClusterCover:
    """Partition of a point set into clusters whose hulls avoid ``against``."""

    clusters: List[List[int]]
    verdicts: List[SeparabilityVerdict] = field(default_factory=list)

    def __len__(self):
        return len(self.clusters)


def greedy_convex_cover(X, against, tol: float = DEFAULT_TOL) -> ConvexClusterCover:
    """Greedy partition of ``X`` into clusters with CH(cluster) ∩ against = ∅.

    Each new cluster is seeded with the first unassigned point; remaining
    unassigned points are tried in index order and kept when the grown hull
    still excludes every point of ``against``.
    """
    X = as_points(X)
    Y = as_points(against, dim=X.shape[1])
    _check_disjoint([X, Y], tol)

    unassigned = list(range(X.shape[0]))
    clusters, verdicts = [], []
    while unassigned:
        seed = unassigned.pop(0)
        members = [seed]
        # Per-opposing-point separating planes (w, b), positive on the cluster.
        # A candidate on the positive side of every plane cannot pull any
        # opposing point into the hull, so only failing planes are re-solved.
        planes = []
        for y in Y:
            w, b = _cut(X[seed], y)
            planes.append((w, b))
        for idx in list(unassigned):
            cand = X[idx]
            trial = X[members + [idx]]
            new_planes = []
            ok = True
            for y, (w, b) in zip(Y, planes):
                if w @ cand + b > tol:
                    new_planes.append((w, b))
                    continue
                dist, p, _ = hull_distance(y, trial)
                if dist <= tol:
                    ok = False
                    break
                new_planes.append(_cut(p, y))
            if ok:
                members.append(idx)
                unassigned.remove(idx)
                planes = new_planes
        clusters.append(members)
        verdicts.append(is_convexly_separable(X[members], Y, tol))
    return ConvexClusterCover(clusters, verdicts)


def _cut(p, y):
    d = p - y
    w = d / np.linalg.norm(d)
    return w, float(-w @ (p + y) / 2.0)


def build_thl_separator(Xpos, Xneg, tol: float = DEFAULT_TOL) -> Scrn2Model:
    """Two-hidden-layer SCRN separating any two disjoint finite sets.

    The negative set is covered by convex clusters; each cluster gets a
    single-hidden-layer separator (cluster positive, Xpos negative) which
    becomes one second-layer node.  Output is 1 on Xpos and <= -1 on Xneg.
    """
    Xpos = as_points(Xpos)
    Xneg = as_points(Xneg, dim=Xpos.shape[1])
    _check_disjoint([Xpos, Xneg], tol)
    cover = greedy_convex_cover(Xneg, Xpos, tol)
    log.debug("convex cover of the negative set: %d clusters", len(cover))

    W1s, b1s, w2s, b2 = [], [], [], []
    for members in cover.clusters:
        sub = build_shl_separator(Xneg[members], Xpos, tol)
        W1s.append(sub.hidden.W)
        b1s.append(sub.hidden.b)
        w2s.append(sub.A)
        b2.append(sub.c[0])
    W1 = np.hstack(W1s)
    b1 = np.concatenate(b1s)
    W2 = block_diag(*w2s)
    b2 = np.array(b2)

    z2 = relu(relu(Xneg @ W1 + b1) @ W2 + b2)
    gamma_min = _output_scale(z2.sum(axis=1), tol)
    model = Scrn2Model(
        ReluLayer(W1, b1),
        ReluLayer(W2, b2, "nonpositive"),
        np.full((W2.shape[1], 1), -2.0 / gamma_min),
        np.array([1.0]),
    )
    _verify_binary(model, Xpos, Xneg)
    return model


def build_thl_multiclass(classes: Sequence, tol: float = DEFAULT_TOL) -> Scrn2Model:
    """m-output two-hidden-layer SCRN; output k is positive exactly on class k."""
    if len(classes) < 2:
        raise ValueError("need at least two classes")
    sets = [as_points(c) for c in classes]
    _check_disjoint(sets, tol)
    W1s, b1s, W2s, b2s, As = [], [], [], [], []
    for _, Xk, rest in _one_vs_rest(sets):
        sub = build_thl_separator(Xk, rest, tol)
        W1s.append(sub.layer1.W)
        b1s.append(sub.layer1.b)
        W2s.append(sub.layer2.W)
        b2s.append(sub.layer2.b)
        As.append(sub.A)
    return Scrn2Model(
        ReluLayer(np.hstack(W1s), np.concatenate(b1s)),
        ReluLayer(block_diag(*W2s), np.concatenate(b2s), "nonpositive"),
        block_diag(*As),
        np.ones(len(sets)),
    )


def verify_multiclass(model, classes) -> bool:
    """True iff output k is > 0 on class k and < 0 on every other class."""
    for k, X in enumerate(as_points(c) for c in classes):
        Y = model.forward(X)
        if not np.all(Y[:, k] > 0):
            return False
        others = np.delete(Y, k, axis=1)
        if not np.all(others < 0):
            return False
    return True
