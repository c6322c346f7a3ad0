"""Convex-hull distances and separability verdicts for finite point sets.

All hull queries reduce to one primitive: the minimum-norm point of the
convex hull of a finite set ``P``.  It is computed by a fully corrective
Frank-Wolfe iteration (Wolfe's minimum-norm-point method): a Frank-Wolfe
vertex is added to the active support, then the weights are re-optimised
exactly over the affine hull of the support, dropping vertices whose
weight hits zero.  The method terminates finitely and returns barycentric
coefficients, which double as a membership certificate.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import DimensionMismatch, EmptySet

DEFAULT_TOL = 1e-7

_GAP_TOL = 1e-10
_MAX_ITER = 10_000


def as_points(points, dim=None) -> np.ndarray:
    """Coerce ``points`` to a 2-D float64 array of shape ``(N, dim)``."""
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1) if arr.size else arr.reshape(0, dim or 0)
    if arr.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D array of points, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise EmptySet("point set is empty")
    if dim is not None and arr.shape[1] != dim:
        raise DimensionMismatch(f"points have dimension {arr.shape[1]}, expected {dim}")
    return arr


@dataclass
class PointSet:
    """A finite, non-empty set of points in R^dim (one point per row)."""

    points: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        self.points = as_points(self.points)
        self.dim = self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.points if dtype is None else self.points.astype(dtype)


@dataclass
class SeparabilityVerdict:
    """Verdict plus certificate for a separability query.

    When ``separable`` is true, ``witness_w``/``witness_b`` define a
    hyperplane with ``w @ x + b > 0`` on the first set and ``< 0`` on the
    second.  For the unidirectional convex check the second side is the
    single point ``witness_index`` of the other set closest to the hull.
    """

    separable: bool
    distance: float
    witness_w: Optional[np.ndarray] = None
    witness_b: Optional[float] = None
    tolerance_used: float = DEFAULT_TOL
    witness_index: Optional[int] = None

    def to_dict(self):
        return {
            "separable": bool(self.separable),
            "distance": float(self.distance),
            "witness_w": None if self.witness_w is None else [float(v) for v in self.witness_w],
            "witness_b": None if self.witness_b is None else float(self.witness_b),
            "tolerance_used": float(self.tolerance_used),
            "witness_index": self.witness_index,
        }


def _affine_minimizer(PS: np.ndarray) -> np.ndarray:
    # argmin ||PS.T @ a|| subject to sum(a) == 1, via the KKT system.
    k = PS.shape[0]
    kkt = np.zeros((k + 1, k + 1))
    kkt[:k, :k] = PS @ PS.T
    kkt[:k, k] = 1.0
    kkt[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
    return sol[:k]


def min_norm_point(P: np.ndarray, gap_tol: float = _GAP_TOL, max_iter: int = _MAX_ITER):
    """Minimum-norm point of CH(P).

    Returns ``(y, support, weights)`` with ``y = weights @ P[support]``.
    """
    P = np.asarray(P, dtype=np.float64)
    scale = max(1.0, float(np.max(np.einsum("ij,ij->i", P, P))))
    j = int(np.argmin(np.einsum("ij,ij->i", P, P)))
    support: List[int] = [j]
    lam = np.array([1.0])
    y = P[j].copy()
    eps = 1e-14

    for _ in range(max_iter):
        dots = P @ y
        k = int(np.argmin(dots))
        gap = float(y @ y - dots[k])
        if gap <= gap_tol * scale or k in support:
            break
        support.append(k)
        lam = np.append(lam, 0.0)
        for _minor in range(len(support) + 1):
            alpha = _affine_minimizer(P[support])
            if np.all(alpha > eps):
                lam = alpha
                break
            shrinking = alpha <= eps
            denom = lam[shrinking] - alpha[shrinking]
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(denom > 0, lam[shrinking] / denom, np.inf)
            theta = float(min(1.0, np.min(ratios)))
            lam = theta * alpha + (1.0 - theta) * lam
            keep = lam > eps
            if not np.any(keep):
                keep[int(np.argmax(lam))] = True
            support = [s for s, kp in zip(support, keep) if kp]
            lam = lam[keep]
            lam = lam / lam.sum()
        lam = np.clip(lam, 0.0, None)
        lam = lam / lam.sum()
        y = lam @ P[support]

    return y, support, lam


def _dedup(S: np.ndarray):
    uniq, first_idx = np.unique(S, axis=0, return_index=True)
    return uniq, first_idx


def hull_distance(q, S) -> Tuple[float, np.ndarray, np.ndarray]:
    """Euclidean distance from ``q`` to CH(S).

    Returns ``(distance, nearest, coefficients)`` where ``coefficients`` are
    simplex weights over the rows of ``S`` with ``nearest = coefficients @ S``.
    """
    S = as_points(S)
    q = np.asarray(q, dtype=np.float64).ravel()
    if q.shape[0] != S.shape[1]:
        raise DimensionMismatch(f"query has dimension {q.shape[0]}, set has {S.shape[1]}")
    uniq, first_idx = _dedup(S)
    y, support, lam = min_norm_point(uniq - q)
    coeffs = np.zeros(S.shape[0])
    coeffs[first_idx[support]] = lam
    nearest = lam @ uniq[support]
    return float(np.linalg.norm(q - nearest)), nearest, coeffs


def hulls_distance(A, B) -> Tuple[float, np.ndarray, np.ndarray]:
    """Distance between CH(A) and CH(B) with the attaining pair ``(pa, pb)``.

    Solved as the minimum-norm point of the Minkowski difference {a - b}.
    """
    A = as_points(A)
    B = as_points(B, dim=A.shape[1])
    A = _dedup(A)[0]
    B = _dedup(B)[0]
    diff = (A[:, None, :] - B[None, :, :]).reshape(-1, A.shape[1])
    _, support, lam = min_norm_point(diff)
    ia, ib = np.divmod(np.asarray(support), B.shape[0])
    wa = np.bincount(ia, weights=lam, minlength=A.shape[0])
    wb = np.bincount(ib, weights=lam, minlength=B.shape[0])
    pa = wa @ A
    pb = wb @ B
    return float(np.linalg.norm(pa - pb)), pa, pb


def _bisector(p, q):
    # Unit normal pointing from q to p, offset through the midpoint.
    d = p - q
    w = d / np.linalg.norm(d)
    return w, float(-w @ (p + q) / 2.0)


def is_linearly_separable(A, B, tol: float = DEFAULT_TOL) -> SeparabilityVerdict:
    """True iff CH(A) and CH(B) are at distance greater than ``tol``."""
    dist, pa, pb = hulls_distance(A, B)
    if dist > tol:
        w, b = _bisector(pa, pb)
        return SeparabilityVerdict(True, dist, w, b, tol)
    return SeparabilityVerdict(False, dist, None, None, tol)


def point_hull_distances(A, B) -> np.ndarray:
    """Hull distance from every row of ``B`` to CH(A)."""
    A = as_points(A)
    B = as_points(B, dim=A.shape[1])
    return np.array([hull_distance(b, A)[0] for b in B])


def is_convexly_separable(A, from_B, tol: float = DEFAULT_TOL) -> SeparabilityVerdict:
    """True iff no point of ``from_B`` lies within ``tol`` of CH(A).

    Asymmetric: a convex region containing A excludes every point of B.
    """
    A = as_points(A)
    B = as_points(from_B, dim=A.shape[1])
    best = (np.inf, -1, None)
    for i, b in enumerate(B):
        dist, nearest, _ = hull_distance(b, A)
        if dist < best[0]:
            best = (dist, i, nearest)
    dist, i, nearest = best
    if dist > tol:
        w, bias = _bisector(nearest, B[i])
        return SeparabilityVerdict(True, dist, w, bias, tol, witness_index=i)
    return SeparabilityVerdict(False, dist, None, None, tol, witness_index=i)


def is_mutually_convexly_separable(A, B, tol: float = DEFAULT_TOL):
    """Convex separability in both directions.

    Returns ``(ok, verdict_A_from_B, verdict_B_from_A)``.
    """
    ab = is_convexly_separable(A, B, tol)
    ba = is_convexly_separable(B, A, tol)
    return ab.separable and ba.separable, ab, ba


def pairwise_verdicts(classes: Sequence, mode: str = "mutual_convex", tol: float = DEFAULT_TOL):
    """Symmetric boolean matrix of pairwise verdicts; the diagonal is True.

    ``mode`` is ``"linear"`` or ``"mutual_convex"``.
    """
    if mode not in ("linear", "mutual_convex"):
        raise ValueError(f"unknown mode {mode!r}")
    if len(classes) < 2:
        raise ValueError("need at least two classes")
    sets = [as_points(c) for c in classes]
    dim = sets[0].shape[1]
    for s in sets:
        if s.shape[1] != dim:
            raise DimensionMismatch("classes differ in dimension")
    m = len(sets)
    out = np.ones((m, m), dtype=bool)
    for i in range(m):
        for j in range(i + 1, m):
            if mode == "linear":
                ok = is_linearly_separable(sets[i], sets[j], tol).separable
            else:
                ok = is_mutually_convexly_separable(sets[i], sets[j], tol)[0]
            out[i, j] = out[j, i] = ok
    return out
