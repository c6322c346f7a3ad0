"""Active-set decompositions of the negative pattern set.

A separating SCRN is piecewise affine (one hidden layer) or piecewise
single-hidden-layer (two hidden layers).  Grouping the negative points by
the set of active top-layer nodes yields subsets that are linearly
(resp. convexly) separable from the positive set, each with an explicit
separator read off the model weights.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .construct import build_shl_separator
from .errors import ModelDoesNotSeparate
from .geometry import DEFAULT_TOL, as_points, is_convexly_separable, is_linearly_separable
from .network import CanonicalShl, CanonicalThl, Scrn1Model, Scrn2Model, relu

MAX_OCCUPIED = 4096

ActiveSet = Tuple[int, ...]


def active_set_of(pre) -> ActiveSet:
    """Indices with strictly positive pre-activation (0 counts as inactive)."""
    return tuple(int(i) for i in np.flatnonzero(np.asarray(pre) > 0))


@dataclass
class AffineSeparator:
    """``f(x) = w @ x + b``."""

    w: np.ndarray
    b: float

    def __call__(self, X):
        return np.asarray(X) @ self.w + self.b

    def to_dict(self):
        return {"w": [float(v) for v in self.w], "b": float(self.b)}


@dataclass
class ShlSeparator:
    """``f(x) = a @ relu(W.T @ x + b) + c`` (weights taken from the model's first layer)."""

    W: np.ndarray
    b: np.ndarray
    a: np.ndarray
    c: float

    def __call__(self, X):
        return relu(np.asarray(X) @ self.W + self.b) @ self.a + self.c

    def to_dict(self):
        # The hidden layer is shared with the source model; only the head is stored.
        return {"a": [float(v) for v in self.a], "c": float(self.c)}


@dataclass
class SubsetCheck:
    min_pos_margin: float
    max_subset_value: float
    strict_signs: bool
    convexly_separable: Optional[bool] = None
    hull_distance: Optional[float] = None

    def to_dict(self):
        out = {
            "min_pos_margin": float(self.min_pos_margin),
            "max_subset_value": float(self.max_subset_value),
            "strict_signs": bool(self.strict_signs),
        }
        if self.convexly_separable is not None:
            out["convexly_separable"] = bool(self.convexly_separable)
            out["hull_distance"] = float(self.hull_distance)
        return out


@dataclass
class DecompositionReport:
    kind: str
    subsets: Dict[ActiveSet, List[int]]
    separators: Dict[ActiveSet, object]
    verification: Dict[ActiveSet, SubsetCheck]
    coverage_ok: bool
    truncated: bool = False
    n_negative: int = 0

    @property
    def all_verified(self):
        checks = self.verification.values()
        return all(c.strict_signs and c.convexly_separable is not False for c in checks)

    def to_dict(self):
        return {
            "kind": self.kind,
            "coverage_ok": bool(self.coverage_ok),
            "truncated": bool(self.truncated),
            "n_negative": int(self.n_negative),
            "all_verified": bool(self.all_verified),
            "subsets": [
                {
                    "active_set": list(key),
                    "members": list(members),
                    "separator": self.separators[key].to_dict(),
                    "verification": self.verification[key].to_dict(),
                }
                for key, members in self.subsets.items()
            ],
        }


def _as_shl(model) -> Scrn1Model:
    if isinstance(model, CanonicalShl):
        return model.to_scrn1()
    if isinstance(model, Scrn1Model):
        return model
    raise TypeError(f"expected a single-hidden-layer model, got {type(model).__name__}")


def _as_thl(model) -> Scrn2Model:
    if isinstance(model, CanonicalThl):
        return model.to_scrn2()
    if isinstance(model, Scrn2Model):
        return model
    raise TypeError(f"expected a two-hidden-layer model, got {type(model).__name__}")


def _require_separation(model, Xpos, Xneg):
    if model.n_outputs != 1:
        raise ValueError("decomposition needs a single-output model")
    fpos = model.forward(Xpos)[:, 0]
    fneg = model.forward(Xneg)[:, 0]
    for label, values, bad in (("pos", fpos, fpos <= 0), ("neg", fneg, fneg >= 0)):
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise ModelDoesNotSeparate(
                f"model gives {float(values[i])!r} on {label} point {i}", i, label, float(values[i])
            )


def _group(pre, limit=MAX_OCCUPIED):
    subsets: Dict[ActiveSet, List[int]] = {}
    truncated = False
    for i, row in enumerate(pre):
        key = active_set_of(row)
        if key not in subsets and len(subsets) >= limit:
            truncated = True
            continue
        subsets.setdefault(key, []).append(i)
    return dict(sorted(subsets.items())), truncated


def shl_decompose(model, Xpos, Xneg) -> DecompositionReport:
    """Split Xneg by hidden-layer active set; each piece gets an affine separator.

    The separator for active set I is ``sum_{i in I} a_i (w_i @ x + b_i) + c``,
    positive on Xpos and negative on the piece.
    """
    model = _as_shl(model)
    Xpos = as_points(Xpos)
    Xneg = as_points(Xneg, dim=Xpos.shape[1])
    _require_separation(model, Xpos, Xneg)
    W, b = model.hidden.W, model.hidden.b
    a, c = model.A[:, 0], float(model.c[0])

    subsets, truncated = _group(Xneg @ W + b)
    separators, checks = {}, {}
    for key, members in subsets.items():
        idx = list(key)
        # Empty active set gives f = c on the piece, impossible for a separator.
        assert idx, "negative point with no active hidden node"
        sep = AffineSeparator(W[:, idx] @ a[idx], float(a[idx] @ b[idx] + c))
        pos_vals = sep(Xpos)
        sub_vals = sep(Xneg[members])
        separators[key] = sep
        checks[key] = SubsetCheck(
            float(pos_vals.min()),
            float(sub_vals.max()),
            bool(np.all(pos_vals > 0) and np.all(sub_vals < 0)),
        )
    covered = sorted(i for m in subsets.values() for i in m)
    return DecompositionReport(
        "shl",
        subsets,
        separators,
        checks,
        coverage_ok=(covered == list(range(len(Xneg)))) and not truncated,
        truncated=truncated,
        n_negative=len(Xneg),
    )


def thl_decompose(model, Xpos, Xneg, tol: float = DEFAULT_TOL) -> DecompositionReport:
    """Split Xneg by second-layer active set into convexly separable pieces.

    Each piece's separator is a single-hidden-layer network over the model's
    first layer, with head ``a_I = sum_{i in I} a_i w_i`` (entrywise >= 0)
    and bias ``c_I = sum_{i in I} a_i b_i + c``.
    """
    model = _as_thl(model)
    Xpos = as_points(Xpos)
    Xneg = as_points(Xneg, dim=Xpos.shape[1])
    _require_separation(model, Xpos, Xneg)
    W1, b1 = model.layer1.W, model.layer1.b
    W2, b2 = model.layer2.W, model.layer2.b
    a, c = model.A[:, 0], float(model.c[0])

    G = relu(Xneg @ W1 + b1)
    subsets, truncated = _group(G @ W2 + b2)
    separators, checks = {}, {}
    for key, members in subsets.items():
        idx = list(key)
        assert idx, "negative point with no active second-layer node"
        sep = ShlSeparator(W1, b1, W2[:, idx] @ a[idx], float(a[idx] @ b2[idx] + c))
        pos_vals = sep(Xpos)
        sub_vals = sep(Xneg[members])
        verdict = is_convexly_separable(Xneg[members], Xpos, tol)
        separators[key] = sep
        checks[key] = SubsetCheck(
            float(pos_vals.min()),
            float(sub_vals.max()),
            bool(np.all(pos_vals > 0) and np.all(sub_vals < 0)),
            verdict.separable,
            verdict.distance,
        )
    covered = sorted(i for m in subsets.values() for i in m)
    return DecompositionReport(
        "thl",
        subsets,
        separators,
        checks,
        coverage_ok=(covered == list(range(len(Xneg)))) and not truncated,
        truncated=truncated,
        n_negative=len(Xneg),
    )


@dataclass
class Leaf:
    neg_members: List[int]
    pos_members: List[int]
    separator: AffineSeparator
    min_neg_margin: float
    max_pos_value: float

    @property
    def verified(self):
        return self.min_neg_margin > 0 and self.max_pos_value < 0

    def to_dict(self):
        return {
            "neg_members": list(self.neg_members),
            "pos_members": list(self.pos_members),
            "separator": self.separator.to_dict(),
            "min_neg_margin": float(self.min_neg_margin),
            "max_pos_value": float(self.max_pos_value),
            "verified": bool(self.verified),
        }


@dataclass
class DrillNode:
    active_set: Optional[ActiveSet]
    neg_members: List[int]
    leaves: List[Leaf] = field(default_factory=list)

    def to_dict(self):
        return {
            "active_set": None if self.active_set is None else list(self.active_set),
            "neg_members": list(self.neg_members),
            "leaves": [leaf.to_dict() for leaf in self.leaves],
        }


@dataclass
class DrillDownReport:
    """Two-level tree: convexly separable negative pieces, then pieces of the
    positive set linearly separable from each of them.

    Every leaf separator is positive on its negative piece and negative on
    its positive piece.
    """

    nodes: List[DrillNode]
    stage1: Optional[DecompositionReport] = None

    @property
    def depth(self):
        return 1 if self.stage1 is None else 2

    @property
    def leaves(self):
        return [leaf for node in self.nodes for leaf in node.leaves]

    @property
    def all_verified(self):
        return all(leaf.verified for leaf in self.leaves) and (
            self.stage1 is None or self.stage1.all_verified
        )

    def to_dict(self):
        return {
            "kind": "drill",
            "depth": self.depth,
            "all_verified": bool(self.all_verified),
            "stage1": None if self.stage1 is None else self.stage1.to_dict(),
            "nodes": [node.to_dict() for node in self.nodes],
        }


def _leaf(sep, neg_pts, pos_pts, neg_members, pos_members):
    return Leaf(
        list(neg_members),
        list(pos_members),
        sep,
        float(sep(neg_pts).min()),
        float(sep(pos_pts).max()),
    )


def _linear_leaf(neg_pts, pos_pts, neg_members, pos_members, tol):
    verdict = is_linearly_separable(neg_pts, pos_pts, tol)
    if not verdict.separable:
        return None
    return _leaf(
        AffineSeparator(verdict.witness_w, verdict.witness_b), neg_pts, pos_pts, neg_members, pos_members
    )


def full_drill_down(Xpos, Xneg, thl_model, tol: float = DEFAULT_TOL) -> DrillDownReport:
    """Hierarchical decomposition into linearly separable (neg piece, pos piece) pairs.

    If the two sets are already linearly separable the tree is a single leaf.
    """
    Xpos = as_points(Xpos)
    Xneg = as_points(Xneg, dim=Xpos.shape[1])
    all_neg = list(range(len(Xneg)))
    all_pos = list(range(len(Xpos)))
    leaf = _linear_leaf(Xneg, Xpos, all_neg, all_pos, tol)
    if leaf is not None:
        _require_separation(_as_thl(thl_model), Xpos, Xneg)
        return DrillDownReport([DrillNode(None, all_neg, [leaf])])

    stage1 = thl_decompose(thl_model, Xpos, Xneg, tol)
    nodes = []
    for key, members in stage1.subsets.items():
        piece = Xneg[members]
        node = DrillNode(key, list(members))
        leaf = _linear_leaf(piece, Xpos, members, all_pos, tol)
        if leaf is not None:
            node.leaves.append(leaf)
        else:
            shl = build_shl_separator(piece, Xpos, tol)
            inner = shl_decompose(shl, piece, Xpos)
            for inner_key, pos_members in inner.subsets.items():
                sep = inner.separators[inner_key]
                node.leaves.append(_leaf(sep, piece, Xpos[pos_members], members, pos_members))
        nodes.append(node)
    return DrillDownReport(nodes, stage1)
