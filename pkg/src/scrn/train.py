"""MM training of canonical sign-constrained rectifier networks.

Both trainers minimise ``J = R + J+ + J-`` with hinge losses
``J+ = sum_pos max(0, 1 - f)`` and ``J- = sum_neg max(0, 1 + f)`` and
``R = lambda * (sum of squared weight-matrix entries)``.

Single hidden layer: ``f`` is concave in the parameters, so ``J+`` is
convex; ``J-`` is majorized by freezing each negative point's active set
at the anchor, which makes ``f`` affine in the parameters.

Two hidden layers: the output layer ``(b0, W2, b2)`` is an SHL problem
over the frozen features ``relu(W1.T x + b1)`` (with ``W2 <= 0`` enforced by
clamping); the first layer ``(W1, b1)`` is updated through the lower bound
``f1`` (positives) and the upper bound ``f2`` (negatives), each built from
activation patterns frozen at the anchor.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .construct import build_shl_separator, build_thl_separator
from .decompose import active_set_of
from .errors import ConfigError, DimensionMismatch, EmptyClass, SignConstraintViolated
from .geometry import as_points
from .mm import MMConfig, MMTrace, clamp_projection, ConvexSurrogate, mm_minimize
from .network import CanonicalShl, CanonicalThl, relu

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    lambda_reg: float = 1e-6
    hidden: Tuple[int, ...] = (2,)
    max_outer: int = 100
    inner_budget: int = 2000
    ftol: float = 1e-8
    init: str = "random"
    seed: int = 0
    warm_model: Optional[object] = None
    restarts: int = 10

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in np.atleast_1d(self.hidden))
        if self.lambda_reg < 0:
            raise ConfigError("lambda_reg must be nonnegative")
        if any(h < 1 for h in self.hidden):
            raise ConfigError(f"hidden sizes must be >= 1, got {self.hidden}")
        if self.init not in ("random", "constructive", "warm"):
            raise ConfigError(f"unknown init {self.init!r}")
        if self.init == "warm" and self.warm_model is None:
            raise ConfigError("init='warm' needs warm_model")
        if self.restarts < 1:
            raise ConfigError("restarts must be >= 1")
        if self.max_outer < 1 or self.inner_budget < 0:
            raise ConfigError("max_outer must be >= 1 and inner_budget >= 0")

    def mm_config(self, max_outer=None):
        return MMConfig(
            ftol=self.ftol,
            max_outer=self.max_outer if max_outer is None else max_outer,
            inner_budget=self.inner_budget,
        )


@dataclass
class LossReport:
    J_pos: float
    J_neg: float
    R: float
    total: float
    accuracy: float
    margins_pos: np.ndarray = field(repr=False)
    margins_neg: np.ndarray = field(repr=False)

    def to_dict(self):
        return {
            "J_pos": self.J_pos,
            "J_neg": self.J_neg,
            "R": self.R,
            "total": self.total,
            "accuracy": self.accuracy,
            "margins_pos": [float(v) for v in self.margins_pos],
            "margins_neg": [float(v) for v in self.margins_neg],
        }


def _weights(model):
    if isinstance(model, CanonicalShl):
        return [model.W]
    if isinstance(model, CanonicalThl):
        return [model.W1, model.W2]
    raise TypeError(f"expected a canonical model, got {type(model).__name__}")


def hinge_objective(model, Xpos, Xneg, lambda_reg: float = 0.0) -> LossReport:
    """Exact ``J+``, ``J-``, ``R`` and total for a canonical model."""
    Xpos = as_points(Xpos)
    Xneg = as_points(Xneg, dim=Xpos.shape[1])
    if Xpos.shape[1] != model.n_inputs:
        raise DimensionMismatch(f"data has {Xpos.shape[1]} features, model expects {model.n_inputs}")
    fpos = model.forward(Xpos)
    fneg = model.forward(Xneg)
    J_pos = float(np.maximum(0.0, 1.0 - fpos).sum())
    J_neg = float(np.maximum(0.0, 1.0 + fneg).sum())
    R = float(lambda_reg * sum(np.sum(W * W) for W in _weights(model)))
    correct = np.count_nonzero(fpos > 0) + np.count_nonzero(fneg <= 0)
    return LossReport(
        J_pos, J_neg, R, J_pos + J_neg + R, correct / (len(Xpos) + len(Xneg)), fpos, -fneg
    )


def active_set(params, x):
    """Hidden nodes with strictly positive pre-activation at ``x``.

    ``params`` is a :class:`CanonicalShl` or a ``(W, b)`` pair.
    """
    W, b = (params.W, params.b) if isinstance(params, CanonicalShl) else params
    return active_set_of(np.asarray(x, dtype=np.float64) @ np.asarray(W) + np.asarray(b))


# -- single hidden layer -----------------------------------------------------

class ShlProblem:
    """Canonical SHL hinge problem over fixed input features.

    Parameters are packed as ``[b0, W.ravel(), b]``.  ``const`` is added to
    every objective and surrogate value (used for the frozen part of the
    regulariser in two-layer training).
    """

    def __init__(self, Fpos, Fneg, lambda_reg, n_hidden, nonpositive_W=False, const=0.0):
        self.Fpos = np.asarray(Fpos, dtype=np.float64)
        self.Fneg = np.asarray(Fneg, dtype=np.float64)
        self.lam = float(lambda_reg)
        self.n = self.Fpos.shape[1]
        self.m = int(n_hidden)
        self.nonpositive_W = nonpositive_W
        self.const = float(const)

    @property
    def size(self):
        return 1 + self.n * self.m + self.m

    def pack(self, b0, W, b):
        return np.concatenate([[b0], np.ravel(W), b])

    def unpack(self, theta):
        nm = self.n * self.m
        return theta[0], theta[1 : 1 + nm].reshape(self.n, self.m), theta[1 + nm :]

    def projection(self):
        if not self.nonpositive_W:
            return None
        mask = np.zeros(self.size, dtype=bool)
        mask[1 : 1 + self.n * self.m] = True
        return clamp_projection(mask)

    def objective(self, theta):
        b0, W, b = self.unpack(theta)
        fpos = b0 - relu(self.Fpos @ W + b).sum(axis=1)
        fneg = b0 - relu(self.Fneg @ W + b).sum(axis=1)
        return (
            self.const
            + self.lam * np.sum(W * W)
            + np.maximum(0.0, 1.0 - fpos).sum()
            + np.maximum(0.0, 1.0 + fneg).sum()
        )

    def surrogate_neg(self, theta, anchor):
        """``J-hat``: negative hinge with active sets frozen at ``anchor``."""
        b0, W, b = self.unpack(theta)
        _, W0, b0v = self.unpack(anchor)
        K = (self.Fneg @ W0 + b0v) > 0
        fhat = b0 - ((self.Fneg @ W + b) * K).sum(axis=1)
        return float(np.maximum(0.0, 1.0 + fhat).sum())

    def surrogate(self, anchor) -> ConvexSurrogate:
        _, W0, b0v = self.unpack(np.asarray(anchor, dtype=np.float64))
        K = ((self.Fneg @ W0 + b0v) > 0).astype(np.float64)
        Fpos, Fneg, lam = self.Fpos, self.Fneg, self.lam

        def value_and_subgradient(theta):
            b0, W, b = self.unpack(theta)
            Ppos = Fpos @ W + b
            Apos = (Ppos > 0).astype(np.float64)
            hp = 1.0 - b0 + (Ppos * Apos).sum(axis=1)
            mp = (hp > 0).astype(np.float64)
            hn = 1.0 + b0 - ((Fneg @ W + b) * K).sum(axis=1)
            mn = (hn > 0).astype(np.float64)
            value = self.const + lam * np.sum(W * W) + np.sum(hp * mp) + np.sum(hn * mn)
            Gp = Apos * mp[:, None]
            Gn = K * mn[:, None]
            gW = Fpos.T @ Gp - Fneg.T @ Gn + 2.0 * lam * W
            gb = Gp.sum(axis=0) - Gn.sum(axis=0)
            gb0 = mn.sum() - mp.sum()
            return float(value), self.pack(gb0, gW, gb)

        return ConvexSurrogate(value_and_subgradient)


def shl_surrogate(anchor: CanonicalShl, Xpos, Xneg, lambda_reg: float = 1e-6):
    """Surrogate oracle for the SHL hinge objective at ``anchor``.

    Returns ``(problem, surrogate)``; ``problem.objective`` is the exact
    objective over the same packed parameter vector.
    """
    prob = ShlProblem(Xpos, Xneg, lambda_reg, anchor.n_hidden)
    return prob, prob.surrogate(prob.pack(anchor.b0, anchor.W, anchor.b))


def _check_binary(Xpos, Xneg):
    try:
        Xpos = as_points(Xpos)
    except Exception as exc:
        raise EmptyClass("positive set is empty") from exc
    try:
        Xneg = as_points(Xneg, dim=Xpos.shape[1])
    except DimensionMismatch:
        raise
    except Exception as exc:
        raise EmptyClass("negative set is empty") from exc
    return Xpos, Xneg


def _uniform(rng, shape, fan_in):
    return rng.uniform(-0.5, 0.5, size=shape) / np.sqrt(fan_in)


def init_shl(Xpos, Xneg, config: TrainConfig, rng=None) -> CanonicalShl:
    n = Xpos.shape[1]
    if config.init == "warm":
        if not isinstance(config.warm_model, CanonicalShl):
            raise ConfigError("warm start for SHL training needs a CanonicalShl")
        return config.warm_model
    if config.init == "constructive":
        return CanonicalShl.from_scrn1(build_shl_separator(Xpos, Xneg))
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    m = config.hidden[0]
    return CanonicalShl(0.0, _uniform(rng, (n, m), n), np.zeros(m))


def train_shl(Xpos, Xneg, config: TrainConfig = None):
    """MM training of ``f(x) = b0 - sum relu(W.T x + b)``.

    Returns ``(model, trace)``.  With ``init='constructive'`` the hidden size
    is one node per negative point, regardless of ``config.hidden``.

    Random initialisation runs ``config.restarts`` MM descents from
    successive draws of one seeded generator and keeps the run with the
    lowest final objective, stopping early at a run with zero hinge loss.
    A negative point with no active node at the
    anchor keeps that empty active set under the surrogate, so single runs
    stall in such states.
    """
    config = config or TrainConfig()
    Xpos, Xneg = _check_binary(Xpos, Xneg)
    rng = np.random.default_rng(config.seed)
    runs = config.restarts if config.init == "random" else 1
    best = None
    spent = 0
    for r in range(runs):
        model = init_shl(Xpos, Xneg, config, rng)
        prob = ShlProblem(Xpos, Xneg, config.lambda_reg, model.n_hidden)
        theta, trace = mm_minimize(
            prob.objective,
            prob.surrogate,
            prob.pack(model.b0, model.W, model.b),
            config.mm_config(),
            step="shl",
        )
        final = trace.iterations[-1].objective
        spent += trace.outer_total
        log.debug("restart %d: objective %.6g after %d steps", r, final, len(trace.iterations) - 1)
        if best is None or final < best[0]:
            best = (final, prob.unpack(theta), trace)
        _, W, _ = prob.unpack(theta)
        if final - prob.lam * np.sum(W * W) <= 0.0:
            break
    _, (b0, W, b), trace = best
    trace.outer_total = spent
    return CanonicalShl(b0, W, b), trace


# -- two hidden layers -------------------------------------------------------

def thl_bounds(params: CanonicalThl, x, a1, a2):
    """Lower/upper bounds ``(f1, f2)`` on ``f(x)`` for activation patterns ``a1``, ``a2``.

    ``f1 = b0 - sum relu(W2.T (a1 * z1) + b2)`` and
    ``f2 = b0 - a2 @ (W2.T relu(z1) + b2)`` with ``z1 = W1.T x + b1``.
    Patterns are 0/1 vectors (or boolean masks) of length l1 and l2.
    ``f1 <= f <= f2`` whenever ``W2 <= 0``.
    """
    if np.any(params.W2 > 0):
        raise SignConstraintViolated("W2 has a positive entry")
    l1, l2 = params.hidden_sizes
    a1 = _as_mask(a1, l1)
    a2 = _as_mask(a2, l2)
    z1 = np.asarray(x, dtype=np.float64) @ params.W1 + params.b1
    f1 = params.b0 - relu((a1 * z1) @ params.W2 + params.b2).sum(axis=-1)
    f2 = params.b0 - (relu(z1) @ params.W2 + params.b2) @ a2
    return f1, f2


def _as_mask(a, size):
    """Accept a 0/1 (or boolean) vector of length ``size`` or a tuple of indices."""
    if isinstance(a, tuple):
        out = np.zeros(size)
        out[list(a)] = 1.0
        return out
    arr = np.asarray(a, dtype=np.float64)
    if arr.shape[-1] != size:
        raise DimensionMismatch(f"activation pattern has length {arr.shape[-1]}, expected {size}")
    return arr


class FirstLayerProblem:
    """``(W1, b1)`` subproblem of two-layer training with ``(b0, W2, b2)`` fixed.

    Parameters are packed as ``[W1.ravel(), b1]``.
    """

    def __init__(self, model: CanonicalThl, Xpos, Xneg, lambda_reg):
        self.b0, self.W2, self.b2 = model.b0, np.asarray(model.W2), np.asarray(model.b2)
        self.Xpos, self.Xneg = Xpos, Xneg
        self.lam = float(lambda_reg)
        self.n = Xpos.shape[1]
        self.l1, self.l2 = model.hidden_sizes
        self.R2 = self.lam * float(np.sum(self.W2 * self.W2))

    def pack(self, W1, b1):
        return np.concatenate([np.ravel(W1), b1])

    def unpack(self, theta):
        k = self.n * self.l1
        return theta[:k].reshape(self.n, self.l1), theta[k:]

    def model(self, theta):
        W1, b1 = self.unpack(theta)
        return CanonicalThl(self.b0, W1, b1, self.W2, self.b2)

    def objective(self, theta):
        W1, b1 = self.unpack(theta)
        m = CanonicalThl(self.b0, W1, b1, self.W2, self.b2, check=False)
        fpos = m.forward(self.Xpos)
        fneg = m.forward(self.Xneg)
        return (
            self.lam * np.sum(W1 * W1)
            + self.R2
            + np.maximum(0.0, 1.0 - fpos).sum()
            + np.maximum(0.0, 1.0 + fneg).sum()
        )

    def patterns(self, anchor):
        W1, b1 = self.unpack(anchor)
        a1 = ((self.Xpos @ W1 + b1) > 0).astype(np.float64)
        z2 = relu(self.Xneg @ W1 + b1) @ self.W2 + self.b2
        a2 = (z2 > 0).astype(np.float64)
        return a1, a2

    def surrogate(self, anchor) -> ConvexSurrogate:
        a1, a2 = self.patterns(np.asarray(anchor, dtype=np.float64))
        Xpos, Xneg, W2, b2, b0, lam = self.Xpos, self.Xneg, self.W2, self.b2, self.b0, self.lam
        # Negative side: f2 = b0 - a2 @ b2 + relu(z1) @ head, head = -W2 @ a2 >= 0.
        head = -(a2 @ W2.T)
        offset = b0 - a2 @ b2

        def value_and_subgradient(theta):
            W1, b1 = self.unpack(theta)
            Z1p = Xpos @ W1 + b1
            Zh2 = (Z1p * a1) @ W2 + b2
            act2 = (Zh2 > 0).astype(np.float64)
            hp = 1.0 - b0 + (Zh2 * act2).sum(axis=1)
            mp = (hp > 0).astype(np.float64)
            Gp = (act2 @ W2.T) * a1 * mp[:, None]

            Z1n = Xneg @ W1 + b1
            act1 = (Z1n > 0).astype(np.float64)
            hn = 1.0 + offset + ((Z1n * act1) * head).sum(axis=1)
            mn = (hn > 0).astype(np.float64)
            Gn = head * act1 * mn[:, None]

            value = lam * np.sum(W1 * W1) + self.R2 + np.sum(hp * mp) + np.sum(hn * mn)
            G = np.vstack([Gp, Gn])
            X = np.vstack([Xpos, Xneg])
            gW1 = X.T @ G + 2.0 * lam * W1
            gb1 = G.sum(axis=0)
            return float(value), self.pack(gW1, gb1)

        return ConvexSurrogate(value_and_subgradient)


def init_thl(Xpos, Xneg, config: TrainConfig) -> CanonicalThl:
    n = Xpos.shape[1]
    if config.init == "warm":
        if not isinstance(config.warm_model, CanonicalThl):
            raise ConfigError("warm start for THL training needs a CanonicalThl")
        return config.warm_model
    if config.init == "constructive":
        return CanonicalThl.from_scrn2(build_thl_separator(Xpos, Xneg))
    l1, l2 = config.hidden
    rng = np.random.default_rng(config.seed)
    W1 = _uniform(rng, (n, l1), n)
    W2 = -np.abs(_uniform(rng, (l1, l2), l1))
    return CanonicalThl(0.0, W1, np.zeros(l1), W2, np.zeros(l2))


def _second_layer_step(model, Xpos, Xneg, config):
    Zpos = relu(Xpos @ model.W1 + model.b1)
    Zneg = relu(Xneg @ model.W1 + model.b1)
    l2 = model.W2.shape[1]
    prob = ShlProblem(
        Zpos, Zneg, config.lambda_reg, l2, nonpositive_W=True,
        const=config.lambda_reg * float(np.sum(model.W1 * model.W1)),
    )
    theta, trace = mm_minimize(
        prob.objective, prob.surrogate, prob.pack(model.b0, model.W2, model.b2),
        config.mm_config(max_outer=1), projection=prob.projection(), step="layer2",
    )
    b0, W2, b2 = prob.unpack(theta)
    return CanonicalThl(b0, model.W1, model.b1, W2, b2), trace


def _first_layer_step(model, Xpos, Xneg, config):
    prob = FirstLayerProblem(model, Xpos, Xneg, config.lambda_reg)
    theta, trace = mm_minimize(
        prob.objective, prob.surrogate, prob.pack(model.W1, model.b1),
        config.mm_config(max_outer=1), step="layer1",
    )
    return prob.model(theta), trace


def train_thl(Xpos, Xneg, config: TrainConfig = None):
    """Alternating MM training of a canonical two-hidden-layer SCRN.

    Each round runs one MM iteration on ``(b0, W2, b2)`` and then one on
    ``(W1, b1)``.  Returns ``(model, trace)``; the trace holds the global
    objective after every step of either type.
    """
    config = config or TrainConfig(hidden=(12, 4))
    if config.init == "random" and len(config.hidden) != 2:
        raise ConfigError(f"two-layer training needs two hidden sizes, got {config.hidden}")
    Xpos, Xneg = _check_binary(Xpos, Xneg)
    model = init_thl(Xpos, Xneg, config)

    trace = None
    for _ in range(config.max_outer):
        model, ta = _second_layer_step(model, Xpos, Xneg, config)
        model, tb = _first_layer_step(model, Xpos, Xneg, config)
        if trace is None:
            trace = MMTrace(list(ta.iterations), outer_total=ta.outer_total)
        else:
            trace.extend(ta)
        trace.extend(tb)
        start = trace.iterations[-3].objective
        if abs(trace.iterations[-1].objective - start) < config.ftol:
            trace.converged = True
            trace.stop_reason = "ftol"
            break
    else:
        trace.stop_reason = "max_outer"
    return model, trace


# -- one-vs-rest -------------------------------------------------------------

@dataclass
class OneVsRest:
    """Per-class binary models; prediction is the argmax of their outputs."""

    models: list

    def __iter__(self):
        return iter(self.models)

    def __len__(self):
        return len(self.models)

    def scores(self, X):
        X = np.asarray(X, dtype=np.float64)
        return np.stack([m.forward(X) for m in self.models], axis=-1)

    def predict(self, X):
        return np.argmax(self.scores(X), axis=-1)


def multiclass_train(classes: Sequence, config: TrainConfig = None, arch: str = "shl"):
    """Train class-k-vs-rest binary models for every class k."""
    if len(classes) < 2:
        raise ConfigError("need at least two classes")
    trainer = {"shl": train_shl, "thl": train_thl}[arch]
    sets = [as_points(c) for c in classes]
    models, traces = [], []
    for k in range(len(sets)):
        rest = np.vstack([s for j, s in enumerate(sets) if j != k])
        model, trace = trainer(sets[k], rest, config)
        models.append(model)
        traces.append(trace)
    return OneVsRest(models), traces
