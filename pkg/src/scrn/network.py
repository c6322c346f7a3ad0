"""Sign-constrained rectifier network models.

Weight matrices follow the ``W.T @ x + b`` convention: ``W`` has shape
``(n_in, n_out)`` and column ``k`` is the weight vector of node ``k``.
Forward methods accept a single point ``(n,)`` or a batch ``(N, n)``.
"""

import json
from dataclasses import InitVar, dataclass
from typing import Callable, List, NamedTuple, Union

import numpy as np

from .errors import DimensionMismatch, ParseError, SignConstraintViolated

SCHEMA_VERSION = 1


def relu(z):
    """Elementwise ``max(0, z)``."""
    return np.maximum(0.0, np.asarray(z, dtype=np.float64))


def _frozen(a, ndim, name):
    arr = np.array(a, dtype=np.float64)
    if ndim == 0:
        return float(arr)
    if arr.ndim != ndim:
        raise DimensionMismatch(f"{name} must be {ndim}-D, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


class Violation(NamedTuple):
    layer: str
    row: int
    col: int
    value: float


def _positive_entries(name, M) -> List[Violation]:
    M = np.atleast_2d(M) if np.ndim(M) == 1 else M
    return [Violation(name, int(r), int(c), float(M[r, c])) for r, c in np.argwhere(M > 0)]


@dataclass(eq=False)
class ReluLayer:
    W: np.ndarray
    b: np.ndarray
    sign_constraint: str = "none"
    check: InitVar[bool] = True

    def __post_init__(self, check):
        self.W = _frozen(self.W, 2, "W")
        self.b = _frozen(self.b, 1, "b")
        if self.sign_constraint not in ("none", "nonpositive"):
            raise ValueError(f"unknown sign constraint {self.sign_constraint!r}")
        if self.W.shape[1] != self.b.shape[0]:
            raise DimensionMismatch(f"W has {self.W.shape[1]} columns but b has {self.b.shape[0]} entries")
        if check:
            _raise_on(self.violations("layer"))

    @property
    def n_in(self):
        return self.W.shape[0]

    @property
    def n_out(self):
        return self.W.shape[1]

    def preactivation(self, X):
        return X @ self.W + self.b

    def __call__(self, X):
        return relu(self.preactivation(X))

    def violations(self, name) -> List[Violation]:
        if self.sign_constraint == "nonpositive":
            return _positive_entries(name, self.W)
        return []


def _raise_on(violations):
    if violations:
        v = violations[0]
        raise SignConstraintViolated(
            f"{len(violations)} sign-constraint violation(s); first: {v.layer}[{v.row}, {v.col}] = {v.value!r}"
        )


def _as_input(x, n):
    X = np.asarray(x, dtype=np.float64)
    if X.shape[-1] != n or X.ndim not in (1, 2):
        raise DimensionMismatch(f"input has shape {X.shape}, model expects {n} features")
    return X


@dataclass(eq=False)
class Scrn1Model:
    """``y = A.T @ relu(W.T @ x + b) + c`` with ``A <= 0`` entrywise."""

    hidden: ReluLayer
    A: np.ndarray
    c: np.ndarray
    check: InitVar[bool] = True

    def __post_init__(self, check):
        self.A = _frozen(self.A, 2, "A")
        self.c = _frozen(self.c, 1, "c")
        if self.A.shape != (self.hidden.n_out, self.c.shape[0]):
            raise DimensionMismatch(
                f"A has shape {self.A.shape}, expected ({self.hidden.n_out}, {self.c.shape[0]})"
            )
        if check:
            _raise_on(check_sign_constraints(self))

    @property
    def n_inputs(self):
        return self.hidden.n_in

    @property
    def n_outputs(self):
        return self.A.shape[1]

    def hidden_preactivation(self, X):
        return self.hidden.preactivation(X)

    def forward(self, X):
        return self.hidden(X) @ self.A + self.c


@dataclass(eq=False)
class Scrn2Model:
    """``y = A.T @ relu(W2.T @ relu(W1.T @ x + b1) + b2) + c``; ``W2, A <= 0``."""

    layer1: ReluLayer
    layer2: ReluLayer
    A: np.ndarray
    c: np.ndarray
    check: InitVar[bool] = True

    def __post_init__(self, check):
        self.A = _frozen(self.A, 2, "A")
        self.c = _frozen(self.c, 1, "c")
        if self.layer2.n_in != self.layer1.n_out:
            raise DimensionMismatch("layer2 input size does not match layer1 output size")
        if self.A.shape != (self.layer2.n_out, self.c.shape[0]):
            raise DimensionMismatch(
                f"A has shape {self.A.shape}, expected ({self.layer2.n_out}, {self.c.shape[0]})"
            )
        if check:
            _raise_on(check_sign_constraints(self))

    @property
    def n_inputs(self):
        return self.layer1.n_in

    @property
    def n_outputs(self):
        return self.A.shape[1]

    def features(self, X):
        """First-hidden-layer output ``g(x)``."""
        return self.layer1(X)

    def forward_from_features(self, Z1):
        return self.layer2(Z1) @ self.A + self.c

    def forward(self, X):
        return self.forward_from_features(self.layer1(X))


@dataclass(eq=False)
class CanonicalShl:
    """``f(x) = b0 - sum_k relu(w_k @ x + b_k)``: output weights fixed at -1."""

    b0: float
    W: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.b0 = float(self.b0)
        self.W = _frozen(self.W, 2, "W")
        self.b = _frozen(self.b, 1, "b")
        if self.W.shape[1] != self.b.shape[0]:
            raise DimensionMismatch("W and b disagree on the hidden size")

    @property
    def n_inputs(self):
        return self.W.shape[0]

    @property
    def n_hidden(self):
        return self.W.shape[1]

    def forward(self, X):
        return self.b0 - relu(X @ self.W + self.b).sum(axis=-1)

    def to_scrn1(self) -> Scrn1Model:
        m = self.n_hidden
        return Scrn1Model(ReluLayer(self.W, self.b), -np.ones((m, 1)), np.array([self.b0]))

    @classmethod
    def from_scrn1(cls, model: Scrn1Model, output: int = 0):
        """Rescale a single-output SCRN with equal output weights to canonical form.

        Uses ``-a * relu(z) == -relu(a * z)`` for ``a >= 0``.
        """
        a = -model.A[:, output]
        if not np.allclose(a, a[0], rtol=0, atol=0):
            raise ValueError("canonical form needs identical output weights")
        scale = a[0]
        return cls(model.c[output], model.hidden.W * scale, model.hidden.b * scale)


@dataclass(eq=False)
class CanonicalThl:
    """``f(x) = b0 - sum relu(W2.T @ relu(W1.T @ x + b1) + b2)`` with ``W2 <= 0``."""

    b0: float
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    check: InitVar[bool] = True

    def __post_init__(self, check):
        self.b0 = float(self.b0)
        self.W1 = _frozen(self.W1, 2, "W1")
        self.b1 = _frozen(self.b1, 1, "b1")
        self.W2 = _frozen(self.W2, 2, "W2")
        self.b2 = _frozen(self.b2, 1, "b2")
        if self.W1.shape[1] != self.b1.shape[0] or self.W2.shape != (self.b1.shape[0], self.b2.shape[0]):
            raise DimensionMismatch("inconsistent layer sizes")
        if check:
            _raise_on(_positive_entries("W2", self.W2))

    @property
    def n_inputs(self):
        return self.W1.shape[0]

    @property
    def hidden_sizes(self):
        return self.W1.shape[1], self.W2.shape[1]

    def layer1_preactivation(self, X):
        return X @ self.W1 + self.b1

    def layer2_preactivation(self, X):
        return relu(self.layer1_preactivation(X)) @ self.W2 + self.b2

    def forward(self, X):
        return self.b0 - relu(self.layer2_preactivation(X)).sum(axis=-1)

    def to_scrn2(self) -> Scrn2Model:
        l2 = self.W2.shape[1]
        return Scrn2Model(
            ReluLayer(self.W1, self.b1),
            ReluLayer(self.W2, self.b2, "nonpositive"),
            -np.ones((l2, 1)),
            np.array([self.b0]),
        )

    @classmethod
    def from_scrn2(cls, model: Scrn2Model, output: int = 0):
        a = -model.A[:, output]
        if not np.allclose(a, a[0], rtol=0, atol=0):
            raise ValueError("canonical form needs identical output weights")
        scale = a[0]
        return cls(
            model.c[output],
            model.layer1.W,
            model.layer1.b,
            model.layer2.W * scale,
            model.layer2.b * scale,
        )


Model = Union[Scrn1Model, Scrn2Model, CanonicalShl, CanonicalThl]


def forward_scrn1(model: Scrn1Model, x):
    """Evaluate a single-hidden-layer SCRN at ``x`` (point or batch)."""
    _raise_on(check_sign_constraints(model))
    return model.forward(_as_input(x, model.n_inputs))


def forward_scrn2(model: Scrn2Model, x):
    """Evaluate a two-hidden-layer SCRN at ``x`` (point or batch)."""
    _raise_on(check_sign_constraints(model))
    return model.forward(_as_input(x, model.n_inputs))


def predict(model, X):
    """Class decision: binary models give 1 where the output is > 0, else 0.

    Multi-output models take the argmax, lowest index on ties.
    """
    X = np.asarray(X, dtype=np.float64)
    y = model.forward(X)
    if np.ndim(y) == X.ndim and y.shape[-1] > 1:
        return np.argmax(y, axis=-1)
    return (np.reshape(y, X.shape[:-1]) > 0).astype(int)


def check_sign_constraints(model) -> List[Violation]:
    """List every entry that breaks the model's sign constraints."""
    if isinstance(model, Scrn1Model):
        return _positive_entries("A", model.A)
    if isinstance(model, Scrn2Model):
        out = _positive_entries("W2", model.layer2.W)
        if model.layer2.sign_constraint != "nonpositive":
            out.insert(0, Violation("layer2.sign_constraint", -1, -1, float("nan")))
        return out + _positive_entries("A", model.A)
    if isinstance(model, CanonicalThl):
        return _positive_entries("W2", model.W2)
    if isinstance(model, CanonicalShl):
        return []
    if isinstance(model, ReluLayer):
        return model.violations("W")
    raise TypeError(f"not a model: {type(model).__name__}")


def concavity_probe(f: Callable, x0, x1, samples: int = 11) -> float:
    """Largest concavity violation of scalar ``f`` along the segment [x0, x1].

    Evaluates ``lam*f(x1) + (1-lam)*f(x0) - f(lam*x1 + (1-lam)*x0)`` at
    ``lam = k/(samples+1)``, ``k = 1..samples``, clamped below at 0.  A
    result of 0 (up to rounding) is consistent with concavity on the segment.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    x0 = np.asarray(x0, dtype=np.float64)
    x1 = np.asarray(x1, dtype=np.float64)
    f0 = float(f(x0))
    f1 = float(f(x1))
    worst = -np.inf
    for k in range(1, samples + 1):
        lam = k / (samples + 1)
        gap = lam * f1 + (1 - lam) * f0 - float(f(lam * x1 + (1 - lam) * x0))
        worst = max(worst, gap)
    return max(worst, 0.0)


# -- serialization -----------------------------------------------------------

def _mat(M):
    return [list(map(float, row)) for row in np.asarray(M)]


def _vec(v):
    return list(map(float, np.asarray(v)))


def to_document(model) -> dict:
    """JSON-compatible tree for ``model``; floats survive a round trip exactly."""
    if isinstance(model, Scrn1Model):
        return {
            "schema": SCHEMA_VERSION,
            "kind": "scrn1",
            "dims": {"n": model.n_inputs, "l": model.hidden.n_out, "m": model.n_outputs},
            "W": _mat(model.hidden.W),
            "b": _vec(model.hidden.b),
            "A": _mat(model.A),
            "c": _vec(model.c),
            "sign_constraints": {"W": "none", "A": "nonpositive"},
        }
    if isinstance(model, Scrn2Model):
        return {
            "schema": SCHEMA_VERSION,
            "kind": "scrn2",
            "dims": {
                "n": model.n_inputs,
                "l1": model.layer1.n_out,
                "l2": model.layer2.n_out,
                "m": model.n_outputs,
            },
            "W1": _mat(model.layer1.W),
            "b1": _vec(model.layer1.b),
            "W2": _mat(model.layer2.W),
            "b2": _vec(model.layer2.b),
            "A": _mat(model.A),
            "c": _vec(model.c),
            "sign_constraints": {"W1": "none", "W2": "nonpositive", "A": "nonpositive"},
        }
    if isinstance(model, CanonicalShl):
        return {
            "schema": SCHEMA_VERSION,
            "kind": "canonical_shl",
            "dims": {"n": model.n_inputs, "l": model.n_hidden},
            "b0": model.b0,
            "W": _mat(model.W),
            "b": _vec(model.b),
            "sign_constraints": {"W": "none", "output": "fixed:-1"},
        }
    if isinstance(model, CanonicalThl):
        l1, l2 = model.hidden_sizes
        return {
            "schema": SCHEMA_VERSION,
            "kind": "canonical_thl",
            "dims": {"n": model.n_inputs, "l1": l1, "l2": l2},
            "b0": model.b0,
            "W1": _mat(model.W1),
            "b1": _vec(model.b1),
            "W2": _mat(model.W2),
            "b2": _vec(model.b2),
            "sign_constraints": {"W1": "none", "W2": "nonpositive", "output": "fixed:-1"},
        }
    raise TypeError(f"cannot serialize {type(model).__name__}")


def _get(doc, key):
    try:
        return doc[key]
    except (KeyError, TypeError):
        raise ParseError(f"model document is missing {key!r}") from None


def _load_mat(doc, key, rows, cols):
    arr = np.array(_get(doc, key), dtype=np.float64)
    if rows == 0 or cols == 0:
        arr = arr.reshape(rows, cols)
    if arr.shape != (rows, cols):
        raise ParseError(f"{key!r} has shape {arr.shape}, expected {(rows, cols)}")
    return arr


def _load_vec(doc, key, size):
    arr = np.array(_get(doc, key), dtype=np.float64)
    if arr.shape != (size,):
        raise ParseError(f"{key!r} has shape {arr.shape}, expected {(size,)}")
    return arr


def from_document(doc: dict):
    """Inverse of :func:`to_document`; validates shapes and sign constraints."""
    if not isinstance(doc, dict):
        raise ParseError("model document must be an object")
    if _get(doc, "schema") != SCHEMA_VERSION:
        raise ParseError(f"unsupported schema {doc['schema']!r}")
    kind = _get(doc, "kind")
    dims = _get(doc, "dims")
    try:
        if kind == "scrn1":
            n, l, m = dims["n"], dims["l"], dims["m"]
            return Scrn1Model(
                ReluLayer(_load_mat(doc, "W", n, l), _load_vec(doc, "b", l)),
                _load_mat(doc, "A", l, m),
                _load_vec(doc, "c", m),
            )
        if kind == "scrn2":
            n, l1, l2, m = dims["n"], dims["l1"], dims["l2"], dims["m"]
            return Scrn2Model(
                ReluLayer(_load_mat(doc, "W1", n, l1), _load_vec(doc, "b1", l1)),
                ReluLayer(_load_mat(doc, "W2", l1, l2), _load_vec(doc, "b2", l2), "nonpositive"),
                _load_mat(doc, "A", l2, m),
                _load_vec(doc, "c", m),
            )
        if kind == "canonical_shl":
            n, l = dims["n"], dims["l"]
            return CanonicalShl(
                float(_get(doc, "b0")), _load_mat(doc, "W", n, l), _load_vec(doc, "b", l)
            )
        if kind == "canonical_thl":
            n, l1, l2 = dims["n"], dims["l1"], dims["l2"]
            return CanonicalThl(
                float(_get(doc, "b0")),
                _load_mat(doc, "W1", n, l1),
                _load_vec(doc, "b1", l1),
                _load_mat(doc, "W2", l1, l2),
                _load_vec(doc, "b2", l2),
            )
    except KeyError as exc:
        raise ParseError(f"dims is missing {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, (SignConstraintViolated, ParseError)):
            raise
        raise ParseError(str(exc)) from None
    raise ParseError(f"unknown model kind {kind!r}")


def serialize(model) -> str:
    return json.dumps(to_document(model), indent=1)


def deserialize(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    return from_document(doc)


def save_model(model, path):
    with open(path, "w") as fh:
        fh.write(serialize(model))
        fh.write("\n")


def load_model(path):
    with open(path) as fh:
        return deserialize(fh.read())
