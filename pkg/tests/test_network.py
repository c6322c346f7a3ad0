import json

import numpy as np
import pytest

from scrn import network
from scrn.errors import DimensionMismatch, ParseError, SignConstraintViolated
from scrn.network import CanonicalShl, CanonicalThl, ReluLayer, Scrn1Model, Scrn2Model


def loop_forward_scrn1(W, b, A, c, x):
    """Scalar-loop reference for y = A.T relu(W.T x + b) + c."""
    n, l = W.shape
    m = A.shape[1]
    h = [max(0.0, sum(W[i, j] * x[i] for i in range(n)) + b[j]) for j in range(l)]
    return np.array([sum(A[j, k] * h[j] for j in range(l)) + c[k] for k in range(m)])


def random_scrn1(rng, n=3, l=5, m=2):
    return Scrn1Model(
        ReluLayer(rng.normal(size=(n, l)), rng.normal(size=l)),
        -np.abs(rng.normal(size=(l, m))),
        rng.normal(size=m),
    )


def random_scrn2(rng, n=3, l1=5, l2=4, m=2):
    return Scrn2Model(
        ReluLayer(rng.normal(size=(n, l1)), rng.normal(size=l1)),
        ReluLayer(-np.abs(rng.normal(size=(l1, l2))), rng.normal(size=l2), "nonpositive"),
        -np.abs(rng.normal(size=(l2, m))),
        rng.normal(size=m),
    )


def test_scrn1_matches_loop_reference():
    rng = np.random.default_rng(0)
    model = random_scrn1(rng)
    X = rng.normal(size=(20, 3))
    ref = np.array([loop_forward_scrn1(model.hidden.W, model.hidden.b, model.A, model.c, x) for x in X])
    np.testing.assert_allclose(network.forward_scrn1(model, X), ref, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(network.forward_scrn1(model, X[0]), ref[0], rtol=1e-12, atol=1e-12)


def test_scrn2_composes_layers():
    rng = np.random.default_rng(1)
    model = random_scrn2(rng)
    X = rng.normal(size=(10, 3))
    z1 = np.maximum(0, X @ model.layer1.W + model.layer1.b)
    z2 = np.maximum(0, z1 @ model.layer2.W + model.layer2.b)
    np.testing.assert_allclose(network.forward_scrn2(model, X), z2 @ model.A + model.c)
    np.testing.assert_allclose(model.forward_from_features(model.features(X)), model.forward(X))


def test_sign_constraints_enforced_at_construction():
    with pytest.raises(SignConstraintViolated):
        Scrn1Model(ReluLayer(np.eye(2), np.zeros(2)), np.array([[-1.0], [0.5]]), np.zeros(1))
    with pytest.raises(SignConstraintViolated):
        ReluLayer(np.array([[0.1, -1.0]]), np.zeros(2), "nonpositive")
    with pytest.raises(SignConstraintViolated):
        CanonicalThl(0.0, np.eye(2), np.zeros(2), np.array([[1.0], [0.0]]), np.zeros(1))


def test_check_lists_every_violation():
    model = Scrn1Model(ReluLayer(np.eye(2), np.zeros(2)), np.array([[0.5, -1.0], [2.0, 0.0]]), np.zeros(2), check=False)
    found = network.check_sign_constraints(model)
    assert [(v.row, v.col) for v in found] == [(0, 0), (1, 0)]
    with pytest.raises(SignConstraintViolated):
        network.forward_scrn1(model, [0.0, 0.0])


def test_weights_are_read_only():
    model = random_scrn1(np.random.default_rng(2))
    with pytest.raises(ValueError):
        model.A[0, 0] = 1.0


def test_dimension_checks():
    model = random_scrn1(np.random.default_rng(3))
    with pytest.raises(DimensionMismatch):
        network.forward_scrn1(model, np.zeros(4))
    with pytest.raises(DimensionMismatch):
        Scrn1Model(ReluLayer(np.eye(2), np.zeros(2)), -np.ones((3, 1)), np.zeros(1))


def test_canonical_round_trips():
    rng = np.random.default_rng(4)
    shl = CanonicalShl(0.3, rng.normal(size=(2, 4)), rng.normal(size=4))
    X = rng.normal(size=(15, 2))
    np.testing.assert_allclose(shl.to_scrn1().forward(X)[:, 0], shl.forward(X))
    back = CanonicalShl.from_scrn1(shl.to_scrn1())
    np.testing.assert_allclose(back.forward(X), shl.forward(X))

    # Equal output weights -a rescale into the canonical form exactly.
    s1 = Scrn1Model(ReluLayer(shl.W, shl.b), np.full((4, 1), -2.5), np.array([0.7]))
    np.testing.assert_allclose(CanonicalShl.from_scrn1(s1).forward(X), s1.forward(X)[:, 0], rtol=1e-12)

    thl = CanonicalThl(0.1, rng.normal(size=(2, 5)), rng.normal(size=5), -np.abs(rng.normal(size=(5, 3))), rng.normal(size=3))
    np.testing.assert_allclose(thl.to_scrn2().forward(X)[:, 0], thl.forward(X))
    s2 = Scrn2Model(thl.to_scrn2().layer1, thl.to_scrn2().layer2, np.full((3, 1), -4.0), np.array([0.1]))
    np.testing.assert_allclose(CanonicalThl.from_scrn2(s2).forward(X), s2.forward(X)[:, 0], rtol=1e-12)


def test_predict():
    shl = CanonicalShl(1.0, np.array([[1.0]]), np.array([-1.0]))
    np.testing.assert_array_equal(network.predict(shl, [[0.0], [5.0]]), [1, 0])
    multi = Scrn1Model(ReluLayer(np.eye(2), np.zeros(2)), -np.eye(2), np.array([1.0, 1.0]))
    np.testing.assert_array_equal(network.predict(multi, [[3.0, 0.0], [0.0, 3.0]]), [1, 0])


def test_concavity_probe():
    assert network.concavity_probe(lambda x: -float(x @ x), np.zeros(2), np.ones(2)) == 0.0
    assert network.concavity_probe(lambda x: float(x @ x), -np.ones(2), np.ones(2)) > 0.5
    rng = np.random.default_rng(5)
    model = random_scrn1(rng)
    for _ in range(200):
        x0, x1 = rng.normal(size=(2, 3)) * 3
        assert network.concavity_probe(lambda x: model.forward(x)[0], x0, x1) <= 1e-9


@pytest.mark.parametrize("make", [
    lambda rng: random_scrn1(rng),
    lambda rng: random_scrn2(rng),
    lambda rng: CanonicalShl(0.5, rng.normal(size=(3, 2)), rng.normal(size=2)),
    lambda rng: CanonicalThl(0.5, rng.normal(size=(3, 4)), rng.normal(size=4), -np.abs(rng.normal(size=(4, 2))), rng.normal(size=2)),
])
def test_serialization_round_trip_is_exact(make, tmp_path):
    rng = np.random.default_rng(6)
    model = make(rng)
    X = rng.normal(size=(8, 3))
    back = network.deserialize(network.serialize(model))
    assert type(back) is type(model)
    np.testing.assert_array_equal(back.forward(X), model.forward(X))
    path = tmp_path / "m.json"
    network.save_model(model, path)
    np.testing.assert_array_equal(network.load_model(path).forward(X), model.forward(X))
    assert network.serialize(back) == network.serialize(model)


def test_deserialize_rejects_bad_documents():
    doc = network.to_document(random_scrn1(np.random.default_rng(7)))
    broken = dict(doc)
    del broken["kind"]
    with pytest.raises(ParseError):
        network.from_document(broken)
    with pytest.raises(ParseError):
        network.deserialize("{not json")
    doc["A"] = [[abs(v) + 1 for v in row] for row in doc["A"]]
    with pytest.raises(SignConstraintViolated):
        network.deserialize(json.dumps(doc))
