import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import lp_in_hull, lp_linearly_separable, enum_hull_distance
from scrn import geometry
from scrn.errors import DimensionMismatch, EmptySet

coords = st.floats(-10, 10, allow_nan=False, width=64)


def point_sets(n_max=8, dim=2):
    return st.integers(1, n_max).flatmap(lambda k: arrays(np.float64, (k, dim), elements=coords))


class TestHullDistance:
    def test_unit_square_examples(self):
        S = np.array([[0, 0], [1, 0], [0, 1], [1, 1]], dtype=float)
        d, nearest, lam = geometry.hull_distance([2.0, 0.5], S)
        assert d == pytest.approx(1.0, abs=1e-9)
        np.testing.assert_allclose(nearest, [1.0, 0.5], atol=1e-9)
        assert lam.sum() == pytest.approx(1.0)
        assert np.all(lam >= 0)
        assert geometry.hull_distance([0.5, 0.5], S)[0] <= 1e-9

    def test_corner_and_segment(self):
        d, p, _ = geometry.hull_distance([3.0, 4.0], [[0.0, 0.0]])
        assert d == pytest.approx(5.0)
        d, p, _ = geometry.hull_distance([0.5, 2.0], [[0.0, 0.0], [1.0, 0.0]])
        assert d == pytest.approx(2.0)
        np.testing.assert_allclose(p, [0.5, 0.0], atol=1e-12)

    def test_duplicate_points_are_harmless(self):
        S = np.array([[0, 0], [0, 0], [1, 0], [1, 0], [0, 1]], dtype=float)
        assert geometry.hull_distance([1, 1], S)[0] == pytest.approx(np.sqrt(2) / 2, abs=1e-9)

    @settings(max_examples=150, deadline=None)
    @given(point_sets(), arrays(np.float64, (2,), elements=coords))
    def test_matches_enumeration_oracle(self, S, q):
        d, nearest, lam = geometry.hull_distance(q, S)
        assert d == pytest.approx(enum_hull_distance(q, S), abs=1e-6 * (1 + d))
        assert lam.sum() == pytest.approx(1.0) and np.all(lam >= 0)
        assert np.linalg.norm(q - nearest) == pytest.approx(d, abs=1e-9 * (1 + d))

    @settings(max_examples=100, deadline=None)
    @given(point_sets(dim=3), arrays(np.float64, (3,), elements=coords))
    def test_membership_agrees_with_lp(self, S, q):
        d = geometry.hull_distance(q, S)[0]
        if d > 1e-5:
            assert not lp_in_hull(q, S)
        elif d < 1e-9:
            assert lp_in_hull(q, S) or enum_hull_distance(q, S) < 1e-6

    def test_nearest_point_is_optimal(self):
        # Variational inequality: (q - p) . (s - p) <= 0 for every s in S.
        rng = np.random.default_rng(3)
        for _ in range(50):
            S = rng.normal(size=(7, 4))
            q = rng.normal(size=4) * 3
            d, p, _ = geometry.hull_distance(q, S)
            assert np.max((S - p) @ (q - p)) <= 1e-8

    def test_rejects_bad_input(self):
        with pytest.raises(EmptySet):
            geometry.hull_distance([0.0, 0.0], np.empty((0, 2)))
        with pytest.raises(DimensionMismatch):
            geometry.hull_distance([0.0, 0.0, 0.0], [[1.0, 2.0]])


def test_hulls_distance_two_segments():
    d, pa, pb = geometry.hulls_distance([[0, 0], [0, 1]], [[2, 0], [2, 1]])
    assert d == pytest.approx(2.0)
    assert pb[0] - pa[0] == pytest.approx(2.0)
    assert geometry.hulls_distance([[0, 0], [2, 2]], [[0, 2], [2, 0]])[0] <= 1e-9


class TestVerdicts:
    def test_xor(self):
        A = [[0.0, 0.0], [1.0, 1.0]]
        B = [[0.0, 1.0], [1.0, 0.0]]
        assert not geometry.is_linearly_separable(A, B).separable
        ok, v_ab, v_ba = geometry.is_mutually_convexly_separable(A, B)
        assert ok and v_ab.separable and v_ba.separable

    def test_center_inside_ring(self):
        t = 2 * np.pi * np.arange(8) / 8
        ring = np.column_stack([np.cos(t), np.sin(t)])
        v = geometry.is_convexly_separable(ring, [[0.0, 0.0], [5.0, -3.0]])
        assert not v.separable
        assert v.witness_index == 0
        assert v.distance <= 1e-9
        # The other direction holds: no ring point lies on the segment.
        assert geometry.is_convexly_separable([[0.0, 0.0], [5.0, -3.0]], ring).separable

    def test_diamond_and_center_asymmetry(self):
        diamond = [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]
        center = [[0.0, 0.0]]
        assert not geometry.is_convexly_separable(diamond, center).separable
        assert geometry.is_convexly_separable(center, diamond).separable
        assert (geometry.is_linearly_separable(diamond, center).separable
                == geometry.is_linearly_separable(center, diamond).separable)

    def test_collinear_hull(self):
        A = [[0.0, 0.0], [2.0, 0.0]]
        assert not geometry.is_convexly_separable(A, [[1.0, 0.0]]).separable
        assert geometry.is_convexly_separable(A, [[1.0, 1e-3]]).separable

    def test_tolerance_is_respected(self):
        A = [[0.0, 0.0], [1.0, 0.0]]
        assert not geometry.is_convexly_separable(A, [[0.5, 1e-8]]).separable
        assert geometry.is_convexly_separable(A, [[0.5, 1e-8]], tol=1e-9).separable

    @settings(max_examples=100, deadline=None)
    @given(point_sets(6), point_sets(6))
    def test_linear_matches_lp(self, A, B):
        v = geometry.is_linearly_separable(A, B)
        if v.distance > 1e-5:
            assert lp_linearly_separable(A, B)
        if v.separable:
            assert np.all(A @ v.witness_w + v.witness_b > 0)
            assert np.all(B @ v.witness_w + v.witness_b < 0)
        if not lp_linearly_separable(A, B):
            assert not v.separable

    @settings(max_examples=100, deadline=None)
    @given(point_sets(6), point_sets(6))
    def test_linear_implies_mutual_convex(self, A, B):
        if geometry.is_linearly_separable(A, B).separable:
            assert geometry.is_mutually_convexly_separable(A, B)[0]

    def test_pairwise_matrix(self):
        classes = [np.array([[0.0, 0.0]]), np.array([[5.0, 0.0]]), np.array([[0.0, 5.0], [0.0, 0.0]])]
        M = geometry.pairwise_verdicts(classes, "linear")
        assert M.shape == (3, 3)
        assert M[0, 1] and M[1, 0]
        assert not M[0, 2] and not M[2, 0]
        assert np.array_equal(M, M.T)

    def test_verdict_dict_is_json_ready(self):
        import json

        v = geometry.is_linearly_separable([[0.0, 0.0]], [[1.0, 0.0]])
        doc = json.loads(json.dumps(v.to_dict()))
        assert doc["separable"] is True
        assert doc["distance"] == pytest.approx(1.0)
