import numpy as np
import pytest

from scrn import verify


def test_grid_oracle_on_known_distances():
    S = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    assert verify.simplex_grid_distance([1.0, 1.0], S) == pytest.approx(np.sqrt(2) / 2, abs=1e-4)
    assert verify.simplex_grid_distance([0.2, 0.2], S) == pytest.approx(0.0, abs=1e-4)
    assert verify.simplex_grid_distance([3.0, 4.0], [[0.0, 0.0]]) == 5.0


@pytest.mark.parametrize("suite", ["surrogates", "descent"])
def test_suites_pass(suite):
    results = verify.run_suite(suite, seed=0)
    assert results and all(r.passed for r in results), [r.line() for r in results]


def test_unknown_suite():
    with pytest.raises(KeyError):
        verify.run_suite("nope")


def test_line_format():
    line = verify.PropertyResult("x", False, 1.5).line()
    assert line.startswith("FAIL") and "1.500e+00" in line
