import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hdbo.doe import latin_hypercube, low_discrepancy_sequence


def strata(points, lo, hi):
    n = len(points)
    return np.floor((points - lo) / (hi - lo) * n).astype(int)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 60), dim=st.integers(1, 8), seed=st.integers(0, 2**31 - 2))
def test_lhs_one_point_per_stratum(n, dim, seed):
    d = latin_hypercube(n, dim, (-5.0, 5.0), seed)
    assert d.points.shape == (n, dim)
    assert np.all((d.points >= -5) & (d.points <= 5))
    s = strata(d.points, -5.0, 5.0)
    for j in range(dim):
        assert sorted(s[:, j]) == list(range(n))


def test_lhs_single_point():
    d = latin_hypercube(1, 3, (-5, 5), 0)
    assert d.points.shape == (1, 3)
    assert np.all(np.abs(d.points) <= 5)


def test_lhs_quartiles():
    pts = np.sort(latin_hypercube(4, 1, (0.0, 1.0), 11).points[:, 0])
    np.testing.assert_array_equal(np.floor(pts * 4), [0, 1, 2, 3])


def test_lhs_deterministic():
    a = latin_hypercube(10, 4, (-5, 5), 7).points
    np.testing.assert_array_equal(a, latin_hypercube(10, 4, (-5, 5), 7).points)


def test_lhs_rejects_zero():
    with pytest.raises(ValueError):
        latin_hypercube(0, 2)


def test_sobol_basic():
    p = low_discrepancy_sequence(2, 1, 0)
    assert p.shape == (2, 1) and p[0, 0] != p[1, 0]
    assert np.all((p >= 0) & (p <= 1))
    np.testing.assert_array_equal(low_discrepancy_sequence(50, 3, 4), low_discrepancy_sequence(50, 3, 4))


def test_sobol_quadrants():
    p = low_discrepancy_sequence(128, 2, 5)
    counts = np.bincount((p[:, 0] > 0.5) * 2 + (p[:, 1] > 0.5), minlength=4)
    assert np.all(np.abs(counts - 32) <= 16)


def test_sobol_more_uniform_than_random():
    from scipy.stats import qmc

    rng = np.random.default_rng(0)
    sob = np.mean([qmc.discrepancy(low_discrepancy_sequence(128, 3, s)) for s in range(10)])
    uni = np.mean([qmc.discrepancy(rng.random((128, 3))) for _ in range(10)])
    assert sob < uni
