import numpy as np
import pytest

from hdbo.testbed import FUNCTION_NAMES, Group, evaluate, evaluate_batch, group_of, make_problem, target_gap

DIMS = (2, 10, 20, 40, 60)


@pytest.mark.parametrize("dim", DIMS)
def test_optimum_attains_f_opt(dim):
    for fid in range(1, 25):
        for inst in range(3):
            p = make_problem(fid, dim, inst)
            gap = evaluate(p, p.x_opt) - p.f_opt
            assert abs(gap) <= 1e-9 * max(1.0, abs(p.f_opt)), (fid, dim, inst, gap)


@pytest.mark.parametrize("fid", range(1, 25))
def test_never_below_f_opt(fid):
    rng = np.random.default_rng(fid)
    p = make_problem(fid, 10, 1)
    X = rng.uniform(-5, 5, size=(500, 10))
    near = p.x_opt + rng.normal(scale=1e-3, size=(200, 10))
    y = evaluate_batch(p, np.vstack([X, near]))
    assert np.all(y - p.f_opt >= -1e-9 * max(1.0, abs(p.f_opt)))


def test_determinism():
    a, b = make_problem(1, 10, 0), make_problem(1, 10, 0)
    np.testing.assert_array_equal(a.x_opt, b.x_opt)
    assert a.f_opt == b.f_opt
    c = make_problem(1, 10, 1)
    assert not np.array_equal(a.x_opt, c.x_opt)


def test_sphere_unit_step():
    p = make_problem(1, 10, 0)
    x = p.x_opt.copy()
    x[0] += 1.0
    y = evaluate(p, x)
    assert y == pytest.approx(p.f_opt + 1.0, abs=1e-12)
    assert target_gap(p, y) == pytest.approx(1.0, abs=1e-12)


def test_linear_slope_boundary_optimum():
    p = make_problem(5, 10, 2)
    np.testing.assert_array_equal(np.abs(p.x_opt), 5.0)
    x = np.random.default_rng(0).uniform(-4.9, 4.9, size=10)
    assert evaluate(p, x) > p.f_opt


def test_groups():
    assert group_of(3) is Group.Separable
    assert make_problem(21, 7, 2).group is Group.MultimodalWeakStructure
    sizes = [sum(group_of(f) is g for f in range(1, 25)) for g in Group]
    assert sizes == [5, 4, 5, 5, 5]
    assert len(FUNCTION_NAMES) == 24


def test_target_gap():
    p = make_problem(8, 3, 0)
    assert target_gap(p, p.f_opt) == 0.0
    assert target_gap(p, p.f_opt + 3.5) == pytest.approx(3.5)


def test_random_search_never_beats_optimum():
    p = make_problem(1, 20, 0)
    y = evaluate_batch(p, np.random.default_rng(3).uniform(-5, 5, size=(200, 20)))
    assert y.min() > p.f_opt


def test_clamping():
    p = make_problem(1, 2, 0)
    assert evaluate(p, [7.0, -9.0]) == evaluate(p, [5.0, -5.0])


@pytest.mark.parametrize("args", [(0, 2, 0), (25, 2, 0), (1, 1, 0), (1, 2, -1)])
def test_invalid_arguments(args):
    with pytest.raises(ValueError):
        make_problem(*args)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        evaluate(make_problem(1, 3, 0), np.zeros(4))


def test_rotations_orthogonal():
    p = make_problem(10, 12, 1)
    np.testing.assert_allclose(p.R @ p.R.T, np.eye(12), atol=1e-12)
    np.testing.assert_allclose(p.Q @ p.Q.T, np.eye(12), atol=1e-12)
