import numpy as np
import pytest

from cblab.critical import (SADDLE, STABLE, UNSTABLE, canonical_sort, classify, detect_birth_death,
                            find_critical_points, match_points)
from cblab.errors import DegeneratePoint, NotAFold

from conftest import DUAL_FOLD, FOLD, QUADRATIC, UMBILIC
from test_acceptance import umbilic_count_oracle


def _kinds(pts):
    return sorted((round(p.y[0], 9), round(p.y[1], 9), p.kind, p.mu) for p in pts)


def test_fold_right_of_caustic():
    got = _kinds(find_critical_points(FOLD, (0.75, 0)))
    assert got == [(-0.5, 0.0, SADDLE, 1), (0.5, 0.0, UNSTABLE, 2)]


def test_fold_left_of_caustic_is_empty():
    assert find_critical_points(FOLD, (-0.75, 0)) == []


def test_quadratic_has_one_source():
    (p,) = find_critical_points(QUADRATIC, (0.3, 0.7))
    assert p.kind == UNSTABLE and np.allclose(p.y, (0.3, 0.7))


@pytest.mark.parametrize("x,n", [((0, 0.01), 4), ((5, 0.01), 2), ((0.1, -0.05), 4), ((-1.5, 1.2), 2)])
def test_umbilic_counts_match_the_quartic(x, n):
    assert len(find_critical_points(UMBILIC, x)) == n == umbilic_count_oracle(*x)


def test_umbilic_on_the_symmetry_axis():
    # x2 = 0 degenerates the elimination, so these are the spec's probe points counted directly
    assert len(find_critical_points(UMBILIC, (0, 0))) == 4
    assert len(find_critical_points(UMBILIC, (5, 0))) == 2


def test_fold_point_is_degenerate():
    with pytest.raises(DegeneratePoint):
        find_critical_points(FOLD, (0, 0))


def test_birth_death_pairs():
    p = detect_birth_death(FOLD, (0, 0), (1, 0))
    assert (p.node.kind, p.saddle.kind, p.side) == (UNSTABLE, SADDLE, 1)
    p = detect_birth_death(DUAL_FOLD, (0, 0), (1, 0))
    assert (p.saddle.kind, p.node.kind, p.side) == (SADDLE, STABLE, 1)
    # flipping the normal flips the side, not the pair
    p = detect_birth_death(FOLD, (0, 0), (-1, 0))
    assert p.side == -1


def test_no_fold_without_caustic():
    with pytest.raises(NotAFold):
        detect_birth_death(QUADRATIC, (0, 0), (1, 0))


def test_roots_stable_under_grid_doubling():
    rng = np.random.default_rng(3)
    for _ in range(30):
        x = rng.uniform(-2, 2, size=2)
        a = find_critical_points(UMBILIC, x, grid_n=16)
        b = find_critical_points(UMBILIC, x, grid_n=32)
        assert len(a) == len(b)
        m = match_points(a, b)
        assert len(m) == len(a)
        assert all(np.allclose(p.y, next(q.y for q in b if q.id == m[p.id]), atol=1e-9) for p in a)


def test_classification_by_hessian_signature():
    assert classify(QUADRATIC, (1, 2)).kind == UNSTABLE
    assert classify(DUAL_FOLD, (0.5, 0)).kind == SADDLE
    assert classify(DUAL_FOLD, (-0.5, 0)).kind == STABLE


def test_canonical_ids_follow_position():
    pts = canonical_sort(find_critical_points(UMBILIC, (0.05, 0.02)))
    assert [p.id for p in pts] == list(range(4))
    assert [p.y for p in pts] == sorted(p.y for p in pts)
