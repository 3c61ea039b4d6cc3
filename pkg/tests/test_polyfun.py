from fractions import Fraction

import numpy as np
import pytest

from cblab.errors import Degenerate, NoConvergence
from cblab.polyfun import GeneratingFunction, eval_family, gradient, hessian, legendre_sheet

from conftest import FOLD, QUADRATIC, UMBILIC

CUBE = GeneratingFunction({(3, 0): 1})


def test_family_values():
    assert eval_family(CUBE, (0, 0), (2, 5)) == 8
    assert eval_family(CUBE, (1, 1), (1, 1)) == -1
    assert eval_family(QUADRATIC, (3, 4), (3, 4)) == pytest.approx(-12.5)


def test_derivatives_of_the_normal_forms():
    assert np.allclose(gradient(CUBE, (1, 0)), [3, 0])
    assert np.allclose(hessian(CUBE, (1, 0)), [[6, 0], [0, 0]])
    a, b = 0.7, -1.3
    assert np.allclose(gradient(FOLD, (a, b)), [3 * a * a, 2 * b])
    assert np.allclose(hessian(FOLD, (a, b)), [[6 * a, 0], [0, 2]])
    assert np.allclose(hessian(QUADRATIC, (0.3, -8)), np.eye(2))


def test_coefficients_stay_exact():
    f = GeneratingFunction.from_literal([[2, 0, 1, 3], [0, 1, -2, 6]])
    assert f.terms == {(2, 0): Fraction(1, 3), (0, 1): Fraction(-1, 3)}
    assert GeneratingFunction.from_literal(f.to_literal()) == f


def _random_poly(rng):
    terms = {}
    for _ in range(rng.integers(1, 7)):
        i, j = rng.integers(0, 5, size=2)
        if i + j:
            terms[(int(i), int(j))] = Fraction(int(rng.integers(-8, 9)), 4)  # coefficients in [-2, 2]
    terms[(2, 1)] = Fraction(int(rng.integers(1, 9)), 4)  # keeps the degree >= 2
    return GeneratingFunction(terms)


def test_derivatives_against_finite_differences():
    rng = np.random.default_rng(11)
    h = 1e-5
    for _ in range(100):
        f = _random_poly(rng)
        y = rng.uniform(-1.5, 1.5, size=2)
        x = rng.uniform(-1, 1, size=2)
        e = np.eye(2) * h
        fd_grad = [(eval_family(f, (0, 0), y + e[k]) - eval_family(f, (0, 0), y - e[k])) / (2 * h) for k in range(2)]
        fd_hess = np.column_stack([(gradient(f, y + e[k]) - gradient(f, y - e[k])) / (2 * h) for k in range(2)])
        assert np.allclose(gradient(f, y), fd_grad, rtol=1e-6, atol=1e-6)
        assert np.allclose(hessian(f, y), fd_hess, rtol=1e-6, atol=1e-6)
        assert np.allclose(hessian(f, y), hessian(f, y).T)
        # the family only shifts the gradient
        assert eval_family(f, x, y) == pytest.approx(eval_family(f, (0, 0), y) - x @ y)


def test_legendre_examples():
    sh = legendre_sheet(QUADRATIC, (3, 4), (0, 0))
    assert np.allclose(sh.y, (3, 4)) and sh.h == pytest.approx(12.5)
    sh = legendre_sheet(FOLD, (0.75, 0), (0.4, 0.1))
    assert np.allclose(sh.y, (0.5, 0)) and sh.h == pytest.approx(0.25)


def test_no_real_sheet_left_of_the_fold():
    with pytest.raises(NoConvergence):
        legendre_sheet(FOLD, (-1, 0), (0.3, 0.2))


def test_sheet_refuses_the_caustic():
    # a double root: Newton creeps onto the fold, where the Hessian is singular
    with pytest.raises(Degenerate):
        legendre_sheet(FOLD, (0, 0), (1e-3, 0))


@pytest.mark.parametrize("f,region", [(FOLD, (0.2, 1.0, -1, 1)), (UMBILIC, (1.2, 2.0, -2, 2))])
def test_legendre_gradient_is_the_sheet(f, region):
    """grad h(x) = y(x), checked by central differences on one sheet."""
    rng = np.random.default_rng(5)
    d = 1e-6
    for _ in range(25):
        x = np.array([rng.uniform(*region[:2]), rng.uniform(*region[2:])])
        seed = legendre_sheet(f, x, (1.0, 0.0)).y
        sh = legendre_sheet(f, x, seed)
        fd = []
        for k in range(2):
            e = np.eye(2)[k] * d
            fd.append((legendre_sheet(f, x + e, sh.y).h - legendre_sheet(f, x - e, sh.y).h) / (2 * d))
        assert np.linalg.norm(np.subtract(fd, sh.y)) <= 1e-5 * max(np.linalg.norm(sh.y), 1e-3)
