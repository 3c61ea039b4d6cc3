"""Exact bivariate polynomials, the shifted family f_x and Legendre sheets."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

import numba
import numpy as np

from .errors import Degenerate, NoConvergence

Terms = Mapping[tuple[int, int], Fraction]


def _clean(terms: Mapping[tuple[int, int], object]) -> dict[tuple[int, int], Fraction]:
    out: dict[tuple[int, int], Fraction] = {}
    for (i, j), c in terms.items():
        if i < 0 or j < 0:
            raise ValueError(f"negative exponent ({i},{j})")
        c = Fraction(c)
        if c != 0:
            out[(int(i), int(j))] = out.get((int(i), int(j)), Fraction(0)) + c
    return {k: v for k, v in sorted(out.items()) if v != 0}


@dataclass(frozen=True)
class Poly:
    """A bivariate polynomial with rational coefficients (no degree constraint)."""

    terms: tuple[tuple[int, int, Fraction], ...]

    @classmethod
    def from_terms(cls, terms: Mapping[tuple[int, int], object]) -> "Poly":
        return cls(tuple((i, j, c) for (i, j), c in _clean(terms).items()))

    def as_dict(self) -> dict[tuple[int, int], Fraction]:
        return {(i, j): c for i, j, c in self.terms}

    @property
    def degree(self) -> int:
        return max((i + j for i, j, _ in self.terms), default=0)

    def diff(self, var: int) -> "Poly":
        out: dict[tuple[int, int], Fraction] = {}
        for i, j, c in self.terms:
            if var == 0 and i > 0:
                out[(i - 1, j)] = out.get((i - 1, j), Fraction(0)) + c * i
            elif var == 1 and j > 0:
                out[(i, j - 1)] = out.get((i, j - 1), Fraction(0)) + c * j
        return Poly.from_terms(out)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        ei = np.array([t[0] for t in self.terms], dtype=np.int64)
        ej = np.array([t[1] for t in self.terms], dtype=np.int64)
        c = np.array([float(t[2]) for t in self.terms], dtype=np.float64)
        return ei, ej, c

    def __call__(self, y1, y2):
        y1 = np.asarray(y1, dtype=float)
        y2 = np.asarray(y2, dtype=float)
        out = np.zeros(np.broadcast(y1, y2).shape)
        for i, j, c in self.terms:
            out = out + float(c) * y1**i * y2**j
        return out if out.shape else float(out)


@numba.njit(cache=True, nogil=True)
def poly_eval(ei, ej, c, y1, y2):
    s = 0.0
    for k in range(c.shape[0]):
        s += c[k] * y1 ** ei[k] * y2 ** ej[k]
    return s


class GeneratingFunction:
    """The polynomial f whose shifted family f_x(y) = f(y) - x.y is studied.

    Coefficients are kept exact; derivatives are taken symbolically on the
    term dictionary and evaluated in double precision.
    """

    def __init__(self, terms: Mapping[tuple[int, int], object]):
        self.poly = Poly.from_terms(terms)
        if self.poly.degree < 2:
            raise ValueError("generating function must have degree >= 2")
        self.g1 = self.poly.diff(0)
        self.g2 = self.poly.diff(1)
        self.h11 = self.g1.diff(0)
        self.h12 = self.g1.diff(1)
        self.h22 = self.g2.diff(1)
        # packed arrays for the compiled integrator
        self.grad_arrays = self.g1.arrays() + self.g2.arrays()

    @classmethod
    def from_literal(cls, quads: Iterable[Iterable[int]]) -> "GeneratingFunction":
        """Build from ``[[i, j, num, den], ...]``."""
        terms: dict[tuple[int, int], Fraction] = {}
        for q in quads:
            i, j, num, den = (int(v) for v in q)
            terms[(i, j)] = terms.get((i, j), Fraction(0)) + Fraction(num, den)
        return cls(terms)

    def to_literal(self) -> list[list[int]]:
        return [[i, j, c.numerator, c.denominator] for i, j, c in self.poly.terms]

    @property
    def terms(self) -> dict[tuple[int, int], Fraction]:
        return self.poly.as_dict()

    @property
    def degree(self) -> int:
        return self.poly.degree

    def __eq__(self, other) -> bool:
        return isinstance(other, GeneratingFunction) and self.poly == other.poly

    def __hash__(self) -> int:
        return hash(self.poly)

    def __repr__(self) -> str:
        return f"GeneratingFunction({self.to_literal()})"

    def value(self, y1, y2):
        return self.poly(y1, y2)

    def gradient_xy(self, y1, y2):
        return self.g1(y1, y2), self.g2(y1, y2)

    def hessian_xy(self, y1, y2):
        return self.h11(y1, y2), self.h12(y1, y2), self.h22(y1, y2)

    def det_hessian(self, y1, y2):
        a, b, d = self.hessian_xy(y1, y2)
        return a * d - b * b


@dataclass(frozen=True)
class BasePoint:
    x1: float
    x2: float

    def __post_init__(self):
        if not (np.isfinite(self.x1) and np.isfinite(self.x2)):
            raise ValueError("base point must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2])


def _xy(p) -> tuple[float, float]:
    if isinstance(p, BasePoint):
        return p.x1, p.x2
    a, b = p
    return float(a), float(b)


def eval_family(f: GeneratingFunction, x, y) -> float:
    """f(y) - x1*y1 - x2*y2."""
    x1, x2 = _xy(x)
    y1, y2 = _xy(y)
    return float(f.value(y1, y2)) - x1 * y1 - x2 * y2


def gradient(f: GeneratingFunction, y) -> np.ndarray:
    y1, y2 = _xy(y)
    g1, g2 = f.gradient_xy(y1, y2)
    return np.array([g1, g2], dtype=float)


def hessian(f: GeneratingFunction, y) -> np.ndarray:
    y1, y2 = _xy(y)
    a, b, d = f.hessian_xy(y1, y2)
    return np.array([[a, b], [b, d]], dtype=float)


@dataclass(frozen=True)
class SheetFunction:
    x: tuple[float, float]
    y: tuple[float, float]
    h: float


def newton_root(f: GeneratingFunction, x, seed, tol: float = 1e-10, max_iter: int = 100):
    """Damped Newton on grad f(y) = x from one seed. Returns y or None."""
    x = np.asarray(_xy(x))
    y = np.asarray(_xy(seed), dtype=float)
    r = gradient(f, y) - x
    nr = np.linalg.norm(r)
    for _ in range(max_iter):
        if nr < tol:
            return y
        H = hessian(f, y)
        try:
            step = np.linalg.solve(H, r)
        except np.linalg.LinAlgError:
            return None
        t = 1.0
        while t > 1e-6:
            yn = y - t * step
            rn = gradient(f, yn) - x
            if np.linalg.norm(rn) < nr:
                break
            t *= 0.5
        else:
            return None
        y, r, nr = yn, rn, np.linalg.norm(rn)
    return y if nr < tol else None


def _polish(f: GeneratingFunction, x, y, max_iter: int = 80):
    """Plain Newton steps while the residual keeps shrinking.

    A simple root is done after a step or two. A double root converges only
    linearly, so polishing walks it onto the fold where its Hessian is visibly
    singular.
    """
    x = np.asarray(_xy(x))
    r = np.linalg.norm(gradient(f, y) - x)
    for _ in range(max_iter):
        try:
            yn = y - np.linalg.solve(hessian(f, y), gradient(f, y) - x)
        except np.linalg.LinAlgError:
            break
        rn = np.linalg.norm(gradient(f, yn) - x)
        if not rn < r:
            break
        y, r = yn, rn
    return y


def legendre_sheet(f: GeneratingFunction, x, seed, tol_root: float = 1e-10,
                   tol_degenerate: float = 1e-7) -> SheetFunction:
    """Local sheet y(x) of grad f(y) = x with h(x) = x.y - f(y)."""
    y = newton_root(f, x, seed, tol=tol_root)
    if y is None:
        raise NoConvergence(f"no root of grad f = {tuple(_xy(x))} from seed {tuple(_xy(seed))}")
    y = _polish(f, x, y)
    if abs(np.linalg.det(hessian(f, y))) < tol_degenerate:
        raise Degenerate(f"x={tuple(_xy(x))} lies on the caustic (y={tuple(y)})")
    x1, x2 = _xy(x)
    h = x1 * y[0] + x2 * y[1] - float(f.value(y[0], y[1]))
    return SheetFunction((x1, x2), (float(y[0]), float(y[1])), float(h))
