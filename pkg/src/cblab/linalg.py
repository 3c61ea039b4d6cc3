"""Exact rational subspace arithmetic on small integer matrices (thin sympy wrappers)."""
from __future__ import annotations

from typing import Sequence

import numpy as np
import sympy as sp


def to_sympy(a) -> sp.Matrix:
    a = np.asarray(a, dtype=object)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    return sp.Matrix(a.shape[0], a.shape[1], [sp.Rational(v) for v in a.ravel()])


def rank(a) -> int:
    a = np.asarray(a)
    if a.size == 0:
        return 0
    return int(to_sympy(a).rank())


def nullspace(a, ncols: int | None = None) -> list[sp.Matrix]:
    a = np.asarray(a)
    if a.size == 0:
        n = ncols if ncols is not None else (a.shape[1] if a.ndim == 2 else 0)
        return [sp.eye(n)[:, i] for i in range(n)]
    return to_sympy(a).nullspace()


def columns(a) -> list[sp.Matrix]:
    a = np.asarray(a)
    if a.size == 0:
        return []
    m = to_sympy(a)
    return [m[:, i] for i in range(m.shape[1])]


def _stack(vectors: Sequence, dim: int) -> sp.Matrix:
    vs = [to_sympy(v) if not isinstance(v, sp.MatrixBase) else v for v in vectors]
    if not vs:
        return sp.zeros(dim, 0)
    return sp.Matrix.hstack(*vs)


def span_rank(vectors: Sequence, dim: int) -> int:
    return int(_stack(vectors, dim).rank()) if vectors else 0


def contains(span: Sequence, v, dim: int) -> bool:
    return span_rank(list(span) + [v], dim) == span_rank(span, dim)


def span_equal(a: Sequence, b: Sequence, dim: int) -> bool:
    ra, rb = span_rank(a, dim), span_rank(b, dim)
    return ra == rb == span_rank(list(a) + list(b), dim)


def is_direct_sum(whole: Sequence, parts: Sequence[Sequence], dim: int) -> bool:
    """whole = parts[0] (+) parts[1] (+) ... with the parts independent."""
    union = [v for p in parts for v in p]
    return (span_equal(whole, union, dim)
            and span_rank(union, dim) == sum(span_rank(p, dim) for p in parts))


def vec(coeffs: dict, basis: Sequence) -> sp.Matrix:
    """Column vector on ``basis`` from {generator: coefficient}."""
    unknown = set(coeffs) - set(basis)
    if unknown:
        raise KeyError(f"generators {sorted(map(str, unknown))} not in basis")
    return sp.Matrix([sp.Rational(coeffs.get(b, 0)) for b in basis])


def apply(m, v) -> sp.Matrix:
    return to_sympy(m) * (v if isinstance(v, sp.MatrixBase) else to_sympy(v))


def image(m, vectors: Sequence) -> list[sp.Matrix]:
    mm = to_sympy(m)
    return [mm * v for v in vectors]
