"""Exact subspace helpers for checking kernel and image identities in tests."""
from __future__ import annotations

import itertools

import sympy as sp

from cblab import linalg
from cblab.morse import MorseComplex, image_of, kernel


def vector(cx: MorseComplex, deg: int, **coeffs) -> sp.Matrix:
    return linalg.vec(coeffs, cx.bases[deg])


def ker(cx: MorseComplex, deg: int) -> list:
    return kernel(cx, deg)


def im(cx: MorseComplex, deg: int) -> list:
    """Image of the differential leaving degree ``deg``."""
    return image_of(cx, deg)


def boundary(cx: MorseComplex, deg: int, gen) -> sp.Matrix:
    return linalg.vec(cx.boundary(deg, gen), cx.bases[deg - 1])


def inject(vs, small: MorseComplex, big: MorseComplex, deg: int) -> list:
    """Push vectors on ``small``'s basis to ``big``'s basis (generators keep their names)."""
    out = []
    for v in vs:
        out.append(linalg.vec({g: v[i] for i, g in enumerate(small.bases[deg])}, big.bases[deg]))
    return out


def same(a, b, cx: MorseComplex, deg: int) -> bool:
    return linalg.span_equal(a, b, len(cx.bases[deg]))


def direct_sum(whole, parts, cx: MorseComplex, deg: int) -> bool:
    return linalg.is_direct_sum(whole, parts, len(cx.bases[deg]))


def inside(span, v, cx: MorseComplex, deg: int) -> bool:
    return linalg.contains(span, v, len(cx.bases[deg]))


def dim(vs, cx: MorseComplex, deg: int) -> int:
    return linalg.span_rank(vs, len(cx.bases[deg]))


def signed_match(space, templates, cx: MorseComplex, deg: int, extra=()):
    """Find signs for the ``"+-"`` terms of ``templates`` so their span equals ``space``.

    A template is a list of (generator, coefficient) with coefficient an int or
    the string "+-". ``extra`` vectors are added to the template span as they are.
    Returns the chosen template vectors, or None when no choice of signs works.
    """
    free = [(t, i) for t, tpl in enumerate(templates) for i, (_, c) in enumerate(tpl) if c == "+-"]
    for signs in itertools.product((1, -1), repeat=len(free)):
        pick = {k: s for k, s in zip(free, signs)}
        vs = []
        for t, tpl in enumerate(templates):
            coeffs = {}
            for i, (g, c) in enumerate(tpl):
                coeffs[g] = coeffs.get(g, 0) + (pick[(t, i)] if c == "+-" else c)
            vs.append(linalg.vec(coeffs, cx.bases[deg]))
        if same(list(extra) + vs, space, cx, deg) and dim(list(extra) + vs, cx, deg) == len(list(extra) + vs):
            return vs
    return None
