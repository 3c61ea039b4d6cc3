"""Quantum corrections across walls, loop monodromy and the holomorphic weight."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from . import linalg
from .errors import MissingCorrection, NotAChainMap, WrongSideConvention
from .morse import BifurcationContext, MorseComplex, homology

DEGREES = (2, 1, 0)
OTHER = {"S1": "S2", "S2": "S1", "U1": "U2", "U2": "U1"}


@dataclass
class ChainMap:
    """Integer matrices M[deg] with rows on the target basis and columns on the source basis."""

    source: Hashable
    target: Hashable
    wall: Hashable
    mats: dict
    src_bases: dict
    tgt_bases: dict
    direction: str = "forward"
    note: str = ""

    def __matmul__(self, other: "ChainMap") -> "ChainMap":
        """self after other."""
        for d in DEGREES:
            if list(other.tgt_bases[d]) != list(self.src_bases[d]):
                raise ValueError(f"bases do not line up in degree {d}")
        mats = {d: self.mats[d] @ other.mats[d] for d in DEGREES}
        return ChainMap(other.source, self.target, None, mats, other.src_bases, self.tgt_bases,
                        "composite")

    def is_identity(self) -> bool:
        return all(self.mats[d].shape[0] == self.mats[d].shape[1]
                   and np.array_equal(self.mats[d], np.eye(self.mats[d].shape[0], dtype=np.int64))
                   for d in DEGREES)

    def image_of(self, deg: int, gen) -> dict:
        col = self.mats[deg][:, list(self.src_bases[deg]).index(gen)]
        return {g: int(c) for g, c in zip(self.tgt_bases[deg], col) if c}


def _index(basis):
    return {g: i for i, g in enumerate(basis)}


def is_chain_map(m: ChainMap, src: MorseComplex, tgt: MorseComplex) -> bool:
    for deg in (2, 1):
        lhs = tgt.d(deg) @ m.mats[deg] if tgt.d(deg).size and m.mats[deg].size else \
            np.zeros((len(tgt.bases[deg - 1]), len(src.bases[deg])), dtype=np.int64)
        rhs = m.mats[deg - 1] @ src.d(deg) if m.mats[deg - 1].size and src.d(deg).size else \
            np.zeros((len(tgt.bases[deg - 1]), len(src.bases[deg])), dtype=np.int64)
        if not np.array_equal(lhs, rhs):
            return False
    return True


def induces_isomorphism(m: ChainMap, src: MorseComplex, tgt: MorseComplex) -> bool:
    """Betti numbers agree and M maps homology classes onto an independent set."""
    hs, ht = homology(src), homology(tgt)
    if hs.betti != ht.betti:
        return False
    for deg, b in zip(DEGREES, hs.betti):
        if b == 0:
            continue
        n = len(tgt.bases[deg])
        bnd = [] if deg == 2 else linalg.columns(tgt.d(deg + 1)) if tgt.bases[deg + 1] and n else []
        imgs = linalg.image(m.mats[deg], hs.cycles[deg])
        if linalg.span_rank(bnd + imgs, n) - linalg.span_rank(bnd, n) != b:
            return False
    return True


def _inclusion(src: MorseComplex, tgt: MorseComplex, id_map: dict) -> dict:
    mats = {}
    for d in DEGREES:
        ti = _index(tgt.bases[d])
        m = np.zeros((len(tgt.bases[d]), len(src.bases[d])), dtype=np.int64)
        for j, g in enumerate(src.bases[d]):
            m[ti[id_map.get(g, g)], j] = 1
        mats[d] = m
    return mats


def _pair_data(rich: MorseComplex, node, saddle):
    """(a, b, deg_a, eps): the pair's higher-degree generator a, lower b, and eps = <d a, b>."""
    if node in rich.bases[2]:
        a, b, deg = node, saddle, 2
    elif node in rich.bases[0]:
        a, b, deg = saddle, node, 1
    else:
        raise NotAChainMap(f"birth-death node {node} is neither unstable nor stable in the richer complex")
    eps = rich.boundary(deg, a).get(b, 0)
    if abs(eps) != 1:
        raise NotAChainMap(f"pair ({a}, {b}) is joined with coefficient {eps}, expected +-1")
    return a, b, deg, eps


def caustic_correction(rich: MorseComplex, poor: MorseComplex, pair: tuple, id_map: dict | None = None,
                       wall=None, names=("U1", "U2")) -> ChainMap:
    """Map poor -> rich across a fold.

    ``pair`` is (node, saddle) in rich ids; ``id_map`` sends poor ids to rich ids
    (identity by default). Unstable node n: every unstable generator un picks
    up -eps*<d un, s>*n, which is un + n for the second unstable node connected
    to s under a coherent orientation. Stable node n: every saddle s_i picks up
    -eps*<d s_i, n>*s, i.e. s_i +- s with + exactly when n(gamma_{s,n}) and
    n(gamma_{s_i,n}) differ.
    """
    id_map = dict(id_map or {})
    node, saddle = pair
    a, b, deg, eps = _pair_data(rich, node, saddle)
    mats = _inclusion(poor, rich, id_map)
    ti = _index(rich.bases[deg])
    ai = ti[a]
    for j, g in enumerate(poor.bases[deg]):
        gi = id_map.get(g, g)
        coeff = rich.boundary(deg, gi).get(b, 0)
        if coeff:
            mats[deg][ai, j] -= eps * coeff
    m = ChainMap(names[1], names[0], wall, mats, poor.bases, rich.bases, "inclusion")
    if not is_chain_map(m, poor, rich):
        raise NotAChainMap(f"caustic correction across {wall} fails d.M = M.d")
    _check_single_partner(rich, a, b, deg, eps)
    return m


def _check_single_partner(rich, a, b, deg, eps):
    if deg != 2:
        return
    # a second unstable node connected to s must be unique for M to be defined
    partners = [g for g in rich.bases[2] if g != a and rich.boundary(2, g).get(b, 0)]
    if len(partners) > 1:
        raise NotAChainMap(
            f"saddle {b} is connected to {len(partners)} unstable nodes besides {a}; no correction is defined")


def caustic_projection(rich: MorseComplex, poor: MorseComplex, pair: tuple, id_map: dict | None = None,
                       wall=None, names=("U1", "U2")) -> ChainMap:
    """Map rich -> poor, a left inverse of :func:`caustic_correction`.

    a goes to 0, b goes to -eps*(d a - eps*b) pushed to the poor basis, and every
    other generator goes to itself.
    """
    id_map = dict(id_map or {})
    back = {v: k for k, v in id_map.items()}
    node, saddle = pair
    a, b, deg, eps = _pair_data(rich, node, saddle)
    mats = {}
    for d in DEGREES:
        pi = _index(poor.bases[d])
        m = np.zeros((len(poor.bases[d]), len(rich.bases[d])), dtype=np.int64)
        for j, g in enumerate(rich.bases[d]):
            if g in (a, b):
                continue
            m[pi[back.get(g, g)], j] = 1
        mats[d] = m
    bj = list(rich.bases[deg - 1]).index(b)
    pi = _index(poor.bases[deg - 1])
    for g, c in rich.boundary(deg, a).items():
        if g == b:
            continue
        mats[deg - 1][pi[back.get(g, g)], bj] -= eps * c
    m = ChainMap(names[0], names[1], wall, mats, rich.bases, poor.bases, "projection")
    if not is_chain_map(m, rich, poor):
        raise NotAChainMap(f"caustic projection across {wall} fails d.M = M.d")
    return m


def slide_coefficients(src: MorseComplex, ctx: BifurcationContext) -> tuple[int, int]:
    """(c_s, c_u): the shift coefficient of s_b in M(s_a) read from the stable
    and from the unstable side of the saddle connection."""
    o = src.orientation
    c_s = -o.sign(ctx.s_b, ctx.k) * o.sign(ctx.s_a, ctx.alpha)
    c_u = o.sign(ctx.s_a, ctx.j) * o.sign(ctx.s_b, ctx.beta)
    return c_s, c_u


def bifurcation_correction(src: MorseComplex, tgt: MorseComplex, ctx: BifurcationContext,
                           wall=None, names=("U1", "U2"), strict: bool = True) -> ChainMap:
    """M(s_a) = s_a + c*s_b, identity elsewhere; c = -1 under the signs convention.

    With ``strict``, a source orientation that gives c = +1 (the convention holds
    on the other side) raises WrongSideConvention carrying the valid map.
    """
    if list(src.bases[1]) != list(tgt.bases[1]):
        raise NotAChainMap("bifurcation sides have different saddle sets")
    c_s, c_u = slide_coefficients(src, ctx)
    tried = []
    for c in dict.fromkeys((c_s, c_u)):
        mats = {d: np.eye(len(src.bases[d]), dtype=np.int64) for d in DEGREES}
        si = _index(src.bases[1])
        mats[1][si[ctx.s_b], si[ctx.s_a]] += c
        m = ChainMap(names[0], names[1], wall, mats, src.bases, tgt.bases, "slide",
                     note=f"M({ctx.s_a}) = {ctx.s_a} {'+' if c > 0 else '-'} {ctx.s_b}")
        if is_chain_map(m, src, tgt):
            if strict and c > 0:
                raise WrongSideConvention(
                    f"signs convention holds on {names[1]}, not {names[0]}; attach the map reversed", m)
            return m
        tried.append(c)
    raise NotAChainMap(f"no shift coefficient in {tried} makes the slide across {wall} a chain map")


def inverse_slide(m: ChainMap) -> ChainMap:
    mats = {}
    for d in DEGREES:
        a = m.mats[d]
        # unipotent with one off-diagonal entry: inverse negates it
        mats[d] = 2 * np.eye(a.shape[0], dtype=np.int64) - a
    return ChainMap(m.target, m.source, m.wall, mats, m.tgt_bases, m.src_bases, "slide-inverse")


# monodromy ---------------------------------------------------------------

@dataclass
class MonodromyReport:
    point: dict
    loop: list
    matrices: dict
    is_identity: bool
    steps: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "point": self.point,
            "loop": list(self.loop),
            "matrices": {str(d): self.matrices[d].tolist() for d in DEGREES},
            "is_identity": self.is_identity,
            "steps": self.steps,
        }


def compose_loop(maps: Sequence[ChainMap]) -> ChainMap:
    if not maps:
        raise MissingCorrection("empty loop")
    total = maps[0]
    for m in maps[1:]:
        total = m @ total
    return total


def monodromy(diagram, point) -> MonodromyReport:
    """Compose the wall corrections around ``point`` (a codim-2 record of ``diagram``).

    ``diagram`` must provide ``correction(a, b, wall_id) -> ChainMap`` mapping
    chamber a's complex to chamber b's.
    """
    kind = point["kind"]
    if kind == "Cusp":
        raise MissingCorrection("cusps carry no quantum correction")
    loop = list(point["loop"])
    walls = list(point.get("walls", [None] * len(loop)))
    maps, steps = [], []
    for i, a in enumerate(loop):
        b = loop[(i + 1) % len(loop)]
        w = walls[i] if i < len(walls) else None
        m = diagram.correction(a, b, w)
        if m is None:
            raise MissingCorrection(f"no correction between {a} and {b}")
        maps.append(m)
        steps.append({"from": a, "to": b, "wall": m.wall,
                      "matrices": {str(d): m.mats[d].tolist() for d in DEGREES}})
    total = compose_loop(maps)
    return MonodromyReport(dict(point), loop, total.mats, total.is_identity(), steps)


# holomorphic weight ---------------------------------------------------------

@dataclass(frozen=True)
class WeightInput:
    h: float
    y: tuple[float, float]
    A: float
    w: tuple[float, float]


def holomorphic_weight(inp: WeightInput) -> tuple[float, float]:
    """exp[2 pi (h/2 - A/(4 pi) + i y.w)] as (modulus, argument in (-pi, pi])."""
    re = 2 * math.pi * (inp.h / 2 - inp.A / (4 * math.pi))
    im = 2 * math.pi * (inp.y[0] * inp.w[0] + inp.y[1] * inp.w[1])
    return math.exp(re), cmath.phase(cmath.exp(complex(0.0, im)))
