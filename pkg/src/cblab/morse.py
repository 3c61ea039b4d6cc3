"""Coherent orientations, the Morse complex of a phase portrait, and its homology."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

import numpy as np

from . import linalg
from .errors import NoCoherentOrientation
from .flow import BRANCHES, PhasePortrait

# pattern p = 2*s_flip + u_flip ; p = 0 means S1 and U1 positive
PATTERNS = (0, 1, 2, 3)


def pattern_signs(p: int) -> dict[str, int]:
    s = -1 if p & 2 else 1
    u = -1 if p & 1 else 1
    return {"S1": s, "S2": -s, "U1": u, "U2": -u}


def pattern_of(signs: dict[str, int]) -> int:
    return (2 if signs["S1"] < 0 else 0) + (1 if signs["U1"] < 0 else 0)


@dataclass(frozen=True)
class BifurcationContext:
    """Saddle s_a sliding its unstable branch j over s_b through s_b's stable branch k.

    ``alpha`` is the stable branch of s_a that s_b's k-branch follows backward on
    the side where the convention is imposed, ``beta`` the unstable branch of s_b
    that s_a's j-branch follows forward there.
    """

    s_a: Hashable
    j: str
    s_b: Hashable
    k: str
    alpha: str
    beta: str
    mode: str = "convention"

    def constraints(self):
        """Sign-product constraints [(branches, required product)].

        "convention": incoming stable branches equal, unstable continuations
        opposite. "coherent": only the product of the four, which is what the
        convention leaves invariant under flipping the sign of a generator.
        """
        ks, al = (self.s_b, self.k), (self.s_a, self.alpha)
        js, be = (self.s_a, self.j), (self.s_b, self.beta)
        if self.mode == "coherent":
            return [([ks, al, js, be], -1)]
        return [([ks, al], 1), ([js, be], -1)]


@dataclass
class Orientation:
    patterns: dict

    def sign(self, saddle, branch: str) -> int:
        return pattern_signs(self.patterns[saddle])[branch]

    def as_branch_map(self) -> dict:
        return {(s, b): pattern_signs(p)[b] for s, p in self.patterns.items() for b in BRANCHES}


def _square_terms(portrait: PhasePortrait, local: bool):
    """Per (un, sn): list of (saddle, S-branch, U-branch) broken lines."""
    lines: dict[tuple, list] = {}
    for s in portrait.saddles:
        for sb in ("S1", "S2"):
            un = portrait.branches.get((s, sb))
            if un is None or portrait.by_id[un].mu != 2:
                continue
            for ub in ("U1", "U2"):
                sn = portrait.branches.get((s, ub))
                if sn is None or portrait.by_id[sn].mu != 0:
                    continue
                lines.setdefault((un, sn), []).append((s, sb, ub))
    out = []
    for key, ls in lines.items():
        if local and len(ls) % 2:
            continue
        out.append((key, ls))
    return out


def _normalize_pins(pinned) -> dict:
    """Pins as {(saddle, branch): sign}."""
    out = {}
    for s, v in (pinned or {}).items():
        if isinstance(v, int):
            for b, sg in pattern_signs(v).items():
                out[(s, b)] = sg
        else:
            for b, sg in v.items():
                sg = int(sg)
                out[(s, b)] = sg
                other = {"S1": "S2", "S2": "S1", "U1": "U2", "U2": "U1"}[b]
                out[(s, other)] = -sg
    return out


def solve_orientation(portraits, context: Iterable[BifurcationContext] | BifurcationContext | None = None,
                      pinned=None, local: bool | None = None, order: Sequence | None = None) -> Orientation:
    """Lexicographically first per-saddle pattern assignment with d1.d0 = 0.

    ``portraits`` may be one portrait or several sharing saddle ids (a joint
    assignment is then found, which is what sign persistence across walls
    requires). The search is a depth-first enumeration in (saddle, pattern)
    order, so its first hit is the lexicographic minimum of the exhaustive
    search; partial assignments are pruned as soon as a constraint is fully
    assigned.
    """
    if isinstance(portraits, PhasePortrait):
        portraits = [portraits]
    if isinstance(context, BifurcationContext):
        context = [context]
    pins = {}
    for P in portraits:
        pins.update(_normalize_pins(P.pinned))
    pins.update(_normalize_pins(pinned))
    saddles: list = []
    for P in portraits:
        for s in P.saddles:
            if s not in saddles:
                saddles.append(s)
    if order is not None:
        saddles = [s for s in order if s in saddles] + [s for s in saddles if s not in order]
    pos = {s: i for i, s in enumerate(saddles)}

    # constraints: ("sq", [(s, sb, ub), ...]) sum of products == 0 ; ("prod", branches, value)
    cons = []
    for P in portraits:
        loc = P.local if local is None else local
        for key, ls in _square_terms(P, loc):
            cons.append(("sq", ls, key))
    for c in context or []:
        for brs, val in c.constraints():
            cons.append(("prod", brs, val))
    by_last: dict[int, list] = {}
    for c in cons:
        if c[0] == "sq":
            involved = {t[0] for t in c[1]}
        else:
            involved = {b[0] for b in c[1]}
        by_last.setdefault(max(pos[s] for s in involved), []).append(c)

    choice: dict = {}

    def ok_pin(s, p) -> bool:
        sg = pattern_signs(p)
        return all(pins.get((s, b), sg[b]) == sg[b] for b in BRANCHES)

    def check(c) -> bool:
        if c[0] == "sq":
            tot = 0
            for s, sb, ub in c[1]:
                sg = pattern_signs(choice[s])
                tot += sg[sb] * sg[ub]
            return tot == 0
        prod = 1
        for s, b in c[1]:
            prod *= pattern_signs(choice[s])[b]
        return prod == c[2]

    def dfs(i: int) -> bool:
        if i == len(saddles):
            return True
        s = saddles[i]
        for p in PATTERNS:
            if not ok_pin(s, p):
                continue
            choice[s] = p
            if all(check(c) for c in by_last.get(i, [])) and dfs(i + 1):
                return True
        choice.pop(s, None)
        return False

    if not dfs(0):
        names = ", ".join(P.name or str(P.x) for P in portraits)
        raise NoCoherentOrientation(
            f"no sign choice makes d1.d0 vanish for {names}; a square partner is missing "
            "or a separatrix leaves the window")
    return Orientation(dict(choice))


@dataclass
class MorseComplex:
    bases: dict  # degree -> list of ids
    d0: np.ndarray  # (n_saddle x n_un)
    d1: np.ndarray  # (n_sn x n_saddle)
    orientation: Orientation | None = None
    portrait: PhasePortrait | None = field(default=None, repr=False)

    def basis(self, deg: int) -> list:
        return self.bases[deg]

    def d(self, deg: int) -> np.ndarray:
        return self.d0 if deg == 2 else self.d1

    def square_is_zero(self) -> bool:
        if self.d1.size == 0 or self.d0.size == 0:
            return True
        return not np.any(self.d1 @ self.d0)

    def boundary(self, deg: int, gen) -> dict:
        """d(gen) as {generator: coefficient}."""
        src = self.bases[deg]
        tgt = self.bases[deg - 1]
        col = self.d(deg)[:, src.index(gen)]
        return {t: int(c) for t, c in zip(tgt, col) if c}


def build_complex(portrait: PhasePortrait, orientation: Orientation | None = None) -> MorseComplex:
    if orientation is None:
        orientation = solve_orientation(portrait)
    un, sd, sn = portrait.ids(2), portrait.ids(1), portrait.ids(0)
    iu = {g: i for i, g in enumerate(un)}
    isn = {g: i for i, g in enumerate(sn)}
    d0 = np.zeros((len(sd), len(un)), dtype=np.int64)
    d1 = np.zeros((len(sn), len(sd)), dtype=np.int64)
    for k, s in enumerate(sd):
        for b in BRANCHES:
            t = portrait.branches.get((s, b))
            if t is None:
                continue
            sg = orientation.sign(s, b)
            if b[0] == "S" and t in iu:
                d0[k, iu[t]] += sg
            elif b[0] == "U" and t in isn:
                d1[isn[t], k] += sg
    return MorseComplex({2: un, 1: sd, 0: sn}, d0, d1, orientation, portrait)


@dataclass
class HomologySummary:
    betti: tuple[int, int, int]
    cycles: dict  # degree -> list of rational column vectors (homology representatives)


def homology(cx: MorseComplex) -> HomologySummary:
    n2, n1, n0 = (len(cx.bases[d]) for d in (2, 1, 0))
    r0 = linalg.rank(cx.d0) if n2 and n1 else 0
    r1 = linalg.rank(cx.d1) if n1 and n0 else 0
    betti = (n2 - r0, n1 - r0 - r1, n0 - r1)

    def reps(cycles, boundaries, dim):
        chosen: list = []
        for v in cycles:
            if not linalg.contains(boundaries + chosen, v, dim):
                chosen.append(v)
        return chosen

    z2 = linalg.nullspace(cx.d0, n2) if n1 else linalg.nullspace(np.zeros((0, n2)), n2)
    z1 = linalg.nullspace(cx.d1, n1) if n0 else linalg.nullspace(np.zeros((0, n1)), n1)
    b1 = linalg.columns(cx.d0) if n2 and n1 else []
    z0 = linalg.nullspace(np.zeros((0, n0)), n0)
    b0 = linalg.columns(cx.d1) if n1 and n0 else []
    cycles = {2: z2, 1: reps(z1, b1, n1), 0: reps(z0, b0, n0)}
    return HomologySummary(betti, cycles)


def kernel(cx: MorseComplex, deg: int):
    n = len(cx.bases[deg])
    if deg == 0:
        return linalg.nullspace(np.zeros((0, n)), n)
    tgt = len(cx.bases[deg - 1])
    return linalg.nullspace(cx.d(deg), n) if tgt else linalg.nullspace(np.zeros((0, n)), n)


def image_of(cx: MorseComplex, deg: int):
    """Image of d out of degree ``deg`` (lives in degree deg-1)."""
    if not cx.bases[deg] or not cx.bases[deg - 1]:
        return []
    return linalg.columns(cx.d(deg))
