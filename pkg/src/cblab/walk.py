"""Numeric wall corrections and loop monodromy on computed diagrams.

Chamber representatives are far from walls, so maps are built on the pair of
portraits that bracket a located wall point. Around a codim-2 point the loop
is a small circle; orientations are transported along it by pinning each
portrait's branch signs from the previous one, so steps inside a chamber are
plain relabelings.
"""
from __future__ import annotations

import math

import numpy as np

from .config import DEFAULT_TOL
from .corrections import (DEGREES, ChainMap, MonodromyReport, bifurcation_correction, caustic_correction,
                          caustic_projection, compose_loop, inverse_slide, is_chain_map)
from .critical import match_points
from .errors import MissingCorrection, NoCoherentOrientation, NotAChainMap
from .flow import BRANCHES, PhasePortrait
from .loci import BIF, FOLD, WallPoint, _robust_portrait, detect_wall_on_segment, portraits_agree
from .morse import BifurcationContext, MorseComplex, Orientation, build_complex, pattern_of, solve_orientation

SWAP = {"U1": "U2", "U2": "U1", "S1": "S2", "S2": "S1"}


def _renamed(p: PhasePortrait, ren: dict, name=None) -> PhasePortrait:
    """Copy of ``p`` with point ids replaced through ``ren``."""
    pts = [q.with_id(ren.get(q.id, q.id)) for q in p.points]
    br = {(ren.get(s, s), b): (None if t is None else ren.get(t, t)) for (s, b), t in p.branches.items()}
    frames = {ren.get(s, s): fr for s, fr in p.frames.items()}
    return PhasePortrait(p.x, pts, br, frames=frames, local=p.local, name=name or p.name)


def _fold_pair(rich: PhasePortrait, poor: PhasePortrait):
    m = match_points(poor.points, rich.points)
    extra = [q for q in rich.points if q.id not in set(m.values())]
    if len(extra) != 2:
        raise NotAChainMap("fold sides do not differ by one birth-death pair")
    node = next(q for q in extra if q.mu != 1)
    sad = next(q for q in extra if q.mu == 1)
    return (node.id, sad.id), m


def _side_chamber(wp: WallPoint, k: int):
    return wp.chambers[k]


def wall_correction(diag, wall, a, b) -> ChainMap:
    """Chain map a -> b across ``wall`` of a computed diagram."""
    wp = wall.middle()
    p1, p2 = wp.sides
    c1 = wp.chambers[0] if wp.chambers[0] is not None else (b if wp.chambers[1] == a else a)
    side_a, side_b = (p1, p2) if c1 == a else (p2, p1)
    if wall.kind == FOLD:
        rich, poor = (side_a, side_b) if len(side_a.points) > len(side_b.points) else (side_b, side_a)
        pair, id_map = _fold_pair(rich, poor)
        rc, pc = build_complex(rich), build_complex(poor)
        names = (a, b) if rich is side_a else (b, a)
        if poor is side_a:
            return caustic_correction(rc, pc, pair, id_map, wall=wall.id, names=names)
        return caustic_projection(rc, pc, pair, id_map, wall=wall.id, names=names)
    src, tgt = p1, _renamed(p2, {v: k for k, v in wp.id_map.items()})
    ctx = _context(wp.payload, "convention")
    try:
        o = solve_orientation([src, tgt], ctx)
    except NoCoherentOrientation:
        ctx = _context(wp.payload, "coherent")
        o = solve_orientation([src, tgt], ctx)
    m = bifurcation_correction(build_complex(src, o), build_complex(tgt, o), ctx, wall=wall.id,
                               names=(c1, b if c1 == a else a), strict=False)
    return m if c1 == a else inverse_slide(m)


def _context(payload: dict, mode: str) -> BifurcationContext:
    return BifurcationContext(payload["s_a"], payload["j"], payload["s_b"], payload["k"],
                              payload["alpha"], payload["beta"], mode)


# ------------------------------------------------------------ loop walking

class _Transport:
    """Carries a portrait, its complex and an orientation along the loop."""

    def __init__(self, p: PhasePortrait, o: Orientation):
        self.p = p
        self.o = o
        self.cx = build_complex(p, o)


def _pins_from(prev: _Transport, nxt: PhasePortrait, m: dict) -> dict:
    """Branch signs for ``nxt`` equal to prev's on physically matching branches."""
    pins = {}
    for s in prev.p.saddles:
        t = m.get(s)
        if t is None or t not in nxt.by_id or nxt.by_id[t].mu != 1:
            continue
        u0 = np.asarray(prev.p.frames[s][0])
        u1 = np.asarray(nxt.frames[t][0])
        flip = float(u0 @ u1) < 0
        signs = {}
        for b in BRANCHES:
            signs[SWAP[b] if flip else b] = prev.o.sign(s, b)
        pins[t] = pattern_of(signs)
    return pins


def _orient(p: PhasePortrait, pins: dict, ctx=None) -> Orientation:
    try:
        return solve_orientation(p, ctx, pinned=pins)
    except NoCoherentOrientation:
        # keep what can be kept: drop pins one saddle at a time, in id order
        for s in sorted(pins, key=str):
            rest = {k: v for k, v in pins.items() if k != s}
            try:
                return solve_orientation(p, ctx, pinned=rest)
            except NoCoherentOrientation:
                continue
        return solve_orientation(p, ctx)


def _relabel_map(src: _Transport, tgt: _Transport, m: dict, note="") -> ChainMap:
    """Signed permutation src -> tgt along the tracking ``m``; signs fix orientation changes."""
    mats = {}
    for d in DEGREES:
        sb, tb = src.cx.bases[d], tgt.cx.bases[d]
        M = np.zeros((len(tb), len(sb)), dtype=np.int64)
        ti = {g: i for i, g in enumerate(tb)}
        for j, g in enumerate(sb):
            M[ti[m[g]], j] = 1
        mats[d] = M
    cm = ChainMap(src.p.name, tgt.p.name, None, mats, src.cx.bases, tgt.cx.bases, "transport", note)
    if is_chain_map(cm, src.cx, tgt.cx):
        return cm
    # try negating saddles one by one until the differentials commute
    sb = src.cx.bases[1]
    for j in range(len(sb)):
        col = mats[1][:, j].copy()
        mats[1][:, j] = -col
        if is_chain_map(cm, src.cx, tgt.cx):
            return cm
        mats[1][:, j] = col
    raise NotAChainMap("orientation transport along the loop is not a signed relabeling")


def walk_monodromy(diag, point, n_samples: int = 48, radius: float | None = None) -> MonodromyReport:
    """Compose corrections along a small circle around a codim-2 point of a computed diagram."""
    if point["kind"] == "Cusp":
        raise MissingCorrection("cusps carry no quantum correction")
    c = np.asarray(point["location"], float)
    r = radius or point.get("radius") or 0.5 * (diag.region[1] - diag.region[0]) / diag.grid_m
    return walk_circle(diag.f, c, r, n_samples, diag.fiber_window, diag.grid_n, diag.tol, point=point)


def walk_circle(f, centre, radius, n_samples=48, fiber_window=(-3.0, 3.0, -3.0, 3.0), grid_n=16,
                tol=DEFAULT_TOL, point=None) -> MonodromyReport:
    """Monodromy of the corrections along the circle |x - centre| = radius.

    The walk starts at the first sample with the fewest critical points, so
    a loop that dips into a richer chamber and back returns through the
    projection after the injection.
    """
    centre = np.asarray(centre, float)
    angles = [2 * math.pi * (k + 0.5) / n_samples for k in range(n_samples)]
    xs0 = [tuple(centre + radius * np.array([math.cos(t), math.sin(t)])) for t in angles]
    got = [_robust_portrait(f, x, fiber_window, grid_n, tol, radius * 1e-2) for x in xs0]
    counts = [len(p.points) for _, p in got]
    k0 = counts.index(min(counts))
    order = list(range(k0, n_samples)) + list(range(0, k0)) + [k0]
    xs = [got[k][0] for k in order]
    ps = [got[k][1] for k in order]
    for i, p in enumerate(ps):
        p.name = f"P{i}"
    cur = _Transport(ps[0], solve_orientation(ps[0]))
    start = cur
    maps, steps, loop = [], [], ["P0"]
    for i in range(1, len(ps)):
        nxt = ps[i]
        if portraits_agree(cur.p, nxt):
            m = match_points(cur.p.points, nxt.points)
            t = _Transport(nxt, _orient(nxt, _pins_from(cur, nxt, m)))
            maps.append(_relabel_map(cur, t, m))
            cur = t
            continue
        walls = detect_wall_on_segment(f, xs[i - 1], xs[i], fiber_window, grid_n, tol, cur.p, nxt)
        for wp in walls:
            s1, s2 = wp.sides
            s1 = _renamed(s1, {}, name=f"P{i - 1}+")
            m = match_points(cur.p.points, s1.points)
            t1 = _Transport(s1, _orient(s1, _pins_from(cur, s1, m)))
            maps.append(_relabel_map(cur, t1, m))
            t2, cm = _cross(t1, s2, wp, f"P{i}-")
            maps.append(cm)
            steps.append({"from": t1.p.name, "to": t2.p.name, "kind": wp.kind,
                          "at": [float(wp.x[0]), float(wp.x[1])]})
            loop.append(t2.p.name)
            cur = t2
        m = match_points(cur.p.points, nxt.points)
        t = _Transport(nxt, _orient(nxt, _pins_from(cur, nxt, m)))
        maps.append(_relabel_map(cur, t, m))
        cur = t
    # close the loop: the last portrait is the first one recomputed
    m = match_points(cur.p.points, start.p.points)
    maps.append(_relabel_map(cur, start, m))
    total = compose_loop(maps)
    pt = dict(point or {"kind": "Loop", "location": [float(centre[0]), float(centre[1])]})
    pt["radius"] = float(radius)
    return MonodromyReport(pt, loop, total.mats, total.is_identity(), steps)


def _cross(t1: _Transport, s2: PhasePortrait, wp: WallPoint, name):
    """Orient the far side and build the correction t1 -> far side."""
    if wp.kind == FOLD:
        s2 = _renamed(s2, {}, name=name)
        if len(s2.points) > len(t1.p.points):
            pair, id_map = _fold_pair(s2, t1.p)
            m = {v: k for k, v in id_map.items()}
            pins = {k: v for k, v in _pins_from(t1, s2, id_map).items()}
            t2 = _Transport(s2, _orient(s2, pins))
            cm = caustic_correction(t2.cx, t1.cx, pair, id_map, names=(s2.name, t1.p.name))
        else:
            pair, id_map = _fold_pair(t1.p, s2)
            back = {v: k for k, v in id_map.items()}
            t2 = _Transport(s2, _orient(s2, _pins_from(t1, s2, back)))
            cm = caustic_projection(t1.cx, t2.cx, pair, id_map, names=(t1.p.name, s2.name))
        return t2, cm
    # bifurcation: same ids on both sides, one joint orientation honouring the slide
    tgt = _renamed(s2, {v: k for k, v in wp.id_map.items()}, name=name)
    ctx = _context(wp.payload, "coherent")
    pins = {s: t1.o.patterns[s] for s in t1.p.saddles}
    try:
        o = solve_orientation([t1.p, tgt], ctx, pinned=pins)
        src = t1
        pre = None
    except NoCoherentOrientation:
        o = solve_orientation([t1.p, tgt], ctx)
        src = _Transport(t1.p, Orientation({s: o.patterns[s] for s in t1.p.saddles}))
        pre = _relabel_map(t1, src, {g: g for d in DEGREES for g in t1.cx.bases[d]})
    t2 = _Transport(tgt, Orientation({s: o.patterns[s] for s in tgt.saddles}))
    cm = bifurcation_correction(src.cx, t2.cx, ctx, names=(t1.p.name, tgt.name), strict=False)
    if pre is not None:
        cm = cm @ pre
    return t2, cm
