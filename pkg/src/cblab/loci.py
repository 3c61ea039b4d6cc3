"""Caustic and bifurcation loci, wall location on segments, and the chamber diagram."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components, minimum_spanning_tree
from scipy.spatial import cKDTree
from skimage.measure import find_contours

from .config import DEFAULT_TOL, Tolerances, worker_count
from .critical import (SADDLE, BirthDeathPair, CriticalPoint, classify, detect_birth_death,
                       find_critical_points, match_points)
from .errors import (CBLabError, DegeneratePoint, InconsistentAdjacency, NoCrossing, NotAFold,
                     NoTerminus, OnBifurcation, OnCaustic, UnresolvedWall)
from .flow import PhasePortrait, extract_portrait, saddle_frame
from .polyfun import GeneratingFunction, _xy, gradient, hessian, newton_root

log = logging.getLogger(__name__)

FOLD = "CausticFold"
BIF = "Bifurcation"


# ---------------------------------------------------------------- caustic

@dataclass
class CausticCurve:
    segments: list  # base-plane polylines (k x 2 arrays)
    fibre: list  # matching discriminant polylines in the fiber
    cusps: list  # base points
    cusp_fibre: list
    folds: list = field(default_factory=list)  # BirthDeathPair samples, one per segment

    def is_empty(self) -> bool:
        return not self.segments

    def points(self) -> np.ndarray:
        if not self.segments:
            return np.zeros((0, 2))
        return np.vstack(self.segments)


class _Discriminant:
    """det Hess f and its gradient, with Newton projection onto the zero set."""

    def __init__(self, f: GeneratingFunction):
        self.f = f
        self.d = [(f.h11.diff(v), f.h12.diff(v), f.h22.diff(v)) for v in (0, 1)]

    def value(self, y1, y2):
        return self.f.det_hessian(y1, y2)

    def grad(self, y) -> np.ndarray:
        a, b, c = self.f.hessian_xy(*y)
        out = []
        for da, db, dc in self.d:
            out.append(da(*y) * c + a * dc(*y) - 2.0 * b * db(*y))
        return np.array(out, dtype=float)

    def project(self, y, tol: float = 1e-13, iters: int = 30):
        y = np.array(y, dtype=float)
        for _ in range(iters):
            g = float(self.value(*y))
            gr = self.grad(y)
            n2 = gr @ gr
            if n2 == 0.0:
                return y
            y = y - g * gr / n2
            if abs(g) < tol:
                break
        return y

    def cusp_function(self, y, ref) -> float:
        """<grad det, v> with the kernel vector v of H oriented like ``ref``."""
        v = _kernel(self.f, y)
        if v @ ref < 0:
            v = -v
        gr = self.grad(y)
        return float(gr @ v / max(np.linalg.norm(gr), 1e-300))


def _kernel(f, y) -> np.ndarray:
    ev, vec = np.linalg.eigh(hessian(f, y))
    return vec[:, int(np.argmin(np.abs(ev)))]


def _inside(x, region, pad: float = 0.0) -> bool:
    return region[0] - pad <= x[0] <= region[1] + pad and region[2] - pad <= x[1] <= region[3] + pad


def trace_caustic(f: GeneratingFunction, region=(-1.0, 1.0, -1.0, 1.0),
                  fiber_window=(-3.0, 3.0, -3.0, 3.0), n_samples: int = 256,
                  tol: Tolerances = DEFAULT_TOL, grid_n: int = 16, with_folds: bool = True) -> CausticCurve:
    """Marching squares on det Hess f, Newton projection, push-forward by grad f.

    Cusps are the zeros of <grad det H, v> along the discriminant, v the kernel
    of H; a zero is kept only if the caustic speed there is below tol_cusp
    times the median speed.
    """
    disc = _Discriminant(f)
    g1 = np.linspace(fiber_window[0], fiber_window[1], n_samples)
    g2 = np.linspace(fiber_window[2], fiber_window[3], n_samples)
    Y1, Y2 = np.meshgrid(g1, g2, indexing="ij")
    Z = np.asarray(disc.value(Y1, Y2), dtype=float) * np.ones_like(Y1)
    if not (Z.min() < 0 < Z.max()):
        return CausticCurve([], [], [], [])
    s1 = (fiber_window[1] - fiber_window[0]) / (n_samples - 1)
    s2 = (fiber_window[3] - fiber_window[2]) / (n_samples - 1)
    segments, fibre, cusp_y = [], [], []
    all_speed = []
    contours = []
    for c in find_contours(Z, 0.0):
        ys = np.column_stack([fiber_window[0] + c[:, 0] * s1, fiber_window[2] + c[:, 1] * s2])
        ys = np.array([disc.project(y) for y in ys])
        contours.append(ys)
        for k in range(len(ys) - 1):
            t = ys[k + 1] - ys[k]
            n = np.linalg.norm(t)
            if n > 0:
                all_speed.append(np.linalg.norm(hessian(f, ys[k]) @ (t / n)))
    med = float(np.median(all_speed)) if all_speed else 1.0

    for ys in contours:
        # kernel vectors oriented by continuity
        vs = [_kernel(f, ys[0])]
        for y in ys[1:]:
            v = _kernel(f, y)
            vs.append(v if v @ vs[-1] >= 0 else -v)
        q = [disc.cusp_function(y, v) for y, v in zip(ys, vs)]
        for k in range(len(ys) - 1):
            if q[k] == 0.0 or q[k] * q[k + 1] < 0:
                a, b, ref = ys[k], ys[k + 1], vs[k]

                def h(s, a=a, b=b, ref=ref):
                    return disc.cusp_function(disc.project(a + s * (b - a)), ref)

                s = 0.0 if q[k] == 0.0 else brentq(h, 0.0, 1.0, xtol=1e-14)
                y = disc.project(a + s * (b - a))
                tan = np.array([-disc.grad(y)[1], disc.grad(y)[0]])
                tan /= max(np.linalg.norm(tan), 1e-300)
                speed = np.linalg.norm(hessian(f, y) @ tan)
                if speed < tol.tol_cusp * med and not any(np.hypot(*(y - c)) < 1e-8 for c in cusp_y):
                    cusp_y.append(y)
        # push forward and clip to the region
        xs = np.array([gradient(f, y) for y in ys])
        keep = np.array([_inside(x, region) for x in xs])
        start = None
        for k in range(len(xs) + 1):
            if k < len(xs) and keep[k]:
                if start is None:
                    start = k
            elif start is not None:
                if k - start >= 2:
                    segments.append(xs[start:k])
                    fibre.append(ys[start:k])
                start = None
    cusps = []
    cusp_fibre = []
    for y in cusp_y:
        x = gradient(f, y)
        if _inside(x, region):
            cusps.append((float(x[0]), float(x[1])))
            cusp_fibre.append((float(y[0]), float(y[1])))
    order = sorted(range(len(cusps)), key=lambda i: cusps[i])
    curve = CausticCurve(segments, fibre, [cusps[i] for i in order], [cusp_fibre[i] for i in order])
    if with_folds:
        for seg in segments:
            k = len(seg) // 2
            t = seg[min(k + 1, len(seg) - 1)] - seg[max(k - 1, 0)]
            normal = (-t[1], t[0])
            try:
                curve.folds.append(detect_birth_death(f, seg[k], normal, fiber_window=fiber_window,
                                                      grid_n=grid_n, tol=tol))
            except (NotAFold, CBLabError) as exc:
                log.info("no fold pair at %s: %s", tuple(seg[k]), exc)
    return curve


# ----------------------------------------------------------- saddle splitting

def _saddle_at(f, x, s, tol: Tolerances) -> CriticalPoint:
    y = s.y if isinstance(s, CriticalPoint) else _xy(s)
    yr = newton_root(f, x, y, tol.tol_root)
    if yr is None:
        raise ValueError(f"no critical point near {y} at x={_xy(x)}")
    cp = classify(f, yr, tol.tol_degenerate)
    if cp.kind != SADDLE:
        raise ValueError(f"critical point near {y} is a {cp.kind}, not a saddle")
    return cp


def _first_crossing(f, x, y0, sign, centre, along, normal, half, window, sinks, cap, tol, t_max):
    """Offset along ``along`` of the first crossing of the section, or None."""
    x = np.asarray(_xy(x))

    def rhs(_, y):
        return sign * (gradient(f, y) - x)

    def cross(_, y):
        return float((y - centre) @ normal)

    def leave(_, y):
        return min(y[0] - window[0], window[1] - y[0], y[1] - window[2], window[3] - y[1])

    def sink(_, y):
        return min(float(np.hypot(*(y - s))) for s in sinks) - cap if sinks else 1.0

    leave.terminal = True
    sink.terminal = True
    sol = solve_ivp(rhs, (0.0, t_max), y0, method="DOP853", rtol=tol.rtol, atol=tol.atol,
                    events=(cross, leave, sink))
    hits = sol.y_events[0]
    for y in hits:
        off = float((y - centre) @ along)
        if abs(off) <= half:
            return off
    return None


def saddle_splitting(f: GeneratingFunction, x, s_i, s_j, section=None, *, branch: str = "U1",
                     stable: str = "S1", fiber_window=(-3.0, 3.0, -3.0, 3.0),
                     tol: Tolerances = DEFAULT_TOL) -> float:
    """Signed gap between s_i's unstable ``branch`` and s_j's ``stable`` branch.

    The section is the segment through s_j + r*w_j parallel to u_j (default r
    is a fifth of the saddle distance, at most 0.25). Both manifolds are
    followed to their first crossing; the result is the difference of their
    coordinates along u_j, positive when s_i's branch passes on the +u_j side.
    ``section`` may be given as (centre, direction, half_length).
    """
    a = _saddle_at(f, x, s_i, tol)
    b = _saddle_at(f, x, s_j, tol)
    if np.hypot(a.y[0] - b.y[0], a.y[1] - b.y[1]) < tol.tol_merge:
        raise ValueError("s_i and s_j are the same saddle")
    ua, _, lua, _ = saddle_frame(f, a)
    ub, wb, lub, lsb = saddle_frame(f, b)
    dist = float(np.hypot(a.y[0] - b.y[0], a.y[1] - b.y[1]))
    if section is None:
        r = min(0.25, 0.2 * dist)
        sk = 1.0 if stable == "S1" else -1.0
        centre = np.array(b.y) + r * sk * wb
        along = ub
        half = r
    else:
        centre, along, half = np.asarray(section[0], float), np.asarray(section[1], float), float(section[2])
        along = along / np.linalg.norm(along)
        r = half
    normal = np.array([-along[1], along[0]])
    pts = find_critical_points(f, x, fiber_window, tol=tol)
    cap = tol.tol_capture
    eps = max(tol.saddle_eps * min(1.0, dist), 1e3 * tol.atol)
    t_max = max(tol.max_time, 80.0 / min(abs(lua), abs(lub), abs(lsb)))
    su = 1.0 if branch == "U1" else -1.0
    sinks_i = [np.array(p.y) for p in pts if np.hypot(p.y[0] - a.y[0], p.y[1] - a.y[1]) > cap]
    off_i = _first_crossing(f, x, np.array(a.y) + eps * su * ua, 1.0, centre, along, normal, half,
                            fiber_window, sinks_i, cap, tol, t_max)
    if off_i is None:
        raise NoCrossing(f"branch {branch} of the saddle at {a.y} never crosses the section near {b.y}")
    sk = 1.0 if stable == "S1" else -1.0
    sinks_j = [np.array(p.y) for p in pts if np.hypot(p.y[0] - b.y[0], p.y[1] - b.y[1]) > cap]
    off_s = _first_crossing(f, x, np.array(b.y) + eps * sk * wb, -1.0, centre, along, normal, half,
                            fiber_window, sinks_j, cap, tol, t_max)
    if off_s is None:
        raise NoCrossing(f"stable branch {stable} of the saddle at {b.y} misses its own section")
    return off_i - off_s


def locate_bifurcation(f: GeneratingFunction, xa, xb, s_i, s_j, *, branch="U1", stable="S1",
                       fiber_window=(-3.0, 3.0, -3.0, 3.0), tol: Tolerances = DEFAULT_TOL):
    """Zero of the saddle splitting on the segment xa -> xb, tracking both saddles.

    Returns (t, x). Raises NoCrossing when the splitting does not change sign.
    """
    xa = np.asarray(_xy(xa))
    xb = np.asarray(_xy(xb))
    ya, yb = _saddle_at(f, xa, s_i, tol).y, _saddle_at(f, xa, s_j, tol).y

    def g(t):
        x = xa + t * (xb - xa)
        return saddle_splitting(f, x, ya, yb, branch=branch, stable=stable,
                                fiber_window=fiber_window, tol=tol)

    ga, gb = g(0.0), g(1.0)
    if ga == 0.0:
        return 0.0, tuple(xa)
    if ga * gb > 0:
        raise NoCrossing("saddle splitting keeps its sign on the segment")
    L = float(np.linalg.norm(xb - xa))
    t = brentq(g, 0.0, 1.0, xtol=max(tol.tol_wall / max(L, 1e-300), 1e-15))
    return t, tuple(xa + t * (xb - xa))


# ----------------------------------------------------------- wall detection

@dataclass
class WallPoint:
    x: tuple
    kind: str
    payload: object  # BirthDeathPair for folds, slide payload dict for bifurcations
    t: float
    sides: tuple  # portraits just before and just after along the segment
    id_map: dict = field(default_factory=dict)  # ids of sides[0] -> ids of sides[1]
    chambers: tuple = (None, None)  # chamber ids of sides[0] and sides[1], once known


def portraits_agree(a: PhasePortrait, b: PhasePortrait) -> bool:
    """Same counts and the same node-saddle edges once points are tracked by position."""
    if a.counts() != b.counts():
        return False
    m = match_points(a.points, b.points)
    if len(m) != len(a.points):
        return False
    ea = sorted((m[e.src], m[e.dst]) for e in a.edges)
    eb = sorted((e.src, e.dst) for e in b.edges)
    return ea == eb


class _Segment:
    def __init__(self, f, xa, xb, window, grid_n, tol):
        self.f, self.window, self.grid_n, self.tol = f, window, grid_n, tol
        self.xa = np.asarray(_xy(xa), float)
        self.xb = np.asarray(_xy(xb), float)
        self.L = float(np.linalg.norm(self.xb - self.xa))
        self.dir = (self.xb - self.xa) / self.L if self.L else np.array([1.0, 0.0])
        self.bisections = 0

    def x(self, t):
        return self.xa + t * (self.xb - self.xa)

    def portrait(self, t, strict=True):
        try:
            return extract_portrait(self.f, self.x(t), self.window, self.grid_n, self.tol, strict=strict), None
        except (OnCaustic, OnBifurcation, NoTerminus, DegeneratePoint) as exc:
            return None, exc

    def counts(self, t):
        try:
            return len(find_critical_points(self.f, self.x(t), self.window, self.grid_n, self.tol))
        except DegeneratePoint:
            return None

    def tick(self):
        self.bisections += 1
        if self.bisections > 64 * 64:
            raise UnresolvedWall(f"bisection budget exhausted on {tuple(self.xa)} -> {tuple(self.xb)}")


def detect_wall_on_segment(f: GeneratingFunction, x_a, x_b, fiber_window=(-3.0, 3.0, -3.0, 3.0),
                           grid_n: int = 16, tol: Tolerances = DEFAULT_TOL,
                           p_a: PhasePortrait | None = None, p_b: PhasePortrait | None = None) -> list[WallPoint]:
    """Locate and classify every wall between two off-wall base points.

    Point-count changes are bisected on counts alone; equal-count portrait
    changes are bisected on portraits and refined by the saddle splitting.
    """
    seg = _Segment(f, x_a, x_b, fiber_window, grid_n, tol)
    if p_a is None:
        p_a, err = seg.portrait(0.0)
        if p_a is None:
            raise UnresolvedWall(f"segment start {tuple(seg.xa)} is on a wall: {err}")
    if p_b is None:
        p_b, err = seg.portrait(1.0)
        if p_b is None:
            raise UnresolvedWall(f"segment end {tuple(seg.xb)} is on a wall: {err}")
    out = _scan(seg, 0.0, p_a, 1.0, p_b, 0)
    return sorted(out, key=lambda w: w.t)


def _scan(seg: _Segment, ta, pa, tb, pb, depth) -> list[WallPoint]:
    if portraits_agree(pa, pb):
        return []
    tol = seg.tol
    if depth > tol.max_bisect:
        raise UnresolvedWall(f"no clean wall after {tol.max_bisect} bisections near {tuple(seg.x(ta))}")
    if pa.counts() != pb.counts():
        return _scan_counts(seg, ta, pa, tb, pb, depth)
    if (tb - ta) * seg.L <= tol.tol_wall:
        return [_classify_bifurcation(seg, ta, pa, tb, pb)]
    seg.tick()
    tm = 0.5 * (ta + tb)
    pm, err = seg.portrait(tm)
    if pm is None:
        if isinstance(err, OnBifurcation):
            return [_classify_bifurcation(seg, ta, pa, tb, pb)]
        for frac in (0.3, 0.7, 0.1, 0.9):
            tm = ta + frac * (tb - ta)
            pm, err = seg.portrait(tm)
            if pm is not None:
                break
        if pm is None:
            raise UnresolvedWall(f"cannot sample between t={ta} and t={tb}: {err}")
    out = []
    if not portraits_agree(pa, pm):
        out += _scan(seg, ta, pa, tm, pm, depth + 1)
    if not portraits_agree(pm, pb):
        out += _scan(seg, tm, pm, tb, pb, depth + 1)
    return out


def _scan_counts(seg: _Segment, ta, pa, tb, pb, depth) -> list[WallPoint]:
    """Bisect a count change on counts alone, then rescan both remainders with portraits."""
    tol = seg.tol
    na, nb = len(pa.points), len(pb.points)
    lo, hi = ta, tb
    it = 0
    while (hi - lo) * seg.L > tol.tol_wall:
        it += 1
        seg.tick()
        if it > tol.max_bisect:
            raise UnresolvedWall(f"fold bisection did not converge near {tuple(seg.x(lo))}")
        tm = 0.5 * (lo + hi)
        nm = seg.counts(tm)
        if nm is None:
            break
        if nm == na:
            lo = tm
        elif nm == nb:
            hi = tm
        else:
            # more than one fold inside: split at the midpoint and recurse
            pm, err = seg.portrait(tm)
            if pm is None:
                raise UnresolvedWall(f"cannot sample at t={tm}: {err}")
            return _scan(seg, ta, pa, tm, pm, depth + 1) + _scan(seg, tm, pm, tb, pb, depth + 1)
    tw = 0.5 * (lo + hi)
    # clean side portraits, stepping away until extraction succeeds
    d = max(100 * tol.tol_wall / max(seg.L, 1e-300), 0.5 * (hi - lo))
    for _ in range(12):
        t1, t2 = max(ta, tw - d), min(tb, tw + d)
        p1, _ = seg.portrait(t1)
        p2, _ = seg.portrait(t2)
        if p1 is not None and p2 is not None and len(p1.points) == na and len(p2.points) == nb:
            break
        d *= 4.0
    else:
        raise UnresolvedWall(f"no clean portraits beside the fold at {tuple(seg.x(tw))}")
    xw = seg.x(tw)
    pair = _fold_pair(seg, xw, p1, p2)
    wp = WallPoint((float(xw[0]), float(xw[1])), FOLD, pair, tw, (p1, p2), match_points(p1.points, p2.points))
    out = []
    if t1 > ta:
        out += _scan(seg, ta, pa, t1, p1, depth + 1)
    out.append(wp)
    if t2 < tb:
        out += _scan(seg, t2, p2, tb, pb, depth + 1)
    return out


def _fold_pair(seg: _Segment, xw, p1, p2) -> BirthDeathPair:
    for eps in (seg.tol.side_eps, 0.1 * seg.tol.side_eps, 0.01 * seg.tol.side_eps):
        try:
            return detect_birth_death(seg.f, xw, seg.dir, eps, seg.window, seg.grid_n, seg.tol)
        except (NotAFold, DegeneratePoint) as exc:
            last = exc
    # fall back on the two side portraits themselves
    rich, poor, side = (p2, p1, 1) if len(p2.points) > len(p1.points) else (p1, p2, -1)
    matched = set(match_points(rich.points, poor.points))
    extra = [p for p in rich.points if p.id not in matched]
    if len(extra) != 2:
        raise UnresolvedWall(f"fold at {tuple(xw)} has no birth-death pair: {last}")
    hi, lo = sorted(extra, key=lambda p: -p.mu)
    return BirthDeathPair(hi, lo, side, (float(xw[0]), float(xw[1])), (float(seg.dir[0]), float(seg.dir[1])))


def _classify_bifurcation(seg: _Segment, ta, pa, tb, pb) -> WallPoint:
    """Identify the sliding saddle pair, refine by the splitting, attach clean sides."""
    tol = seg.tol
    tm = 0.5 * (ta + tb)
    link = _link_near(seg, tm, pa)
    if link is None:
        raise UnresolvedWall(f"portraits differ near {tuple(seg.x(tm))} but no saddle link is visible")
    s_a, j, s_b, k = link
    # refine along the segment with the splitting when it brackets a zero
    tw = tm
    try:
        sa, sb = pa.by_id[s_a], pa.by_id[s_b]
        ga = saddle_splitting(seg.f, seg.x(ta), sa, sb, branch=j, stable=k, fiber_window=seg.window, tol=tol)
        xb_ = seg.x(tb)
        gb = saddle_splitting(seg.f, xb_, _track(seg.f, xb_, sa, tol), _track(seg.f, xb_, sb, tol),
                              branch=j, stable=k, fiber_window=seg.window, tol=tol)
        if ga * gb < 0:
            t_loc, _ = locate_bifurcation(seg.f, seg.x(ta), seg.x(tb), sa, sb, branch=j, stable=k,
                                          fiber_window=seg.window, tol=tol)
            tw = ta + t_loc * (tb - ta)
    except (NoCrossing, ValueError, CBLabError) as exc:
        log.info("splitting refinement skipped near %s: %s", tuple(seg.x(tm)), exc)
    # clean sides
    d = max(tol.tol_wall / max(seg.L, 1e-300), 1e-9)
    for _ in range(16):
        p1, _ = seg.portrait(max(0.0, tw - d))
        p2, _ = seg.portrait(min(1.0, tw + d))
        if p1 is not None and p2 is not None and not portraits_agree(p1, p2):
            break
        d *= 4.0
    else:
        raise UnresolvedWall(f"no clean portraits beside the bifurcation at {tuple(seg.x(tw))}")
    ids = match_points(pa.points, p1.points)
    payload = _slide_payload(seg, p1, ids.get(s_a, s_a), j, ids.get(s_b, s_b), k)
    xw = seg.x(tw)
    return WallPoint((float(xw[0]), float(xw[1])), BIF, payload, tw, (p1, p2), match_points(p1.points, p2.points))


def _track(f, x, p: CriticalPoint, tol) -> CriticalPoint:
    return _saddle_at(f, x, p, tol)


def _link_near(seg: _Segment, tm, pa):
    """(s_a, j, s_b, k) in pa's ids from a non-strict portrait close to tm."""
    for d in (0.0, 1e-3, -1e-3, 1e-2, -1e-2):
        p, _ = seg.portrait(tm + d * (1.0 - tm if d > 0 else tm), strict=False)
        if p is not None and p.saddle_links:
            e = p.saddle_links[0]
            s_a, j, s_b = e.src, e.branch, e.dst
            sep = next(s for s in p.separatrices if s.owner == s_a and s.branch == j)
            yb = np.array(p.by_id[s_b].y)
            _, wb = p.frames[s_b]
            end = sep.polyline[-1]
            k = "S1" if (end - yb) @ np.asarray(wb) > 0 else "S2"
            ids = match_points(p.points, pa.points)
            return ids.get(s_a, s_a), j, ids.get(s_b, s_b), k
    return _link_from_sides(seg, pa)


def _link_from_sides(seg, pa):
    """Fallback: the one unstable and one stable branch whose termini change across the interval."""
    pb = None
    for t in (0.6, 0.75, 0.9):
        pb, _ = seg.portrait(t)
        if pb is not None and not portraits_agree(pa, pb):
            break
    if pb is None:
        return None
    m = match_points(pa.points, pb.points)
    changed = [(s, b) for s in pa.saddles for b in ("U1", "U2", "S1", "S2")
               if m.get(pa.branches[(s, b)], None) != pb.branches.get((m[s], b))]
    us = [c for c in changed if c[1][0] == "U"]
    ss = [c for c in changed if c[1][0] == "S"]
    if len(us) == 1 and len(ss) == 1 and us[0][0] != ss[0][0]:
        return us[0][0], us[0][1], ss[0][0], ss[0][1]
    return None


def _side_after_pass(polyline, centre, direction) -> int | None:
    """Sign along ``direction`` of where a path goes after its closest approach to ``centre``."""
    d = np.hypot(polyline[:, 0] - centre[0], polyline[:, 1] - centre[1])
    i = int(np.argmin(d))
    for q in polyline[i:]:
        if np.hypot(*(q - centre)) > max(10 * d[i], 1e-4):
            return 1 if (q - centre) @ direction > 0 else -1
    return None


def _slide_payload(seg: _Segment, p1: PhasePortrait, s_a, j, s_b, k) -> dict:
    """alpha and beta read from the source-side separatrices of the two saddles."""
    ya, yb = np.array(p1.by_id[s_a].y), np.array(p1.by_id[s_b].y)
    ua, wa = (np.asarray(v) for v in p1.frames[s_a])
    ub, wb = (np.asarray(v) for v in p1.frames[s_b])
    sep_j = next(s for s in p1.separatrices if s.owner == s_a and s.branch == j)
    sep_k = next(s for s in p1.separatrices if s.owner == s_b and s.branch == k)
    beta = _side_after_pass(sep_j.polyline, yb, ub)
    alpha = _side_after_pass(sep_k.polyline, ya, wa)
    if beta is None or alpha is None:
        raise UnresolvedWall("cannot tell which branches continue the saddle connection")
    return {"s_a": s_a, "j": j, "s_b": s_b, "k": k,
            "alpha": "S1" if alpha > 0 else "S2", "beta": "U1" if beta > 0 else "U2"}


# ----------------------------------------------------------------- diagram

@dataclass
class Chamber:
    id: str
    representative: tuple
    portrait: PhasePortrait
    size: int  # lattice points


@dataclass
class WallRecord:
    id: str
    kind: str
    polyline: np.ndarray
    between: tuple  # (a, b); for folds (rich, poor); for bifurcations (source, target)
    payload: object
    points: list = field(default_factory=list, repr=False)

    def middle(self) -> WallPoint:
        c = self.polyline[len(self.polyline) // 2]
        return min(self.points, key=lambda w: np.hypot(w.x[0] - c[0], w.x[1] - c[1]))


@dataclass
class CBDiagram:
    f: GeneratingFunction
    region: tuple
    fiber_window: tuple
    grid_m: int
    grid_n: int
    tol: Tolerances
    chambers: list
    walls: list
    codim2: list
    caustic: CausticCurve
    labels: np.ndarray = field(repr=False, default=None)
    lattice: np.ndarray = field(repr=False, default=None)

    def chamber(self, cid) -> Chamber:
        return next(c for c in self.chambers if c.id == cid)

    def wall(self, wid) -> WallRecord:
        return next(w for w in self.walls if w.id == wid)

    def walls_between(self, a, b) -> list:
        return [w for w in self.walls if set(w.between) == {a, b}]

    def complexes(self) -> dict:
        from .morse import build_complex
        return {c.id: build_complex(c.portrait) for c in self.chambers}

    def correction(self, a, b, wall_id=None):
        """Chain map from chamber a to chamber b across a wall, built on near-wall portraits."""
        from .walk import wall_correction
        ws = [self.wall(wall_id)] if wall_id else self.walls_between(a, b)
        if not ws:
            return None
        return wall_correction(self, ws[0], a, b)

    def monodromy_reports(self) -> list:
        from .walk import walk_monodromy
        return [walk_monodromy(self, pt) for pt in self.codim2 if pt["kind"] != "Cusp"]


class _DSU:
    def __init__(self, n):
        self.p = list(range(n))

    def find(self, i):
        while self.p[i] != i:
            self.p[i] = self.p[self.p[i]]
            i = self.p[i]
        return i

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.p[max(ra, rb)] = min(ra, rb)


def _robust_portrait(f, x, window, grid_n, tol, h):
    """Portrait at x, nudged deterministically off any wall it happens to sit on."""
    last = None
    for k in range(6):
        xx = (x[0] + k * 1.37e-3 * h, x[1] + k * 0.91e-3 * h)
        try:
            p = extract_portrait(f, xx, window, grid_n, tol)
        except (OnCaustic, OnBifurcation, NoTerminus, DegeneratePoint) as exc:
            last = exc
            continue
        # a pair about to be born passes the degeneracy test but its flow is unreliable
        near = [q for q in p.points if abs(q.eigenvalues[0] * q.eigenvalues[1]) < 1e3 * tol.tol_degenerate]
        if not near:
            return xx, p
        last = OnCaustic(f"critical point at {near[0].y} is nearly degenerate")
    raise UnresolvedWall(f"every nudge of lattice point {x} lands on a wall: {last}")


def _pmap(fn, items, workers):
    if workers <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _chain(points: np.ndarray, link: float) -> list[list[int]]:
    """Group points closer than ``link`` and order each group along its longest MST path."""
    n = len(points)
    if n == 0:
        return []
    if n == 1:
        return [[0]]
    tree = cKDTree(points)
    pairs = np.array(sorted(tree.query_pairs(link)), dtype=int).reshape(-1, 2)
    w = np.hypot(*(points[pairs[:, 0]] - points[pairs[:, 1]]).T) + 1e-15 if len(pairs) else np.zeros(0)
    g = coo_matrix((w, (pairs[:, 0], pairs[:, 1])), shape=(n, n)).tocsr()
    ncomp, lab = connected_components(g, directed=False)
    mst = minimum_spanning_tree(g)
    mst = mst + mst.T
    out = []
    for c in range(ncomp):
        members = np.flatnonzero(lab == c)
        if len(members) == 1:
            out.append([int(members[0])])
            continue
        start = int(members[0])
        order, _ = breadth_first_order(mst, start, directed=False)
        far = _farthest(mst, start)
        other = _farthest(mst, far)
        out.append(_tree_path(mst, far, other))
    return out


def _farthest(mst, s):
    from scipy.sparse.csgraph import shortest_path
    d = shortest_path(mst, directed=False, indices=s)
    d[~np.isfinite(d)] = -1
    return int(np.argmax(d))


def _tree_path(mst, a, b):
    from scipy.sparse.csgraph import shortest_path
    _, pred = shortest_path(mst, directed=False, indices=a, return_predecessors=True)
    path = [b]
    while path[-1] != a:
        path.append(int(pred[path[-1]]))
    return path[::-1]


def assemble_cb_diagram(f: GeneratingFunction, region=(-1.0, 1.0, -1.0, 1.0), grid_m: int = 16,
                        fiber_window=(-3.0, 3.0, -3.0, 3.0), grid_n: int = 16,
                        tol: Tolerances = DEFAULT_TOL, workers: int | None = None,
                        caustic_samples: int = 256) -> CBDiagram:
    """Chamber decomposition of ``region`` from an m x m lattice of portraits.

    Lattice points sit at cell centres. Neighbouring portraits that disagree
    get their walls located on the connecting edge; un-walled neighbours are
    merged into chambers. Results do not depend on the worker count.
    """
    if grid_m < 8:
        raise ValueError("grid_m must be >= 8")
    workers = worker_count() if workers is None else workers
    m = grid_m
    hx = (region[1] - region[0]) / m
    hy = (region[3] - region[2]) / m
    h = min(hx, hy)
    lattice = np.array([[(region[0] + (i + 0.5) * hx, region[2] + (j + 0.5) * hy)
                         for j in range(m)] for i in range(m)])
    flat = [tuple(lattice[i, j]) for i in range(m) for j in range(m)]
    res = _pmap(lambda x: _robust_portrait(f, x, fiber_window, grid_n, tol, h), flat, workers)
    xs = [r[0] for r in res]
    ps = [r[1] for r in res]

    def idx(i, j):
        return i * m + j

    edges = [(idx(i, j), idx(i + 1, j)) for i in range(m - 1) for j in range(m)]
    edges += [(idx(i, j), idx(i, j + 1)) for i in range(m) for j in range(m - 1)]
    edges.sort()

    def scan(e):
        a, b = e
        if portraits_agree(ps[a], ps[b]):
            return []
        return detect_wall_on_segment(f, xs[a], xs[b], fiber_window, grid_n, tol, ps[a], ps[b])

    found = _pmap(scan, edges, workers)
    dsu = _DSU(m * m)
    for (a, b), ws in zip(edges, found):
        if not ws:
            dsu.union(a, b)
    _merge_pockets(f, dsu, xs, ps, h, fiber_window, grid_n, tol)
    roots = sorted({dsu.find(i) for i in range(m * m)})
    cid = {r: f"U{k + 1}" for k, r in enumerate(roots)}
    labels = np.array([cid[dsu.find(i)] for i in range(m * m)], dtype=object).reshape(m, m)

    # wall points with their two chambers
    wp_all = []
    for (a, b), ws in zip(edges, found):
        for k, w in enumerate(ws):
            left = cid[dsu.find(a)] if k == 0 else None
            right = cid[dsu.find(b)] if k == len(ws) - 1 else None
            w.chambers = (left, right)
            wp_all.append((w, left, right))

    caustic = trace_caustic(f, region, fiber_window, caustic_samples, tol, grid_n, with_folds=False)
    walls = _build_walls(wp_all, h, caustic)

    # representatives: lattice point farthest from every wall point
    wall_xy = np.array([w.x for w, _, _ in wp_all]) if wp_all else np.zeros((0, 2))
    wtree = cKDTree(wall_xy) if len(wall_xy) else None
    chambers = []
    for r in roots:
        members = [i for i in range(m * m) if dsu.find(i) == r]
        if wtree is not None:
            dist = [wtree.query(xs[i])[0] for i in members]
        else:
            dist = [min(xs[i][0] - region[0], region[1] - xs[i][0], xs[i][1] - region[2], region[3] - xs[i][1])
                    for i in members]
        best = members[int(np.argmax(np.round(dist, 12)))]
        chambers.append(Chamber(cid[r], xs[best], ps[best], len(members)))
    diag = CBDiagram(f, tuple(region), tuple(fiber_window), m, grid_n, tol, chambers, walls, [], caustic,
                     labels, lattice)
    _check_adjacency(diag)
    diag.codim2 = _codim2(diag, h)
    return diag


def _merge_pockets(f, dsu, xs, ps, h, window, grid_n, tol) -> None:
    """Join lattice components cut apart only by the lattice (narrow cusp tips).

    Two components with agreeing portraits whose closest lattice points are
    within three cells are merged when the straight segment between those
    points crosses no wall.
    """
    n = len(xs)
    changed = True
    while changed:
        changed = False
        comps: dict = {}
        for i in range(n):
            comps.setdefault(dsu.find(i), []).append(i)
        roots = sorted(comps)
        pts = np.array(xs)
        for ai, ra in enumerate(roots):
            for rb in roots[ai + 1:]:
                if not portraits_agree(ps[ra], ps[rb]):
                    continue
                A, B = comps[ra], comps[rb]
                d = np.hypot(pts[A][:, None, 0] - pts[B][None, :, 0], pts[A][:, None, 1] - pts[B][None, :, 1])
                k = int(np.argmin(d))
                ia, ib = A[k // len(B)], B[k % len(B)]
                if d.flat[k] > 3.01 * h:
                    continue
                try:
                    ws = detect_wall_on_segment(f, xs[ia], xs[ib], window, grid_n, tol, ps[ia], ps[ib])
                except UnresolvedWall:
                    continue
                if not ws:
                    dsu.union(ra, rb)
                    changed = True
                    break
            if changed:
                break


def _build_walls(wp_all, h, caustic) -> list[WallRecord]:
    groups: dict = {}
    for w, left, right in wp_all:
        key = (w.kind, left, right)
        groups.setdefault(key, []).append(w)
    # bifurcation groups keyed without orientation of the crossing
    merged: dict = {}
    for (kind, left, right), ws in groups.items():
        if left is None or right is None:
            key = (kind, left, right)
        else:
            key = (kind,) + tuple(sorted((left, right)))
        merged.setdefault(key, []).extend(ws)
    walls = []
    counters = {FOLD: 0, BIF: 0}
    cusps = np.array(caustic.cusps).reshape(-1, 2)
    for key in sorted(merged, key=lambda k: tuple(str(v) for v in k)):
        kind = key[0]
        ws = sorted(merged[key], key=lambda w: w.x)
        pts = np.array([w.x for w in ws])
        # lattice edges near a cusp cross both fold arcs and see no change; the
        # blind zone has width h, so it reaches out to about h**(2/3) along the tip
        blind = max(2.0 * h, 1.5 * h ** (2.0 / 3.0))
        for chain in _chain(pts, 2.05 * h):
            pieces = [chain]
            if kind == FOLD and len(cusps):
                pieces = _split_at(pts, chain, cusps, blind, 2.05 * h)
            for piece in pieces:
                if not piece:
                    continue
                members = [ws[i] for i in piece]
                poly = pts[piece]
                mid = members[len(members) // 2]
                a, b = _sides(mid, key)
                counters[kind] += 1
                wid = ("C" if kind == FOLD else "B") + str(counters[kind])
                walls.append(WallRecord(wid, kind, poly, (a, b), mid.payload, members))
    return walls


def _split_at(pts, chain, cusps, radius, link):
    near = [bool(np.min(np.hypot(*(cusps - pts[i]).T)) < radius) for i in chain]
    closed = len(chain) > 2 and np.hypot(*(pts[chain[0]] - pts[chain[-1]])) < link
    if closed and any(near):
        k = near.index(True)
        chain = chain[k:] + chain[:k]
    out, cur = [], []
    for i in chain:
        near = np.min(np.hypot(*(cusps - pts[i]).T)) < radius
        if near:
            if cur:
                out.append(cur)
            cur = []
        else:
            cur.append(i)
    if cur:
        out.append(cur)
    return out


def _sides(w: WallPoint, key):
    """(a, b) with a on the source side: the richer chamber for folds, sides[0] for slides."""
    return key[1], key[2]


def _check_adjacency(diag: CBDiagram) -> None:
    for w in diag.walls:
        a, b = w.between
        if a is None or b is None:
            continue
        pa, pb = diag.chamber(a).portrait, diag.chamber(b).portrait
        na, nb = len(pa.points), len(pb.points)
        if w.kind == FOLD:
            if abs(na - nb) != 2:
                raise InconsistentAdjacency(f"fold wall {w.id} joins chambers with {na} and {nb} points")
            if nb > na:
                w.between = (b, a)
        elif na != nb:
            raise InconsistentAdjacency(f"bifurcation wall {w.id} joins chambers with {na} and {nb} points")
        else:
            # orient as (source, target) by the side the payload was read on
            src = next((p.chambers[0] for p in w.points if p.chambers[0] is not None), a)
            w.between = (a, b) if src == a else (b, a)


def _codim2(diag: CBDiagram, h) -> list[dict]:
    out = []
    for c in diag.caustic.cusps:
        blind = max(2.0 * h, 1.5 * h ** (2.0 / 3.0))
        near = [w.id for w in diag.walls if w.kind == FOLD and _end_dist(w, c) < 1.5 * blind]
        out.append({"kind": "Cusp", "location": [float(c[0]), float(c[1])], "walls": near, "loop": []})
    bends = []
    for w in diag.walls:
        if w.kind != BIF or len(w.polyline) == 0:
            continue
        for end in (w.polyline[0], w.polyline[-1]):
            if _on_boundary(end, diag.region, h):
                continue
            bends.append((w.id, end))
    used = set()
    fold_pts = [(w.id, p) for w in diag.walls if w.kind == FOLD for p in w.polyline]
    for i, (wid, p) in enumerate(bends):
        if i in used:
            continue
        cluster = [j for j, (_, q) in enumerate(bends) if np.hypot(*(q - p)) < 3 * h]
        used.update(cluster)
        centre = np.mean([bends[j][1] for j in cluster], axis=0)
        bw = sorted({bends[j][0] for j in cluster})
        cw = sorted({fid for fid, q in fold_pts if np.hypot(*(q - centre)) < 3 * h})
        if any(np.hypot(c[0] - centre[0], c[1] - centre[1]) < 3 * h for c in diag.caustic.cusps):
            continue
        if cw:
            kind = "CausticMeetsB"
        elif len(bw) == 4:
            kind = "BTransversal"
        elif len(bw) >= 5:
            kind = "BTriple"
        else:
            continue
        loop, walls = _loop_around(diag, centre, bw + cw, h)
        out.append({"kind": kind, "location": [float(centre[0]), float(centre[1])],
                    "walls": walls, "loop": loop, "radius": float(2 * h)})
    return out


def _end_dist(w: WallRecord, c) -> float:
    return float(min(np.hypot(*(w.polyline[0] - c)), np.hypot(*(w.polyline[-1] - c))))


def _on_boundary(p, region, h) -> bool:
    return min(p[0] - region[0], region[1] - p[0], p[1] - region[2], region[3] - p[1]) < 1.5 * h


def _loop_around(diag: CBDiagram, centre, wall_ids, h):
    """Chambers and walls in counter-clockwise order around ``centre``."""
    rays = []
    for wid in wall_ids:
        w = diag.wall(wid)
        d = np.hypot(*(w.polyline - centre).T)
        k = int(np.argmin(np.abs(d - 2 * h)))
        v = w.polyline[k] - centre
        rays.append((math.atan2(v[1], v[0]), wid))
    rays.sort()
    walls = [wid for _, wid in rays]
    loop = []
    for i, wid in enumerate(walls):
        nxt = walls[(i + 1) % len(walls)]
        common = set(diag.wall(wid).between) & set(diag.wall(nxt).between)
        loop.append(sorted(c for c in common if c is not None)[0] if common - {None} else None)
    # loop[i] lies between walls[i] and walls[i+1]; walk so that walls[i] leads out of loop[i]
    walls = walls[1:] + walls[:1]
    return loop, walls
