"""Ascending gradient flow dy/dt = grad f(y) - x, separatrices and phase portraits."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable

import numba
import numpy as np

from .config import DEFAULT_TOL, Tolerances
from .critical import SADDLE, STABLE, UNSTABLE, CriticalPoint, find_critical_points
from .errors import DegeneratePoint, NoTerminus, OnBifurcation, OnCaustic
from .polyfun import GeneratingFunction, _xy, eval_family, hessian

BRANCHES = ("U1", "U2", "S1", "S2")

CAPTURED, EXITED, TIMEOUT = 0, 1, 2


@dataclass(frozen=True)
class Terminus:
    kind: str  # "Node" | "Saddle" | "Exit"
    id: Hashable = None
    point: tuple[float, float] | None = None


@dataclass(frozen=True)
class Separatrix:
    owner: Hashable
    branch: str
    polyline: np.ndarray = field(repr=False, compare=False)
    terminus: Terminus


@dataclass(frozen=True)
class Edge:
    src: Hashable
    dst: Hashable
    branch: str
    owner: Hashable


class PhasePortrait:
    """Critical points plus, for each saddle, where each of its four branches goes.

    ``branches[(s, "S1")]`` is the id the stable branch comes from (an unstable
    node, or None if it comes from outside the window); ``branches[(s, "U1")]``
    is where the unstable branch ends. Saddle ids appear only at bifurcation
    points and are kept for diagnostics.
    """

    def __init__(self, x, points, branches, *, frames=None, separatrices=None,
                 local: bool = False, pinned=None, name: str | None = None):
        self.x = None if x is None else tuple(float(v) for v in _xy(x))
        self.points = list(points)
        self.by_id = {p.id: p for p in self.points}
        self.branches = dict(branches)
        self.frames = dict(frames or {})
        self.separatrices = list(separatrices or [])
        self.local = local
        self.pinned = dict(pinned or {})
        self.name = name

    # basic views -------------------------------------------------------
    def ids(self, mu: int) -> list:
        return [p.id for p in self.points if p.mu == mu]

    @property
    def saddles(self) -> list:
        return self.ids(1)

    @property
    def edges(self) -> list[Edge]:
        out = []
        for s in self.saddles:
            for b in BRANCHES:
                t = self.branches.get((s, b))
                if t is None:
                    continue
                out.append(Edge(t, s, b, s) if b[0] == "S" else Edge(s, t, b, s))
        return out

    @property
    def exits(self) -> list[tuple]:
        return [(s, b) for s in self.saddles for b in BRANCHES if self.branches.get((s, b)) is None]

    @property
    def saddle_links(self) -> list[Edge]:
        """Unstable branches ending on another saddle (only on a bifurcation wall)."""
        return [e for e in self.edges if e.branch[0] == "U" and self.by_id[e.src].mu == self.by_id[e.dst].mu]

    def counts(self) -> tuple[int, int, int]:
        return (len(self.ids(2)), len(self.ids(1)), len(self.ids(0)))

    def signature(self) -> tuple:
        """Critical counts plus the multiset of node-saddle edges, ignoring branch labels."""
        edges = sorted((str(e.src), str(e.dst)) for e in self.edges)
        return (self.counts(), tuple(edges))

    def validate(self) -> None:
        for s in self.saddles:
            for b in BRANCHES:
                if (s, b) not in self.branches:
                    raise ValueError(f"saddle {s} lacks branch {b}")
                t = self.branches[(s, b)]
                if t is None:
                    continue
                if t not in self.by_id:
                    raise ValueError(f"branch {s}.{b} ends at unknown point {t}")
                mu = self.by_id[t].mu
                if b[0] == "S" and mu not in (2, 1):
                    raise ValueError(f"stable branch {s}.{b} comes from {t} with mu={mu}")
                if b[0] == "U" and mu not in (0, 1):
                    raise ValueError(f"unstable branch {s}.{b} ends at {t} with mu={mu}")

    def __repr__(self) -> str:
        return f"PhasePortrait(x={self.x}, counts={self.counts()}, edges={len(self.edges)})"


def count_connections(portrait: PhasePortrait, p, q) -> list[Edge]:
    """Edges realizing the connection p -> q (0, 1 or 2 of them)."""
    return [e for e in portrait.edges if e.src == p and e.dst == q]


# integration -----------------------------------------------------------

@numba.njit(cache=True, nogil=True)
def _pe(ei, ej, c, y1, y2):
    s = 0.0
    for k in range(c.shape[0]):
        s += c[k] * y1 ** ei[k] * y2 ** ej[k]
    return s


@numba.njit(cache=True, nogil=True)
def _rhs(y1, y2, sign, x1, x2, a1, b1, c1, a2, b2, c2):
    return (sign * (_pe(a1, b1, c1, y1, y2) - x1), sign * (_pe(a2, b2, c2, y1, y2) - x2))


@numba.njit(cache=True, nogil=True)
def _dopri(y0, sign, x1, x2, a1, b1, c1, a2, b2, c2, crit, skip, cap, win,
           rtol, atol, max_time, max_steps):
    """Dormand-Prince 5(4) with capture / exit events. Returns status, index, t, path."""
    path = np.empty((max_steps + 1, 2))
    path[0, 0] = y0[0]
    path[0, 1] = y0[1]
    n = 1
    y1 = y0[0]
    y2 = y0[1]
    t = 0.0
    k1 = _rhs(y1, y2, sign, x1, x2, a1, b1, c1, a2, b2, c2)
    nrm = np.sqrt(k1[0] ** 2 + k1[1] ** 2)
    h = 1e-3 if nrm == 0.0 else min(1e-2, 1e-3 * (1.0 + np.sqrt(y1 * y1 + y2 * y2)) / nrm)
    h = max(h, 1e-8)
    while n <= max_steps:
        if t >= max_time:
            return TIMEOUT, -1, t, path[:n]
        p1 = y1 + h * (0.2 * k1[0])
        p2 = y2 + h * (0.2 * k1[1])
        k2 = _rhs(p1, p2, sign, x1, x2, a1, b1, c1, a2, b2, c2)
        p1 = y1 + h * (3 / 40 * k1[0] + 9 / 40 * k2[0])
        p2 = y2 + h * (3 / 40 * k1[1] + 9 / 40 * k2[1])
        k3 = _rhs(p1, p2, sign, x1, x2, a1, b1, c1, a2, b2, c2)
        p1 = y1 + h * (44 / 45 * k1[0] - 56 / 15 * k2[0] + 32 / 9 * k3[0])
        p2 = y2 + h * (44 / 45 * k1[1] - 56 / 15 * k2[1] + 32 / 9 * k3[1])
        k4 = _rhs(p1, p2, sign, x1, x2, a1, b1, c1, a2, b2, c2)
        p1 = y1 + h * (19372 / 6561 * k1[0] - 25360 / 2187 * k2[0] + 64448 / 6561 * k3[0] - 212 / 729 * k4[0])
        p2 = y2 + h * (19372 / 6561 * k1[1] - 25360 / 2187 * k2[1] + 64448 / 6561 * k3[1] - 212 / 729 * k4[1])
        k5 = _rhs(p1, p2, sign, x1, x2, a1, b1, c1, a2, b2, c2)
        p1 = y1 + h * (9017 / 3168 * k1[0] - 355 / 33 * k2[0] + 46732 / 5247 * k3[0] + 49 / 176 * k4[0] - 5103 / 18656 * k5[0])
        p2 = y2 + h * (9017 / 3168 * k1[1] - 355 / 33 * k2[1] + 46732 / 5247 * k3[1] + 49 / 176 * k4[1] - 5103 / 18656 * k5[1])
        k6 = _rhs(p1, p2, sign, x1, x2, a1, b1, c1, a2, b2, c2)
        n1 = y1 + h * (35 / 384 * k1[0] + 500 / 1113 * k3[0] + 125 / 192 * k4[0] - 2187 / 6784 * k5[0] + 11 / 84 * k6[0])
        n2 = y2 + h * (35 / 384 * k1[1] + 500 / 1113 * k3[1] + 125 / 192 * k4[1] - 2187 / 6784 * k5[1] + 11 / 84 * k6[1])
        k7 = _rhs(n1, n2, sign, x1, x2, a1, b1, c1, a2, b2, c2)
        e1 = h * (71 / 57600 * k1[0] - 71 / 16695 * k3[0] + 71 / 1920 * k4[0] - 17253 / 339200 * k5[0] + 22 / 525 * k6[0] - 1 / 40 * k7[0])
        e2 = h * (71 / 57600 * k1[1] - 71 / 16695 * k3[1] + 71 / 1920 * k4[1] - 17253 / 339200 * k5[1] + 22 / 525 * k6[1] - 1 / 40 * k7[1])
        s1 = atol + rtol * max(abs(y1), abs(n1))
        s2 = atol + rtol * max(abs(y2), abs(n2))
        err = np.sqrt(0.5 * ((e1 / s1) ** 2 + (e2 / s2) ** 2))
        if not np.isfinite(err):
            h *= 0.25
            continue
        if err <= 1.0:
            t += h
            y1 = n1
            y2 = n2
            k1 = k7
            path[n, 0] = y1
            path[n, 1] = y2
            n += 1
            if y1 < win[0] or y1 > win[1] or y2 < win[2] or y2 > win[3]:
                return EXITED, -1, t, path[:n]
            for i in range(crit.shape[0]):
                if i == skip:
                    continue
                d = np.sqrt((y1 - crit[i, 0]) ** 2 + (y2 - crit[i, 1]) ** 2)
                if d < cap:
                    return CAPTURED, i, t, path[:n]
            fac = 0.9 * err ** -0.2 if err > 1e-10 else 5.0
            h *= min(5.0, max(0.2, fac))
        else:
            h *= max(0.1, 0.9 * err ** -0.2)
        if h < 1e-14:
            return TIMEOUT, -1, t, path[:n]
    return TIMEOUT, -1, t, path[:n]


def _grad_arrays(f: GeneratingFunction):
    return f.grad_arrays


def integrate_flow(f: GeneratingFunction, x, y0, direction: str = "forward",
                   max_time: float | None = None, region=(-3.0, 3.0, -3.0, 3.0),
                   points: list[CriticalPoint] | None = None, skip=None,
                   tol: Tolerances = DEFAULT_TOL, capture: float | None = None,
                   max_steps: int = 200000):
    """Integrate from y0 until capture by a critical point, exit from region, or timeout.

    Returns ``(polyline, Terminus)``. ``points`` defaults to all critical
    points in the region; ``skip`` excludes one id from capture (the owner of a
    separatrix that starts inside its own capture ball).
    """
    x1, x2 = _xy(x)
    if points is None:
        points = find_critical_points(f, (x1, x2), region, tol=tol)
    crit = np.array([p.y for p in points], dtype=float).reshape(-1, 2)
    cap = tol.tol_capture if capture is None else capture
    y0 = np.asarray(_xy(y0), dtype=float)
    for i, p in enumerate(points):
        if p.id != skip and np.hypot(*(y0 - crit[i])) < cap:
            return y0.reshape(1, 2), Terminus("Saddle" if p.kind == SADDLE else "Node", p.id, p.y)
    sign = 1.0 if direction == "forward" else -1.0
    skip_idx = next((i for i, p in enumerate(points) if p.id == skip), -1)
    mt = tol.max_time if max_time is None else max_time
    status, idx, t, path = _dopri(y0, sign, x1, x2, *_grad_arrays(f), crit, skip_idx, cap,
                                  np.asarray(region, dtype=float), tol.rtol, tol.atol, mt, max_steps)
    path = np.array(path)
    if status == CAPTURED:
        p = points[idx]
        return path, Terminus("Saddle" if p.kind == SADDLE else "Node", p.id, p.y)
    if status == EXITED:
        return path, Terminus("Exit", None, (float(path[-1, 0]), float(path[-1, 1])))
    g = np.array(_xy(path[-1])) if len(path) else y0
    speed = np.hypot(*(np.array([float(f.g1(*g)), float(f.g2(*g))]) - (x1, x2)))
    if speed > tol.tol_root:
        raise NoTerminus(f"no terminus after t={t:.3g} from {tuple(y0)} (|grad f_x|={speed:.3g})")
    return path, Terminus("Exit", None, (float(g[0]), float(g[1])))


def saddle_frame(f: GeneratingFunction, p: CriticalPoint):
    """(u, w, lam_u, lam_s): unstable eigenvector with first nonzero entry positive,
    stable eigenvector oriented so det(u, w) > 0."""
    ev, vec = np.linalg.eigh(hessian(f, p.y))
    w = vec[:, 0]
    u = vec[:, 1]
    if u[0] < 0 or (u[0] == 0 and u[1] < 0):
        u = -u
    if u[0] * w[1] - u[1] * w[0] < 0:
        w = -w
    return u, w, float(ev[1]), float(ev[0])


def _length_scale(points: list[CriticalPoint], p: CriticalPoint) -> float:
    d = [np.hypot(p.y[0] - q.y[0], p.y[1] - q.y[1]) for q in points if q.id != p.id]
    return min([1.0] + d)


def trace_separatrices(f: GeneratingFunction, x, points, region, tol: Tolerances = DEFAULT_TOL):
    x1, x2 = _xy(x)
    scale = min([_length_scale(points, p) for p in points] + [1.0])
    cap = min(tol.tol_capture, 0.05 * scale)
    seps, frames = [], {}
    for p in points:
        if p.kind != SADDLE:
            continue
        u, w, lu, ls = saddle_frame(f, p)
        frames[p.id] = (tuple(u), tuple(w))
        # never start closer than the integrator's absolute error can resolve
        eps = max(tol.saddle_eps * _length_scale(points, p), 1e3 * tol.atol)
        mt = max(tol.max_time, 80.0 / min(abs(lu), abs(ls)))
        y = np.array(p.y)
        for b, d, direction in (("U1", u, "forward"), ("U2", -u, "forward"),
                                ("S1", w, "backward"), ("S2", -w, "backward")):
            path, term = integrate_flow(f, (x1, x2), y + eps * d, direction, mt, region,
                                        points, skip=p.id, tol=tol, capture=cap)
            seps.append(Separatrix(p.id, b, path, term))
    return seps, frames


def extract_portrait(f: GeneratingFunction, x, fiber_window=(-3.0, 3.0, -3.0, 3.0),
                     grid_n: int = 16, tol: Tolerances = DEFAULT_TOL,
                     strict: bool = True) -> PhasePortrait:
    """Critical points and the termini of all saddle branches at base point x.

    With ``strict`` a saddle-to-saddle terminus raises OnBifurcation; otherwise
    it is kept as a diagnostic link.
    """
    try:
        points = find_critical_points(f, x, fiber_window, grid_n, tol)
    except DegeneratePoint as exc:
        raise OnCaustic(str(exc)) from None
    seps, frames = trace_separatrices(f, x, points, fiber_window, tol)
    branches = {}
    kinds = {p.id: p.kind for p in points}
    for sp in seps:
        t = sp.terminus
        if t.kind == "Saddle":
            if strict:
                raise OnBifurcation(f"x={_xy(x)}: branch {sp.owner}.{sp.branch} runs into saddle {t.id}")
            branches[(sp.owner, sp.branch)] = t.id
        elif t.kind == "Node":
            want = UNSTABLE if sp.branch[0] == "S" else STABLE
            if kinds[t.id] != want:
                raise NoTerminus(f"branch {sp.owner}.{sp.branch} captured by {kinds[t.id]} {t.id}")
            branches[(sp.owner, sp.branch)] = t.id
        else:
            branches[(sp.owner, sp.branch)] = None
    return PhasePortrait(x, points, branches, frames=frames, separatrices=seps)


def monotone_along(f: GeneratingFunction, x, path: np.ndarray, direction: str = "forward",
                   slack: float = 1e-9) -> bool:
    """f_x never decreases along a forward path (never increases along a backward one)."""
    vals = np.array([eval_family(f, x, y) for y in path])
    if direction != "forward":
        vals = -vals
    return bool(np.all(np.diff(vals) >= -slack))
