"""Critical points of f_x and birth-death pairs at fold points."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy.optimize import linear_sum_assignment

from .config import DEFAULT_TOL, Tolerances
from .errors import DegeneratePoint, NotAFold
from .polyfun import GeneratingFunction, _xy, hessian, newton_root

UNSTABLE = "UnstableNode"
SADDLE = "Saddle"
STABLE = "StableNode"
DEGENERATE = "Degenerate"
KIND_OF_MU = {2: UNSTABLE, 1: SADDLE, 0: STABLE}


@dataclass(frozen=True)
class CriticalPoint:
    y: tuple[float, float]
    kind: str
    mu: int
    eigenvalues: tuple[float, float]
    id: int = -1

    def with_id(self, i: int) -> "CriticalPoint":
        return CriticalPoint(self.y, self.kind, self.mu, self.eigenvalues, i)


@dataclass(frozen=True)
class BirthDeathPair:
    p_high: CriticalPoint
    p_low: CriticalPoint
    side: int  # +1 if the pair lives on the x + eps*normal side
    wall_point: tuple[float, float] = (0.0, 0.0)
    normal: tuple[float, float] = (1.0, 0.0)

    @property
    def node(self) -> CriticalPoint:
        return self.p_low if self.p_high.kind == SADDLE else self.p_high

    @property
    def saddle(self) -> CriticalPoint:
        return self.p_high if self.p_high.kind == SADDLE else self.p_low


def classify(f: GeneratingFunction, y, tol_degenerate: float = DEFAULT_TOL.tol_degenerate) -> CriticalPoint:
    H = hessian(f, y)
    ev = np.linalg.eigvalsh(H)
    y = tuple(float(v) for v in y)
    if abs(ev[0] * ev[1]) < tol_degenerate:
        return CriticalPoint(y, DEGENERATE, int((ev > 0).sum()), (float(ev[0]), float(ev[1])))
    mu = int((ev > 0).sum())
    return CriticalPoint(y, KIND_OF_MU[mu], mu, (float(ev[0]), float(ev[1])))


@numba.njit(cache=True, nogil=True)
def _peval(ei, ej, c, y1, y2):
    s = 0.0
    for k in range(c.shape[0]):
        s += c[k] * y1 ** ei[k] * y2 ** ej[k]
    return s


@numba.njit(cache=True, nogil=True)
def _newton_batch(seeds, x1, x2, g1, g2, h11, h12, h22, max_step, n_iter):
    n = seeds.shape[0]
    out = np.empty((n, 2))
    res = np.empty(n)
    for k in range(n):
        a = seeds[k, 0]
        b = seeds[k, 1]
        r1 = _peval(g1[0], g1[1], g1[2], a, b) - x1
        r2 = _peval(g2[0], g2[1], g2[2], a, b) - x2
        nr = np.sqrt(r1 * r1 + r2 * r2)
        for _ in range(n_iter):
            if nr < 1e-13:
                break
            p = _peval(h11[0], h11[1], h11[2], a, b)
            q = _peval(h12[0], h12[1], h12[2], a, b)
            s = _peval(h22[0], h22[1], h22[2], a, b)
            det = p * s - q * q
            if det == 0.0:
                break
            d1 = (s * r1 - q * r2) / det
            d2 = (p * r2 - q * r1) / det
            ln = np.sqrt(d1 * d1 + d2 * d2)
            if ln > max_step:
                d1 *= max_step / ln
                d2 *= max_step / ln
            t = 1.0
            ok = False
            for _h in range(30):
                na = a - t * d1
                nb = b - t * d2
                s1 = _peval(g1[0], g1[1], g1[2], na, nb) - x1
                s2 = _peval(g2[0], g2[1], g2[2], na, nb) - x2
                nn = np.sqrt(s1 * s1 + s2 * s2)
                if nn < nr:
                    ok = True
                    break
                t *= 0.5
            if not ok:
                break
            a, b, r1, r2, nr = na, nb, s1, s2, nn
        out[k, 0] = a
        out[k, 1] = b
        res[k] = nr
    return out, res


def _packed(f: GeneratingFunction):
    pk = getattr(f, "_newton_pack", None)
    if pk is None:
        pk = tuple(p.arrays() for p in (f.g1, f.g2, f.h11, f.h12, f.h22))
        f._newton_pack = pk
    return pk


def _in_window(y, window) -> bool:
    return window[0] <= y[0] <= window[1] and window[2] <= y[1] <= window[3]


def canonical_sort(points: list[CriticalPoint]) -> list[CriticalPoint]:
    pts = sorted(points, key=lambda p: (round(p.y[0], 6), round(p.y[1], 6)))
    return [p.with_id(i) for i, p in enumerate(pts)]


def find_critical_points(f: GeneratingFunction, x, fiber_window=(-3.0, 3.0, -3.0, 3.0),
                         grid_n: int = 16, tol: Tolerances = DEFAULT_TOL,
                         allow_degenerate: bool = False) -> list[CriticalPoint]:
    """All roots of grad f(y) = x reachable from a grid_n x grid_n seed lattice.

    Near-degenerate roots are re-seeded along their soft eigendirection so a
    nearly merged partner is not lost. Raises DegeneratePoint when a root has
    |det H| below tolerance, unless ``allow_degenerate``.
    """
    if grid_n < 8:
        raise ValueError("grid_n must be >= 8")
    x1, x2 = _xy(x)
    w = fiber_window
    g1 = np.linspace(w[0], w[1], grid_n)
    g2 = np.linspace(w[2], w[3], grid_n)
    seeds = np.array([(a, b) for a in g1 for b in g2])
    size = max(w[1] - w[0], w[3] - w[2])
    pk = _packed(f)

    def run(seed_arr):
        ys, res = _newton_batch(np.ascontiguousarray(seed_arr, dtype=np.float64), x1, x2,
                                *pk, 0.25 * size, 80)
        good, stalled = [], []
        for y, r in zip(ys, res):
            if not np.isfinite(r) or r > 1e-6:
                continue
            # most seeds land on the same few roots; polish each root once
            if any(abs(y[0] - g[0]) + abs(y[1] - g[1]) < tol.tol_merge for g in good):
                continue
            # seeds stalled next to a just-vanished pair all fail the same way
            if r > 1e-12 and any(abs(y[0] - g[0]) + abs(y[1] - g[1]) < 1e-3 for g in stalled):
                continue
            yp = newton_root(f, (x1, x2), y, tol=tol.tol_root)
            if yp is not None:
                good.append(yp)
            elif r > 1e-12:
                stalled.append(y)
        return good

    roots: list[np.ndarray] = []

    def add(cands):
        new = []
        for y in cands:
            if not _in_window(y, w):
                continue
            if any(np.hypot(*(y - r)) < tol.tol_merge for r in roots):
                continue
            roots.append(y)
            new.append(y)
        return new

    fresh = add(run(seeds))
    # soft-direction reseeding around near-degenerate roots
    for _ in range(3):
        extra = []
        for y in fresh:
            H = hessian(f, y)
            ev, vec = np.linalg.eigh(H)
            k = int(np.argmin(np.abs(ev)))
            scale = abs(ev[k]) / max(1.0, np.abs(ev).max())
            if scale < 0.5:
                v = vec[:, k]
                for s in (0.5, 1.0, 2.0, 4.0):
                    d = s * max(scale, 1e-6) * v
                    extra.extend([y + d, y - d])
        if not extra:
            break
        fresh = add(run(np.array(extra)))
        if not fresh:
            break

    pts = []
    for y in roots:
        cp = classify(f, y, tol.tol_degenerate)
        if cp.kind == DEGENERATE and not allow_degenerate:
            raise DegeneratePoint(y, f"x={(x1, x2)} has a degenerate critical point at y={tuple(y)}")
        pts.append(cp)
    if not allow_degenerate:
        # a double root splits into two Newton roots about sqrt(tol_root) apart
        twin = 1e3 * tol.tol_merge
        for i, p in enumerate(pts):
            for q in pts[i + 1:]:
                if abs(p.mu - q.mu) == 1 and math.hypot(p.y[0] - q.y[0], p.y[1] - q.y[1]) < twin:
                    raise DegeneratePoint(p.y, f"x={(x1, x2)} has a degenerate critical point near y={p.y}")
    return canonical_sort(pts)


def match_points(a: list[CriticalPoint], b: list[CriticalPoint]) -> dict[int, int]:
    """Nearest-neighbour assignment of ids in ``a`` to ids in ``b`` (same kind only)."""
    if not a or not b:
        return {}
    cost = np.array([[np.hypot(p.y[0] - q.y[0], p.y[1] - q.y[1]) + (0 if p.kind == q.kind else 1e6)
                      for q in b] for p in a])
    ri, ci = linear_sum_assignment(cost)
    return {a[i].id: b[j].id for i, j in zip(ri, ci) if cost[i, j] < 1e6}


def detect_birth_death(f: GeneratingFunction, x, normal, eps: float | None = None,
                       fiber_window=(-3.0, 3.0, -3.0, 3.0), grid_n: int = 16,
                       tol: Tolerances = DEFAULT_TOL) -> BirthDeathPair:
    """Sample x +- eps*normal and pair the two extra points of the richer side."""
    x = np.asarray(_xy(x))
    nv = np.asarray(_xy(normal), dtype=float)
    nv = nv / np.linalg.norm(nv)
    eps = tol.side_eps if eps is None else eps
    plus = find_critical_points(f, x + eps * nv, fiber_window, grid_n, tol)
    minus = find_critical_points(f, x - eps * nv, fiber_window, grid_n, tol)
    if len(plus) == len(minus):
        raise NotAFold(f"equal point counts ({len(plus)}) on both sides of {tuple(x)}")
    if abs(len(plus) - len(minus)) != 2:
        raise NotAFold(f"point counts {len(minus)} / {len(plus)} differ by more than 2")
    # the degenerate point itself, if any, must have a rank-1 Hessian
    try:
        find_critical_points(f, x, fiber_window, grid_n, tol)
    except DegeneratePoint as exc:
        ev = np.linalg.eigvalsh(hessian(f, exc.y))
        if np.all(np.abs(ev) < tol.tol_degenerate):
            raise NotAFold(f"rank 0 Hessian at {exc.y}") from None
    rich, poor, side = (plus, minus, 1) if len(plus) > len(minus) else (minus, plus, -1)
    matched = set(match_points(rich, poor))
    extra = [p for p in rich if p.id not in matched]
    if len(extra) != 2:
        raise NotAFold("could not isolate the birth-death pair")
    hi, lo = sorted(extra, key=lambda p: -p.mu)
    if hi.mu - lo.mu != 1 or SADDLE not in (hi.kind, lo.kind):
        raise NotAFold(f"extra points {hi.kind}/{lo.kind} are not a birth-death pair")
    return BirthDeathPair(hi, lo, side, (float(x[0]), float(x[1])), (float(nv[0]), float(nv[1])))
