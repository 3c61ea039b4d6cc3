"""JSON documents and SVG drawings of portraits, caustics, diagrams and maps.

Every document carries ``"schema": "cb-lab/1"``. Floats are written with 12
significant digits and keys in sorted order, so equal inputs give equal bytes.
Exact rationals are written as ``{"num": n, "den": d}``.
"""
from __future__ import annotations

import datetime as _dt
import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np

from .corrections import DEGREES, ChainMap, MonodromyReport
from .critical import BirthDeathPair, CriticalPoint
from .flow import PhasePortrait
from .morse import MorseComplex, homology

SCHEMA = "cb-lab/1"
SIG_DIGITS = 12


# ------------------------------------------------------------ canonical JSON

def _num(v: float):
    v = float(v)
    if not math.isfinite(v):
        return None
    r = float(f"{v:.{SIG_DIGITS}g}")
    return 0.0 if r == 0 else r


def canonical(obj):
    """Plain JSON value with rounded floats and rationals as num/den pairs."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, Fraction):
        return {"num": obj.numerator, "den": obj.denominator}
    if hasattr(obj, "is_Rational") and obj.is_Rational:  # sympy rationals
        return {"num": int(obj.p), "den": int(obj.q)}
    if isinstance(obj, np.ndarray):
        return [canonical(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(doc: dict) -> str:
    body = dict(doc)
    body["schema"] = SCHEMA
    return json.dumps(canonical(body), sort_keys=True, indent=1, allow_nan=False) + "\n"


# ------------------------------------------------------------- documents

def point_dict(p: CriticalPoint) -> dict:
    return {"id": p.id, "kind": p.kind, "mu": p.mu, "y": list(p.y), "eigenvalues": list(p.eigenvalues)}


def _thin(poly, keep: int = 48):
    poly = np.asarray(poly, float)
    if len(poly) <= keep:
        return poly
    idx = np.unique(np.linspace(0, len(poly) - 1, keep).round().astype(int))
    return poly[idx]


def portrait_dict(p: PhasePortrait, with_paths: bool = True) -> dict:
    br = [{"saddle": s, "branch": b, "to": t} for (s, b), t in sorted(p.branches.items(), key=lambda kv: (str(kv[0][0]), kv[0][1]))]
    d = {
        "name": p.name,
        "x": None if p.x is None else list(p.x),
        "points": [point_dict(q) for q in p.points],
        "branches": br,
        "edges": sorted([[e.src, e.dst, e.branch] for e in p.edges], key=lambda e: tuple(map(str, e))),
        "local": bool(p.local),
    }
    if with_paths and p.separatrices:
        d["separatrices"] = [{"owner": s.owner, "branch": s.branch, "terminus": s.terminus.kind,
                              "polyline": _thin(s.polyline)} for s in p.separatrices]
    return d


def complex_dict(cx: MorseComplex) -> dict:
    h = homology(cx)
    return {
        "bases": {str(d): list(cx.bases[d]) for d in DEGREES},
        "d0": cx.d0.tolist(),
        "d1": cx.d1.tolist(),
        "orientation": {str(s): p for s, p in sorted((cx.orientation.patterns if cx.orientation else {}).items(),
                                                     key=lambda kv: str(kv[0]))},
        "square_is_zero": cx.square_is_zero(),
        "betti": list(h.betti),
        "cycles": {str(d): [[Fraction(int(v.p), int(v.q)) for v in vec] for vec in h.cycles[d]] for d in DEGREES},
    }


def chain_map_dict(m: ChainMap) -> dict:
    return {
        "source": m.source, "target": m.target, "wall": m.wall, "direction": m.direction, "note": m.note,
        "matrices": {str(d): m.mats[d].tolist() for d in DEGREES},
        "source_bases": {str(d): list(m.src_bases[d]) for d in DEGREES},
        "target_bases": {str(d): list(m.tgt_bases[d]) for d in DEGREES},
    }


def monodromy_dict(r: MonodromyReport) -> dict:
    return r.to_dict()


def caustic_dict(c) -> dict:
    return {
        "segments": [np.asarray(s) for s in c.segments],
        "cusps": [list(map(float, q)) for q in c.cusps],
        "folds": [_payload(p) for p in (c.folds or [])],
    }


def _payload(p):
    if isinstance(p, BirthDeathPair):
        return {"node": point_dict(p.node), "saddle": point_dict(p.saddle), "side": p.side,
                "wall_point": list(p.wall_point), "normal": list(p.normal)}
    if p is None:
        return None
    return dict(p)


def diagram_dict(diag) -> dict:
    """A computed CBDiagram or a synthetic one."""
    from .loci import CBDiagram
    if isinstance(diag, CBDiagram):
        cxs = diag.complexes()
        return {
            "kind": "computed",
            "polynomial": diag.f.to_literal(),
            "region": list(diag.region), "fiber_window": list(diag.fiber_window),
            "grid_m": diag.grid_m, "grid_n": diag.grid_n,
            "chambers": [{"id": c.id, "representative": list(c.representative), "lattice_points": c.size,
                          "counts": list(c.portrait.counts()), "portrait": portrait_dict(c.portrait, False),
                          "complex": complex_dict(cxs[c.id])} for c in diag.chambers],
            "walls": [{"id": w.id, "kind": w.kind, "between": list(w.between), "payload": _payload(w.payload),
                       "polyline": w.polyline} for w in diag.walls],
            "codim2": diag.codim2,
            "caustic": caustic_dict(diag.caustic),
        }
    cxs = diag.complexes()
    return {
        "kind": "synthetic",
        "name": diag.name,
        "chambers": [{"id": cid, "counts": list(P.counts()), "portrait": portrait_dict(P, False),
                      "complex": complex_dict(cxs[cid])} for cid, P in diag.portraits.items()],
        "walls": [{"id": w.id, "kind": w.kind, "between": list(w.between), "payload": dict(w.payload)}
                  for w in diag.walls],
        "codim2": diag.codim2,
    }


# ----------------------------------------------------------------- SVG

_MU_COLOUR = {2: "#c0392b", 1: "#2c3e50", 0: "#2874a6"}


class _Canvas:
    def __init__(self, rect, size=480, pad=20):
        self.x0, self.x1, self.y0, self.y1 = rect
        self.size, self.pad = size, pad
        self.items: list[str] = []

    def xy(self, p):
        u = self.pad + (p[0] - self.x0) / (self.x1 - self.x0) * (self.size - 2 * self.pad)
        v = self.size - self.pad - (p[1] - self.y0) / (self.y1 - self.y0) * (self.size - 2 * self.pad)
        return f"{u:.2f},{v:.2f}"

    def line(self, poly, colour="#333", width=1.2, dash=None):
        if len(poly) < 2:
            return
        d = f' stroke-dasharray="{dash}"' if dash else ""
        pts = " ".join(self.xy(p) for p in poly)
        self.items.append(f'<polyline points="{pts}" fill="none" stroke="{colour}" stroke-width="{width}"{d}/>')

    def dot(self, p, colour="#000", r=3.0):
        u, v = self.xy(p).split(",")
        self.items.append(f'<circle cx="{u}" cy="{v}" r="{r}" fill="{colour}"/>')

    def cross(self, p, colour="#8e44ad", r=5.0):
        u, v = (float(t) for t in self.xy(p).split(","))
        self.items.append(f'<path d="M{u - r},{v - r}L{u + r},{v + r}M{u - r},{v + r}L{u + r},{v - r}" '
                          f'stroke="{colour}" stroke-width="2"/>')

    def text(self, p, s, size=10):
        u, v = self.xy(p).split(",")
        self.items.append(f'<text x="{u}" y="{v}" font-size="{size}" font-family="sans-serif">{s}</text>')

    def rect(self, p, w, h, colour):
        u0, v0 = (float(t) for t in self.xy((p[0], p[1] + h)).split(","))
        u1, v1 = (float(t) for t in self.xy((p[0] + w, p[1])).split(","))
        self.items.append(f'<rect x="{u0:.2f}" y="{v0:.2f}" width="{u1 - u0:.2f}" height="{v1 - v0:.2f}" '
                          f'fill="{colour}" fill-opacity="0.25"/>')

    def svg(self) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.size}" height="{self.size}" '
                f'viewBox="0 0 {self.size} {self.size}">')
        return "\n".join([head, '<rect width="100%" height="100%" fill="white"/>', *self.items, "</svg>"]) + "\n"


def portrait_svg(p: PhasePortrait, window) -> str:
    c = _Canvas(window)
    for s in p.separatrices:
        c.line(s.polyline, "#7f8c8d" if s.branch[0] == "S" else "#16a085")
    for q in p.points:
        c.dot(q.y, _MU_COLOUR[q.mu])
        c.text((q.y[0], q.y[1]), f" {q.id}")
    return c.svg()


def caustic_svg(curve, region) -> str:
    c = _Canvas(region)
    for seg in curve.segments:
        c.line(seg, "#000")
    for q in curve.cusps:
        c.dot(q, "#e67e22", 4)
    return c.svg()


_PALETTE = ("#f1c40f", "#1abc9c", "#9b59b6", "#e74c3c", "#3498db", "#95a5a6", "#d35400", "#27ae60")


def diagram_svg(diag) -> str:
    from .loci import FOLD
    c = _Canvas(diag.region)
    m = diag.grid_m
    hx = (diag.region[1] - diag.region[0]) / m
    hy = (diag.region[3] - diag.region[2]) / m
    ids = sorted({str(v) for v in diag.labels.flat})
    colour = {cid: _PALETTE[i % len(_PALETTE)] for i, cid in enumerate(ids)}
    for i in range(m):
        for j in range(m):
            c.rect((diag.region[0] + i * hx, diag.region[2] + j * hy), hx, hy, colour[str(diag.labels[i, j])])
    for seg in diag.caustic.segments:
        c.line(seg, "#000", 1.5)
    for w in diag.walls:
        if w.kind != FOLD:
            c.line(w.polyline, "#000", 1.5, dash="5,3")
    for q in diag.caustic.cusps:
        c.dot(q, "#e67e22", 4)
    for pt in diag.codim2:
        if pt["kind"] != "Cusp":
            c.cross(pt["location"])
    for ch in diag.chambers:
        c.text(ch.representative, ch.id, 12)
    return c.svg()


def svg_name(subcommand: str, out_dir, now: _dt.datetime | None = None) -> Path:
    now = now or _dt.datetime.now(_dt.timezone.utc)
    return Path(out_dir) / f"{subcommand}-{now.strftime('%Y%m%dT%H%M%S%fZ')}.svg"
