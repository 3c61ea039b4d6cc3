"""Hand-specified phase portraits, walls and loops (no numerics).

A document lists named generators with their Morse index, then chambers. A
chamber is either explicit (each saddle names where its two stable branches
come from and where its two unstable branches go, ``null`` meaning the branch
leaves the picture) or derived from another chamber by

* ``collapse``: the birth-death pair (n, s) cancels. Branches that came from
  an unstable n now come from where s's other stable branch came from;
  branches that went to a stable n now go where s's other unstable branch
  went.
* ``slide``: crossing a bifurcation wall. The sliding unstable branch j of s_a
  now ends where s_b's unstable branch opposite to ``beta`` ended, and s_b's
  stable branch k now comes from where s_a's stable branch opposite to
  ``alpha`` came from.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema

from .corrections import (ChainMap, bifurcation_correction, caustic_correction, caustic_projection,
                          inverse_slide, monodromy)
from .errors import MissingCorrection, SchemaError
from .flow import BRANCHES, PhasePortrait
from .morse import BifurcationContext, MorseComplex, build_complex, solve_orientation

KIND_OF_MU = {2: "UnstableNode", 1: "Saddle", 0: "StableNode"}
OTHER = {"S1": "S2", "S2": "S1", "U1": "U2", "U2": "U1"}

_pair = {"type": "array", "minItems": 2, "maxItems": 2,
         "items": {"type": ["string", "null"]}}
_signs = {"type": "object", "additionalProperties": {
    "oneOf": [{"type": "integer", "minimum": 0, "maximum": 3},
              {"type": "object", "additionalProperties": False,
               "properties": {b: {"enum": [-1, 1]} for b in BRANCHES}}]}}

SCHEMA = {
    "type": "object",
    "required": ["schema", "points"],
    "additionalProperties": False,
    "properties": {
        "schema": {"const": "cb-lab/1"},
        "name": {"type": "string"},
        "comment": {"type": "string"},
        "labels": {"type": "object", "additionalProperties": {"type": "string"}},
        "points": {"type": "object", "additionalProperties": {"enum": [0, 1, 2]}},
        "pinned": _signs,
        "chambers": {"type": "object", "additionalProperties": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "points": {"type": "array", "items": {"type": "string"}},
                "saddles": {"type": "object", "additionalProperties": {
                    "type": "object", "additionalProperties": False,
                    "properties": {"S": _pair, "U": _pair}}},
                "collapse": {"type": "object", "required": ["from", "pair"],
                             "additionalProperties": False,
                             "properties": {"from": {"type": "string"},
                                            "pair": {"type": "array", "minItems": 2, "maxItems": 2,
                                                     "items": {"type": "string"}}}},
                "slide": {"type": "object", "required": ["from", "wall"],
                          "additionalProperties": False,
                          "properties": {"from": {"type": "string"}, "wall": {"type": "string"}}},
                "local": {"type": "boolean"},
                "pinned": _signs,
                "comment": {"type": "string"},
            }}},
        "walls": {"type": "array", "items": {
            "type": "object",
            "required": ["id", "kind", "between", "payload"],
            "additionalProperties": False,
            "properties": {
                "id": {"type": "string"},
                "kind": {"enum": ["CausticFold", "Bifurcation"]},
                "between": {"type": "array", "minItems": 2, "maxItems": 2, "items": {"type": "string"}},
                "payload": {"type": "object"},
                "convention": {"type": "boolean"},
                "comment": {"type": "string"},
            }}},
        "codim2": {"type": "array", "items": {
            "type": "object",
            "required": ["kind", "loop"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["Cusp", "CausticMeetsB", "BTransversal", "BTriple"]},
                "loop": {"type": "array", "items": {"type": "string"}, "minItems": 2},
                "walls": {"type": "array", "items": {"type": "string"}},
                "comment": {"type": "string"},
            }}},
    },
}

_BIF_PAYLOAD = {"type": "object", "required": ["s_a", "j", "s_b", "k", "alpha", "beta"],
                "additionalProperties": False,
                "properties": {"s_a": {"type": "string"}, "s_b": {"type": "string"},
                               "j": {"enum": ["U1", "U2"]}, "beta": {"enum": ["U1", "U2"]},
                               "k": {"enum": ["S1", "S2"]}, "alpha": {"enum": ["S1", "S2"]}}}
_FOLD_PAYLOAD = {"type": "object", "required": ["node", "saddle"], "additionalProperties": False,
                 "properties": {"node": {"type": "string"}, "saddle": {"type": "string"}}}


@dataclass(frozen=True)
class Generator:
    id: str
    mu: int

    @property
    def kind(self) -> str:
        return KIND_OF_MU[self.mu]

    @property
    def y(self):
        return None


@dataclass
class Wall:
    id: str
    kind: str
    between: tuple
    payload: dict
    convention: bool = False

    def context(self, mode: str = "coherent") -> BifurcationContext:
        p = self.payload
        return BifurcationContext(p["s_a"], p["j"], p["s_b"], p["k"], p["alpha"], p["beta"], mode)


def _path(parts) -> str:
    return "/" + "/".join(str(p) for p in parts)


def _validate(doc) -> None:
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        raise SchemaError(_path(exc.absolute_path), exc.message) from None
    for i, w in enumerate(doc.get("walls", [])):
        sch = _BIF_PAYLOAD if w["kind"] == "Bifurcation" else _FOLD_PAYLOAD
        try:
            jsonschema.validate(w["payload"], sch)
        except jsonschema.ValidationError as exc:
            raise SchemaError(_path(["walls", i, "payload", *exc.absolute_path]), exc.message) from None


def collapse(portrait: PhasePortrait, node: str, saddle: str, name: str | None = None) -> PhasePortrait:
    """Poorer-side portrait after the pair (node, saddle) cancels."""
    mu = portrait.by_id[node].mu
    if mu == 2:
        repl = {sb: portrait.branches[(saddle, sb)] for sb in ("S1", "S2")}
        links = [b for b in ("S1", "S2") if repl[b] == node]
        side = "S"
    elif mu == 0:
        repl = {ub: portrait.branches[(saddle, ub)] for ub in ("U1", "U2")}
        links = [b for b in ("U1", "U2") if repl[b] == node]
        side = "U"
    else:
        raise ValueError(f"{node} is not a node")
    if len(links) != 1:
        raise ValueError(f"{saddle} must be joined to {node} by exactly one branch, found {len(links)}")
    target = repl[OTHER[links[0]]]
    points = [p for p in portrait.points if p.id not in (node, saddle)]
    branches = {}
    for (s, b), t in portrait.branches.items():
        if s == saddle:
            continue
        if t == node and b[0] == side:
            t = target
        branches[(s, b)] = t
    return PhasePortrait(None, points, branches, local=portrait.local, name=name)


def slide(portrait: PhasePortrait, payload: dict, name: str | None = None) -> PhasePortrait:
    """Portrait on the other side of a bifurcation wall."""
    sa, j, sb, k = payload["s_a"], payload["j"], payload["s_b"], payload["k"]
    al, be = payload["alpha"], payload["beta"]
    br = portrait.branches
    if br[(sa, j)] != br[(sb, be)]:
        raise ValueError(f"{sa}.{j} does not follow {sb}.{be} on the source side")
    if br[(sb, k)] != br[(sa, al)]:
        raise ValueError(f"{sb}.{k} does not follow {sa}.{al} backward on the source side")
    branches = dict(br)
    branches[(sa, j)] = br[(sb, OTHER[be])]
    branches[(sb, k)] = br[(sa, OTHER[al])]
    return PhasePortrait(None, portrait.points, branches, local=portrait.local, name=name)


def same_portrait(a: PhasePortrait, b: PhasePortrait) -> bool:
    return ([p.id for p in a.points] == [p.id for p in b.points]
            and {k: v for k, v in a.branches.items()} == {k: v for k, v in b.branches.items()})


@dataclass
class SyntheticDiagram:
    name: str
    portraits: dict
    walls: list
    codim2: list
    pinned: dict = field(default_factory=dict)
    labels: dict = field(default_factory=dict)
    _complexes: dict | None = None

    # lookup --------------------------------------------------------------
    def __getitem__(self, cid) -> PhasePortrait:
        return self.portraits[cid]

    def wall(self, wid) -> Wall:
        for w in self.walls:
            if w.id == wid:
                return w
        raise KeyError(wid)

    def walls_between(self, a, b) -> list:
        return [w for w in self.walls if set(w.between) == {a, b}]

    def adjacency(self) -> list[tuple]:
        return [(w.between[0], w.between[1], w.id) for w in self.walls]

    # complexes -----------------------------------------------------------
    def orientation(self):
        ctx = []
        for w in self.walls:
            if w.kind == "Bifurcation":
                ctx.append(w.context("convention" if w.convention else "coherent"))
        return solve_orientation(list(self.portraits.values()), ctx, pinned=self.pinned)

    def complexes(self) -> dict:
        if self._complexes is None:
            o = self.orientation()
            self._complexes = {cid: build_complex(P, _restrict(o, P)) for cid, P in self.portraits.items()}
        return self._complexes

    def complex(self, cid) -> MorseComplex:
        return self.complexes()[cid]

    def correction(self, a, b, wall_id=None, strict: bool = False) -> ChainMap:
        """Chain map from chamber a's complex to chamber b's across their common wall."""
        cands = self.walls_between(a, b)
        if wall_id is not None:
            cands = [w for w in cands if w.id == wall_id]
        if not cands:
            raise MissingCorrection(f"no wall between {a} and {b}")
        w = cands[0]
        cx = self.complexes()
        if w.kind == "CausticFold":
            rich, poor = w.between
            pair = (w.payload["node"], w.payload["saddle"])
            if a == poor:
                return caustic_correction(cx[rich], cx[poor], pair, wall=w.id, names=(rich, poor))
            return caustic_projection(cx[rich], cx[poor], pair, wall=w.id, names=(rich, poor))
        src, tgt = w.between
        m = bifurcation_correction(cx[src], cx[tgt], w.context(), wall=w.id, names=(src, tgt),
                                   strict=strict)
        return m if a == src else inverse_slide(m)

    def monodromy_reports(self) -> list:
        out = []
        for pt in self.codim2:
            if pt["kind"] == "Cusp":
                continue
            out.append(monodromy(self, pt))
        return out


def _restrict(o, P):
    from .morse import Orientation
    return Orientation({s: o.patterns[s] for s in P.saddles})


def _explicit(cid, spec, doc, points_all) -> PhasePortrait:
    names = spec.get("points", list(points_all))
    pts = []
    for i, nm in enumerate(names):
        if nm not in points_all:
            raise SchemaError(_path(["chambers", cid, "points", i]), f"unknown point {nm!r}")
        pts.append(Generator(nm, points_all[nm]))
    present = {p.id: p.mu for p in pts}
    branches = {}
    sad = spec.get("saddles", {})
    for s, mu in present.items():
        if mu == 1:
            for b in BRANCHES:
                branches[(s, b)] = None
    for s, sp in sad.items():
        if present.get(s) != 1:
            raise SchemaError(_path(["chambers", cid, "saddles", s]), f"{s!r} is not a saddle of this chamber")
        for side, want in (("S", 2), ("U", 0)):
            for i, t in enumerate(sp.get(side, [None, None])):
                if t is None:
                    continue
                if t not in present:
                    raise SchemaError(_path(["chambers", cid, "saddles", s, side, i]),
                                      f"unknown point {t!r}")
                if present[t] not in (want, 1):
                    raise SchemaError(_path(["chambers", cid, "saddles", s, side, i]),
                                      f"{t!r} has index {present[t]}, cannot be a {side}-end")
                branches[(s, f"{side}{i + 1}")] = t
    return PhasePortrait(None, pts, branches, local=bool(spec.get("local", False)),
                         pinned=spec.get("pinned"), name=f"{doc.get('name', '')}:{cid}")


def load_synthetic(document) -> SyntheticDiagram:
    """Validate and expand a synthetic document (dict, JSON text, or path)."""
    if isinstance(document, (str, Path)) and not str(document).lstrip().startswith("{"):
        try:
            document = json.loads(Path(document).read_text())
        except OSError as exc:
            raise SchemaError("/", f"cannot read {document}: {exc}") from None
    elif isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError("/", f"not JSON: {exc}") from None
    doc = copy.deepcopy(document)
    _validate(doc)
    points_all = doc["points"]
    specs = doc.get("chambers", {})
    walls = [Wall(w["id"], w["kind"], tuple(w["between"]), w["payload"], w.get("convention", False))
             for w in doc.get("walls", [])]
    wall_ids = {w.id: w for w in walls}
    built: dict = {}

    def build(cid, stack=()):
        if cid in built:
            return built[cid]
        if cid not in specs:
            raise SchemaError(_path(["chambers", cid]), "unknown chamber")
        if cid in stack:
            raise SchemaError(_path(["chambers", cid]), "derivation cycle")
        spec = specs[cid]
        nm = f"{doc.get('name', '')}:{cid}"
        if "collapse" in spec:
            src = build(spec["collapse"]["from"], stack + (cid,))
            n, s = spec["collapse"]["pair"]
            try:
                P = collapse(src, n, s, nm)
            except (ValueError, KeyError) as exc:
                raise SchemaError(_path(["chambers", cid, "collapse"]), str(exc)) from None
        elif "slide" in spec:
            src = build(spec["slide"]["from"], stack + (cid,))
            w = wall_ids.get(spec["slide"]["wall"])
            if w is None or w.kind != "Bifurcation":
                raise SchemaError(_path(["chambers", cid, "slide", "wall"]), "not a bifurcation wall")
            payload = w.payload
            if spec["slide"]["from"] != w.between[0]:
                raise SchemaError(_path(["chambers", cid, "slide"]),
                                  "slides are taken from the wall's source side")
            try:
                P = slide(src, payload, nm)
            except (ValueError, KeyError) as exc:
                raise SchemaError(_path(["chambers", cid, "slide"]), str(exc)) from None
        else:
            P = _explicit(cid, spec, doc, points_all)
        if "local" in spec:
            P.local = bool(spec["local"])
        if "pinned" in spec:
            P.pinned = dict(spec["pinned"])
        try:
            P.validate()
        except ValueError as exc:
            raise SchemaError(_path(["chambers", cid]), str(exc)) from None
        built[cid] = P
        return P

    for cid in specs:
        build(cid)
    for i, w in enumerate(walls):
        for c in w.between:
            if c not in built:
                raise SchemaError(_path(["walls", i, "between"]), f"unknown chamber {c!r}")
        if w.kind == "CausticFold":
            rich = built[w.between[0]]
            for key in ("node", "saddle"):
                if w.payload[key] not in rich.by_id:
                    raise SchemaError(_path(["walls", i, "payload", key]),
                                      f"{w.payload[key]!r} is not in the richer chamber {w.between[0]!r}")
        else:
            src = built[w.between[0]]
            for key in ("s_a", "s_b"):
                if w.payload[key] not in src.by_id:
                    raise SchemaError(_path(["walls", i, "payload", key]), f"unknown saddle {w.payload[key]!r}")
    codim2 = []
    for i, c in enumerate(doc.get("codim2", [])):
        for cid in c["loop"]:
            if cid not in built:
                raise SchemaError(_path(["codim2", i, "loop"]), f"unknown chamber {cid!r}")
        codim2.append(dict(c))
    return SyntheticDiagram(doc.get("name", ""), built, walls, codim2,
                            pinned=doc.get("pinned", {}), labels=doc.get("labels", {}))


def builtin_names() -> list[str]:
    root = resources.files("cblab") / "data"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def builtin(name: str) -> SyntheticDiagram:
    root = resources.files("cblab") / "data"
    return load_synthetic(json.loads((root / f"{name}.json").read_text()))


def builtin_portrait(ref: str) -> PhasePortrait:
    """``"fig19_U1"`` -> chamber U1 of the built-in document fig19."""
    doc, _, cid = ref.rpartition("_")
    return builtin(doc)[cid]
