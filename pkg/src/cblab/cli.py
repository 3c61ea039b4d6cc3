"""Command-line entry point.

Exit codes: 0 on success, 1 on a domain error (the error's class name and
message go to standard error), 2 on a configuration or usage error.
"""
from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

from . import report
from .config import RunConfig, worker_count
from .corrections import WeightInput, holomorphic_weight, induces_isomorphism, is_chain_map
from .critical import canonical_sort, find_critical_points
from .errors import CBLabError, ConfigError, NoCoherentOrientation
from .flow import extract_portrait
from .loci import assemble_cb_diagram, trace_caustic
from .morse import build_complex, homology
from .polyfun import GeneratingFunction, legendre_sheet
from .synthetic import builtin, builtin_names, load_synthetic

# fixtures whose documents are meant to fail, and the error they must raise
EXPECTED_FAILURES = {"fig16": NoCoherentOrientation}


class SelftestFailed(CBLabError):
    pass


def preset_names() -> list[str]:
    root = resources.files("cblab") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def _load_config(args) -> RunConfig:
    if args.config and args.preset:
        raise ConfigError("give --config or --preset, not both")
    if args.preset:
        if args.preset not in preset_names():
            raise ConfigError(f"unknown preset {args.preset!r}; choose from {preset_names()}")
        text = (resources.files("cblab") / "presets" / f"{args.preset}.json").read_text()
        return RunConfig.from_dict(json.loads(text))
    if args.config:
        return RunConfig.load(args.config)
    return None


def _pair(text: str, what: str) -> tuple[float, float]:
    try:
        a, b = (float(t) for t in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"{what} must look like a,b (got {text!r})") from exc
    return a, b


def _need(cfg, what):
    if cfg is None or cfg.terms is None:
        raise ConfigError(f"{what} needs a polynomial: pass --config FILE or --preset NAME")
    return cfg


def _synthetic(args, cfg):
    name = getattr(args, "synthetic", None) or (cfg.synthetic if cfg else None)
    if name is None:
        return None
    path = Path(name)
    if path.suffix == ".json" and path.exists():
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
        return load_synthetic(doc)
    if name not in builtin_names():
        raise ConfigError(f"no built-in synthetic document {name!r}")
    return builtin(name)


def _diagram(args, cfg):
    syn = _synthetic(args, cfg)
    if syn is not None:
        return syn
    cfg = _need(cfg, args.command)
    return assemble_cb_diagram(GeneratingFunction.from_literal(cfg.terms), cfg.region, cfg.grid_m,
                               cfg.fiber_window, cfg.grid_n, cfg.tolerances, workers=worker_count())


# ---------------------------------------------------------------- commands

def cmd_portrait(args, cfg):
    cfg = _need(cfg, "portrait")
    f = GeneratingFunction.from_literal(cfg.terms)
    x = _pair(args.at, "--at")
    p = extract_portrait(f, x, cfg.fiber_window, cfg.grid_n, cfg.tolerances)
    cx = build_complex(p)
    doc = {"command": "portrait", "portrait": report.portrait_dict(p), "complex": report.complex_dict(cx)}
    return doc, {"portrait": lambda: report.portrait_svg(p, cfg.fiber_window)}


def cmd_caustic(args, cfg):
    cfg = _need(cfg, "caustic")
    f = GeneratingFunction.from_literal(cfg.terms)
    c = trace_caustic(f, cfg.region, cfg.fiber_window, tol=cfg.tolerances, grid_n=cfg.grid_n)
    return {"command": "caustic", "caustic": report.caustic_dict(c)}, {
        "caustic": lambda: report.caustic_svg(c, cfg.region)}


def cmd_diagram(args, cfg):
    d = _diagram(args, cfg)
    svg = {}
    if hasattr(d, "labels"):
        svg["diagram"] = lambda: report.diagram_svg(d)
    return {"command": "diagram", "diagram": report.diagram_dict(d)}, svg


def cmd_homology(args, cfg):
    d = _diagram(args, cfg)
    cxs = d.complexes()
    out = {cid: list(homology(cx).betti) for cid, cx in sorted(cxs.items())}
    return {"command": "homology", "betti": out}, {}


def cmd_wallcross(args, cfg):
    d = _diagram(args, cfg)
    try:
        w = d.wall(args.wall)
    except (KeyError, StopIteration) as exc:
        raise ConfigError(f"no wall {args.wall!r}") from exc
    a, b = w.between
    if args.source:
        if args.source not in (a, b):
            raise ConfigError(f"wall {args.wall} separates {a} and {b}, not {args.source}")
        a, b = (args.source, b if args.source == a else a)
    m = d.correction(a, b, w.id)
    return {"command": "wallcross", "map": report.chain_map_dict(m)}, {}


def cmd_monodromy(args, cfg):
    d = _diagram(args, cfg)
    reports = d.monodromy_reports()
    return {"command": "monodromy", "reports": [r.to_dict() for r in reports],
            "all_identity": all(r.is_identity for r in reports)}, {}


def cmd_weight(args, cfg):
    cfg = _need(cfg, "weight")
    f = GeneratingFunction.from_literal(cfg.terms)
    x = _pair(args.at, "--at")
    w = _pair(args.w, "--w")
    pts = canonical_sort(find_critical_points(f, x, cfg.fiber_window, cfg.grid_n, cfg.tolerances))
    if not 0 <= args.sheet < len(pts):
        raise ConfigError(f"--sheet must be in [0, {len(pts) - 1}] at x={x}; {len(pts)} sheets here")
    sh = legendre_sheet(f, x, pts[args.sheet].y, cfg.tolerances.tol_root, cfg.tolerances.tol_degenerate)
    key = args.chamber if args.chamber else "default"
    A = cfg.connection.get(key, 0.0)
    mod, arg = holomorphic_weight(WeightInput(sh.h, sh.y, A, w))
    return {"command": "weight", "x": list(x), "sheet": args.sheet, "y": list(sh.y), "h": sh.h, "A": A,
            "w": list(w), "modulus": mod, "argument": arg}, {}


def run_selftest() -> dict:
    """Load every built-in document and check squares, corrections and loops."""
    results = {}
    for name in builtin_names():
        row = {"ok": True, "checks": 0}
        try:
            d = builtin(name)
            cxs = d.complexes()
            for cid, cx in cxs.items():
                row["checks"] += 1
                if not d[cid].local and not cx.square_is_zero():
                    row["ok"] = False
                    row["failure"] = f"d1.d0 != 0 in {cid}"
            for w in d.walls:
                a, b = w.between
                if d[a].local or d[b].local:
                    # fragments of larger pictures: only their portraits are meaningful
                    continue
                for s, t in ((a, b), (b, a)):
                    m = d.correction(s, t, w.id)
                    row["checks"] += 1
                    if not is_chain_map(m, cxs[s], cxs[t]) or not induces_isomorphism(m, cxs[s], cxs[t]):
                        row["ok"] = False
                        row["failure"] = f"correction {s}->{t} across {w.id}"
            for r in d.monodromy_reports():
                row["checks"] += 1
                if not r.is_identity:
                    row["ok"] = False
                    row["failure"] = f"monodromy {r.loop} is not the identity"
            if name in EXPECTED_FAILURES:
                row["ok"] = False
                row["failure"] = f"expected {EXPECTED_FAILURES[name].__name__}"
        except CBLabError as exc:
            want = EXPECTED_FAILURES.get(name)
            row["ok"] = want is not None and isinstance(exc, want)
            row["raised"] = type(exc).__name__
        results[name] = row
    return results


def cmd_selftest(args, cfg):
    res = run_selftest()
    doc = {"command": "selftest", "fixtures": res, "passed": all(r["ok"] for r in res.values())}
    if not doc["passed"]:
        bad = sorted(k for k, r in res.items() if not r["ok"])
        sys.stdout.write(report.dumps(doc))
        raise SelftestFailed(f"fixtures failed: {', '.join(bad)}")
    return doc, {}


COMMANDS = {
    "portrait": cmd_portrait, "caustic": cmd_caustic, "diagram": cmd_diagram, "homology": cmd_homology,
    "wallcross": cmd_wallcross, "monodromy": cmd_monodromy, "weight": cmd_weight, "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--preset", help=f"packaged configuration ({', '.join(preset_names())})")
    common.add_argument("--output", help="write the JSON document here instead of standard output")
    common.add_argument("--svg-dir", help="directory for SVG drawings (default: the config's output_dir)")
    common.add_argument("--no-svg", action="store_true", help="skip SVG drawings")
    syn = argparse.ArgumentParser(add_help=False)
    syn.add_argument("--synthetic", help="built-in synthetic document name or path to one")

    ap = argparse.ArgumentParser(prog="cblab", description="Wall-and-chamber structure of gradient families.")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("portrait", parents=[common], help="portrait and complex at one base point")
    p.add_argument("--at", required=True, help="base point x1,x2")
    sub.add_parser("caustic", parents=[common], help="caustic curve in the configured region")
    sub.add_parser("diagram", parents=[common, syn], help="chambers, walls and codim-2 points")
    sub.add_parser("homology", parents=[common, syn], help="betti numbers per chamber")
    p = sub.add_parser("wallcross", parents=[common, syn], help="chain map across one wall")
    p.add_argument("--wall", required=True)
    p.add_argument("--from", dest="source", help="chamber to start from (default: the wall's first chamber)")
    sub.add_parser("monodromy", parents=[common, syn], help="loop corrections around every codim-2 point")
    p = sub.add_parser("weight", parents=[common], help="holomorphic weight of one sheet")
    p.add_argument("--at", required=True, help="base point x1,x2")
    p.add_argument("--w", required=True, help="w1,w2")
    p.add_argument("--sheet", type=int, required=True, help="index of the critical point in canonical order")
    p.add_argument("--chamber", help="connection key for A (default: 'default')")
    sub.add_parser("selftest", parents=[common], help="check the built-in synthetic corpus")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _load_config(args)
        doc, drawings = COMMANDS[args.command](args, cfg)
        text = report.dumps(doc)
        # every file is written here, from the calling thread
        if args.output:
            Path(args.output).write_text(text)
        else:
            sys.stdout.write(text)
        if drawings and not args.no_svg:
            out_dir = Path(args.svg_dir or (cfg.output_dir if cfg else "."))
            out_dir.mkdir(parents=True, exist_ok=True)
            for name, render in drawings.items():
                path = report.svg_name(name if name == args.command else f"{args.command}-{name}", out_dir)
                path.write_text(render())
                print(f"wrote {path}", file=sys.stderr)
        return 0
    except ConfigError as exc:
        print(f"ConfigError: {exc}", file=sys.stderr)
        return 2
    except CBLabError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())
