"""Numerical tolerances and run configuration."""
from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError


@dataclass(frozen=True)
class Tolerances:
    tol_root: float = 1e-10
    tol_merge: float = 1e-7
    tol_degenerate: float = 1e-7
    tol_capture: float = 1e-5
    tol_wall: float = 1e-7
    tol_split: float = 1e-6
    tol_cusp: float = 1e-3
    rtol: float = 1e-9
    atol: float = 1e-11
    saddle_eps: float = 1e-6
    side_eps: float = 1e-3
    max_time: float = 200.0
    max_bisect: int = 64

    def scaled(self, factor: float) -> "Tolerances":
        """Every float tolerance multiplied by ``factor`` (used by robustness checks)."""
        upd = {f.name: getattr(self, f.name) * factor
               for f in dataclasses.fields(self)
               if f.name in ("tol_root", "tol_capture", "rtol", "atol")}
        return dataclasses.replace(self, **upd)


DEFAULT_TOL = Tolerances()


def _rect(v, name):
    try:
        a, b, c, d = (float(t) for t in v)
    except Exception as exc:
        raise ConfigError(f"{name} must be [xmin, xmax, ymin, ymax]") from exc
    if not (a < b and c < d):
        raise ConfigError(f"{name} is degenerate: {v}")
    return (a, b, c, d)


@dataclass
class RunConfig:
    terms: list
    region: tuple = (-1.0, 1.0, -1.0, 1.0)
    fiber_window: tuple = (-3.0, 3.0, -3.0, 3.0)
    grid_n: int = 16
    grid_m: int = 16
    tolerances: Tolerances = field(default_factory=Tolerances)
    connection: dict = field(default_factory=dict)
    output_dir: str = "."
    synthetic: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        synthetic = d.get("synthetic")
        if "polynomial" not in d and synthetic is None:
            raise ConfigError("config needs 'polynomial' (or 'synthetic')")
        terms = d.get("polynomial", [[2, 0, 1, 2], [0, 2, 1, 2]])
        if not isinstance(terms, list) or not all(
                isinstance(q, list) and len(q) == 4 and all(isinstance(v, int) for v in q)
                for q in terms):
            raise ConfigError("polynomial must be a list of [i, j, num, den] integer quadruples")
        if any(q[3] == 0 or q[0] < 0 or q[1] < 0 for q in terms):
            raise ConfigError("polynomial has a zero denominator or a negative exponent")
        tol_over = d.get("tolerances", {})
        names = {f.name for f in dataclasses.fields(Tolerances)}
        bad = set(tol_over) - names
        if bad:
            raise ConfigError(f"unknown tolerance(s): {sorted(bad)}")
        tols = dataclasses.replace(Tolerances(), **tol_over)
        for f in dataclasses.fields(tols):
            if not getattr(tols, f.name) > 0:
                raise ConfigError(f"tolerance {f.name} must be > 0")
        grid_n = int(d.get("grid_n", 16))
        grid_m = int(d.get("grid_m", 16))
        if grid_n < 8 or grid_m < 8:
            raise ConfigError("grid sizes must be >= 8")
        conn = d.get("connection", {})
        if not isinstance(conn, dict):
            raise ConfigError("connection must map chamber ids to numbers")
        return cls(
            terms=terms,
            region=_rect(d.get("region", cls.region), "region"),
            fiber_window=_rect(d.get("fiber_window", cls.fiber_window), "fiber_window"),
            grid_n=grid_n,
            grid_m=grid_m,
            tolerances=tols,
            connection={str(k): float(v) for k, v in conn.items()},
            output_dir=str(d.get("output_dir", ".")),
            synthetic=synthetic,
        )

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(d)


def worker_count() -> int:
    """Worker cap from CB_LAB_THREADS (default 1)."""
    raw = os.environ.get("CB_LAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"CB_LAB_THREADS must be an integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigError("CB_LAB_THREADS must be >= 1")
    return n
