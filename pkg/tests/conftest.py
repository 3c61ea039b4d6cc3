"""Shared fixtures: packaged configurations, cached diagrams, acceptance log."""
from __future__ import annotations

import json
import time
from importlib import resources

import pytest

from cblab.config import RunConfig
from cblab.loci import assemble_cb_diagram
from cblab.polyfun import GeneratingFunction

FOLD = GeneratingFunction.from_literal([[3, 0, 1, 1], [0, 2, 1, 1]])
DUAL_FOLD = GeneratingFunction.from_literal([[3, 0, 1, 1], [0, 2, -1, 1]])
UMBILIC = GeneratingFunction.from_literal([[3, 0, 1, 1], [1, 2, -3, 1], [2, 0, 1, 1], [0, 2, 1, 1]])
QUADRATIC = GeneratingFunction.from_literal([[2, 0, 1, 2], [0, 2, 1, 2]])

_LOG = pytest.StashKey[dict]()


def preset(name: str) -> RunConfig:
    text = (resources.files("cblab") / "presets" / f"{name}.json").read_text()
    return RunConfig.from_dict(json.loads(text))


def timed_diagram(cfg: RunConfig, **over):
    args = dict(region=cfg.region, grid_m=cfg.grid_m, fiber_window=cfg.fiber_window,
                grid_n=cfg.grid_n, tol=cfg.tolerances)
    args.update(over)
    t0 = time.perf_counter()
    d = assemble_cb_diagram(GeneratingFunction.from_literal(cfg.terms), **args)
    return d, time.perf_counter() - t0


@pytest.fixture(scope="session")
def fold_run():
    return timed_diagram(preset("fold"))


@pytest.fixture(scope="session")
def dualfold_run():
    return timed_diagram(preset("dualfold"))


@pytest.fixture(scope="session")
def umbilic_run():
    # the largest computation in the suite; shared by criteria 3, 4 and 7
    return timed_diagram(preset("umbilic"))


@pytest.fixture(scope="session")
def acceptance(request):
    """Record one line per criterion; printed in the terminal summary."""
    log = request.config.stash.setdefault(_LOG, {})

    def record(n: int, ok: bool, detail: str):
        log[n] = (ok, detail)
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(_LOG, None)
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, 9):
        if n in log:
            ok, detail = log[n]
            terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}: {detail}")
        else:
            terminalreporter.write_line(f"criterion {n}: NOT RUN")
