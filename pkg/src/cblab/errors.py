"""Typed errors raised across the package.

Every error that can reach the command line derives from ``CBLabError`` so the
CLI can map it to exit code 1 and print ``Name: message``.
"""
from __future__ import annotations


class CBLabError(Exception):
    """Base class for domain errors."""


class ConfigError(Exception):
    """Bad configuration (exit code 2), deliberately not a domain error."""


class NoConvergence(CBLabError):
    pass


class Degenerate(CBLabError):
    pass


class DegeneratePoint(CBLabError):
    def __init__(self, y, msg: str | None = None):
        self.y = tuple(float(v) for v in y)
        super().__init__(msg or f"degenerate critical point at y={self.y}")


class NotAFold(CBLabError):
    pass


class NoTerminus(CBLabError):
    pass


class OnCaustic(CBLabError):
    pass


class OnBifurcation(CBLabError):
    pass


class UnresolvedWall(CBLabError):
    pass


class NoCrossing(CBLabError):
    pass


class InconsistentAdjacency(CBLabError):
    pass


class NoCoherentOrientation(CBLabError):
    pass


class NotAChainMap(CBLabError):
    pass


class WrongSideConvention(CBLabError):
    def __init__(self, msg: str, chain_map=None):
        super().__init__(msg)
        self.chain_map = chain_map


class MissingCorrection(CBLabError):
    pass


class SchemaError(CBLabError):
    def __init__(self, path: str, msg: str):
        self.path = path
        super().__init__(f"{path}: {msg}")
