"""Bundled example theories and their query files."""

from __future__ import annotations

from functools import lru_cache
from importlib.resources import files

from .dsl import parse_query_file, parse_theory
from .theory import Query, TheorySpec

BUILTIN_PREFIX = "builtin:"
THEORIES = ("robot1d", "noisy", "sensewall", "window", "window_win")


def _resource(name: str):
    return files("belcal.theories").joinpath(name)


def theory_text(name: str) -> str:
    if name not in THEORIES:
        raise FileNotFoundError(f"no bundled theory named {name!r}; choose from {', '.join(THEORIES)}")
    return _resource(f"{name}.bat").read_text()


@lru_cache(maxsize=None)
def theory(name: str) -> TheorySpec:
    return parse_theory(theory_text(name))


def queries(name: str) -> list[Query]:
    """The bundled query file for ``name`` (empty if there is none)."""
    res = _resource(f"{name}.q")
    if not res.is_file():
        return []
    return parse_query_file(res.read_text(), theory(name))


def read_theory_source(path: str) -> str:
    """Text of a theory file, or of a bundled theory given as ``builtin:NAME``."""
    if path.startswith(BUILTIN_PREFIX):
        return theory_text(path[len(BUILTIN_PREFIX):])
    with open(path, encoding="utf-8") as fh:
        return fh.read()


__all__ = ["THEORIES", "queries", "read_theory_source", "theory", "theory_text"]
