"""Bundled DSL programs.

sssp / cc / degree_count are the workload programs; color_max, edge_scan,
min_prop, and accumulate are the minimal shapes each optimization pass
targets (max sweep, searched traversal, frontier Min loop, cached weighted
accumulate); color_max_composite carries the nested-operator form that the
lowering rejects.
"""

from __future__ import annotations

import importlib.resources

PROGRAM_NAMES = (
    "sssp",
    "cc",
    "degree_count",
    "color_max",
    "color_max_composite",
    "edge_scan",
    "min_prop",
    "accumulate",
)

# programs that every equivalence sweep should cover (composite form excluded:
# it is rejected at lowering by design)
EXECUTABLE_PROGRAMS = tuple(p for p in PROGRAM_NAMES if p != "color_max_composite")

# programs whose oracle needs a symmetrized graph
UNDIRECTED_PROGRAMS = ("cc",)


def program_source(name: str) -> str:
    if name not in PROGRAM_NAMES:
        raise KeyError(f"unknown corpus program {name!r}; known: {', '.join(PROGRAM_NAMES)}")
    ref = importlib.resources.files("graphpulse") / "programs" / f"{name}.sp"
    return ref.read_text(encoding="utf-8")


def resolve_program(name_or_path: str) -> tuple[str, str]:
    """Return (source, filename) for a corpus name or a .sp file path."""
    if name_or_path in PROGRAM_NAMES:
        return program_source(name_or_path), f"{name_or_path}.sp"
    with open(name_or_path, "r", encoding="utf-8") as fh:
        return fh.read(), name_or_path
