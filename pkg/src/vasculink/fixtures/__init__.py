"""Bundled example networks used by the docs, demos, and test suite.

Names: ``single_pipe`` (Tx and Rx share the only pipe), ``diamond``
(asymmetric two-path split that reconverges), ``diamond_leak`` (one branch
drains to a separate outlet, so the reach probability is below one),
``three_path`` (three parallel pipes between the same two nodes), and
``mesh`` (five inlets, mixed merge/split nodes, multiple outlets).
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

FIXTURE_NAMES = ("single_pipe", "diamond", "diamond_leak", "three_path", "mesh")


def fixture_text(name: str) -> str:
    """Raw JSON document of a bundled fixture network."""
    if name not in FIXTURE_NAMES:
        raise KeyError(f"unknown fixture {name!r}; available: {FIXTURE_NAMES}")
    return resources.files(__package__).joinpath(f"{name}.json").read_text()


def fixture_document(name: str) -> dict:
    """Parsed (but unvalidated) JSON document of a fixture network."""
    return json.loads(fixture_text(name))


def fixture_path(name: str) -> Path:
    """Filesystem path of a fixture document (for CLI invocations)."""
    if name not in FIXTURE_NAMES:
        raise KeyError(f"unknown fixture {name!r}; available: {FIXTURE_NAMES}")
    with resources.as_file(resources.files(__package__).joinpath(f"{name}.json")) as p:
        return Path(p)
