"""Shared test helpers.

Acceptance tests append one "criterion N ... PASS/FAIL" line each to
ACCEPTANCE_LINES; the terminal-summary hook prints them at the end of the run
so the verdicts survive pytest's output capture.
"""
from __future__ import annotations

import numpy as np

from traceprod import linmap_from_images, space_basis

ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def map_from_action(dom, cod, fn):
    """LinMap realizing A -> fn(A) on the span of dom."""
    els = space_basis(dom).elements
    return linmap_from_images(dom, cod, [fn(A) for A in els])


def basis_stack(tag) -> np.ndarray:
    return np.stack(space_basis(tag).elements)
