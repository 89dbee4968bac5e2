from __future__ import annotations

import numpy as np
import pytest

from coexist.model import CouplingField, LatticeBox, build_box


@pytest.fixture
def square4():
    return LatticeBox.from_sites(2, [(0, 0), (1, 0), (0, 1), (1, 1)])


@pytest.fixture
def box3x3():
    return build_box(2, 1)


def random_field(box, seed=0, low=0.0):
    g = np.random.default_rng(seed)
    return CouplingField(box, g.uniform(low, 1.0, size=len(box.closed_edges)))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import ACCEPTANCE_LINES
    except ImportError:
        return
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
