"""Acceptance criteria 1-11, one test each.

Every criterion appends a one-line PASS/FAIL verdict that is printed in the
terminal summary, whatever pytest's capture settings.
"""

from __future__ import annotations

import pytest

from coexist.harness import acceptance as acc

ACCEPTANCE_LINES: list[str] = []


def test_tolerances_are_pinned():
    assert acc.ES_TOL == 1e-12
    assert acc.BALANCE_TOL == 1e-12
    assert acc.MIX_TOL == 1e-6
    assert acc.F1_TOL == 1e-10
    assert acc.BARRIER_TOL == 1e-9
    assert (acc.SPOT_VALUE, acc.SPOT_TOL) == (0.171239, 1e-6)
    assert acc.IDENTITY_TOL == 1e-12
    assert acc.CONSTRAINED_MARGIN == 0.13
    assert acc.TV_TOL == 0.05
    assert acc.Z_TOL == 4.0
    assert acc.EXPONENT_TOL == 1e-6


@pytest.mark.parametrize("cid", sorted(acc.CRITERIA))
def test_criterion(cid):
    res = acc.run_criterion(cid, seed=0)
    ACCEPTANCE_LINES.append(res.line())
    print(res.report())
    assert res.passed, res.report()
