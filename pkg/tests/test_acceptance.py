"""The ten acceptance criteria at their stated tolerances.

Each test prints one PASS/FAIL line; the lines are repeated in the terminal
summary (see conftest.py) so they survive output capturing.
"""

import pytest

from quantding.acceptance import CRITERIA, run_criterion
from quantding.reporting import all_passed

SUMMARY = []


def describe(check):
    tag = {True: "ok", False: "FAILED", None: "logged"}[check.passed]
    return f"    {tag:6s} {check.name}: {check.value} (tol {check.tol})"


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(grid, number):
    checks = run_criterion(number, grid, seed=0)
    ok = all_passed(checks)
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {CRITERIA[number][0]}"
    SUMMARY.append((line, [describe(c) for c in checks]))
    print(line)
    failed = [c for c in checks if c.passed is False]
    assert not failed, "; ".join(f"{c.name} = {c.value} (tol {c.tol})" for c in failed)
