"""Checks and report files (JSON summary, RFC 4180 CSV)."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class Check:
    """One gated comparison.  ``passed is None`` marks a logged, ungated value."""

    name: str
    value: object
    tol: object
    passed: bool | None

    def as_dict(self):
        return {"name": self.name, "value": _plain(self.value), "tol": _plain(self.tol), "pass": self.passed}


def at_most(name, value, tol):
    value = float(value)
    return Check(name, value, tol, bool(value <= tol))


def at_least(name, value, bound):
    value = float(value)
    return Check(name, value, [">=", bound], bool(value >= bound))


def within(name, value, lo, hi):
    value = float(value)
    return Check(name, value, [lo, hi], bool(lo <= value <= hi))


def equals(name, value, expected):
    return Check(name, value, ["==", expected], bool(value == expected))


def holds(name, condition, value=None):
    return Check(name, value, None, bool(condition))


def logged(name, value):
    return Check(name, value, None, None)


def all_passed(checks):
    return all(c.passed is not False for c in checks)


def _plain(x):
    if isinstance(x, (np.floating, np.integer)):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def write_report(report, path):
    """Write a report dict as JSON; returns the path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = dict(report)
    body["checks"] = [c.as_dict() if isinstance(c, Check) else c for c in body.get("checks", [])]
    path.write_text(json.dumps(_plain(body), indent=2, sort_keys=True) + "\n")
    return path


def format_value(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(x) for x in row])
    return path
