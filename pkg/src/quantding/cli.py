"""Command-line front end.

Every subcommand writes ``<out>/<command>.json`` (inputs, outputs, checks,
threads, backend) and ``<out>/<command>.csv``.  Exit status: 0 when all checks
pass, 2 on configuration errors, 3 on numerical failures, 4 on failed checks.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import acceptance, kernels
from .asymptotics import (
    DEFAULT_KLIST,
    a_terms,
    hessian_convergence,
    verify_h_expansion,
    verify_kernel_coefficients,
)
from .balanced import balance, fs_distance
from .errors import DegenerateMetricError, IndefiniteFormError
from .functionals import (
    derivative,
    ding,
    ding_gradient,
    energy,
    grad_q_ding_check,
    lfunc,
    q_ding,
)
from .geometry import ROUND, MetricPotential, make_grid, ma_measure
from .hessians import ding_hessian, hessian_report, kernel_count, q_ding_hessian, q_hessian_spectrum
from .polynomial import ParseError, parse_expr
from .quantization import HilbertFrame, bergman_rho, hilb, matrix_to_json, q_matrix
from .reporting import all_passed, at_least, at_most, equals, holds, logged, within, write_csv, write_report

COMMANDS = ("rho", "gram", "ding", "qding", "hessian", "spectrum", "aterms", "converge", "expand", "balance", "selftest")
MAX_GRID = (1024, 4096)
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CHECKS = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str = "selftest"
    k: int = 4
    klist: tuple = ()
    grid: tuple = (64, 128)
    potential: str = "0"
    f: str = "x3"
    g: str = ""
    tol: float = 1e-8
    max_iter: int = 500
    out: str = "quantding-out"
    seed: int = 0
    threads: int = os.cpu_count() or 1

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"command: unknown command {self.command!r}")
        if self.k < 1:
            raise ConfigError(f"k: must be >= 1, got {self.k}")
        if any(k < 1 for k in self.klist):
            raise ConfigError("klist: entries must be >= 1")
        if len(set(self.klist)) != len(self.klist):
            raise ConfigError("klist: entries must be distinct")
        nx, nt = self.grid
        if not (2 <= nx <= MAX_GRID[0] and 4 <= nt <= MAX_GRID[1]):
            raise ConfigError(f"grid: need 2 <= NX <= {MAX_GRID[0]} and 4 <= NT <= {MAX_GRID[1]}")
        if not self.tol > 0:
            raise ConfigError("tol: must be positive")
        if self.max_iter < 0:
            raise ConfigError("max_iter: must be >= 0")
        if self.threads < 1:
            raise ConfigError("threads: must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed: must fit in 64 bits")
        for key in ("potential", "f", "g"):
            text = getattr(self, key)
            if key == "g" and not text:
                continue
            try:
                parse_expr(text)
            except ParseError as exc:
                raise ConfigError(f"{key}: {exc}") from None
        return self


def _parse_int(key, text):
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {text!r}") from None


def _parse_float(key, text):
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None


def _parse_ints(key, text, count=None):
    parts = [p.strip() for p in text.split(",") if p.strip()]
    values = tuple(_parse_int(key, p) for p in parts)
    if count is not None and len(values) != count:
        raise ConfigError(f"{key}: expected {count} comma-separated integers, got {text!r}")
    return values


PARSERS = {
    "command": lambda key, v: v.strip(),
    "k": _parse_int,
    "klist": _parse_ints,
    "grid": lambda key, v: _parse_ints(key, v, 2),
    "potential": lambda key, v: v.strip(),
    "f": lambda key, v: v.strip(),
    "g": lambda key, v: v.strip(),
    "tol": _parse_float,
    "max_iter": _parse_int,
    "out": lambda key, v: v.strip(),
    "seed": _parse_int,
    "threads": _parse_int,
}


def parse_config_text(text):
    """Flat ``key=value`` pairs, one per line, ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in PARSERS:
            raise ConfigError(f"{key}: unknown key (line {lineno})")
        values[key] = PARSERS[key](key, value)
    return values


def load_config(path, **overrides):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
    values = parse_config_text(text)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**values).validate()


# commands -------------------------------------------------------------------


def _potential(cfg):
    return MetricPotential(parse_expr(cfg.potential))


def _is_round(cfg):
    return parse_expr(cfg.potential).degree <= 0


def _nodes_columns(grid):
    return grid.x, grid.theta


def cmd_rho(cfg, grid):
    phi = _potential(cfg)
    rho = bergman_rho(phi, cfg.k, grid)
    k = cfg.k
    checks = [at_most("int rho MA - (2k+1) (rel)", abs(grid.integrate(rho * ma_measure(phi, grid)) / (2 * k + 1) - 1), 1e-10)]
    if _is_round(cfg):
        checks.append(at_most("rho - (2k+1)/2", np.max(np.abs(rho - (2 * k + 1) / 2)), 1e-10))
    outputs = {"min": rho.min(), "max": rho.max(), "mean": float(np.mean(rho))}
    x, theta = _nodes_columns(grid)
    return outputs, checks, (["x", "theta", "rho"], zip(x, theta, rho))


def cmd_gram(cfg, grid):
    from math import factorial

    k = cfg.k
    form = hilb(_potential(cfg), k, grid)
    form.cholesky()
    checks = [holds("positive definite", True)]
    if _is_round(cfg):
        exact = np.array([2 * factorial(j) * factorial(2 * k - j) / factorial(2 * k + 1) for j in range(2 * k + 1)])
        checks.append(at_most("diagonal vs factorial formula (rel)", np.max(np.abs(form.G.diagonal().real / exact - 1)), 1e-12))
    out = Path(cfg.out) / "gram-matrix.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(matrix_to_json(form.G, k) + "\n")
    rows = [(a, b, form.G[a, b].real, form.G[a, b].imag) for a in range(form.N) for b in range(form.N)]
    return {"logdet": form.logdet(), "matrix_file": str(out)}, checks, (["row", "col", "re", "im"], rows)


def cmd_ding(cfg, grid):
    phi = _potential(cfg)
    f = parse_expr(cfg.f)
    g = parse_expr(cfg.g) if cfg.g else f
    E, L, D = energy(phi, ROUND, grid), lfunc(phi, grid), ding(phi, ROUND, grid)
    grad = ding_gradient(phi, f, grid)
    fd = derivative(lambda t: ding(phi.shifted(f, t), ROUND, grid))
    hess = ding_hessian(f, g, phi, grid)
    checks = [at_most("gradient vs difference (abs)", abs(grad - fd), 1e-6)]
    rows = [("energy", E), ("L", L), ("ding", D), ("gradient_f", grad), ("hessian_fg", hess)]
    return dict(rows), checks, (["quantity", "value"], rows)


def _random_hermitian(rng, N):
    return acceptance.random_hermitian(rng, N)


def cmd_qding(cfg, grid):
    k = cfg.k
    H = hilb(_potential(cfg), k, grid)
    H0 = hilb(ROUND, k, grid)
    rng = np.random.default_rng(cfg.seed)
    A = _random_hermitian(rng, H.N)
    value = q_ding(H, H0, grid)
    fd, pairing = grad_q_ding_check(H, A, grid)
    rep = hessian_report(A, H, grid)
    checks = [
        at_most("gradient vs difference (abs)", abs(fd - pairing), 1e-6),
        at_most("Hessian three-way residual", rep.residual, 1e-6),
    ]
    rows = [("q_ding", value), ("gradient_A", pairing)] + [(f"hessian_{n}", v) for n, v in rep.values.items()]
    return dict(rows), checks, (["quantity", "value"], rows)


def cmd_hessian(cfg, grid):
    k = cfg.k
    phi = _potential(cfg)
    frame = HilbertFrame(phi, k, grid)
    f = parse_expr(cfg.f)
    g = parse_expr(cfg.g) if cfg.g else f
    Qf = q_matrix(f, phi, k, grid, frame)
    Qg = q_matrix(g, phi, k, grid, frame)
    H0 = frame.form
    fg = q_ding_hessian(Qf, Qg, H0, grid)
    gf = q_ding_hessian(Qg, Qf, H0, grid)
    terms = a_terms(f, phi, k, grid)
    ff = q_ding_hessian(Qf, Qf, H0, grid)
    limit = ding_hessian(f, g, phi, grid)
    checks = [
        at_most("A1 + A2 + A3 - Hessian(Q_f, Q_f)", abs(terms.total - ff), 1e-10),
        at_most("symmetry in (f, g)", abs(fg - gf), 1e-8),
        at_most("formula vs trace form", abs(q_ding_hessian(Qf, Qg, H0, grid, "trace") - fg), 1e-10),
    ]
    rows = [("hessian_fg", fg), ("limit_fg", limit), ("A1", terms.A1), ("A2", terms.A2), ("A3", terms.A3)]
    return dict(rows), checks, (["quantity", "value"], rows)


def cmd_spectrum(cfg, grid):
    k = cfg.k
    ev = q_hessian_spectrum(hilb(_potential(cfg), k, grid), grid)
    checks = [at_least("min eigenvalue", ev.min(), -1e-9)]
    try:
        n, gap = kernel_count(ev)
    except ValueError:
        n, gap = int(np.sum(ev < 1e-8)), 0.0
    if _is_round(cfg):
        checks += [equals("kernel dimension", n, 4), at_least("gap ratio", gap, 1e3)]
    else:
        checks += [logged("kernel dimension", n), logged("gap ratio", gap)]
    return {"kernel_dimension": n, "gap_ratio": gap, "dimension": len(ev)}, checks, (
        ["k", "index", "eigenvalue"],
        [(k, i, v) for i, v in enumerate(ev)],
    )


def _klist(cfg, default):
    return tuple(sorted(cfg.klist)) if cfg.klist else default


def cmd_aterms(cfg, grid):
    phi = _potential(cfg)
    klist = _klist(cfg, (cfg.k,))
    rows, worst = [], 0.0
    for k in klist:
        t = a_terms(cfg.f, phi, k, grid)
        frame = HilbertFrame(phi, k, grid)
        Q = q_matrix(cfg.f, phi, k, grid, frame)
        total = q_ding_hessian(Q, Q, frame.form, grid)
        worst = max(worst, abs(t.total - total))
        rows.append((k, t.A1, t.A2, t.A3, total))
    checks = [at_most("A1 + A2 + A3 - Hessian", worst, 1e-10)]
    return {"klist": list(klist)}, checks, (["k", "A1", "A2", "A3", "hessian"], rows)


def cmd_converge(cfg, grid):
    klist = _klist(cfg, (8, 16, 32))
    table = hessian_convergence(cfg.f, _potential(cfg), grid, klist)
    errs = table.errors()
    if abs(table.limit) < 1e-10:
        checks = [at_most("quantized values tend to 0", max(abs(r[1]) for r in table.rows), 1e-10)]
    else:
        checks = [
            holds("errors strictly decreasing", all(a > b for a, b in zip(errs, errs[1:])), errs),
            within("log-log slope", table.slope, -1.5, -0.7),
        ]
    finite = lambda v: v if math.isfinite(v) else None
    outputs = {"limit": table.limit, "slope": finite(table.slope), "slope_all": finite(table.slope_all)}
    return outputs, checks, (["k", "quantized", "limit", "error"], table.rows)


def cmd_expand(cfg, grid):
    phi = _potential(cfg)
    klist = _klist(cfg, DEFAULT_KLIST)
    rep = verify_kernel_coefficients(cfg.f, phi, grid, klist)
    hrep = verify_h_expansion(cfg.f, phi, grid, klist)
    checks = [
        at_most("b_f0 vs f (rel sup)", rep.errors["b_f0"], 0.01),
        at_most("b_f1 vs S f/2 + Lf (rel sup)", rep.errors["b_f1"], 0.05),
        at_most("b_ff0 vs f^2 (rel sup)", rep.errors["b_ff0"], 0.01),
        at_most("H(Q) slope vs f (rel sup)", hrep.slope_error, 0.01),
        at_most("mass ratio decay power", hrep.mass_power, -1.9),
        logged("gradient factor c", rep.grad_factor),
    ]
    cf, cff, ch = rep.fit_f.coeffs, rep.fit_ff.coeffs, hrep.fit.coeffs
    rows = zip(grid.x, grid.theta, cf[0], cf[1], cff[0], cff[1], ch[0], ch[1])
    outputs = {"errors": rep.errors, "gradient_factor": rep.grad_factor, "mass_ratios": hrep.mass_ratios}
    return outputs, checks, (["x", "theta", "bf0", "bf1", "bff0", "bff1", "h0", "h1"], rows)


def cmd_balance(cfg, grid):
    trace = balance(hilb(_potential(cfg), cfg.k, grid), grid, cfg.max_iter, cfg.tol)
    checks = [
        holds("converged", trace.converged, len(trace.iterates) - 1),
        at_most("final residual", trace.iterates[-1][1], cfg.tol),
    ]
    out = Path(cfg.out) / "balance-form.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(matrix_to_json(trace.form.G, cfg.k) + "\n")
    outputs = {"iterations": len(trace.iterates) - 1, "distance_to_round": fs_distance(trace.form, grid), "form_file": str(out)}
    return outputs, checks, (["step", "residual", "q_ding"], trace.iterates)


def cmd_selftest(cfg, grid):
    checks, rows = [], []
    for n, (title, fn) in acceptance.CRITERIA.items():
        result = fn(grid, cfg.seed)
        ok = all_passed(result)
        print(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}")
        for c in result:
            checks.append(replace(c, name=f"[{n}] {c.name}"))
            rows.append((n, c.name, c.value if np.isscalar(c.value) else str(c.value), "" if c.passed is None else c.passed))
    return {"criteria": len(acceptance.CRITERIA)}, checks, (["criterion", "check", "value", "pass"], rows)


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}


def execute(cfg):
    """Run one configured command; returns (exit code, report)."""
    kernels.set_threads(cfg.threads)
    grid = make_grid(*cfg.grid)
    outputs, checks, (header, rows) = HANDLERS[cfg.command](cfg, grid)
    inputs = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    report = {
        "command": cfg.command,
        "inputs": inputs,
        "outputs": outputs,
        "checks": checks,
        "threads": cfg.threads,
        "backend": kernels.BACKEND,
    }
    out = Path(cfg.out)
    write_report(report, out / f"{cfg.command}.json")
    write_csv(out / f"{cfg.command}.csv", header, list(rows))
    return (EXIT_OK if all_passed(checks) else EXIT_CHECKS), report


def build_parser():
    p = argparse.ArgumentParser(prog="quantding", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="flat key=value file; flags override it")
    p.add_argument("--k", type=str)
    p.add_argument("--klist", type=str)
    p.add_argument("--grid", type=str, metavar="NX,NT")
    p.add_argument("--potential", type=str, metavar="EXPR")
    p.add_argument("--f", type=str, metavar="EXPR")
    p.add_argument("--g", type=str, metavar="EXPR")
    p.add_argument("--tol", type=str)
    p.add_argument("--max-iter", dest="max_iter", type=str)
    p.add_argument("--out", type=str, metavar="PATH")
    p.add_argument("--seed", type=str)
    p.add_argument("--threads", type=str)
    return p


def config_from_args(args):
    flags = {}
    for key in PARSERS:
        raw = getattr(args, key, None)
        if key != "command" and raw is not None:
            flags[key] = PARSERS[key](key, raw)
    flags["command"] = args.command
    if args.config:
        return load_config(args.config, **flags)
    return RunConfig(**flags).validate()


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        code, report = execute(cfg)
    except (DegenerateMetricError, IndefiniteFormError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    failed = [c.name for c in report["checks"] if c.passed is False]
    for name in failed:
        print(f"failed check: {name}", file=sys.stderr)
    print(f"{cfg.command}: {'ok' if code == EXIT_OK else 'checks failed'} ({Path(cfg.out) / cfg.command}.json)")
    return code
