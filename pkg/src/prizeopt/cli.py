"""Command-line front end.

Every command writes one table as CSV (default) or JSON. ``figure1`` writes a
directory of CSV files instead. Exit codes: 0 ok, 1 usage or validation
error, 2 quadrature failed to converge, 3 Monte Carlo check failed (|z| > 4).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import figure
from .incentives import (
    TournamentDesign,
    LossAversionParams,
    effort_curve,
    equilibrium_effort,
    optimal_prizes,
    parse_cost,
    r_star_breakpoints,
)
from .noise import DomainError, closed_form_B, parse_distribution
from .prizes import PrizeValidationError, parse_prizes
from .quadrature import QuadratureError
from .ranks import compute_beta, rank_probabilities, r_hat
from .simulate import SimulationConfig, default_grid, mc_beta, mc_best_response, mc_rank_probabilities

log = logging.getLogger("prizeopt")

OUTPUT_DIR_ENV = "PRIZEOPT_OUTPUT_DIR"
EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_ORACLE = 0, 1, 2, 3
Z_LIMIT = 4.0

DEFAULTS = {
    "dist": "gumbel",
    "n": 15,
    "theta": 0.0,
    "theta_grid": "0:1:0.01",
    "prizes": None,
    "cost": "quadratic:c0=1",
    "format": "csv",
    "output": None,
    "seed": 0,
    "samples": 1_000_000,
    "delta": 0.0,
    "fd_step": 1e-3,
    "workers": 1,
}
COMMAND_PRIZES = {"effort": "optimal", "simulate": "wta"}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    dist: str
    n: int
    theta: float
    theta_grid: str
    prizes: Optional[str]
    cost: str
    format: str
    output: Optional[str]
    seed: int
    samples: int
    delta: float
    fd_step: float
    workers: int


@dataclass
class Table:
    columns: list[str]
    rows: list[tuple]
    meta: dict[str, Any] = field(default_factory=dict)


# -- rendering ---------------------------------------------------------------

def _plain(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (list, tuple)):
        return [_plain(y) for y in x]
    if isinstance(x, dict):
        return {k: _plain(y) for k, y in x.items()}
    return x


def _cell(x) -> str:
    x = _plain(x)
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)  # shortest round-trip form
    return str(x)


def to_csv(table: Table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_cell(x) for x in row])
    return buf.getvalue()


def to_json(table: Table, command: str) -> str:
    doc = {"command": command, "columns": table.columns,
           "rows": [dict(zip(table.columns, _plain(list(r)))) for r in table.rows]}
    doc.update(_plain(table.meta))
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def parse_csv(text: str) -> list[dict[str, Any]]:
    """Read back a table written by :func:`to_csv`, converting numeric cells."""
    out = []
    for rec in csv.DictReader(io.StringIO(text)):
        row = {}
        for k, v in rec.items():
            if v == "":
                row[k] = None
            elif v in ("true", "false"):
                row[k] = v == "true"
            else:
                try:
                    row[k] = int(v)
                except ValueError:
                    try:
                        row[k] = float(v)
                    except ValueError:
                        row[k] = v
        out.append(row)
    return out


# -- parsing -----------------------------------------------------------------

def _theta(cfg: RunConfig) -> float:
    if not 0.0 <= cfg.theta <= 1.0:
        raise UsageError(f"--theta must lie in [0, 1], got {cfg.theta}")
    return cfg.theta


def _grid(cfg: RunConfig) -> np.ndarray:
    parts = str(cfg.theta_grid).split(":")
    if len(parts) != 3:
        raise UsageError(f"--theta-grid must be start:stop:step, got {cfg.theta_grid!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise UsageError(f"--theta-grid has a non-numeric field: {cfg.theta_grid!r}") from None
    try:
        return figure.theta_grid(start, stop, step)
    except ValueError as exc:
        raise UsageError(f"--theta-grid: {exc}") from None


def _dist(cfg: RunConfig):
    try:
        return parse_distribution(cfg.dist)
    except DomainError as exc:
        raise UsageError(f"--dist: {exc}") from None


def _n(cfg: RunConfig) -> int:
    if cfg.n < 2:
        raise UsageError(f"--n must be >= 2, got {cfg.n}")
    return cfg.n


def _prizes(cfg: RunConfig, n: int):
    try:
        return parse_prizes(cfg.prizes, n)
    except (PrizeValidationError, OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"--prizes: {exc}") from None


def _cost(cfg: RunConfig):
    try:
        return parse_cost(cfg.cost)
    except ValueError as exc:
        raise UsageError(f"--cost: {exc}") from None


def _sim(cfg: RunConfig) -> SimulationConfig:
    try:
        return SimulationConfig(samples=cfg.samples, seed=cfg.seed, fd_step=cfg.fd_step, workers=cfg.workers)
    except ValueError as exc:
        raise UsageError(f"--samples/--seed/--fd-step/--workers: {exc}") from None


def _errata_for(dist, coeffs) -> list[str]:
    if dist.kind in figure.PUBLISHED_R_HAT and coeffs.n == figure.N_AGENTS:
        return [e for e in figure.errata({dist.kind: coeffs}) if e.startswith(dist.kind)]
    return []


# -- commands ----------------------------------------------------------------

def cmd_coeffs(cfg: RunConfig) -> Table:
    dist, n = _dist(cfg), _n(cfg)
    coeffs = compute_beta(dist, n)
    rows = []
    for r in range(1, n + 1):
        cf = closed_form_B(dist, n, r) if r < n else None
        bar = float(coeffs.bar_beta[r - 1]) if r < n else None
        B = float(coeffs.B[r - 1])
        rows.append((r, float(coeffs.beta[r - 1]), B, bar, cf, None if cf is None else abs(B - cf)))
    meta = {"dist": dist.spec(), "n": n, "r_hat": r_hat(coeffs), "errata": _errata_for(dist, coeffs)}
    return Table(["r", "beta", "B", "bar_beta", "closed_form_B", "abs_diff"], rows, meta)


def cmd_optimal(cfg: RunConfig) -> Table:
    dist, n, theta = _dist(cfg), _n(cfg), _theta(cfg)
    coeffs = compute_beta(dist, n)
    choice = optimal_prizes(coeffs, theta)
    rows = [(theta, r, float(choice.A[r - 1]), choice.r_star, r in choice.ties) for r in range(1, n)]
    meta = {"dist": dist.spec(), "n": n, "theta": theta, "r_star": choice.r_star,
            "ties": list(choice.ties), "M_star": choice.M_star}
    return Table(["theta", "r", "A", "r_star", "in_argmax_set"], rows, meta)


def cmd_breakpoints(cfg: RunConfig) -> Table:
    dist, n = _dist(cfg), _n(cfg)
    coeffs = compute_beta(dist, n)
    steps = r_star_breakpoints(coeffs).steps
    meta = {"dist": dist.spec(), "n": n, "r_hat": r_hat(coeffs), "jumps": len(steps) - 1,
            "errata": _errata_for(dist, coeffs)}
    return Table(["theta", "r_star"], list(steps), meta)


def cmd_effort(cfg: RunConfig) -> Table:
    dist, n = _dist(cfg), _n(cfg)
    thetas = _grid(cfg)
    cost = _cost(cfg)
    coeffs = compute_beta(dist, n)
    spec = cfg.prizes or COMMAND_PRIZES["effort"]
    v = None if spec.strip().lower() == "optimal" else _prizes(RunConfig(**{**cfg.__dict__, "prizes": spec}), n)
    rows = effort_curve(coeffs, v, thetas, cost)
    meta = {"dist": dist.spec(), "n": n, "prizes": spec, "cost": cfg.cost}
    return Table(["theta", "r", "R", "L", "M", "x_star"], rows, meta)


def cmd_figure1(cfg: RunConfig) -> Path:
    thetas = _grid(cfg)
    if cfg.output:
        out = Path(cfg.output)
    elif os.environ.get(OUTPUT_DIR_ENV):
        out = Path(os.environ[OUTPUT_DIR_ENV]) / "figure1"
    else:
        out = Path("figure1")
    files = {}
    coeffs_by = {}
    for name, dist in figure.FAMILIES.items():
        tables, coeffs = figure.panels(dist, thetas)
        coeffs_by[name] = coeffs
        for panel, (cols, rows) in tables.items():
            files[out / f"{name}_{panel}.csv"] = to_csv(Table(list(cols), rows))
    notes = figure.errata(coeffs_by)
    for note in notes:
        log.warning("erratum: %s", note)
    try:
        out.mkdir(parents=True, exist_ok=True)
        for path, text in files.items():
            path.write_text(text, encoding="utf-8")
        (out / "errata.txt").write_text("".join(f"erratum: {x}\n" for x in notes), encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot write figure data to {out}: {exc}") from None
    return out


def _z(mc: float, ref: float, se: float) -> float:
    if se > 0:
        return (mc - ref) / se
    return 0.0 if mc == ref else math.inf


def cmd_simulate(cfg: RunConfig) -> Table:
    dist, n, theta = _dist(cfg), _n(cfg), _theta(cfg)
    sim = _sim(cfg)
    coeffs = compute_beta(dist, n)
    rows = []
    probs = rank_probabilities(dist, n, cfg.delta)
    for r, (est, q) in enumerate(zip(mc_rank_probabilities(dist, n, cfg.delta, sim), probs), start=1):
        rows.append(("probability", r, float(q), est.value, est.std_error, _z(est.value, q, est.std_error)))
    for r, (est, b) in enumerate(zip(mc_beta(dist, n, sim), coeffs.beta), start=1):
        rows.append(("beta", r, float(b), est.value, est.std_error, _z(est.value, b, est.std_error)))
    v = _prizes(RunConfig(**{**cfg.__dict__, "prizes": cfg.prizes or COMMAND_PRIZES["simulate"]}), n)
    design = TournamentDesign(n, dist, LossAversionParams(theta), _cost(cfg))
    report = equilibrium_effort(design, v, concavity=True)
    x_star = report.x_star
    grid = default_grid(design)
    br = mc_best_response(design, v, x_star, sim, grid)
    step = float(grid[1] - grid[0])
    excess = max(abs(br.argmax - x_star) - step, 0.0)
    # a first-order point is only a best response when the payoff is concave
    z_br = _z(excess, 0.0, br.effort_se) if report.concave else None
    rows.append(("best_response", None, x_star, br.argmax, br.effort_se, z_br))
    worst = max(abs(r[-1]) for r in rows if r[-1] is not None)
    meta = {"dist": dist.spec(), "n": n, "delta": cfg.delta, "theta": theta, "seed": cfg.seed,
            "samples": cfg.samples, "fd_step": cfg.fd_step, "grid_step": step,
            "concave": report.concave, "max_abs_z": worst, "passed": bool(worst <= Z_LIMIT)}
    if not report.concave:
        log.warning("sampled payoff is not concave in own effort; best-response residual reported, not tested")
    return Table(["quantity", "r", "quadrature", "mc", "std_error", "z"], rows, meta)


COMMANDS = {
    "coeffs": cmd_coeffs,
    "optimal": cmd_optimal,
    "breakpoints": cmd_breakpoints,
    "effort": cmd_effort,
    "figure1": cmd_figure1,
    "simulate": cmd_simulate,
}

HELP = {
    "coeffs": "per-rank beta, B, bar_beta with closed-form comparison",
    "optimal": "effort-maximising number of equal top prizes at one theta",
    "breakpoints": "jump points of the optimal number of prizes over theta in [0, 1]",
    "effort": "R, L, M and equilibrium effort over a theta grid",
    "figure1": "write the nine three-family n=15 data files to a directory",
    "simulate": "compare quadrature with seeded Monte Carlo",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="prizeopt", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=HELP[name])
        p.add_argument("--config", help="JSON object with any of the options below; flags win")
        p.add_argument("--dist", help='noise: "uniform:b=<real>", "gumbel", "pareto", "burr", "normal:sigma=<real>"')
        p.add_argument("--n", type=int, help="number of agents")
        p.add_argument("--theta", type=float, help="loss-aversion parameter in [0, 1]")
        p.add_argument("--theta-grid", dest="theta_grid", help="start:stop:step (default 0:1:0.01)")
        p.add_argument("--prizes", help='"wta", "topk:<s>", "equidistant", "flat", "optimal" (effort), or JSON path')
        p.add_argument("--cost", help='"quadratic:c0=<real>"')
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--output", help="output file (directory for figure1)")
        p.add_argument("--seed", type=int)
        p.add_argument("--samples", type=int)
        p.add_argument("--delta", type=float, help="output lead for simulated rank probabilities")
        p.add_argument("--fd-step", dest="fd_step", type=float)
        p.add_argument("--workers", type=int)
    return parser


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    values = {k: getattr(ns, k) for k in DEFAULTS}
    if ns.config:
        try:
            loaded = json.loads(Path(ns.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"--config {ns.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise UsageError(f"--config {ns.config}: expected a JSON object")
        for key, val in loaded.items():
            key = key.replace("-", "_")
            if key not in DEFAULTS:
                raise UsageError(f"--config {ns.config}: unknown option {key!r}")
            if values[key] is None:
                values[key] = val
    for key, default in DEFAULTS.items():
        if values[key] is None:
            values[key] = default
    if values["format"] not in ("csv", "json"):
        raise UsageError(f"format must be csv or json, got {values['format']!r}")
    try:
        for key in ("n", "seed", "samples", "workers"):
            values[key] = int(values[key])
        for key in ("theta", "delta", "fd_step"):
            values[key] = float(values[key])
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad option value: {exc}") from None
    return RunConfig(command=ns.command, **values)


def _write(cfg: RunConfig, text: str) -> None:
    target = cfg.output
    if target is None and os.environ.get(OUTPUT_DIR_ENV):
        target = str(Path(os.environ[OUTPUT_DIR_ENV]) / f"{cfg.command}.{cfg.format}")
    if target is None:
        sys.stdout.write(text)
        return
    try:
        Path(target).parent.mkdir(parents=True, exist_ok=True)
        Path(target).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot write {target}: {exc}") from None


def run(cfg: RunConfig) -> int:
    if cfg.command == "figure1":
        out = cmd_figure1(cfg)
        log.info("wrote figure data to %s", out)
        return EXIT_OK
    table = COMMANDS[cfg.command](cfg)
    for note in table.meta.get("errata", []):
        log.warning("erratum: %s", note)
    text = to_json(table, cfg.command) if cfg.format == "json" else to_csv(table)
    _write(cfg, text)
    if cfg.command == "simulate" and not table.meta["passed"]:
        log.error("Monte Carlo disagreement: max |z| = %.2f > %.1f", table.meta["max_abs_z"], Z_LIMIT)
        return EXIT_ORACLE
    return EXIT_OK


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:  # --help, or a usage error already printed by argparse
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr, force=True)
    try:
        return run(resolve_config(ns))
    except (UsageError, DomainError, PrizeValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except QuadratureError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
