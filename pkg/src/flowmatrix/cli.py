"""Command-line front end: diagnostic tables, verification, and experiments.

Subcommands:

- ``table``: per-family CSV of coefficients and diagnostics on a grid.
- ``verify``: run the full check suite; exit 0 only if every check passes.
- ``amplify T T_PRIME``: analytic vs error-injected amplification per family.
- ``correlation``: analytic vs Monte Carlo correlation curves per family.
- ``sample``: reverse trajectories from a seeded oracle, serialized to CSV.

Exit codes: 0 success, 1 failed check, 2 usage/config/IO error.  All output
is CSV with 17-significant-digit reals and LF line endings, written
atomically (temp file + rename); runs are deterministic given the config.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .analysis import amplification, table_row
from .config import (
    _SCHEMA,
    RunConfig,
    apply_overrides,
    distribution_from_config,
    load_config,
    schedules_from_config,
)
from .dynamics import OraclePredictor, measure_amplification, reverse_trajectory
from .empirical import correlation_curve
from .errors import ConfigError, FlowMatrixError, SingularParameterization
from .schedules import Schedule, clamped_grid, coefficients
from .verify import run_verification

_TRAJECTORY_DIM = 4

# short flag -> dotted config key
_SHORT_FLAGS = {
    "out": "output.path",
    "seed": "mc.seed",
    "family": "schedule.family",
    "grid": "grid.n_points",
    "mc_n": "mc.n",
}


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")  # same directory keeps the rename atomic
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    os.replace(tmp, path)


def _write_text(path: Path, lines: Iterable[str]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def _t_ref(config: RunConfig, schedule: Schedule) -> float:
    return schedule.domain.t0 if config.t_ref is None else config.t_ref


def cmd_table(config: RunConfig) -> int:
    out = Path(config.out_dir)
    for schedule in schedules_from_config(config):
        grid = clamped_grid(schedule, config.n_points)
        rows = table_row(schedule, grid, _t_ref(config, schedule))
        records = []
        for row in rows:
            c = coefficients(schedule, row.t)
            records.append(
                (row.t, c.a11, c.a12, c.a21, c.a22, row.det, row.psi,
                 row.log_snr, row.log_snr_rate, row.phi_to_ref)
            )
        path = out / f"table_{schedule.family.value}.csv"
        _write_csv(
            path,
            ("t", "a11", "a12", "a21", "a22", "det", "psi", "lambda", "lambda_dot", "phi_to_ref"),
            records,
        )
        print(f"wrote {path}")
    return 0


def cmd_verify(config: RunConfig) -> int:
    results = run_verification(config)
    lines = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        detail = f"  ({r.detail})" if r.detail else ""
        lines.append(f"{status}  {r.name}: measured={r.measured:.3e} tol={r.tol:.3e}{detail}")
    n_failed = sum(not r.passed for r in results)
    lines.append(f"{len(results) - n_failed}/{len(results)} checks passed")
    path = Path(config.out_dir) / "verify_report.txt"
    _write_text(path, lines)
    for line in lines:
        print(line)
    print(f"wrote {path}")
    return 0 if n_failed == 0 else 1


def cmd_amplify(config: RunConfig, t: float, t_prime: float) -> int:
    if t_prime > t:
        raise ConfigError(f"t_prime={t_prime} must be <= t={t}")
    rows = []
    for schedule in schedules_from_config(config):
        try:
            if t_prime == t:
                analytic = empirical = 0.0  # degenerate step moves nothing
            else:
                analytic = abs(amplification(schedule, t, t_prime))
                empirical = measure_amplification(schedule, t, t_prime, 1e-3)
            rows.append(
                (schedule.family.value, t, t_prime, analytic, empirical, abs(analytic - empirical))
            )
        except SingularParameterization:
            rows.append((schedule.family.value, t, t_prime, "singular", "singular", "singular"))
        except FlowMatrixError as exc:
            rows.append((schedule.family.value, t, t_prime, f"error: {exc}", "", ""))
    path = Path(config.out_dir) / "amplify.csv"
    _write_csv(
        path,
        ("family", "t", "t_prime", "analytic_phi", "empirical_phi", "abs_diff"),
        rows,
    )
    print(f"wrote {path}")
    return 0


def cmd_correlation(config: RunConfig) -> int:
    out = Path(config.out_dir)
    dist = distribution_from_config(config, dim=1)
    for schedule in schedules_from_config(config):
        grid = clamped_grid(schedule, config.n_points)
        points = correlation_curve(schedule, dist, grid, config.mc_n, config.seed)
        path = out / f"correlation_{schedule.family.value}.csv"
        _write_csv(
            path,
            ("t", "analytic_psi", "empirical_psi", "std_error", "n", "seed"),
            points,
        )
        print(f"wrote {path}")
    return 0


def cmd_sample(config: RunConfig) -> int:
    out = Path(config.out_dir)
    for schedule in schedules_from_config(config):
        rng = np.random.Generator(np.random.Philox(key=config.seed))
        oracle = OraclePredictor(
            z_true=rng.standard_normal(_TRAJECTORY_DIM),
            eps_true=rng.standard_normal(_TRAJECTORY_DIM),
        )
        trajectory = reverse_trajectory(schedule, oracle, n_steps=config.n_points)
        path = out / f"trajectory_{schedule.family.value}.csv"
        _write_csv(path, ("step_index", "t", "coordinate_index", "x_value"), trajectory.rows())
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowmatrix",
        description="Analytic and empirical diagnostics of diffusion/flow schedules.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, default=None, help="INI config file")
        p.add_argument("--out", dest="out", metavar="DIR", help="output directory")
        p.add_argument("--seed", dest="seed", metavar="N", help="base RNG seed")
        p.add_argument("--family", dest="family", metavar="NAME", help="one family, or 'all'")
        p.add_argument("--grid", dest="grid", metavar="N", help="grid points / reverse steps")
        p.add_argument("--mc-n", dest="mc_n", metavar="N", help="Monte Carlo sample count")
        for section, keys in _SCHEMA.items():
            for key in keys:
                p.add_argument(
                    f"--{section}.{key}",
                    dest=f"dotted::{section}.{key}",
                    metavar="VALUE",
                    help=argparse.SUPPRESS,
                )

    specs = {
        "table": "emit per-family coefficient/diagnostic tables",
        "verify": "run the full verification suite",
        "amplify": "compare analytic and error-injected amplification",
        "correlation": "compare analytic and Monte Carlo correlation curves",
        "sample": "emit exact-oracle reverse trajectories",
    }
    for name, help_text in specs.items():
        p = sub.add_parser(name, help=help_text)
        add_common(p)
        if name == "amplify":
            p.add_argument("t", type=float, help="later (source) time")
            p.add_argument("t_prime", type=float, help="earlier (target) time")
    return parser


def _collect_overrides(args: argparse.Namespace) -> dict[str, str]:
    overrides: dict[str, str] = {}
    for attr, dotted in _SHORT_FLAGS.items():
        value = getattr(args, attr, None)
        if value is not None:
            overrides[dotted] = str(value)
    for attr, value in vars(args).items():
        if attr.startswith("dotted::") and value is not None:
            overrides[attr.removeprefix("dotted::")] = str(value)
    return overrides


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        apply_overrides(config, _collect_overrides(args))
        if args.command == "table":
            return cmd_table(config)
        if args.command == "verify":
            return cmd_verify(config)
        if args.command == "amplify":
            return cmd_amplify(config, args.t, args.t_prime)
        if args.command == "correlation":
            return cmd_correlation(config)
        return cmd_sample(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2
    except FlowMatrixError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
