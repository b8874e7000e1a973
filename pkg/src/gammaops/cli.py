"""Command-line front end.

    gammaops apply    --n 10 --k 2 --f e1 --x 1
    gammaops moments  --n 10 --k 2 --m-max 4
    gammaops converge --f abs1 --k 1 --n-ladder 25:6400:4 --x 1
    gammaops verify   --suite moments --tol 1e-9

Exit status: 0 success, 1 verification failure, 2 usage error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field, fields
from typing import Optional

from gammaops import experiments
from gammaops.errors import DomainError
from gammaops.operator import (
    OperatorParams,
    QuadratureSpec,
    apply,
    central_moment_closed,
    raw_moment_closed,
)
from gammaops.report import ApplyRow, ExperimentReport, MomentRow
from gammaops.spaces import REGISTRY, GridSpec, get_function

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

SUBCOMMANDS = ("apply", "moments", "converge", "verify")
SUITE_NAMES = tuple(experiments.SUITES) + ("all",)


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    subcommand: str
    n: Optional[int] = None
    n_ladder: Optional[str] = None
    k: int = 1
    p: int = 0
    m_max: int = 4
    function_id: str = "e1"
    x_list: list = field(default_factory=lambda: [1.0])
    x_max: float = 50.0
    grid_points: int = 2001
    rel_tol: float = 1e-12
    abs_tol: float = 1e-14
    suite: str = "all"
    tol: float = 1e-9
    output_path: Optional[str] = None
    format: str = "csv"
    no_meta: bool = False

    def validate(self):
        if self.subcommand not in SUBCOMMANDS:
            raise UsageError(f"unknown subcommand {self.subcommand!r}")
        if self.format not in ("csv", "json"):
            raise UsageError(f"unknown format {self.format!r}")
        if self.subcommand in ("apply", "moments") and self.n is None:
            raise UsageError(f"{self.subcommand} requires --n")
        if self.subcommand in ("apply", "converge") and self.function_id not in REGISTRY:
            raise UsageError(f"unknown function id {self.function_id!r}; "
                             f"known: {', '.join(sorted(REGISTRY))}")
        if self.subcommand == "verify" and self.suite not in SUITE_NAMES:
            raise UsageError(f"unknown suite {self.suite!r}")
        if self.n is not None:
            try:
                OperatorParams(self.n, self.k)
            except DomainError as exc:
                raise UsageError(str(exc)) from None
        if any(not x > 0 for x in self.x_list):
            raise UsageError("x values must be positive")
        try:
            self.grid()
            self.quad()
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        self.ladder()

    def grid(self) -> GridSpec:
        return GridSpec(x_max=self.x_max, points=self.grid_points)

    def quad(self) -> QuadratureSpec:
        return QuadratureSpec(rel_tol=self.rel_tol, abs_tol=self.abs_tol)

    def ladder(self) -> list:
        if self.n_ladder is None:
            return [self.n] if self.n is not None else [25 * 4 ** j for j in range(5)]
        return parse_ladder(self.n_ladder)


def parse_ladder(spec: str) -> list:
    """``start:end:factor`` -> [start, start*factor, ...] up to end."""
    try:
        start, end, factor = (int(v) for v in spec.split(":"))
    except ValueError:
        raise UsageError(f"n-ladder must be start:end:factor, got {spec!r}") from None
    if start < 1 or factor < 2 or end < start:
        raise UsageError(f"bad n-ladder {spec!r}")
    out = []
    n = start
    while n <= end:
        out.append(n)
        n *= factor
    return out


# ----------------------------------------------------------------------
# subcommands


def _cmd_apply(cfg: RunConfig):
    params = OperatorParams(cfg.n, cfg.k)
    f = get_function(cfg.function_id)
    rows = []
    for x in cfg.x_list:
        r = apply(params, f, x, cfg.quad())
        rows.append(ApplyRow(cfg.n, cfg.k, x, f.id, r.value, r.error_estimate,
                             r.subdivisions_used, r.converged))
    meta = experiments._metadata("apply", None, cfg.quad())
    return ExperimentReport(rows, meta, ApplyRow), []


def _cmd_moments(cfg: RunConfig):
    params = OperatorParams(cfg.n, cfg.k)
    rows = []
    for m in range(cfg.m_max + 1):
        if m <= cfg.n - cfg.k:
            c = raw_moment_closed(params, m)
            rows.append(MomentRow(cfg.n, cfg.k, m, "raw", c.numerator, c.denominator, float(c)))
        if m <= cfg.n:
            c = central_moment_closed(params, m)
            rows.append(MomentRow(cfg.n, cfg.k, m, "central", c.numerator, c.denominator, float(c)))
    return ExperimentReport(rows, experiments._metadata("moments_table"), MomentRow), []


def _cmd_converge(cfg: RunConfig):
    f = get_function(cfg.function_id)
    report = experiments.convergence_table(f, cfg.p, cfg.k, cfg.ladder(), cfg.x_list, cfg.quad())
    return report, []


def _cmd_verify(cfg: RunConfig):
    names = list(experiments.SUITES) if cfg.suite == "all" else [cfg.suite]
    report, failures, summary = None, [], {}
    for name in names:
        fn = experiments.SUITES[name]
        if name in ("moments", "composition"):
            rep, fail = fn(tol=cfg.tol, quad_spec=cfg.quad())
        elif name == "steklov":
            rep, fail = fn(grid=cfg.grid())
        elif name == "bounds":
            rep, fail = fn(quad_spec=cfg.quad())
        else:
            rep, fail = fn(grid=cfg.grid(), quad_spec=cfg.quad())
        summary[name] = {"rows": len(rep.rows), "failures": len(fail)}
        failures += fail
        if report is None:
            report = rep
        else:
            report.extend(rep)
    report.metadata = experiments._metadata("verify:" + cfg.suite, cfg.grid(), cfg.quad(),
                                            tol=cfg.tol, suites=summary)
    return report, failures


_COMMANDS = {
    "apply": _cmd_apply,
    "moments": _cmd_moments,
    "converge": _cmd_converge,
    "verify": _cmd_verify,
}


def render(report: ExperimentReport, fmt: str, no_meta: bool) -> str:
    if no_meta:
        report.metadata = {k: v for k, v in report.metadata.items() if k != "timestamp"}
    return report.to_json() if fmt == "json" else report.to_csv()


def run(cfg: RunConfig, stdout=None, stderr=None) -> int:
    """Execute a validated configuration; returns the exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        cfg.validate()
        report, failures = _COMMANDS[cfg.subcommand](cfg)
    except (UsageError, DomainError) as exc:
        print(f"gammaops: error: {exc}", file=stderr)
        return EXIT_USAGE
    text = render(report, cfg.format, cfg.no_meta)
    try:
        if cfg.output_path in (None, "-"):
            stdout.write(text)
        else:
            with open(cfg.output_path, "w", encoding="utf-8") as fh:
                fh.write(text)
    except OSError as exc:
        print(f"gammaops: cannot write output: {exc}", file=stderr)
        return EXIT_IO
    if failures:
        print(f"gammaops: {len(failures)} verification row(s) failed:", file=stderr)
        for row in failures:
            print(f"  {row}", file=stderr)
        return EXIT_FAIL
    return EXIT_OK


# ----------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="JSON file of defaults; flags override it")
    common.add_argument("--n", type=int)
    common.add_argument("--k", type=int)
    common.add_argument("--p", type=int)
    common.add_argument("--m-max", dest="m_max", type=int)
    common.add_argument("--f", dest="function_id")
    common.add_argument("--x", dest="x_list", type=float, action="append")
    common.add_argument("--n-ladder", dest="n_ladder", metavar="START:END:FACTOR")
    common.add_argument("--x-max", dest="x_max", type=float)
    common.add_argument("--grid-points", dest="grid_points", type=int)
    common.add_argument("--rel-tol", dest="rel_tol", type=float)
    common.add_argument("--abs-tol", dest="abs_tol", type=float)
    common.add_argument("--suite", choices=SUITE_NAMES)
    common.add_argument("--tol", type=float)
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--output", dest="output_path", metavar="PATH")
    common.add_argument("--no-meta", dest="no_meta", action="store_true",
                        help="omit the timestamp so identical runs give identical bytes")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="gammaops",
                                     description="Gamma-type operators M_{n,k}: evaluation and checks")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def config_from_args(argv=None) -> RunConfig:
    parser = build_parser()
    ns = vars(parser.parse_args(argv))
    values = {}
    path = ns.pop("config", None)
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                values.update(json.load(fh))
        except OSError as exc:
            raise OSError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            parser.error(f"bad config file {path}: {exc}")
    if ns.pop("verbose", False):
        logging.basicConfig(level=logging.INFO)
    values.update(ns)
    known = {f.name for f in fields(RunConfig)}
    unknown = set(values) - known
    if unknown:
        parser.error(f"unknown config keys: {', '.join(sorted(unknown))}")
    return RunConfig(**values)


def main(argv=None) -> int:
    try:
        cfg = config_from_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except OSError as exc:
        print(f"gammaops: {exc}", file=sys.stderr)
        return EXIT_IO
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
