"""Numerical checks of the weighted approximation bounds for M_{n,k}.

The bounds are asymptotic with unspecified constants, so nothing here
asserts a particular constant.  Each verifier tabulates measured error
against the shape of its bound and reports the observed constant plus a
boundedness verdict.
"""
from __future__ import annotations

import datetime as _dt
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from gammaops.coefficients import factorial_ratio
from gammaops.errors import DegenerateFitError, DualPathMismatch
from gammaops.operator import (
    OperatorParams,
    QuadratureSpec,
    apply,
    central_moment_closed,
    composition_oracle,
    h_operator_apply,
    kernel_density,
    raw_moment_closed,
)
from gammaops.report import ConvergenceRow, ExperimentReport, ReportRow, clean_metadata, ratio
from gammaops.spaces import (
    REGISTRY,
    GridSpec,
    TestFunction,
    get_function,
    modulus1,
    modulus2,
    power,
    steklov_mean,
    steklov_second_derivative,
    weight,
    weighted_norm,
)

DUAL_PATH_RTOL = 1e-8
GROWTH_FACTOR = 1.1


def _metadata(suite: str, grid=None, quad_spec=None, **extra) -> dict:
    meta = {
        "suite": suite,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    if grid is not None:
        meta["grid"] = asdict(grid)
    if quad_spec is not None:
        meta["tolerances"] = asdict(quad_spec)
    meta.update(extra)
    return clean_metadata(meta)


def no_blowup(values: Sequence[float]) -> bool:
    """Max over the second half of a ladder <= 1.1 x max over the whole ladder."""
    v = np.asarray(values, dtype=float)
    return bool(np.max(v[len(v) // 2:]) <= GROWTH_FACTOR * np.max(v))


def no_growth_trend(values: Sequence[float]) -> bool:
    """Last value <= 1.1 x max over the first half of the ladder."""
    v = np.asarray(values, dtype=float)
    half = v[: max(1, len(v) // 2)]
    return bool(v[-1] <= GROWTH_FACTOR * np.max(half))


def loglog_slope(ns: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of log(values) against log(ns)."""
    v = np.asarray(values, dtype=float)
    if np.any(v <= 0) or not np.all(np.isfinite(v)):
        raise DegenerateFitError("log-log fit needs strictly positive finite values")
    slope, _ = np.polyfit(np.log(np.asarray(ns, dtype=float)), np.log(v), 1)
    return float(slope)


def _slope_or_none(ns, values):
    try:
        return loglog_slope(ns, values)
    except DegenerateFitError:
        return None


def inverse_weight(p: int) -> TestFunction:
    """``1/w_p``: 1 for p = 0, else ``1 + t**p``."""
    if p == 0:
        return TestFunction("inv_w0", lambda t: np.ones_like(np.asarray(t, dtype=float)), 0)
    return TestFunction(f"inv_w{p}", lambda t: 1.0 + np.asarray(t, dtype=float) ** p, p)


# ----------------------------------------------------------------------
# boundedness of the operator on C_p


@dataclass(frozen=True)
class NormConstant:
    value: float
    argmax_n: int
    at_smallest_n: bool


def norm_bound_constant(p: int, k: int, n_range: Iterable[int]) -> NormConstant:
    """``max(1, max_n (n-p)! (n-k+p)! / (n! (n-k)!))`` over ``n_range``."""
    ns = list(n_range)
    if not ns:
        raise ValueError("empty n range")
    if min(ns) < max(p, k):
        raise ValueError(f"n range must start at >= max(p, k) = {max(p, k)}")
    best, arg = None, None
    for n in ns:
        r = factorial_ratio([n - p, n - k + p], [n, n - k])
        if best is None or r > best:
            best, arg = r, n
    return NormConstant(max(1.0, float(best)), arg, arg == min(ns))


def verify_weighted_boundedness(p: int, k: int, n_list: Sequence[int],
                                grid: GridSpec = GridSpec(x_max=20.0, points=41),
                                quad_spec: QuadratureSpec = QuadratureSpec()) -> ExperimentReport:
    """Tabulate ``w_p(x) M(1/w_p; x)`` against the norm constant over grid x > 0."""
    for n in n_list:
        if n < max(p + 2, k):
            raise ValueError(f"n={n} below max(p+2, k)")
    const = norm_bound_constant(p, k, range(max(p, k, 1), max(n_list) + 1))
    inv_w = inverse_weight(p)
    xs = [float(x) for x in grid.nodes() if x > 0]
    rows = []
    for n in n_list:
        params = OperatorParams(n, k)
        coef = float(raw_moment_closed(params, p, strict=False)) if p else 0.0
        for x in xs:
            w = weight(p, x)
            measured = w * apply(params, inv_w, x, quad_spec).value
            closed = w * (1.0 + coef * x ** p) if p else 1.0
            if abs(measured - closed) > DUAL_PATH_RTOL * abs(closed):
                raise DualPathMismatch(f"n={n}, x={x}: quadrature {measured} vs closed {closed}")
            rows.append(ReportRow(n, k, p, x, inv_w.id, measured, const.value,
                                  ratio(measured, const.value)))
    worst = max(r.ratio for r in rows)
    meta = _metadata("weighted_boundedness", grid, quad_spec, constant=const.value,
                     constant_argmax_n=const.argmax_n, max_ratio=worst,
                     passed=worst <= 1 + 1e-6)
    return ExperimentReport(rows, meta)


def second_moment_weighted(params: OperatorParams, p: int, x: float) -> float:
    """Closed form of ``w_p(x) M((t-x)^2 / w_p(t); x)``."""
    c2 = central_moment_closed(params, 2)
    if p == 0:
        return float(c2) * x * x
    raw = lambda m: raw_moment_closed(params, m, strict=False)
    poly = raw(p + 2) - 2 * raw(p + 1) + raw(p)
    return weight(p, x) * (float(poly) * x ** (p + 2) + float(c2) * x * x)


def verify_second_moment_bound(p: int, k: int, n_list: Sequence[int], x_list: Sequence[float],
                               check: bool = True,
                               quad_spec: QuadratureSpec = QuadratureSpec()) -> ExperimentReport:
    """Tabulate the weighted second central moment scaled by n/x^2."""
    rows = []
    for n in n_list:
        if n < p + 2:
            raise ValueError(f"n={n} below p+2={p + 2}")
        params = OperatorParams(n, k)
        for x in x_list:
            measured = second_moment_weighted(params, p, x)
            if check:
                f = TestFunction(f"phi2/w{p}",
                                 lambda t, x=x: (np.asarray(t) - x) ** 2 * (1.0 + (np.asarray(t) ** p if p else 0.0)),
                                 p + 2)
                quad_val = weight(p, x) * apply(params, f, x, quad_spec).value
                if abs(quad_val - measured) > DUAL_PATH_RTOL * abs(measured):
                    raise DualPathMismatch(f"n={n}, x={x}: quadrature {quad_val} vs closed {measured}")
            bound = x * x / n
            rows.append(ReportRow(n, k, p, x, f"phi2/w{p}", measured, bound, ratio(measured, bound)))
    ratios = [r.ratio for r in rows]
    per_n = [max(r.ratio for r in rows if r.n == n) for n in n_list]
    meta = _metadata("second_moment_bound", None, quad_spec, sup_ratio=max(ratios),
                     bounded=no_blowup(per_n) and no_growth_trend(per_n))
    return ExperimentReport(rows, meta)


# ----------------------------------------------------------------------
# convergence rates


def _per_x(rows, x_list, attr="ratio"):
    return {x: [getattr(r, attr) for r in rows if r.x == x] for x in x_list}


def verify_c1_rate(f: TestFunction, p: int, k: int, n_ladder: Sequence[int],
                   x_list: Sequence[float], grid: GridSpec = GridSpec(),
                   quad_spec: QuadratureSpec = QuadratureSpec()) -> ExperimentReport:
    """Error scaled by sqrt(n) / (x ||f'||_p) for f with a continuous derivative."""
    if f.first_derivative is None:
        raise ValueError(f"{f.id} has no registered first derivative")
    dnorm = weighted_norm(f.first_derivative, p, grid)
    rows = []
    for x in x_list:
        fx = float(f(x))
        for n in n_ladder:
            mf = apply(OperatorParams(n, k), f, x, quad_spec).value
            measured = weight(p, x) * abs(mf - fx)
            bound = dnorm * x / math.sqrt(n)
            rows.append(ReportRow(n, k, p, x, f.id, measured, bound, ratio(measured, bound)))
    seqs = _per_x(rows, x_list)
    meta = _metadata("c1_rate", grid, quad_spec, derivative_norm=dnorm,
                     sup_ratio=max(r.ratio for r in rows),
                     bounded=all(no_blowup(s) and no_growth_trend(s) for s in seqs.values()))
    return ExperimentReport(rows, meta)


def verify_h_operator_bound(g: TestFunction, p: int, k: int, n_list: Sequence[int],
                            x_list: Sequence[float], grid: GridSpec = GridSpec(),
                            quad_spec: QuadratureSpec = QuadratureSpec()) -> ExperimentReport:
    """Error of the linear-reproducing operator scaled by n / (x^2 ||g''||_p)."""
    if g.second_derivative is None:
        raise ValueError(f"{g.id} has no registered second derivative")
    d2norm = weighted_norm(g.second_derivative, p, grid)
    rows = []
    for x in x_list:
        gx = float(g(x))
        for n in n_list:
            hg = h_operator_apply(OperatorParams(n, k), g, x, quad_spec)
            measured = weight(p, x) * abs(hg - gx)
            bound = d2norm * x * x / n
            rows.append(ReportRow(n, k, p, x, g.id, measured, bound, ratio(measured, bound)))
    finite = [r.ratio for r in rows if math.isfinite(r.ratio)]
    seqs = _per_x(rows, x_list)
    meta = _metadata("h_operator_bound", grid, quad_spec, second_derivative_norm=d2norm,
                     sup_ratio=max(finite) if finite else None,
                     bounded=all(no_blowup(s) and no_growth_trend(s) for s in seqs.values()))
    return ExperimentReport(rows, meta)


def verify_main_theorem(f: TestFunction, p: int, k: int, n_ladder: Sequence[int],
                        x_list: Sequence[float], grid: GridSpec = GridSpec(),
                        quad_spec: QuadratureSpec = QuadratureSpec()) -> ExperimentReport:
    """Error against ``C * w2(f, x/sqrt(n)) + w1(f, |1-k| x / n)``.

    C is fitted as the smallest constant making every row pass.  Rows record
    the bound with that C; metadata carries C, its per-n profile and the
    log-log slope of the measured error for each x.
    """
    raw = []
    for x in x_list:
        fx = float(f(x))
        for n in n_ladder:
            mf = apply(OperatorParams(n, k), f, x, quad_spec).value
            measured = weight(p, x) * abs(mf - fx)
            m2 = modulus2(f, p, x / math.sqrt(n), grid)
            m1 = modulus1(f, p, abs(1 - k) * x / n, grid)
            excess = measured - m1
            if excess <= 0:
                need = 0.0
            elif m2 > 0:
                need = excess / m2
            else:
                need = math.inf
            raw.append((n, x, measured, m2, m1, need))

    const = max(r[5] for r in raw)
    rows = []
    for n, x, measured, m2, m1, _ in raw:
        bound = const * m2 + m1
        rows.append(ReportRow(n, k, p, x, f.id, measured, bound, ratio(measured, bound)))
    per_n = [max(r[5] for r in raw if r[0] == n) for n in n_ladder]
    slopes = {str(x): _slope_or_none(n_ladder, [r.measured for r in rows if r.x == x])
              for x in x_list}
    bound_slopes = {str(x): _slope_or_none(n_ladder, [r[3] + r[4] for r in raw if r[1] == x])
                    for x in x_list}
    meta = _metadata("main_theorem", grid, quad_spec, constant=const,
                     constant_by_n=per_n,
                     stable=math.isfinite(const) and no_blowup(per_n) and no_growth_trend(per_n),
                     error_slopes=slopes, modulus_slopes=bound_slopes)
    return ExperimentReport(rows, meta)


def convergence_table(f: TestFunction, p: int, k: int, n_ladder: Sequence[int],
                      x_list: Sequence[float],
                      quad_spec: QuadratureSpec = QuadratureSpec()) -> ExperimentReport:
    """Rows of (n, x, M f, f, weighted error); per-x log-log slopes in metadata."""
    rows = []
    for x in x_list:
        fx = float(f(x))
        for n in n_ladder:
            mf = apply(OperatorParams(n, k), f, x, quad_spec).value
            rows.append(ConvergenceRow(n, k, p, x, f.id, mf, fx, weight(p, x) * abs(mf - fx)))
    slopes = {str(x): _slope_or_none(n_ladder, [r.weighted_error for r in rows if r.x == x])
              for x in x_list}
    meta = _metadata("convergence", None, quad_spec, function_id=f.id, slopes=slopes)
    return ExperimentReport(rows, meta, ConvergenceRow)


# ----------------------------------------------------------------------
# named suites used by the command line


MOMENT_SWEEP = dict(ns=(5, 10, 20, 50), ks=(1, 2, 3), xs=(0.5, 1.0, 2.0))
COMPOSITION_SWEEP = dict(ns=(1, 3, 5, 10, 20), xs=(0.5, 1.0, 2.0))
STEKLOV_STEPS = (1.0, 0.5, 0.1)
STEKLOV_SLACK = 0.05


def suite_moments(tol: float = 1e-9, quad_spec: QuadratureSpec = QuadratureSpec()):
    """Quadrature against closed-form raw moments; returns (report, failures)."""
    rows, failures = [], []
    for n in MOMENT_SWEEP["ns"]:
        for k in MOMENT_SWEEP["ks"]:
            params = OperatorParams(n, k)
            for m in range(min(4, n - k) + 1):
                coef = float(raw_moment_closed(params, m))
                for x in MOMENT_SWEEP["xs"]:
                    measured = apply(params, power(m), x, quad_spec).value
                    exact = coef * x ** m
                    row = ReportRow(n, k, m, x, f"e{m}", measured, exact, ratio(measured, exact))
                    rows.append(row)
                    if abs(measured - exact) > tol * abs(exact):
                        failures.append(row)
    meta = _metadata("moments", None, quad_spec, tol=tol, failures=len(failures))
    return ExperimentReport(rows, meta), failures


def suite_composition(tol: float = 1e-9, quad_spec: QuadratureSpec = QuadratureSpec()):
    """Gamma-density composition against the closed kernel (p column holds 0)."""
    rows, failures = [], []
    for n in COMPOSITION_SWEEP["ns"]:
        for k in sorted({1, 2, min(3, n)}):
            if k > n:
                continue
            params = OperatorParams(n, k)
            for x in COMPOSITION_SWEEP["xs"]:
                for t in COMPOSITION_SWEEP["xs"]:
                    measured = composition_oracle(params, x, t, quad_spec)
                    exact = kernel_density(params, x, t)
                    # function_id records the kernel argument t
                    row = ReportRow(n, k, 0, x, f"K(t={t!r})", measured, exact, ratio(measured, exact))
                    rows.append(row)
                    if abs(measured - exact) > tol * exact:
                        failures.append(row)
    meta = _metadata("composition", None, quad_spec, tol=tol, failures=len(failures))
    return ExperimentReport(rows, meta), failures


def steklov_checks(f: TestFunction, h: float, grid: GridSpec = GridSpec(),
                   slack: float = STEKLOV_SLACK):
    """Both Steklov inequalities for one (f, h); returns two rows and pass flags.

    The comparison allows ``slack`` relative to the modulus plus a round-off
    floor of 1e-12 * max(1, ||f||_p) (affine f makes both sides round-off).
    """
    p = f.growth_exponent
    x = grid.nodes()
    w = weight(p, x)
    fh = steklov_mean(f, h, x)
    dist = float(np.max(w * np.abs(np.asarray(f(x)) - fh)))
    curv = float(np.max(w * np.abs(steklov_second_derivative(f, h, x))))
    om = modulus2(f, p, h, grid)
    floor = 1e-12 * max(1.0, weighted_norm(f, p, grid))
    b1, b2 = om, 9.0 / h ** 2 * om
    rows = [
        ReportRow(0, 0, p, h, f"{f.id}:f-fh", dist, b1, ratio(dist, b1)),
        ReportRow(0, 0, p, h, f"{f.id}:fh''", curv, b2, ratio(curv, b2)),
    ]
    ok = [dist <= b1 * (1 + slack) + floor, curv <= b2 * (1 + slack) + floor / h ** 2]
    return rows, ok


def suite_steklov(grid: GridSpec = GridSpec(), max_growth: int = 2):
    """Steklov inequalities for registry functions with growth <= max_growth.

    Rows use n = k = 0 and hold the step h in the x column.
    """
    rows, failures = [], []
    for fid in sorted(REGISTRY):
        f = REGISTRY[fid]
        if f.growth_exponent > max_growth:
            continue
        for h in STEKLOV_STEPS:
            pair, ok = steklov_checks(f, h, grid)
            rows += pair
            failures += [r for r, good in zip(pair, ok) if not good]
    meta = _metadata("steklov", grid, None, slack=STEKLOV_SLACK, failures=len(failures))
    return ExperimentReport(rows, meta), failures


def suite_bounds(quad_spec: QuadratureSpec = QuadratureSpec()):
    """Weighted boundedness of M and the weighted second-moment bound."""
    report = ExperimentReport([], {})
    failures = []
    verdicts = {}
    for p in (0, 1, 2):
        for k in (1, 2):
            ns = [max(p + 2, k) * 2 ** j for j in range(4)]
            r = verify_weighted_boundedness(p, k, ns, quad_spec=quad_spec)
            report.extend(r)
            failures += [row for row in r.rows if row.ratio > 1 + 1e-6]
            r2 = verify_second_moment_bound(p, k, [10 * 2 ** j for j in range(6)],
                                            [0.5, 1.0, 2.0], quad_spec=quad_spec)
            report.extend(r2)
            verdicts[f"p={p},k={k}"] = r2.metadata["bounded"]
            if not r2.metadata["bounded"]:
                failures += r2.rows
    report.metadata = _metadata("bounds", None, quad_spec, second_moment_bounded=verdicts,
                                failures=len(failures))
    return report, failures


def suite_rates(grid: GridSpec = GridSpec(), quad_spec: QuadratureSpec = QuadratureSpec()):
    """First-derivative rate and main-theorem constant stability."""
    report = ExperimentReport([], {})
    failures = []
    verdicts = {}
    ladder = [10 * 2 ** j for j in range(7)]
    xs = [0.5, 1.0, 2.0]
    for fid in ("exp", "t2exp"):
        for k in (1, 2):
            r = verify_c1_rate(get_function(fid), 0, k, ladder, xs, grid, quad_spec)
            report.extend(r)
            verdicts[f"c1:{fid}:k={k}"] = r.metadata["bounded"]
            if not r.metadata["bounded"]:
                failures += r.rows
    for fid, p in (("abs1", 0), ("exp", 0), ("sin", 0)):
        for k in (1, 2):
            r = verify_main_theorem(get_function(fid), p, k, [25 * 4 ** j for j in range(4)],
                                    [1.0], grid, quad_spec)
            report.extend(r)
            verdicts[f"main:{fid}:k={k}"] = r.metadata["stable"]
            if not r.metadata["stable"]:
                failures += r.rows
    report.metadata = _metadata("rates", grid, quad_spec, verdicts=verdicts,
                                failures=len(failures))
    return report, failures


SUITES = {
    "moments": suite_moments,
    "composition": suite_composition,
    "steklov": suite_steklov,
    "bounds": suite_bounds,
    "rates": suite_rates,
}
