"""Generalized Gamma-type operators M_{n,k}.

``M_{n,k}(f; x) = int_0^inf K_{n,k}(x, t) f(t) dt`` with kernel

    K_{n,k}(x, t) = (2n-k+1)! / (n! (n-k)!) * x^(n+1) t^(n-k) / (x+t)^(2n-k+2).

The kernel is also the composition ``int_0^inf g_n(x,u) g_{n-k}(u,t) du``
of two Gamma densities; :func:`composition_oracle` evaluates that route
independently.  Numerically, the substitution u = t/(x+t) turns the
operator into an expectation under Beta(n-k+1, n+1), which is what
:func:`apply` integrates.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction

from scipy.integrate import quad

from gammaops.coefficients import (
    factorial_ratio,
    falling_factorial,
    log_factorial,
)
from gammaops.errors import DomainError, NonIntegrableError, QuadratureError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OperatorParams:
    n: int
    k: int

    def __post_init__(self):
        if self.k < 1 or self.n < 1:
            raise DomainError(f"n and k must be positive integers, got n={self.n}, k={self.k}")
        if self.n < self.k:
            raise DomainError(f"need n >= k, got n={self.n}, k={self.k}")

    @property
    def shift(self) -> float:
        """Relative first central moment (1-k)/n."""
        return (1 - self.k) / self.n


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-12
    abs_tol: float = 1e-14
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


@dataclass(frozen=True)
class ApplyResult:
    value: float
    error_estimate: float
    subdivisions_used: int
    converged: bool = True


def _log_kernel_constant(params: OperatorParams) -> float:
    n, k = params.n, params.k
    return log_factorial(2 * n - k + 1) - log_factorial(n) - log_factorial(n - k)


def kernel_density(params: OperatorParams, x: float, t: float) -> float:
    """K_{n,k}(x, t), evaluated in log space."""
    if not x > 0 or t < 0:
        raise DomainError(f"need x > 0 and t >= 0, got x={x}, t={t}")
    n, k = params.n, params.k
    if t == 0:
        if n > k:
            return 0.0
        log_t_term = 0.0
    else:
        log_t_term = (n - k) * math.log(t)
    logk = (_log_kernel_constant(params) + (n + 1) * math.log(x) + log_t_term
            - (2 * n - k + 2) * math.log(x + t))
    return math.exp(logk)


def gamma_density(n: int, x: float, u: float) -> float:
    """g_n(x, u) = x^(n+1) e^(-xu) u^n / n!."""
    if n < 0 or not x > 0 or u < 0:
        raise DomainError(f"need n >= 0, x > 0, u >= 0, got n={n}, x={x}, u={u}")
    if u == 0:
        return x if n == 0 else 0.0
    return math.exp((n + 1) * math.log(x) - x * u + n * math.log(u) - log_factorial(n))


def _beta_breakpoints(a: float, b: float) -> list:
    mode = (a - 1) / (a + b - 2) if a + b > 2 else 0.5
    sd = math.sqrt(a * b / ((a + b) ** 2 * (a + b + 1)))
    pts = [mode]
    for c in (3.0, 8.0, 16.0):
        pts += [mode - c * sd, mode + c * sd]
    return pts


def apply(params: OperatorParams, f, x: float, quad_spec: QuadratureSpec = QuadratureSpec()) -> ApplyResult:
    """M_{n,k}(f; x) by adaptive quadrature in the Beta variable u = t/(x+t).

    ``f`` is a :class:`~gammaops.spaces.TestFunction` (or any callable with
    ``growth_exponent``); its growth must satisfy p <= n for the integral
    to converge.  A result with ``converged=False`` carries the best
    estimate QUADPACK produced before giving up.
    """
    if not x > 0:
        raise DomainError(f"x must be positive, got {x}")
    n, k = params.n, params.k
    p = getattr(f, "growth_exponent", 0)
    if p > n:
        raise NonIntegrableError(f"growth exponent p={p} exceeds n={n}")

    a, b = n - k + 1, n + 1
    # log B(a, b) = log((n-k)! n! / (2n-k+1)!)
    log_beta = -_log_kernel_constant(params)
    lower_pow, upper_pow = n - k, n

    def integrand(u):
        logd = lower_pow * math.log(u) + upper_pow * math.log1p(-u) - log_beta
        return math.exp(logd) * float(f(x * u / (1.0 - u)))

    pts = _beta_breakpoints(a, b)
    pts += [c / (x + c) for c in getattr(f, "kinks", ()) if c > 0]
    pts = sorted({v for v in pts if 0.0 < v < 1.0})

    # QUADPACK needs at least one subinterval per breakpoint panel
    limit = max(quad_spec.max_subdivisions, len(pts) + 1)
    out = quad(integrand, 0.0, 1.0, points=pts or None,
               epsabs=quad_spec.abs_tol, epsrel=quad_spec.rel_tol,
               limit=limit, full_output=1)
    value, err, info = out[0], out[1], out[2]
    converged = len(out) == 3
    if not converged:
        log.warning("M_{%d,%d}(%s; %g): %s", n, k, getattr(f, "id", f), x, out[3])
    return ApplyResult(value, abs(err), int(info["last"]), converged)


def raw_moment_closed(params: OperatorParams, m: int, strict: bool = True) -> Fraction:
    """Coefficient c with M_{n,k}(t^m; x) = c x^m, namely [n-k+m]_m / [n]_m.

    By default m is limited to m <= n-k.  The identity holds for every
    m <= n (the integral converges there); ``strict=False`` allows that
    wider range.
    """
    n, k = params.n, params.k
    limit = n - k if strict else n
    if not 0 <= m <= limit:
        raise DomainError(f"moment order m={m} outside [0, {limit}] for n={n}, k={k}")
    return falling_factorial(n - k + m, m) / falling_factorial(n, m)


def central_moment_closed(params: OperatorParams, m: int) -> Fraction:
    """Coefficient c with M_{n,k}((t-x)^m; x) = c x^m.

    Alternating sum over j of (-1)^j C(m,j) (n-m+j)! (n-k+m-j)! / (n! (n-k)!).
    """
    n, k = params.n, params.k
    if not 0 <= m <= n:
        raise DomainError(f"central moment order m={m} needs 0 <= m <= n={n}")
    total = Fraction(0)
    for j in range(m + 1):
        term = math.comb(m, j) * factorial_ratio([n - m + j, n - k + m - j], [n, n - k])
        total += -term if j % 2 else term
    return total


def central_moment_low_order(params: OperatorParams, m: int) -> Fraction:
    """Expanded rational forms of the central moment coefficients for m <= 4."""
    n, k = params.n, params.k
    if not 0 <= m <= min(4, n):
        raise DomainError(f"low-order form needs 0 <= m <= min(4, n), got m={m}, n={n}")
    if m == 0:
        return Fraction(1)
    if m == 1:
        return Fraction(1 - k, n)
    if m == 2:
        return Fraction(k * k - 5 * k + 2 * n + 4, n * (n - 1))
    if m == 3:
        # carries a factor (k-3): the third central moment vanishes at k = 3
        return Fraction(-k ** 3 + 12 * k ** 2 - 35 * k + n * (18 - 6 * k) + 24,
                        n * (n - 1) * (n - 2))
    return Fraction(k ** 4 - 22 * k ** 3 + k ** 2 * (143 + 12 * n) - k * (314 + 108 * n)
                    + 12 * n ** 2 + 180 * n + 192,
                    n * (n - 1) * (n - 2) * (n - 3))


def central_moment_scaled(params: OperatorParams, m: int) -> float:
    """central_moment_closed * n^floor((m+1)/2); bounded in n."""
    return float(central_moment_closed(params, m) * params.n ** ((m + 1) // 2))


def h_operator_apply(params: OperatorParams, f, x: float,
                     quad_spec: QuadratureSpec = QuadratureSpec()) -> float:
    """M_{n,k}(f; x) - f(x + (1-k)x/n) + f(x); reproduces affine functions."""
    shifted = x + params.shift * x
    if not shifted > 0:
        raise DomainError(f"shifted point {shifted} is not positive")
    return apply(params, f, x, quad_spec).value - float(f(shifted)) + float(f(x))


def composition_oracle(params: OperatorParams, x: float, t: float,
                       quad_spec: QuadratureSpec = QuadratureSpec()) -> float:
    """int_0^inf g_n(x,u) g_{n-k}(u,t) du, integrated numerically in u."""
    if not (x > 0 and t > 0):
        raise DomainError(f"need x, t > 0, got x={x}, t={t}")
    n, m = params.n, params.n - params.k
    lx, lt = math.log(x), math.log(t)
    const = (n + 1) * lx - log_factorial(n) + m * lt - log_factorial(m)

    def integrand(u):
        if u <= 0.0:
            return 0.0
        return math.exp(const + (n + m + 1) * math.log(u) - u * (x + t))

    # the u-integrand is a Gamma(2n-k+2, x+t) shape
    shape, rate = n + m + 2, x + t
    peak, sd = (shape - 1) / rate, math.sqrt(shape) / rate
    upper = peak + 40 * sd
    pts = sorted({v for c in (-8, -3, 0, 3, 8) if 0 < (v := peak + c * sd) < upper})
    total, total_err = 0.0, 0.0
    for lo, hi, extra in ((0.0, upper, pts), (upper, math.inf, None)):
        out = quad(integrand, lo, hi, points=extra if hi != math.inf else None,
                   epsabs=0.0, epsrel=quad_spec.rel_tol,
                   limit=quad_spec.max_subdivisions, full_output=1)
        total += out[0]
        total_err += out[1]
        if len(out) == 4 and out[1] > quad_spec.rel_tol * max(abs(total), 1e-300) * 10:
            raise QuadratureError(f"composition integral: {out[3]}",
                                  estimate=total, error_estimate=total_err)
    return total
