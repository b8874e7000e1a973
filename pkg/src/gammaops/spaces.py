"""Polynomial-weighted function spaces on [0, inf).

Suprema over the half line are replaced by maxima over a finite
:class:`GridSpec`, so every norm and modulus here is a lower bound of the
true quantity.  All difference stencils step to the right (x+h, x+2h,
x+s+t), so functions never need to be evaluated below zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from gammaops.errors import DegenerateFitError, QuadratureError

Evaluator = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class TestFunction:
    """A function on [0, inf) together with its growth class.

    ``growth_exponent`` is the smallest p with ``w_p * f`` bounded.
    ``kinks`` lists points where f or its derivatives are not smooth; the
    integrators split there.
    """

    __test__ = False  # keep pytest from collecting this class

    id: str
    evaluator: Evaluator
    growth_exponent: int
    first_derivative: Optional[Evaluator] = None
    second_derivative: Optional[Evaluator] = None
    kinks: tuple = ()

    def __call__(self, t):
        return self.evaluator(t)


@dataclass(frozen=True)
class GridSpec:
    x_max: float = 50.0
    points: int = 2001
    spacing: str = "uniform"

    def __post_init__(self):
        if self.points < 2:
            raise ValueError("grid needs at least 2 points")
        if not self.x_max > 0:
            raise ValueError("x_max must be positive")
        if self.spacing not in ("uniform", "geometric"):
            raise ValueError(f"unknown spacing {self.spacing!r}")

    def nodes(self) -> np.ndarray:
        if self.spacing == "uniform":
            return np.linspace(0.0, self.x_max, self.points)
        # 0 plus a geometric ladder down to x_max * 1e-6
        inner = np.geomspace(self.x_max * 1e-6, self.x_max, self.points - 1)
        return np.concatenate(([0.0], inner))


def weight(p: int, x):
    """Polynomial weight: 1 for p = 0, else 1/(1 + x**p)."""
    if p < 0:
        raise ValueError(f"p must be non-negative, got {p}")
    x = np.asarray(x, dtype=float)
    if p == 0:
        out = np.ones_like(x)
    else:
        out = 1.0 / (1.0 + x ** p)
    return out if out.ndim else float(out)


def weighted_norm(f: Callable, p: int, grid: GridSpec = GridSpec()) -> float:
    """Grid maximum of ``w_p(x) |f(x)|``."""
    x = grid.nodes()
    vals = np.broadcast_to(np.asarray(f(x), dtype=float), x.shape)
    return float(np.max(weight(p, x) * np.abs(vals)))


def second_difference(f: Callable, x, h: float):
    """``f(x+2h) - 2 f(x+h) + f(x)``."""
    if not h > 0:
        raise ValueError("h must be positive")
    x = np.asarray(x, dtype=float)
    return f(x + 2 * h) - 2 * f(x + h) + f(x)


def _with_kink_stencils(f, grid: GridSpec, offsets) -> np.ndarray:
    # stencil anchors that put a kink exactly on a node, so the grid sup
    # does not depend on where the kink falls between grid points
    x = grid.nodes()
    kinks = getattr(f, "kinks", ())
    if not kinks:
        return x
    extra = np.array([c - o for c in kinks for o in offsets], dtype=float)
    extra = extra[(extra >= 0) & (extra <= grid.x_max)]
    return np.union1d(x, extra)


def _step_ladder(delta: float, samples: int) -> np.ndarray:
    # delta * 2^(-j/8): contains delta and delta/2 exactly
    return delta * 2.0 ** (-np.arange(samples) / 8.0)


def modulus2(f: Callable, p: int, delta: float, grid: GridSpec = GridSpec(),
             samples: int = 40) -> float:
    """Second weighted modulus of smoothness.

    Maximizes ``w_p(x) |Delta_h^2 f(x)|`` over grid x and a geometric
    ladder of step sizes h in (0, delta] that includes delta itself.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    if samples < 32:
        raise ValueError("need at least 32 step samples")
    best = 0.0
    for h in _step_ladder(delta, samples):
        x = _with_kink_stencils(f, grid, (0.0, h, 2 * h))
        w = weight(p, x)
        d2 = np.broadcast_to(second_difference(f, x, h), x.shape)
        best = max(best, float(np.max(w * np.abs(d2))))
    return best


def modulus1(f: Callable, p: int, delta: float, grid: GridSpec = GridSpec(),
             refinement: int = 32) -> float:
    """First weighted modulus ``sup w_p(x) |f(t) - f(x)|`` over ``|t-x| <= delta``.

    For each grid x, t runs over ``2*refinement+1`` evenly spaced points of
    ``[x - delta, x + delta]`` clamped to t >= 0.
    """
    if delta < 0:
        raise ValueError("delta must be non-negative")
    if delta == 0:
        return 0.0
    x = _with_kink_stencils(f, grid, (-delta, 0.0, delta))
    offsets = delta * np.linspace(-1.0, 1.0, 2 * refinement + 1)
    t = np.maximum(x[:, None] + offsets[None, :], 0.0)
    fx = np.broadcast_to(np.asarray(f(x), dtype=float), x.shape)
    ft = np.broadcast_to(np.asarray(f(t), dtype=float), t.shape)
    diff = np.abs(ft - fx[:, None]).max(axis=1)
    return float(np.max(weight(p, x) * diff))


# tanh-sinh rule on [-1, 1]; abscissae beyond |s| = 3.2 carry negligible weight
_TS_SPAN = 3.2
_CHUNK = 128


def _tanh_sinh_nodes(level: int):
    step = 2.0 ** -level
    s = np.arange(-math.ceil(_TS_SPAN / step), math.ceil(_TS_SPAN / step) + 1) * step
    u = 0.5 * math.pi * np.sinh(s)
    nodes = np.tanh(u)
    weights = step * 0.5 * math.pi * np.cosh(s) / np.cosh(u) ** 2
    return nodes, weights


def _tanh_sinh(g: Callable, a: np.ndarray, b: np.ndarray, rel_tol: float,
               min_level: int = 3, max_level: int = 9):
    """Integrate ``g`` over [a, b] elementwise; returns (value, error)."""
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    prev = None
    for level in range(min_level, max_level + 1):
        nodes, weights = _tanh_sinh_nodes(level)
        sigma = mid[..., None] + half[..., None] * nodes
        vals = g(sigma)
        total = (half * (vals * weights).sum(axis=-1)).sum(axis=-1)
        if prev is not None:
            err = np.abs(total - prev)
            scale = np.maximum(np.abs(total), 1.0)
            if np.all(err <= rel_tol * scale):
                return total, err
        prev = total
    return total, err


def steklov_mean(f: Callable, h: float, x, rel_tol: float = 1e-10,
                 kinks: Sequence[float] = None):
    """Second-order Steklov mean of ``f`` with step ``h`` at ``x``.

    Evaluates ``(4/h^2) int_0^h min(s, h-s) [2 f(x+s) - f(x+2s)] ds``,
    the one-dimensional form of the double average over [0, h/2]^2.
    The integration range is split at h/2 and wherever ``x+s`` or ``x+2s``
    hits one of ``kinks`` (defaults to ``f.kinks`` if present).
    """
    if not h > 0:
        raise ValueError("h must be positive")
    if kinks is None:
        kinks = getattr(f, "kinks", ())
    x = np.asarray(x, dtype=float)
    xs = np.atleast_1d(x)

    cuts = [np.zeros_like(xs), np.full_like(xs, h / 2), np.full_like(xs, h)]
    for c in kinks:
        cuts.append(np.clip(c - xs, 0.0, h))
        cuts.append(np.clip((c - xs) / 2, 0.0, h))
    cuts = np.sort(np.stack(cuts, axis=-1), axis=-1)
    scale = 4.0 / h ** 2

    out = np.empty_like(xs)
    for lo in range(0, xs.size, _CHUNK):
        xc = xs[lo:lo + _CHUNK, None, None]

        def integrand(sigma):
            tri = np.minimum(sigma, h - sigma)
            return scale * tri * (2 * f(xc + sigma) - f(xc + 2 * sigma))

        value, err = _tanh_sinh(integrand, cuts[lo:lo + _CHUNK, :-1],
                                cuts[lo:lo + _CHUNK, 1:], rel_tol)
        if np.any(err > rel_tol * np.maximum(np.abs(value), 1.0)):
            raise QuadratureError("Steklov mean did not converge",
                                  estimate=value, error_estimate=err)
        out[lo:lo + _CHUNK] = value
    return out.reshape(x.shape) if x.ndim else float(out[0])


def steklov_second_derivative(f: Callable, h: float, x):
    """``(8 Delta_{h/2}^2 f(x) - Delta_h^2 f(x)) / h^2``, the exact f_h''."""
    if not h > 0:
        raise ValueError("h must be positive")
    return (8 * second_difference(f, x, h / 2) - second_difference(f, x, h)) / h ** 2


def lipschitz_alpha_estimate(f: Callable, p: int, deltas: Sequence[float],
                             grid: GridSpec = GridSpec()) -> float:
    """Least-squares slope of log modulus2 against log delta."""
    deltas = np.asarray(deltas, dtype=float)
    if deltas.size < 3:
        raise ValueError("need at least 3 deltas")
    if np.any(np.diff(deltas) >= 0):
        raise ValueError("deltas must be strictly decreasing")
    moduli = np.array([modulus2(f, p, d, grid) for d in deltas])
    floor = 1e-10 * max(1.0, weighted_norm(f, p, grid))
    if np.any(moduli <= floor):
        raise DegenerateFitError(
            f"second modulus vanishes (max {moduli.max():.3g}); f is effectively affine")
    slope, _ = np.polyfit(np.log(deltas), np.log(moduli), 1)
    return float(slope)


# ----------------------------------------------------------------------
# registry

def _arr(t):
    return np.asarray(t, dtype=float)


def _const(c):
    return lambda t: np.full_like(_arr(t), c)


def _registry():
    funcs = [
        TestFunction("e0", _const(1.0), 0, _const(0.0), _const(0.0)),
        TestFunction("e1", lambda t: _arr(t) * 1.0, 1, _const(1.0), _const(0.0)),
        TestFunction("e2", lambda t: _arr(t) ** 2, 2, lambda t: 2.0 * _arr(t), _const(2.0)),
        TestFunction("e3", lambda t: _arr(t) ** 3, 3,
                     lambda t: 3.0 * _arr(t) ** 2, lambda t: 6.0 * _arr(t)),
        TestFunction("exp", lambda t: np.exp(-_arr(t)), 0,
                     lambda t: -np.exp(-_arr(t)), lambda t: np.exp(-_arr(t))),
        TestFunction("recip", lambda t: 1.0 / (1.0 + _arr(t)), 0,
                     lambda t: -1.0 / (1.0 + _arr(t)) ** 2,
                     lambda t: 2.0 / (1.0 + _arr(t)) ** 3),
        TestFunction("sin", np.sin, 0, np.cos, lambda t: -np.sin(t)),
        TestFunction("t2exp", lambda t: _arr(t) ** 2 * np.exp(-_arr(t)), 0,
                     lambda t: (2 * _arr(t) - _arr(t) ** 2) * np.exp(-_arr(t)),
                     lambda t: (2 - 4 * _arr(t) + _arr(t) ** 2) * np.exp(-_arr(t))),
        # |t-1| and its square root: continuous, not differentiable at 1
        TestFunction("abs1", lambda t: np.abs(_arr(t) - 1.0), 1, kinks=(1.0,)),
        TestFunction("sqrtabs1", lambda t: np.sqrt(np.abs(_arr(t) - 1.0)), 1, kinks=(1.0,)),
    ]
    return {f.id: f for f in funcs}


REGISTRY = _registry()


def get_function(function_id: str) -> TestFunction:
    try:
        return REGISTRY[function_id]
    except KeyError:
        raise KeyError(f"unknown function id {function_id!r}; "
                       f"known: {', '.join(sorted(REGISTRY))}") from None


def affine(a: float, b: float) -> TestFunction:
    """``t -> a t + b`` as a registered-style test function."""
    return TestFunction(f"affine({a},{b})",
                        lambda t: a * _arr(t) + b,
                        1 if a else 0, _const(a), _const(0.0))


def power(m: int) -> TestFunction:
    """``t -> t**m``."""
    return TestFunction(f"e{m}", lambda t: _arr(t) ** m, m)
