"""Test-function corpus and Lebesgue-point diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from . import quadrature
from .errors import ArgumentError, CatalogError, IntegrationError
from .kernels import DomainSpec

LEBESGUE = "lebesgue"
NON_LEBESGUE = "non_lebesgue"
INCONCLUSIVE = "inconclusive"

DEFAULT_H_GRID = (1e-1, 1e-2, 1e-3, 1e-4)
DEFAULT_SCAN_TOL = 1e-2
AVERAGE_TOL = 1e-11

_UNIT = DomainSpec.finite(-1.0, 1.0)


@dataclass(frozen=True)
class TestFunction:
    """A bounded, integrable f with annotated points.

    ``domain`` is the largest domain on which ``sup_bound`` and integrability
    are certified.  ``l1_norm`` maps a domain to ``int |f|`` in closed form.
    ``annotated_points`` holds ``(x0, expected_verdict)`` pairs.
    """

    __test__ = False  # keep pytest from collecting this class

    name: str
    evaluator: Callable[[np.ndarray], np.ndarray]
    sup_bound: float
    domain: DomainSpec
    l1_norm: Callable[[DomainSpec], float]
    jump_points: tuple = ()
    annotated_points: tuple = ()
    value_convention: str = "continuous"
    params: tuple = field(default=(), compare=True)

    def __call__(self, t):
        out = self.evaluator(np.asarray(t, dtype=float))
        if np.ndim(t) == 0:
            return float(out)
        return np.broadcast_to(np.asarray(out, dtype=float), np.shape(t))

    def annotation(self, x0: float) -> Optional[str]:
        for p, verdict in self.annotated_points:
            if p == x0:
                return verdict
        return None


def _constant_l1(c):
    def l1(domain):
        return abs(c) * domain.length if domain.is_finite else math.inf
    return l1


def _linear_l1(domain):
    a, b = domain.a, domain.b
    if a >= 0:
        return (b * b - a * a) / 2
    if b <= 0:
        return (a * a - b * b) / 2
    return (a * a + b * b) / 2


def _quadratic_l1(domain):
    return (domain.b ** 3 - domain.a ** 3) / 3


def _step_l1(domain):
    return max(domain.b, 0.0) - max(domain.a, 0.0)


def _gauss_bump_l1(domain):
    return 0.5 * math.sqrt(math.pi) * (math.erf(domain.b) - math.erf(domain.a))


def _two_sided_exp_l1(domain):
    def cdf(s):
        if math.isinf(s):
            return 0.0 if s < 0 else 2.0
        return math.exp(s) if s < 0 else 2.0 - math.exp(-s)
    return cdf(domain.b) - cdf(domain.a)


OSCILLATOR_CUTOFF = 1e-3


def _clipped_oscillator(t):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(np.abs(t) >= OSCILLATOR_CUTOFF, np.sin(1.0 / t), 0.0)


def _quad_l1(f):
    def l1(domain):
        res = quadrature.integrate_finite(lambda t: np.abs(f(t)), domain.a, domain.b,
                                          1e-10, (-OSCILLATOR_CUTOFF, OSCILLATOR_CUTOFF))
        return res.value
    return l1


BUILTIN_FUNCTIONS = ("constant", "linear", "quadratic", "unit_step", "gaussian_bump",
                     "two_sided_exp", "clipped_oscillator")


def builtin_function(name: str, **params) -> TestFunction:
    """Corpus member by name; ``constant`` takes ``c`` (default 0.5)."""
    if name == "constant":
        c = float(params.pop("c", 0.5))
        if params:
            raise ArgumentError(f"unknown parameters for constant: {sorted(params)}")
        return TestFunction(
            name=name, evaluator=lambda t: np.full(np.shape(t), c), sup_bound=abs(c),
            domain=_UNIT, l1_norm=_constant_l1(c),
            annotated_points=((0.0, LEBESGUE), (0.3, LEBESGUE), (-0.5, LEBESGUE)),
            params=(("c", c),))
    if params:
        raise ArgumentError(f"{name!r} takes no parameters")
    if name == "linear":
        return TestFunction(
            name=name, evaluator=lambda t: t, sup_bound=1.0, domain=_UNIT,
            l1_norm=_linear_l1,
            annotated_points=((0.0, LEBESGUE), (0.3, LEBESGUE), (-0.5, LEBESGUE)))
    if name == "quadratic":
        return TestFunction(
            name=name, evaluator=lambda t: t * t, sup_bound=1.0, domain=_UNIT,
            l1_norm=_quadratic_l1,
            annotated_points=((0.0, LEBESGUE), (0.3, LEBESGUE), (-0.5, LEBESGUE)))
    if name == "unit_step":
        return TestFunction(
            name=name, evaluator=lambda t: np.where(t >= 0, 1.0, 0.0), sup_bound=1.0,
            domain=_UNIT, l1_norm=_step_l1, jump_points=(0.0,),
            annotated_points=((0.0, NON_LEBESGUE), (0.5, LEBESGUE), (-0.5, LEBESGUE)),
            value_convention="right-continuous, f(0) = 1")
    if name == "gaussian_bump":
        return TestFunction(
            name=name, evaluator=lambda t: np.exp(-t * t), sup_bound=1.0,
            domain=DomainSpec.real_line(), l1_norm=_gauss_bump_l1,
            annotated_points=((0.0, LEBESGUE), (0.3, LEBESGUE), (0.7, LEBESGUE)))
    if name == "two_sided_exp":
        return TestFunction(
            name=name, evaluator=lambda t: np.exp(-np.abs(t)), sup_bound=1.0,
            domain=DomainSpec.real_line(), l1_norm=_two_sided_exp_l1,
            annotated_points=((0.0, LEBESGUE), (0.3, LEBESGUE), (0.7, LEBESGUE)))
    if name == "clipped_oscillator":
        return TestFunction(
            name=name, evaluator=_clipped_oscillator, sup_bound=1.0, domain=_UNIT,
            l1_norm=_quad_l1(_clipped_oscillator),
            jump_points=(-OSCILLATOR_CUTOFF, OSCILLATOR_CUTOFF),
            annotated_points=((0.3, LEBESGUE), (0.5, LEBESGUE), (-0.4, LEBESGUE)),
            value_convention=f"0 for |t| < {OSCILLATOR_CUTOFF:g}")
    raise CatalogError(f"unknown test function {name!r}; known: {', '.join(BUILTIN_FUNCTIONS)}")


def _window(f, x0, h, side):
    if side == "right":
        lo, hi = x0, x0 + h
    elif side == "left":
        lo, hi = x0 - h, x0
    else:
        raise ArgumentError(f"side must be 'left' or 'right', got {side!r}")
    if lo < f.domain.a or hi > f.domain.b:
        raise ArgumentError(f"window ({lo}, {hi}) leaves the domain {f.domain} of {f.name}")
    return lo, hi


def _abs_deviation_integral(f, x0, lo, hi, tol):
    fx0 = f(x0)
    res = quadrature.integrate_finite(lambda t: np.abs(f(t) - fx0), lo, hi, tol,
                                      f.jump_points)
    if not res.converged:
        raise IntegrationError(
            f"|f - f(x0)| integral for {f.name} on ({lo}, {hi}) did not converge", res)
    return res.value


def one_sided_average(f: TestFunction, x0: float, h: float, side: str,
                      tol: float = AVERAGE_TOL) -> float:
    """(1/h) * integral of |f(t) - f(x0)| over the one-sided window of width h.

    ``tol`` is the accuracy of the average itself.
    """
    if not h > 0:
        raise ArgumentError("h must be positive")
    lo, hi = _window(f, x0, h, side)
    return _abs_deviation_integral(f, x0, lo, hi, tol * h) / h


def profile_F(f: TestFunction, x0: float, t: float, tol: float = AVERAGE_TOL) -> float:
    """Accumulated deviation integral of |f(u) - f(x0)| over u in (x0, t), t >= x0."""
    if t < x0:
        raise ArgumentError("profile_F needs t >= x0")
    if t == x0:
        return 0.0
    lo, hi = _window(f, x0, t - x0, "right")
    return _abs_deviation_integral(f, x0, lo, hi, tol * (t - x0))


def profile_G(f: TestFunction, x0: float, t: float, tol: float = AVERAGE_TOL) -> float:
    """Accumulated deviation integral of |f(u) - f(x0)| over u in (t, x0), t <= x0."""
    if t > x0:
        raise ArgumentError("profile_G needs t <= x0")
    if t == x0:
        return 0.0
    lo, hi = _window(f, x0, x0 - t, "left")
    return _abs_deviation_integral(f, x0, lo, hi, tol * (x0 - t))


@dataclass(frozen=True)
class LebesgueScan:
    x0: float
    h_grid: tuple
    left_ratios: tuple
    right_ratios: tuple
    sup_ratio_by_delta: dict
    verdict: str
    scan_tol: float

    def to_json(self) -> dict:
        return {
            "x0": self.x0,
            "h_grid": list(self.h_grid),
            "left_ratios": list(self.left_ratios),
            "right_ratios": list(self.right_ratios),
            "sup_ratio_by_delta": {repr(k): v for k, v in self.sup_ratio_by_delta.items()},
            "verdict": self.verdict,
            "scan_tol": self.scan_tol,
        }


def _non_increasing(seq, slack):
    return all(b <= a + slack for a, b in zip(seq, seq[1:]))


def classify_point(f: TestFunction, x0: float, h_grid=DEFAULT_H_GRID,
                   scan_tol: float = DEFAULT_SCAN_TOL) -> LebesgueScan:
    h_grid = tuple(float(h) for h in h_grid)
    if len(h_grid) < 4:
        raise ArgumentError("h_grid needs at least 4 entries")
    if any(b >= a for a, b in zip(h_grid, h_grid[1:])) or h_grid[-1] <= 0:
        raise ArgumentError("h_grid must be strictly descending and positive")
    if h_grid[0] / h_grid[-1] < 1e3 * (1 - 1e-12):
        raise ArgumentError("h_grid must span at least 3 decades")
    left = tuple(one_sided_average(f, x0, h, "left") for h in h_grid)
    right = tuple(one_sided_average(f, x0, h, "right") for h in h_grid)
    sup_by_delta = {}
    for i, delta in enumerate(h_grid):
        sup_by_delta[delta] = max(max(left[i:]), max(right[i:]))

    if (left[-1] < scan_tol and right[-1] < scan_tol
            and _non_increasing(left, scan_tol) and _non_increasing(right, scan_tol)):
        verdict = LEBESGUE
    elif min(left) >= scan_tol or min(right) >= scan_tol:
        verdict = NON_LEBESGUE
    else:
        verdict = INCONCLUSIVE
    return LebesgueScan(x0=float(x0), h_grid=h_grid, left_ratios=left, right_ratios=right,
                        sup_ratio_by_delta=sup_by_delta, verdict=verdict, scan_tol=scan_tol)


def log_grid(delta: float, decades: int = 4, per_decade: int = 8) -> tuple:
    """Descending grid delta * 10^(-k/per_decade), k = 0..decades*per_decade."""
    return tuple(delta * 10.0 ** (-k / per_decade) for k in range(decades * per_decade + 1))


@lru_cache(maxsize=4096)
def measured_epsilon(f: TestFunction, x0: float, delta: float,
                     left_room: float = math.inf, right_room: float = math.inf) -> float:
    """Sup over h in (0, delta] (log grid) of both one-sided averages.

    Windows are clamped to ``left_room``/``right_room`` so they stay inside the
    integration domain; a side with no room contributes nothing.
    """
    eps = 0.0
    for side, room in (("left", left_room), ("right", right_room)):
        width = min(delta, room)
        if width <= 0:
            continue
        for h in log_grid(width):
            eps = max(eps, one_sided_average(f, x0, h, side))
    return eps


@lru_cache(maxsize=4096)
def power_l1_norm(f: TestFunction, m: int, domain: DomainSpec,
                  tol: float = 1e-10) -> float:
    """L1 norm of f^m over ``domain`` by quadrature (cached per f, m, domain)."""
    g = lambda t: np.abs(f(t)) ** m
    if domain.is_finite:
        res = quadrature.integrate_finite(g, domain.a, domain.b, tol, f.jump_points)
    else:
        res = quadrature.integrate_real_line(g, 0.0, tol, split_points=f.jump_points)
    if not res.converged:
        raise IntegrationError(f"L1 norm of {f.name}^{m} did not converge", res)
    return res.value
