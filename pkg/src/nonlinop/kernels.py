"""Kernel families K_{lam,m}(x, t) and integration domains.

A family is a bundle of plain functions; built-ins are produced by
:func:`make_builtin_family`.  Evaluators are vectorised in ``t``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import quadrature
from .errors import ArgumentError, CatalogError, DomainError, IntegrationError

N_MAX = 8


@dataclass(frozen=True)
class DomainSpec:
    """Either a finite interval ``(a, b)`` or the whole real line."""

    kind: str
    a: float = -math.inf
    b: float = math.inf

    def __post_init__(self):
        if self.kind == "finite":
            if not (math.isfinite(self.a) and math.isfinite(self.b)):
                raise DomainError("finite domain needs finite endpoints")
            if not self.b - self.a > 0:
                raise DomainError(f"need a < b, got ({self.a}, {self.b})")
        elif self.kind == "real_line":
            object.__setattr__(self, "a", -math.inf)
            object.__setattr__(self, "b", math.inf)
        else:
            raise DomainError(f"unknown domain kind {self.kind!r}")

    @classmethod
    def finite(cls, a: float, b: float) -> "DomainSpec":
        return cls("finite", float(a), float(b))

    @classmethod
    def real_line(cls) -> "DomainSpec":
        return cls("real_line")

    @property
    def is_finite(self) -> bool:
        return self.kind == "finite"

    @property
    def length(self) -> float:
        return self.b - self.a

    def interior(self, x: float) -> bool:
        return self.a < x < self.b

    def contains(self, other: "DomainSpec") -> bool:
        return self.a <= other.a and other.b <= self.b

    def to_json(self) -> dict:
        if self.is_finite:
            return {"kind": "finite", "a": self.a, "b": self.b}
        return {"kind": "real_line"}

    @classmethod
    def from_json(cls, obj) -> "DomainSpec":
        if not isinstance(obj, dict) or "kind" not in obj:
            raise DomainError(f"domain must be an object with a 'kind' field, got {obj!r}")
        extra = set(obj) - {"kind", "a", "b"}
        if extra:
            raise DomainError(f"unknown domain keys {sorted(extra)}")
        if obj["kind"] == "finite":
            try:
                return cls.finite(obj["a"], obj["b"])
            except KeyError as exc:
                raise DomainError("finite domain needs 'a' and 'b'") from exc
        if obj["kind"] == "real_line":
            if "a" in obj or "b" in obj:
                raise DomainError("real_line domain takes no endpoints")
            return cls.real_line()
        raise DomainError(f"unknown domain kind {obj['kind']!r}")

    def __str__(self):
        return f"({self.a:g}, {self.b:g})" if self.is_finite else "(-inf, inf)"


Evaluator = Callable[[int, float, float, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class KernelFamily:
    """An evaluable family K_{lam,m}(x, t).

    ``mass_constants[m-1]`` is C_m, the declared limit of the total mass.
    ``breakpoints(lam, x)`` lists discontinuities in ``t`` (quadrature hints);
    ``closed_form_mass(m, lam, x, domain)`` is an exact oracle where known.
    """

    name: str
    evaluator: Evaluator
    mass_constants: tuple
    peak_hint: Callable[[float], float]
    finite_capable: bool = True
    real_line_capable: bool = True
    closed_form_mass: Optional[Callable[[int, float, float, DomainSpec], float]] = None
    breakpoints: Callable[[float, float], tuple] = lambda lam, x: ()
    unimodal: bool = True
    symmetric: bool = True
    params: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        cm = tuple(float(c) for c in self.mass_constants)
        if not cm or len(cm) > N_MAX:
            raise ArgumentError(f"need 1..{N_MAX} mass constants")
        if not all(math.isfinite(c) and c > 0 for c in cm):
            raise ArgumentError("mass constants must be finite and positive")
        object.__setattr__(self, "mass_constants", cm)

    @property
    def n_max(self) -> int:
        return len(self.mass_constants)

    def supports(self, domain: DomainSpec) -> bool:
        return self.finite_capable if domain.is_finite else self.real_line_capable

    def split_points(self, lam: float, x: float) -> tuple:
        return (self.peak_hint(x), *self.breakpoints(lam, x))


def _gauss_cdf(lam, center, s):
    # mass of sqrt(lam/pi) exp(-lam (t-center)^2) on (-inf, s)
    if math.isinf(s):
        return 0.0 if s < 0 else 1.0
    return 0.5 * math.erfc(-math.sqrt(lam) * (s - center))


def _laplace_cdf(lam, center, s):
    # mass of (lam/2) exp(-lam |t-center|) on (-inf, s)
    if math.isinf(s):
        return 0.0 if s < 0 else 1.0
    d = s - center
    if d < 0:
        return 0.5 * math.exp(lam * d)
    return 1.0 - 0.5 * math.exp(-lam * d)


def _box_cdf(lam, center, s):
    r = 1.0 / lam
    if s <= center - r:
        return 0.0
    if s >= center + r:
        return 1.0
    return (s - (center - r)) * lam / 2.0


def _mass_from_cdf(cdf):
    def mass(lam, x, domain):
        return cdf(lam, x, domain.b) - cdf(lam, x, domain.a)
    return mass


def _box(lam, x, t):
    d = np.asarray(t, dtype=float) - x
    return np.where(np.abs(d) <= 1.0 / lam, lam / 2.0, 0.0)


def _gauss(lam, x, t):
    d = np.asarray(t, dtype=float) - x
    return math.sqrt(lam / math.pi) * np.exp(-lam * d * d)


def _picard(lam, x, t):
    d = np.asarray(t, dtype=float) - x
    return (lam / 2.0) * np.exp(-lam * np.abs(d))


BUILTIN_NAMES = ("box", "gauss_weierstrass", "picard", "bimodal_control",
                 "lambda_independent_control")


def make_builtin_family(name: str, params: Optional[dict] = None) -> KernelFamily:
    """Build a catalog family.

    Recognised ``params``:

    ``scale``
        positive factor applied to lam inside the kernel (width ~ 1/scale).
    ``mass_constants``
        list of C_m; the kernel for index m is C_m times the unit-mass profile.
    ``offset``
        bump offset of ``bimodal_control`` (default 0.4).
    """
    params = dict(params or {})
    allowed = {"scale", "mass_constants"} | ({"offset"} if name == "bimodal_control" else set())
    unknown = set(params) - allowed
    if unknown:
        raise ArgumentError(f"unknown parameters for {name!r}: {sorted(unknown)}")
    scale = float(params.get("scale", 1.0))
    if not (math.isfinite(scale) and scale > 0):
        raise ArgumentError("scale must be positive")
    cm = tuple(params.get("mass_constants", (1.0,) * N_MAX))

    def weighted(profile):
        def evaluator(m, lam, x, t):
            return cm[m - 1] * profile(scale * lam, x, t)
        return evaluator

    def weighted_mass(unit_mass):
        def mass(m, lam, x, domain):
            return cm[m - 1] * unit_mass(scale * lam, x, domain)
        return mass

    common = dict(mass_constants=cm, peak_hint=lambda x: x, params=params)
    if name == "box":
        return KernelFamily(
            name=name, evaluator=weighted(_box),
            closed_form_mass=weighted_mass(_mass_from_cdf(_box_cdf)),
            breakpoints=lambda lam, x: (x - 1.0 / (scale * lam), x + 1.0 / (scale * lam)),
            **common)
    if name == "gauss_weierstrass":
        return KernelFamily(
            name=name, evaluator=weighted(_gauss),
            closed_form_mass=weighted_mass(_mass_from_cdf(_gauss_cdf)), **common)
    if name == "picard":
        return KernelFamily(
            name=name, evaluator=weighted(_picard),
            closed_form_mass=weighted_mass(_mass_from_cdf(_laplace_cdf)), **common)
    if name == "bimodal_control":
        off = float(params.get("offset", 0.4))

        def bimodal(lam, x, t):
            return 0.5 * (_gauss(lam, x + off, t) + _gauss(lam, x - off, t))

        def bimodal_mass(lam, x, domain):
            return 0.5 * (_mass_from_cdf(_gauss_cdf)(lam, x + off, domain)
                          + _mass_from_cdf(_gauss_cdf)(lam, x - off, domain))

        return KernelFamily(
            name=name, evaluator=weighted(bimodal),
            closed_form_mass=weighted_mass(bimodal_mass),
            breakpoints=lambda lam, x: (x - off, x + off),
            unimodal=False, **common)
    if name == "lambda_independent_control":
        def flat(lam, x, t):
            return _picard(1.0, x, t)

        def flat_mass(lam, x, domain):
            return _mass_from_cdf(_laplace_cdf)(1.0, x, domain)

        return KernelFamily(
            name=name, evaluator=weighted(flat),
            closed_form_mass=weighted_mass(flat_mass), **common)
    raise CatalogError(f"unknown kernel family {name!r}; known: {', '.join(BUILTIN_NAMES)}")


def _check_args(family, m, lam):
    if not (isinstance(m, (int, np.integer)) and 1 <= m <= family.n_max):
        raise ArgumentError(f"m must be an integer in 1..{family.n_max}, got {m!r}")
    if not (lam > 0 and math.isfinite(lam)):
        raise ArgumentError(f"lambda must be positive and finite, got {lam!r}")


def eval_kernel(family: KernelFamily, m: int, lam: float, x: float, t):
    """K_{lam,m}(x, t); returns a float for scalar ``t``, an array otherwise."""
    _check_args(family, m, lam)
    out = family.evaluator(m, float(lam), float(x), t)
    if np.ndim(t) == 0:
        return float(out)
    return np.asarray(out, dtype=float)


def integrate_over(domain: DomainSpec, g, center: float, tol: float, split_points=()):
    """Integrate ``g`` over a domain with the appropriate quadrature route."""
    if domain.is_finite:
        return quadrature.integrate_finite(g, domain.a, domain.b, tol, split_points)
    return quadrature.integrate_real_line(g, center, tol, split_points=split_points)


def kernel_mass(family: KernelFamily, m: int, lam: float, x: float,
                domain: DomainSpec, tol: float = quadrature.DEFAULT_TOL):
    """Total mass of K_{lam,m}(x, .) over ``domain`` by quadrature.

    Raises :class:`IntegrationError` if the tolerance is not reached.
    """
    _check_args(family, m, lam)
    if not family.supports(domain):
        raise DomainError(f"{family.name} does not support domain {domain}")
    if domain.is_finite and not domain.interior(x):
        raise ArgumentError(f"x={x} is not interior to {domain}")
    res = integrate_over(domain, lambda t: family.evaluator(m, lam, x, t), x, tol,
                         family.split_points(lam, x))
    if not res.converged:
        raise IntegrationError(
            f"mass of {family.name} (m={m}, lambda={lam}, x={x}) did not converge: "
            f"estimate {res.value} +- {res.error_estimate}", res)
    return res
