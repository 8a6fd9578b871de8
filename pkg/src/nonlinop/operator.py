"""The power operator L_lam(f, x) = sum_m int f(t)^m K_{lam,m}(x, t) dt.

Besides the operator itself this module computes its limit target
sum_m C_m f(x0)^m and a numerical ledger of the standard convergence
argument: the mass-deviation term, the four-panel split of the deviation
integral around x0, and the explicit bounds on each panel.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import quadrature
from .errors import ArgumentError, DomainError, IntegrationError, OperatorEvaluationError
from .kernels import DomainSpec, KernelFamily, kernel_mass
from .lebesgue import TestFunction, measured_epsilon, power_l1_norm


@dataclass(frozen=True)
class OperatorSpec:
    family: KernelFamily
    N: int
    domain: DomainSpec
    quad_tol: float = quadrature.DEFAULT_TOL

    def __post_init__(self):
        if not (isinstance(self.N, int) and 1 <= self.N <= self.family.n_max):
            raise ArgumentError(f"N must be in 1..{self.family.n_max}, got {self.N!r}")
        if not self.family.supports(self.domain):
            raise DomainError(f"{self.family.name} does not support domain {self.domain}")
        if not self.quad_tol > 0:
            raise ArgumentError("quad_tol must be positive")


@dataclass(frozen=True)
class OperatorValue:
    value: float
    quad_error: float


@dataclass(frozen=True)
class Approximation:
    error: float
    value: float
    target: float
    quad_error: float


def _check_point(spec, f, lam, x):
    if not (lam > 0 and math.isfinite(lam)):
        raise ArgumentError(f"lambda must be positive, got {lam!r}")
    if spec.domain.is_finite and not spec.domain.interior(x):
        raise ArgumentError(f"x={x} is not interior to {spec.domain}")
    if not f.domain.contains(spec.domain):
        raise DomainError(f"{f.name} is only certified bounded and integrable on {f.domain}")


def _split_hints(spec, f, lam, x, extra=()):
    return (*spec.family.split_points(lam, x), *f.jump_points, *extra)


def _integrate(spec, g, lam, x, f, lo=None, hi=None, extra=()):
    """Integrate ``g`` over the domain, or over the sub-range (lo, hi)."""
    splits = _split_hints(spec, f, lam, x, extra)
    dom = spec.domain
    lo = dom.a if lo is None else max(lo, dom.a)
    hi = dom.b if hi is None else min(hi, dom.b)
    if not lo < hi:
        return quadrature.QuadResult(0.0, 0.0, 0, True)
    if math.isfinite(lo) and math.isfinite(hi):
        return quadrature.integrate_finite(g, lo, hi, spec.quad_tol, splits)
    return quadrature.integrate_real_line(g, x, spec.quad_tol, lower=lo, upper=hi,
                                          split_points=splits)


def apply_operator(spec: OperatorSpec, f: TestFunction, lam: float, x: float) -> OperatorValue:
    _check_point(spec, f, lam, x)
    total = []
    err = []
    for m in range(1, spec.N + 1):
        def g(t, m=m):
            return f(t) ** m * spec.family.evaluator(m, lam, x, t)
        res = _integrate(spec, g, lam, x, f)
        if not res.converged:
            raise OperatorEvaluationError(
                f"term m={m} of the operator did not converge "
                f"(estimate {res.value} +- {res.error_estimate})", m=m, result=res)
        total.append(res.value)
        err.append(res.error_estimate)
    return OperatorValue(math.fsum(total), math.fsum(err))


def limit_target(spec: OperatorSpec, f: TestFunction, x0: float) -> float:
    if spec.domain.is_finite and not (spec.domain.a <= x0 <= spec.domain.b):
        raise ArgumentError(f"x0={x0} is outside {spec.domain}")
    fx = f(x0)
    return math.fsum(spec.family.mass_constants[m - 1] * fx ** m
                     for m in range(1, spec.N + 1))


def approximation_error(spec: OperatorSpec, f: TestFunction, lam: float,
                        x0: float) -> Approximation:
    op = apply_operator(spec, f, lam, x0)
    target = limit_target(spec, f, x0)
    return Approximation(abs(op.value - target), op.value, target, op.quad_error)


def lipschitz_power_bound(B: float, N: int) -> float:
    """M with |a^m - b^m| <= M |a - b| for |a|, |b| <= B and all m <= N."""
    if B < 0:
        raise ArgumentError("B must be non-negative")
    if N < 1:
        raise ArgumentError("N must be >= 1")
    return max(m * B ** (m - 1) for m in range(1, N + 1))


@dataclass
class DecompositionReport:
    i2: float
    i11: float
    i12: float
    i13: float
    i14: float
    i1_direct: float
    bound_3: float
    bound_4: float
    bound_9: float
    epsilon_used: float
    M_used: float
    delta: float
    quad_error: float
    meta: dict = field(default_factory=dict)

    @property
    def panel_sum(self) -> float:
        return self.i11 + self.i12 + self.i13 + self.i14

    def checks(self, abs_error: float | None = None, abs_error_quad: float = 0.0) -> dict:
        """Ledger inequalities at the tolerances used by the acceptance suite.

        ``abs_error_quad`` is the quadrature estimate attached to ``abs_error``.
        """
        slack = 10 * self.quad_error
        out = {
            "partition": abs(self.panel_sum - self.i1_direct) <= 4 * self.quad_error,
            "bound_3": self.i11 <= self.bound_3 + slack,
            "bound_4": self.i14 <= self.bound_4 + slack,
            "bound_9": self.i12 + self.i13 <= self.bound_9 + slack,
        }
        if abs_error is not None:
            out["triangle"] = (abs_error <= self.i1_direct + self.i2 + slack
                               + 10 * abs_error_quad)
        return out

    def to_json(self) -> dict:
        return asdict(self)


def proof_decomposition(spec: OperatorSpec, f: TestFunction, lam: float, x0: float,
                        delta: float) -> DecompositionReport:
    """Numerical ledger of the convergence proof at one (lam, x0, delta).

    Panels are (a, x0-d), (x0-d, x0), (x0, x0+d), (x0+d, b) of the integrand
    sum_m |f^m(t) - f^m(x0)| K_{lam,m}(x0, t); outer panels clamp to the
    domain and may be empty.  ``i1_direct`` integrates the same integrand in
    one piece with no split at x0 +- d.
    """
    if not delta > 0:
        raise ArgumentError("delta must be positive")
    _check_point(spec, f, lam, x0)
    fam, dom, N = spec.family, spec.domain, spec.N
    fx0 = f(x0)
    errs = []

    def deviation(t):
        ft = f(t)
        return sum(np.abs(ft ** m - fx0 ** m) * fam.evaluator(m, lam, x0, t)
                   for m in range(1, N + 1))

    def piece(tag, lo=None, hi=None, extra=(x0 - delta, x0 + delta)):
        res = _integrate(spec, deviation, lam, x0, f, lo, hi, extra)
        if not res.converged:
            raise IntegrationError(f"decomposition panel {tag} did not converge", res)
        errs.append(res.error_estimate)
        return res.value

    i11 = piece("i11", hi=x0 - delta)
    i12 = piece("i12", lo=x0 - delta, hi=x0)
    i13 = piece("i13", lo=x0, hi=x0 + delta)
    i14 = piece("i14", lo=x0 + delta)
    i1_direct = piece("i1_direct", extra=())

    masses = []
    for m in range(1, N + 1):
        res = kernel_mass(fam, m, lam, x0, dom, spec.quad_tol)
        errs.append(res.error_estimate)
        masses.append(res.value)
    i2 = math.fsum(abs(fx0 ** m) * abs(masses[m - 1] - fam.mass_constants[m - 1])
                   for m in range(1, N + 1))

    M = lipschitz_power_bound(f.sup_bound, N)
    eps = measured_epsilon(f, float(x0), float(delta),
                           left_room=x0 - dom.a, right_room=dom.b - x0)
    bound_9 = 2 * eps * M * math.fsum(masses)

    k_left = [float(fam.evaluator(m, lam, x0, x0 - delta)) for m in range(1, N + 1)]
    k_right = [float(fam.evaluator(m, lam, x0, x0 + delta)) for m in range(1, N + 1)]
    meta = {"mass": masses, "kernel_at_x0_minus_delta": k_left,
            "kernel_at_x0_plus_delta": k_right}
    if dom.is_finite:
        norms = [power_l1_norm(f, m, dom) for m in range(1, N + 1)]
        meta["l1_norm_f_pow_m"] = norms
        bound_3 = math.fsum(k_left[m - 1] * (norms[m - 1] + abs(fx0 ** m) * dom.length)
                            for m in range(1, N + 1))
        bound_4 = math.fsum(k_right[m - 1] * (norms[m - 1] + abs(fx0 ** m) * dom.length)
                            for m in range(1, N + 1))
    else:
        norm = power_l1_norm(f, 1, dom)
        lower_tails, upper_tails = [], []
        for m in range(1, N + 1):
            k = lambda t, m=m: fam.evaluator(m, lam, x0, t)
            lo_res = quadrature.integrate_real_line(k, x0, spec.quad_tol, upper=x0 - delta)
            hi_res = quadrature.integrate_real_line(k, x0, spec.quad_tol, lower=x0 + delta)
            for res in (lo_res, hi_res):
                if not res.converged:
                    raise IntegrationError("kernel tail integral did not converge", res)
                errs.append(res.error_estimate)
            lower_tails.append(lo_res.value)
            upper_tails.append(hi_res.value)
        meta.update(l1_norm_f=norm, lower_tail=lower_tails, upper_tail=upper_tails)
        bound_3 = (norm * M * math.fsum(k_left)
                   + M * abs(fx0) * math.fsum(lower_tails))
        # right-tail form with the extra factor m; the plain variant is kept in meta
        bound_4 = (norm * M * math.fsum(m * k_right[m - 1] for m in range(1, N + 1))
                   + M * abs(fx0) * math.fsum(upper_tails))
        meta["bound_4_without_m_factor"] = (norm * M * math.fsum(k_right)
                                            + M * abs(fx0) * math.fsum(upper_tails))

    return DecompositionReport(
        i2=i2, i11=i11, i12=i12, i13=i13, i14=i14, i1_direct=i1_direct,
        bound_3=bound_3, bound_4=bound_4, bound_9=bound_9,
        epsilon_used=eps, M_used=M, delta=float(delta),
        quad_error=math.fsum(errs), meta=meta)
