"""Sampled certification of the Class A kernel conditions.

(a) non-negativity, (b) unimodality in t with mode at x, (c) total mass tends
to C_m, (d) pointwise decay K_{lam,m}(x, y) -> 0 for y != x, plus the two
real-line tail conditions.  A limit lam -> infinity is read off a finite
ascending ladder: the last value must be below ``tol`` and the sequence must
not increase by more than ``tol`` along the ladder.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import quadrature
from .errors import ArgumentError, DomainError, IntegrationError
from .kernels import DomainSpec, KernelFamily, kernel_mass

DEFAULT_TOL = 1e-4
DEFAULT_GRID_N = 2048
DEFAULT_X_PROBES = (-0.5, 0.0, 0.3)
DEFAULT_Y_PROBES = (-0.9, 0.9)


@dataclass
class ConditionResult:
    passed: bool
    witness: Optional[dict] = None
    detail: dict = field(default_factory=dict)


@dataclass
class ValidationReport:
    family: str
    domain: dict
    condition_a: ConditionResult
    condition_b: ConditionResult
    condition_c: ConditionResult
    condition_d: ConditionResult
    tails: Optional[ConditionResult]
    sampling_meta: dict

    @property
    def passed(self) -> bool:
        return not self.failed_conditions()

    def failed_conditions(self) -> list:
        out = [c for c in "abcd" if not getattr(self, f"condition_{c}").passed]
        if self.tails is not None and not self.tails.passed:
            out.append("tails")
        return out

    def to_json(self) -> dict:
        out = asdict(self)
        out["passed"] = self.passed
        out["failed"] = self.failed_conditions()
        return out


def limit_to_zero(seq: Sequence[float], tol: float) -> bool:
    """Ladder reading of lim = 0: small at the end, no growth beyond tol."""
    return seq[-1] < tol and all(b <= a + tol for a, b in zip(seq, seq[1:]))


def _side_grids(domain, x, lam_min, grid_n):
    if domain.is_finite:
        left_end, right_end = domain.a, domain.b
    else:
        w = max(10.0 / math.sqrt(lam_min), 10.0 / lam_min, 5.0)
        left_end, right_end = x - w, x + w
    k = np.arange(grid_n + 1) / grid_n
    # both grids run outward from x; doubling grid_n keeps every old node
    return x + (left_end - x) * k, x + (right_end - x) * k


def _worst_rise(v, tol):
    """Pair (i, j), i < j, maximising v[j] - v[i] walking away from x, if > tol."""
    run = np.minimum.accumulate(v)
    rise = v[1:] - run[:-1]
    j = int(np.argmax(rise)) + 1
    if rise[j - 1] <= tol:
        return None
    return int(np.argmin(v[:j])), j


def _offset_probes(domain, x, offset=0.5):
    out = []
    for side in (-1.0, 1.0):
        room = (x - domain.a) if side < 0 else (domain.b - x)
        out.append(x + side * min(offset, 0.5 * room))
    return out


def validate_class_a(family: KernelFamily, domain: DomainSpec, ladder: Sequence[float],
                     x_probes: Sequence[float] = DEFAULT_X_PROBES,
                     y_probes: Optional[Sequence[float]] = DEFAULT_Y_PROBES,
                     grid_n: int = DEFAULT_GRID_N, tol: float = DEFAULT_TOL,
                     quad_tol: float = quadrature.DEFAULT_TOL,
                     n_max: Optional[int] = None,
                     tail_deltas: Sequence[float] = (0.1,)) -> ValidationReport:
    """Check conditions (a)-(d), plus the tails on the real line.

    ``y_probes=None`` pairs each x with x -+ 0.5 (clamped inside the domain)
    for condition (d) instead of taking every (x, y) combination.
    """
    ladder = [float(v) for v in ladder]
    if len(ladder) < 3:
        raise ArgumentError("the lambda ladder needs at least 3 entries")
    if any(b <= a for a, b in zip(ladder, ladder[1:])) or ladder[0] <= 0:
        raise ArgumentError("the lambda ladder must be positive and strictly ascending")
    if not family.supports(domain):
        raise DomainError(f"{family.name} does not support domain {domain}")
    x_probes = [float(x) for x in x_probes]
    if y_probes is not None:
        y_probes = [float(y) for y in y_probes]
    for x in x_probes:
        if not domain.interior(x):
            raise ArgumentError(f"probe x={x} is not interior to {domain}")
    n_max = family.n_max if n_max is None else n_max
    ms = range(1, n_max + 1)

    # (a) and (b) share the sampled grids
    worst_a = None
    b_witnesses = []
    for x in x_probes:
        left, right = _side_grids(domain, x, ladder[0], grid_n)
        for lam in ladder:
            for m in ms:
                for side, grid in (("left", left), ("right", right)):
                    v = np.asarray(family.evaluator(m, lam, x, grid), dtype=float)
                    i = int(np.argmin(v))
                    if worst_a is None or v[i] < worst_a["value"]:
                        worst_a = {"m": m, "lambda": lam, "x": x, "t": float(grid[i]),
                                   "value": float(v[i])}
                    # moving away from x the kernel must not rise
                    rise = _worst_rise(v, tol)
                    if rise is not None:
                        i0, j0 = rise
                        b_witnesses.append({
                            "m": m, "lambda": lam, "x": x, "side": side,
                            "t1": float(min(grid[i0], grid[j0])),
                            "t2": float(max(grid[i0], grid[j0])),
                            "value_t1": float(v[i0] if grid[i0] < grid[j0] else v[j0]),
                            "value_t2": float(v[j0] if grid[i0] < grid[j0] else v[i0]),
                            "violation": float(v[j0] - v[i0]),
                        })
    cond_a = ConditionResult(passed=worst_a["value"] >= -tol,
                             witness=worst_a if worst_a["value"] < -tol else None,
                             detail={"min_sample": worst_a})
    if b_witnesses:
        worst_b = max(b_witnesses, key=lambda w: w["violation"])
        cond_b = ConditionResult(False, worst_b, {"violations": b_witnesses})
    else:
        cond_b = ConditionResult(True)

    # (c) mass limits
    c_seqs = {}
    c_witness = None
    for m in ms:
        cm = family.mass_constants[m - 1]
        for x in x_probes:
            seq = []
            for lam in ladder:
                try:
                    res = kernel_mass(family, m, lam, x, domain, quad_tol)
                except IntegrationError as exc:
                    raise IntegrationError(
                        f"condition (c): mass for m={m}, lambda={lam} failed: {exc}",
                        exc.result) from exc
                seq.append(abs(res.value - cm))
            c_seqs[f"m={m},x={x!r}"] = seq
            if c_witness is None and not limit_to_zero(seq, tol):
                k = len(seq) - 1 if seq[-1] >= tol else int(np.argmax(np.diff(seq))) + 1
                c_witness = {"m": m, "x": x, "lambda": ladder[k], "deviation": seq[k],
                             "C_m": cm}
    cond_c = ConditionResult(c_witness is None, c_witness, {"deviation_sequences": c_seqs})

    # (d) pointwise decay off the diagonal
    d_seqs = {}
    d_witness = None
    if y_probes is None:
        pairs = [(x, y) for x in x_probes for y in _offset_probes(domain, x)]
    else:
        pairs = [(x, y) for x in x_probes for y in y_probes]
    for m in ms:
        for x, y in pairs:
            if y == x:
                raise ArgumentError("y probes must differ from x probes")
            seq = [float(family.evaluator(m, lam, x, y)) for lam in ladder]
            d_seqs[f"m={m},x={x!r},y={y!r}"] = seq
            if d_witness is None and not limit_to_zero(seq, tol):
                d_witness = {"m": m, "x": x, "y": y, "lambda": ladder[-1],
                             "value": seq[-1], "sequence": seq}
    cond_d = ConditionResult(d_witness is None, d_witness, {"sequences": d_seqs})

    tails = None
    if not domain.is_finite:
        tail_witness = None
        tail_detail = {}
        for delta in tail_deltas:
            for x in x_probes:
                tr = check_tail_conditions(family, ladder, x, delta, tol, quad_tol, n_max)
                tail_detail[f"delta={delta!r},x={x!r}"] = tr.to_json()
                if tail_witness is None and not tr.passed:
                    tail_witness = {"delta": delta, "x": x, **tr.witness}
        tails = ConditionResult(tail_witness is None, tail_witness, tail_detail)

    meta = {"grid_n": grid_n, "ladder": ladder, "x_probes": x_probes, "y_probes": y_probes,
            "tol": tol, "quad_tol": quad_tol, "n_max": n_max,
            "tail_deltas": list(tail_deltas) if tails is not None else []}
    return ValidationReport(family.name, domain.to_json(), cond_a, cond_b, cond_c, cond_d,
                            tails, meta)


@dataclass
class TailReport:
    lower_tail: dict
    upper_tail: dict
    passed: bool
    witness: Optional[dict] = None

    def to_json(self) -> dict:
        return asdict(self)


def check_tail_conditions(family: KernelFamily, ladder: Sequence[float], x: float,
                          delta: float, tol: float = DEFAULT_TOL,
                          quad_tol: float = quadrature.DEFAULT_TOL,
                          n_max: Optional[int] = None) -> TailReport:
    """Tail masses beyond x -+ delta along the ladder, for each m."""
    if not family.real_line_capable:
        raise DomainError(f"{family.name} is not defined on the real line")
    if not delta > 0:
        raise ArgumentError("delta must be positive")
    n_max = family.n_max if n_max is None else n_max
    lower, upper = {}, {}
    witness = None
    for m in range(1, n_max + 1):
        lo_seq, hi_seq = [], []
        for lam in ladder:
            k = lambda t: family.evaluator(m, lam, x, t)
            brk = family.split_points(lam, x)
            lo = quadrature.integrate_real_line(k, x, quad_tol, upper=x - delta,
                                                split_points=brk)
            hi = quadrature.integrate_real_line(k, x, quad_tol, lower=x + delta,
                                                split_points=brk)
            for res, which in ((lo, "lower"), (hi, "upper")):
                if not res.converged:
                    raise IntegrationError(
                        f"{which} tail for m={m}, lambda={lam} did not converge", res)
            lo_seq.append(lo.value)
            hi_seq.append(hi.value)
        lower[m] = lo_seq
        upper[m] = hi_seq
        if witness is None:
            for name, seq in (("lower", lo_seq), ("upper", hi_seq)):
                if not limit_to_zero(seq, tol):
                    witness = {"m": m, "side": name, "lambda": ladder[-1],
                               "value": seq[-1], "sequence": seq}
                    break
    return TailReport(lower, upper, witness is None, witness)
