"""Acceptance criteria 1-7.

Each test records one PASS/FAIL line (shown in the "acceptance criteria"
section of the pytest summary) and then asserts the same verdict.
"""
import hashlib
import io
import math
from pathlib import Path

import pytest

import oracles
from nonlinop import cli
from nonlinop.experiment import (decays, load_config, noise_floor, run_sweep,
                                 validate_config_families)
from nonlinop.kernels import DomainSpec, eval_kernel, make_builtin_family
from nonlinop.lebesgue import (BUILTIN_FUNCTIONS, LEBESGUE, builtin_function, classify_point,
                               one_sided_average, profile_F, profile_G)
from nonlinop.operator import OperatorSpec, approximation_error
from nonlinop.quadrature import integrate_finite
from nonlinop.validator import check_tail_conditions, validate_class_a
from test_quadrature import CATALOG

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
LADDER = (10.0, 1e2, 1e3, 1e4)
UNIT = DomainSpec.finite(-1.0, 1.0)
FINAL_MAX = 1e-2


def _sweep(name):
    cfg = load_config(CONFIGS / name)
    validations = validate_config_families(cfg)
    return cfg, validations, run_sweep(cfg, validations)


@pytest.fixture(scope="module")
def finite():
    return _sweep("finite_interval.json")


@pytest.fixture(scope="module")
def real_line():
    return _sweep("real_line.json")


@pytest.fixture(scope="module")
def controls():
    return _sweep("controls.json")


def _groups(rows):
    """(family, function, N, x0) -> rows ordered by lambda, one per lambda."""
    out = {}
    for r in rows:
        by_lam = out.setdefault(r.group, {})
        by_lam.setdefault(r.lam, r)
    return {k: [v[lam] for lam in sorted(v)] for k, v in out.items()}


def _oracle_terms(cfg, fam_name, fun_name, x0, lam, n_max, kinks=()):
    fam = make_builtin_family(fam_name)
    f = builtin_function(fun_name)
    return oracles.operator_terms(fam, f, n_max, lam, x0, cfg.domain.a, cfg.domain.b, kinks)


def _convergence_check(cfg, rows, kinks=()):
    """Decay and final-error verdicts per group, on engine values and on the oracle."""
    bad = []
    worst_gap = 0.0
    cache = {}
    n_max = max(cfg.N_values)
    for (fam, fun, N, x0), seq in _groups(rows).items():
        if any(r.error is not None for r in seq):
            bad.append(f"{fam}/{fun}/N={N}/x0={x0:g}: row error")
            continue
        oracle_errs = []
        for r in seq:
            key = (fam, fun, x0, r.lam)
            if key not in cache:
                cache[key] = _oracle_terms(cfg, fam, fun, x0, r.lam, n_max, kinks)
            value = math.fsum(cache[key][:N])
            worst_gap = max(worst_gap, abs(value - r.operator_value))
            oracle_errs.append(abs(value - oracles.target(make_builtin_family(fam),
                                                          builtin_function(fun), N, x0)))
        errs = [r.abs_error for r in seq]
        floors = [noise_floor(r, cfg.quad_tol) for r in seq]
        for label, e in (("engine", errs), ("oracle", oracle_errs)):
            if not (decays(e, floors) and e[-1] < FINAL_MAX):
                bad.append(f"{fam}/{fun}/N={N}/x0={x0:g} ({label}) errors "
                           + " ".join(f"{v:.3e}" for v in e))
    agree = worst_gap <= 10 * cfg.quad_tol
    return bad, worst_gap, agree


def test_criterion_1_finite_interval(finite, acceptance):
    cfg, validations, rows = finite
    bad, gap, agree = _convergence_check(cfg, rows)
    valid = all(v.passed for v in validations.values())
    ok = not bad and agree and valid
    n_groups = len(_groups(rows))
    detail = (f"{n_groups - len(set(b.split(' (')[0] for b in bad))}/{n_groups} groups decay "
              f"with final error < 1e-2; max |engine - oracle| = {gap:.2e}")
    if bad:
        detail += "; failing: " + "; ".join(bad)
    assert acceptance(1, "convergence on (-1, 1)", ok, detail), detail


def test_criterion_2_real_line(real_line, acceptance):
    cfg, validations, rows = real_line
    bad, gap, agree = _convergence_check(cfg, rows, kinks=(0.0,))
    # closed forms for the Gauss-Weierstrass family at x0 = 0 and 0.7
    closed_gap = 0.0
    for r in rows:
        if r.family != "gauss_weierstrass" or r.error is not None:
            continue
        if r.function == "two_sided_exp" and r.x0 == 0.0:
            exact = sum(oracles.gauss_times_exp_abs(m, r.lam) for m in range(1, r.N + 1))
        elif r.function == "gaussian_bump":
            exact = sum(oracles.gauss_times_gauss(m, r.lam, r.x0) for m in range(1, r.N + 1))
        else:
            continue
        closed_gap = max(closed_gap, abs(exact - r.operator_value))
    tails_ok = True
    tail_worst = 0.0
    for name in ("gauss_weierstrass", "picard"):
        fam = make_builtin_family(name)
        for x in cfg.x0_points:
            tr = check_tail_conditions(fam, LADDER, x, 0.1, tol=1e-4, n_max=max(cfg.N_values))
            tails_ok &= tr.passed
            for seqs in (tr.lower_tail, tr.upper_tail):
                tail_worst = max(tail_worst, max(s[-1] for s in seqs.values()))
    tails_ok &= tail_worst < 1e-4
    valid = all(v.passed for v in validations.values())
    ok = not bad and agree and closed_gap <= 10 * cfg.quad_tol and tails_ok and valid
    n_groups = len(_groups(rows))
    failing = sorted(set(b.split(" (")[0] for b in bad))
    detail = (f"{n_groups - len(failing)}/{n_groups} groups decay with final error < 1e-2; "
              f"max |engine - oracle| = {gap:.2e}, vs closed form {closed_gap:.2e}; "
              f"largest final tail at delta=0.1: {tail_worst:.2e}")
    if bad:
        detail += "; failing: " + "; ".join(bad)
    assert acceptance(2, "convergence on the real line", ok, detail), detail


def _ledger_failures(cfg, validations, rows):
    failures = []
    counted = 0
    for r in rows:
        if r.delta is None or r.error is not None:
            continue
        counted += 1
        q = r.decomposition_quad_error
        slack = 10 * q
        tag = f"{r.family}/{r.function}/N={r.N}/x0={r.x0:g}/lambda={r.lam:g}/delta={r.delta:g}"
        panels = r.i11 + r.i12 + r.i13 + r.i14
        if abs(panels - r.i1_direct) > 4 * q:
            failures.append(f"partition {tag}")
        if r.abs_error > r.i1_direct + r.i2 + slack + 10 * r.quad_error:
            failures.append(f"triangle {tag}")
        if r.verdict_point == LEBESGUE and validations[r.family].passed:
            if r.i11 > r.bound3 + slack:
                failures.append(f"bound_3 {tag}")
            if r.i14 > r.bound4 + slack:
                failures.append(f"bound_4 {tag}")
            if r.i12 + r.i13 > r.bound9 + slack:
                failures.append(f"bound_9 {tag}")
    return failures, counted


def test_criterion_3_proof_ledger(finite, real_line, controls, acceptance):
    failures, counted, errored = [], 0, 0
    for cfg, validations, rows in (finite, real_line, controls):
        f, n = _ledger_failures(cfg, validations, rows)
        failures += f
        counted += n
        errored += sum(1 for r in rows if r.delta is not None and r.error is not None
                       and not r.error.startswith("class_a:"))
    ok = not failures and errored == 0 and counted > 0
    detail = f"{counted} decomposition rows checked, {errored} rows errored"
    if failures:
        detail += "; failing: " + "; ".join(failures[:20])
    assert acceptance(3, "proof-ledger invariants", ok, detail), detail


def test_criterion_4_negative_controls(acceptance):
    notes = []
    bimodal = make_builtin_family("bimodal_control")
    rep = validate_class_a(bimodal, UNIT, LADDER, n_max=1)
    again = validate_class_a(bimodal, UNIT, LADDER, n_max=1)
    w = rep.condition_b.witness
    reproduced = w is not None and all(
        eval_kernel(bimodal, w["m"], w["lambda"], w["x"], w[k]) == w[f"value_{k}"]
        for k in ("t1", "t2")) and again.condition_b.witness == w
    a_ok = (not rep.condition_b.passed) and reproduced
    notes.append(f"(a) bimodal (b) violated by {w['violation']:.3e} between "
                 f"t={w['t1']:.4f} and t={w['t2']:.4f} at x={w['x']:g}" if w else "(a) no witness")

    indep = make_builtin_family("lambda_independent_control")
    rep_d = validate_class_a(indep, UNIT, LADDER, n_max=1)
    tails = check_tail_conditions(indep, LADDER, 0.0, 0.5, n_max=1)
    b_ok = (not rep_d.condition_d.passed) and not tails.passed
    if b_ok:
        notes.append(f"(b) lambda-independent (d) value {rep_d.condition_d.witness['value']:.4f},"
                     f" tail {tails.witness['value']:.4f}")
    else:
        notes.append("(b) lambda-independent kernel was not refuted")

    c_ok = True
    step = builtin_function("unit_step")
    for name in ("box", "gauss_weierstrass"):
        spec = OperatorSpec(make_builtin_family(name), 1, UNIT)
        err = approximation_error(spec, step, 1e4, 0.0).error
        c_ok &= abs(err - 0.5) <= 1e-3
        notes.append(f"(c) {name} step error at lambda=1e4: {err:.9f}")
    ok = a_ok and b_ok and c_ok
    detail = "; ".join(notes)
    assert acceptance(4, "negative controls", ok, detail), detail


def test_criterion_5_lebesgue_machinery(acceptance):
    mismatches = []
    cert_fail = []
    n_points = 0
    for name in BUILTIN_FUNCTIONS:
        f = builtin_function(name)
        for x0, expected in f.annotated_points:
            n_points += 1
            scan = classify_point(f, x0)
            if scan.verdict != expected:
                mismatches.append(f"{name}@{x0}: {scan.verdict} != {expected}")
            if scan.verdict != LEBESGUE:
                continue
            for delta, eps in scan.sup_ratio_by_delta.items():
                for h in scan.h_grid:
                    if h <= delta and (profile_F(f, x0, x0 + h) > eps * h * (1 + 1e-12)
                                       or profile_G(f, x0, x0 - h) > eps * h * (1 + 1e-12)):
                        cert_fail.append(f"{name}@{x0} delta={delta:g} h={h:g}")
    lin = builtin_function("linear")
    ratio_gap = max(abs(one_sided_average(lin, 0.0, h, "right") - h / 2)
                    for h in (0.5, 1e-1, 1e-2, 1e-3, 1e-4, 1e-6))
    ok = not mismatches and not cert_fail and ratio_gap <= 1e-9
    detail = (f"{n_points - len(mismatches)}/{n_points} annotations reproduced; "
              f"linear ratio max |r(h) - h/2| = {ratio_gap:.1e}; "
              f"{len(cert_fail)} certificate violations")
    if mismatches or cert_fail:
        detail += "; " + "; ".join(mismatches + cert_fail[:10])
    assert acceptance(5, "Lebesgue-point machinery", ok, detail), detail


def test_criterion_6_exactness(acceptance):
    quad_tol = 1e-9
    box = make_builtin_family("box")
    worst_const = 0.0
    for c in (0.5, 1.0, -0.8):
        f = builtin_function("constant", c=c)
        for N in (1, 2, 3):
            spec = OperatorSpec(box, N, UNIT, quad_tol)
            for x0 in (0.0, 0.3, -0.5):
                for lam in LADDER:
                    worst_const = max(worst_const, approximation_error(spec, f, lam, x0).error)
    worst_cat = 0.0
    for tol in (1e-6, 1e-9, 1e-12):
        for g, a, b, exact in CATALOG:
            res = integrate_finite(g, a, b, tol)
            worst_cat = max(worst_cat, abs(res.value - exact) / tol)
    ok = worst_const <= 10 * quad_tol and worst_cat <= 10
    detail = (f"constant f with box: max error {worst_const:.1e} (limit {10 * quad_tol:.0e}); "
              f"catalog max |error|/tol = {worst_cat:.2e} (limit 10)")
    assert acceptance(6, "exactness sanity", ok, detail), detail


def test_criterion_7_determinism(tmp_path, acceptance):
    config = str(CONFIGS / "finite_interval.json")
    digests = []
    for name in ("run1", "run2"):
        out = tmp_path / name
        code = cli.main(["sweep", config, "--out", str(out)], out=io.StringIO())
        digests.append((code, hashlib.sha256((out / "sweep.csv").read_bytes()).hexdigest(),
                        hashlib.sha256((out / "report.txt").read_bytes()).hexdigest()))
    ok = digests[0] == digests[1] and digests[0][0] == 0
    detail = (f"sweep.csv sha256 {digests[0][1][:16]}... vs {digests[1][1][:16]}..., "
              f"exit {digests[0][0]}")
    assert acceptance(7, "byte-identical repeated sweeps", ok, detail), detail
