"""Lambda-sweep experiments: config, rows, CSV output and the pass/fail report."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional, Union

from . import quadrature
from .errors import ConfigError, NonlinopError, OperatorEvaluationError, ReportError
from .kernels import DomainSpec, KernelFamily, make_builtin_family
from .lebesgue import (DEFAULT_SCAN_TOL, LEBESGUE, NON_LEBESGUE, TestFunction,
                       builtin_function, classify_point)
from .operator import OperatorSpec, approximation_error, proof_decomposition
from .validator import ValidationReport, validate_class_a

CSV_HEADER = ("family,function,N,lambda,x0,operator_value,target,abs_error,quad_error,"
              "verdict_point,delta,i2,i11,i12,i13,i14,bound3,bound4,bound9,epsilon,M")
FINAL_ERROR_MAX = 1e-2
CONTROL_VALUE = 0.5
CONTROL_TOL = 1e-3
VALIDATION_LADDER = (10.0, 1e2, 1e3, 1e4)


@dataclass(frozen=True)
class NamedItem:
    name: str
    params: tuple = ()

    @property
    def label(self) -> str:
        if not self.params:
            return self.name
        inner = ";".join(f"{k}={v}" for k, v in self.params)
        return f"{self.name}[{inner}]"

    def to_json(self):
        if not self.params:
            return self.name
        return {"name": self.name, "params": dict(self.params)}


@dataclass(frozen=True)
class SweepConfig:
    families: tuple
    functions: tuple
    N_values: tuple
    domain: DomainSpec
    x0_points: Union[tuple, str]
    lambda_ladder: tuple
    delta_values: tuple = (0.05, 0.2)
    quad_tol: float = quadrature.DEFAULT_TOL
    scan_tol: float = DEFAULT_SCAN_TOL
    decomposition: bool = False
    output_dir: str = "out"
    allow_invalid: bool = False

    def kernel(self, item: NamedItem) -> KernelFamily:
        return make_builtin_family(item.name, dict(item.params))

    def function(self, item: NamedItem) -> TestFunction:
        return builtin_function(item.name, **dict(item.params))

    def points_for(self, f: TestFunction) -> list:
        if self.x0_points == "annotated":
            return [p for p, _ in f.annotated_points
                    if not self.domain.is_finite or self.domain.interior(p)]
        return list(self.x0_points)

    def to_json(self) -> dict:
        return {
            "families": [f.to_json() for f in self.families],
            "functions": [f.to_json() for f in self.functions],
            "N_values": list(self.N_values),
            "domain": self.domain.to_json(),
            "x0_points": self.x0_points if isinstance(self.x0_points, str)
            else list(self.x0_points),
            "lambda_ladder": list(self.lambda_ladder),
            "delta_values": list(self.delta_values),
            "quad_tol": self.quad_tol,
            "scan_tol": self.scan_tol,
            "decomposition": self.decomposition,
            "output_dir": self.output_dir,
            "allow_invalid": self.allow_invalid,
        }


_REQUIRED = ("families", "functions", "N_values", "domain", "x0_points", "lambda_ladder")


def _named(entry, what):
    if isinstance(entry, str):
        return NamedItem(entry)
    if isinstance(entry, dict) and set(entry) <= {"name", "params"} and "name" in entry:
        params = entry.get("params", {}) or {}
        if not isinstance(params, dict):
            raise ConfigError(f"{what} params must be an object")
        return NamedItem(entry["name"], tuple(sorted(params.items())))
    raise ConfigError(f"bad {what} entry {entry!r}")


def _positive_list(obj, key, kind=float):
    if not isinstance(obj, list) or not obj:
        raise ConfigError(f"{key} must be a non-empty list")
    try:
        vals = tuple(kind(v) for v in obj)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key} has a non-numeric entry") from exc
    if kind is int and any(not isinstance(v, int) or isinstance(v, bool) for v in obj):
        raise ConfigError(f"{key} must contain integers")
    if any(not v > 0 for v in vals):
        raise ConfigError(f"{key} entries must be positive")
    return vals


def config_from_dict(obj: dict) -> SweepConfig:
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    known = {f.name for f in fields(SweepConfig)}
    unknown = set(obj) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    missing = [k for k in _REQUIRED if k not in obj]
    if missing:
        raise ConfigError(f"missing config keys: {missing}")

    kw = {}
    for key, what in (("families", "family"), ("functions", "function")):
        if not isinstance(obj[key], list) or not obj[key]:
            raise ConfigError(f"{key} must be a non-empty list")
        kw[key] = tuple(_named(e, what) for e in obj[key])
    kw["N_values"] = _positive_list(obj["N_values"], "N_values", int)
    try:
        kw["domain"] = DomainSpec.from_json(obj["domain"])
    except NonlinopError as exc:
        raise ConfigError(f"domain: {exc}") from exc
    if obj["x0_points"] == "annotated":
        kw["x0_points"] = "annotated"
    else:
        if not isinstance(obj["x0_points"], list) or not obj["x0_points"]:
            raise ConfigError("x0_points must be a non-empty list or \"annotated\"")
        kw["x0_points"] = tuple(float(v) for v in obj["x0_points"])
    ladder = _positive_list(obj["lambda_ladder"], "lambda_ladder")
    if any(b <= a for a, b in zip(ladder, ladder[1:])):
        raise ConfigError("lambda_ladder must be strictly ascending")
    kw["lambda_ladder"] = ladder
    if "delta_values" in obj:
        kw["delta_values"] = _positive_list(obj["delta_values"], "delta_values")
    for key in ("quad_tol", "scan_tol"):
        if key in obj:
            val = obj[key]
            if isinstance(val, bool) or not isinstance(val, (int, float)) or not val > 0:
                raise ConfigError(f"{key} must be a positive number")
            kw[key] = float(val)
    for key in ("decomposition", "allow_invalid"):
        if key in obj:
            if not isinstance(obj[key], bool):
                raise ConfigError(f"{key} must be true or false")
            kw[key] = obj[key]
    if "output_dir" in obj:
        if not isinstance(obj["output_dir"], str):
            raise ConfigError("output_dir must be a string")
        kw["output_dir"] = obj["output_dir"]

    cfg = SweepConfig(**kw)
    # resolve every name now so typos fail before any work is done
    for item in cfg.families:
        try:
            fam = cfg.kernel(item)
        except NonlinopError as exc:
            raise ConfigError(f"family {item.label}: {exc}") from exc
        if not fam.supports(cfg.domain):
            raise ConfigError(f"family {item.label} does not support domain {cfg.domain}")
        if max(cfg.N_values) > fam.n_max:
            raise ConfigError(f"N up to {max(cfg.N_values)} exceeds {fam.n_max} for {item.label}")
    for item in cfg.functions:
        try:
            f = cfg.function(item)
        except NonlinopError as exc:
            raise ConfigError(f"function {item.label}: {exc}") from exc
        if not f.domain.contains(cfg.domain):
            raise ConfigError(f"function {item.label} is only bounded/integrable on {f.domain}")
        for x0 in cfg.points_for(f):
            if cfg.domain.is_finite and not cfg.domain.interior(x0):
                raise ConfigError(f"x0={x0} is not interior to {cfg.domain}")
    return cfg


def load_config(path) -> SweepConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return config_from_dict(obj)


_DECOMP_FIELDS = ("delta", "i2", "i11", "i12", "i13", "i14", "bound3", "bound4", "bound9",
                  "epsilon", "M")


@dataclass
class SweepRow:
    family: str
    function: str
    N: int
    lam: float
    x0: float
    operator_value: Optional[float] = None
    target: Optional[float] = None
    abs_error: Optional[float] = None
    quad_error: Optional[float] = None
    verdict_point: str = ""
    delta: Optional[float] = None
    i2: Optional[float] = None
    i11: Optional[float] = None
    i12: Optional[float] = None
    i13: Optional[float] = None
    i14: Optional[float] = None
    bound3: Optional[float] = None
    bound4: Optional[float] = None
    bound9: Optional[float] = None
    epsilon: Optional[float] = None
    M: Optional[float] = None
    i1_direct: Optional[float] = None
    decomposition_quad_error: Optional[float] = None
    error: Optional[str] = None

    @property
    def group(self) -> tuple:
        return (self.family, self.function, self.N, self.x0)


def _x_probes(cfg: SweepConfig, functions) -> list:
    pts = set()
    for f in functions:
        pts.update(cfg.points_for(f))
    return sorted(pts)


def validate_config_families(cfg: SweepConfig) -> dict:
    """Class A report per family label, probed at the sweep's x0 points."""
    functions = [cfg.function(item) for item in cfg.functions]
    probes = _x_probes(cfg, functions)
    ladder = cfg.lambda_ladder if len(cfg.lambda_ladder) >= 3 else VALIDATION_LADDER
    out = {}
    for item in cfg.families:
        fam = cfg.kernel(item)
        out[item.label] = validate_class_a(
            fam, cfg.domain, ladder, x_probes=probes, y_probes=None,
            quad_tol=cfg.quad_tol, n_max=max(cfg.N_values),
            tail_deltas=(0.1,))
    return out


def run_sweep(cfg: SweepConfig, validations: Optional[dict] = None) -> list:
    """Rows for families x functions x N x x0 x lambda (x delta when decomposing).

    Failures are recorded in ``row.error``; the sweep never aborts midway.
    """
    if validations is None:
        validations = validate_config_families(cfg)
    rows = []
    scans = {}
    for fam_item in cfg.families:
        fam = cfg.kernel(fam_item)
        report = validations[fam_item.label]
        blocked = (not report.passed) and not cfg.allow_invalid
        for fun_item in cfg.functions:
            f = cfg.function(fun_item)
            for N in cfg.N_values:
                spec = OperatorSpec(fam, N, cfg.domain, cfg.quad_tol)
                for x0 in cfg.points_for(f):
                    key = (fun_item.label, x0)
                    if key not in scans:
                        try:
                            scans[key] = classify_point(f, x0, scan_tol=cfg.scan_tol).verdict
                        except NonlinopError:
                            scans[key] = "error:classify"
                    verdict = scans[key]
                    for lam in cfg.lambda_ladder:
                        base = dict(family=fam_item.label, function=fun_item.label, N=N,
                                    lam=lam, x0=x0, verdict_point=verdict)
                        rows.extend(_rows_for_point(cfg, spec, f, lam, x0, base, blocked,
                                                    report))
    return rows


def _rows_for_point(cfg, spec, f, lam, x0, base, blocked, report):
    if blocked:
        code = "class_a:" + "+".join(report.failed_conditions())
        deltas = cfg.delta_values if cfg.decomposition else (None,)
        return [SweepRow(**base, delta=d, error=code) for d in deltas]
    try:
        approx = approximation_error(spec, f, lam, x0)
    except OperatorEvaluationError as exc:
        code = f"operator:m{exc.m}"
        return [SweepRow(**base, error=code)]
    except NonlinopError as exc:
        return [SweepRow(**base, error=f"operator:{type(exc).__name__}")]
    common = dict(base, operator_value=approx.value, target=approx.target,
                  abs_error=approx.error, quad_error=approx.quad_error)
    if not cfg.decomposition:
        return [SweepRow(**common)]
    out = []
    for delta in cfg.delta_values:
        try:
            rep = proof_decomposition(spec, f, lam, x0, delta)
        except NonlinopError as exc:
            out.append(SweepRow(**common, delta=delta,
                                error=f"decomposition:{type(exc).__name__}"))
            continue
        out.append(SweepRow(
            **common, delta=delta, i2=rep.i2, i11=rep.i11, i12=rep.i12, i13=rep.i13,
            i14=rep.i14, bound3=rep.bound_3, bound4=rep.bound_4, bound9=rep.bound_9,
            epsilon=rep.epsilon_used, M=rep.M_used, i1_direct=rep.i1_direct,
            decomposition_quad_error=rep.quad_error))
    return out


def format_number(v) -> str:
    """Scientific notation with 9 significant digits and an unpadded exponent."""
    if v is None:
        return ""
    v = float(v)
    if not math.isfinite(v):
        return repr(v)
    mant, exp = f"{v:.8e}".split("e")
    return f"{mant}e{int(exp)}"


def row_cells(row: SweepRow) -> list:
    verdict = row.verdict_point if row.error is None else f"error:{row.error}"
    return [row.family, row.function, str(row.N), format_number(row.lam),
            format_number(row.x0), format_number(row.operator_value),
            format_number(row.target), format_number(row.abs_error),
            format_number(row.quad_error), verdict,
            *(format_number(getattr(row, name)) for name in _DECOMP_FIELDS)]


def csv_text(rows) -> str:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow(row_cells(row))
    return buf.getvalue()


def write_csv(rows, path) -> int:
    data = csv_text(rows).encode("utf-8")
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc
    return len(data)


def decays(errors, floors) -> bool:
    """Strict decrease along the ladder, except once an entry is at its noise floor."""
    return all(e1 < e0 or e1 <= fl for e0, e1, fl in zip(errors, errors[1:], floors[1:]))


def noise_floor(row: SweepRow, quad_tol: float) -> float:
    return 10 * (row.quad_error + quad_tol)


def _is_analytic_control(row: SweepRow, fam: KernelFamily) -> bool:
    return (row.function == "unit_step" and row.x0 == 0.0 and row.N == 1
            and fam.symmetric and fam.unimodal and fam.mass_constants[0] == 1.0
            and fam.name in ("box", "gauss_weierstrass", "picard"))


def _coerce_row(row) -> SweepRow:
    if isinstance(row, SweepRow):
        return row
    if isinstance(row, dict):
        missing = {f.name for f in fields(SweepRow)} - set(row)
        if missing:
            raise ReportError(f"report rows lack columns {sorted(missing)}")
        return SweepRow(**row)
    raise ReportError(f"cannot read a sweep row from {type(row).__name__}")


def render_report(rows, cfg: SweepConfig, validations: Optional[dict] = None):
    """Return (report_text, plot_script_text).

    Every check contributes lines starting with PASS, FAIL or NOTE; the report
    passes iff it has no FAIL line.
    """
    rows = [_coerce_row(r) for r in rows]
    if validations is None:
        validations = validate_config_families(cfg)
    lines = []
    fams = {item.label: cfg.kernel(item) for item in cfg.families}

    for label, rep in validations.items():
        failed = rep.failed_conditions()
        if not failed:
            lines.append(f"PASS validation {label}: Class A conditions (a)-(d)"
                         + (" and tails" if rep.tails is not None else ""))
            continue
        names = ", ".join(f"({c})" if len(c) == 1 else c for c in failed)
        first = failed[0]
        cond = rep.tails if first == "tails" else getattr(rep, f"condition_{first}")
        witness = json.dumps(cond.witness, sort_keys=True)
        tag = "NOTE" if cfg.allow_invalid else "FAIL"
        suffix = " [allow_invalid control]" if cfg.allow_invalid else ""
        lines.append(f"{tag} validation {label}: violates condition {names}{suffix}; "
                     f"witness {witness}")

    for row in rows:
        if row.error is not None and not row.error.startswith("class_a:"):
            lines.append(f"FAIL row {row.family}/{row.function}/N={row.N}/x0={row.x0:g}/"
                         f"lambda={row.lam:g}: {row.error}")

    groups = {}
    for row in rows:
        if row.error is None:
            groups.setdefault(row.group, {}).setdefault(row.lam, row)
    for (fam_label, fun_label, N, x0), by_lam in groups.items():
        seq = [by_lam[lam] for lam in sorted(by_lam)]
        errs = [r.abs_error for r in seq]
        name = f"{fam_label}/{fun_label}/N={N}/x0={x0:g}"
        verdict = seq[0].verdict_point
        valid = validations[fam_label].passed
        if verdict == LEBESGUE:
            if not valid:
                lines.append(f"NOTE decay {name}: kernel outside Class A, not asserted")
                continue
            floors = [noise_floor(r, cfg.quad_tol) for r in seq]
            ok = decays(errs, floors) and errs[-1] < FINAL_ERROR_MAX
            tag = "PASS" if ok else "FAIL"
            lines.append(f"{tag} decay {name}: errors "
                         + " ".join(format_number(e) for e in errs))
        elif verdict == NON_LEBESGUE:
            if _is_analytic_control(seq[0], fams[fam_label]):
                ok = all(abs(e - CONTROL_VALUE) <= CONTROL_TOL for e in errs)
                tag = "PASS" if ok else "FAIL"
                lines.append(f"{tag} expected non-convergence {name}: errors "
                             + " ".join(format_number(e) for e in errs))
            else:
                lines.append(f"NOTE non-Lebesgue point {name}: final error "
                             f"{format_number(errs[-1])}")
        else:
            lines.append(f"NOTE point {name}: verdict {verdict}, not asserted")

    dec_rows = [r for r in rows if r.error is None and r.delta is not None]
    if dec_rows:
        checks = {"partition identity": [], "triangle ledger": [], "bound_3": [],
                  "bound_4": [], "bound_9": []}
        for r in dec_rows:
            slack = 10 * r.decomposition_quad_error
            panel = r.i11 + r.i12 + r.i13 + r.i14
            tag = f"{r.family}/{r.function}/N={r.N}/x0={r.x0:g}/lambda={r.lam:g}/delta={r.delta:g}"
            checks["partition identity"].append(
                (tag, abs(panel - r.i1_direct) <= 4 * r.decomposition_quad_error))
            checks["triangle ledger"].append(
                (tag, r.abs_error <= r.i1_direct + r.i2 + slack + 10 * r.quad_error))
            if r.verdict_point == LEBESGUE and validations[r.family].passed:
                checks["bound_3"].append((tag, r.i11 <= r.bound3 + slack))
                checks["bound_4"].append((tag, r.i14 <= r.bound4 + slack))
                checks["bound_9"].append((tag, r.i12 + r.i13 <= r.bound9 + slack))
        for name, results in checks.items():
            bad = [t for t, ok in results if not ok]
            if bad:
                lines.extend(f"FAIL {name}: {t}" for t in bad)
            elif results:
                lines.append(f"PASS {name}: {len(results)} rows")

    n_fail = sum(1 for ln in lines if ln.startswith("FAIL"))
    header = [f"sweep report: {len(rows)} rows, domain {cfg.domain}, "
              f"ladder {' '.join(format_number(v) for v in cfg.lambda_ladder)}",
              f"result: {'PASS' if n_fail == 0 else 'FAIL'} ({n_fail} failing checks)", ""]
    return "\n".join(header + lines) + "\n", PLOT_SCRIPT


def report_passed(report_text: str) -> bool:
    return not any(ln.startswith("FAIL") for ln in report_text.splitlines())


PLOT_SCRIPT = '''"""Log-log plot of |L_lambda(f, x0) - target| against lambda.

Reads sweep.csv from this directory and writes errors.png next to it.
"""
import csv
import os
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
curves = defaultdict(dict)
with open(os.path.join(here, "sweep.csv"), newline="") as fh:
    for row in csv.DictReader(fh):
        if not row["abs_error"]:
            continue
        key = (row["family"], row["function"], row["N"], row["x0"])
        curves[key][float(row["lambda"])] = float(row["abs_error"])

fig, ax = plt.subplots(figsize=(8, 6))
for (family, function, N, x0), pts in sorted(curves.items()):
    lams = sorted(pts)
    errs = [max(pts[l], 1e-17) for l in lams]
    ax.loglog(lams, errs, marker="o", lw=1,
              label=f"{family} / {function} / N={N} / x0={float(x0):g}")
ax.set_xlabel("lambda")
ax.set_ylabel("absolute error")
ax.grid(True, which="both", alpha=0.3)
if len(curves) <= 24:
    ax.legend(fontsize=6)
fig.tight_layout()
fig.savefig(os.path.join(here, "errors.png"), dpi=150)
'''


def write_outputs(rows, cfg: SweepConfig, out_dir, validations=None) -> dict:
    """Write sweep.csv, report.txt, plot_errors.py and validation.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report, script = render_report(rows, cfg, validations)
    paths = {"csv": out / "sweep.csv", "report": out / "report.txt",
             "plot": out / "plot_errors.py", "validation": out / "validation.json"}
    write_csv(rows, paths["csv"])
    paths["report"].write_text(report, encoding="utf-8")
    paths["plot"].write_text(script, encoding="utf-8")
    if validations is not None:
        doc = {k: v.to_json() for k, v in validations.items()}
        paths["validation"].write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n",
                                       encoding="utf-8")
    return {"report_text": report, **{k: str(v) for k, v in paths.items()}}
