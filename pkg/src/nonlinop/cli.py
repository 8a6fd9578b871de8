"""Command line entry point.

Exit codes: 0 all checks pass, 1 a check failed, 2 configuration or runtime error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .errors import NonlinopError
from .experiment import (load_config, render_report, report_passed, run_sweep,
                         validate_config_families, write_outputs)
from .lebesgue import builtin_function, classify_point
from .operator import OperatorSpec, approximation_error, proof_decomposition

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def _load(args):
    cfg = load_config(args.config)
    if args.quad_tol is not None:
        cfg = dataclasses.replace(cfg, quad_tol=args.quad_tol)
    if args.out is not None:
        cfg = dataclasses.replace(cfg, output_dir=args.out)
    return cfg


def cmd_validate_kernel(args, out):
    cfg = _load(args)
    reports = validate_config_families(cfg)
    doc = _dump({label: rep.to_json() for label, rep in reports.items()})
    if args.out is not None:
        from pathlib import Path
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "validation.json").write_text(doc, encoding="utf-8")
    else:
        out.write(doc)
    for label, rep in reports.items():
        status = "PASS" if rep.passed else "FAIL " + ",".join(rep.failed_conditions())
        print(f"{label}: {status}", file=sys.stderr)
    return EXIT_OK if all(r.passed for r in reports.values()) else EXIT_FAIL


def cmd_sweep(args, out):
    cfg = _load(args)
    validations = validate_config_families(cfg)
    rows = run_sweep(cfg, validations)
    written = write_outputs(rows, cfg, cfg.output_dir, validations)
    out.write(written["report_text"])
    return EXIT_OK if report_passed(written["report_text"]) else EXIT_FAIL


def cmd_decompose(args, out):
    cfg = _load(args)
    results = []
    ok = True
    for fam_item in cfg.families:
        fam = cfg.kernel(fam_item)
        for fun_item in cfg.functions:
            f = cfg.function(fun_item)
            for N in cfg.N_values:
                spec = OperatorSpec(fam, N, cfg.domain, cfg.quad_tol)
                approx = approximation_error(spec, f, args.lam, args.x0)
                rep = proof_decomposition(spec, f, args.lam, args.x0, args.delta)
                checks = rep.checks(approx.error, approx.quad_error)
                ok = ok and all(checks.values())
                results.append({"family": fam_item.label, "function": fun_item.label,
                                "N": N, "lambda": args.lam, "x0": args.x0,
                                "abs_error": approx.error, "report": rep.to_json(),
                                "checks": checks})
    out.write(_dump(results))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_lebesgue_scan(args, out):
    f = builtin_function(args.function)
    scan = classify_point(f, args.x0, scan_tol=args.scan_tol)
    expected = f.annotation(args.x0)
    doc = scan.to_json()
    doc["function"] = f.name
    doc["annotation"] = expected
    out.write(_dump(doc))
    return EXIT_FAIL if expected is not None and expected != scan.verdict else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--quad-tol", type=float, default=argparse.SUPPRESS,
                        help="absolute quadrature tolerance (overrides the config)")
    common.add_argument("--out", default=argparse.SUPPRESS,
                        help="output directory (overrides the config)")

    parser = argparse.ArgumentParser(
        prog="nonlinop", parents=[common],
        description="Nonlinear power-operator convergence experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate-kernel", parents=[common],
                       help="certify the Class A conditions for the config's families")
    p.add_argument("config")
    p.set_defaults(func=cmd_validate_kernel)

    p = sub.add_parser("sweep", parents=[common], help="run a lambda sweep")
    p.add_argument("config")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("decompose", parents=[common],
                       help="proof-ledger decomposition at one (lambda, x0, delta)")
    p.add_argument("config")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--x0", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("lebesgue-scan", parents=[common],
                       help="classify x0 as a Lebesgue point of a corpus function")
    p.add_argument("function")
    p.add_argument("--x0", type=float, required=True)
    p.add_argument("--scan-tol", type=float, default=1e-2)
    p.set_defaults(func=cmd_lebesgue_scan)
    return parser


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    args.quad_tol = getattr(args, "quad_tol", None)
    args.out = getattr(args, "out", None)
    try:
        return args.func(args, out)
    except (NonlinopError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
