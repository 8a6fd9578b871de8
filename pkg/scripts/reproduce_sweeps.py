"""Run the three shipped sweeps and print one summary line per config.

    python3 scripts/reproduce_sweeps.py [--out DIR] [--plot]

Outputs land in DIR/<config name>/ (default: the output_dir in each config).
The exit code is the worst of the individual sweep exit codes.
"""
import argparse
import io
import subprocess
import sys
import time
from pathlib import Path

from nonlinop import cli

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ("finite_interval", "real_line", "controls")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", help="parent directory for the per-config outputs")
    ap.add_argument("--plot", action="store_true", help="also render errors.png (matplotlib)")
    args = ap.parse_args()

    worst = 0
    for name in CONFIGS:
        argv = ["sweep", str(ROOT / "configs" / f"{name}.json")]
        out_dir = Path(args.out) / name if args.out else ROOT / "out" / name
        argv += ["--out", str(out_dir)]
        buf = io.StringIO()
        t0 = time.perf_counter()
        code = cli.main(argv, out=buf)
        elapsed = time.perf_counter() - t0
        fails = [ln for ln in buf.getvalue().splitlines() if ln.startswith("FAIL")]
        status = {0: "PASS", 1: "FAIL", 2: "ERROR"}[code]
        print(f"{name:22s} {status:5s} {elapsed:6.1f}s  -> {out_dir}")
        for ln in fails:
            print(f"    {ln}")
        if args.plot and code != 2:
            subprocess.run([sys.executable, str(out_dir / "plot_errors.py")], check=False)
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
