"""Classify every annotated point of the test-function corpus and print a table."""
from nonlinop.lebesgue import BUILTIN_FUNCTIONS, builtin_function, classify_point


def main():
    print(f"{'function':20s} {'x0':>6s} {'expected':13s} {'verdict':13s} "
          f"{'left(1e-4)':>11s} {'right(1e-4)':>11s}")
    mismatches = 0
    for name in BUILTIN_FUNCTIONS:
        f = builtin_function(name)
        for x0, expected in f.annotated_points:
            scan = classify_point(f, x0)
            flag = "" if scan.verdict == expected else "  <-- mismatch"
            mismatches += scan.verdict != expected
            print(f"{name:20s} {x0:6.2f} {expected:13s} {scan.verdict:13s} "
                  f"{scan.left_ratios[-1]:11.3e} {scan.right_ratios[-1]:11.3e}{flag}")
    return 1 if mismatches else 0


if __name__ == "__main__":
    raise SystemExit(main())
