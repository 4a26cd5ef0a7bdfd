"""Benchmark table at reduced sizes plus the steps-tree linearity check."""

import numpy as np

from ringlet.bench import format_report, run_benchmarks, steps_linearity
from ringlet.stats import correlation_report

SIZES = {"Loop": 50_000, "MathMax": 10_000, "FuncCall": 10_000, "FibDP": 500, "FibRec": 18,
         "ListFill": 10_000}


def main():
    report = run_benchmarks(list(SIZES), SIZES, repeat=3)
    print(format_report(report))

    rows = steps_linearity(np.linspace(50, 2000, 12).round().astype(int))
    timing = correlation_report([(s, t) for s, t, _ in rows])
    size = correlation_report([(s, b) for s, _, b in rows])
    print(f"conversion time vs steps: pearson {timing['pearson']:.4f}, "
          f"{timing['slope'] * 1e6:.1f} us/step")
    print(f".stp bytes vs steps:      pearson {size['pearson']:.4f}, "
          f"{size['slope']:.1f} bytes/step")


if __name__ == "__main__":
    main()
