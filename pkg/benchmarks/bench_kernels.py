"""Time the hot kernels in both lanes and report the speedup.

Run from the repository root after installing the package:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --points 20000 --depth 14 --repeat 7

Each kernel is timed on the same inputs in the NumPy lane and, when the
extension is built, the compiled lane; the best of `--repeat` runs counts.
"""

import argparse
import time

import numpy as np

from refinery._kernels import _numpy as pylane

try:
    from refinery._kernels import _core as clane
except ImportError:
    clane = None


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def quincunx():
    bmat = np.array([[1, 1], [-1, 1]], dtype=np.int64)
    det = int(round(np.linalg.det(bmat)))
    adj = np.rint(np.linalg.inv(bmat) * det).astype(np.int64)
    digits = np.array([[0, 0], [1, 0]], dtype=np.int64)
    return bmat, adj, det, digits


def build_cases(points, depth, width, rng):
    bmat, adj, det, digits = quincunx()
    codes = rng.integers(0, 2, size=(points, depth))
    pts = pylane.horner_compose(codes, digits, bmat)
    mats = rng.normal(size=(2, width, width)) \
        + 1j * rng.normal(size=(2, width, width))
    vals = rng.normal(size=(points, width)) \
        + 1j * rng.normal(size=(points, width))
    return [
        ("expand_digits",
         lambda lane: lane.expand_digits(pts, adj, det, digits, depth)),
        ("horner_compose",
         lambda lane: lane.horner_compose(codes, digits, bmat)),
        ("apply_digit_matrices",
         lambda lane: lane.apply_digit_matrices(mats, vals)),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--points", type=int, default=10_000,
                        help="rows per kernel call")
    parser.add_argument("--depth", type=int, default=12,
                        help="digit string length")
    parser.add_argument("--width", type=int, default=12,
                        help="window size for the matrix kernel")
    parser.add_argument("--repeat", type=int, default=5,
                        help="timing repetitions, best counts")
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    cases = build_cases(args.points, args.depth, args.width, rng)
    print(f"points={args.points} depth={args.depth} width={args.width} "
          f"repeat={args.repeat}")
    print(f"{'kernel':<22} {'python':>10} {'compiled':>10} {'speedup':>8}")
    for name, call in cases:
        t_py = best_time(lambda: call(pylane), args.repeat)
        if clane is None:
            print(f"{name:<22} {t_py * 1e3:>8.2f}ms {'n/a':>10} {'n/a':>8}")
            continue
        t_c = best_time(lambda: call(clane), args.repeat)
        ratio = t_py / t_c if t_c > 0 else float("inf")
        print(f"{name:<22} {t_py * 1e3:>8.2f}ms {t_c * 1e3:>8.2f}ms "
              f"{ratio:>7.2f}x")
    if clane is None:
        print("compiled lane not built; showing the NumPy lane only")


if __name__ == "__main__":
    main()
