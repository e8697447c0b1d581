"""Compiled versus numpy kernels: marching squares, Hausdorff distance and a
full observed step (convolution, threshold, front extraction, distance to
the exact circle).

    python benchmarks/bench_kernels.py [--points 1024] [--repeat 5]
"""
import argparse
import time
import warnings

import numpy as np

from fracthresh import _pykernels
from fracthresh.grid import make_grid
from fracthresh.harness import reference_sphere
from fracthresh.kernel import build_kernel
from fracthresh.scheme import SchemeParams, disk, initialize, step

try:
    from fracthresh import _ckernels
except ImportError:
    _ckernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def observed_step(impl, u, kernel, x0, dx, circle):
    v, w = step(u, kernel, return_smoothed=True)
    pts, _ = impl.marching_squares(w.values, x0, dx, False)
    return max(impl.directed_hausdorff(pts, circle), impl.directed_hausdorff(circle, pts))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=1024)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    grid = make_grid(2, 8.0, args.points)
    dx = grid.spacing
    params = SchemeParams(1.5, (6.4 * dx) ** 2 / 1.0, 1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        kernel = build_kernel(grid, params.alpha, params.sigma)
    u = initialize(grid, disk(1.0))
    _, w = step(u, kernel, return_smoothed=True)
    x0 = -0.5 * grid.extent
    circle = reference_sphere(0.9, 2, dx / 4)

    impls = [("python", _pykernels)]
    if _ckernels is not None:
        impls.append(("cython", _ckernels))
    pts = _pykernels.marching_squares(w.values, x0, dx, False)[0]

    rows = []
    for label, fn_of in (
            ("marching squares", lambda m: lambda: m.marching_squares(w.values, x0, dx, False)),
            ("hausdorff", lambda m: lambda: m.directed_hausdorff(pts, circle)),
            ("observed step", lambda m: lambda: observed_step(m, u, kernel, x0, dx, circle))):
        rows.append((label, {name: best_of(fn_of(m), args.repeat) for name, m in impls}))

    print(f"grid {args.points}^2, {len(pts)} front points, {len(circle)} reference points")
    print(f"{'kernel':<18}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}")
    for label, t in rows:
        c = t.get("cython", float("nan"))
        print(f"{label:<18}{t['python']:>12.4g}{c:>12.4g}{t['python'] / c:>10.1f}")


if __name__ == "__main__":
    main()
