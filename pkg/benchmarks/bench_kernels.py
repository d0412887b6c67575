"""Compare the compiled and numpy backends of :mod:`hymtorus.kernels`.

Usage::

    python benchmarks/bench_kernels.py [--count 65536] [--ranks 2 3 4] [--repeat 5]

Prints best-of-``repeat`` wall time per kernel and backend, the speed-up of
the compiled core, and the largest disagreement between the two backends.
Also times one Newton solve end to end with each backend.
"""

import argparse
import time

import numpy as np

from hymtorus import kernels


def _stack(rng, count, r):
    a = rng.standard_normal((count, r, r)) + 1j * rng.standard_normal((count, r, r))
    herm = a + np.conj(np.swapaxes(a, -1, -2))
    spd = herm @ np.conj(np.swapaxes(herm, -1, -2)) + np.eye(r)
    return a, herm, spd


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def bench_kernels(count, ranks, repeat):
    rng = np.random.default_rng(0)
    print(f"{'kernel':<10}{'r':>3}{'numpy ms':>12}{'cython ms':>12}{'speed-up':>10}{'max diff':>12}")
    for r in ranks:
        a, herm, spd = _stack(rng, count, r)
        cases = {
            "matmul": lambda: kernels.matmul(a, herm),
            "eigvalsh": lambda: kernels.eigvalsh(herm),
            "eigh": lambda: kernels.eigh(herm)[0],
            "inv": lambda: kernels.inv(spd),
        }
        for name, fn in cases.items():
            times, outs = {}, {}
            for backend in ("numpy", "cython"):
                kernels.use_backend(backend)
                times[backend], outs[backend] = _best(fn, repeat)
            diff = np.abs(outs["numpy"] - outs["cython"]).max() / max(1.0, np.abs(outs["numpy"]).max())
            print(
                f"{name:<10}{r:>3}{1e3 * times['numpy']:>12.2f}{1e3 * times['cython']:>12.2f}"
                f"{times['numpy'] / times['cython']:>10.2f}{diff:>12.1e}"
            )


def bench_solve(repeat):
    from hymtorus import BundleData, HYMTarget, TorusGeometry, hym_endomorphism, solve_prescribed
    from hymtorus.generators import positive_field

    geom = TorusGeometry.square(1, 64)
    bundle = BundleData(2, F0=12.0)
    target = HYMTarget(hym_endomorphism(positive_field(geom, 2, seed=0, modes=1, amplitude=0.5), bundle))
    for backend in ("numpy", "cython"):
        kernels.use_backend(backend)
        t, (_, report) = _best(lambda: solve_prescribed(target, bundle), repeat)
        print(f"solve_prescribed 64^2 r=2 [{backend}]: {t:.2f} s ({report.newton_steps} Newton steps)")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--count", type=int, default=65536, help="matrices per stack")
    parser.add_argument("--ranks", type=int, nargs="+", default=[2, 3, 4])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--skip-solve", action="store_true")
    args = parser.parse_args()
    if "cython" not in kernels.available_backends():
        raise SystemExit("compiled backend not built; run `pip install -e . --no-build-isolation` first")
    prev = kernels.backend()
    try:
        bench_kernels(args.count, args.ranks, args.repeat)
        if not args.skip_solve:
            bench_solve(max(1, args.repeat // 5))
    finally:
        kernels.use_backend(prev)


if __name__ == "__main__":
    main()
