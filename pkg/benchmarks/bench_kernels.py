"""Compare the numba and pure-numpy kernels.

    python benchmarks/bench_kernels.py [--repeat 5]

The dispatch default depends on HFSC_DISABLE_NUMBA; this script times both
implementations directly regardless of the flag.
"""
import argparse
import timeit

import numpy as np

from hfsc import _kernels, build_model, validate_spectrum


def spectra():
    yield "N=1", validate_spectrum([(0.2 + 0.3j, 1.0, 0.5)])
    yield "N=2", validate_spectrum([(0.1 + 0.3j, 1.0, 1.0), (0.3 + 0.5j, 1.0, 1.0)])
    rng = np.random.default_rng(7)
    sig = rng.uniform(-0.3, 0.3, 5) + 1j * np.linspace(0.3, 0.9, 5)
    yield "N=5", validate_spectrum(zip(sig, np.ones(5), np.ones(5)))


def best(fn, repeat):
    fn()  # warm-up (numba compiles on first call)
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--points", type=int, default=200_000)
    args = parser.parse_args(argv)
    if _kernels.nsoliton_numba is None:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"dispatch backend: {_kernels.BACKEND}")
    model = build_model(1.0, 1.0, 1.0, 1.0)
    rng = np.random.default_rng(0)
    xt = rng.uniform(-20, 20, args.points)
    t = rng.uniform(-5, 5, args.points)
    print(f"{'kernel':<24}{'numpy [ms]':>12}{'numba [ms]':>12}{'speed-up':>10}")
    for label, sp in spectra():
        run = lambda k: (lambda: k(sp.sigma, sp.a, sp.b, xt, t, model.alpha4))
        tn = best(run(_kernels.nsoliton_numpy), args.repeat)
        tb = best(run(_kernels.nsoliton_numba), args.repeat)
        print(f"{'nsoliton ' + label:<24}{1e3 * tn:>12.2f}{1e3 * tb:>12.2f}{tn / tb:>10.1f}")
    print(f"{'kernel':<24}{'numpy [us]':>12}{'numba [us]':>12}{'speed-up':>10}")
    for n in (1024, 16384):
        u0 = rng.normal(size=n) + 1j * rng.normal(size=n)
        run = lambda k: (lambda: k(u0.copy(), 0.003))
        tn = best(run(_kernels.nonlinear_rotate_numpy), args.repeat)
        tb = best(run(_kernels.nonlinear_rotate_numba), args.repeat)
        print(f"{f'rotate n={n}':<24}{1e6 * tn:>12.1f}{1e6 * tb:>12.1f}{tn / tb:>10.1f}")


if __name__ == "__main__":
    main()
