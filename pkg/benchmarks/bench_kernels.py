"""Time the compiled susceptibility kernel against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--omega N] [--bfield K] [--repeat R]
"""

import argparse
import timeit

import numpy as np

from eitmem import _kernels_py
from eitmem.atomic import build_cesium_d2
from eitmem.bloch import FieldConfig, MediumConfig, channel_tables

try:
    from eitmem import _kernels
except ImportError:
    _kernels = None


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--omega", type=int, default=4096)
    ap.add_argument("--bfield", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    scheme = build_cesium_d2()
    G = scheme.gamma
    medium = MediumConfig(od=200, length=0.025, gradient=0.008, gamma0=1e-3 * G)
    t = channel_tables(FieldConfig(3 * G, 0.1 * G), medium, scheme)
    w = np.linspace(-5, 5, args.omega) * G
    b = np.linspace(-0.05, 0.05, args.bfield)
    call = (w, b, t.pop, t.dg, t.cc, t.off, t.zp, t.zs, 0.1 * G, 0.0, G, medium.gamma0)

    backends = {"python": _kernels_py.chi_channels}
    if _kernels is not None:
        backends["cython"] = _kernels.chi_channels
    else:
        print("compiled kernel not built; run `python setup.py build_ext --inplace`")

    ref = backends["python"](*call)
    timings = {}
    for name, fn in backends.items():
        out = fn(*call)
        err = np.max(np.abs(out - ref)) / np.max(np.abs(ref))
        best = min(timeit.repeat(lambda: fn(*call), number=1, repeat=args.repeat))
        timings[name] = best
        print(f"{name:7s} {best * 1e3:9.2f} ms  ({args.omega}x{args.bfield} points, max rel diff {err:.1e})")
    if len(timings) == 2:
        print(f"speedup {timings['python'] / timings['cython']:.1f}x")


if __name__ == "__main__":
    main()
