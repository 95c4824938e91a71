"""Time the compiled kernels against the numpy fallback.

Run with ``python3 benchmarks/bench_kernels.py``. Both backends get
identical inputs; the script also reports their largest disagreement.
"""

import argparse
import time

import numpy as np

from nfext import kernels
from nfext.geometry import TargetSurface
from nfext.spa import _initial_guess


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def newton_case(n, rng):
    surface = TargetSurface.sphere(1.24)
    a = np.column_stack([rng.uniform(-6, -2, n), rng.uniform(-1, 1, (n, 2))])
    b = np.column_stack([rng.uniform(-6, -2, n), rng.uniform(-1, 1, (n, 2))])
    y0, z0 = _initial_guess(surface, a, b)
    return lambda impl: impl.newton_specular(1, 1.24, a, b, y0, z0, 1e-12, 100, 1.24)


def filter_case(c, p, nt, rng):
    u = rng.standard_normal((p, nt)) + 1j * rng.standard_normal((p, nt))
    amps = rng.standard_normal((c, p, 1)) + 1j * rng.standard_normal((c, p, 1))
    delays = rng.uniform(30e-9, 50e-9, (c, p, 1))
    return lambda impl: impl.matched_filter(u, 0.0, 1.25e-9, 100e6, amps, delays)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pairs", type=int, default=20000)
    ap.add_argument("--candidates", type=int, default=256)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    impls = kernels.implementations()
    cases = {
        f"newton_specular ({args.pairs} sphere pairs)": newton_case(args.pairs, rng),
        f"matched_filter ({args.candidates}x169 candidates, 100 samples)":
            filter_case(args.candidates, 169, 100, rng),
    }
    print(f"{'kernel':58s} " + " ".join(f"{name:>10s}" for name in impls) + "   speedup   max diff")
    for label, case in cases.items():
        timings, outputs = {}, {}
        for name, impl in impls.items():
            timings[name], outputs[name] = best_of(lambda: case(impl), args.repeat)
        names = list(impls)
        diff = 0.0
        if len(names) == 2:
            for x, y in zip(outputs[names[0]][:2], outputs[names[1]][:2]):
                scale = max(np.abs(y).max(), 1e-300)
                diff = max(diff, float(np.abs(x - y).max() / scale))
        speed = timings["python"] / timings["compiled"] if "compiled" in timings else float("nan")
        print(f"{label:58s} " + " ".join(f"{timings[n] * 1e3:8.1f}ms" for n in names)
              + f"   {speed:6.1f}x   {diff:.1e}")


if __name__ == "__main__":
    main()
