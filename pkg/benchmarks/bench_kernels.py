"""Compare the compiled and NumPy kernel backends on realistic slice workloads.

Usage: python benchmarks/bench_kernels.py [--frames N] [--repeat R]
"""
import argparse
import time

import numpy as np

from su11modes import kernels
from su11modes.model import PolarGrid
from su11modes.stats import SliceSpec, slice_weights


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--frames", type=int, default=500)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    grid = PolarGrid.from_camera(64, 64, 1e-3, n_theta=64, n_phi=128)
    rng = np.random.default_rng(0)
    frames = rng.exponential(size=(args.frames, grid.n_y * grid.n_x)).astype(np.float32)
    cases = {
        "azimuthal ring, 128 bins": slice_weights(grid, SliceSpec("azimuthal", 15e-3, 1.1e-3, 128)),
        "radial wedge, 64 bins": slice_weights(
            grid, SliceSpec("radial", 0.0, 0.08, 64, theta_range=(0.5e-3, 31.5e-3))),
    }
    backends = ["python"]
    try:
        kernels.get_backend("cython")
        backends.append("cython")
    except ImportError:
        print("compiled backend not built; timing the NumPy fallback only")

    print(f"{'case':28s} {'kernel':24s} " + " ".join(f"{b:>10s}" for b in backends))
    for name, sw in cases.items():
        rows = {"bin_profiles": {}, "binned_comoment_update": {}}
        for b in backends:
            k = kernels.get_backend(b)
            rows["bin_profiles"][b] = _best(
                lambda: k.bin_profiles(frames, sw.pix, sw.bins, sw.wts, sw.n_bins), args.repeat)

            def fused():
                mean = np.zeros(sw.n_bins)
                com = np.zeros((sw.n_bins, sw.n_bins))
                k.binned_comoment_update(mean, com, 0, frames, sw.pix, sw.bins, sw.wts, sw.norm)

            rows["binned_comoment_update"][b] = _best(fused, args.repeat)
        for kname, t in rows.items():
            cells = " ".join(f"{1e3 * t[b]:8.2f}ms" for b in backends)
            extra = ""
            if "cython" in t:
                extra = f"  speedup x{t['python'] / t['cython']:.1f}"
            print(f"{name:28s} {kname:24s} {cells}{extra}")


if __name__ == "__main__":
    main()
