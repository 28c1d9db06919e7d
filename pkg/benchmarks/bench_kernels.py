#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Runs each hot kernel on a VGA-scale workload with both backends and prints
per-kernel timings plus the speedup. Shapes mirror the storage worked
example (480x640 image, 200 masks), with the feature dimension reduced by
default so the benchmark stays quick; pass --dim 1024 for the full-width
run.

    python3 benchmarks/bench_kernels.py [--dim 256] [--repeat 3]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from plaf import kernels


def _time(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dim", type=int, default=256, help="feature dimension")
    parser.add_argument("--repeat", type=int, default=3, help="best-of repetitions")
    parser.add_argument("--height", type=int, default=480)
    parser.add_argument("--width", type=int, default=640)
    parser.add_argument("--masks", type=int, default=200)
    args = parser.parse_args()

    try:
        backends = [kernels.load_backend("python"), kernels.load_backend("native")]
    except ImportError:
        print("compiled backend not built; benchmarking the numpy fallback only")
        backends = [kernels.load_backend("python")]

    rng = np.random.default_rng(0)
    h, w, dim, k = args.height, args.width, args.dim, args.masks
    src = rng.standard_normal((h // 16, w // 16, dim)).astype(np.float32)
    feat = rng.standard_normal((h, w, dim)).astype(np.float32)
    masks = np.zeros((k, h, w), dtype=bool)
    for i in range(k):
        y = (i * 37) % (h - 24)
        x = (i * 61) % (w - 24)
        masks[i, y : y + 24, x : x + 24] = True
    order = np.argsort(rng.random(k)).astype(np.int64)
    depth = (rng.random((h, w)) * 4 + 0.3).astype(np.float32)
    index_map = rng.integers(0, k + 1, (h, w)).astype(np.uint16)
    pose = np.eye(4)
    pose[:3, 3] = [1.0, -2.0, 0.5]

    cases = {
        f"upsample {h//16}x{w//16}x{dim} -> {h}x{w}": lambda b: b.upsample_bilinear(src, h, w),
        f"mask_means {k} masks over {h}x{w}x{dim}": lambda b: b.mask_means(feat, masks),
        f"assign_pixels {k} masks over {h}x{w}": lambda b: b.assign_pixels(masks, order),
        f"back_project {h}x{w} stride 1": lambda b: b.back_project(
            depth, index_map, 525.0, 525.0, w / 2, h / 2, pose, 1
        ),
    }

    width = max(len(name) for name in cases)
    header = f"{'kernel':<{width}}  " + "  ".join(f"{b.NAME:>10}" for b in backends)
    if len(backends) == 2:
        header += f"  {'speedup':>8}"
    print(header)
    for name, fn in cases.items():
        times = [_time(lambda b=b: fn(b), args.repeat) for b in backends]
        row = f"{name:<{width}}  " + "  ".join(f"{t * 1e3:>8.1f}ms" for t in times)
        if len(times) == 2:
            row += f"  {times[0] / times[1]:>7.2f}x"
        print(row)


if __name__ == "__main__":
    main()
