#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

JIT compilation is excluded (one warmup call per kernel before timing).

    python benchmarks/bench_kernels.py [--points 200000] [--repeats 5]
"""

import argparse
import time

import numpy as np

from crashquery.geo import _kernels_nb as nb
from crashquery.geo import _kernels_np as knp


def make_points(rng, n, spread=0.25):
    return np.column_stack([
        rng.uniform(-72.8, -72.8 + spread, n),
        rng.uniform(42.2, 42.2 + spread, n),
    ])


def ring(cx, cy, r_deg, n=24):
    angles = np.linspace(0, 2 * np.pi, n, endpoint=False)
    pts = np.column_stack([cx + r_deg * np.cos(angles), cy + r_deg * np.sin(angles)])
    return np.vstack([pts, pts[:1]])


def build_cases(n_points, rng):
    pts = make_points(rng, n_points)
    refs = make_points(rng, 400)
    outer = ring(-72.68, 42.32, 0.09)
    hole = ring(-72.68, 42.32, 0.03)
    poly_verts = np.vstack([outer, hole])
    poly_parts = np.array([0, len(outer), len(outer) + len(hole)], dtype=np.int64)
    line = np.column_stack([
        np.linspace(-72.8, -72.55, 64),
        42.3 + 0.01 * np.sin(np.linspace(0, 8, 64)),
    ])
    line_parts = np.array([0, len(line)], dtype=np.int64)

    n_lines = 400
    seg_a, seg_b, seg_c, seg_line = [], [], [], []
    for li in range(n_lines):
        y = 42.2 + 0.25 * li / n_lines
        xs = np.linspace(-72.8, -72.55, 5)
        for i in range(4):
            seg_a.append([xs[i], y])
            seg_b.append([xs[i + 1], y])
            seg_c.append([-72.675, y])
            seg_line.append(li)
    snap_args = (np.asarray(seg_a), np.asarray(seg_b), np.asarray(seg_c),
                 np.asarray(seg_line, dtype=np.int64), n_lines, 500.0)

    return [
        ("points_to_points_mask", lambda k: k.points_to_points_mask(pts, refs, 400.0)),
        ("points_to_points_mindist", lambda k: k.points_to_points_mindist(pts, refs)),
        ("points_to_geom_dist(line)",
         lambda k: k.points_to_geom_dist(pts, line, line_parts, k.KIND_POLYLINE)),
        ("points_in_rings_mask",
         lambda k: k.points_in_rings_mask(pts, poly_verts, poly_parts)),
        ("snap_points_to_lines", lambda k: k.snap_points_to_lines(pts, *snap_args)),
    ]


def bench(fn, repeats):
    fn()  # warmup (includes JIT compile on the numba side)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--points", type=int, default=200_000)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(11)
    cases = build_cases(args.points, rng)

    print(f"{args.points:,} points per case, best of {args.repeats} runs\n")
    print(f"{'kernel':<28} {'numpy':>10} {'numba':>10} {'speedup':>9}")
    print("-" * 61)
    for name, call in cases:
        t_np = bench(lambda: call(knp), args.repeats)
        t_nb = bench(lambda: call(nb), args.repeats)
        print(f"{name:<28} {t_np * 1e3:>8.1f}ms {t_nb * 1e3:>8.1f}ms {t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
