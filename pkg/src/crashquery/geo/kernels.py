"""Kernel backend selection.

The hot geometry loops ship in two result-equivalent implementations:
numba-JIT (`_kernels_nb`) and pure numpy (`_kernels_np`). The env var
CRASHQUERY_KERNELS picks one: "numba", "numpy", or "auto" (default --
numba when importable, numpy otherwise). `benchmarks/bench_kernels.py`
compares the two.
"""

from __future__ import annotations

import os

_choice = os.environ.get("CRASHQUERY_KERNELS", "auto").strip().lower() or "auto"

if _choice == "numpy":
    from . import _kernels_np as _impl
elif _choice == "numba":
    from . import _kernels_nb as _impl
elif _choice == "auto":
    try:
        from . import _kernels_nb as _impl
    except ImportError:
        from . import _kernels_np as _impl
else:
    raise RuntimeError(
        f"CRASHQUERY_KERNELS={_choice!r} not recognized (use 'numba', 'numpy', or 'auto')"
    )

BACKEND = _impl.BACKEND
EARTH_RADIUS_M = _impl.EARTH_RADIUS_M
KIND_POINT = _impl.KIND_POINT
KIND_POLYLINE = _impl.KIND_POLYLINE
KIND_POLYGON = _impl.KIND_POLYGON

pt_pt_dist_m = _impl.pt_pt_dist_m
points_to_points_mask = _impl.points_to_points_mask
points_to_points_mindist = _impl.points_to_points_mindist
points_to_geom_dist = _impl.points_to_geom_dist
geom_geom_dist_m = _impl.geom_geom_dist_m
points_in_rings_mask = _impl.points_in_rings_mask
snap_points_to_lines = _impl.snap_points_to_lines


def warmup() -> None:
    """Force JIT compilation of every kernel (no-op on the numpy backend)."""
    import numpy as np

    pts = np.array([[-72.5, 42.3], [-72.51, 42.31]])
    ring = np.array([[-72.6, 42.2], [-72.4, 42.2], [-72.4, 42.4], [-72.6, 42.4], [-72.6, 42.2]])
    parts = np.array([0, 5], dtype=np.int64)
    line = np.array([[-72.55, 42.25], [-72.45, 42.35]])
    lparts = np.array([0, 2], dtype=np.int64)
    pt_pt_dist_m(-72.5, 42.3, -72.51, 42.31)
    points_to_points_mask(pts, pts, 100.0)
    points_to_points_mindist(pts, pts)
    points_to_geom_dist(pts, ring, parts, KIND_POLYGON)
    points_to_geom_dist(pts, line, lparts, KIND_POLYLINE)
    geom_geom_dist_m(line, lparts, KIND_POLYLINE, ring, parts, KIND_POLYGON)
    geom_geom_dist_m(pts[:1], np.array([0, 1], dtype=np.int64), KIND_POINT, ring, parts, KIND_POLYGON)
    points_in_rings_mask(pts, ring, parts)
    snap_points_to_lines(
        pts,
        line[:1],
        line[1:],
        np.array([[-72.5, 42.3]]),
        np.zeros(1, dtype=np.int64),
        1,
        50.0,
    )
