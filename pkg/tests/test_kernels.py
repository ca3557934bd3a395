"""Backend parity and accuracy checks for the geometry kernels.

The numpy and numba implementations must be result-equivalent; distance
accuracy is checked against an independently coded great-circle oracle.
"""

import math

import numpy as np
import pytest

from crashquery.geo import _kernels_nb as nb
from crashquery.geo import _kernels_np as knp

BACKENDS = [knp, nb]

_rng = np.random.default_rng(42)


def haversine_m(lon1, lat1, lon2, lat2, radius=6371008.8):
    """Great-circle oracle, written independently of the package kernels."""
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp = p2 - p1
    dl = math.radians(lon2 - lon1)
    a = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * radius * math.asin(math.sqrt(a))


def random_points(n, lon0=-72.5, lat0=42.4, spread=0.02):
    return np.column_stack([
        _rng.uniform(lon0 - spread, lon0 + spread, n),
        _rng.uniform(lat0 - spread, lat0 + spread, n),
    ])


@pytest.mark.parametrize("k", BACKENDS, ids=lambda m: m.BACKEND)
def test_pt_pt_matches_haversine_locally(k):
    for _ in range(50):
        lat = _rng.uniform(-60, 60)
        lon = _rng.uniform(-179, 179)
        # offsets up to ~5 km
        dlat = _rng.uniform(-0.045, 0.045)
        dlon = _rng.uniform(-0.045, 0.045) / max(0.2, math.cos(math.radians(lat)))
        d = k.pt_pt_dist_m(lon, lat, lon + dlon, lat + dlat)
        truth = haversine_m(lon, lat, lon + dlon, lat + dlat)
        if truth > 1.0:
            assert d == pytest.approx(truth, rel=5e-3)


def test_backends_agree_pointwise():
    t = random_points(300)
    r = random_points(40)
    for d in (50.0, 300.0, 1500.0):
        m1 = knp.points_to_points_mask(t, r, d)
        m2 = nb.points_to_points_mask(t, r, d)
        assert np.array_equal(m1, m2)
    d1 = knp.points_to_points_mindist(t, r)
    d2 = nb.points_to_points_mindist(t, r)
    assert np.allclose(d1, d2, rtol=1e-9)


def _ring(cx, cy, r_deg, n=8):
    pts = [(cx + r_deg * math.cos(2 * math.pi * i / n),
            cy + r_deg * math.sin(2 * math.pi * i / n)) for i in range(n)]
    pts.append(pts[0])
    return np.asarray(pts)


def test_backends_agree_point_to_geom():
    pts = random_points(200)
    ring = _ring(-72.5, 42.4, 0.01)
    parts = np.array([0, len(ring)], dtype=np.int64)
    for kind in (knp.KIND_POLYLINE, knp.KIND_POLYGON):
        d1 = knp.points_to_geom_dist(pts, ring, parts, kind)
        d2 = nb.points_to_geom_dist(pts, ring, parts, kind)
        assert np.allclose(d1, d2, rtol=1e-9, atol=1e-9)


def test_backends_agree_geom_geom():
    line1 = np.asarray([[-72.51, 42.39], [-72.49, 42.41], [-72.47, 42.40]])
    line2 = np.asarray([[-72.50, 42.42], [-72.48, 42.38]])
    lp = np.array([0, 3], dtype=np.int64)
    lp2 = np.array([0, 2], dtype=np.int64)
    poly = _ring(-72.52, 42.40, 0.008)
    pp = np.array([0, len(poly)], dtype=np.int64)
    combos = [
        (line1, lp, knp.KIND_POLYLINE, line2, lp2, knp.KIND_POLYLINE),
        (line1, lp, knp.KIND_POLYLINE, poly, pp, knp.KIND_POLYGON),
        (poly, pp, knp.KIND_POLYGON, poly + 0.02, pp, knp.KIND_POLYGON),
    ]
    for a, apar, ak, b, bpar, bk in combos:
        d1 = knp.geom_geom_dist_m(a, apar, ak, b, bpar, bk)
        d2 = nb.geom_geom_dist_m(a, apar, ak, b, bpar, bk)
        assert d1 == pytest.approx(d2, rel=1e-9, abs=1e-9)


def test_backends_agree_point_in_rings():
    ring = _ring(-72.5, 42.4, 0.01, n=12)
    hole = _ring(-72.5, 42.4, 0.003, n=8)
    verts = np.vstack([ring, hole])
    parts = np.array([0, len(ring), len(ring) + len(hole)], dtype=np.int64)
    pts = random_points(500, spread=0.015)
    m1 = knp.points_in_rings_mask(pts, verts, parts)
    m2 = nb.points_in_rings_mask(pts, verts, parts)
    assert np.array_equal(m1, m2)
    assert 0 < m1.sum() < len(pts)


def test_backends_agree_snap():
    pts = random_points(150)
    # three horizontal lines, segments grouped by line
    seg_a, seg_b, seg_c, seg_l = [], [], [], []
    for li, lat in enumerate((42.39, 42.40, 42.41)):
        xs = np.linspace(-72.52, -72.48, 5)
        for i in range(4):
            seg_a.append([xs[i], lat])
            seg_b.append([xs[i + 1], lat])
            seg_c.append([-72.5, lat])
            seg_l.append(li)
    args = (np.asarray(seg_a), np.asarray(seg_b), np.asarray(seg_c),
            np.asarray(seg_l, dtype=np.int64), 3)
    for tol in (100.0, 600.0, 5000.0):
        s1 = knp.snap_points_to_lines(pts, *args, tol)
        s2 = nb.snap_points_to_lines(pts, *args, tol)
        assert np.array_equal(s1, s2)


def test_snap_tie_breaks_to_smaller_line_index():
    # point exactly midway between two parallel lines
    pts = np.asarray([[-72.5, 42.40]])
    seg_a = np.asarray([[-72.51, 42.399], [-72.51, 42.401]])
    seg_b = np.asarray([[-72.49, 42.399], [-72.49, 42.401]])
    seg_c = np.asarray([[-72.5, 42.399], [-72.5, 42.401]])
    seg_l = np.asarray([0, 1], dtype=np.int64)
    for k in BACKENDS:
        out = k.snap_points_to_lines(pts, seg_a, seg_b, seg_c, seg_l, 2, 1000.0)
        assert out[0] == 0


def test_env_flag_selects_backend(monkeypatch):
    import importlib

    import crashquery.geo.kernels as kmod

    monkeypatch.setenv("CRASHQUERY_KERNELS", "numpy")
    mod = importlib.reload(kmod)
    assert mod.BACKEND == "numpy"
    monkeypatch.setenv("CRASHQUERY_KERNELS", "numba")
    mod = importlib.reload(kmod)
    assert mod.BACKEND == "numba"
    monkeypatch.delenv("CRASHQUERY_KERNELS")
    mod = importlib.reload(kmod)
    assert mod.BACKEND in ("numba", "numpy")
