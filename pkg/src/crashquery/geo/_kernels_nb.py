"""Numba-JIT geometry kernels; same contract as `_kernels_np` (see its docstring).

Every public function here must stay result-equivalent to its numpy twin --
`tests/test_kernels.py` asserts parity on randomized inputs.
"""

from __future__ import annotations

import numpy as np
from numba import njit

BACKEND = "numba"

EARTH_RADIUS_M = 6371008.8
_RAD = np.pi / 180.0
_M_PER_DEG = EARTH_RADIUS_M * _RAD

KIND_POINT = 0
KIND_POLYLINE = 1
KIND_POLYGON = 2

_JIT = {"cache": True, "fastmath": False}


@njit(**_JIT)
def _pt_seg_sq(px, py, ax, ay, bx, by):
    dx = bx - ax
    dy = by - ay
    l2 = dx * dx + dy * dy
    if l2 > 0.0:
        t = ((px - ax) * dx + (py - ay) * dy) / l2
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
    else:
        t = 0.0
    cx = ax + t * dx
    cy = ay + t * dy
    return (px - cx) ** 2 + (py - cy) ** 2


@njit(**_JIT)
def _cross(ax, ay, bx, by, px, py):
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax)


@njit(**_JIT)
def _seg_seg_sq(ax, ay, bx, by, cx, cy, dx, dy):
    d1 = _cross(cx, cy, dx, dy, ax, ay)
    d2 = _cross(cx, cy, dx, dy, bx, by)
    d3 = _cross(ax, ay, bx, by, cx, cy)
    d4 = _cross(ax, ay, bx, by, dx, dy)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and ((d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)):
        return 0.0
    best = _pt_seg_sq(ax, ay, cx, cy, dx, dy)
    d = _pt_seg_sq(bx, by, cx, cy, dx, dy)
    if d < best:
        best = d
    d = _pt_seg_sq(cx, cy, ax, ay, bx, by)
    if d < best:
        best = d
    d = _pt_seg_sq(dx, dy, ax, ay, bx, by)
    if d < best:
        best = d
    return best


@njit(**_JIT)
def _pt_pt_dist(lon1, lat1, lon2, lat2):
    lat0 = 0.5 * (lat1 + lat2)
    dx = (lon2 - lon1) * np.cos(_RAD * lat0) * _M_PER_DEG
    dy = (lat2 - lat1) * _M_PER_DEG
    return np.sqrt(dx * dx + dy * dy)


def pt_pt_dist_m(lon1, lat1, lon2, lat2):
    return float(_pt_pt_dist(lon1, lat1, lon2, lat2))


@njit(**_JIT)
def points_to_points_mask(t_lonlat, r_lonlat, dist_m):
    n = t_lonlat.shape[0]
    m = r_lonlat.shape[0]
    out = np.zeros(n, dtype=np.bool_)
    d2 = dist_m * dist_m
    for i in range(n):
        tlon = t_lonlat[i, 0]
        tlat = t_lonlat[i, 1]
        for j in range(m):
            lat0 = 0.5 * (tlat + r_lonlat[j, 1])
            dx = (r_lonlat[j, 0] - tlon) * np.cos(_RAD * lat0) * _M_PER_DEG
            dy = (r_lonlat[j, 1] - tlat) * _M_PER_DEG
            if dx * dx + dy * dy <= d2:
                out[i] = True
                break
    return out


@njit(**_JIT)
def points_to_points_mindist(t_lonlat, r_lonlat):
    n = t_lonlat.shape[0]
    m = r_lonlat.shape[0]
    out = np.full(n, np.inf)
    for i in range(n):
        tlon = t_lonlat[i, 0]
        tlat = t_lonlat[i, 1]
        best = np.inf
        for j in range(m):
            lat0 = 0.5 * (tlat + r_lonlat[j, 1])
            dx = (r_lonlat[j, 0] - tlon) * np.cos(_RAD * lat0) * _M_PER_DEG
            dy = (r_lonlat[j, 1] - tlat) * _M_PER_DEG
            d2 = dx * dx + dy * dy
            if d2 < best:
                best = d2
        out[i] = np.sqrt(best)
    return out


@njit(**_JIT)
def _bbox_center(verts):
    min_lon = verts[0, 0]
    max_lon = verts[0, 0]
    min_lat = verts[0, 1]
    max_lat = verts[0, 1]
    for i in range(1, verts.shape[0]):
        if verts[i, 0] < min_lon:
            min_lon = verts[i, 0]
        if verts[i, 0] > max_lon:
            max_lon = verts[i, 0]
        if verts[i, 1] < min_lat:
            min_lat = verts[i, 1]
        if verts[i, 1] > max_lat:
            max_lat = verts[i, 1]
    return 0.5 * (min_lon + max_lon), 0.5 * (min_lat + max_lat)


@njit(**_JIT)
def _even_odd_inside(px, py, x, y, parts):
    inside = False
    for p in range(len(parts) - 1):
        for i in range(parts[p], parts[p + 1] - 1):
            y1 = y[i]
            y2 = y[i + 1]
            if (y1 > py) != (y2 > py):
                xi = x[i] + (py - y1) * (x[i + 1] - x[i]) / (y2 - y1)
                if px < xi:
                    inside = not inside
    return inside


@njit(**_JIT)
def _pt_to_parts_min_sq(px, py, x, y, parts):
    best = np.inf
    for p in range(len(parts) - 1):
        for i in range(parts[p], parts[p + 1] - 1):
            d = _pt_seg_sq(px, py, x[i], y[i], x[i + 1], y[i + 1])
            if d < best:
                best = d
    return best


@njit(**_JIT)
def points_to_geom_dist(p_lonlat, gverts, gparts, gkind):
    n = p_lonlat.shape[0]
    out = np.empty(n)
    if n == 0:
        return out
    gc_lon, gc_lat = _bbox_center(gverts)
    if gkind == KIND_POINT:
        for i in range(n):
            out[i] = _pt_pt_dist(p_lonlat[i, 0], p_lonlat[i, 1], gverts[0, 0], gverts[0, 1])
        return out
    k = gverts.shape[0]
    x = np.empty(k)
    y = np.empty(k)
    for i in range(n):
        plon = p_lonlat[i, 0]
        plat = p_lonlat[i, 1]
        lon0 = 0.5 * (plon + gc_lon)
        lat0 = 0.5 * (plat + gc_lat)
        c = np.cos(_RAD * lat0)
        for v in range(k):
            x[v] = (gverts[v, 0] - lon0) * c * _M_PER_DEG
            y[v] = (gverts[v, 1] - lat0) * _M_PER_DEG
        px = (plon - lon0) * c * _M_PER_DEG
        py = (plat - lat0) * _M_PER_DEG
        d2 = _pt_to_parts_min_sq(px, py, x, y, gparts)
        if gkind == KIND_POLYGON and (d2 == 0.0 or _even_odd_inside(px, py, x, y, gparts)):
            out[i] = 0.0
        else:
            out[i] = np.sqrt(d2)
    return out


@njit(**_JIT)
def geom_geom_dist_m(averts, aparts, akind, bverts, bparts, bkind):
    ac_lon, ac_lat = _bbox_center(averts)
    bc_lon, bc_lat = _bbox_center(bverts)
    lon0 = 0.5 * (ac_lon + bc_lon)
    lat0 = 0.5 * (ac_lat + bc_lat)
    c = np.cos(_RAD * lat0)

    na = averts.shape[0]
    nb = bverts.shape[0]
    ax = np.empty(na)
    ay = np.empty(na)
    for i in range(na):
        ax[i] = (averts[i, 0] - lon0) * c * _M_PER_DEG
        ay[i] = (averts[i, 1] - lat0) * _M_PER_DEG
    bx = np.empty(nb)
    by = np.empty(nb)
    for i in range(nb):
        bx[i] = (bverts[i, 0] - lon0) * c * _M_PER_DEG
        by[i] = (bverts[i, 1] - lat0) * _M_PER_DEG

    if akind == KIND_POINT and bkind == KIND_POINT:
        return np.sqrt((bx[0] - ax[0]) ** 2 + (by[0] - ay[0]) ** 2)
    if akind == KIND_POINT:
        d2 = _pt_to_parts_min_sq(ax[0], ay[0], bx, by, bparts)
        if bkind == KIND_POLYGON and (d2 == 0.0 or _even_odd_inside(ax[0], ay[0], bx, by, bparts)):
            return 0.0
        return np.sqrt(d2)
    if bkind == KIND_POINT:
        d2 = _pt_to_parts_min_sq(bx[0], by[0], ax, ay, aparts)
        if akind == KIND_POLYGON and (d2 == 0.0 or _even_odd_inside(bx[0], by[0], ax, ay, aparts)):
            return 0.0
        return np.sqrt(d2)

    best = np.inf
    for pa in range(len(aparts) - 1):
        for i in range(aparts[pa], aparts[pa + 1] - 1):
            for pb in range(len(bparts) - 1):
                for j in range(bparts[pb], bparts[pb + 1] - 1):
                    d2 = _seg_seg_sq(
                        ax[i], ay[i], ax[i + 1], ay[i + 1],
                        bx[j], by[j], bx[j + 1], by[j + 1],
                    )
                    if d2 < best:
                        best = d2
                        if best == 0.0:
                            return 0.0
    if bkind == KIND_POLYGON and _even_odd_inside(ax[0], ay[0], bx, by, bparts):
        return 0.0
    if akind == KIND_POLYGON and _even_odd_inside(bx[0], by[0], ax, ay, aparts):
        return 0.0
    return np.sqrt(best)


@njit(**_JIT)
def points_in_rings_mask(p_lonlat, rverts, rparts):
    n = p_lonlat.shape[0]
    out = np.zeros(n, dtype=np.bool_)
    x = rverts[:, 0]
    y = rverts[:, 1]
    for i in range(n):
        px = p_lonlat[i, 0]
        py = p_lonlat[i, 1]
        inside = False
        on_edge = False
        for p in range(len(rparts) - 1):
            for v in range(rparts[p], rparts[p + 1] - 1):
                x1 = x[v]
                y1 = y[v]
                x2 = x[v + 1]
                y2 = y[v + 1]
                if (y1 > py) != (y2 > py):
                    xi = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
                    if px < xi:
                        inside = not inside
                cr = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
                if cr == 0.0:
                    if min(x1, x2) <= px <= max(x1, x2) and min(y1, y2) <= py <= max(y1, y2):
                        on_edge = True
        out[i] = on_edge or inside
    return out


@njit(**_JIT)
def snap_points_to_lines(p_lonlat, seg_a, seg_b, seg_center, seg_line, n_lines, tol_m):
    n = p_lonlat.shape[0]
    m = seg_a.shape[0]
    out = np.full(n, -1, dtype=np.int64)
    tol2 = tol_m * tol_m
    for i in range(n):
        plon = p_lonlat[i, 0]
        plat = p_lonlat[i, 1]
        best_line = -1
        best_d2 = np.inf
        for j in range(m):
            lon0 = 0.5 * (plon + seg_center[j, 0])
            lat0 = 0.5 * (plat + seg_center[j, 1])
            c = np.cos(_RAD * lat0)
            px = (plon - lon0) * c * _M_PER_DEG
            py = (plat - lat0) * _M_PER_DEG
            d2 = _pt_seg_sq(
                px, py,
                (seg_a[j, 0] - lon0) * c * _M_PER_DEG,
                (seg_a[j, 1] - lat0) * _M_PER_DEG,
                (seg_b[j, 0] - lon0) * c * _M_PER_DEG,
                (seg_b[j, 1] - lat0) * _M_PER_DEG,
            )
            # strict <: ties stay with the earlier (smaller) line index
            if d2 < best_d2:
                best_d2 = d2
                best_line = seg_line[j]
        if best_d2 <= tol2:
            out[i] = best_line
    return out
