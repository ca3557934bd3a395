"""Pure-numpy geometry kernels.

Semantics contract shared with the numba backend (`_kernels_nb`):

* Distances are meters on a local equirectangular projection centered at the
  midpoint of the two operands' bounding-box centers; that midpoint is
  per-pair, so vectorized paths carry a per-pair projection latitude.
* Packed geometry = (verts (k,2) lon/lat float64, parts (p+1,) int64 offsets,
  kind code 0=point 1=polyline 2=polygon). Polygon parts are closed rings,
  outer ring first.
* Point-in-polygon is even-odd ray casting over all rings (holes excluded by
  parity), with points on any ring edge counting as inside.
"""

from __future__ import annotations

import numpy as np

BACKEND = "numpy"

EARTH_RADIUS_M = 6371008.8
_RAD = np.pi / 180.0
_M_PER_DEG = EARTH_RADIUS_M * _RAD  # meters per degree of latitude

KIND_POINT = 0
KIND_POLYLINE = 1
KIND_POLYGON = 2

# block size bounding the (targets x references) broadcast temporaries
_CHUNK = 2048


def pt_pt_dist_m(lon1, lat1, lon2, lat2):
    lat0 = 0.5 * (lat1 + lat2)
    dx = (lon2 - lon1) * np.cos(_RAD * lat0) * _M_PER_DEG
    dy = (lat2 - lat1) * _M_PER_DEG
    return float(np.hypot(dx, dy))


def points_to_points_mask(t_lonlat, r_lonlat, dist_m):
    """Boolean mask over targets: any reference point within dist_m."""
    n = t_lonlat.shape[0]
    out = np.zeros(n, dtype=np.bool_)
    if n == 0 or r_lonlat.shape[0] == 0:
        return out
    d2 = float(dist_m) * float(dist_m)
    for s in range(0, n, _CHUNK):
        t = t_lonlat[s : s + _CHUNK]
        lat0 = 0.5 * (t[:, 1:2] + r_lonlat[None, :, 1])
        dx = (r_lonlat[None, :, 0] - t[:, 0:1]) * np.cos(_RAD * lat0) * _M_PER_DEG
        dy = (r_lonlat[None, :, 1] - t[:, 1:2]) * _M_PER_DEG
        out[s : s + _CHUNK] = ((dx * dx + dy * dy) <= d2).any(axis=1)
    return out


def points_to_points_mindist(t_lonlat, r_lonlat):
    """Min distance (m) from each target point to any reference point."""
    n = t_lonlat.shape[0]
    out = np.full(n, np.inf)
    if n == 0 or r_lonlat.shape[0] == 0:
        return out
    for s in range(0, n, _CHUNK):
        t = t_lonlat[s : s + _CHUNK]
        lat0 = 0.5 * (t[:, 1:2] + r_lonlat[None, :, 1])
        dx = (r_lonlat[None, :, 0] - t[:, 0:1]) * np.cos(_RAD * lat0) * _M_PER_DEG
        dy = (r_lonlat[None, :, 1] - t[:, 1:2]) * _M_PER_DEG
        out[s : s + _CHUNK] = np.sqrt(dx * dx + dy * dy).min(axis=1)
    return out


def _project(verts, lon0, lat0):
    c = np.cos(_RAD * lat0)
    x = (verts[:, 0] - lon0) * c * _M_PER_DEG
    y = (verts[:, 1] - lat0) * _M_PER_DEG
    return x, y


def _bbox_center(verts):
    mn = verts.min(axis=0)
    mx = verts.max(axis=0)
    return 0.5 * (mn[0] + mx[0]), 0.5 * (mn[1] + mx[1])


def _segments(verts, parts):
    """Start/end vertex indices of all part-internal segments."""
    a_idx = []
    b_idx = []
    for p in range(len(parts) - 1):
        lo, hi = parts[p], parts[p + 1]
        a_idx.extend(range(lo, hi - 1))
        b_idx.extend(range(lo + 1, hi))
    return np.asarray(a_idx, dtype=np.int64), np.asarray(b_idx, dtype=np.int64)


def _pt_segs_min_sq(px, py, ax, ay, bx, by):
    dx = bx - ax
    dy = by - ay
    l2 = dx * dx + dy * dy
    t = np.where(l2 > 0.0, ((px - ax) * dx + (py - ay) * dy) / np.where(l2 > 0.0, l2, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    cx = ax + t * dx
    cy = ay + t * dy
    return ((px - cx) ** 2 + (py - cy) ** 2).min()


def _even_odd_inside(px, py, x, y, parts):
    inside = False
    for p in range(len(parts) - 1):
        lo, hi = parts[p], parts[p + 1]
        for i in range(lo, hi - 1):
            x1, y1, x2, y2 = x[i], y[i], x[i + 1], y[i + 1]
            if (y1 > py) != (y2 > py):
                xi = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
                if px < xi:
                    inside = not inside
    return inside


def _on_any_edge(px, py, x, y, parts):
    for p in range(len(parts) - 1):
        lo, hi = parts[p], parts[p + 1]
        ax, ay = x[lo:hi - 1], y[lo:hi - 1]
        bx, by = x[lo + 1 : hi], y[lo + 1 : hi]
        if _pt_segs_min_sq(px, py, ax, ay, bx, by) == 0.0:
            return True
    return False


def points_to_geom_dist(p_lonlat, gverts, gparts, gkind):
    """Distance (m) from each point to one packed geometry, per-pair projection.

    Polygon distance is 0 for contained points, boundary distance otherwise.
    """
    n = p_lonlat.shape[0]
    out = np.empty(n)
    if n == 0:
        return out
    gc_lon, gc_lat = _bbox_center(gverts)
    if gkind == KIND_POINT:
        return points_to_points_mindist(p_lonlat, gverts)
    a_idx, b_idx = _segments(gverts, gparts)
    for i in range(n):
        plon, plat = p_lonlat[i, 0], p_lonlat[i, 1]
        lon0 = 0.5 * (plon + gc_lon)
        lat0 = 0.5 * (plat + gc_lat)
        x, y = _project(gverts, lon0, lat0)
        c = np.cos(_RAD * lat0)
        px = (plon - lon0) * c * _M_PER_DEG
        py = (plat - lat0) * _M_PER_DEG
        d2 = _pt_segs_min_sq(px, py, x[a_idx], y[a_idx], x[b_idx], y[b_idx])
        if gkind == KIND_POLYGON and (d2 == 0.0 or _even_odd_inside(px, py, x, y, gparts)):
            out[i] = 0.0
        else:
            out[i] = np.sqrt(d2)
    return out


def _seg_seg_min_sq(ax, ay, bx, by, cx, cy, dx, dy):
    """Min squared distance between segments AB and CD; 0 when they intersect."""
    d1 = _cross(cx, cy, dx, dy, ax, ay)
    d2 = _cross(cx, cy, dx, dy, bx, by)
    d3 = _cross(ax, ay, bx, by, cx, cy)
    d4 = _cross(ax, ay, bx, by, dx, dy)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and ((d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)):
        return 0.0
    best = _pt_seg_sq_scalar(ax, ay, cx, cy, dx, dy)
    best = min(best, _pt_seg_sq_scalar(bx, by, cx, cy, dx, dy))
    best = min(best, _pt_seg_sq_scalar(cx, cy, ax, ay, bx, by))
    best = min(best, _pt_seg_sq_scalar(dx, dy, ax, ay, bx, by))
    return best


def _cross(ax, ay, bx, by, px, py):
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax)


def _pt_seg_sq_scalar(px, py, ax, ay, bx, by):
    dx = bx - ax
    dy = by - ay
    l2 = dx * dx + dy * dy
    if l2 > 0.0:
        t = ((px - ax) * dx + (py - ay) * dy) / l2
        t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
    else:
        t = 0.0
    cx = ax + t * dx
    cy = ay + t * dy
    return (px - cx) ** 2 + (py - cy) ** 2


def geom_geom_dist_m(averts, aparts, akind, bverts, bparts, bkind):
    """Min separation (m) between two packed geometries; 0 when intersecting."""
    ac_lon, ac_lat = _bbox_center(averts)
    bc_lon, bc_lat = _bbox_center(bverts)
    lon0 = 0.5 * (ac_lon + bc_lon)
    lat0 = 0.5 * (ac_lat + bc_lat)
    ax, ay = _project(averts, lon0, lat0)
    bx, by = _project(bverts, lon0, lat0)

    if akind == KIND_POINT and bkind == KIND_POINT:
        return float(np.hypot(bx[0] - ax[0], by[0] - ay[0]))
    if akind == KIND_POINT:
        return _point_to_projected(ax[0], ay[0], bx, by, bparts, bkind)
    if bkind == KIND_POINT:
        return _point_to_projected(bx[0], by[0], ax, ay, aparts, akind)

    sa1, sb1 = _segments(averts, aparts)
    sa2, sb2 = _segments(bverts, bparts)
    best = np.inf
    for i in range(len(sa1)):
        for j in range(len(sa2)):
            d2 = _seg_seg_min_sq(
                ax[sa1[i]], ay[sa1[i]], ax[sb1[i]], ay[sb1[i]],
                bx[sa2[j]], by[sa2[j]], bx[sb2[j]], by[sb2[j]],
            )
            if d2 < best:
                best = d2
                if best == 0.0:
                    return 0.0
    # boundaries are disjoint: containment means zero separation
    if bkind == KIND_POLYGON and _even_odd_inside(ax[0], ay[0], bx, by, bparts):
        return 0.0
    if akind == KIND_POLYGON and _even_odd_inside(bx[0], by[0], ax, ay, aparts):
        return 0.0
    return float(np.sqrt(best))


def _point_to_projected(px, py, x, y, parts, kind):
    a_idx, b_idx = _segments(np.column_stack([x, y]), parts)
    d2 = _pt_segs_min_sq(px, py, x[a_idx], y[a_idx], x[b_idx], y[b_idx])
    if kind == KIND_POLYGON and (d2 == 0.0 or _even_odd_inside(px, py, x, y, parts)):
        return 0.0
    return float(np.sqrt(d2))


def points_in_rings_mask(p_lonlat, rverts, rparts):
    """Even-odd containment of points in a polygon's ring soup, boundary inclusive.

    Operates directly in lon/lat: parity and on-edge tests are projection
    invariant for the local scales this store supports.
    """
    n = p_lonlat.shape[0]
    out = np.zeros(n, dtype=np.bool_)
    if n == 0:
        return out
    x = rverts[:, 0]
    y = rverts[:, 1]
    px = p_lonlat[:, 0]
    py = p_lonlat[:, 1]
    crossings = np.zeros(n, dtype=np.int64)
    on_edge = np.zeros(n, dtype=np.bool_)
    for p in range(len(rparts) - 1):
        lo, hi = rparts[p], rparts[p + 1]
        for i in range(lo, hi - 1):
            x1, y1, x2, y2 = x[i], y[i], x[i + 1], y[i + 1]
            straddles = (y1 > py) != (y2 > py)
            if straddles.any():
                xi = x1 + (py - y1) * (x2 - x1) / (y2 - y1 if y2 != y1 else 1.0)
                crossings += straddles & (px < xi)
            # exact on-segment test
            cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
            within = (
                (cross == 0.0)
                & (px >= min(x1, x2)) & (px <= max(x1, x2))
                & (py >= min(y1, y2)) & (py <= max(y1, y2))
            )
            on_edge |= within
    out = on_edge | ((crossings % 2) == 1)
    return out


def snap_points_to_lines(p_lonlat, seg_a, seg_b, seg_center, seg_line, n_lines, tol_m):
    """Index of the nearest line within tol_m per point, -1 when none.

    Segments must be grouped contiguously by line in ascending line order so
    distance ties resolve to the smaller line index. `seg_center` carries the
    owning line's bbox center per segment (per-pair projection midpoint).
    """
    n = p_lonlat.shape[0]
    out = np.full(n, -1, dtype=np.int64)
    m = seg_a.shape[0]
    if n == 0 or m == 0 or n_lines == 0:
        return out
    # reduceat boundaries: first segment index of each line
    firsts = np.searchsorted(seg_line, np.arange(n_lines))
    tol2 = float(tol_m) * float(tol_m)
    for s in range(0, n, _CHUNK):
        p = p_lonlat[s : s + _CHUNK]
        lon0 = 0.5 * (p[:, 0:1] + seg_center[None, :, 0])
        lat0 = 0.5 * (p[:, 1:2] + seg_center[None, :, 1])
        c = np.cos(_RAD * lat0)
        pax = (seg_a[None, :, 0] - lon0) * c * _M_PER_DEG
        pay = (seg_a[None, :, 1] - lat0) * _M_PER_DEG
        pbx = (seg_b[None, :, 0] - lon0) * c * _M_PER_DEG
        pby = (seg_b[None, :, 1] - lat0) * _M_PER_DEG
        ppx = (p[:, 0:1] - lon0) * c * _M_PER_DEG
        ppy = (p[:, 1:2] - lat0) * _M_PER_DEG
        dx = pbx - pax
        dy = pby - pay
        l2 = dx * dx + dy * dy
        t = np.where(l2 > 0.0, ((ppx - pax) * dx + (ppy - pay) * dy) / np.where(l2 > 0.0, l2, 1.0), 0.0)
        t = np.clip(t, 0.0, 1.0)
        cx = pax + t * dx
        cy = pay + t * dy
        d2 = (ppx - cx) ** 2 + (ppy - cy) ** 2
        per_line = np.minimum.reduceat(d2, firsts, axis=1)
        best = np.argmin(per_line, axis=1)  # first occurrence wins ties
        best_d2 = per_line[np.arange(per_line.shape[0]), best]
        out[s : s + _CHUNK] = np.where(best_d2 <= tol2, best, -1)
    return out
