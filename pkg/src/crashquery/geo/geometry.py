"""Geometry values shared by the store, executor, and renderers.

All coordinates are WGS84 lon/lat degrees. Polygons follow the GeoJSON
convention: first ring is the outer boundary, subsequent rings are holes,
every ring is closed (first vertex == last vertex).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

POINT = "point"
POLYLINE = "polyline"
POLYGON = "polygon"

GEOMETRY_KINDS = (POINT, POLYLINE, POLYGON)

_GEOJSON_TYPE = {POINT: "Point", POLYLINE: "LineString", POLYGON: "Polygon"}
_KIND_FOR_GEOJSON = {v: k for k, v in _GEOJSON_TYPE.items()}


class GeometryError(ValueError):
    """Invalid coordinates or geometry structure."""


@dataclass(frozen=True)
class Geometry:
    kind: str
    # point: (lon, lat); polyline: tuple of (lon, lat); polygon: tuple of rings
    coords: tuple

    def __post_init__(self):
        if self.kind not in GEOMETRY_KINDS:
            raise GeometryError(f"unknown geometry kind {self.kind!r}")
        if self.kind == POINT:
            _check_position(self.coords)
        elif self.kind == POLYLINE:
            if len(self.coords) < 2:
                raise GeometryError("polyline needs at least 2 vertices")
            for p in self.coords:
                _check_position(p)
        else:
            if not self.coords:
                raise GeometryError("polygon needs at least one ring")
            for ring in self.coords:
                if len(ring) < 4:
                    raise GeometryError("polygon ring needs at least 4 vertices")
                if ring[0] != ring[-1]:
                    raise GeometryError("polygon ring must be closed (first == last)")
                for p in ring:
                    _check_position(p)

    @property
    def rings(self) -> tuple:
        assert self.kind == POLYGON
        return self.coords

    def bbox(self) -> tuple[float, float, float, float]:
        """(min_lon, min_lat, max_lon, max_lat)."""
        pts = self.positions()
        lons = [p[0] for p in pts]
        lats = [p[1] for p in pts]
        return (min(lons), min(lats), max(lons), max(lats))

    def positions(self) -> list[tuple[float, float]]:
        if self.kind == POINT:
            return [self.coords]
        if self.kind == POLYLINE:
            return list(self.coords)
        return [p for ring in self.coords for p in ring]

    def vertex_array(self) -> np.ndarray:
        """All positions as a float64 (n, 2) array of lon/lat."""
        return np.asarray(self.positions(), dtype=np.float64)

    def to_geojson(self) -> dict:
        if self.kind == POINT:
            coordinates = list(self.coords)
        elif self.kind == POLYLINE:
            coordinates = [list(p) for p in self.coords]
        else:
            coordinates = [[list(p) for p in ring] for ring in self.coords]
        return {"type": _GEOJSON_TYPE[self.kind], "coordinates": coordinates}


def point(lon: float, lat: float) -> Geometry:
    return Geometry(POINT, (float(lon), float(lat)))


def polyline(vertices) -> Geometry:
    return Geometry(POLYLINE, tuple((float(x), float(y)) for x, y in vertices))


def polygon(outer, holes=()) -> Geometry:
    rings = [tuple((float(x), float(y)) for x, y in outer)]
    for h in holes:
        rings.append(tuple((float(x), float(y)) for x, y in h))
    return Geometry(POLYGON, tuple(rings))


def from_geojson(obj: dict) -> Geometry:
    gtype = obj.get("type")
    if gtype not in _KIND_FOR_GEOJSON:
        raise GeometryError(f"unsupported GeoJSON geometry type {gtype!r}")
    kind = _KIND_FOR_GEOJSON[gtype]
    coordinates = obj.get("coordinates")
    if coordinates is None:
        raise GeometryError("GeoJSON geometry missing coordinates")
    if kind == POINT:
        return point(*coordinates[:2])
    if kind == POLYLINE:
        return polyline(coordinates)
    return polygon(coordinates[0], coordinates[1:])


def _check_position(p) -> None:
    if len(p) != 2:
        raise GeometryError(f"position must be (lon, lat), got {p!r}")
    lon, lat = p
    if not (-180.0 <= lon <= 180.0):
        raise GeometryError(f"longitude {lon} out of [-180, 180]")
    if not (-90.0 <= lat <= 90.0):
        raise GeometryError(f"latitude {lat} out of [-90, 90]")


def merge_bboxes(boxes) -> tuple[float, float, float, float]:
    boxes = list(boxes)
    return (
        min(b[0] for b in boxes),
        min(b[1] for b in boxes),
        max(b[2] for b in boxes),
        max(b[3] for b in boxes),
    )
