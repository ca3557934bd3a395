from .geometry import Geometry, GeometryError, point, polygon, polyline
from .store import (
    Dataset,
    EntityCollection,
    EntityRecord,
    ExecutionDataError,
    IngestError,
    min_distance_m,
    pack_geometry,
    point_in_polygon,
)
from .fixture import DEFAULT_COUNTS, generate_fixture, write_fixture_dir

__all__ = [
    "DEFAULT_COUNTS",
    "Dataset",
    "EntityCollection",
    "EntityRecord",
    "ExecutionDataError",
    "Geometry",
    "GeometryError",
    "IngestError",
    "generate_fixture",
    "min_distance_m",
    "pack_geometry",
    "point",
    "point_in_polygon",
    "polygon",
    "polyline",
    "write_fixture_dir",
]
