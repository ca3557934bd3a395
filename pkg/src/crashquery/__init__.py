"""crashquery: schema-grounded natural-language spatial queries over safety data."""

__version__ = "0.1.0"

from .frames import (
    SemanticFrame,
    canonicalize,
    frame_from_obj,
    frame_to_json,
    frame_to_obj,
    frames_equal,
    parse_frame,
)
from .registry import SchemaRegistry, default_registry, load_registry, load_registry_file

__all__ = [
    "SchemaRegistry",
    "SemanticFrame",
    "__version__",
    "canonicalize",
    "default_registry",
    "frame_from_obj",
    "frame_to_json",
    "frame_to_obj",
    "frames_equal",
    "load_registry",
    "load_registry_file",
    "parse_frame",
]
