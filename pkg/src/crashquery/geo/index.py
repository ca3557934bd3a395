"""Static bulk-loaded bounding-box tree (STR packing).

Built once per ingestion over immutable record collections; answers
"which record bboxes intersect this query bbox" without false negatives.
"""

from __future__ import annotations

import math

import numpy as np

_NODE_CAPACITY = 16


class BBoxTree:
    """Sort-Tile-Recursive packed R-tree over item bounding boxes."""

    def __init__(self, boxes):
        """boxes: sequence of (min_lon, min_lat, max_lon, max_lat), one per item."""
        self._n = len(boxes)
        if self._n == 0:
            self._levels = []
            return
        arr = np.asarray(boxes, dtype=np.float64).reshape(self._n, 4)
        ids = np.arange(self._n, dtype=np.int64)
        cx = 0.5 * (arr[:, 0] + arr[:, 2])
        cy = 0.5 * (arr[:, 1] + arr[:, 3])
        order = _str_order(cx, cy)
        # leaf level stores item ids; upper levels store child slot ranges
        self._item_ids = ids[order]
        level_boxes = arr[order]
        self._levels = [level_boxes]
        while level_boxes.shape[0] > _NODE_CAPACITY:
            level_boxes = _group_boxes(level_boxes)
            self._levels.append(level_boxes)
        self._levels.reverse()  # root first

    def __len__(self) -> int:
        return self._n

    def query(self, bbox) -> np.ndarray:
        """Item indices whose boxes intersect bbox, ascending."""
        if self._n == 0:
            return np.empty(0, dtype=np.int64)
        qminx, qminy, qmaxx, qmaxy = bbox
        slots = None  # None = all slots at current level
        for li, boxes in enumerate(self._levels):
            if slots is None:
                cand = boxes
                idx = np.arange(boxes.shape[0])
            else:
                idx = slots
                cand = boxes[idx]
            hit = (
                (cand[:, 0] <= qmaxx)
                & (cand[:, 2] >= qminx)
                & (cand[:, 1] <= qmaxy)
                & (cand[:, 3] >= qminy)
            )
            hit_idx = idx[hit]
            if li == len(self._levels) - 1:
                return np.sort(self._item_ids[hit_idx])
            # expand to children slot ranges at the next level
            child_count = self._levels[li + 1].shape[0]
            starts = hit_idx * _NODE_CAPACITY
            slots_list = [
                np.arange(s, min(s + _NODE_CAPACITY, child_count), dtype=np.int64)
                for s in starts
            ]
            if not slots_list:
                return np.empty(0, dtype=np.int64)
            slots = np.concatenate(slots_list)
        return np.sort(self._item_ids)  # single-level tree fully scanned above


def _group_boxes(boxes: np.ndarray) -> np.ndarray:
    """Merge consecutive runs of _NODE_CAPACITY boxes into parent boxes."""
    n = boxes.shape[0]
    parents = []
    for s in range(0, n, _NODE_CAPACITY):
        chunk = boxes[s : s + _NODE_CAPACITY]
        parents.append(
            [chunk[:, 0].min(), chunk[:, 1].min(), chunk[:, 2].max(), chunk[:, 3].max()]
        )
    return np.asarray(parents, dtype=np.float64)


def _str_order(cx: np.ndarray, cy: np.ndarray) -> np.ndarray:
    """Sort-Tile-Recursive ordering: vertical slices by x, then sort by y."""
    n = len(cx)
    leaf_count = math.ceil(n / _NODE_CAPACITY)
    slice_count = max(1, math.ceil(math.sqrt(leaf_count)))
    per_slice = math.ceil(n / slice_count) if slice_count else n
    by_x = np.lexsort((cy, cx))
    pieces = []
    for s in range(0, n, per_slice):
        sl = by_x[s : s + per_slice]
        pieces.append(sl[np.argsort(cy[sl], kind="stable")])
    return np.concatenate(pieces)
