"""Connected-component labeling and the main-body / secondary split.

Arabic characters consist of a main stroke body plus optional detached
marks (dots, hamza).  The largest component is taken as the main body;
everything else is a secondary component.  Those secondaries carry real
discriminative information, so their geometry is summarized separately.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .image import validate_binary

__all__ = [
    "BoundingBox",
    "ComponentSet",
    "SecondaryStats",
    "label_components",
    "secondary_summary",
]


class BoundingBox(NamedTuple):
    """Inclusive pixel-index bounds of a region."""

    top: int
    left: int
    bottom: int
    right: int

    @property
    def height(self) -> int:
        return self.bottom - self.top + 1

    @property
    def width(self) -> int:
        return self.right - self.left + 1


@dataclass
class ComponentSet:
    """Labeled components of one binary image.

    labels: row-major label map, 0 = background, ids 1..count = components,
        assigned in raster-scan order of each component's first pixel.
    boxes / areas: per-component, indexed by id-1.
    main_id: id of the largest component (smallest id on ties), or None
        for a blank image.
    """

    labels: np.ndarray
    count: int
    boxes: list[BoundingBox]
    areas: np.ndarray
    main_id: Optional[int]
    secondary_ids: list[int] = field(default_factory=list)

    def component_mask(self, component_id: int) -> np.ndarray:
        return (self.labels == component_id).astype(np.uint8)

    def secondary_mask(self) -> np.ndarray:
        if self.main_id is None:
            return np.zeros_like(self.labels, dtype=np.uint8)
        return ((self.labels > 0) & (self.labels != self.main_id)).astype(np.uint8)


_OFFSETS = {
    "four": ((-1, 0), (0, -1)),
    "eight": ((-1, -1), (-1, 0), (-1, 1), (0, -1)),
}


def label_components(bin_img, connectivity: str = "eight") -> ComponentSet:
    """Label connected foreground regions under 4- or 8-adjacency.

    Classic two-pass union-find: provisional labels on the first raster
    scan, merge on conflicts, then renumber so that component ids follow
    the raster order of first appearance.  Two pixels share a label iff
    they are connected under the chosen adjacency.
    """
    if connectivity not in _OFFSETS:
        raise ValueError(f"connectivity must be 'four' or 'eight', got {connectivity!r}")
    b = validate_binary(bin_img)
    h, w = b.shape
    provisional = np.zeros((h, w), dtype=np.int32)
    parent: list[int] = [0]

    def find(i: int) -> int:
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:  # path compression
            parent[i], i = root, parent[i]
        return root

    offsets = _OFFSETS[connectivity]
    rows, cols = np.nonzero(b)
    for r, c in zip(rows.tolist(), cols.tolist()):
        neighbor_labels = []
        for dr, dc in offsets:
            nr, nc = r + dr, c + dc
            if 0 <= nr < h and 0 <= nc < w and provisional[nr, nc]:
                neighbor_labels.append(int(provisional[nr, nc]))
        if not neighbor_labels:
            parent.append(len(parent))
            provisional[r, c] = len(parent) - 1
        else:
            target = min(find(l) for l in neighbor_labels)
            provisional[r, c] = target
            for l in neighbor_labels:
                root = find(l)
                if root != target:
                    parent[root] = target

    # Renumber roots to 1..count in raster order of first appearance.
    remap: dict[int, int] = {}
    labels = np.zeros((h, w), dtype=np.int32)
    for r, c in zip(rows.tolist(), cols.tolist()):
        root = find(int(provisional[r, c]))
        if root not in remap:
            remap[root] = len(remap) + 1
        labels[r, c] = remap[root]
    count = len(remap)
    if count == 0:
        return ComponentSet(labels, 0, [], np.zeros(0, dtype=np.int64), None, [])

    labs = labels[rows, cols]
    areas = np.bincount(labs, minlength=count + 1)[1:].astype(np.int64)
    tops = np.full(count, h, dtype=np.int64)
    lefts = np.full(count, w, dtype=np.int64)
    bottoms = np.full(count, -1, dtype=np.int64)
    rights = np.full(count, -1, dtype=np.int64)
    np.minimum.at(tops, labs - 1, rows)
    np.minimum.at(lefts, labs - 1, cols)
    np.maximum.at(bottoms, labs - 1, rows)
    np.maximum.at(rights, labs - 1, cols)
    boxes = [
        BoundingBox(int(tops[i]), int(lefts[i]), int(bottoms[i]), int(rights[i]))
        for i in range(count)
    ]
    main_id = int(np.argmax(areas)) + 1  # argmax takes the smallest id on ties
    secondary_ids = [k for k in range(1, count + 1) if k != main_id]
    return ComponentSet(labels, count, boxes, areas, main_id, secondary_ids)


@dataclass(frozen=True)
class SecondaryStats:
    """Aggregate geometry of all secondary components taken as one union.

    height/width/area are in pixels; dx/dy are the displacement of the
    union centroid from the main-body centroid, normalized by the canvas
    width/height; above/below flag whether the union centroid lies
    strictly above/below the main body's bounding box.
    """

    height: int = 0
    width: int = 0
    area: int = 0
    dx: float = 0.0
    dy: float = 0.0
    above: int = 0
    below: int = 0


def secondary_summary(cs: ComponentSet, canvas_shape=None) -> SecondaryStats:
    """Summarize the union of secondary components relative to the main body.

    Returns all-zero stats when there are no secondaries; raises if the
    component set has no main body at all.
    """
    if cs.main_id is None:
        raise ValueError("no main body: component set is empty")
    if not cs.secondary_ids:
        return SecondaryStats()
    canvas_h, canvas_w = canvas_shape if canvas_shape is not None else cs.labels.shape

    sec_boxes = [cs.boxes[k - 1] for k in cs.secondary_ids]
    top = min(box.top for box in sec_boxes)
    left = min(box.left for box in sec_boxes)
    bottom = max(box.bottom for box in sec_boxes)
    right = max(box.right for box in sec_boxes)
    area = int(sum(int(cs.areas[k - 1]) for k in cs.secondary_ids))

    sec_rows, sec_cols = np.nonzero(cs.secondary_mask())
    main_rows, main_cols = np.nonzero(cs.labels == cs.main_id)
    sec_r, sec_c = float(sec_rows.mean()), float(sec_cols.mean())
    main_r, main_c = float(main_rows.mean()), float(main_cols.mean())
    main_box = cs.boxes[cs.main_id - 1]

    return SecondaryStats(
        height=bottom - top + 1,
        width=right - left + 1,
        area=area,
        dx=(sec_c - main_c) / canvas_w,
        dy=(sec_r - main_r) / canvas_h,
        above=int(sec_r < main_box.top),
        below=int(sec_r > main_box.bottom),
    )
