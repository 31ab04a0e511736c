"""Axis-aligned bounding-box arithmetic and per-frame error functionals.

Boxes live in image pixel coordinates: top-left origin, x to the right,
y down, continuous (sub-pixel) values allowed. A missing prediction is
represented by ``None`` everywhere a box is expected; the functions below
handle it per their contracts (zero overlap, infinite center distance).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "BBox",
    "Point2",
    "iou",
    "center_error",
    "normalized_center_error",
]


@dataclass(frozen=True)
class Point2:
    """A point in image coordinates (pixels)."""

    u: float
    v: float


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box: top-left corner (x, y), width w, height h, in pixels.

    A valid box has w > 0 and h > 0. Use ``validate()`` to enforce this at
    trust boundaries (file parsing, wire messages).
    """

    x: float
    y: float
    w: float
    h: float

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def center(self) -> Point2:
        return Point2(self.x + self.w / 2.0, self.y + self.h / 2.0)

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @property
    def aspect(self) -> float:
        return self.w / self.h

    def validate(self) -> "BBox":
        """Raise ValueError unless the box has positive, finite extent."""
        if not all(math.isfinite(f) for f in (self.x, self.y, self.w, self.h)):
            raise ValueError(f"non-finite box {self}")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"degenerate box {self}: w and h must be > 0")
        return self

    def translated(self, du: float, dv: float) -> "BBox":
        return BBox(self.x + du, self.y + dv, self.w, self.h)

    def scaled(self, sx: float, sy: float) -> "BBox":
        """Scale the whole coordinate frame per axis (position and size)."""
        return BBox(self.x * sx, self.y * sy, self.w * sx, self.h * sy)

    def clipped(self, width: float, height: float) -> "BBox | None":
        """Intersect with the image rectangle [0,width)x[0,height).

        Returns None when the box lies fully outside the image.
        """
        x1 = max(self.x, 0.0)
        y1 = max(self.y, 0.0)
        x2 = min(self.x2, float(width))
        y2 = min(self.y2, float(height))
        if x2 <= x1 or y2 <= y1:
            return None
        return BBox(x1, y1, x2 - x1, y2 - y1)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)


def iou(a: BBox | None, b: BBox | None) -> float:
    """Intersection-over-union of two boxes, in [0, 1].

    Returns 0.0 if either box is missing (None) or the boxes are disjoint.
    Symmetric in its arguments.
    """
    if a is None or b is None:
        return 0.0
    ax2, ay2, bx2, by2 = a.x2, a.y2, b.x2, b.y2
    ix = min(ax2, bx2) - max(a.x, b.x)
    if ix <= 0.0:
        return 0.0
    iy = min(ay2, by2) - max(a.y, b.y)
    if iy <= 0.0:
        return 0.0
    inter = ix * iy
    # Areas from the same corner differences as the intersection, so that
    # rounding cancels and iou(a, a) is exactly 1.0.
    union = (ax2 - a.x) * (ay2 - a.y) + (bx2 - b.x) * (by2 - b.y) - inter
    return inter / union


def center_error(pred: BBox | None, gt: BBox) -> float:
    """Euclidean distance between box centers, in pixels.

    A missing prediction maps to +inf so it fails every distance threshold.
    """
    if pred is None:
        return math.inf
    pc = pred.center
    gc = gt.center
    return math.hypot(pc.u - gc.u, pc.v - gc.v)


def normalized_center_error(pred: BBox | None, gt: BBox) -> float:
    """Center distance with each axis normalized by the ground-truth box size.

    Dividing the per-axis offset by gt.w and gt.h removes the dependence on
    image resolution and target scale. Missing prediction maps to +inf.
    """
    if pred is None:
        return math.inf
    if gt.w <= 0 or gt.h <= 0:
        raise ValueError(f"ground-truth box must have positive size, got {gt}")
    pc = pred.center
    gc = gt.center
    return math.hypot((pc.u - gc.u) / gt.w, (pc.v - gc.v) / gt.h)
