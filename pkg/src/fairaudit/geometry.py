"""Deterministic crop plans computed from bounding boxes.

These functions do pure geometry: they decide which source rectangle an
external image tool should cut and what size to resize it to. Pixels are
never touched here. Rectangles are kept as floats through the geometric
computation (so the planners are exactly scale-equivariant); rounding to
integer pixels happens only when a plan is exported, and always outward
so no subject pixels are lost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .model import BoundingBox

MIAP_MIN_SIDE = 100.0
MIAP_ASPECT_LIMIT = 1.2
MIAP_TARGET = (224, 224)
CC_ENLARGE_FACTOR = 1.5
CC_TARGET = (256, 256)
UNKNOWN = "unknown"


@dataclass
class CropPlan:
    source_rect: Optional[BoundingBox]
    target_size: Optional[tuple]
    keep: bool
    reason: str = ""

    def __post_init__(self):
        if not self.keep and not self.reason:
            raise ValueError("dropped plan must carry a reason")

    def rounded_rect(self) -> Optional[BoundingBox]:
        """Outward integer rounding; degenerate rects widen to at least 1px."""
        if self.source_rect is None:
            return None
        r = self.source_rect
        x0, y0 = math.floor(r.x0), math.floor(r.y0)
        x1, y1 = math.ceil(r.x1), math.ceil(r.y1)
        if x1 == x0:
            x1 += 1
        if y1 == y0:
            y1 += 1
        return BoundingBox(x0, y0, x1, y1)


def miap_crop_plan(box: BoundingBox, gender=None, age=None) -> CropPlan:
    """Plan a square person crop for the box-annotated dataset.

    Boxes under 100px on either side are dropped, as are boxes whose
    gender or age is the "unknown" category. Boxes far from square
    (max/min side ratio >= 1.2) are cut to a square of the shorter side
    anchored at the top-left, which keeps the head region for typical
    standing-person boxes.
    """
    w, h = box.width, box.height
    if w < MIAP_MIN_SIDE or h < MIAP_MIN_SIDE:
        return CropPlan(None, None, keep=False, reason="too-small")
    if gender == UNKNOWN or age == UNKNOWN:
        return CropPlan(None, None, keep=False, reason="unknown-attrs")
    if max(w, h) / min(w, h) >= MIAP_ASPECT_LIMIT:
        side = min(w, h)
        rect = BoundingBox(box.x0, box.y0, box.x0 + side, box.y0 + side)
    else:
        rect = BoundingBox(box.x0, box.y0, box.x1, box.y1)
    return CropPlan(rect, MIAP_TARGET, keep=True)


def cc_face_crop_plan(box: BoundingBox, frame_w: float, frame_h: float) -> CropPlan:
    """Plan a face crop: the box enlarged 1.5x about its center, clipped to the frame."""
    cx = (box.x0 + box.x1) / 2
    cy = (box.y0 + box.y1) / 2
    half_w = CC_ENLARGE_FACTOR * box.width / 2
    half_h = CC_ENLARGE_FACTOR * box.height / 2
    rect = BoundingBox(
        max(0.0, cx - half_w),
        max(0.0, cy - half_h),
        min(float(frame_w), cx + half_w),
        min(float(frame_h), cy + half_h),
    )
    return CropPlan(rect, CC_TARGET, keep=True)


def middle_frame_index(frame_count: int) -> int:
    """0-based index of the middle frame of a clip."""
    if frame_count < 1:
        raise ValueError(f"frame_count must be >= 1, got {frame_count}")
    return frame_count // 2
