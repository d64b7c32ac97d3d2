"""Camera-motion compensation for a panning camera.

A high-contrast static landmark is anchored inside a fixed search region of
the initial frame. Each later frame is scanned exhaustively for the landmark
template; the displacement of the best (minimum sum-of-squared-differences)
placement gives the camera's shift, and the initial background is shifted by
that vector before subtraction. Shifts are always applied to the initial
background, never chained, so registration cannot drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .background import DEFAULT_TAU, BackgroundModel
from .imaging import BoundingBox, GrayImage, crop

__all__ = [
    "ReferenceAnchor",
    "DifferenceVector",
    "MatchResult",
    "AnchorLostError",
    "ShiftRangeError",
    "init_anchor",
    "locate_object",
    "difference_vector",
    "shift_background",
    "adapt_background",
    "default_max_error",
    "save_anchor_spec",
    "load_anchor_spec",
]


class AnchorLostError(RuntimeError):
    """Best template match exceeded the error budget; the anchor is lost.

    Carries the best error found so the caller can decide whether to
    re-initialize the anchor.
    """

    def __init__(self, best_error: float, found_pos: tuple[int, int], max_error: float):
        super().__init__(
            f"anchor lost: best match error {best_error} exceeds budget {max_error}"
        )
        self.best_error = best_error
        self.found_pos = found_pos
        self.max_error = max_error


class ShiftRangeError(ValueError):
    """Shift magnitude meets or exceeds the image extent: nothing remains valid."""


@dataclass(frozen=True)
class ReferenceAnchor:
    """Search region, landmark template, and its centered initial position."""

    region: BoundingBox
    template: GrayImage
    object_pos: tuple[int, int]  # template top-left relative to region origin
    frame_size: tuple[int, int]  # (width, height) of the source frame

    def __post_init__(self):
        if (
            self.template.width >= self.region.w
            or self.template.height >= self.region.h
        ):
            raise ValueError(
                f"template {self.template.width}x{self.template.height} must be "
                f"strictly smaller than region {self.region.w}x{self.region.h}"
            )


@dataclass(frozen=True)
class DifferenceVector:
    """Integer displacement with magnitude and quadrant-correct angle."""

    dx: int
    dy: int

    @property
    def magnitude(self) -> float:
        return math.hypot(self.dx, self.dy)

    @property
    def angle_deg(self) -> float:
        """Angle in degrees in (-180, 180]; 0 for the zero vector."""
        if self.dx == 0 and self.dy == 0:
            return 0.0
        return math.degrees(math.atan2(self.dy, self.dx))

    def negated(self) -> "DifferenceVector":
        return DifferenceVector(-self.dx, -self.dy)


@dataclass(frozen=True)
class MatchResult:
    found_pos: tuple[int, int]  # best placement top-left, region-relative
    min_error: int  # sum of squared intensity differences


def init_anchor(
    initial_frame: GrayImage, region: BoundingBox, object_box: BoundingBox
) -> ReferenceAnchor:
    """Cut the landmark template out of the initial frame.

    The object box must sit at the region's center (within one pixel per
    axis, tolerating the floor rounding of odd margins).
    """
    if not region.inside(initial_frame.width, initial_frame.height):
        raise ValueError(f"region {region} not inside frame")
    if not (
        object_box.x > region.x
        and object_box.y > region.y
        and object_box.x2 < region.x2
        and object_box.y2 < region.y2
    ):
        raise ValueError(f"object box {object_box} not strictly inside region {region}")
    centered_x = region.x + (region.w - object_box.w) // 2
    centered_y = region.y + (region.h - object_box.h) // 2
    if abs(object_box.x - centered_x) > 1 or abs(object_box.y - centered_y) > 1:
        raise ValueError(
            f"object box {object_box} is off-center in region {region}: expected "
            f"top-left near ({centered_x}, {centered_y})"
        )
    return ReferenceAnchor(
        region=region,
        template=crop(initial_frame, object_box),
        object_pos=(object_box.x - region.x, object_box.y - region.y),
        frame_size=initial_frame.size,
    )


def locate_object(frame: GrayImage, anchor: ReferenceAnchor) -> MatchResult:
    """Exhaustive stride-1 SSD scan of the region for the template.

    Ties are broken by smallest Euclidean displacement from the anchor's
    initial position, then row-major placement order.
    """
    if frame.size != anchor.frame_size:
        raise ValueError(
            f"frame {frame.size} does not match anchor source frame "
            f"{anchor.frame_size}"
        )
    r = anchor.region
    sub = frame.pixels[r.y : r.y2, r.x : r.x2].astype(np.int64)
    tmpl = anchor.template.pixels.astype(np.int64)
    surface = kernels.ssd_scan(sub, tmpl)

    min_error = int(surface.min())
    ties_y, ties_x = np.nonzero(surface == min_error)
    ox, oy = anchor.object_pos
    d2 = (ties_x - ox) ** 2 + (ties_y - oy) ** 2
    order = np.lexsort((ties_x, ties_y, d2))
    best = order[0]
    return MatchResult((int(ties_x[best]), int(ties_y[best])), min_error)


def difference_vector(
    initial: tuple[int, int], found: tuple[int, int]
) -> DifferenceVector:
    """Displacement from the initial to the found position."""
    return DifferenceVector(found[0] - initial[0], found[1] - initial[1])


def shift_background(bg: BackgroundModel, d: DifferenceVector) -> BackgroundModel:
    """Translate the background content by (dx, dy).

    Output pixel p takes the source value at p - (dx, dy); pixels whose
    source falls outside the image become invalid (value 0, valid 0).
    """
    w, h = bg.width, bg.height
    if abs(d.dx) >= w or abs(d.dy) >= h:
        raise ShiftRangeError(
            f"shift ({d.dx}, {d.dy}) leaves no valid pixel in a {w}x{h} background"
        )
    ref = np.zeros((h, w), dtype=np.uint8)
    valid = np.zeros((h, w), dtype=bool)
    src_x = slice(max(0, -d.dx), min(w, w - d.dx))
    src_y = slice(max(0, -d.dy), min(h, h - d.dy))
    dst_x = slice(max(0, d.dx), min(w, w + d.dx))
    dst_y = slice(max(0, d.dy), min(h, h + d.dy))
    ref[dst_y, dst_x] = bg.reference.pixels[src_y, src_x]
    valid[dst_y, dst_x] = bg.valid[src_y, src_x]
    return BackgroundModel(GrayImage(ref), valid)


def default_max_error(anchor: ReferenceAnchor, tau: int = DEFAULT_TAU) -> int:
    """Error budget rejecting matches whose mean per-pixel error exceeds 2*tau."""
    return 4 * anchor.template.width * anchor.template.height * tau * tau


def adapt_background(
    frame: GrayImage,
    anchor: ReferenceAnchor,
    initial_bg: BackgroundModel,
    max_error: float | None = None,
) -> tuple[BackgroundModel, DifferenceVector]:
    """Locate the landmark, derive the shift, and shift the initial background.

    Depends only on the given frame and the initial state; per-frame results
    are independent of processing order. Raises AnchorLostError when the best
    match error exceeds ``max_error`` (default: ``default_max_error``).
    """
    if frame.size != (initial_bg.width, initial_bg.height):
        raise ValueError(
            f"frame {frame.size} does not match background "
            f"{(initial_bg.width, initial_bg.height)}"
        )
    if max_error is None:
        max_error = default_max_error(anchor)
    match = locate_object(frame, anchor)
    if match.min_error > max_error:
        raise AnchorLostError(match.min_error, match.found_pos, max_error)
    d = difference_vector(anchor.object_pos, match.found_pos)
    return shift_background(initial_bg, d), d


def save_anchor_spec(path, region: BoundingBox, object_box: BoundingBox) -> None:
    """Write the plain-text key=value anchor file (boxes as "x,y,w,h")."""
    text = (
        f"region={region.x},{region.y},{region.w},{region.h}\n"
        f"object={object_box.x},{object_box.y},{object_box.w},{object_box.h}\n"
    )
    Path(path).write_text(text, encoding="ascii")


def load_anchor_spec(path) -> tuple[BoundingBox, BoundingBox]:
    """Read back the (region, object) boxes written by ``save_anchor_spec``."""
    boxes: dict[str, BoundingBox] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="ascii").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in ("region", "object"):
            raise ValueError(f"{path}:{lineno}: unknown anchor key {key!r}")
        try:
            x, y, w, h = (int(v) for v in value.strip().split(","))
        except ValueError:
            raise ValueError(
                f"{path}:{lineno}: expected x,y,w,h integers, got {value!r}"
            ) from None
        boxes[key] = BoundingBox(x, y, w, h)
    if "region" not in boxes or "object" not in boxes:
        raise ValueError(f"{path}: anchor spec needs both region= and object= lines")
    return boxes["region"], boxes["object"]
