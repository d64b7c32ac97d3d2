"""Constant background subtraction and original/difference image fusion."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .imaging import GrayImage

__all__ = [
    "DEFAULT_TAU",
    "BackgroundModel",
    "ForegroundMask",
    "FuseMode",
    "subtract",
    "fuse",
]

# Default foreground threshold on the 8-bit scale: rejects sensor noise
# while passing warm-body contrast.
DEFAULT_TAU = 30


def _readonly_bool(mask) -> np.ndarray:
    arr = np.array(mask, dtype=bool, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class BackgroundModel:
    """Reference background plus a validity mask (1 = value known)."""

    reference: GrayImage
    valid: np.ndarray  # (h, w) bool, read-only

    def __post_init__(self):
        object.__setattr__(self, "valid", _readonly_bool(self.valid))
        if self.valid.shape != self.reference.pixels.shape:
            raise ValueError(
                f"valid mask shape {self.valid.shape} != reference shape "
                f"{self.reference.pixels.shape}"
            )

    @classmethod
    def fresh(cls, reference: GrayImage) -> "BackgroundModel":
        """Unshifted model: every pixel of the reference is known."""
        return cls(reference, np.ones(reference.pixels.shape, dtype=bool))

    @property
    def width(self) -> int:
        return self.reference.width

    @property
    def height(self) -> int:
        return self.reference.height

    def __eq__(self, other) -> bool:
        if not isinstance(other, BackgroundModel):
            return NotImplemented
        return self.reference == other.reference and bool(
            np.array_equal(self.valid, other.valid)
        )


@dataclass(frozen=True, eq=False)
class ForegroundMask:
    """Binary per-pixel foreground indicator (True = foreground)."""

    bits: np.ndarray  # (h, w) bool, read-only

    def __post_init__(self):
        object.__setattr__(self, "bits", _readonly_bool(self.bits))
        if self.bits.ndim != 2:
            raise ValueError(f"mask must be 2-D, got shape {self.bits.shape}")

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    def count(self) -> int:
        return int(self.bits.sum())

    def to_image(self) -> GrayImage:
        """Debug rendering: foreground 255, background 0."""
        return GrayImage(self.bits.astype(np.uint8) * 255)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ForegroundMask):
            return NotImplemented
        return bool(np.array_equal(self.bits, other.bits))


class FuseMode(enum.Enum):
    MASK = "mask"
    BLEND = "blend"


def subtract(
    frame: GrayImage, bg: BackgroundModel, tau: int = DEFAULT_TAU
) -> tuple[GrayImage, ForegroundMask]:
    """Absolute difference against the reference, thresholded at tau.

    Pixels where the background is invalid get diff 0 and are never
    foreground, so a shifted model's exposed edge cannot flood the detector.
    """
    if frame.pixels.shape != bg.reference.pixels.shape:
        raise ValueError(
            f"frame {frame.width}x{frame.height} does not match background "
            f"{bg.width}x{bg.height}"
        )
    if not 0 <= tau <= 255:
        raise ValueError(f"tau must be in [0, 255], got {tau}")
    diff = np.abs(frame.pixels.astype(np.int16) - bg.reference.pixels.astype(np.int16))
    diff[~bg.valid] = 0
    mask = bg.valid & (diff >= tau)
    return GrayImage(diff.astype(np.uint8)), ForegroundMask(mask)


def fuse(
    original: GrayImage,
    diff: GrayImage,
    mask: ForegroundMask,
    mode: FuseMode = FuseMode.MASK,
    alpha: float = 0.5,
) -> GrayImage:
    """Combine the original frame with its background-subtracted difference.

    MASK keeps original intensities on the foreground and zeroes the rest;
    BLEND mixes alpha*original + (1-alpha)*diff everywhere.
    """
    if not (original.pixels.shape == diff.pixels.shape == mask.bits.shape):
        raise ValueError("original, diff, and mask dimensions must all match")
    if mode is FuseMode.MASK:
        return GrayImage(np.where(mask.bits, original.pixels, 0))
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    blended = alpha * original.pixels.astype(np.float64) + (1.0 - alpha) * diff.pixels
    return GrayImage(np.clip(np.rint(blended), 0, 255).astype(np.uint8))
