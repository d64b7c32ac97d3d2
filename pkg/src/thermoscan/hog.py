"""Histogram of Oriented Gradients feature extraction.

Dalal-Triggs-style descriptor: unsigned gradient orientations in [0, 180),
magnitude-weighted bilinear vote splitting between bin centers, square
cells, overlapping blocks, L2-hys block normalization. Two deliberate
simplifications, documented here because they change numbers against other
HOG implementations: no Gaussian block weighting, and each pixel votes only
into its own cell (no spatial interpolation across cells). Orientation
interpolation is kept.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .imaging import GrayImage

__all__ = ["HogParams", "HogDescriptor", "compute_gradients", "hog_features"]

L2_HYS_CLIP = 0.2


@dataclass(frozen=True)
class HogParams:
    """Window geometry and histogram shape for the descriptor."""

    window_w: int = 64
    window_h: int = 128
    cell_size: int = 8  # pixels per square cell side
    block_size: int = 2  # cells per block side
    block_stride: int = 1  # cells
    num_bins: int = 9  # orientation bins over [0, 180)
    epsilon: float = 1e-5  # normalization guard

    def __post_init__(self):
        if self.cell_size <= 0 or self.window_w <= 0 or self.window_h <= 0:
            raise ValueError("window and cell dimensions must be positive")
        if self.window_w % self.cell_size or self.window_h % self.cell_size:
            raise ValueError(
                f"window {self.window_w}x{self.window_h} must be a multiple of "
                f"cell size {self.cell_size}"
            )
        if self.block_size * self.cell_size > min(self.window_w, self.window_h):
            raise ValueError("block does not fit inside the window")
        if self.block_stride < 1:
            raise ValueError("block stride must be >= 1")
        if self.num_bins < 1:
            raise ValueError("need at least one orientation bin")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")

    @property
    def cells_x(self) -> int:
        return self.window_w // self.cell_size

    @property
    def cells_y(self) -> int:
        return self.window_h // self.cell_size

    @property
    def blocks_x(self) -> int:
        return (self.cells_x - self.block_size) // self.block_stride + 1

    @property
    def blocks_y(self) -> int:
        return (self.cells_y - self.block_size) // self.block_stride + 1

    @property
    def descriptor_length(self) -> int:
        return self.blocks_x * self.blocks_y * self.block_size**2 * self.num_bins


@dataclass(frozen=True, eq=False)
class HogDescriptor:
    """Flat feature vector: blocks row-major, cells row-major, bins ascending."""

    values: np.ndarray  # float64, read-only

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, HogDescriptor):
            return NotImplemented
        return bool(np.array_equal(self.values, other.values))


def compute_gradients(img: GrayImage) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel gradient magnitude and unsigned orientation in [0, 180).

    Derivative estimates: centered differences (I[x+1] - I[x-1]) / 2 in the
    interior, one-sided differences at the borders, so a unit-slope ramp
    yields gradient 1 everywhere.
    """
    if img.width < 3 or img.height < 3:
        raise ValueError(f"image must be at least 3x3, got {img.width}x{img.height}")
    p = img.pixels.astype(np.float64)
    gx = np.empty_like(p)
    gy = np.empty_like(p)
    gx[:, 1:-1] = (p[:, 2:] - p[:, :-2]) * 0.5
    gx[:, 0] = p[:, 1] - p[:, 0]
    gx[:, -1] = p[:, -1] - p[:, -2]
    gy[1:-1, :] = (p[2:, :] - p[:-2, :]) * 0.5
    gy[0, :] = p[1, :] - p[0, :]
    gy[-1, :] = p[-1, :] - p[-2, :]
    magnitude = np.hypot(gx, gy)
    orientation = np.degrees(np.arctan2(gy, gx)) % 180.0
    orientation[orientation >= 180.0] = 0.0  # fold float edge case back to 0
    return magnitude, orientation


def hog_features(window: GrayImage, params: HogParams = HogParams()) -> HogDescriptor:
    """Extract the block-normalized descriptor from a window-sized image."""
    if window.size != (params.window_w, params.window_h):
        raise ValueError(
            f"window is {window.width}x{window.height}, params expect "
            f"{params.window_w}x{params.window_h}"
        )
    magnitude, orientation = compute_gradients(window)
    cells = kernels.cell_hist(magnitude, orientation, params.cell_size, params.num_bins)

    bs, stride, nb = params.block_size, params.block_stride, params.num_bins
    eps = params.epsilon
    out = np.empty(params.descriptor_length, dtype=np.float64)
    block_len = bs * bs * nb
    pos = 0
    for by in range(params.blocks_y):
        for bx in range(params.blocks_x):
            cy, cx = by * stride, bx * stride
            v = cells[cy : cy + bs, cx : cx + bs, :].reshape(block_len)
            v = v / np.sqrt(np.dot(v, v) + eps * eps)
            np.minimum(v, L2_HYS_CLIP, out=v)
            v /= np.sqrt(np.dot(v, v) + eps * eps)
            out[pos : pos + block_len] = v
            pos += block_len
    return HogDescriptor(out)
