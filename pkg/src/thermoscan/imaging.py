"""Core raster types, bit-exact PGM I/O, and bounding-box arithmetic.

Coordinate convention used across the whole package: origin at the top-left,
x indexes columns (rightward), y indexes rows (downward). Pixel (x, y) of a
``GrayImage`` lives at ``img.pixels[y, x]``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "GrayImage",
    "BoundingBox",
    "FrameSequence",
    "PgmError",
    "load_pgm",
    "save_pgm",
    "crop",
    "iou",
    "resample_nearest",
    "resample_bilinear",
]


class PgmError(ValueError):
    """Raised when a byte stream is not a decodable binary PGM."""


def _as_readonly_u8(pixels) -> np.ndarray:
    arr = np.array(pixels, dtype=np.uint8, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit single-channel raster. Immutable after construction."""

    pixels: np.ndarray  # shape (height, width), dtype uint8, read-only

    def __post_init__(self):
        object.__setattr__(self, "pixels", _as_readonly_u8(self.pixels))
        if self.pixels.ndim != 2:
            raise ValueError(f"pixels must be 2-D, got shape {self.pixels.shape}")
        h, w = self.pixels.shape
        if w <= 0 or h <= 0:
            raise ValueError(f"image dimensions must be positive, got {w}x{h}")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def size(self) -> tuple[int, int]:
        return (self.width, self.height)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )

    def __repr__(self) -> str:
        return f"GrayImage({self.width}x{self.height})"


@dataclass(frozen=True, order=True)
class BoundingBox:
    """Axis-aligned pixel rectangle: top-left (x, y), extent (w, h)."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box extent must be positive, got w={self.w} h={self.h}")

    @property
    def x2(self) -> int:
        return self.x + self.w

    @property
    def y2(self) -> int:
        return self.y + self.h

    @property
    def area(self) -> int:
        return self.w * self.h

    def inside(self, width: int, height: int) -> bool:
        """True iff the box lies fully within a width x height image."""
        return self.x >= 0 and self.y >= 0 and self.x2 <= width and self.y2 <= height

    def contains(self, other: "BoundingBox") -> bool:
        return (
            other.x >= self.x
            and other.y >= self.y
            and other.x2 <= self.x2
            and other.y2 <= self.y2
        )

    def translate(self, dx: int, dy: int) -> "BoundingBox":
        return BoundingBox(self.x + dx, self.y + dy, self.w, self.h)


@dataclass(frozen=True)
class FrameSequence:
    """Ordered frames of identical dimensions with per-frame string ids."""

    frames: tuple[GrayImage, ...]
    ids: tuple[str, ...] = field(default=())

    def __post_init__(self):
        frames = tuple(self.frames)
        object.__setattr__(self, "frames", frames)
        if not frames:
            raise ValueError("frame sequence must not be empty")
        w, h = frames[0].size
        for i, f in enumerate(frames):
            if f.size != (w, h):
                raise ValueError(
                    f"frame {i} is {f.width}x{f.height}, expected {w}x{h}"
                )
        ids = tuple(self.ids) or tuple(f"{i:04d}" for i in range(len(frames)))
        if len(ids) != len(frames):
            raise ValueError("ids length must match frame count")
        object.__setattr__(self, "ids", ids)

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def width(self) -> int:
        return self.frames[0].width

    @property
    def height(self) -> int:
        return self.frames[0].height

    @classmethod
    def from_dir(cls, directory) -> "FrameSequence":
        """Load all files matching frame_<digits>.pgm, sorted by numeric index."""
        directory = Path(directory)
        pattern = re.compile(r"^frame_(\d+)\.pgm$")
        entries = []
        for p in directory.iterdir():
            m = pattern.match(p.name)
            if m:
                entries.append((int(m.group(1)), m.group(1), p))
        if not entries:
            raise FileNotFoundError(f"no frame_<index>.pgm files in {directory}")
        entries.sort(key=lambda e: e[0])
        frames = tuple(load_pgm(p.read_bytes()) for _, _, p in entries)
        ids = tuple(fid for _, fid, _ in entries)
        return cls(frames, ids)


def load_pgm(data: bytes) -> GrayImage:
    """Decode a binary (P5) PGM byte stream with maxval <= 255.

    Header tokens may be separated by arbitrary whitespace and '#' comment
    lines. Exactly one whitespace byte separates the maxval from the raster.
    """
    if not data.startswith(b"P5"):
        raise PgmError("bad magic: not a binary PGM (expected 'P5')")
    pos = 2
    tokens = []
    while len(tokens) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise PgmError("truncated header")
        tokens.append(data[start:pos])
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise PgmError(f"non-numeric header token in {tokens!r}") from None
    if width <= 0 or height <= 0:
        raise PgmError(f"zero or negative dimension: {width}x{height}")
    if not 0 < maxval <= 255:
        raise PgmError(f"maxval {maxval} out of supported range [1, 255]")
    pos += 1  # single whitespace byte after maxval
    raster = data[pos:]
    expected = width * height
    if len(raster) < expected:
        raise PgmError(f"truncated raster: expected {expected} bytes, got {len(raster)}")
    if len(raster) > expected:
        raise PgmError(f"trailing data after raster: {len(raster) - expected} bytes")
    pixels = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    return GrayImage(pixels)


def save_pgm(img: GrayImage) -> bytes:
    """Encode to canonical form: b"P5\\n{w} {h}\\n255\\n" + raw raster."""
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.pixels.tobytes()


def crop(img: GrayImage, box: BoundingBox) -> GrayImage:
    """Extract the sub-image covered by ``box``; box must lie inside ``img``."""
    if not box.inside(img.width, img.height):
        raise ValueError(
            f"crop box {box} exceeds image bounds {img.width}x{img.height}"
        )
    return GrayImage(img.pixels[box.y : box.y2, box.x : box.x2])


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection-over-union of two boxes; 0.0 when disjoint."""
    ix = min(a.x2, b.x2) - max(a.x, b.x)
    iy = min(a.y2, b.y2) - max(a.y, b.y)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


def resample_nearest(img: GrayImage, width: int, height: int) -> GrayImage:
    """Nearest-neighbor resample; integer index arithmetic, no rounding modes.

    Destination (x, y) samples source (x*srcW//dstW, y*srcH//dstH), so a
    same-size resample is the identity.
    """
    if width <= 0 or height <= 0:
        raise ValueError(f"target dimensions must be positive, got {width}x{height}")
    xs = np.arange(width, dtype=np.int64) * img.width // width
    ys = np.arange(height, dtype=np.int64) * img.height // height
    return GrayImage(img.pixels[np.ix_(ys, xs)])


def resample_bilinear(img: GrayImage, width: int, height: int) -> GrayImage:
    """Bilinear resample with half-pixel-centered sampling."""
    if width <= 0 or height <= 0:
        raise ValueError(f"target dimensions must be positive, got {width}x{height}")
    xs = (np.arange(width, dtype=np.float64) + 0.5) * img.width / width - 0.5
    ys = (np.arange(height, dtype=np.float64) + 0.5) * img.height / height - 0.5
    x0 = np.clip(np.floor(xs), 0, img.width - 1).astype(np.int64)
    y0 = np.clip(np.floor(ys), 0, img.height - 1).astype(np.int64)
    x1 = np.minimum(x0 + 1, img.width - 1)
    y1 = np.minimum(y0 + 1, img.height - 1)
    fx = np.clip(xs - x0, 0.0, 1.0)
    fy = np.clip(ys - y0, 0.0, 1.0)
    p = img.pixels.astype(np.float64)
    top = p[np.ix_(y0, x0)] * (1 - fx) + p[np.ix_(y0, x1)] * fx
    bottom = p[np.ix_(y1, x0)] * (1 - fx) + p[np.ix_(y1, x1)] * fx
    out = top * (1 - fy)[:, None] + bottom * fy[:, None]
    return GrayImage(np.clip(np.rint(out), 0, 255).astype(np.uint8))
