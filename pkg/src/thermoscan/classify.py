"""Linear SVM training, scoring, and model persistence.

Training is primal sub-gradient descent on the regularized hinge objective
(lambda/2 * ||w||^2 + mean hinge), one sample per update, step size
1/(lambda * t) at global update t, sample order reshuffled each epoch by a
generator seeded from ``seed``. The bias is trained unregularized. The whole
procedure is deterministic: (samples, lambda, epochs, seed) fix the model.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .hog import HogDescriptor, HogParams, hog_features
from .imaging import BoundingBox, GrayImage, crop, iou, resample_nearest

__all__ = [
    "DEFAULT_LAMBDA",
    "DEFAULT_EPOCHS",
    "DEFAULT_SEED",
    "LinearModel",
    "LabeledSample",
    "ModelFormatError",
    "train",
    "score",
    "hinge_objective",
    "encode_model",
    "decode_model",
    "build_training_samples",
]

DEFAULT_LAMBDA = 1e-4
DEFAULT_EPOCHS = 100
DEFAULT_SEED = 42

# Training-set convention for self-contained synthetic corpora: positives are
# window-shaped crops around truth boxes, negatives random windows overlapping
# no truth box above NEGATIVE_MAX_IOU.
NEGATIVES_PER_POSITIVE = 5
NEGATIVE_MAX_IOU = 0.2
POSITIVE_CONTEXT = 1.15  # padding factor around a truth box

_MAGIC = b"TSVM"
_VERSION = 1
_HEADER = struct.Struct("<4sB6Idd Iq d I")  # magic, ver, hog 6xu32+f64, meta, bias, n


@dataclass(frozen=True)
class LabeledSample:
    descriptor: HogDescriptor
    label: int  # +1 or -1

    def __post_init__(self):
        if self.label not in (+1, -1):
            raise ValueError(f"label must be +1 or -1, got {self.label}")


@dataclass(frozen=True, eq=False)
class LinearModel:
    """Trained weights and bias, with the HOG parameters baked in."""

    weights: np.ndarray  # float64, length == descriptor length of hog_params
    bias: float
    hog_params: HogParams
    lam: float
    epochs: int
    seed: int

    def __post_init__(self):
        arr = np.array(self.weights, dtype=np.float64, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "weights", arr)
        if arr.ndim != 1 or arr.shape[0] != self.hog_params.descriptor_length:
            raise ValueError(
                f"weights length {arr.shape} does not match descriptor length "
                f"{self.hog_params.descriptor_length}"
            )

    def __eq__(self, other) -> bool:
        if not isinstance(other, LinearModel):
            return NotImplemented
        return (
            np.array_equal(self.weights, other.weights)
            and self.bias == other.bias
            and self.hog_params == other.hog_params
            and self.lam == other.lam
            and self.epochs == other.epochs
            and self.seed == other.seed
        )


class ModelFormatError(ValueError):
    """Raised when a model byte stream cannot be decoded."""


def train(
    samples: list[LabeledSample],
    hog_params: HogParams,
    lam: float = DEFAULT_LAMBDA,
    epochs: int = DEFAULT_EPOCHS,
    seed: int = DEFAULT_SEED,
) -> LinearModel:
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if epochs < 1:
        raise ValueError(f"epochs must be positive, got {epochs}")
    labels = {s.label for s in samples}
    if labels != {+1, -1}:
        raise ValueError("training needs at least one sample of each label")
    dim = hog_params.descriptor_length
    for i, s in enumerate(samples):
        if len(s.descriptor) != dim:
            raise ValueError(
                f"sample {i} descriptor length {len(s.descriptor)} != {dim}"
            )

    x = np.stack([s.descriptor.values for s in samples])
    y = np.array([s.label for s in samples], dtype=np.float64)
    rng = np.random.default_rng(seed)
    w = np.zeros(dim, dtype=np.float64)
    b = 0.0
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(len(samples)):
            t += 1
            eta = 1.0 / (lam * t)
            if y[i] * (x[i] @ w + b) < 1.0:
                w *= 1.0 - eta * lam
                w += (eta * y[i]) * x[i]
                b += eta * y[i]
            else:
                w *= 1.0 - eta * lam
    return LinearModel(w, b, hog_params, lam, epochs, seed)


def score(model: LinearModel, descriptor: HogDescriptor) -> float:
    """Decision value w . d + b; classification is its sign."""
    if len(descriptor) != model.weights.shape[0]:
        raise ValueError(
            f"descriptor length {len(descriptor)} does not match model "
            f"dimension {model.weights.shape[0]}"
        )
    return float(model.weights @ descriptor.values + model.bias)


def hinge_objective(
    samples: list[LabeledSample], w: np.ndarray, b: float, lam: float
) -> float:
    """lambda/2 * ||w||^2 + mean hinge loss over the sample set."""
    x = np.stack([s.descriptor.values for s in samples])
    y = np.array([s.label for s in samples], dtype=np.float64)
    hinge = np.maximum(0.0, 1.0 - y * (x @ w + b))
    return 0.5 * lam * float(w @ w) + float(hinge.mean())


def encode_model(model: LinearModel) -> bytes:
    """Versioned little-endian binary layout; identical on every platform."""
    p = model.hog_params
    header = _HEADER.pack(
        _MAGIC,
        _VERSION,
        p.window_w,
        p.window_h,
        p.cell_size,
        p.block_size,
        p.block_stride,
        p.num_bins,
        p.epsilon,
        model.lam,
        model.epochs,
        model.seed,
        model.bias,
        model.weights.shape[0],
    )
    return header + model.weights.astype("<f8").tobytes()


def decode_model(data: bytes) -> LinearModel:
    if len(data) < _HEADER.size:
        raise ModelFormatError(f"model stream too short: {len(data)} bytes")
    (
        magic,
        version,
        window_w,
        window_h,
        cell_size,
        block_size,
        block_stride,
        num_bins,
        epsilon,
        lam,
        epochs,
        seed,
        bias,
        n_weights,
    ) = _HEADER.unpack_from(data)
    if magic != _MAGIC:
        raise ModelFormatError(f"bad magic {magic!r}, expected {_MAGIC!r}")
    if version != _VERSION:
        raise ModelFormatError(f"unsupported model version {version}")
    try:
        params = HogParams(
            window_w, window_h, cell_size, block_size, block_stride, num_bins, epsilon
        )
    except ValueError as e:
        raise ModelFormatError(f"invalid HOG parameters in model: {e}") from None
    if n_weights != params.descriptor_length:
        raise ModelFormatError(
            f"declared weight count {n_weights} does not match descriptor "
            f"length {params.descriptor_length}"
        )
    payload = data[_HEADER.size :]
    if len(payload) != n_weights * 8:
        raise ModelFormatError(
            f"weight payload is {len(payload)} bytes, expected {n_weights * 8}"
        )
    weights = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    return LinearModel(weights, bias, params, lam, epochs, seed)


def positive_window(truth: BoundingBox, params: HogParams, frame_w: int, frame_h: int):
    """Smallest window-aspect box covering the truth box with context padding.

    Returns None when no such box fits inside the frame; the box is shifted
    (never shrunk) to stay in bounds so the crop keeps the window aspect.
    """
    aspect = params.window_w / params.window_h
    w = max(truth.w, truth.h * aspect) * POSITIVE_CONTEXT
    h = w / aspect
    w, h = int(round(w)), int(round(h))
    if w > frame_w or h > frame_h or w < 2 or h < 2:
        return None
    x = truth.x + (truth.w - w) // 2
    y = truth.y + (truth.h - h) // 2
    x = min(max(x, 0), frame_w - w)
    y = min(max(y, 0), frame_h - h)
    return BoundingBox(x, y, w, h)


def build_training_samples(
    frames: list[GrayImage],
    truths_per_frame: list[list[BoundingBox]],
    hog_params: HogParams,
    seed: int = DEFAULT_SEED,
    negatives_per_positive: int = NEGATIVES_PER_POSITIVE,
    scales: tuple[float, ...] = (1.0, 1.2, 1.44),
) -> list[LabeledSample]:
    """Cut positive and negative HOG samples out of an annotated sequence.

    Positives: window-aspect context crops around each truth box. Negatives:
    ``negatives_per_positive`` random window-sized boxes per positive, each
    overlapping every truth box of its frame below ``NEGATIVE_MAX_IOU``.
    """
    if len(frames) != len(truths_per_frame):
        raise ValueError("frames and truth lists must align")
    rng = np.random.default_rng(seed)
    samples: list[LabeledSample] = []
    for frame, truths in zip(frames, truths_per_frame):
        n_pos = 0
        for truth in truths:
            box = positive_window(truth, hog_params, frame.width, frame.height)
            if box is None:
                continue
            window = resample_nearest(
                crop(frame, box), hog_params.window_w, hog_params.window_h
            )
            samples.append(LabeledSample(hog_features(window, hog_params), +1))
            n_pos += 1
        wanted = n_pos * negatives_per_positive
        drawn = 0
        attempts = 0
        while drawn < wanted and attempts < wanted * 50:
            attempts += 1
            s = scales[rng.integers(len(scales))]
            w = int(round(hog_params.window_w * s))
            h = int(round(hog_params.window_h * s))
            if w > frame.width or h > frame.height:
                continue
            x = int(rng.integers(0, frame.width - w + 1))
            y = int(rng.integers(0, frame.height - h + 1))
            box = BoundingBox(x, y, w, h)
            if any(iou(box, t) >= NEGATIVE_MAX_IOU for t in truths):
                continue
            window = resample_nearest(
                crop(frame, box), hog_params.window_w, hog_params.window_h
            )
            samples.append(LabeledSample(hog_features(window, hog_params), -1))
            drawn += 1
    return samples
