"""Hot numeric kernels with numba and pure-numpy twins.

The two inner loops that dominate runtime — the exhaustive SSD template scan
and per-pixel HOG orientation voting — exist in both a numba ``@njit`` build
and a vectorized numpy build. Selection is controlled by the environment
variable ``THERMOSCAN_KERNELS``:

    auto   (default) numba if importable, else numpy
    numba  require numba; raise if unavailable
    numpy  force the pure-numpy path

``ssd_scan`` is integer-exact in both builds. ``cell_hist`` accumulates
float64 in different orders, so the twins agree to ~1e-12 relative, not
bitwise; each build is individually deterministic.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "BACKEND",
    "HAS_NUMBA",
    "ssd_scan",
    "cell_hist",
    "ssd_scan_numpy",
    "cell_hist_numpy",
    "ssd_scan_numba",
    "cell_hist_numba",
]


def ssd_scan_numpy(region: np.ndarray, template: np.ndarray) -> np.ndarray:
    """Sum-of-squared-differences of every template placement inside region.

    region: (rh, rw) int64, template: (th, tw) int64 with th <= rh, tw <= rw.
    Returns (rh-th+1, rw-tw+1) int64 error surface indexed [py, px].
    """
    th, tw = template.shape
    windows = np.lib.stride_tricks.sliding_window_view(region, (th, tw))
    # (w - t)^2 = w^2 - 2wt + t^2, all in int64 so the surface is exact
    cross = np.einsum("ijkl,kl->ij", windows, template)
    win_sq = np.einsum("ijkl,ijkl->ij", windows, windows)
    return win_sq - 2 * cross + int(np.sum(template * template))


def cell_hist_numpy(
    mag: np.ndarray, ang: np.ndarray, cell_size: int, num_bins: int
) -> np.ndarray:
    """Per-cell orientation histograms with bilinear vote splitting.

    mag, ang: (h, w) float64, ang in [0, 180). h and w must be multiples of
    cell_size. Each pixel votes its magnitude into the two bins whose centers
    (at i * 180/num_bins) straddle its angle, wrapping last->first.
    Returns (h//cell_size, w//cell_size, num_bins) float64.
    """
    h, w = mag.shape
    cy, cx = h // cell_size, w // cell_size
    bin_width = 180.0 / num_bins
    pos = ang / bin_width
    lo = np.floor(pos).astype(np.int64)
    frac = pos - lo
    lo %= num_bins
    hi = (lo + 1) % num_bins

    ys, xs = np.mgrid[0:h, 0:w]
    cell_idx = (ys // cell_size) * cx + (xs // cell_size)
    n = cy * cx * num_bins
    flat_lo = (cell_idx * num_bins + lo).ravel()
    flat_hi = (cell_idx * num_bins + hi).ravel()
    hist = np.bincount(flat_lo, weights=(mag * (1.0 - frac)).ravel(), minlength=n)
    hist += np.bincount(flat_hi, weights=(mag * frac).ravel(), minlength=n)
    return hist.reshape(cy, cx, num_bins)


try:
    from numba import njit

    HAS_NUMBA = True

    @njit(cache=True)
    def ssd_scan_numba(region, template):  # pragma: no cover - exercised via dispatch
        rh, rw = region.shape
        th, tw = template.shape
        oh = rh - th + 1
        ow = rw - tw + 1
        out = np.empty((oh, ow), dtype=np.int64)
        for py in range(oh):
            for px in range(ow):
                acc = np.int64(0)
                for ty in range(th):
                    for tx in range(tw):
                        d = region[py + ty, px + tx] - template[ty, tx]
                        acc += d * d
                out[py, px] = acc
        return out

    @njit(cache=True)
    def cell_hist_numba(mag, ang, cell_size, num_bins):  # pragma: no cover
        h, w = mag.shape
        cy = h // cell_size
        cx = w // cell_size
        bin_width = 180.0 / num_bins
        hist = np.zeros((cy, cx, num_bins), dtype=np.float64)
        for y in range(h):
            for x in range(w):
                pos = ang[y, x] / bin_width
                lo = int(np.floor(pos))
                frac = pos - lo
                lo %= num_bins
                hi = (lo + 1) % num_bins
                m = mag[y, x]
                iy = y // cell_size
                ix = x // cell_size
                hist[iy, ix, lo] += m * (1.0 - frac)
                hist[iy, ix, hi] += m * frac
        return hist

except ImportError:  # pragma: no cover - environment without numba
    HAS_NUMBA = False
    ssd_scan_numba = None
    cell_hist_numba = None


def _select_backend() -> str:
    choice = os.environ.get("THERMOSCAN_KERNELS", "auto").strip().lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(
            f"THERMOSCAN_KERNELS={choice!r} invalid (use auto, numba, or numpy)"
        )
    if choice == "numba" and not HAS_NUMBA:
        raise ImportError("THERMOSCAN_KERNELS=numba but numba is not installed")
    if choice == "auto":
        return "numba" if HAS_NUMBA else "numpy"
    return choice


BACKEND = _select_backend()

if BACKEND == "numba":
    ssd_scan = ssd_scan_numba
    cell_hist = cell_hist_numba
else:
    ssd_scan = ssd_scan_numpy
    cell_hist = cell_hist_numpy
