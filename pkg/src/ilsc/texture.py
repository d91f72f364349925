"""Kernel-scanned texture measures on square speckle ROIs.

Five base statistics are evaluated on every fully-interior kernel window
(no padding) and averaged over all window positions:

    mean, stddev (population), range (max - min),
    skewness ((1/n) * sum(((x - mu) / sigma) ** 3), 0 when sigma == 0),
    mad (mean absolute deviation about the window mean)

The nine features combine them with 3x3 and 5x5 kernels:

    t1 mean@3    t2 range@3   t3 stddev@3   t4 skewness@3   t5 10*mad@3
    t6 range@5   t7 mad@5     t8 skewness@5 t9 stddev@5
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .dataset import DataSet
from .errors import DataError, ParameterError
from .speckle import SpeckleImage, contrast

__all__ = [
    "FEATURE_NAMES",
    "FEATURE_DEFINITIONS",
    "MAD3_SCALE",
    "Roi",
    "TextureVector",
    "UniformityReport",
    "select_roi",
    "uniformity_check",
    "texture_features",
    "window_statistics",
    "featurize_batch",
]

FEATURE_NAMES = ("t1", "t2", "t3", "t4", "t5", "t6", "t7", "t8", "t9")
MAD3_SCALE = 10.0

# (feature, statistic, kernel size, multiplier)
FEATURE_DEFINITIONS = (
    ("t1", "mean", 3, 1.0),
    ("t2", "range", 3, 1.0),
    ("t3", "stddev", 3, 1.0),
    ("t4", "skewness", 3, 1.0),
    ("t5", "mad", 3, MAD3_SCALE),
    ("t6", "range", 5, 1.0),
    ("t7", "mad", 5, 1.0),
    ("t8", "skewness", 5, 1.0),
    ("t9", "stddev", 5, 1.0),
)

DEFAULT_UNIFORMITY_THRESHOLD = 0.3


@dataclass(frozen=True, eq=False)
class Roi:
    """Square window of a source image; ``origin_x`` is the column offset."""

    origin_x: int
    origin_y: int
    size: int
    source: SpeckleImage

    def __post_init__(self):
        if self.size < 7:
            raise ParameterError("size", f"ROI must be at least 7 pixels, got {self.size}")
        h, w = self.source.intensities.shape
        if (
            self.origin_x < 0
            or self.origin_y < 0
            or self.origin_x + self.size > w
            or self.origin_y + self.size > h
        ):
            raise ParameterError(
                "origin",
                f"{self.size}x{self.size} ROI at ({self.origin_x}, {self.origin_y}) "
                f"exceeds {w}x{h} image",
            )

    @property
    def pixels(self) -> np.ndarray:
        y, x, s = self.origin_y, self.origin_x, self.size
        return self.source.intensities[y : y + s, x : x + s]

    @classmethod
    def whole(cls, pixels) -> "Roi":
        """Wrap a square array as a ROI covering its full extent."""
        a = np.asarray(pixels, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ParameterError("pixels", f"expected a square 2-D array, got shape {a.shape}")
        return cls(0, 0, a.shape[0], SpeckleImage(a))


@dataclass(frozen=True)
class TextureVector:
    t1: float
    t2: float
    t3: float
    t4: float
    t5: float
    t6: float
    t7: float
    t8: float
    t9: float

    names = FEATURE_NAMES

    def __post_init__(self):
        for name in FEATURE_NAMES:
            if not np.isfinite(getattr(self, name)):
                raise DataError(f"texture measure {name} is not finite")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in FEATURE_NAMES])


@dataclass(frozen=True)
class UniformityReport:
    quadrant_contrasts: tuple
    max_pairwise_delta: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.max_pairwise_delta <= self.threshold


def _window_grid_contrast(a: np.ndarray, size: int, stride: int) -> np.ndarray:
    windows = sliding_window_view(a, (size, size))[::stride, ::stride]
    floor = windows.min(axis=(-2, -1), keepdims=True)
    shifted = windows - floor
    mean_shift = shifted.mean(axis=(-2, -1), keepdims=True)
    var = ((shifted - mean_shift) ** 2).mean(axis=(-2, -1))
    mean = (floor + mean_shift)[..., 0, 0]
    k = np.zeros_like(mean)
    ok = mean > 0
    k[ok] = np.sqrt(var[ok]) / mean[ok]
    return k


def select_roi(image: SpeckleImage, size: int = 30, stride: int = 5) -> Roi:
    """Pick the stride-aligned ``size`` window with the highest speckle contrast.

    Ties resolve to the smallest ``(origin_y, origin_x)``. Windows with zero
    mean intensity count as contrast 0.
    """
    if size < 7:
        raise ParameterError("size", f"must be >= 7, got {size}")
    if stride < 1:
        raise ParameterError("stride", f"must be >= 1, got {stride}")
    h, w = image.intensities.shape
    if h < size or w < size:
        raise ParameterError("size", f"{size}x{size} window does not fit a {w}x{h} image")
    k = _window_grid_contrast(image.intensities, size, stride)
    iy, ix = np.unravel_index(int(np.argmax(k)), k.shape)
    return Roi(int(ix) * stride, int(iy) * stride, size, image)


def uniformity_check(roi: Roi, threshold: float = DEFAULT_UNIFORMITY_THRESHOLD) -> UniformityReport:
    """Compare speckle contrast across the four quadrants of a ROI."""
    if roi.size % 2:
        raise ParameterError("size", f"uniformity check needs an even ROI size, got {roi.size}")
    half = roi.size // 2
    p = roi.pixels
    quads = (p[:half, :half], p[:half, half:], p[half:, :half], p[half:, half:])
    ks = []
    for q in quads:
        # an all-zero quadrant has no texture at all
        ks.append(0.0 if not q.any() else contrast(q).contrast)
    delta = max(abs(a - b) for a in ks for b in ks)
    return UniformityReport(tuple(ks), float(delta), float(threshold))


def _stable_mean(a: np.ndarray, axis=None, keepdims=False):
    floor = a.min(axis=axis, keepdims=True)
    m = floor + (a - floor).mean(axis=axis, keepdims=True)
    return m if keepdims else np.squeeze(m, axis=axis)


def window_statistics(pixels: np.ndarray, kernel: int) -> dict:
    """Per-position base statistics for every interior ``kernel`` window.

    Returns a dict of ``(H - kernel + 1, W - kernel + 1)`` arrays keyed by
    ``mean``, ``stddev``, ``range``, ``skewness`` and ``mad``.
    """
    a = np.asarray(pixels, dtype=np.float64)
    if a.shape[0] < kernel or a.shape[1] < kernel:
        raise ParameterError("kernel", f"{kernel}x{kernel} kernel does not fit shape {a.shape}")
    w = sliding_window_view(a, (kernel, kernel))
    axes = (-2, -1)
    lo = w.min(axis=axes, keepdims=True)
    hi = w.max(axis=axes)
    mu = _stable_mean(w, axis=axes, keepdims=True)
    d = w - mu
    sigma = np.sqrt((d * d).mean(axis=axes))
    m3 = (d * d * d).mean(axis=axes)
    skew = np.zeros_like(sigma)
    nz = sigma > 0
    skew[nz] = m3[nz] / sigma[nz] ** 3
    return {
        "mean": mu[..., 0, 0],
        "stddev": sigma,
        "range": hi - lo[..., 0, 0],
        "skewness": skew,
        "mad": np.abs(d).mean(axis=axes),
    }


def texture_features(roi: Roi) -> TextureVector:
    """Compute t1..t9 for a ROI (see module docstring for definitions)."""
    p = roi.pixels
    stats = {k: window_statistics(p, k) for k in (3, 5)}
    values = {}
    for name, stat, kernel, scale in FEATURE_DEFINITIONS:
        values[name] = float(_stable_mean(stats[kernel][stat])) * scale
    return TextureVector(**values)


def featurize_batch(
    images,
    class_label: str,
    with_progress: bool = False,
    roi_size: int = 30,
    stride: int = 5,
) -> DataSet:
    """One texture row per image, in input order.

    With ``with_progress`` the 1-based position of each image is recorded as
    the progress attribute, so the input must already be in chronological
    order.
    """
    images = list(images)
    if not images:
        raise DataError("featurize_batch needs at least one image")
    rows = []
    for i, image in enumerate(images):
        try:
            roi = select_roi(image, roi_size, stride)
        except ParameterError as exc:
            raise DataError(f"image {i}: {exc}") from exc
        rows.append(texture_features(roi).as_array())
    progress = np.arange(1, len(images) + 1) if with_progress else None
    return DataSet(FEATURE_NAMES, np.vstack(rows), labels=(class_label,) * len(rows), progress=progress)
