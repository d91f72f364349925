"""Synthetic laser-speckle images and speckle-contrast statistics.

Two image-formation modes are provided:

``PHASOR``
    every pixel independently receives the normalized sum of ``n`` unit
    phasors with uniform random phases, ``(1/sqrt(n)) * sum_j exp(i*phi_j)``,
    and records its squared magnitude. This is fully developed speckle with
    single-pixel grains.

``PUPIL``
    a band-limited field: random phases fill a disk in the frequency domain,
    the field is inverse transformed and its squared magnitude normalized to
    unit mean. The disk radius sets the grain size.

Intensities are stored as ``(height, width)`` float64 arrays, row-major.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import ndimage

from . import _splitmix
from .errors import DataError, ParameterError

__all__ = [
    "Mode",
    "SpeckleParams",
    "SpeckleImage",
    "ContrastStats",
    "generate_speckle",
    "contrast",
    "blur_image",
    "gaussian_kernel",
    "mean_grain_area",
]


class Mode(str, enum.Enum):
    PHASOR = "phasor"
    PUPIL = "pupil"


@dataclass(frozen=True)
class SpeckleParams:
    """Simulation parameters; also serves as image provenance.

    ``pixel_pitch_um``, ``wavelength_nm`` and ``acquisition`` are metadata only
    and never influence the generated raster.
    """

    width: int
    height: int
    mode: Mode = Mode.PUPIL
    n: int = 1000
    pupil_radius: float = 0.2
    blur_sigma: float = 0.0
    seed: int = 0
    pixel_pitch_um: float = 2.8
    wavelength_nm: float = 650.0
    acquisition: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        for name in ("width", "height"):
            value = getattr(self, name)
            if int(value) != value or value < 8:
                raise ParameterError(name, f"must be an integer >= 8, got {value!r}")
        if self.mode is Mode.PHASOR and (int(self.n) != self.n or self.n < 2):
            raise ParameterError("n", f"phasor mode needs n >= 2, got {self.n!r}")
        if self.mode is Mode.PUPIL and not (0.0 < self.pupil_radius <= 0.5):
            raise ParameterError(
                "pupil_radius", f"must lie in (0, 0.5], got {self.pupil_radius!r}"
            )
        if not (self.blur_sigma >= 0.0 and math.isfinite(self.blur_sigma)):
            raise ParameterError("blur_sigma", f"must be >= 0, got {self.blur_sigma!r}")
        if int(self.seed) != self.seed or not (0 <= self.seed < 2**64):
            raise ParameterError("seed", f"must be an unsigned 64-bit integer, got {self.seed!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mode"] = self.mode.value
        return d


@dataclass(frozen=True, eq=False)
class SpeckleImage:
    """Nonnegative intensity raster plus the provenance that produced it."""

    intensities: np.ndarray
    params: SpeckleParams | None = None
    generator: str | None = None
    blur_applied: tuple = ()

    def __post_init__(self):
        a = np.array(self.intensities, dtype=np.float64, copy=True)
        if a.ndim != 2:
            raise DataError(f"intensities must be 2-D, got shape {a.shape}")
        if not np.all(np.isfinite(a)) or np.any(a < 0):
            raise DataError("intensities must be finite and nonnegative")
        a.setflags(write=False)
        object.__setattr__(self, "intensities", a)

    @property
    def width(self) -> int:
        return self.intensities.shape[1]

    @property
    def height(self) -> int:
        return self.intensities.shape[0]


@dataclass(frozen=True)
class ContrastStats:
    mean_intensity: float
    sigma: float
    contrast: float


def _pupil_intensity(p: SpeckleParams) -> np.ndarray:
    h, w = p.height, p.width
    ky = np.fft.fftfreq(h) * h
    kx = np.fft.fftfreq(w) * w
    radius = p.pupil_radius * min(w, h)
    inside = (ky[:, None] ** 2 + kx[None, :] ** 2) <= radius * radius
    phase = 2.0 * np.pi * _splitmix.uniform(p.seed, h * w).reshape(h, w)
    spectrum = np.where(inside, np.exp(1j * phase), 0.0)
    field_ = np.fft.ifft2(spectrum)
    intensity = field_.real**2 + field_.imag**2
    return intensity / intensity.mean()


def generate_speckle(params: SpeckleParams) -> SpeckleImage:
    """Simulate a speckle image; identical params give a bit-identical raster."""
    if params.mode is Mode.PHASOR:
        raster = _splitmix.phasor_intensity(params.seed, params.height, params.width, params.n)
    else:
        raster = _pupil_intensity(params)
    image = SpeckleImage(raster, params=params, generator=_splitmix.GENERATOR_NAME)
    if params.blur_sigma > 0:
        blurred = _blur_array(image.intensities, params.blur_sigma)
        image = SpeckleImage(blurred, params=params, generator=_splitmix.GENERATOR_NAME)
    return image


def _stable_mean(a: np.ndarray) -> float:
    # shifting by the minimum keeps constant regions exactly constant
    m = a.min()
    return float(m + (a - m).mean())


def contrast(image, roi=None) -> ContrastStats:
    """Population speckle contrast ``K = sigma / <I>`` over an image region.

    Parameters
    ----------
    image : SpeckleImage or array_like
    roi : (x, y, width, height), optional
        Rectangle fully inside the image. Defaults to the whole image.
    """
    a = image.intensities if isinstance(image, SpeckleImage) else np.asarray(image, float)
    if roi is not None:
        x, y, w, h = (int(v) for v in roi)
        if x < 0 or y < 0 or w < 1 or h < 1 or y + h > a.shape[0] or x + w > a.shape[1]:
            raise ParameterError("roi", f"{roi!r} does not lie inside a {a.shape[1]}x{a.shape[0]} image")
        a = a[y : y + h, x : x + w]
    if a.size < 4:
        raise DataError(f"contrast needs at least 4 pixels, got {a.size}")
    mean = _stable_mean(a)
    if not mean > 0:
        raise DataError("region has zero mean intensity; contrast is undefined")
    sigma = math.sqrt(float(np.mean((a - mean) ** 2)))
    return ContrastStats(mean_intensity=mean, sigma=sigma, contrast=sigma / mean)


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Unit-sum sampled Gaussian with half-width ``ceil(3 * sigma)``."""
    half = math.ceil(3.0 * sigma)
    x = np.arange(-half, half + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def _blur_array(a: np.ndarray, sigma: float) -> np.ndarray:
    k = gaussian_kernel(sigma)
    floor = a.min()
    out = ndimage.correlate1d(a - floor, k, axis=0, mode="mirror")
    out = ndimage.correlate1d(out, k, axis=1, mode="mirror")
    return np.maximum(out, 0.0) + floor


def blur_image(image: SpeckleImage, sigma: float) -> SpeckleImage:
    """Separable Gaussian blur with mirror-reflected edges."""
    if not (sigma >= 0 and math.isfinite(sigma)):
        raise ParameterError("sigma", f"must be >= 0, got {sigma!r}")
    if sigma == 0:
        return SpeckleImage(image.intensities, image.params, image.generator, image.blur_applied)
    return SpeckleImage(
        _blur_array(image.intensities, sigma),
        image.params,
        image.generator,
        image.blur_applied + (float(sigma),),
    )


def mean_grain_area(image: SpeckleImage) -> float:
    """Mean area in pixels of 4-connected blobs brighter than the image mean."""
    a = image.intensities
    labels, count = ndimage.label(a > a.mean())
    if count == 0:
        return 0.0
    return float(np.count_nonzero(labels)) / count
