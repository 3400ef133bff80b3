"""Laplacian pyramid and approximate Riesz transform.

The pyramid follows the classic Burt-Adelson construction: blur with the
5-tap binomial kernel [1,4,6,4,1]/16, keep every second pixel, and form each
subband as the difference between a level and the upsampled next level.
Collapsing with the same expansion operator reconstructs the input exactly
(up to float rounding), which the tests rely on.

Each subband is turned into a monogenic signal (I, R1, R2) by a pair of 3-tap
derivative filters [0.5, 0, -0.5] along x and y.  This spatial approximation
of the Riesz transfer functions -i*wx/|w| and -i*wy/|w| is only faithful near
the subband's own passband (wavelengths around 4-6 px in the subband grid);
that is where all of the subband's energy lives, which is what makes the
shortcut usable in a real-time path.  An exact frequency-domain Riesz
transform exists in the test suite as the oracle for this approximation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

BLUR_KERNEL = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0
RIESZ_KERNEL = np.array([0.5, 0.0, -0.5])
AMPLITUDE_FLOOR_FRAC = 1e-6


@dataclass
class LaplacianPyramid:
    """Bandpass subbands (finest first) plus the blurred lowpass residual."""

    subbands: list[np.ndarray]
    lowpass_residual: np.ndarray

    @property
    def levels(self) -> int:
        return len(self.subbands)


@dataclass
class RieszLevel:
    """Monogenic signal of one subband: the subband and its two Riesz responses."""

    subband: np.ndarray
    r1: np.ndarray
    r2: np.ndarray


@dataclass
class UnitQuaternionField:
    """Per-pixel unit quaternion (w, x, y) of a monogenic signal.

    The z component is structurally zero before frame-to-frame products.
    Pixels whose amplitude falls at or below the floor are flagged invalid and
    excluded from phase measurements.
    """

    w: np.ndarray
    x: np.ndarray
    y: np.ndarray
    amplitude: np.ndarray
    valid: np.ndarray


def _blur(image: np.ndarray) -> np.ndarray:
    out = correlate1d(image, BLUR_KERNEL, axis=0, mode="reflect")
    return correlate1d(out, BLUR_KERNEL, axis=1, mode="reflect")


def _downsample(image: np.ndarray) -> np.ndarray:
    return _blur(image)[::2, ::2]


def _expand(small: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    # Reflect-pad before zero-stuffing so the even/odd interleaving pattern
    # continues across borders; a constant image then expands to itself.
    padded = np.pad(small, 2, mode="reflect")
    stuffed = np.zeros((padded.shape[0] * 2, padded.shape[1] * 2), dtype=small.dtype)
    stuffed[::2, ::2] = padded
    kernel = BLUR_KERNEL * 2.0
    out = correlate1d(stuffed, kernel, axis=0, mode="constant")
    out = correlate1d(out, kernel, axis=1, mode="constant")
    return out[4:4 + shape[0], 4:4 + shape[1]]


def build_laplacian(image: np.ndarray, levels: int) -> LaplacianPyramid:
    """Decompose `image` into `levels` bandpass subbands plus a residual.

    Subband L (1-based) has shape ceil(H / 2**(L-1)) x ceil(W / 2**(L-1)).
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ValueError("expected a 2D image")
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if min(image.shape) / 2 ** (levels - 1) < 8:
        raise ValueError(
            f"{levels} levels too deep for image of shape {image.shape}")
    subbands = []
    g = image
    for _ in range(levels):
        g_down = _downsample(g)
        subbands.append(g - _expand(g_down, g.shape))
        g = g_down
    return LaplacianPyramid(subbands=subbands, lowpass_residual=g)


def collapse_laplacian(pyramid: LaplacianPyramid) -> np.ndarray:
    g = pyramid.lowpass_residual
    for subband in reversed(pyramid.subbands):
        g = subband + _expand(g, subband.shape)
    return g


def subband_at_level(image: np.ndarray, level: int) -> np.ndarray:
    """Compute only the requested subband (1-based), skipping finer bandpasses."""
    image = np.asarray(image, dtype=np.float64)
    if level < 1:
        raise ValueError("level must be >= 1")
    if min(image.shape) / 2 ** (level - 1) < 8:
        raise ValueError(f"level {level} too deep for image of shape {image.shape}")
    g = image
    for _ in range(level - 1):
        g = _downsample(g)
    return g - _expand(_downsample(g), g.shape)


def riesz_transform(subband: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Approximate Riesz responses (R1 horizontal, R2 vertical) of a subband."""
    subband = np.asarray(subband, dtype=np.float64)
    if subband.ndim != 2 or min(subband.shape) < 8:
        raise ValueError("subband must be 2D and at least 8x8")
    r1 = correlate1d(subband, RIESZ_KERNEL, axis=1, mode="reflect")
    r2 = correlate1d(subband, RIESZ_KERNEL, axis=0, mode="reflect")
    return r1, r2


def riesz_level(subband: np.ndarray) -> RieszLevel:
    r1, r2 = riesz_transform(subband)
    return RieszLevel(subband=subband, r1=r1, r2=r2)


def to_unit_quaternions(level: RieszLevel,
                        amplitude_floor: float | None = None) -> UnitQuaternionField:
    """Normalize a monogenic signal to per-pixel unit quaternions.

    `amplitude_floor` defaults to 1e-6 times the largest amplitude in the
    level; pixels at or below it carry no usable phase and are marked invalid.
    """
    i = np.asarray(level.subband, dtype=np.float64)
    r1 = np.asarray(level.r1, dtype=np.float64)
    r2 = np.asarray(level.r2, dtype=np.float64)
    if not (i.shape == r1.shape == r2.shape):
        raise ValueError("monogenic components must share one shape")
    amplitude = np.sqrt(i * i + r1 * r1 + r2 * r2)
    if amplitude_floor is None:
        amplitude_floor = AMPLITUDE_FLOOR_FRAC * float(amplitude.max())
    valid = amplitude > amplitude_floor
    denom = np.where(valid, amplitude, 1.0)
    return UnitQuaternionField(
        w=np.where(valid, i / denom, 0.0),
        x=np.where(valid, r1 / denom, 0.0),
        y=np.where(valid, r2 / denom, 0.0),
        amplitude=amplitude,
        valid=valid,
    )
