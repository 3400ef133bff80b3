"""Quaternionic phase differences, temporal filtering and accumulation.

The inter-frame motion signal at each pixel is the imaginary part of the
quaternion logarithm of r_curr * conj(r_prev), where r is the per-pixel unit
quaternion of the monogenic signal.  The pair (u, v) encodes the phase step
along the local orientation: u = dphi * cos(theta), v = dphi * sin(theta).
Sign convention: a pattern moving along the +orientation axis produces a
negative phase step (phase at a fixed pixel trails the moving pattern).

The per-frame steps are lowpass filtered along time with a zero-phase FIR
filter, then summed over a span of `accum_frames` consecutive steps to
measure motion between frames that far apart.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import convolve1d

from .pyramid import UnitQuaternionField

QUAT_LOG_EPS = 1e-9


@dataclass
class QuatPhaseDiffMap:
    """Per-pixel phase step between two adjacent frames."""

    u: np.ndarray  # dphi * cos(theta), radians
    v: np.ndarray  # dphi * sin(theta), radians
    valid: np.ndarray


@dataclass
class AccumulatedMotion:
    """Phase change accumulated over a span of frames, plus its magnitude."""

    u: np.ndarray
    v: np.ndarray
    magnitude: np.ndarray

    def stacked(self) -> np.ndarray:
        """Channels-last (H, W, 3) view in the order (u, v, magnitude)."""
        return np.stack([self.u, self.v, self.magnitude], axis=-1)


def phase_difference(curr: UnitQuaternionField,
                     prev: UnitQuaternionField) -> QuatPhaseDiffMap:
    """Imaginary part of log(q_curr * q_prev^-1), per pixel.

    For unit quaternions the inverse is the conjugate.  The product's scalar
    part is clamped into [-1, 1] before acos; near-identity products (vector
    norm below 1e-9) return an exact zero step, and pixels invalid in either
    input are zero and flagged invalid.
    """
    if curr.w.shape != prev.w.shape:
        raise ValueError("phase difference requires equally shaped fields")
    w = curr.w * prev.w + curr.x * prev.x + curr.y * prev.y
    x = curr.x * prev.w - curr.w * prev.x
    y = curr.y * prev.w - curr.w * prev.y
    z = prev.x * curr.y - curr.x * prev.y
    norm = np.sqrt(x * x + y * y + z * z)
    angle = np.arccos(np.clip(w, -1.0, 1.0))
    valid = curr.valid & prev.valid
    ok = valid & (norm >= QUAT_LOG_EPS)
    scale = np.where(ok, angle / np.where(norm < QUAT_LOG_EPS, 1.0, norm), 0.0)
    return QuatPhaseDiffMap(u=x * scale, v=y * scale, valid=valid)


def design_lowpass(cutoff_hz: float, fps: float, num_taps: int | None = None) -> np.ndarray:
    """Symmetric Hamming-windowed sinc lowpass with DC gain exactly 1.

    Default length 2*floor(fps/10)+1 (at least 5 taps) gives roughly 100 ms
    of support at any frame rate.
    """
    if cutoff_hz >= fps / 2:
        raise ValueError(f"cutoff {cutoff_hz} Hz at or above Nyquist ({fps / 2} Hz)")
    if cutoff_hz <= 0 or fps <= 0:
        raise ValueError("cutoff and fps must be positive")
    if num_taps is None:
        num_taps = max(5, 2 * int(fps // 10) + 1)
    if num_taps % 2 == 0:
        raise ValueError("filter length must be odd for zero phase")
    n = np.arange(num_taps) - num_taps // 2
    h = 2.0 * cutoff_hz / fps * np.sinc(2.0 * cutoff_hz / fps * n)
    h *= np.hamming(num_taps)
    return h / h.sum()


def design_bandpass(low_hz: float, high_hz: float, fps: float,
                    num_taps: int | None = None) -> np.ndarray:
    """Bandpass as the difference of two matched windowed-sinc lowpasses."""
    if not 0 < low_hz < high_hz:
        raise ValueError("need 0 < low_hz < high_hz")
    high = design_lowpass(high_hz, fps, num_taps)
    low = design_lowpass(low_hz, fps, len(high))
    return high - low


def temporal_filter(series: np.ndarray, cutoff_hz: float, fps: float,
                    kind: str = "lowpass", low_hz: float = 2.0) -> np.ndarray:
    """Zero-phase FIR filtering along axis 0 with reflected ends.

    `series` stacks per-frame maps (or scalars) along the first axis.  Ends
    are mirror-reflected for half the filter length so every frame keeps a
    filtered value.
    """
    series = np.asarray(series, dtype=np.float64)
    if kind == "lowpass":
        taps = design_lowpass(cutoff_hz, fps)
    elif kind == "bandpass":
        taps = design_bandpass(low_hz, cutoff_hz, fps)
    else:
        raise ValueError(f"unknown filter kind {kind!r}")
    if series.shape[0] < len(taps):
        raise ValueError(
            f"sequence length {series.shape[0]} shorter than filter ({len(taps)} taps)")
    return convolve1d(series, taps, axis=0, mode="mirror")


def accumulate(filtered: list[QuatPhaseDiffMap]) -> AccumulatedMotion:
    """Sum a span of phase-step maps; magnitude is the Euclidean norm of the sum."""
    if not filtered:
        raise ValueError("cannot accumulate an empty span")
    shape = filtered[0].u.shape
    u = np.zeros(shape)
    v = np.zeros(shape)
    for step in filtered:
        if step.u.shape != shape:
            raise ValueError("all phase-step maps must share one shape")
        u += step.u
        v += step.v
    return AccumulatedMotion(u=u, v=v, magnitude=np.hypot(u, v))


def accumulate_series(u_series: np.ndarray, v_series: np.ndarray,
                      span: int) -> list[AccumulatedMotion]:
    """Sliding sums of `span` consecutive steps over stacked (N, H, W) series.

    Entry m corresponds to accumulating steps m-span+1 .. m (0-based step
    indices), i.e. motion between frames m+1-span and m+1 of the video.
    """
    if span < 1:
        raise ValueError("span must be >= 1")
    n = u_series.shape[0]
    if n < span:
        raise ValueError(f"need at least {span} steps, got {n}")
    cu = np.cumsum(u_series, axis=0)
    cv = np.cumsum(v_series, axis=0)
    out = []
    for m in range(span - 1, n):
        u = cu[m] - (cu[m - span] if m >= span else 0.0)
        v = cv[m] - (cv[m - span] if m >= span else 0.0)
        out.append(AccumulatedMotion(u=u, v=v, magnitude=np.hypot(u, v)))
    return out
