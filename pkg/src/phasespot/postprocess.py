"""Score smoothing, adaptive thresholding, peak detection and interval emission."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


@dataclass
class ScoreSequence:
    """Per-frame scores for frames start_frame .. start_frame + len - 1."""

    values: np.ndarray
    start_frame: int
    fps: float
    span: int  # accumulation span the scores were computed with

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1:
            raise ValueError("scores must be one-dimensional")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("scores must be finite")

    def frames(self) -> np.ndarray:
        return np.arange(self.start_frame, self.start_frame + len(self.values))

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class SpottedInterval:
    """Predicted micro-expression interval around a score peak."""

    onset: int
    offset: int
    peak: int


def smooth(scores: ScoreSequence, edge_policy: str = "truncate") -> ScoreSequence:
    """Moving average over a window of 2*span+1 frames.

    ``edge_policy="truncate"`` keeps every frame, averaging over whatever part
    of the window exists near the ends.  ``edge_policy="strict"`` keeps only
    frames with a full window, shrinking the sequence by span at each end.
    """
    span = scores.span
    n = len(scores)
    window = 2 * span + 1
    if edge_policy not in ("truncate", "strict"):
        raise ValueError(f"unknown edge policy {edge_policy!r}")
    if n < window:
        warnings.warn(
            f"sequence of {n} scores shorter than smoothing window {window}; "
            "using truncated windows throughout", stacklevel=2)
        edge_policy = "truncate"
    csum = np.concatenate([[0.0], np.cumsum(scores.values)])
    idx = np.arange(n)
    lo = np.maximum(idx - span, 0)
    hi = np.minimum(idx + span, n - 1)
    means = (csum[hi + 1] - csum[lo]) / (hi - lo + 1)
    if edge_policy == "strict":
        means = means[span:n - span]
        return ScoreSequence(means, scores.start_frame + span, scores.fps, span)
    return ScoreSequence(means, scores.start_frame, scores.fps, span)


def threshold(smoothed: ScoreSequence, peak_frac: float) -> float:
    """Adaptive threshold mean + peak_frac * (max - mean) over the video."""
    if not 0.0 <= peak_frac <= 1.0:
        raise ValueError("peak_frac must lie in [0, 1]")
    mean = float(smoothed.values.mean())
    peak = float(smoothed.values.max())
    return mean + peak_frac * (peak - mean)


def detect_peaks(smoothed: ScoreSequence, height: float, min_distance: int
                 ) -> list[int]:
    """Strict local maxima above `height`, pruned to a minimum spacing.

    Among maxima closer than `min_distance` frames the higher one wins (ties
    go to the earlier frame).  Returned peak frame numbers are absolute and
    sorted ascending.
    """
    if min_distance < 1:
        raise ValueError("min_distance must be >= 1")
    v = smoothed.values
    if len(v) < 3:
        return []
    interior = np.arange(1, len(v) - 1)
    is_peak = (v[interior] > v[interior - 1]) & (v[interior] > v[interior + 1])
    candidates = interior[is_peak & (v[interior] > height)]
    order = sorted(candidates, key=lambda i: (-v[i], i))
    kept: list[int] = []
    for i in order:
        if all(abs(i - j) >= min_distance for j in kept):
            kept.append(i)
    return sorted(int(i) + smoothed.start_frame for i in kept)


def peaks_to_intervals(peaks: list[int], span: int, total_frames: int
                       ) -> list[SpottedInterval]:
    """Interval [peak - span, peak + span] per peak, clipped to the video."""
    out = []
    for p in peaks:
        out.append(SpottedInterval(
            onset=max(p - span, 0),
            offset=min(p + span, total_frames - 1),
            peak=int(p),
        ))
    return out
