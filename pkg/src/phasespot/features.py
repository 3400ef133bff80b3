"""Region-of-interest cropping and feature-map assembly for the network.

The motion channels are sampled from two face regions where micro-expressions
concentrate, the eyebrows and the mouth.  Each region is resampled to a
15x30 strip and the strips are stacked (brows on top) into a 30x30 map with
three channels (u, v, magnitude).  A whole-image mode resamples the full
motion map to 30x30 instead, for the ablation comparing RoI against
full-frame input; both modes emit identical tensor shapes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import map_coordinates

from .align import WORK_SIZE
from .motion import AccumulatedMotion

BROW_RANGE = (17, 27)   # standard 68-point scheme, indices 17..26
MOUTH_RANGE = (48, 68)  # indices 48..67
ROI_MARGIN = 0.15
STRIP_SHAPE = (15, 30)
FEATURE_SHAPE = (30, 30, 3)
STD_FLOOR = 1e-8


@dataclass(frozen=True)
class RoiBoxes:
    """Eyebrow and mouth rectangles (x0, y0, x1, y1) in working-image coordinates."""

    eyebrow_box: tuple[float, float, float, float]
    mouth_box: tuple[float, float, float, float]


def _expanded_box(points: np.ndarray, margin: float, bound: float
                  ) -> tuple[float, float, float, float]:
    x0, y0 = points.min(axis=0)
    x1, y1 = points.max(axis=0)
    w, h = x1 - x0, y1 - y0
    if w <= 0 or h <= 0:
        raise ValueError("degenerate RoI")
    box = (
        max(x0 - margin * w, 0.0),
        max(y0 - margin * h, 0.0),
        min(x1 + margin * w, bound),
        min(y1 + margin * h, bound),
    )
    if box[2] <= box[0] or box[3] <= box[1]:
        raise ValueError("degenerate RoI after clamping")
    return box


def roi_boxes_from_landmarks(landmarks: np.ndarray, margin: float = ROI_MARGIN,
                             size: int = WORK_SIZE) -> RoiBoxes:
    """Eyebrow/mouth boxes from 68 aligned landmarks, expanded 15% per side."""
    pts = np.asarray(landmarks, dtype=np.float64)
    if pts.shape != (68, 2):
        raise ValueError("expected 68 landmark points")
    bound = float(size - 1)
    return RoiBoxes(
        eyebrow_box=_expanded_box(pts[BROW_RANGE[0]:BROW_RANGE[1]], margin, bound),
        mouth_box=_expanded_box(pts[MOUTH_RANGE[0]:MOUTH_RANGE[1]], margin, bound),
    )


def _resample_box(plane: np.ndarray, box: tuple[float, float, float, float],
                  rows: int, cols: int) -> np.ndarray:
    x0, y0, x1, y1 = box
    h, w = plane.shape
    if x0 > w - 1 or y0 > h - 1 or x1 < 0 or y1 < 0:
        raise ValueError("RoI box outside level bounds")
    xs = np.clip(np.linspace(x0, x1, cols), 0, w - 1)
    ys = np.clip(np.linspace(y0, y1, rows), 0, h - 1)
    gx, gy = np.meshgrid(xs, ys)
    return map_coordinates(plane, [gy, gx], order=1, mode="nearest")


def scale_box(box: tuple[float, float, float, float], level: int
              ) -> tuple[float, float, float, float]:
    """Map a working-image box into the coordinate grid of pyramid level `level`."""
    factor = float(2 ** (level - 1))
    return tuple(c / factor for c in box)  # type: ignore[return-value]


def extract_features(motion: AccumulatedMotion, boxes: RoiBoxes | None,
                     level: int) -> np.ndarray:
    """Unnormalized 30x30x3 feature map from one accumulated-motion frame.

    With `boxes` given, the eyebrow strip is stacked above the mouth strip;
    with ``boxes=None`` (full-image mode) the whole level map is resampled to
    30x30.
    """
    planes = (motion.u, motion.v, motion.magnitude)
    out = np.empty(FEATURE_SHAPE)
    if boxes is None:
        h, w = planes[0].shape
        full = (0.0, 0.0, float(w - 1), float(h - 1))
        for c, plane in enumerate(planes):
            out[:, :, c] = _resample_box(plane, full, 2 * STRIP_SHAPE[0], STRIP_SHAPE[1])
        return out
    brow = scale_box(boxes.eyebrow_box, level)
    mouth = scale_box(boxes.mouth_box, level)
    rows, cols = STRIP_SHAPE
    for c, plane in enumerate(planes):
        out[:rows, :, c] = _resample_box(plane, brow, rows, cols)
        out[rows:, :, c] = _resample_box(plane, mouth, rows, cols)
    return out


def zscore_normalize(maps: np.ndarray, scope: str = "video") -> np.ndarray:
    """Z-score feature maps per channel.

    ``scope="video"`` (default) pools statistics over every pixel of every
    map of the video; ``scope="frame"`` normalizes each map separately.
    Channels with no variation collapse to zero via the std floor.
    """
    maps = np.asarray(maps, dtype=np.float64)
    if maps.ndim != 4 or maps.shape[1:] != FEATURE_SHAPE:
        raise ValueError("expected stacked maps of shape (N, 30, 30, 3)")
    if maps.shape[0] < 2 and scope == "video":
        raise ValueError("per-video statistics need at least 2 maps")
    if scope == "video":
        mean = maps.mean(axis=(0, 1, 2), keepdims=True)
        std = maps.std(axis=(0, 1, 2), keepdims=True)
    elif scope == "frame":
        mean = maps.mean(axis=(1, 2), keepdims=True)
        std = maps.std(axis=(1, 2), keepdims=True)
    else:
        raise ValueError(f"unknown zscore scope {scope!r}")
    return (maps - mean) / np.maximum(std, STD_FLOOR)
