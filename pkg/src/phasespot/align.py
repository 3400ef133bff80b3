"""Landmark-based similarity alignment and face-region cropping.

Each frame is warped so its 68 landmarks land on the video's reference pose
(the first frame's landmarks), then the reference face box is cropped and
resized to a fixed 224x224 working image.  Head translation, rotation and
scale changes otherwise show up as large phase differences that swamp the
subtle motion this pipeline is after.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import map_coordinates

WORK_SIZE = 224
CROP_MARGIN = 0.10


@dataclass(frozen=True)
class SimilarityTransform:
    """4-DOF transform p -> scale * R(rotation) @ p + translation."""

    scale: float = 1.0
    rotation: float = 0.0
    translation: tuple[float, float] = (0.0, 0.0)
    rms_residual: float = 0.0  # fit residual; not part of the geometry

    def matrix(self) -> np.ndarray:
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        m = np.array([
            [self.scale * c, -self.scale * s, self.translation[0]],
            [self.scale * s, self.scale * c, self.translation[1]],
            [0.0, 0.0, 1.0],
        ])
        return m

    def apply(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        m = self.matrix()
        out = pts @ m[:2, :2].T + m[:2, 2]
        return out if np.asarray(points).ndim > 1 else out[0]

    def inverse(self) -> "SimilarityTransform":
        inv_scale = 1.0 / self.scale
        c, s = math.cos(-self.rotation), math.sin(-self.rotation)
        tx, ty = self.translation
        return SimilarityTransform(
            scale=inv_scale,
            rotation=-self.rotation,
            translation=(-inv_scale * (c * tx - s * ty),
                         -inv_scale * (s * tx + c * ty)),
        )

    def compose(self, other: "SimilarityTransform") -> "SimilarityTransform":
        """Return self applied after `other` (self o other)."""
        m = self.matrix() @ other.matrix()
        scale = math.hypot(m[0, 0], m[1, 0])
        rotation = math.atan2(m[1, 0], m[0, 0])
        return SimilarityTransform(scale=scale, rotation=rotation,
                                   translation=(m[0, 2], m[1, 2]))

    @classmethod
    def identity(cls) -> "SimilarityTransform":
        return cls()


def compute_alignment(landmarks: np.ndarray, reference: np.ndarray) -> SimilarityTransform:
    """Least-squares similarity transform mapping `landmarks` onto `reference`.

    Closed-form Procrustes fit.  Degenerate point sets (coincident or
    collinear) are rejected since they do not pin down a unique transform.
    """
    p = np.asarray(landmarks, dtype=np.float64)
    q = np.asarray(reference, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 2 or p.shape[1] != 2:
        raise ValueError("landmark sets must both be (N, 2)")
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(q))):
        raise ValueError("landmarks must be finite")
    mu_p = p.mean(axis=0)
    mu_q = q.mean(axis=0)
    pc = p - mu_p
    qc = q - mu_q
    var_p = (pc ** 2).sum() / len(p)
    if var_p < 1e-12:
        raise ValueError("degenerate landmark set: points are coincident")
    cov = qc.T @ pc / len(p)
    u, d, vt = np.linalg.svd(cov)
    if d[1] < 1e-9 * max(d[0], 1e-12):
        raise ValueError("degenerate landmark set: points are collinear")
    sign = np.sign(np.linalg.det(u @ vt))
    s_diag = np.array([1.0, sign])
    rot = u @ np.diag(s_diag) @ vt
    scale = float((d * s_diag).sum() / var_p)
    trans = mu_q - scale * rot @ mu_p
    transform = SimilarityTransform(
        scale=scale,
        rotation=math.atan2(rot[1, 0], rot[0, 0]),
        translation=(float(trans[0]), float(trans[1])),
    )
    residual = transform.apply(p) - q
    rms = float(np.sqrt((residual ** 2).sum(axis=1).mean()))
    return SimilarityTransform(transform.scale, transform.rotation,
                               transform.translation, rms_residual=rms)


def face_crop_box(reference: np.ndarray, margin: float = CROP_MARGIN
                  ) -> tuple[float, float, float, float]:
    """Tight landmark bounding box expanded by `margin` per side (x0, y0, x1, y1)."""
    pts = np.asarray(reference, dtype=np.float64)
    x0, y0 = pts.min(axis=0)
    x1, y1 = pts.max(axis=0)
    w, h = x1 - x0, y1 - y0
    if w <= 0 or h <= 0:
        raise ValueError("degenerate face box")
    return (x0 - margin * w, y0 - margin * h, x1 + margin * w, y1 + margin * h)


def map_to_crop(points: np.ndarray, crop_box: tuple[float, float, float, float],
                size: int = WORK_SIZE) -> np.ndarray:
    """Map frame coordinates into the cropped/resized working image."""
    x0, y0, x1, y1 = crop_box
    pts = np.asarray(points, dtype=np.float64)
    out = np.empty_like(pts)
    out[..., 0] = (pts[..., 0] - x0) * (size - 1) / (x1 - x0)
    out[..., 1] = (pts[..., 1] - y0) * (size - 1) / (y1 - y0)
    return out


def warp_crop(frame: np.ndarray, transform: SimilarityTransform,
              crop_box: tuple[float, float, float, float],
              size: int = WORK_SIZE) -> np.ndarray:
    """Warp a frame into the reference pose, crop and resize to size x size.

    Bilinear resampling; samples falling outside the frame take the border
    value 0, so output intensities stay within [0, 1].
    """
    x0, y0, x1, y1 = crop_box
    xs = np.linspace(x0, x1, size)
    ys = np.linspace(y0, y1, size)
    gx, gy = np.meshgrid(xs, ys)
    inv = transform.inverse()
    m = inv.matrix()
    src_x = m[0, 0] * gx + m[0, 1] * gy + m[0, 2]
    src_y = m[1, 0] * gx + m[1, 1] * gy + m[1, 2]
    return map_coordinates(frame, [src_y, src_x], order=1, mode="constant", cval=0.0)
