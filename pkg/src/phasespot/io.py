"""File ingestion and output for frame sequences, annotations, landmarks and rasters.

Formats
-------
- Frames: ``<dir>/<zero-padded index>.png``, 8-bit gray or color; color is
  reduced to luma with weights 0.299/0.587/0.114 and scaled to [0, 1].
- Annotations CSV: header ``video_id,subject_id,onset,apex,offset`` (apex may
  be empty).
- Landmarks CSV: header ``frame,x0,y0,...,x67,y67``.
- Scores CSV: header ``frame,score,smoothed_score``.
- Intervals CSV: header ``video_id,onset,offset,peak``.
- Raster dump: 8-byte ASCII magic, two little-endian uint32 dimensions
  (height, width), then ``3 * height * width`` little-endian float32 values,
  row-major, one plane per channel.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DataError

LUMA_WEIGHTS = (0.299, 0.587, 0.114)

MOTION_MAGIC = b"RMESPHS1"
FEATURE_MAGIC = b"RMESFTR1"


@dataclass
class FrameSequence:
    """An ordered grayscale frame stack for one video."""

    video_id: str
    subject_id: str
    fps: float
    frames: np.ndarray  # (T, H, W) float in [0, 1]

    def __post_init__(self) -> None:
        if self.fps <= 0:
            raise DataError(f"{self.video_id}: fps must be positive")
        if self.frames.ndim != 3:
            raise DataError(f"{self.video_id}: frames must be a (T, H, W) stack")
        if len(self.frames) < 2:
            raise DataError(f"{self.video_id}: need at least 2 frames")

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def shape(self) -> tuple[int, int]:
        return self.frames.shape[1], self.frames.shape[2]


@dataclass(frozen=True)
class MEAnnotation:
    """Ground-truth micro-expression interval, frame indices, onset < offset."""

    video_id: str
    onset: int
    offset: int
    apex: int | None = None
    subject_id: str = ""

    def __post_init__(self) -> None:
        if self.onset >= self.offset:
            raise DataError(
                f"{self.video_id}: onset {self.onset} must precede offset {self.offset}")
        if self.apex is not None and not self.onset <= self.apex <= self.offset:
            raise DataError(f"{self.video_id}: apex {self.apex} outside [onset, offset]")

    @property
    def interval(self) -> tuple[float, float]:
        return float(self.onset), float(self.offset)


@dataclass
class LandmarkTrack:
    """Per-frame 68-point (x, y) landmark coordinates."""

    points: np.ndarray  # (T, 68, 2)

    def __post_init__(self) -> None:
        if self.points.ndim != 3 or self.points.shape[1:] != (68, 2):
            raise DataError("landmark track must have shape (T, 68, 2)")
        if not np.all(np.isfinite(self.points)):
            raise DataError("landmark coordinates must be finite")

    def __len__(self) -> int:
        return len(self.points)

    def __getitem__(self, frame: int) -> np.ndarray:
        return self.points[frame]


def _to_gray(arr: np.ndarray) -> np.ndarray:
    if arr.ndim == 2:
        gray = arr.astype(np.float64)
    elif arr.ndim == 3:
        rgb = arr[..., :3].astype(np.float64)
        gray = rgb @ np.asarray(LUMA_WEIGHTS)
    else:
        raise DataError("unsupported image layout")
    return gray / 255.0


def load_frame_sequence(directory: str | Path, fps: float,
                        video_id: str | None = None,
                        subject_id: str = "") -> FrameSequence:
    """Load a lexicographically ordered directory of PNG frames.

    Raises :class:`DataError` for an empty directory, undecodable files or
    mixed resolutions; each case is reported with the offending path.
    """
    directory = Path(directory)
    paths = sorted(p for p in directory.glob("*.png") if p.is_file())
    if not paths:
        raise DataError(f"no frames in {directory}")
    frames = []
    shape = None
    for p in paths:
        try:
            with Image.open(p) as img:
                arr = np.asarray(img)
        except Exception as exc:
            raise DataError(f"cannot decode frame {p}: {exc}") from exc
        gray = _to_gray(arr)
        if shape is None:
            shape = gray.shape
        elif gray.shape != shape:
            raise DataError(
                f"resolution mismatch: {p} is {gray.shape[::-1]}, expected {shape[::-1]}")
        frames.append(gray)
    return FrameSequence(
        video_id=video_id or directory.name,
        subject_id=subject_id,
        fps=fps,
        frames=np.stack(frames),
    )


def write_frame_sequence(seq: FrameSequence, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    width = max(6, len(str(len(seq) - 1)))
    for i, frame in enumerate(seq.frames):
        img = Image.fromarray(np.clip(np.round(frame * 255.0), 0, 255).astype(np.uint8))
        img.save(directory / f"{i:0{width}d}.png")


def parse_annotations(path: str | Path) -> list[MEAnnotation]:
    """Parse the annotation CSV; rows violating onset < offset name their row."""
    annotations = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return []
        expected = ["video_id", "subject_id", "onset", "apex", "offset"]
        if [h.strip() for h in header] != expected:
            raise DataError(f"{path}: expected header {','.join(expected)}")
        for rownum, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 5:
                raise DataError(f"{path}:{rownum}: expected 5 columns, got {len(row)}")
            video_id, subject_id, onset, apex, offset = (c.strip() for c in row)
            try:
                ann = MEAnnotation(
                    video_id=video_id,
                    subject_id=subject_id,
                    onset=int(onset),
                    apex=int(apex) if apex else None,
                    offset=int(offset),
                )
            except (ValueError, DataError) as exc:
                raise DataError(f"{path}:{rownum}: {exc}") from exc
            annotations.append(ann)
    return annotations


def write_annotations(annotations: list[MEAnnotation], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["video_id", "subject_id", "onset", "apex", "offset"])
        for a in annotations:
            writer.writerow([a.video_id, a.subject_id, a.onset,
                             "" if a.apex is None else a.apex, a.offset])


def parse_landmarks(path: str | Path) -> LandmarkTrack:
    """Parse the landmark CSV into a (T, 68, 2) track.

    Frame indices must be contiguous from 0 so that row position equals the
    frame number; duplicates and gaps are rejected.
    """
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty landmark file")
        if len(header) != 137:
            raise DataError(f"{path}: expected 137 columns (frame + 68 pairs), "
                            f"got {len(header)}")
        for rownum, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 137:
                raise DataError(f"{path}:{rownum}: expected 137 columns, got {len(row)}")
            try:
                idx = int(row[0])
                coords = np.asarray([float(c) for c in row[1:]], dtype=np.float64)
            except ValueError as exc:
                raise DataError(f"{path}:{rownum}: {exc}") from exc
            rows.append((idx, rownum, coords))
    if not rows:
        raise DataError(f"{path}: no landmark rows")
    for pos, (idx, rownum, _) in enumerate(rows):
        if idx != pos:
            kind = "duplicate or non-monotone" if idx < pos else "missing"
            raise DataError(f"{path}:{rownum}: {kind} frame index {idx}")
    points = np.stack([c for _, _, c in rows]).reshape(-1, 68, 2)
    return LandmarkTrack(points=points)


def write_landmarks(track: LandmarkTrack, path: str | Path) -> None:
    header = ["frame"]
    for i in range(68):
        header += [f"x{i}", f"y{i}"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i, pts in enumerate(track.points):
            writer.writerow([i] + [f"{v:.9g}" for v in pts.ravel()])


def write_scores(path: str | Path, frames: np.ndarray, scores: np.ndarray,
                 smoothed: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame", "score", "smoothed_score"])
        for f, s, sm in zip(frames, scores, smoothed):
            writer.writerow([int(f), f"{s:.9g}", f"{sm:.9g}"])


def read_scores(path: str | Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    frames, scores, smoothed = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["frame", "score", "smoothed_score"]:
            raise DataError(f"{path}: bad scores header")
        for row in reader:
            frames.append(int(row[0]))
            scores.append(float(row[1]))
            smoothed.append(float(row[2]))
    return np.asarray(frames), np.asarray(scores), np.asarray(smoothed)


def write_intervals(path: str | Path, rows: list[tuple[str, int, int, int]]) -> None:
    """Write spotted intervals as (video_id, onset, offset, peak) rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["video_id", "onset", "offset", "peak"])
        for video_id, onset, offset, peak in rows:
            writer.writerow([video_id, int(onset), int(offset), int(peak)])


def read_intervals(path: str | Path) -> list[tuple[str, int, int, int]]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["video_id", "onset", "offset", "peak"]:
            raise DataError(f"{path}: bad intervals header")
        for rownum, row in enumerate(reader, start=2):
            if len(row) != 4:
                raise DataError(f"{path}:{rownum}: expected 4 columns")
            out.append((row[0], int(row[1]), int(row[2]), int(row[3])))
    return out


def write_raster(path: str | Path, planes: np.ndarray, magic: bytes) -> None:
    """Write a (3, H, W) float32 raster with the given 8-byte magic."""
    planes = np.ascontiguousarray(planes, dtype="<f4")
    if planes.ndim != 3 or planes.shape[0] != 3:
        raise ValueError("raster planes must have shape (3, H, W)")
    if len(magic) != 8:
        raise ValueError("magic must be 8 bytes")
    _, h, w = planes.shape
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(struct.pack("<II", h, w))
        fh.write(planes.tobytes())


def read_raster(path: str | Path, magic: bytes) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < 16 or data[:8] != magic:
        raise DataError(f"{path}: bad raster magic (expected {magic!r})")
    h, w = struct.unpack("<II", data[8:16])
    expected = 16 + 3 * h * w * 4
    if len(data) != expected:
        raise DataError(f"{path}: truncated raster ({len(data)} bytes, expected {expected})")
    planes = np.frombuffer(data[16:], dtype="<f4").reshape(3, h, w)
    return planes.astype(np.float64)
