"""End-to-end per-video processing: frames to features, features to intervals.

Stages communicate through ordered frame-indexed arrays.  Feature map m (for
m = span .. T-1) summarizes the motion between frames m-span and m, so a
video of T frames yields T - span feature maps and scores.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import evaluate
from . import features as feats
from . import motion, network, postprocess, pyramid
from .align import (SimilarityTransform, compute_alignment, face_crop_box,
                    map_to_crop, warp_crop)
from .config import RunConfig
from .errors import DataError
from .io import (FEATURE_MAGIC, MOTION_MAGIC, FrameSequence, LandmarkTrack,
                 read_raster, write_raster)


@dataclass
class PreprocessResult:
    """Normalized feature maps and bookkeeping for one video."""

    video_id: str
    feature_maps: np.ndarray  # (T - span, 30, 30, 3)
    start_frame: int          # == span
    total_frames: int
    fps: float
    stage_ms: dict[str, float] = field(default_factory=dict)
    motion_maps: list[motion.AccumulatedMotion] | None = None

    @property
    def frame_indices(self) -> np.ndarray:
        return np.arange(self.start_frame, self.total_frames)


@dataclass
class SpotResult:
    video_id: str
    scores: postprocess.ScoreSequence
    smoothed: postprocess.ScoreSequence
    threshold: float
    peaks: list[int]
    intervals: list[postprocess.SpottedInterval]


def _median_ms(samples: list[float]) -> float:
    return float(np.median(samples) * 1e3) if samples else 0.0


def preprocess_video(seq: FrameSequence, landmarks: LandmarkTrack,
                     cfg: RunConfig, keep_motion: bool = False) -> PreprocessResult:
    """Align, decompose, difference, filter, accumulate and crop one video.

    With ``keep_motion`` the accumulated (u, v, magnitude) maps are retained
    on the result for the debug raster dump.
    """
    t_total = len(seq)
    if len(landmarks) != t_total:
        raise DataError(
            f"{seq.video_id}: {len(landmarks)} landmark rows for {t_total} frames")
    span = cfg.accum_frames
    if t_total <= span:
        raise DataError(f"{seq.video_id}: need more than {span} frames, got {t_total}")

    reference = landmarks[0]
    crop_box = face_crop_box(reference)
    aligned_landmarks = map_to_crop(reference, crop_box)

    align_times: list[float] = []
    pyramid_times: list[float] = []
    diff_times: list[float] = []

    quats = None
    u_series = np.empty((t_total - 1,) + (0, 0))
    v_series = np.empty_like(u_series)
    for t in range(t_total):
        tic = time.perf_counter()
        transform = (compute_alignment(landmarks[t], reference)
                     if cfg.use_alignment else SimilarityTransform.identity())
        working = warp_crop(seq.frames[t], transform, crop_box)
        align_times.append(time.perf_counter() - tic)

        tic = time.perf_counter()
        subband = pyramid.subband_at_level(working, cfg.pyramid_level)
        level = pyramid.riesz_level(subband)
        current = pyramid.to_unit_quaternions(level)
        pyramid_times.append(time.perf_counter() - tic)

        tic = time.perf_counter()
        if quats is not None:
            step = motion.phase_difference(current, quats)
            if u_series.shape[1:] != step.u.shape:
                u_series = np.empty((t_total - 1,) + step.u.shape)
                v_series = np.empty_like(u_series)
            u_series[t - 1] = step.u
            v_series[t - 1] = step.v
        quats = current
        diff_times.append(time.perf_counter() - tic)

    tic = time.perf_counter()
    u_filt = motion.temporal_filter(u_series, cfg.cutoff_hz, seq.fps,
                                    kind=cfg.filter_kind, low_hz=cfg.bandpass_low_hz)
    v_filt = motion.temporal_filter(v_series, cfg.cutoff_hz, seq.fps,
                                    kind=cfg.filter_kind, low_hz=cfg.bandpass_low_hz)
    accumulated = motion.accumulate_series(u_filt, v_filt, span)
    filter_ms = (time.perf_counter() - tic) * 1e3 / t_total

    tic = time.perf_counter()
    roi = feats.roi_boxes_from_landmarks(aligned_landmarks) if cfg.use_roi else None
    maps = np.stack([feats.extract_features(acc, roi, cfg.pyramid_level)
                     for acc in accumulated])
    maps = feats.zscore_normalize(maps, scope=cfg.zscore_scope)
    feature_ms = (time.perf_counter() - tic) * 1e3 / t_total

    stage_ms = {
        "align": _median_ms(align_times),
        "pyramid": _median_ms(pyramid_times),
        "phase_diff": _median_ms(diff_times),
        "filter_accumulate": filter_ms,
        "features": feature_ms,
    }
    stage_ms["total_per_frame"] = sum(stage_ms.values())
    return PreprocessResult(
        video_id=seq.video_id,
        feature_maps=maps,
        start_frame=span,
        total_frames=t_total,
        fps=seq.fps,
        stage_ms=stage_ms,
        motion_maps=accumulated if keep_motion else None,
    )


def spot_video(result: PreprocessResult, weights: network.Weights,
               cfg: RunConfig) -> SpotResult:
    """Score the features, smooth, threshold and emit spotted intervals."""
    raw = network.forward(result.feature_maps, weights)
    scores = postprocess.ScoreSequence(raw, result.start_frame, result.fps,
                                       cfg.accum_frames)
    smoothed = postprocess.smooth(scores, edge_policy=cfg.edge_policy)
    height = postprocess.threshold(smoothed, cfg.peak_frac)
    peaks = postprocess.detect_peaks(smoothed, height, cfg.peak_distance)
    intervals = postprocess.peaks_to_intervals(peaks, cfg.accum_frames,
                                               result.total_frames)
    return SpotResult(video_id=result.video_id, scores=scores, smoothed=smoothed,
                      threshold=height, peaks=peaks, intervals=intervals)


def half_mean_me_length(annotations) -> int:
    """The natural accumulation span: half the mean annotated ME length."""
    lengths = [a.offset - a.onset for a in annotations]
    if not lengths:
        raise DataError("no annotations to derive a span from")
    return max(1, int(round(float(np.mean(lengths)) / 2.0)))


def write_feature_dump(result: PreprocessResult, directory: str | Path) -> None:
    """One raster file per frame, channels-first, named by absolute frame index."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for frame, fmap in zip(result.frame_indices, result.feature_maps):
        write_raster(directory / f"{frame:06d}.ftr",
                     np.moveaxis(fmap, -1, 0), FEATURE_MAGIC)


def read_feature_dump(directory: str | Path, fps: float = 30.0,
                      video_id: str | None = None) -> PreprocessResult:
    directory = Path(directory)
    paths = sorted(directory.glob("*.ftr"))
    if not paths:
        raise DataError(f"no feature rasters in {directory}")
    frames = []
    maps = []
    for p in paths:
        try:
            frames.append(int(p.stem))
        except ValueError:
            raise DataError(f"{p}: feature file name must be a frame index") from None
        maps.append(np.moveaxis(read_raster(p, FEATURE_MAGIC), 0, -1))
    frames_arr = np.asarray(frames)
    if not np.array_equal(np.diff(frames_arr), np.ones(len(frames_arr) - 1, dtype=int)):
        raise DataError(f"{directory}: feature frames are not contiguous")
    start = int(frames_arr[0])
    return PreprocessResult(
        video_id=video_id or directory.name,
        feature_maps=np.stack(maps),
        start_frame=start,
        total_frames=int(frames_arr[-1]) + 1,
        fps=fps,
    )


def write_motion_dump(accumulated: list[motion.AccumulatedMotion],
                      start_frame: int, directory: str | Path) -> None:
    """Debug dump of accumulated (u, v, magnitude) maps, one raster per frame."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for offset, acc in enumerate(accumulated):
        planes = np.stack([acc.u, acc.v, acc.magnitude])
        write_raster(directory / f"{start_frame + offset:06d}.phs", planes,
                     MOTION_MAGIC)


@dataclass
class FoldResult:
    held_out_subject: str
    counts: dict[str, evaluate.VideoCounts]


def run_loso(videos: dict[str, tuple[PreprocessResult, np.ndarray, list]],
             subjects: dict[str, str], run_cfg: RunConfig,
             train_cfg=None) -> list[FoldResult]:
    """Leave-one-subject-out training and evaluation over preprocessed videos.

    `videos` maps video_id to (preprocessed, labels, annotations); `subjects`
    maps video_id to its subject.  Each fold trains from scratch on every
    other subject's videos and spots the held-out subject's videos.  Folds
    are independent, so results do not depend on evaluation order.
    """
    from . import evaluate

    folds = evaluate.loso_folds(sorted((v, s) for v, s in subjects.items()))
    results = []
    for fold in folds:
        features = np.concatenate(
            [videos[v][0].feature_maps for v in fold.train_videos])
        labels = np.concatenate([videos[v][1] for v in fold.train_videos])
        weights = network.train(features, labels, train_cfg).weights
        counts = {}
        for video_id in fold.test_videos:
            result, _, annotations = videos[video_id]
            spotted = spot_video(result, weights, run_cfg)
            counts[video_id] = evaluate.match_and_count(spotted.intervals,
                                                        annotations)
        results.append(FoldResult(held_out_subject=fold.held_out_subject,
                                  counts=counts))
    return results


def write_fold_report(results: list[FoldResult], path: str | Path) -> None:
    """Per-fold and aggregate CSV for a LOSO run."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fold_subject", "ground_truth", "spotted", "tp",
                         "precision", "recall", "f1"])
        everything = []
        for fold in results:
            counts = list(fold.counts.values())
            everything.extend(counts)
            precision, recall, score = evaluate.f1(counts)
            writer.writerow([fold.held_out_subject,
                             sum(c.ground_truth for c in counts),
                             sum(c.spotted for c in counts),
                             sum(c.true_positives for c in counts),
                             f"{precision:.6f}", f"{recall:.6f}", f"{score:.6f}"])
        precision, recall, score = evaluate.f1(everything)
        writer.writerow(["ALL", sum(c.ground_truth for c in everything),
                         sum(c.spotted for c in everything),
                         sum(c.true_positives for c in everything),
                         f"{precision:.6f}", f"{recall:.6f}", f"{score:.6f}"])
