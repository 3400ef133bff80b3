"""Interval matching, precision/recall/F1 and leave-one-subject-out folds.

A spotted interval counts as a true positive when its IoU with a ground-truth
interval reaches 0.5, each side matched at most once.  Precision and recall
aggregate counts over all videos before dividing, so video order never
matters.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DataError
from .io import MEAnnotation
from .postprocess import SpottedInterval

Interval = tuple[float, float]


@dataclass(frozen=True)
class VideoCounts:
    """Ground-truth count, spotted count and true positives for one video."""

    ground_truth: int
    spotted: int
    true_positives: int

    def __post_init__(self) -> None:
        if not 0 <= self.true_positives <= min(self.ground_truth, self.spotted):
            raise ValueError("true positives exceed available intervals")

    @property
    def false_positives(self) -> int:
        return self.spotted - self.true_positives

    @property
    def false_negatives(self) -> int:
        return self.ground_truth - self.true_positives


@dataclass(frozen=True)
class Fold:
    """One leave-one-subject-out split."""

    held_out_subject: str
    train_videos: tuple[str, ...]
    test_videos: tuple[str, ...]


def interval_iou(a: Interval, b: Interval) -> float:
    """Intersection over union of two closed real intervals."""
    a0, a1 = float(a[0]), float(a[1])
    b0, b1 = float(b[0]), float(b[1])
    if a1 <= a0 or b1 <= b0:
        raise ValueError("intervals must have positive length")
    inter = min(a1, b1) - max(a0, b0)
    if inter <= 0:
        return 0.0
    union = max(a1, b1) - min(a0, b0)
    return inter / union


def _as_interval(x) -> Interval:
    if isinstance(x, MEAnnotation):
        return x.interval
    if isinstance(x, SpottedInterval):
        return float(x.onset), float(x.offset)
    return float(x[0]), float(x[1])


def _iou_pairs(preds: list[Interval], gts: list[Interval], thresh: float,
               strict: bool) -> list[tuple[float, int, int]]:
    pairs = []
    for pi, p in enumerate(preds):
        for gi, g in enumerate(gts):
            iou = interval_iou(p, g)
            admissible = iou > thresh if strict else iou >= thresh
            if admissible:
                pairs.append((iou, pi, gi))
    return pairs


def _greedy_tp(pairs: list[tuple[float, int, int]]) -> int:
    taken_p: set[int] = set()
    taken_g: set[int] = set()
    tp = 0
    for _, pi, gi in sorted(pairs, key=lambda t: (-t[0], t[1], t[2])):
        if pi in taken_p or gi in taken_g:
            continue
        taken_p.add(pi)
        taken_g.add(gi)
        tp += 1
    return tp


def _optimal_tp(pairs: list[tuple[float, int, int]]) -> int:
    """Maximum one-to-one matching size via augmenting paths."""
    adj: dict[int, list[int]] = {}
    for _, pi, gi in pairs:
        adj.setdefault(pi, []).append(gi)
    match_g: dict[int, int] = {}

    def try_assign(pi: int, seen: set[int]) -> bool:
        for gi in adj.get(pi, ()):
            if gi in seen:
                continue
            seen.add(gi)
            if gi not in match_g or try_assign(match_g[gi], seen):
                match_g[gi] = pi
                return True
        return False

    return sum(try_assign(pi, set()) for pi in adj)


def match_and_count(predictions, ground_truth, iou_threshold: float = 0.5,
                    strict: bool = False, method: str = "greedy") -> VideoCounts:
    """Match spotted intervals against annotations one-to-one.

    ``method="greedy"`` (production default) matches in descending IoU order;
    ``method="optimal"`` computes the maximum matching, used to validate the
    greedy path on small instances.  ``strict=True`` switches the admission
    rule from IoU >= threshold to IoU > threshold.
    """
    preds = [_as_interval(p) for p in predictions]
    gts = [_as_interval(g) for g in ground_truth]
    pairs = _iou_pairs(preds, gts, iou_threshold, strict)
    if method == "greedy":
        tp = _greedy_tp(pairs)
    elif method == "optimal":
        tp = _optimal_tp(pairs)
    else:
        raise ValueError(f"unknown matching method {method!r}")
    return VideoCounts(ground_truth=len(gts), spotted=len(preds), true_positives=tp)


def f1(counts) -> tuple[float, float, float]:
    """(precision, recall, F1) from one VideoCounts or an iterable of them.

    All three are zero whenever a denominator vanishes.
    """
    if isinstance(counts, VideoCounts):
        counts = [counts]
    tp = sum(c.true_positives for c in counts)
    spotted = sum(c.spotted for c in counts)
    truth = sum(c.ground_truth for c in counts)
    precision = tp / spotted if spotted else 0.0
    recall = tp / truth if truth else 0.0
    score = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, score


def f1_from_errors(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    """Metrics directly from aggregate TP/FP/FN counts."""
    return f1([VideoCounts(ground_truth=tp + fn, spotted=tp + fp, true_positives=tp)])


def loso_folds(videos: list[tuple[str, str]]) -> list[Fold]:
    """One fold per subject from (video_id, subject_id) pairs.

    Test sets partition the videos; each fold's held-out subject contributes
    no training videos.
    """
    seen = set()
    for video_id, _ in videos:
        if video_id in seen:
            raise DataError(f"duplicate video id {video_id}")
        seen.add(video_id)
    subjects = sorted({s for _, s in videos})
    if len(subjects) < 2:
        raise DataError("leave-one-subject-out needs at least 2 subjects")
    folds = []
    for subject in subjects:
        test = tuple(v for v, s in videos if s == subject)
        train = tuple(v for v, s in videos if s != subject)
        folds.append(Fold(held_out_subject=subject, train_videos=train,
                          test_videos=test))
    return folds


def format_report(per_video: dict[str, VideoCounts]) -> str:
    """Human-readable per-video and aggregate summary table."""
    lines = [f"{'video':<16}{'truth':>8}{'spotted':>9}{'TP':>5}{'FP':>5}{'FN':>5}"]
    for video_id in sorted(per_video):
        c = per_video[video_id]
        lines.append(f"{video_id:<16}{c.ground_truth:>8}{c.spotted:>9}"
                     f"{c.true_positives:>5}{c.false_positives:>5}{c.false_negatives:>5}")
    precision, recall, score = f1(per_video.values())
    lines.append("-" * 48)
    lines.append(f"precision {precision:.4f}  recall {recall:.4f}  F1 {score:.4f}")
    return "\n".join(lines)


def write_report_csv(per_video: dict[str, VideoCounts], path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["video_id", "ground_truth", "spotted", "tp", "fp", "fn"])
        for video_id in sorted(per_video):
            c = per_video[video_id]
            writer.writerow([video_id, c.ground_truth, c.spotted, c.true_positives,
                             c.false_positives, c.false_negatives])
        counts = list(per_video.values())
        writer.writerow(["TOTAL",
                         sum(c.ground_truth for c in counts),
                         sum(c.spotted for c in counts),
                         sum(c.true_positives for c in counts),
                         sum(c.false_positives for c in counts),
                         sum(c.false_negatives for c in counts)])
        precision, recall, score = f1(counts)
        writer.writerow(["METRICS",
                         f"precision={precision:.6f}", f"recall={recall:.6f}",
                         f"f1={score:.6f}", "", ""])
