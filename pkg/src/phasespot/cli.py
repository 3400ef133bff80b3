"""Command-line entry point.

Subcommands: ``synth``, ``preprocess``, ``train``, ``spot``, ``eval`` and
``model-cost``.  Exit codes: 0 success, 1 usage error, 2 data error,
3 internal error.

Every invocation is deterministic for fixed seeds: running a subcommand twice
on identical inputs produces byte-identical outputs.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import evaluate, network, pipeline
from .config import load_configs
from .errors import DataError, UsageError
from .io import (load_frame_sequence, parse_annotations, parse_landmarks,
                 read_intervals, write_intervals, write_scores)
from .synthetic import random_spec, write_dataset


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits with 2; we reserve 2 for data
        raise UsageError(message)


def _add_config_flags(sub):
    sub.add_argument("--config", help="key=value config file")
    sub.add_argument("--level", dest="pyramid_level", help="pyramid level (1-based)")
    sub.add_argument("--accum-frames", dest="accum_frames",
                     help="motion accumulation span in frames")
    sub.add_argument("--cutoff-hz", dest="cutoff_hz", help="temporal lowpass cutoff")
    sub.add_argument("--peak-frac", dest="peak_frac",
                     help="adaptive threshold fraction in [0, 1]")
    sub.add_argument("--min-peak-distance", dest="min_peak_distance",
                     help="minimum frames between peaks (default: accumulation span)")
    sub.add_argument("--filter-kind", dest="filter_kind",
                     help="temporal filter: lowpass or bandpass")
    sub.add_argument("--no-align", action="store_const", const="false",
                     dest="use_alignment", help="skip landmark alignment")
    sub.add_argument("--full-image", action="store_const", const="false",
                     dest="use_roi", help="use the full frame instead of RoIs")
    sub.add_argument("--seed", dest="seed", help="random seed")


_CONFIG_KEYS = ("pyramid_level", "accum_frames", "cutoff_hz", "peak_frac",
                "min_peak_distance", "filter_kind", "use_alignment", "use_roi",
                "seed")


def _configs(args):
    overrides = {k: getattr(args, k, None) for k in _CONFIG_KEYS}
    return load_configs(getattr(args, "config", None), overrides)


def build_parser() -> _Parser:
    parser = _Parser(prog="phasespot",
                     description="Micro-expression spotting from Riesz-pyramid phase")
    commands = parser.add_subparsers(dest="command", required=True)

    synth = commands.add_parser("synth", help="generate a synthetic dataset")
    synth.add_argument("--out", required=True)
    synth.add_argument("--videos", type=int, default=4)
    synth.add_argument("--subjects", type=int, default=2)
    synth.add_argument("--frames", type=int, default=300)
    synth.add_argument("--jitter-bursts", type=int, default=0)
    synth.add_argument("--seed", type=int, default=0)

    pre = commands.add_parser("preprocess", help="frames + landmarks -> feature dump")
    pre.add_argument("--frames", required=True, help="directory of PNG frames")
    pre.add_argument("--landmarks", required=True, help="landmark CSV")
    pre.add_argument("--fps", type=float, default=30.0)
    pre.add_argument("--out", required=True, help="output feature directory")
    pre.add_argument("--video-id")
    pre.add_argument("--motion-dump",
                     help="also write accumulated-motion rasters to this directory")
    _add_config_flags(pre)

    train = commands.add_parser("train", help="train the spotting network")
    train.add_argument("--features", required=True, nargs="+",
                       help="feature dump directories (one per video)")
    train.add_argument("--annotations", required=True)
    train.add_argument("--out", required=True, help="weights file")
    train.add_argument("--epochs", type=int)
    train.add_argument("--learning-rate", type=float)
    train.add_argument("--batch-size", type=int)
    _add_config_flags(train)

    spot = commands.add_parser("spot", help="features + weights -> scores/intervals")
    spot.add_argument("--features", required=True, help="feature dump directory")
    spot.add_argument("--weights", required=True)
    spot.add_argument("--fps", type=float, default=30.0)
    spot.add_argument("--video-id")
    spot.add_argument("--scores-out", required=True)
    spot.add_argument("--intervals-out", required=True)
    _add_config_flags(spot)

    ev = commands.add_parser("eval", help="score intervals against annotations")
    ev.add_argument("--intervals", required=True)
    ev.add_argument("--annotations", required=True)
    ev.add_argument("--report-out", help="optional per-video CSV report")

    commands.add_parser("model-cost", help="print parameter and FLOP counts")
    return parser


def _cmd_synth(args) -> int:
    rng = np.random.default_rng(args.seed)
    specs = []
    for i in range(args.videos):
        subject = f"s{i % args.subjects:02d}"
        specs.append(random_spec(
            video_id=f"v{i:02d}", subject_id=subject, rng=rng,
            n_frames=args.frames, jitter_bursts=args.jitter_bursts))
    write_dataset(specs, args.out)
    print(f"wrote {args.videos} videos under {args.out}")
    return 0


def _cmd_preprocess(args) -> int:
    run_cfg, _ = _configs(args)
    seq = load_frame_sequence(args.frames, fps=args.fps,
                              video_id=args.video_id or Path(args.frames).parent.name)
    landmarks = parse_landmarks(args.landmarks)
    result = pipeline.preprocess_video(seq, landmarks, run_cfg,
                                       keep_motion=args.motion_dump is not None)
    pipeline.write_feature_dump(result, args.out)
    if args.motion_dump:
        pipeline.write_motion_dump(result.motion_maps, result.start_frame,
                                   args.motion_dump)
    print(f"{result.video_id}: {len(result.feature_maps)} feature maps -> {args.out}")
    for stage, ms in result.stage_ms.items():
        print(f"  {stage:<18} {ms:8.3f} ms/frame")
    return 0


def _cmd_train(args) -> int:
    _, train_cfg = _configs(args)
    for name in ("epochs", "learning_rate", "batch_size"):
        value = getattr(args, name)
        if value is not None:
            setattr(train_cfg, name, value)
    annotations = parse_annotations(args.annotations)
    by_video: dict[str, list] = {}
    for ann in annotations:
        by_video.setdefault(ann.video_id, []).append(ann)
    all_features = []
    all_labels = []
    for fdir in args.features:
        result = pipeline.read_feature_dump(fdir)
        labels = network.make_labels(by_video.get(result.video_id, []),
                                     result.start_frame, result.total_frames)
        all_features.append(result.feature_maps)
        all_labels.append(labels)
    outcome = network.train(np.concatenate(all_features),
                            np.concatenate(all_labels), train_cfg)
    network.save_weights(outcome.weights, args.out)
    print(f"trained on {sum(map(len, all_labels))} frames; "
          f"final loss {outcome.epoch_losses[-1]:.6f} -> {args.out}")
    return 0


def _cmd_spot(args) -> int:
    run_cfg, _ = _configs(args)
    result = pipeline.read_feature_dump(args.features, fps=args.fps,
                                        video_id=args.video_id)
    weights = network.load_weights(args.weights)
    if result.start_frame != run_cfg.accum_frames:
        raise DataError(
            f"feature dump starts at frame {result.start_frame} but the "
            f"configured accumulation span is {run_cfg.accum_frames}")
    spotted = pipeline.spot_video(result, weights, run_cfg)
    write_scores(args.scores_out, spotted.scores.frames(), spotted.scores.values,
                 spotted.smoothed.values)
    write_intervals(args.intervals_out,
                    [(result.video_id, iv.onset, iv.offset, iv.peak)
                     for iv in spotted.intervals])
    print(f"{result.video_id}: threshold {spotted.threshold:.6f}, "
          f"{len(spotted.intervals)} interval(s)")
    return 0


def _cmd_eval(args) -> int:
    annotations = parse_annotations(args.annotations)
    predictions = read_intervals(args.intervals)
    gt_by_video: dict[str, list] = {}
    for ann in annotations:
        gt_by_video.setdefault(ann.video_id, []).append(ann)
    pred_by_video: dict[str, list] = {}
    for video_id, onset, offset, _peak in predictions:
        pred_by_video.setdefault(video_id, []).append((onset, offset))
    unmatched = sorted(set(pred_by_video) - set(gt_by_video))
    if unmatched:
        raise DataError(f"predictions reference unknown video ids: {unmatched}")
    per_video = {
        video_id: evaluate.match_and_count(pred_by_video.get(video_id, []), gts)
        for video_id, gts in gt_by_video.items()
    }
    print(evaluate.format_report(per_video))
    if args.report_out:
        evaluate.write_report_csv(per_video, args.report_out)
    return 0


def _cmd_model_cost(_args) -> int:
    cost = network.model_cost()
    print(f"parameters: {cost['parameters']}")
    print(f"forward FLOPs: {cost['flops']} "
          f"(conv MACs {cost['conv_macs']}, fc MACs {cost['fc_macs']})")
    return 0


_HANDLERS = {
    "synth": _cmd_synth,
    "preprocess": _cmd_preprocess,
    "train": _cmd_train,
    "spot": _cmd_spot,
    "eval": _cmd_eval,
    "model-cost": _cmd_model_cost,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _HANDLERS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - report and exit 3, never traceback
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
