"""Micro-expression spotting from Riesz-pyramid quaternionic phase.

The pipeline converts a face video into per-frame motion-likelihood scores
and spotted [onset, offset] intervals: landmark alignment, Laplacian pyramid
with an approximate Riesz transform, quaternionic phase differences filtered
and accumulated over a short span, eyebrow/mouth feature crops, a
three-stream shallow CNN, and adaptive peak detection.
"""

from .align import SimilarityTransform, compute_alignment, face_crop_box, warp_crop
from .config import RunConfig, TrainConfig, load_configs
from .errors import DataError, UsageError
from .evaluate import (Fold, VideoCounts, f1, f1_from_errors, interval_iou,
                       loso_folds, match_and_count)
from .features import FEATURE_SHAPE, RoiBoxes, extract_features, roi_boxes_from_landmarks, zscore_normalize
from .io import (FrameSequence, LandmarkTrack, MEAnnotation,
                 load_frame_sequence, parse_annotations, parse_landmarks)
from .motion import (AccumulatedMotion, QuatPhaseDiffMap, accumulate,
                     design_lowpass, phase_difference, temporal_filter)
from .network import (Weights, forward, init_weights, load_weights, make_labels,
                      model_cost, save_weights, train)
from .pipeline import (FoldResult, PreprocessResult, SpotResult,
                       half_mean_me_length, preprocess_video, run_loso,
                       spot_video, write_feature_dump, read_feature_dump)
from .postprocess import (ScoreSequence, SpottedInterval, detect_peaks,
                          peaks_to_intervals, smooth, threshold)
from .pyramid import (LaplacianPyramid, RieszLevel, UnitQuaternionField,
                      build_laplacian, collapse_laplacian, riesz_transform,
                      to_unit_quaternions)
from .synthetic import (JitterBurst, MotionEvent, SynthSpec,
                        gen_micro_motion_video, gen_translating_sinusoid,
                        landmark_layout, random_spec, write_dataset)

__version__ = "0.1.0"
