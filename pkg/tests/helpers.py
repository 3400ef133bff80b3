"""Independent reference implementations used as test oracles.

These deliberately avoid the production code paths: the Riesz oracle works in
the frequency domain, the peak oracle enumerates subsets, and the matching
oracle tries every assignment.  Keep them simple and obviously correct.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def exact_riesz(image: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Frequency-domain Riesz transform with transfer functions -i*w/|w|."""
    h, w = image.shape
    fy = np.fft.fftfreq(h)[:, None] * 2.0 * np.pi
    fx = np.fft.fftfreq(w)[None, :] * 2.0 * np.pi
    radius = np.hypot(fx, fy)
    radius[0, 0] = 1.0  # DC maps to zero response anyway
    spectrum = np.fft.fft2(image)
    r1 = np.real(np.fft.ifft2(spectrum * (-1j * fx / radius)))
    r2 = np.real(np.fft.ifft2(spectrum * (-1j * fy / radius)))
    return r1, r2


def band_limited_noise(shape: tuple[int, int], low: float, high: float,
                       rng: np.random.Generator) -> np.ndarray:
    """Unit-variance noise whose spectrum lives in the annulus [low, high] rad/px."""
    h, w = shape
    noise = rng.standard_normal((h, w))
    fy = np.fft.fftfreq(h)[:, None] * 2.0 * np.pi
    fx = np.fft.fftfreq(w)[None, :] * 2.0 * np.pi
    radius = np.hypot(fx, fy)
    mask = (radius >= low) & (radius <= high)
    out = np.real(np.fft.ifft2(np.fft.fft2(noise) * mask))
    return out / out.std()


def relative_l2(approx: np.ndarray, exact: np.ndarray, border: int = 8) -> float:
    """Interior relative L2 error between two equally shaped fields."""
    s = (slice(border, -border), slice(border, -border))
    num = float(np.sum((approx[s] - exact[s]) ** 2))
    den = float(np.sum(exact[s] ** 2))
    return math.sqrt(num / den)


def brute_force_peaks(values: np.ndarray, height: float, min_distance: int
                      ) -> list[int]:
    """Reference peak pruning by enumerating every admissible subset.

    Admissible: strict interior local maxima above `height`, pairwise at
    least `min_distance` apart.  Among admissible subsets the winner is the
    one whose height sequence, sorted descending (ties broken toward earlier
    frames), is lexicographically largest.
    """
    v = np.asarray(values, dtype=float)
    candidates = [i for i in range(1, len(v) - 1)
                  if v[i] > v[i - 1] and v[i] > v[i + 1] and v[i] > height]
    best_key: list[tuple[float, int]] | None = None
    best: tuple[int, ...] = ()
    for r in range(len(candidates) + 1):
        for subset in itertools.combinations(candidates, r):
            if any(abs(a - b) < min_distance
                   for a, b in itertools.combinations(subset, 2)):
                continue
            # rank subsets by their height multiset, tallest first; ties go
            # to the earlier frame; any extra compatible peak is a win
            key = sorted(((v[i], -i) for i in subset), reverse=True)
            if best_key is None or key > best_key:
                best_key = key
                best = subset
    return sorted(best)


def optimal_matching_tp(preds: list[tuple[float, float]],
                        gts: list[tuple[float, float]],
                        iou_threshold: float = 0.5) -> int:
    """Maximum one-to-one matching size over every subset of assignments.

    Dynamic program over predictions x all 2^|gts| ground-truth subsets;
    exhaustive and independent of the production greedy matcher.
    """
    def iou(a, b):
        inter = min(a[1], b[1]) - max(a[0], b[0])
        if inter <= 0:
            return 0.0
        return inter / (max(a[1], b[1]) - min(a[0], b[0]))

    admissible = [[iou(p, g) >= iou_threshold for g in gts] for p in preds]
    n_g = len(gts)
    best = {0: 0}  # used-gt bitmask -> matched count
    for row in admissible:
        nxt = dict(best)
        for mask, count in best.items():
            for gi in range(n_g):
                if row[gi] and not mask & (1 << gi):
                    m2 = mask | (1 << gi)
                    if nxt.get(m2, -1) < count + 1:
                        nxt[m2] = count + 1
        best = nxt
    return max(best.values())


def brute_force_labels(intervals: list[tuple[int, int]], span: int,
                       total_frames: int) -> np.ndarray:
    """Per-frame IoU labeling as a plain double loop."""
    labels = np.zeros(total_frames - span, dtype=np.int8)
    for pos, i in enumerate(range(span, total_frames)):
        window = (float(i - span), float(i))
        for onset, offset in intervals:
            inter = min(window[1], float(offset)) - max(window[0], float(onset))
            if inter <= 0:
                continue
            union = max(window[1], float(offset)) - min(window[0], float(onset))
            if inter / union >= 0.5:
                labels[pos] = 1
                break
    return labels


def gradcheck_case(n_samples: int = 3, margin: float = 5e-4,
                   base_seed: int = 0):
    """A (x, y, weights) triple whose loss-visible kinks sit safely away from
    their switching points, so central differences with eps = 1e-4 measure
    the same linear piece the analytic gradient lives on.

    The network is piecewise linear.  The kinks that can corrupt a finite
    difference are the fully-connected ReLUs, near-ties between a pool
    window's top two entries, and window maxima barely above zero; conv
    ReLUs hidden under a losing pool entry never reach the loss.  Cases
    violating the margins say nothing about gradient correctness and are
    resampled away.
    """
    from phasespot import network

    for seed in range(base_seed, base_seed + 400):
        rng = np.random.default_rng(seed)
        w = network.init_weights(seed + 1000)
        x = rng.standard_normal((n_samples, 30, 30, 3))
        y = rng.integers(0, 2, n_samples).astype(float)
        _, cache = network._forward_full(x, w)
        ok = abs(cache["fc1_pre"]).min() >= margin
        for act in cache["conv_act"]:
            if not ok:
                break
            f = act.shape[-1]
            windows = act.reshape(n_samples, 5, 6, 5, 6, f)
            flat_windows = windows.transpose(0, 1, 3, 5, 2, 4).reshape(-1, 36)
            top2 = np.partition(flat_windows, -2, axis=-1)[:, -2:]
            maxima, runners_up = top2[:, 1], top2[:, 0]
            live = maxima > 0
            ok = ok and not np.any(live & (maxima < margin))
            if live.any():
                ok = ok and (maxima - runners_up)[live].min() >= margin
        if ok:
            return x, y, w
    raise RuntimeError("no well-conditioned gradcheck case found")


def measured_phase_rate(frames: np.ndarray, level: int, border: int = 8
                        ) -> float:
    """Mean per-frame phase step over interior pixels at a pyramid level.

    Independent two-step path used by the synthetic oracle tests: subband,
    3-tap Riesz, quaternion normalization, then the mean imaginary-x of the
    frame-to-frame quaternion log.
    """
    from phasespot import motion, pyramid

    prev = None
    rates = []
    for frame in frames:
        sub = pyramid.subband_at_level(frame, level)
        quats = pyramid.to_unit_quaternions(pyramid.riesz_level(sub))
        if prev is not None:
            step = motion.phase_difference(quats, prev)
            rates.append(float(step.u[border:-border, border:-border].mean()))
        prev = quats
    return float(np.mean(rates))
