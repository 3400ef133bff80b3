"""Synthetic image sequences with analytically known motion.

Two generators back the test suite and demos:

- :func:`gen_translating_sinusoid` renders a drifting sinusoidal grating by
  evaluating the cosine at shifted coordinates, so there is no resampling
  error and the per-frame phase rate is exactly 2*pi*speed/wavelength.
- :func:`gen_micro_motion_video` warps a band-limited noise texture with
  localized Gaussian displacement bumps that swell and fade with a
  raised-cosine time profile, mimicking micro-expression events.  A static
  schematic 68-landmark layout is emitted so the alignment and RoI stages run
  unmodified, and every event sits inside the synthetic eyebrow or mouth
  region.  Optional global translation bursts simulate head motion for the
  alignment ablation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.ndimage import map_coordinates

from .align import face_crop_box, map_to_crop
from .errors import DataError
from .features import roi_boxes_from_landmarks
from .io import (FrameSequence, LandmarkTrack, MEAnnotation, write_annotations,
                 write_frame_sequence, write_landmarks)

CANVAS_MARGIN = 8


@dataclass(frozen=True)
class MotionEvent:
    """A localized motion bump: where, how wide, how far, and when."""

    center: tuple[float, float]  # (x, y) in frame coordinates
    sigma: float                 # spatial extent, px
    peak_displacement: float     # px at the temporal apex
    onset: int
    offset: int

    @property
    def duration(self) -> int:
        return self.offset - self.onset


@dataclass(frozen=True)
class JitterBurst:
    """A global translation excursion of the whole frame (simulated head motion)."""

    center_frame: int
    duration: int
    dx: float
    dy: float


@dataclass
class SynthSpec:
    """Parameters of one synthetic micro-motion video."""

    size: tuple[int, int] = (224, 224)
    fps: float = 30.0
    n_frames: int = 300
    pattern: str = "textured-noise"  # or "sinusoid"
    wavelength: float = 18.0
    angle: float = 0.0
    events: list[MotionEvent] = field(default_factory=list)
    jitter: list[JitterBurst] = field(default_factory=list)
    noise_sigma: float = 0.002
    seed: int = 0
    video_id: str = "synth"
    subject_id: str = "s00"

    def __post_init__(self) -> None:
        if self.wavelength < 4:
            raise DataError("wavelength must be at least 4 px")
        h, w = self.size
        for ev in self.events:
            if ev.duration < 3:
                raise DataError("event duration must be at least 3 frames")
            if not (0 <= ev.onset < ev.offset < self.n_frames):
                raise DataError("event outside video bounds")
            x, y = ev.center
            if not (0 <= x < w and 0 <= y < h):
                raise DataError("event center outside frame")
            if ev.peak_displacement > self.wavelength / 4:
                raise DataError("peak displacement exceeds wavelength/4")
        for i, a in enumerate(self.events):
            for b in self.events[i + 1:]:
                time_overlap = a.onset < b.offset and b.onset < a.offset
                dist = math.hypot(a.center[0] - b.center[0], a.center[1] - b.center[1])
                if time_overlap and dist < 3.0 * (a.sigma + b.sigma):
                    raise DataError("overlapping events on the same pixel region")


def gen_translating_sinusoid(wavelength: float, speed: float, angle: float,
                             n_frames: int, size: tuple[int, int] = (128, 128),
                             fps: float = 30.0,
                             video_id: str = "sinusoid") -> tuple[FrameSequence, float]:
    """Analytically rendered drifting grating plus its expected phase rate.

    The expected rate is 2*pi*speed/wavelength radians per frame, the
    magnitude of the per-frame phase step along the motion direction;
    reversing the speed negates it.
    """
    if wavelength < 4:
        raise DataError("wavelength must be at least 4 px")
    if abs(speed) > wavelength / 4:
        raise DataError("per-frame displacement must stay below wavelength/4")
    h, w = size
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    proj = xs * math.cos(angle) + ys * math.sin(angle)
    k = 2.0 * math.pi / wavelength
    frames = np.empty((n_frames, h, w))
    for t in range(n_frames):
        frames[t] = 0.5 + 0.4 * np.cos(k * (proj - speed * t))
    expected_rate = 2.0 * math.pi * speed / wavelength
    return FrameSequence(video_id=video_id, subject_id="synthetic", fps=fps,
                         frames=frames), expected_rate


def landmark_layout(size: tuple[int, int] = (224, 224)) -> np.ndarray:
    """A static schematic 68-point face layout filling most of the frame."""
    h, w = size
    sx, sy = w / 224.0, h / 224.0
    pts = np.zeros((68, 2))
    theta = np.linspace(math.radians(160), math.radians(380), 17)
    pts[0:17, 0] = 112 + 88 * np.cos(theta)
    pts[0:17, 1] = 108 + 94 * np.sin(theta)
    brow_arc = 5.0 * np.sin(np.linspace(0, math.pi, 5))
    pts[17:22, 0] = np.linspace(56, 98, 5)
    pts[17:22, 1] = 78 - brow_arc
    pts[22:27, 0] = np.linspace(126, 168, 5)
    pts[22:27, 1] = 78 - brow_arc
    pts[27:31, 0] = 112
    pts[27:31, 1] = np.linspace(94, 126, 4)
    pts[31:36, 0] = np.linspace(98, 126, 5)
    pts[31:36, 1] = 134
    eye_angle = np.linspace(0, 2 * math.pi, 6, endpoint=False)
    pts[36:42, 0] = 82 + 13 * np.cos(eye_angle)
    pts[36:42, 1] = 98 + 5 * np.sin(eye_angle)
    pts[42:48, 0] = 142 + 13 * np.cos(eye_angle)
    pts[42:48, 1] = 98 + 5 * np.sin(eye_angle)
    outer = np.linspace(0, 2 * math.pi, 12, endpoint=False)
    pts[48:60, 0] = 112 + 34 * np.cos(outer)
    pts[48:60, 1] = 162 + 14 * np.sin(outer)
    inner = np.linspace(0, 2 * math.pi, 8, endpoint=False)
    pts[60:68, 0] = 112 + 20 * np.cos(inner)
    pts[60:68, 1] = 162 + 6 * np.sin(inner)
    pts[:, 0] *= sx
    pts[:, 1] *= sy
    return pts


def default_event_sites(size: tuple[int, int] = (224, 224)) -> list[tuple[float, float]]:
    """Candidate event centers inside the layout's eyebrow and mouth regions."""
    h, w = size
    sx, sy = w / 224.0, h / 224.0
    sites = [(77, 76), (147, 76), (88, 158), (136, 158), (112, 170)]
    return [(x * sx, y * sy) for x, y in sites]


def _raised_cosine(t: np.ndarray, onset: int, offset: int) -> np.ndarray:
    """0 at onset and offset, 1 at the midpoint."""
    phase = (t - onset) / (offset - onset)
    w = 0.5 * (1.0 - np.cos(2.0 * math.pi * phase))
    return np.where((t >= onset) & (t <= offset), w, 0.0)


def _band_noise_texture(shape: tuple[int, int], wavelength: float,
                        rng: np.random.Generator) -> np.ndarray:
    """Noise in a one-octave annulus around `wavelength`, plus a stripe floor.

    Pure isotropic noise leaves random patches with no vertically sensitive
    structure, so a vertical motion bump there is invisible to local phase
    (the aperture problem).  Mixing in horizontal stripes guarantees every
    region responds to the vertical event displacements.
    """
    h, w = shape
    noise = rng.standard_normal((h, w))
    fy = np.fft.fftfreq(h)[:, None]
    fx = np.fft.fftfreq(w)[None, :]
    radius = np.hypot(fx, fy) * 2.0 * math.pi
    k = 2.0 * math.pi / wavelength
    mask = (radius > k / 1.5) & (radius < k * 1.5)
    tex = np.real(np.fft.ifft2(np.fft.fft2(noise) * mask))
    tex /= max(np.abs(tex).std() * 3.0, 1e-12)
    ys = np.arange(h)[:, None] * np.ones((1, w))
    stripes = np.cos(2.0 * math.pi * ys / wavelength + rng.uniform(0, 2 * math.pi))
    tex = 0.55 * np.clip(tex, -1.0, 1.0) + 0.45 * stripes
    return 0.5 + 0.42 * tex


def gen_micro_motion_video(spec: SynthSpec
                           ) -> tuple[FrameSequence, list[MEAnnotation], LandmarkTrack]:
    """Render a textured sequence with known motion events and ground truth.

    Frames without active events or jitter are exact copies of the base
    texture (plus sensor noise), so most of the video renders cheaply.
    """
    h, w = spec.size
    rng = np.random.default_rng(spec.seed)
    m = CANVAS_MARGIN
    if spec.pattern == "textured-noise":
        canvas = _band_noise_texture((h + 2 * m, w + 2 * m), spec.wavelength, rng)
    elif spec.pattern == "sinusoid":
        ys, xs = np.mgrid[0:h + 2 * m, 0:w + 2 * m].astype(np.float64)
        proj = xs * math.cos(spec.angle) + ys * math.sin(spec.angle)
        canvas = 0.5 + 0.4 * np.cos(2.0 * math.pi * proj / spec.wavelength)
    else:
        raise DataError(f"unknown pattern {spec.pattern!r}")

    layout = landmark_layout(spec.size)
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    base = canvas[m:m + h, m:m + w]

    # Per-event static bump shapes, evaluated once.
    bumps = []
    for ev in spec.events:
        cx, cy = ev.center
        bumps.append(np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2.0 * ev.sigma ** 2)))

    frames = np.empty((spec.n_frames, h, w))
    track = np.empty((spec.n_frames, 68, 2))
    for t in range(spec.n_frames):
        t_arr = np.asarray(float(t))
        jitter_x = jitter_y = 0.0
        for burst in spec.jitter:
            on = burst.center_frame - burst.duration // 2
            off = on + burst.duration
            amp = float(_raised_cosine(t_arr, on, off))
            jitter_x += burst.dx * amp
            jitter_y += burst.dy * amp
        dy = 0.0  # events displace vertically, the dominant ME direction
        active = False
        for ev, bump in zip(spec.events, bumps):
            amp = float(_raised_cosine(t_arr, ev.onset, ev.offset))
            if amp > 0.0:
                active = True
                dy = dy + ev.peak_displacement * amp * bump
        if active or jitter_x or jitter_y:
            sample_y = ys + m - dy - jitter_y
            sample_x = xs + m - jitter_x
            frames[t] = map_coordinates(canvas, [sample_y, sample_x], order=1,
                                        mode="nearest")
        else:
            frames[t] = base
        if spec.noise_sigma > 0:
            frames[t] = frames[t] + spec.noise_sigma * rng.standard_normal((h, w))
        track[t] = layout + np.array([jitter_x, jitter_y])
    np.clip(frames, 0.0, 1.0, out=frames)

    annotations = [
        MEAnnotation(video_id=spec.video_id, subject_id=spec.subject_id,
                     onset=ev.onset, offset=ev.offset,
                     apex=(ev.onset + ev.offset) // 2)
        for ev in sorted(spec.events, key=lambda e: e.onset)
    ]
    seq = FrameSequence(video_id=spec.video_id, subject_id=spec.subject_id,
                        fps=spec.fps, frames=frames)
    _check_events_in_rois(spec, layout)
    return seq, annotations, LandmarkTrack(points=track)


def _check_events_in_rois(spec: SynthSpec, layout: np.ndarray) -> None:
    if not spec.events:
        return
    crop = face_crop_box(layout)
    aligned = map_to_crop(layout, crop)
    boxes = roi_boxes_from_landmarks(aligned)
    for ev in spec.events:
        x, y = map_to_crop(np.array(ev.center), crop)
        in_brow = (boxes.eyebrow_box[0] <= x <= boxes.eyebrow_box[2]
                   and boxes.eyebrow_box[1] <= y <= boxes.eyebrow_box[3])
        in_mouth = (boxes.mouth_box[0] <= x <= boxes.mouth_box[2]
                    and boxes.mouth_box[1] <= y <= boxes.mouth_box[3])
        if not (in_brow or in_mouth):
            raise DataError(f"event at {ev.center} falls outside the synthetic RoIs")


def random_spec(video_id: str, subject_id: str, rng: np.random.Generator,
                n_frames: int = 300, n_events: int | None = None,
                event_duration: int = 12, peak_displacement: float = 2.2,
                jitter_bursts: int = 0, jitter_amplitude: float = 3.0,
                size: tuple[int, int] = (224, 224)) -> SynthSpec:
    """A randomized event schedule over the default sites, events well apart."""
    if n_events is None:
        n_events = int(rng.integers(1, 4))
    sites = default_event_sites(size)
    site_idx = rng.choice(len(sites), size=min(n_events, len(sites)), replace=False)
    gap = event_duration + 28
    onset_lo = 15
    onset_hi = n_frames - event_duration - 10
    if onset_hi <= onset_lo:
        raise DataError(f"{n_frames} frames too short for {event_duration}-frame events")
    starts: list[int] = []
    attempts = 0
    while len(starts) < len(site_idx) and attempts < 1000:
        attempts += 1
        cand = int(rng.integers(onset_lo, onset_hi))
        if all(abs(cand - s) >= gap for s in starts):
            starts.append(cand)
    events = [
        MotionEvent(center=sites[i], sigma=float(rng.uniform(9.0, 11.0)),
                    peak_displacement=peak_displacement,
                    onset=start, offset=start + event_duration)
        for i, start in zip(site_idx, sorted(starts))
    ]
    jitter = []
    for _ in range(jitter_bursts):
        for _ in range(1000):
            cand = int(rng.integers(25, n_frames - 25))
            if all(abs(cand - (e.onset + e.offset) // 2) >= gap for e in events) and \
               all(abs(cand - b.center_frame) >= gap for b in jitter):
                angle = rng.uniform(0, 2 * math.pi)
                jitter.append(JitterBurst(
                    center_frame=cand, duration=14,
                    dx=jitter_amplitude * math.cos(angle),
                    dy=jitter_amplitude * math.sin(angle)))
                break
    return SynthSpec(size=size, n_frames=n_frames, events=events, jitter=jitter,
                     seed=int(rng.integers(0, 2 ** 31)), video_id=video_id,
                     subject_id=subject_id)


def write_dataset(specs: list[SynthSpec], root: str | Path) -> None:
    """Materialize videos as the standard frame-directory + CSV layout.

    Layout: ``root/annotations.csv`` plus per video
    ``root/videos/<video_id>/frames/*.png`` and ``.../landmarks.csv``.
    """
    root = Path(root)
    (root / "videos").mkdir(parents=True, exist_ok=True)
    all_annotations: list[MEAnnotation] = []
    for spec in specs:
        seq, annotations, track = gen_micro_motion_video(spec)
        vdir = root / "videos" / spec.video_id
        write_frame_sequence(seq, vdir / "frames")
        write_landmarks(track, vdir / "landmarks.csv")
        all_annotations.extend(annotations)
    write_annotations(all_annotations, root / "annotations.csv")
