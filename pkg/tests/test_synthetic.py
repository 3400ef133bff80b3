import numpy as np
import pytest

from phasespot import synthetic
from phasespot.align import face_crop_box, map_to_crop
from phasespot.errors import DataError
from phasespot.features import roi_boxes_from_landmarks
from phasespot.io import parse_annotations, parse_landmarks, load_frame_sequence


class TestTranslatingSinusoid:
    def test_static_video(self):
        seq, rate = synthetic.gen_translating_sinusoid(16.0, 0.0, 0.0, 8, (64, 64))
        assert rate == 0.0
        assert np.abs(seq.frames[0] - seq.frames[-1]).max() <= 1e-12

    def test_expected_rate_value(self):
        _, rate = synthetic.gen_translating_sinusoid(16.0, 0.5, 0.0, 8, (64, 64))
        assert rate == pytest.approx(0.19635, abs=1e-5)

    def test_reversing_speed_negates_rate(self):
        _, fwd = synthetic.gen_translating_sinusoid(16.0, 0.5, 0.0, 8, (64, 64))
        _, bwd = synthetic.gen_translating_sinusoid(16.0, -0.5, 0.0, 8, (64, 64))
        assert fwd == -bwd

    def test_frames_translate_exactly(self):
        seq, _ = synthetic.gen_translating_sinusoid(16.0, 1.0, 0.0, 4, (64, 64))
        # one pixel per frame: frame t+1 equals frame t shifted right by 1
        assert np.abs(seq.frames[1][:, 1:] - seq.frames[0][:, :-1]).max() <= 1e-12

    def test_excessive_speed_rejected(self):
        with pytest.raises(DataError, match="wavelength/4"):
            synthetic.gen_translating_sinusoid(16.0, 5.0, 0.0, 8, (64, 64))


class TestMicroMotionVideo:
    def _spec(self, **kw):
        sites = synthetic.default_event_sites((224, 224))
        events = kw.pop("events", [synthetic.MotionEvent(
            center=sites[2], sigma=10.0, peak_displacement=2.0, onset=30, offset=42)])
        return synthetic.SynthSpec(n_frames=kw.pop("n_frames", 80), events=events,
                                   seed=kw.pop("seed", 3), **kw)

    def test_zero_amplitude_events_static_video(self):
        spec = self._spec(events=[synthetic.MotionEvent(
            center=(112.0, 160.0), sigma=10.0, peak_displacement=0.0,
            onset=30, offset=42)], noise_sigma=0.0)
        seq, _, _ = synthetic.gen_micro_motion_video(spec)
        assert np.abs(seq.frames[35] - seq.frames[0]).max() <= 1e-9

    def test_annotations_equal_event_intervals(self):
        spec = self._spec()
        _, anns, _ = synthetic.gen_micro_motion_video(spec)
        assert [(a.onset, a.offset) for a in anns] == [(30, 42)]

    def test_peak_displacement_at_temporal_midpoint(self):
        spec = self._spec(noise_sigma=0.0)
        seq, _, _ = synthetic.gen_micro_motion_video(spec)
        deviation = [np.abs(seq.frames[t] - seq.frames[0]).max()
                     for t in range(30, 43)]
        assert int(np.argmax(deviation)) + 30 == 36

    def test_landmarks_static_without_jitter(self):
        _, _, track = synthetic.gen_micro_motion_video(self._spec())
        assert np.abs(track.points - track.points[0]).max() == 0.0

    def test_jitter_moves_landmarks(self):
        spec = self._spec(jitter=[synthetic.JitterBurst(center_frame=50,
                                                        duration=14, dx=3.0, dy=0.0)])
        seq, _, track = synthetic.gen_micro_motion_video(spec)
        assert np.abs(track.points[50] - track.points[0]).max() >= 2.0
        assert np.abs(track.points[5] - track.points[0]).max() == 0.0

    def test_events_must_lie_in_rois(self):
        spec = self._spec(events=[synthetic.MotionEvent(
            center=(10.0, 10.0), sigma=8.0, peak_displacement=1.5,
            onset=20, offset=32)])
        with pytest.raises(DataError, match="outside the synthetic RoIs"):
            synthetic.gen_micro_motion_video(spec)

    def test_overlapping_same_region_events_rejected(self):
        site = synthetic.default_event_sites((224, 224))[2]
        events = [
            synthetic.MotionEvent(center=site, sigma=10.0, peak_displacement=1.5,
                                  onset=20, offset=32),
            synthetic.MotionEvent(center=site, sigma=10.0, peak_displacement=1.5,
                                  onset=28, offset=40),
        ]
        with pytest.raises(DataError, match="overlapping events"):
            self._spec(events=events)

    def test_disjoint_times_same_region_allowed(self):
        site = synthetic.default_event_sites((224, 224))[2]
        events = [
            synthetic.MotionEvent(center=site, sigma=10.0, peak_displacement=1.5,
                                  onset=10, offset=22),
            synthetic.MotionEvent(center=site, sigma=10.0, peak_displacement=1.5,
                                  onset=40, offset=52),
        ]
        _, anns, _ = synthetic.gen_micro_motion_video(self._spec(events=events))
        assert len(anns) == 2

    def test_accumulated_magnitude_peaks_near_apex(self):
        # events of duration 2K: the span-K magnitude crests at the apex and
        # again at the offset; some local maximum must sit within 2 frames
        # of the apex
        from phasespot import RunConfig, preprocess_video

        spec = self._spec(n_frames=100)
        seq, anns, track = synthetic.gen_micro_motion_video(spec)
        res = preprocess_video(seq, track, RunConfig(accum_frames=6))
        mag = np.abs(res.feature_maps[..., 2]).mean(axis=(1, 2))
        local_max = [i + res.start_frame for i in range(1, len(mag) - 1)
                     if mag[i] >= mag[i - 1] and mag[i] >= mag[i + 1]
                     and mag[i] > 0.5 * mag.max()]
        apex = (30 + 42) // 2
        assert min(abs(f - apex) for f in local_max) <= 2


class TestLandmarkLayout:
    def test_shape_and_bounds(self):
        pts = synthetic.landmark_layout((224, 224))
        assert pts.shape == (68, 2)
        assert pts.min() >= 0 and pts.max() <= 223

    def test_event_sites_inside_roi_boxes(self):
        layout = synthetic.landmark_layout((224, 224))
        crop = face_crop_box(layout)
        aligned = map_to_crop(layout, crop)
        boxes = roi_boxes_from_landmarks(aligned)
        for site in synthetic.default_event_sites((224, 224)):
            x, y = map_to_crop(np.array(site), crop)
            in_brow = (boxes.eyebrow_box[0] <= x <= boxes.eyebrow_box[2]
                       and boxes.eyebrow_box[1] <= y <= boxes.eyebrow_box[3])
            in_mouth = (boxes.mouth_box[0] <= x <= boxes.mouth_box[2]
                        and boxes.mouth_box[1] <= y <= boxes.mouth_box[3])
            assert in_brow or in_mouth


class TestWriteDataset:
    def test_standard_layout_roundtrips(self, tmp_path, rng):
        specs = [synthetic.random_spec(f"v{i}", f"s{i}", rng, n_frames=40,
                                       n_events=1)
                 for i in range(2)]
        synthetic.write_dataset(specs, tmp_path)
        anns = parse_annotations(tmp_path / "annotations.csv")
        assert {a.video_id for a in anns} == {"v0", "v1"}
        for spec in specs:
            vdir = tmp_path / "videos" / spec.video_id
            seq = load_frame_sequence(vdir / "frames", fps=30.0)
            track = parse_landmarks(vdir / "landmarks.csv")
            assert len(seq) == 40
            assert len(track) == 40
