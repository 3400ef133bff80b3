import numpy as np
import pytest

from phasespot import (RunConfig, TrainConfig, make_labels, network, pipeline,
                       synthetic)
from phasespot.errors import DataError
from phasespot.io import MEAnnotation


@pytest.fixture(scope="module")
def small_video():
    rng = np.random.default_rng(5)
    spec = synthetic.random_spec("v00", "s00", rng, n_frames=90, n_events=1)
    seq, anns, track = synthetic.gen_micro_motion_video(spec)
    return seq, anns, track


@pytest.fixture(scope="module")
def preprocessed(small_video):
    seq, anns, track = small_video
    return pipeline.preprocess_video(seq, track, RunConfig())


class TestPreprocess:
    def test_feature_count_is_frames_minus_span(self, small_video, preprocessed):
        seq, _, _ = small_video
        assert len(preprocessed.feature_maps) == len(seq) - 6
        assert preprocessed.start_frame == 6
        assert preprocessed.feature_maps.shape[1:] == (30, 30, 3)

    def test_stage_timings_reported(self, preprocessed):
        for stage in ("align", "pyramid", "phase_diff", "filter_accumulate",
                      "features", "total_per_frame"):
            assert stage in preprocessed.stage_ms
            assert preprocessed.stage_ms[stage] >= 0.0

    def test_landmark_count_mismatch_rejected(self, small_video):
        seq, _, track = small_video
        from phasespot.io import LandmarkTrack

        short = LandmarkTrack(points=track.points[:-3])
        with pytest.raises(DataError, match="landmark rows"):
            pipeline.preprocess_video(seq, short, RunConfig())

    def test_deterministic(self, small_video):
        seq, _, track = small_video
        a = pipeline.preprocess_video(seq, track, RunConfig())
        b = pipeline.preprocess_video(seq, track, RunConfig())
        assert np.array_equal(a.feature_maps, b.feature_maps)

    def test_full_image_mode_same_shape(self, small_video):
        seq, _, track = small_video
        res = pipeline.preprocess_video(seq, track, RunConfig(use_roi=False))
        assert res.feature_maps.shape[1:] == (30, 30, 3)

    def test_no_alignment_mode_runs(self, small_video):
        seq, _, track = small_video
        res = pipeline.preprocess_video(seq, track, RunConfig(use_alignment=False))
        assert len(res.feature_maps) == len(seq) - 6


class TestSpot:
    def test_spot_emits_scores_and_intervals(self, small_video, preprocessed):
        seq, anns, _ = small_video
        labels = make_labels(anns, 6, len(seq))
        outcome = network.train(preprocessed.feature_maps, labels,
                                TrainConfig(epochs=8, seed=0))
        spotted = pipeline.spot_video(preprocessed, outcome.weights, RunConfig())
        assert len(spotted.scores) == len(seq) - 6
        assert len(spotted.smoothed) == len(spotted.scores)
        for iv in spotted.intervals:
            assert 0 <= iv.onset < iv.offset <= len(seq) - 1
            assert iv.onset == max(iv.peak - 6, 0)

    def test_strict_edges_shrink_sequence(self, small_video, preprocessed):
        seq, anns, _ = small_video
        weights = network.init_weights(0)
        spotted = pipeline.spot_video(preprocessed, weights,
                                      RunConfig(edge_policy="strict"))
        assert len(spotted.smoothed) == len(spotted.scores) - 12


class TestFeatureDump:
    def test_roundtrip(self, preprocessed, tmp_path):
        pipeline.write_feature_dump(preprocessed, tmp_path / "dump")
        back = pipeline.read_feature_dump(tmp_path / "dump", fps=30.0,
                                          video_id=preprocessed.video_id)
        assert back.start_frame == preprocessed.start_frame
        assert back.total_frames == preprocessed.total_frames
        assert np.abs(back.feature_maps -
                      preprocessed.feature_maps).max() <= 1e-6

    def test_empty_dir_rejected(self, tmp_path):
        (tmp_path / "empty").mkdir()
        with pytest.raises(DataError, match="no feature rasters"):
            pipeline.read_feature_dump(tmp_path / "empty")

    def test_gap_rejected(self, preprocessed, tmp_path):
        d = tmp_path / "gap"
        pipeline.write_feature_dump(preprocessed, d)
        victims = sorted(d.glob("*.ftr"))
        victims[3].unlink()
        with pytest.raises(DataError, match="contiguous"):
            pipeline.read_feature_dump(d)


class TestMotionDump:
    def test_motion_dump_written(self, tmp_path, rng):
        from phasespot.io import MOTION_MAGIC, read_raster
        from phasespot.motion import AccumulatedMotion

        maps = [AccumulatedMotion(u=rng.random((8, 8)), v=rng.random((8, 8)),
                                  magnitude=rng.random((8, 8)))
                for _ in range(3)]
        pipeline.write_motion_dump(maps, start_frame=6, directory=tmp_path / "m")
        files = sorted((tmp_path / "m").glob("*.phs"))
        assert [f.stem for f in files] == ["000006", "000007", "000008"]
        planes = read_raster(files[0], MOTION_MAGIC)
        assert np.abs(planes[0] - maps[0].u).max() <= 1e-6


class TestLosoOrchestration:
    def test_three_subject_run(self, tmp_path):
        rng = np.random.default_rng(21)
        cfg = RunConfig()
        videos = {}
        subjects = {}
        for i in range(3):
            vid = f"v{i}"
            spec = synthetic.random_spec(vid, f"s{i}", rng, n_frames=90,
                                         n_events=1)
            seq, anns, track = synthetic.gen_micro_motion_video(spec)
            res = pipeline.preprocess_video(seq, track, cfg)
            videos[vid] = (res, make_labels(anns, cfg.accum_frames, len(seq)), anns)
            subjects[vid] = f"s{i}"
        results = pipeline.run_loso(videos, subjects, cfg,
                                    TrainConfig(epochs=4, seed=0))
        assert len(results) == 3
        tested = {v for r in results for v in r.counts}
        assert tested == set(videos)
        pipeline.write_fold_report(results, tmp_path / "folds.csv")
        text = (tmp_path / "folds.csv").read_text()
        assert text.startswith("fold_subject")
        assert "ALL" in text


class TestMotionKeep:
    def test_motion_maps_optional(self, small_video):
        seq, _, track = small_video
        res = pipeline.preprocess_video(seq, track, RunConfig(), keep_motion=True)
        assert res.motion_maps is not None
        assert len(res.motion_maps) == len(seq) - 6
        plain = pipeline.preprocess_video(seq, track, RunConfig())
        assert plain.motion_maps is None

    def test_bandpass_filter_kind_runs(self, small_video):
        seq, _, track = small_video
        res = pipeline.preprocess_video(seq, track,
                                        RunConfig(filter_kind="bandpass"))
        assert len(res.feature_maps) == len(seq) - 6


class TestHalfMeanLength:
    def test_half_mean(self):
        anns = [MEAnnotation("v", 0, 12), MEAnnotation("v", 20, 36)]
        # lengths 12 and 16, mean 14, half 7
        assert pipeline.half_mean_me_length(anns) == 7

    def test_empty_rejected(self):
        with pytest.raises(DataError):
            pipeline.half_mean_me_length([])
