import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phasespot.align import (SimilarityTransform, compute_alignment,
                             face_crop_box, map_to_crop, warp_crop)


class TestComputeAlignment:
    def test_identity_fixed_point(self, reference_landmarks):
        t = compute_alignment(reference_landmarks, reference_landmarks)
        assert t.scale == pytest.approx(1.0, abs=1e-9)
        assert t.rotation == pytest.approx(0.0, abs=1e-9)
        assert np.allclose(t.translation, (0.0, 0.0), atol=1e-9)
        assert t.rms_residual < 1e-9

    def test_pure_translation(self, reference_landmarks):
        shifted = reference_landmarks + np.array([5.0, 0.0])
        t = compute_alignment(shifted, reference_landmarks)
        assert t.scale == pytest.approx(1.0, abs=1e-9)
        assert t.rotation == pytest.approx(0.0, abs=1e-9)
        assert np.allclose(t.translation, (-5.0, 0.0), atol=1e-9)

    def test_pure_scaling_about_origin(self, reference_landmarks):
        t = compute_alignment(reference_landmarks * 2.0, reference_landmarks)
        assert t.scale == pytest.approx(0.5, abs=1e-9)

    def test_coincident_points_rejected(self):
        pts = np.ones((68, 2))
        with pytest.raises(ValueError, match="coincident"):
            compute_alignment(pts, pts + 1.0)

    def test_collinear_points_rejected(self):
        pts = np.stack([np.linspace(0, 10, 68), np.linspace(0, 20, 68)], axis=1)
        with pytest.raises(ValueError, match="collinear"):
            compute_alignment(pts, pts)

    @settings(max_examples=25, deadline=None)
    @given(scale=st.floats(0.5, 2.0), rotation=st.floats(-1.2, 1.2),
           tx=st.floats(-30, 30), ty=st.floats(-30, 30))
    def test_equivariance_recovers_inverse(self, scale, rotation, tx, ty):
        from phasespot.synthetic import landmark_layout

        reference = landmark_layout((224, 224))
        t_true = SimilarityTransform(scale=scale, rotation=rotation,
                                     translation=(tx, ty))
        moved = t_true.apply(reference)
        estimated = compute_alignment(moved, reference)
        # estimated o t_true should be the identity
        composed = estimated.compose(t_true)
        assert composed.scale == pytest.approx(1.0, abs=1e-4)
        assert composed.rotation == pytest.approx(0.0, abs=1e-4)
        assert np.allclose(composed.translation, (0, 0), atol=1e-4)


class TestSimilarityTransform:
    def test_inverse_composes_to_identity(self):
        t = SimilarityTransform(scale=1.7, rotation=0.3, translation=(4.0, -2.0))
        ident = t.compose(t.inverse())
        assert ident.scale == pytest.approx(1.0, abs=1e-6)
        assert ident.rotation == pytest.approx(0.0, abs=1e-6)
        assert np.allclose(ident.translation, (0, 0), atol=1e-6)

    def test_apply_matches_matrix(self, rng):
        t = SimilarityTransform(scale=0.8, rotation=-0.4, translation=(1.0, 2.0))
        pts = rng.random((10, 2)) * 100
        expected = (t.matrix()[:2, :2] @ pts.T).T + t.matrix()[:2, 2]
        assert np.allclose(t.apply(pts), expected)


class TestWarpCrop:
    def test_identity_whole_frame(self, rng):
        frame = rng.random((224, 224))
        out = warp_crop(frame, SimilarityTransform.identity(),
                        (0.0, 0.0, 223.0, 223.0))
        assert np.abs(out - frame).max() < 1e-6

    def test_constant_image_constant_interior(self):
        frame = np.full((224, 224), 0.6)
        t = SimilarityTransform(scale=1.1, rotation=0.1, translation=(3.0, -2.0))
        out = warp_crop(frame, t, (10.0, 10.0, 200.0, 200.0))
        assert out.shape == (224, 224)
        interior = out[40:-40, 40:-40]
        assert np.allclose(interior, 0.6, atol=1e-9)
        assert out.min() >= 0.0 and out.max() <= 0.6 + 1e-12

    def test_halfpixel_shift_of_linear_ramp(self):
        # bilinear sampling reproduces a linear function exactly
        frame = np.tile(np.arange(224, dtype=float) / 223.0, (224, 1))
        t = SimilarityTransform(translation=(0.5, 0.0))
        out = warp_crop(frame, t, (0.0, 0.0, 223.0, 223.0))
        expected = np.tile((np.arange(224) - 0.5) / 223.0, (224, 1))
        err = np.abs(out[8:-8, 8:-8] - expected[8:-8, 8:-8]).max()
        assert err <= 1e-3

    def test_out_of_bounds_takes_border_zero(self):
        frame = np.ones((224, 224))
        t = SimilarityTransform(translation=(300.0, 0.0))
        out = warp_crop(frame, t, (0.0, 0.0, 223.0, 223.0))
        assert np.allclose(out[:, :50], 0.0)


class TestCropBox:
    def test_margin_expansion(self):
        pts = np.array([[10.0, 20.0], [110.0, 120.0]] * 34)
        box = face_crop_box(pts, margin=0.1)
        assert box == pytest.approx((0.0, 10.0, 120.0, 130.0))

    def test_map_to_crop_corners(self):
        box = (10.0, 20.0, 110.0, 120.0)
        corners = np.array([[10.0, 20.0], [110.0, 120.0]])
        mapped = map_to_crop(corners, box, size=224)
        assert np.allclose(mapped, [[0.0, 0.0], [223.0, 223.0]])

    def test_degenerate_box_rejected(self):
        with pytest.raises(ValueError, match="degenerate"):
            face_crop_box(np.ones((68, 2)))
