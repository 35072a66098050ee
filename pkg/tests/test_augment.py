"""Flow-field densification, warping, tints, and heuristic records."""

import numpy as np
import pytest

from simvs.augment import (
    SparseFlowField,
    Tint,
    apply_tint,
    densify_flow,
    make_heuristic_record,
    sample_flow_field,
    sample_tint,
    warp,
)
from simvs.seeding import rng_for
from simvs.worldsim import render_aux, silhouette_mask


class TestDensifyFlow:
    def test_single_point_reproduces_displacement(self):
        field = SparseFlowField(np.array([[20.0, 24.0]]), np.array([[3.0, -2.0]]), 6.0)
        flow = densify_flow(field, (48, 48))
        np.testing.assert_allclose(flow[24, 20], [3.0, -2.0], atol=1e-12)
        # locality: 5 sigma away the response is < 1% of |d|
        assert np.linalg.norm(flow[24, 20 + 30]) < 0.01 * np.hypot(3, 2)

    def test_zero_displacements_give_zero_flow(self):
        field = SparseFlowField(np.array([[5.0, 5.0], [20.0, 20.0]]),
                                np.zeros((2, 2)), 4.0)
        assert np.all(densify_flow(field, (32, 32)) == 0)

    def test_matches_per_pixel_rbf_oracle(self, rng):
        cp = rng.uniform(4, 28, (3, 2))
        d = rng.uniform(-4, 4, (3, 2))
        sigma = 5.0
        field = SparseFlowField(cp, d, sigma)
        flow = densify_flow(field, (32, 32))
        for _ in range(50):
            y, x = rng.integers(0, 32, 2)
            expected = np.zeros(2)
            for k in range(3):
                r2 = (x - cp[k, 0]) ** 2 + (y - cp[k, 1]) ** 2
                expected += d[k] * np.exp(-r2 / (2 * sigma**2))
            np.testing.assert_allclose(flow[y, x], expected, atol=1e-6)

    def test_well_separated_points_recover_displacements(self, rng):
        # separation >= 5 sigma keeps cross-talk under 1e-3
        sigma = 3.0
        cp = np.array([[8.0, 8.0], [8.0, 40.0], [40.0, 24.0]])
        d = rng.uniform(-1, 1, (3, 2))
        flow = densify_flow(SparseFlowField(cp, d, sigma), (48, 48))
        for k in range(3):
            np.testing.assert_allclose(flow[int(cp[k, 1]), int(cp[k, 0])], d[k], atol=1e-3)

    def test_out_of_bounds_control_point_rejected(self):
        field = SparseFlowField(np.array([[100.0, 5.0]]), np.array([[1.0, 0.0]]), 4.0)
        with pytest.raises(ValueError):
            densify_flow(field, (32, 32))

    def test_invariants(self):
        with pytest.raises(ValueError):
            SparseFlowField(np.zeros((0, 2)), np.zeros((0, 2)), 4.0)
        with pytest.raises(ValueError):
            SparseFlowField(np.zeros((1, 2)), np.zeros((1, 2)), 0.0)


class TestWarp:
    def test_zero_flow_is_identity(self, rng):
        img = rng.random((16, 16, 3))
        np.testing.assert_array_equal(warp(img, np.zeros((16, 16, 2))), img)

    def test_integer_shift_with_clamped_border(self, rng):
        img = rng.random((8, 12, 3))
        flow = np.zeros((8, 12, 2))
        flow[..., 0] = 2.0
        out = warp(img, flow)
        np.testing.assert_allclose(out[:, :-2], img[:, 2:], atol=1e-12)
        np.testing.assert_allclose(out[:, -2], img[:, -1], atol=1e-12)
        np.testing.assert_allclose(out[:, -1], img[:, -1], atol=1e-12)

    def test_linear_ramp_matches_analytic_bilinear(self, rng):
        h, w = 16, 16
        ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
        ramp = (2.0 * xs + 3.0 * ys)[..., None] / 100.0
        flow = rng.uniform(-2, 2, (h, w, 2))
        out = warp(ramp, flow)
        sx = np.clip(xs + flow[..., 0], 0, w - 1)
        sy = np.clip(ys + flow[..., 1], 0, h - 1)
        expected = (2.0 * sx + 3.0 * sy)[..., None] / 100.0
        np.testing.assert_allclose(out, expected, atol=1e-6)

    def test_non_finite_flow_rejected(self, rng):
        img = rng.random((8, 8))
        flow = np.zeros((8, 8, 2))
        flow[0, 0, 0] = np.nan
        with pytest.raises(ValueError):
            warp(img, flow)


class TestTint:
    def test_identity(self, rng):
        img = rng.random((8, 8, 3))
        out = apply_tint(img, Tint(np.ones(3), np.zeros(3)))
        np.testing.assert_array_equal(out, img)

    def test_clamps_at_one(self):
        img = np.full((4, 4, 3), 0.6)
        out = apply_tint(img, Tint(np.full(3, 2.0), np.zeros(3)))
        assert np.all(out == 1.0)

    def test_matches_elementwise_formula(self, rng):
        img = rng.random((6, 5, 3))
        tint = sample_tint(rng)
        out = apply_tint(img, tint)
        expected = np.clip(img * tint.gains + tint.offset, 0, 1)
        np.testing.assert_array_equal(out, expected)

    def test_gain_bounds_enforced(self):
        with pytest.raises(ValueError):
            Tint(np.array([0.1, 1.0, 1.0]), np.zeros(3))


class TestHeuristicRecords:
    def test_dynamics_only_warps_pixels(self, consistent_record):
        rng = rng_for(3, "aug/dyn")
        rec = make_heuristic_record(consistent_record, "dynamics", rng)
        assert rec.poses == consistent_record.poses
        np.testing.assert_array_equal(rec.inconsistent[0], rec.consistent[0])
        assert any(s != 0 for s in rec.states[1:])
        for img in rec.consistent:
            assert img.shape == consistent_record.consistent[0].shape

    def test_lighting_shifts_per_view_mean_color(self, consistent_record):
        rng = rng_for(4, "aug/light")
        rec = make_heuristic_record(consistent_record, "lighting", rng)
        shifted = [
            i
            for i in range(1, rec.n_views())
            if abs(np.mean(rec.inconsistent[i]) - np.mean(rec.consistent[i])) > 1e-3
        ]
        assert shifted, "at least one view should carry its own tint"

    def test_lighting_preserves_silhouettes(self, consistent_record):
        # tint changes colors, never geometry: masks from the simulator agree
        rng = rng_for(5, "aug/light2")
        rec = make_heuristic_record(consistent_record, "lighting", rng)
        _, hid, _ = render_aux(rec.scene, rec.state_of(0), rec.poses[1])
        # the augmented record reuses pose/scene; silhouette derives from the
        # scene itself, unchanged by tints
        assert silhouette_mask(hid).any()

    def test_reproducible_given_seed(self, consistent_record):
        a = make_heuristic_record(consistent_record, "dynamics", rng_for(9, "aug"))
        b = make_heuristic_record(consistent_record, "dynamics", rng_for(9, "aug"))
        for x, y in zip(a.inconsistent, b.inconsistent):
            np.testing.assert_array_equal(x, y)

    def test_rejects_inconsistent_source(self, dynamics_record):
        with pytest.raises(ValueError):
            make_heuristic_record(dynamics_record, "dynamics", rng_for(0, "x"))

    def test_flow_field_sampling_ranges(self, rng):
        for _ in range(50):
            f = sample_flow_field(rng, (64, 64))
            assert 2 <= f.control_points.shape[0] <= 6
            assert 8.0 <= f.bandwidth <= 24.0
            mags = np.linalg.norm(f.displacements, axis=1)
            assert np.all(mags >= 2.0 - 1e-9) and np.all(mags <= 10.0 + 1e-9)
