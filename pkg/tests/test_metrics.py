"""PSNR/SSIM against closed forms and brute-force oracles."""

import numpy as np
import pytest

from simvs.metrics import (
    MetricsReport,
    PSNR_CAP_DB,
    SSIM_C1,
    SSIM_C2,
    SSIM_WINDOW,
    gaussian_window,
    psnr,
    render_markdown_table,
    ssim,
    to_gray,
)


def brute_force_ssim(a, b):
    """Direct per-window evaluation, independent of the vectorized path."""
    ga, gb = to_gray(a), to_gray(b)
    w = gaussian_window()
    k = SSIM_WINDOW
    h, wd = ga.shape
    vals = []
    for i in range(h - k + 1):
        for j in range(wd - k + 1):
            wa = ga[i : i + k, j : j + k]
            wb = gb[i : i + k, j : j + k]
            mu_a = float((w * wa).sum())
            mu_b = float((w * wb).sum())
            var_a = float((w * wa * wa).sum()) - mu_a**2
            var_b = float((w * wb * wb).sum()) - mu_b**2
            cov = float((w * wa * wb).sum()) - mu_a * mu_b
            num = (2 * mu_a * mu_b + SSIM_C1) * (2 * cov + SSIM_C2)
            den = (mu_a**2 + mu_b**2 + SSIM_C1) * (var_a + var_b + SSIM_C2)
            vals.append(num / den)
    return float(np.mean(vals))


class TestPsnr:
    def test_identical_capped(self, rng):
        img = rng.random((16, 16, 3))
        assert psnr(img, img) == PSNR_CAP_DB

    def test_constant_halves_closed_form(self):
        a = np.zeros((8, 8, 3))
        b = np.full((8, 8, 3), 0.5)
        assert psnr(a, b) == pytest.approx(10 * np.log10(1 / 0.25), abs=1e-9)

    def test_matches_direct_summation_oracle(self, rng):
        a = rng.random((12, 9, 3))
        b = rng.random((12, 9, 3))
        total = 0.0
        for i in range(12):
            for j in range(9):
                for c in range(3):
                    total += (a[i, j, c] - b[i, j, c]) ** 2
        expected = 10 * np.log10(1.0 / (total / a.size))
        assert psnr(a, b) == pytest.approx(expected, abs=1e-9)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            psnr(np.zeros((4, 4, 3)), np.zeros((4, 5, 3)))

    def test_symmetry(self, rng):
        a, b = rng.random((16, 16, 3)), rng.random((16, 16, 3))
        assert psnr(a, b) == pytest.approx(psnr(b, a), abs=1e-9)

    def test_monotone_in_noise_amplitude(self, rng):
        base = rng.random((24, 24, 3)) * 0.5 + 0.25
        noise = rng.standard_normal(base.shape)
        values = [psnr(base, np.clip(base + amp * noise, 0, 1))
                  for amp in (0.01, 0.02, 0.05, 0.1)]
        assert all(x > y for x, y in zip(values, values[1:]))


class TestSsim:
    def test_identical_is_one(self, rng):
        img = rng.random((20, 20, 3))
        assert ssim(img, img) == pytest.approx(1.0, abs=1e-9)

    def test_negative_for_inverted_checker(self):
        img = np.indices((24, 24)).sum(axis=0) % 2.0
        img = np.repeat(img[..., None], 3, axis=2)
        assert ssim(img, 1.0 - img) < 0

    def test_matches_brute_force_oracle(self, rng):
        a = rng.random((18, 15, 3))
        b = np.clip(a + 0.2 * rng.standard_normal(a.shape), 0, 1)
        assert ssim(a, b) == pytest.approx(brute_force_ssim(a, b), abs=1e-7)

    def test_too_small_image_rejected(self):
        with pytest.raises(ValueError):
            ssim(np.zeros((8, 8, 3)), np.zeros((8, 8, 3)))

    def test_symmetry(self, rng):
        a, b = rng.random((16, 16, 3)), rng.random((16, 16, 3))
        assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-9)


class TestReport:
    def test_mean_is_arithmetic_mean(self):
        r = MetricsReport("m", "p", psnr_per_view=[10.0, 20.0, 40.0],
                          ssim_per_view=[0.1, 0.2, 0.9])
        assert r.psnr_mean == pytest.approx(np.mean([10, 20, 40]), abs=1e-9)
        assert r.ssim_mean == pytest.approx(np.mean([0.1, 0.2, 0.9]), abs=1e-9)

    def test_markdown_column_order(self):
        r = MetricsReport("m", "p", [10.0], [0.5])
        table = render_markdown_table([r])
        header = table.splitlines()[0]
        assert header.index("PSNR↑") < header.index("SSIM↑") < header.index("LPIPS↓")
        assert "| m |" in table

    def test_lpips_slot_absent_by_default(self):
        r = MetricsReport("m", "p", [10.0], [0.5])
        assert r.to_json_dict()["lpips"] is None
