import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rainforge.imaging import ImageBuffer
from rainforge.metrics import (
    PSNR_INFINITE,
    MsSsimParams,
    SsimParams,
    metric_report,
    ms_ssim,
    psnr,
    ssim,
)

from conftest import textured_image
from oracles import ms_ssim_bruteforce, psnr_bruteforce, ssim_bruteforce


class TestPsnr:
    def test_identity_returns_infinite_marker(self):
        img = textured_image(8, 8, seed=50)
        value = psnr(img, img)
        assert value == PSNR_INFINITE
        assert math.isinf(value)
        assert value > 1e12  # distinct from (greater than) any finite value

    def test_uniform_offset_forces_twenty_db(self):
        a = ImageBuffer.full(16, 16, 0.5)
        b = ImageBuffer.full(16, 16, 0.6)
        assert abs(psnr(a, b, peak=1.0) - 20.0) < 1e-12

    def test_matches_direct_formula_oracle(self, rng):
        a = ImageBuffer(rng.random((16, 16, 3)))
        b = ImageBuffer(rng.random((16, 16, 3)))
        assert abs(psnr(a, b) - psnr_bruteforce(a.data, b.data)) < 1e-9

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            psnr(textured_image(8, 8), textured_image(8, 9))

    def test_symmetry(self, rng):
        a = ImageBuffer(rng.random((12, 12, 3)))
        b = ImageBuffer(rng.random((12, 12, 3)))
        assert abs(psnr(a, b) - psnr(b, a)) < 1e-12


class TestSsim:
    def test_identity_scores_one(self):
        img = textured_image(32, 32, seed=51)
        result = ssim(img, img)
        assert abs(result.score - 1.0) < 1e-9
        assert np.abs(result.score_map - 1.0).max() < 1e-9

    def test_constant_images_closed_form(self):
        mu_a, mu_b = 0.5, 0.6
        a = ImageBuffer.full(16, 16, mu_a, channels=1)
        b = ImageBuffer.full(16, 16, mu_b, channels=1)
        c1 = (0.01 * 1.0) ** 2
        expected = (2 * mu_a * mu_b + c1) / (mu_a**2 + mu_b**2 + c1)
        assert abs(ssim(a, b).score - expected) < 1e-9

    def test_matches_sliding_window_oracle(self, rng):
        a = rng.random((32, 32))
        b = np.clip(a + rng.normal(0, 0.08, (32, 32)), 0, 1)
        ours = ssim(ImageBuffer(a), ImageBuffer(b)).score
        ref = ssim_bruteforce(a, b)
        assert abs(ours - ref) < 1e-7

    def test_color_is_channel_average(self, rng):
        arr_a = rng.random((24, 24, 3))
        arr_b = np.clip(arr_a + rng.normal(0, 0.05, arr_a.shape), 0, 1)
        a, b = ImageBuffer(arr_a), ImageBuffer(arr_b)
        per_channel = [
            ssim(ImageBuffer(arr_a[:, :, c]), ImageBuffer(arr_b[:, :, c])).score for c in range(3)
        ]
        assert abs(ssim(a, b).score - np.mean(per_channel)) < 1e-12

    def test_window_too_large(self):
        with pytest.raises(ValueError):
            ssim(textured_image(8, 8), textured_image(8, 8))

    def test_bounded(self, rng):
        for seed in range(3):
            r = np.random.default_rng(seed)
            a = ImageBuffer(r.random((16, 16)))
            b = ImageBuffer(r.random((16, 16)))
            s = ssim(a, b).score
            assert -1.0 <= s <= 1.0

    def test_symmetry(self, rng):
        a = ImageBuffer(rng.random((20, 20)))
        b = ImageBuffer(rng.random((20, 20)))
        assert abs(ssim(a, b).score - ssim(b, a).score) < 1e-12


class TestMsSsim:
    def test_identity_scores_one(self):
        img = textured_image(192, 192, seed=52)
        assert abs(ms_ssim(img, img) - 1.0) < 1e-9

    def test_single_scale_equals_ssim(self, rng):
        a = ImageBuffer(rng.random((32, 32)))
        b = ImageBuffer(np.clip(a.data[:, :, 0] + rng.normal(0, 0.05, (32, 32)), 0, 1))
        params = MsSsimParams(scale_weights=(1.0,))
        assert abs(ms_ssim(a, b, params) - ssim(a, b).score) < 1e-9

    def test_matches_independent_reference(self, rng):
        a = rng.random((128, 128))
        b = np.clip(a + rng.normal(0, 0.06, a.shape), 0, 1)
        weights = (0.2, 0.3, 0.5)
        ours = ms_ssim(ImageBuffer(a), ImageBuffer(b), MsSsimParams(scale_weights=weights))
        ref = ms_ssim_bruteforce(a, b, weights)
        assert abs(ours - ref) < 1e-6

    def test_too_small_for_scales(self):
        img = textured_image(32, 32, seed=53)
        with pytest.raises(ValueError):
            ms_ssim(img, img)  # 5 scales need >= 176px

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError):
            MsSsimParams(scale_weights=(0.5, 0.4))

    def test_default_weights_normalized(self):
        params = MsSsimParams()
        assert abs(sum(params.scale_weights) - 1.0) < 1e-12
        assert len(params.scale_weights) == 5

    def test_bounded_and_symmetric(self, rng):
        a = ImageBuffer(rng.random((64, 64)))
        b = ImageBuffer(rng.random((64, 64)))
        params = MsSsimParams(scale_weights=(0.4, 0.6))
        s_ab = ms_ssim(a, b, params)
        s_ba = ms_ssim(b, a, params)
        assert 0.0 <= s_ab <= 1.0
        assert abs(s_ab - s_ba) < 1e-12


class TestDegradationMonotonicity:
    def test_noise_strictly_degrades_scores(self):
        base = textured_image(192, 192, seed=54)
        r = np.random.default_rng(55)
        noise = r.standard_normal(base.data.shape)
        ssim_scores, ms_scores = [], []
        for sigma in (0.01, 0.05, 0.1):
            noisy = ImageBuffer(np.clip(base.data + sigma * noise, 0, 1))
            ssim_scores.append(ssim(base, noisy).score)
            ms_scores.append(ms_ssim(base, noisy))
        assert ssim_scores[0] > ssim_scores[1] > ssim_scores[2]
        assert ms_scores[0] > ms_scores[1] > ms_scores[2]

    def test_ms_ssim_loss_zero_at_identity(self, rng):
        img = textured_image(192, 192, seed=56)
        assert 1.0 - ms_ssim(img, img) < 1e-9
        other = ImageBuffer(np.clip(img.data + rng.normal(0, 0.05, img.data.shape), 0, 1))
        assert 1.0 - ms_ssim(img, other) > 0.0


class TestReport:
    def test_report_shape(self):
        img = textured_image(192, 192, seed=57)
        report = metric_report(img, img)
        assert report["psnr_db"] == "inf"
        assert abs(report["ssim"] - 1.0) < 1e-9
        assert abs(report["ms_ssim"] - 1.0) < 1e-9
        assert report["region"] == {"x": 0, "y": 0, "w": 192, "h": 192}

    def test_report_finite_values(self, rng):
        a = textured_image(192, 192, seed=58)
        b = ImageBuffer(np.clip(a.data + rng.normal(0, 0.03, a.data.shape), 0, 1))
        report = metric_report(a, b, region=(4, 2, 100, 90))
        assert isinstance(report["psnr_db"], float)
        assert report["region"]["w"] == 100


@given(st.integers(0, 1000))
@settings(max_examples=10, deadline=None)
def test_psnr_symmetry_property(seed):
    r = np.random.default_rng(seed)
    a = ImageBuffer(r.random((8, 8)))
    b = ImageBuffer(r.random((8, 8)))
    assert psnr(a, b) == psnr(b, a)
