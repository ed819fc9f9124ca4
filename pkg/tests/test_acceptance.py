"""Acceptance suite: one test per release criterion, each printing a
[PASS]/[FAIL] line (visible with `pytest -s` or on failure). Tolerances are
pinned here and nowhere else.
"""

import math
import time

import numpy as np
import pytest

from rainforge.curation import PipelineConfig, largest_remainder, run_corpus, split_dataset
from rainforge.imaging import DisplacementField, Homography, ImageBuffer, warp_displacement
from rainforge.imaging.ops import to_grayscale
from rainforge.metrics import (
    PSNR_INFINITE,
    MsSsimParams,
    ms_ssim,
    psnr,
    ssim,
)
from rainforge.objective import (
    RobustLossParams,
    gradient_check,
    pair_loss_with_gradients,
    rain_robust_batch_loss,
    rain_robust_pair_loss,
)
from rainforge.rain import StreakParams, composite_rain, render_streak_layer, synthesize_pair
from rainforge.registration import (
    Correspondence,
    DemonsParams,
    SiftParams,
    detect_keypoints,
    estimate_homography_ransac,
    match_descriptors,
    register_elastic,
)

from conftest import build_synthetic_corpus, gaussian_bump_field, keypoint_texture, textured_image
from oracles import ms_ssim_bruteforce, psnr_bruteforce, ssim_bruteforce


def _criterion(name, ok, detail=""):
    tag = "PASS" if ok else "FAIL"
    print(f"[{tag}] {name}" + (f" ({detail})" if detail else ""))
    assert ok, f"{name}: {detail}"


def _corner_error(h_est, h_true, frame=256.0):
    corners = np.array([[0, 0], [frame - 1, 0], [0, frame - 1], [frame - 1, frame - 1]], dtype=float)
    return float(np.linalg.norm(h_est.apply(corners) - h_true.apply(corners), axis=1).max())


class TestHomographyRecovery:
    def test_criterion_synthetic_correspondences(self):
        rng = np.random.default_rng(2024)
        mat = np.eye(3)
        mat[:2, :2] += rng.normal(0, 0.02, (2, 2))
        mat[0, 2], mat[1, 2] = 4.2, -3.7
        mat[2, :2] = rng.normal(0, 1e-5, 2)
        truth = Homography(mat)

        n_in, n_out = 120, 80  # 40% outliers of 200
        src_in = rng.uniform(5, 250, (n_in, 2))
        dst_in = truth.apply(src_in) + rng.normal(0, 0.5, (n_in, 2))
        corrs = [
            Correspondence(source=tuple(s), target=tuple(t), match_score=0.5)
            for s, t in zip(src_in, dst_in)
        ]
        corrs += [
            Correspondence(source=tuple(s), target=tuple(t), match_score=0.6)
            for s, t in zip(rng.uniform(5, 250, (n_out, 2)), rng.uniform(5, 250, (n_out, 2)))
        ]
        labels = np.array([True] * n_in + [False] * n_out)

        t0 = time.perf_counter()
        result = estimate_homography_ransac(corrs, inlier_threshold=3.0, seed=7)
        elapsed = time.perf_counter() - t0

        agreement = float((result.inlier_flags == labels).mean())
        corner = _corner_error(result.homography, truth)
        _criterion(
            "homography recovery: inlier classification >= 95%",
            agreement >= 0.95,
            f"agreement {agreement:.3f}",
        )
        _criterion(
            "homography recovery: corner reprojection error < 1.0 px",
            corner < 1.0,
            f"corner error {corner:.3f} px",
        )
        _criterion(
            "homography recovery: correspondence stage well under 2 s",
            elapsed < 2.0,
            f"{elapsed:.3f} s",
        )

    def test_criterion_streak_occluded_end_to_end(self):
        clean = keypoint_texture(256, 256, seed=77, density=0.03)
        theta = 0.01  # wind shake: small rotation plus a few pixels of translation
        truth = Homography(
            np.array(
                [
                    [math.cos(theta), -math.sin(theta), 3.2],
                    [math.sin(theta), math.cos(theta), -2.4],
                    [0.0, 0.0, 1.0],
                ]
            )
        )
        # dense opaque streaks so a large share of keypoints are occluded
        streaks = StreakParams(
            width=256, height=256, count=550, length_range=(10.0, 26.0), opacity_range=(0.35, 0.85), seed=31
        )
        rainy, _ = synthesize_pair(clean, streaks=streaks, warp=truth)

        sift_params = SiftParams(contrast_threshold=0.015)
        t0 = time.perf_counter()
        kp_clean = detect_keypoints(clean, sift_params)
        kp_rainy = detect_keypoints(to_grayscale(rainy) if rainy.channels == 3 else rainy, sift_params)
        matches = match_descriptors(kp_clean, kp_rainy, ratio=0.75)
        result = estimate_homography_ransac(matches, inlier_threshold=1.5, seed=0)
        elapsed = time.perf_counter() - t0

        # quantify occlusion: keypoints of the clean frame covered by streaks
        layer = render_streak_layer(streaks)
        covered = sum(1 for k in kp_clean if layer.intensity[int(round(k.y)) % 256, int(round(k.x)) % 256] > 0.05)
        occlusion = covered / max(len(kp_clean), 1)

        corner = _corner_error(result.homography, truth)
        _criterion(
            "homography recovery: < 1.5 px corner error through rain streaks",
            corner < 1.5,
            f"corner error {corner:.3f} px, {occlusion:.0%} keypoints under streaks, {len(matches)} matches",
        )
        _criterion(
            "homography recovery: end-to-end pair aligns in < 2 s",
            elapsed < 2.0,
            f"{elapsed:.3f} s",
        )
        assert occlusion >= 0.3


class TestElasticRegistration:
    def test_criterion_bump_field_recovery(self):
        size = 256
        moving = textured_image(size, size, seed=88, channels=1)
        amp = 4.0 / math.sqrt(2.0)
        truth = DisplacementField(
            gaussian_bump_field(size, size, center=(150, 120), amplitude=(amp, amp), sigma=40)
        )
        assert abs(truth.magnitudes().max() - 4.0) < 1e-6
        fixed, valid = warp_displacement(moving, truth)

        t0 = time.perf_counter()
        field = register_elastic(moving, fixed, DemonsParams())
        elapsed = time.perf_counter() - t0

        inner = valid.included.copy()
        inner[:8, :] = inner[-8:, :] = inner[:, :8] = inner[:, -8:] = False
        epe = float(np.linalg.norm(field.vectors - truth.vectors, axis=2)[inner].mean())
        zero_epe = float(np.linalg.norm(truth.vectors, axis=2)[inner].mean())
        reduction = 1.0 - epe / zero_epe

        warped, wvalid = warp_displacement(moving, field)
        region = inner & wvalid.included
        mse_after = float(((warped.data[region] - fixed.data[region]) ** 2).mean())
        mse_before = float(((moving.data[region] - fixed.data[region]) ** 2).mean())

        _criterion(
            "elastic registration: mean endpoint error reduced >= 70%",
            reduction >= 0.70,
            f"reduction {reduction:.1%} (EPE {epe:.3f} vs zero-field {zero_epe:.3f})",
        )
        _criterion(
            "elastic registration: warped MSE strictly below unwarped",
            mse_after < mse_before,
            f"{mse_before:.6f} -> {mse_after:.6f}",
        )
        _criterion("elastic registration: runtime < 10 s", elapsed < 10.0, f"{elapsed:.2f} s")


class TestMetricOracles:
    def test_criterion_psnr_ssim_msssim_match_oracles(self):
        worst_psnr = worst_ssim = worst_ms = 0.0
        for seed in range(20):
            rng = np.random.default_rng(3000 + seed)
            a16 = ImageBuffer(rng.random((16, 16, 3)))
            b16 = ImageBuffer(rng.random((16, 16, 3)))
            worst_psnr = max(worst_psnr, abs(psnr(a16, b16) - psnr_bruteforce(a16.data, b16.data)))

            a32 = rng.random((32, 32))
            b32 = np.clip(a32 + rng.normal(0, 0.08, (32, 32)), 0, 1)
            worst_ssim = max(
                worst_ssim, abs(ssim(ImageBuffer(a32), ImageBuffer(b32)).score - ssim_bruteforce(a32, b32))
            )

            a48 = rng.random((48, 48))
            b48 = np.clip(a48 + rng.normal(0, 0.06, (48, 48)), 0, 1)
            weights = (0.4, 0.6)
            ours = ms_ssim(ImageBuffer(a48), ImageBuffer(b48), MsSsimParams(scale_weights=weights))
            worst_ms = max(worst_ms, abs(ours - ms_ssim_bruteforce(a48, b48, weights)))

        _criterion("metric oracles: PSNR within 1e-9 dB", worst_psnr < 1e-9, f"worst {worst_psnr:.2e}")
        _criterion("metric oracles: SSIM within 1e-7", worst_ssim < 1e-7, f"worst {worst_ssim:.2e}")
        _criterion("metric oracles: MS-SSIM within 1e-6", worst_ms < 1e-6, f"worst {worst_ms:.2e}")

    def test_criterion_identity_cases(self):
        img = textured_image(192, 192, seed=99)
        _criterion("metric oracles: identity PSNR is the infinite marker", psnr(img, img) == PSNR_INFINITE)
        _criterion("metric oracles: identity SSIM = 1.0", abs(ssim(img, img).score - 1.0) < 1e-9)
        _criterion("metric oracles: identity MS-SSIM = 1.0", abs(ms_ssim(img, img) - 1.0) < 1e-9)


class TestObjectiveCorrectness:
    def test_criterion_closed_form_oracles(self):
        def unit(i):
            v = np.zeros(8)
            v[i] = 1.0
            return v

        params = RobustLossParams(temperature=0.25, include_positive_in_denominator=True)
        loss_inc = rain_robust_pair_loss(unit(0), unit(0), [unit(1), unit(2)], params)
        err_inc = abs(loss_inc - math.log(1.0 + 2.0 * math.exp(-4.0)))

        params_lit = RobustLossParams(temperature=0.25, include_positive_in_denominator=False)
        loss_lit = rain_robust_pair_loss(unit(0), unit(0), [unit(1), unit(2)], params_lit)
        err_lit = abs(loss_lit - (math.log(2.0) - 4.0))

        batch = [(unit(0), unit(0)), (unit(1), unit(1))]
        err_batch = abs(rain_robust_batch_loss(batch, params) - math.log(1.0 + 2.0 * math.exp(-4.0)))

        ident = [(np.ones(8), np.ones(8)), (np.ones(8), np.ones(8))]
        err_ident = abs(rain_robust_batch_loss(ident, params) - math.log(3.0))

        worst = max(err_inc, err_lit, err_batch, err_ident)
        _criterion("objective: closed-form pair/batch oracles within 1e-9", worst < 1e-9, f"worst {worst:.2e}")

    def test_criterion_gradients_at_twenty_seeded_points(self):
        params = RobustLossParams(temperature=0.25)

        def fn(vectors):
            anchor, positive, *negatives = vectors
            loss, ga, gp, gn = pair_loss_with_gradients(anchor, positive, negatives, params)
            return loss, [ga, gp] + gn

        worst = 0.0
        for seed in range(20):
            rng = np.random.default_rng(5000 + seed)
            point = [rng.normal(size=12) for _ in range(5)]
            worst = max(worst, gradient_check(fn, point, epsilon=1e-5))
        _criterion(
            "objective: analytic gradients within 1e-5 of central differences",
            worst < 1e-5,
            f"worst relative error {worst:.2e}",
        )

    def test_criterion_scale_invariance(self):
        rng = np.random.default_rng(6000)
        params = RobustLossParams()
        anchor = rng.normal(size=16)
        positive = rng.normal(size=16)
        negatives = [rng.normal(size=16) for _ in range(4)]
        base = rain_robust_pair_loss(anchor, positive, negatives, params)
        scaled = rain_robust_pair_loss(1234.5 * anchor, 0.002 * positive, [31.4 * n for n in negatives], params)
        _criterion(
            "objective: positive rescaling of features moves loss < 1e-12",
            abs(base - scaled) < 1e-12,
            f"delta {abs(base - scaled):.2e}",
        )


class TestRainModelSemantics:
    def test_criterion_zero_layer_identity(self):
        clean = textured_image(64, 64, seed=101)
        out = composite_rain(clean, [])
        _criterion(
            "rain model: zero-layer compositing is exact identity",
            np.array_equal(out.image.data, clean.data) and out.saturated_pixels == 0,
        )

    def test_criterion_additivity_below_saturation(self):
        clean = ImageBuffer.full(48, 48, 0.15)
        l1 = render_streak_layer(StreakParams(width=48, height=48, count=6, opacity_range=(0.05, 0.15), seed=1))
        l2 = render_streak_layer(StreakParams(width=48, height=48, count=6, opacity_range=(0.05, 0.15), seed=2))
        once = composite_rain(clean, [l1, l2])
        stepwise = composite_rain(composite_rain(clean, [l1]).image, [l2])
        _criterion(
            "rain model: layer addition is exactly associative below the clamp",
            once.saturated_pixels == 0 and np.array_equal(once.image.data, stepwise.image.data),
        )

    def test_criterion_psnr_monotone_in_layer_energy(self):
        clean = textured_image(96, 96, seed=102)
        layers = [render_streak_layer(StreakParams(width=96, height=96, count=25, seed=s)) for s in range(4)]
        values = [psnr(composite_rain(clean, layers[:n]).image, clean) for n in range(5)]
        ok = all(a > b for a, b in zip(values, values[1:]))
        _criterion(
            "rain model: PSNR strictly decreases on nested layer sets",
            ok,
            " > ".join("inf" if math.isinf(v) else f"{v:.2f}" for v in values),
        )


class TestPipelineEndToEnd:
    def test_criterion_ten_pair_corpus(self, tmp_path):
        expected = build_synthetic_corpus(tmp_path, size=192, seed=3)
        cfg = PipelineConfig(
            rainy_dir=tmp_path / "rainy",
            clean_dir=tmp_path / "clean",
            output_root=tmp_path / "out_a",
            block=64,
        )
        records, errors = run_corpus(cfg)
        assert errors == []
        by_id = {r["pair_id"]: r for r in records}

        hits = 0
        for scene, mode in expected.items():
            got = by_id[scene]["correction_mode"]
            if mode == "none":
                hits += got == "none"
            elif mode == "homography":
                hits += got.startswith("homography")
            else:
                hits += got == "elastic"
        _criterion(
            "pipeline: correction-mode selection matches ground truth >= 9/10",
            hits >= 9,
            f"{hits}/10 correct",
        )

        gains = []
        for record in records:
            if record["correction_mode"] == "none":
                continue
            pre = record["metrics_pre"]["psnr_db"]
            post = record["metrics"]["psnr_db"]
            pre = math.inf if pre == "inf" else pre
            post = math.inf if post == "inf" else post
            gains.append(post - pre)
        _criterion(
            "pipeline: every corrected pair gains >= 5 dB PSNR",
            bool(gains) and min(gains) >= 5.0,
            f"min gain {min(gains):.2f} dB over {len(gains)} corrected pairs",
        )

        cfg_b = PipelineConfig(
            rainy_dir=tmp_path / "rainy",
            clean_dir=tmp_path / "clean",
            output_root=tmp_path / "out_b",
            block=64,
        )
        run_corpus(cfg_b)
        identical = cfg.manifest_path().read_bytes() == cfg_b.manifest_path().read_bytes()
        _criterion("pipeline: manifest re-run is byte-identical under fixed seeds", identical)


class TestSplitProportions:
    def test_criterion_largest_remainder_proportions(self):
        counts = largest_remainder(100, (0.829, 0.105, 0.066))
        _criterion(
            "split: (0.829, 0.105, 0.066) on 100 equal scenes -> 83/10/7",
            counts == [83, 10, 7],
            f"got {counts}",
        )
        records = {}
        for i in range(100):
            pid = f"s{i:03d}_p0"
            records[pid] = {
                "v": 1,
                "pair_id": pid,
                "scene": f"s{i:03d}",
                "status": "accepted",
                "review": {"decision": "accept", "note": "", "decided_at": "t"},
            }
        assignment = split_dataset(records, ratios=(0.829, 0.105, 0.066), seed=11)
        got = assignment.counts()
        _criterion(
            "split: assignment realizes the 83/10/7 quota",
            got == {"train": 83, "val": 10, "test": 7},
            f"got {got}",
        )

    def test_criterion_scene_atomicity_thousand_manifests(self):
        rng = np.random.default_rng(7000)
        violations = 0
        for trial in range(1000):
            n_scenes = int(rng.integers(3, 20))
            records = {}
            for s in range(n_scenes):
                for p in range(int(rng.integers(1, 8))):
                    pid = f"t{trial}_s{s}_p{p}"
                    records[pid] = {
                        "v": 1,
                        "pair_id": pid,
                        "scene": f"s{s}",
                        "status": "accepted",
                        "review": {"decision": "accept", "note": "", "decided_at": "t"},
                    }
            assignment = split_dataset(records, seed=trial)
            by_scene = {}
            for pid, split in assignment.assignments.items():
                by_scene.setdefault(records[pid]["scene"], set()).add(split)
            if any(len(v) != 1 for v in by_scene.values()) or set(assignment.assignments) != set(records):
                violations += 1
        _criterion(
            "split: scene atomicity and exhaustive partition on 1000 random manifests",
            violations == 0,
            f"{violations} violations",
        )
