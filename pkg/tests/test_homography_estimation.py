import numpy as np
import pytest

from rainforge.imaging import Homography
from rainforge.registration import (
    Correspondence,
    DegenerateGeometryError,
    estimate_homography_ransac,
    solve_homography_dlt,
    symmetric_transfer_errors,
)


def _corrs_from_matrix(h: Homography, points, noise=0.0, rng=None):
    pts = np.asarray(points, dtype=float)
    mapped = h.apply(pts)
    if noise and rng is not None:
        mapped = mapped + rng.normal(0, noise, mapped.shape)
    return [
        Correspondence(source=tuple(s), target=tuple(t), match_score=0.5)
        for s, t in zip(pts, mapped)
    ]


def _random_projective(rng, frame=256.0):
    mat = np.eye(3)
    mat[:2, :2] += rng.normal(0, 0.02, (2, 2))
    mat[0, 2] = rng.uniform(-6, 6)
    mat[1, 2] = rng.uniform(-6, 6)
    mat[2, :2] = rng.normal(0, 1e-5, 2)
    return Homography(mat)


def _corner_error(h_est: Homography, h_true: Homography, frame=256.0):
    corners = np.array([[0, 0], [frame - 1, 0], [0, frame - 1], [frame - 1, frame - 1]], dtype=float)
    return float(np.linalg.norm(h_est.apply(corners) - h_true.apply(corners), axis=1).max())


class TestDlt:
    def test_identity_recovered(self):
        pts = [(10.0, 10.0), (200.0, 15.0), (30.0, 180.0), (220.0, 210.0)]
        corrs = _corrs_from_matrix(Homography.identity(), pts)
        h = solve_homography_dlt(corrs)
        assert np.abs(h.m - np.eye(3)).max() < 1e-9

    def test_translation_recovered(self):
        pts = [(10.0, 10.0), (200.0, 15.0), (30.0, 180.0), (220.0, 210.0), (120.0, 90.0)]
        truth = Homography.translation(4.5, -2.25)
        h = solve_homography_dlt(_corrs_from_matrix(truth, pts))
        assert np.abs(h.m - truth.m).max() < 1e-9

    def test_random_projective_recovered(self, rng):
        truth = _random_projective(rng)
        pts = rng.uniform(10, 240, (8, 2))
        h = solve_homography_dlt(_corrs_from_matrix(truth, pts))
        assert np.abs(h.m - truth.m).max() < 1e-7

    def test_projective_scale_invariance(self, rng):
        truth = _random_projective(rng)
        pts = rng.uniform(10, 240, (6, 2))
        corrs = _corrs_from_matrix(truth, pts)
        h1 = solve_homography_dlt(corrs)
        # scaling the homogeneous representation of the solution must not
        # change the normalized matrix
        h2 = Homography(37.5 * h1.m)
        assert np.abs(h1.m - h2.m).max() < 1e-9

    def test_collinear_points_rejected(self):
        pts = [(0.0, 0.0), (10.0, 10.0), (20.0, 20.0), (30.0, 30.0)]
        corrs = _corrs_from_matrix(Homography.identity(), pts)
        with pytest.raises(DegenerateGeometryError):
            solve_homography_dlt(corrs)

    def test_too_few_points(self):
        pts = [(0.0, 0.0), (10.0, 0.0), (0.0, 10.0)]
        with pytest.raises(ValueError):
            solve_homography_dlt(_corrs_from_matrix(Homography.identity(), pts))


class TestRansac:
    def test_all_inliers_recovers_exactly(self, rng):
        truth = _random_projective(rng)
        pts = rng.uniform(5, 250, (40, 2))
        corrs = _corrs_from_matrix(truth, pts)
        result = estimate_homography_ransac(corrs, seed=7)
        assert result.inlier_flags.all()
        assert _corner_error(result.homography, truth) < 1e-6

    def test_forty_percent_outliers(self):
        rng = np.random.default_rng(99)
        truth = _random_projective(rng)
        n_in, n_out = 120, 80
        src_in = rng.uniform(5, 250, (n_in, 2))
        corrs = _corrs_from_matrix(truth, src_in, noise=0.5, rng=rng)
        src_out = rng.uniform(5, 250, (n_out, 2))
        dst_out = rng.uniform(5, 250, (n_out, 2))
        corrs += [
            Correspondence(source=tuple(s), target=tuple(t), match_score=0.6)
            for s, t in zip(src_out, dst_out)
        ]
        labels = np.array([True] * n_in + [False] * n_out)

        result = estimate_homography_ransac(corrs, inlier_threshold=3.0, seed=3)
        agreement = (result.inlier_flags == labels).mean()
        assert agreement >= 0.95
        assert result.mean_reprojection_error < 1.0 * np.sqrt(2) * 2  # sym error of two ~0.5px ends
        # forward reprojection of true inliers under the estimate
        fwd = np.linalg.norm(
            result.homography.apply(src_in) - truth.apply(src_in), axis=1
        ).mean()
        assert fwd < 1.0

    def test_sixty_percent_outliers_corner_error(self):
        rng = np.random.default_rng(4242)
        truth = _random_projective(rng)
        n_in, n_out = 80, 120
        corrs = _corrs_from_matrix(truth, rng.uniform(5, 250, (n_in, 2)), noise=0.5, rng=rng)
        corrs += [
            Correspondence(source=tuple(s), target=tuple(t), match_score=0.6)
            for s, t in zip(rng.uniform(5, 250, (n_out, 2)), rng.uniform(5, 250, (n_out, 2)))
        ]
        result = estimate_homography_ransac(corrs, seed=11)
        assert _corner_error(result.homography, truth) < 1.5

    def test_deterministic_under_seed(self, rng):
        truth = _random_projective(rng)
        corrs = _corrs_from_matrix(truth, rng.uniform(5, 250, (60, 2)), noise=0.5, rng=rng)
        corrs += [
            Correspondence(source=(float(x), float(y)), target=(float(y), float(x)), match_score=0.6)
            for x, y in rng.uniform(5, 250, (40, 2))
        ]
        r1 = estimate_homography_ransac(corrs, seed=123)
        r2 = estimate_homography_ransac(corrs, seed=123)
        np.testing.assert_array_equal(r1.inlier_flags, r2.inlier_flags)
        np.testing.assert_array_equal(r1.homography.m, r2.homography.m)
        assert r1.iterations_used == r2.iterations_used

    def test_inlier_flag_invariant(self, rng):
        truth = _random_projective(rng)
        corrs = _corrs_from_matrix(truth, rng.uniform(5, 250, (50, 2)), noise=1.0, rng=rng)
        threshold = 2.5
        result = estimate_homography_ransac(corrs, inlier_threshold=threshold, seed=5)
        errors = symmetric_transfer_errors(result.homography, corrs)
        assert (errors[result.inlier_flags] <= threshold).all()
        assert result.inlier_count >= 4

    def test_adaptive_bound_cuts_iterations(self, rng):
        truth = _random_projective(rng)
        corrs = _corrs_from_matrix(truth, rng.uniform(5, 250, (50, 2)))
        result = estimate_homography_ransac(corrs, max_iterations=2000, seed=1)
        assert result.iterations_used < 50

    def test_no_consensus_possible(self, rng):
        # every 4-point sample is collinear, so no model can be fit at all
        corrs = [
            Correspondence(source=(float(i), float(i)), target=tuple(t), match_score=0.6)
            for i, t in enumerate(rng.uniform(0, 250, (12, 2)))
        ]
        from rainforge.registration import NoConsensusError

        with pytest.raises(NoConsensusError):
            estimate_homography_ransac(corrs, max_iterations=50, seed=2)
