import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rainforge.imaging import ImageBuffer, gaussian_blur_array


def textured_image(height, width, seed=0, channels=3):
    """Smooth random texture with enough structure for keypoints and registration."""
    rng = np.random.default_rng(seed)
    base = rng.random((height, width))
    smooth = gaussian_blur_array(base, 2.0)
    fine = gaussian_blur_array(rng.random((height, width)), 0.8)
    plane = 0.15 + 0.7 * _normalize(0.6 * smooth + 0.4 * fine)
    if channels == 1:
        return ImageBuffer(plane)
    shifts = rng.uniform(-0.05, 0.05, size=3)
    stacked = np.stack([np.clip(plane + s, 0.0, 1.0) for s in shifts], axis=2)
    return ImageBuffer(stacked)


def _normalize(arr):
    lo, hi = arr.min(), arr.max()
    if hi - lo < 1e-12:
        return np.zeros_like(arr)
    return (arr - lo) / (hi - lo)


def keypoint_texture(height, width, seed=0, density=0.012):
    """Blob-scatter scene with strong multi-scale structure for keypoint work."""
    rng = np.random.default_rng(seed)
    ys, xs = np.mgrid[0:height, 0:width].astype(float)
    plane = np.zeros((height, width))
    for _ in range(int(density * height * width)):
        cx, cy = rng.uniform(0, width), rng.uniform(0, height)
        s = rng.uniform(1.0, 5.0)
        amp = rng.uniform(0.3, 1.0) * rng.choice([-1, 1])
        plane += amp * np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2 * s * s))
    plane += 0.05 * gaussian_blur_array(rng.standard_normal((height, width)), 1.0)
    lo, hi = np.percentile(plane, 1), np.percentile(plane, 99)
    plane = np.clip((plane - lo) / (hi - lo), 0.0, 1.0)
    return ImageBuffer(0.03 + 0.94 * plane)


def gaussian_bump_field(height, width, center, amplitude, sigma):
    """Smooth displacement field: a Gaussian bump of motion around `center`."""
    ys, xs = np.mgrid[0:height, 0:width].astype(float)
    cx, cy = center
    envelope = np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2.0 * sigma**2))
    ax, ay = amplitude
    vectors = np.stack([ax * envelope, ay * envelope], axis=2)
    return vectors


def tinted(plane_img, seed=0):
    """Give a single-plane image three slightly offset channels."""
    rng = np.random.default_rng(seed)
    plane = plane_img.data[:, :, 0]
    shifts = rng.uniform(-0.03, 0.03, size=3)
    return ImageBuffer(np.stack([np.clip(plane + s, 0.0, 1.0) for s in shifts], axis=2))


def build_synthetic_corpus(root, size=192, seed=0):
    """Ten-pair corpus with known perturbations: 3 clean, 4 homography, 3 elastic.

    Returns {pair_id: expected correction mode}. Streaks land on every rainy
    frame; homography pairs carry a few-pixel projective shake, elastic pairs
    a smooth local bump.
    """
    from pathlib import Path

    import rainforge.rain as rain
    from rainforge.imaging import DisplacementField, Homography, save_image

    root = Path(root)
    rainy_dir = root / "rainy"
    clean_dir = root / "clean"
    rainy_dir.mkdir(parents=True, exist_ok=True)
    clean_dir.mkdir(parents=True, exist_ok=True)

    modes = ["none"] * 3 + ["homography"] * 4 + ["elastic"] * 3
    expected = {}
    rng = np.random.default_rng(seed)
    for idx, mode in enumerate(modes):
        scene = f"scene{idx:02d}"
        clean = tinted(keypoint_texture(size, size, seed=seed * 100 + idx), seed=idx)
        streaks = rain.StreakParams(
            width=size,
            height=size,
            count=45,
            opacity_range=(0.15, 0.35),
            length_range=(8.0, 20.0),
            seed=seed * 100 + idx,
        )
        warp = None
        field = None
        if mode == "homography":
            mat = np.eye(3)
            mat[0, 2] = float(rng.uniform(2.0, 4.0) * rng.choice([-1, 1]))
            mat[1, 2] = float(rng.uniform(2.0, 4.0) * rng.choice([-1, 1]))
            mat[:2, :2] += rng.normal(0, 0.004, (2, 2))
            warp = Homography(mat)
        elif mode == "elastic":
            amp = rng.uniform(2.2, 3.2, size=2) * rng.choice([-1, 1], size=2)
            center = (size * rng.uniform(0.35, 0.65), size * rng.uniform(0.35, 0.65))
            field = DisplacementField(
                gaussian_bump_field(size, size, center=center, amplitude=tuple(amp), sigma=size * 0.18)
            )
        rainy, _ = rain.synthesize_pair(clean, streaks=streaks, warp=warp, field=field)
        save_image(rainy, rainy_dir / f"{scene}_20240310T1200{idx:02d}.png")
        save_image(clean, clean_dir / f"{scene}_20240310T1220{idx:02d}.png")
        expected[scene] = mode
    return expected


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
