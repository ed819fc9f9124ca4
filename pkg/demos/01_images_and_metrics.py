"""Image containers, file round trips, and the full-reference quality metrics.

Builds a textured frame, degrades it with noise, and walks through PSNR,
SSIM, and MS-SSIM, including the infinite-PSNR identity marker and the JSON
metric report the curation pipeline stamps into its manifest.
"""

import json
from pathlib import Path

import numpy as np

from rainforge import ImageBuffer, load_image, save_image
from rainforge.imaging.ops import gaussian_blur_array
from rainforge.metrics import metric_report, ms_ssim, psnr, ssim

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)


def textured(height, width, seed):
    rng = np.random.default_rng(seed)
    base = gaussian_blur_array(rng.random((height, width, 3)), 2.0)
    lo, hi = base.min(), base.max()
    return ImageBuffer(0.1 + 0.8 * (base - lo) / (hi - lo))


frame = textured(192, 192, seed=1)
save_image(frame, OUT / "frame.png")
reloaded = load_image(OUT / "frame.png")
print(f"PNG round trip max deviation: {np.abs(reloaded.data - frame.data).max():.6f} (8-bit quantization)")

print(f"identity PSNR: {psnr(frame, frame)}")
print(f"identity SSIM: {ssim(frame, frame).score:.9f}")
print(f"identity MS-SSIM: {ms_ssim(frame, frame):.9f}")

rng = np.random.default_rng(2)
for sigma in (0.02, 0.05, 0.1):
    noisy = ImageBuffer(np.clip(frame.data + rng.normal(0, sigma, frame.data.shape), 0, 1))
    print(
        f"noise sigma={sigma:<5} PSNR={psnr(frame, noisy):6.2f} dB"
        f"  SSIM={ssim(frame, noisy).score:.4f}  MS-SSIM={ms_ssim(frame, noisy):.4f}"
    )

report = metric_report(frame, noisy)
print("manifest-style metric report:")
print(json.dumps(report, indent=2, sort_keys=True))
