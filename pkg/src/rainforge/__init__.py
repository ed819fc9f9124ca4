"""rainforge: curation and alignment toolkit for paired rain/clean image datasets."""

from .imaging import (
    DisplacementField,
    Homography,
    ImageBuffer,
    RegionMask,
    load_image,
    save_image,
)
from .metrics import MsSsimParams, SsimParams, ms_ssim, psnr, ssim
from .objective import (
    ObjectiveWeights,
    RobustLossParams,
    condense_features,
    cosine_similarity,
    full_objective,
    gradient_check,
    rain_robust_batch_loss,
    rain_robust_pair_loss,
)
from .rain import StreakParams, VeilParams, apply_veiling, composite_rain, render_streak_layer, synthesize_pair
from .registration import (
    DemonsParams,
    SiftParams,
    alignment_residual,
    detect_keypoints,
    estimate_homography_ransac,
    match_descriptors,
    register_elastic,
    solve_homography_dlt,
)

__version__ = "0.1.0"

__all__ = [
    "ImageBuffer",
    "Homography",
    "DisplacementField",
    "RegionMask",
    "load_image",
    "save_image",
    "psnr",
    "ssim",
    "ms_ssim",
    "SsimParams",
    "MsSsimParams",
    "detect_keypoints",
    "match_descriptors",
    "solve_homography_dlt",
    "estimate_homography_ransac",
    "register_elastic",
    "alignment_residual",
    "SiftParams",
    "DemonsParams",
    "StreakParams",
    "VeilParams",
    "render_streak_layer",
    "composite_rain",
    "apply_veiling",
    "synthesize_pair",
    "cosine_similarity",
    "condense_features",
    "rain_robust_pair_loss",
    "rain_robust_batch_loss",
    "full_objective",
    "gradient_check",
    "RobustLossParams",
    "ObjectiveWeights",
    "__version__",
]
