from .demons import DemonsParams, register_elastic
from .homography import (
    DegenerateGeometryError,
    NoConsensusError,
    RansacResult,
    estimate_homography_ransac,
    solve_homography_dlt,
    symmetric_transfer_errors,
)
from .matching import Correspondence, match_descriptors
from .motion import BlockShift, MotionReport, alignment_residual, phase_correlate
from .sift import Keypoint, SiftParams, detect_keypoints

__all__ = [
    "Keypoint",
    "SiftParams",
    "detect_keypoints",
    "Correspondence",
    "match_descriptors",
    "RansacResult",
    "solve_homography_dlt",
    "estimate_homography_ransac",
    "symmetric_transfer_errors",
    "DegenerateGeometryError",
    "NoConsensusError",
    "DemonsParams",
    "register_elastic",
    "MotionReport",
    "BlockShift",
    "alignment_residual",
    "phase_correlate",
]
