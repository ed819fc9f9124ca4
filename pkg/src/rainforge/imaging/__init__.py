from .buffer import DisplacementField, Homography, ImageBuffer, RegionMask
from .io import (
    ImageFormatError,
    load_image,
    load_mask,
    read_dfield,
    save_image,
    write_dfield,
)
from .ops import (
    CropResult,
    WarpResult,
    apply_mask_crop,
    crop_bounds,
    gaussian_blur,
    gaussian_blur_array,
    gaussian_kernel,
    luminance_array,
    to_grayscale,
    warp_displacement,
    warp_homography,
)

__all__ = [
    "ImageBuffer",
    "Homography",
    "DisplacementField",
    "RegionMask",
    "ImageFormatError",
    "load_image",
    "save_image",
    "load_mask",
    "read_dfield",
    "write_dfield",
    "to_grayscale",
    "luminance_array",
    "warp_homography",
    "warp_displacement",
    "gaussian_blur",
    "gaussian_blur_array",
    "gaussian_kernel",
    "apply_mask_crop",
    "crop_bounds",
    "WarpResult",
    "CropResult",
]
