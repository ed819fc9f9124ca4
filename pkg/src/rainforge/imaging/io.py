"""Image and displacement-field file I/O.

Supported image formats are 8-bit PNG and binary PPM (P6, maxval 255).
Stored 8-bit values v map to v/255 on load; saving rounds v*255 to the
nearest integer, so a save/load round trip is bit-exact at 8-bit depth.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .buffer import DisplacementField, ImageBuffer, RegionMask

__all__ = [
    "load_image",
    "save_image",
    "read_dfield",
    "write_dfield",
    "load_mask",
]


class ImageFormatError(ValueError):
    """Unsupported or corrupt image file."""


def _quantize(img: ImageBuffer) -> np.ndarray:
    return np.round(img.data * 255.0).astype(np.uint8)


def load_image(path) -> ImageBuffer:
    """Load a PNG or binary PPM file into a [0, 1] image buffer."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such image file: {path}")
    suffix = path.suffix.lower()
    if suffix == ".ppm":
        return _load_ppm(path)
    if suffix == ".png":
        return _load_png(path)
    raise ImageFormatError(f"unsupported image format '{suffix}' (PNG and binary PPM only): {path}")


def save_image(img: ImageBuffer, path) -> None:
    """Write an image buffer as 8-bit PNG or binary PPM, chosen by extension."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".ppm":
        _save_ppm(img, path)
    elif suffix == ".png":
        _save_png(img, path)
    else:
        raise ImageFormatError(f"unsupported image format '{suffix}' (PNG and binary PPM only): {path}")


def _load_png(path: Path) -> ImageBuffer:
    try:
        with Image.open(path) as im:
            if im.mode not in ("L", "RGB"):
                im = im.convert("RGB")
            arr = np.asarray(im, dtype=np.uint8)
    except UnidentifiedImageError as exc:
        raise ImageFormatError(f"corrupt or non-PNG data in {path}") from exc
    return ImageBuffer(arr.astype(np.float64) / 255.0)


def _save_png(img: ImageBuffer, path: Path) -> None:
    arr = _quantize(img)
    if img.channels == 1:
        pil = Image.fromarray(arr[:, :, 0], mode="L")
    else:
        pil = Image.fromarray(arr, mode="RGB")
    path.parent.mkdir(parents=True, exist_ok=True)
    pil.save(path, format="PNG")


def _load_ppm(path: Path) -> ImageBuffer:
    raw = path.read_bytes()
    if not raw.startswith(b"P6"):
        raise ImageFormatError(f"not a binary PPM (P6) file: {path}")

    # Header: magic, width, height, maxval as whitespace-separated tokens,
    # with '#' comments allowed; a single whitespace byte ends the header.
    tokens = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ImageFormatError(f"truncated PPM header: {path}")
        tokens.append(raw[start:pos])
    pos += 1  # single whitespace after maxval

    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise ImageFormatError(f"malformed PPM header: {path}") from exc
    if maxval != 255:
        raise ImageFormatError(f"only maxval 255 PPM supported, got {maxval}: {path}")
    expected = width * height * 3
    data = raw[pos : pos + expected]
    if len(data) != expected:
        raise ImageFormatError(f"PPM pixel data truncated ({len(data)} of {expected} bytes): {path}")
    arr = np.frombuffer(data, dtype=np.uint8).reshape(height, width, 3)
    return ImageBuffer(arr.astype(np.float64) / 255.0)


def _save_ppm(img: ImageBuffer, path: Path) -> None:
    if img.channels != 3:
        raise ImageFormatError("binary PPM (P6) stores RGB images only")
    arr = _quantize(img)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(f"P6\n{img.width} {img.height}\n255\n".encode("ascii"))
        fh.write(arr.tobytes())


_DFIELD_MAGIC_LEN = 8  # two little-endian uint32: width, height


def write_dfield(field: DisplacementField, path) -> None:
    """Serialize a displacement field: LE uint32 width/height, then row-major float32 (dx, dy) pairs."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(struct.pack("<II", field.width, field.height))
        fh.write(field.vectors.astype("<f4").tobytes())


def read_dfield(path) -> DisplacementField:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _DFIELD_MAGIC_LEN:
        raise ValueError(f"truncated displacement field file: {path}")
    width, height = struct.unpack_from("<II", raw, 0)
    expected = width * height * 2 * 4
    body = raw[_DFIELD_MAGIC_LEN:]
    if len(body) != expected:
        raise ValueError(f"displacement field size mismatch in {path}: {len(body)} != {expected}")
    vectors = np.frombuffer(body, dtype="<f4").astype(np.float64).reshape(height, width, 2)
    return DisplacementField(vectors)


def load_mask(path) -> RegionMask:
    """Load a mask image; pixels with luminance >= 0.5 are included."""
    img = load_image(path)
    lum = img.data.mean(axis=2)
    return RegionMask(lum >= 0.5)
