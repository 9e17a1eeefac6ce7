"""Raster loading/saving and grayscale conversion.

Images are plain numpy arrays: RGB images are ``(rows, cols, 3)`` uint8,
gray images ``(rows, cols)`` uint8.
"""
from __future__ import annotations

import os

import numpy as np
from PIL import Image, UnidentifiedImageError

MAX_DIM = 0xFFFF


class ImageFormatError(ValueError):
    """Unreadable, unsupported or oversized image."""


def check_dims(rows: int, cols: int) -> None:
    if rows < 1 or cols < 1:
        raise ImageFormatError(f"empty image ({rows}x{cols})")
    if rows > MAX_DIM or cols > MAX_DIM:
        raise ImageFormatError(
            f"image {rows}x{cols} exceeds the 16-bit dimension limit of {MAX_DIM}")


def load_image(path: str | os.PathLike) -> np.ndarray:
    """Load a PNG or PPM file as an RGB uint8 array; alpha is dropped."""
    try:
        with Image.open(path) as im:
            if im.format not in ("PNG", "PPM"):
                raise ImageFormatError(f"unsupported format {im.format!r}: {path}")
            cols, rows = im.size
            check_dims(rows, cols)
            arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    except (UnidentifiedImageError, OSError) as exc:
        raise ImageFormatError(f"cannot read image {path}: {exc}") from exc
    return np.ascontiguousarray(arr)


def save_image(img: np.ndarray, path: str | os.PathLike) -> None:
    """Write an RGB uint8 array; format follows the extension (.png, .ppm)."""
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3 or img.dtype != np.uint8:
        raise ImageFormatError("expected an (rows, cols, 3) uint8 array")
    check_dims(img.shape[0], img.shape[1])
    ext = os.path.splitext(str(path))[1].lower()
    fmt = {".png": "PNG", ".ppm": "PPM"}.get(ext)
    if fmt is None:
        raise ImageFormatError(f"unsupported output extension {ext!r}")
    Image.fromarray(img, mode="RGB").save(path, format=fmt)


def to_gray(img: np.ndarray) -> np.ndarray:
    """BT.601 luma, rounded half-up: ``round(0.299 R + 0.587 G + 0.114 B)``."""
    img = np.asarray(img)
    if img.ndim == 2:
        return img.astype(np.uint8)
    rgb = img[..., :3].astype(np.int64)
    y = (299 * rgb[..., 0] + 587 * rgb[..., 1] + 114 * rgb[..., 2] + 500) // 1000
    return np.clip(y, 0, 255).astype(np.uint8)
