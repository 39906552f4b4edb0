"""Face-crop abstraction, bilinear resizing and intensity normalization.

Images flow through the system as float arrays with values in [-1, 1]
(height x width x 3). Crops come from a pluggable provider; the default
provider returns the full frame, which is what the synthetic corpus uses
in place of a face detector.
"""

from __future__ import annotations

import io
from typing import Tuple, Union

import numpy as np
from PIL import Image

from affmt.errors import ValidationError

SUPPORTED_TARGETS = (32, 96)

Box = Tuple[int, int, int, int]  # (left, top, right, bottom), right/bottom exclusive


def full_frame_box(image: np.ndarray) -> Box:
    h, w = image.shape[:2]
    return (0, 0, w, h)


class FullFrameCropProvider:
    """Identity crop: stands in for a face detector on pre-cropped data."""

    def __call__(self, video_id: str, frame_index: int, image: np.ndarray) -> Box:
        return full_frame_box(image)


def decode_image(frame: Union[bytes, np.ndarray]) -> np.ndarray:
    """Decode PNG bytes (or pass through an array) to HxWx3 uint8."""
    if isinstance(frame, np.ndarray):
        arr = frame
    else:
        arr = np.asarray(Image.open(io.BytesIO(frame)).convert("RGB"))
    if arr.ndim == 2:
        arr = np.stack([arr] * 3, axis=-1)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValidationError(f"expected HxWx3 image, got shape {arr.shape}")
    return arr.astype(np.uint8, copy=False)


def to_unit_range(pixels: np.ndarray) -> np.ndarray:
    """Linearly map [0, 255] intensities to [-1, 1] float32."""
    return (pixels.astype(np.float32) / 127.5) - 1.0


def from_unit_range(values: np.ndarray) -> np.ndarray:
    """Inverse of to_unit_range, rounding back to uint8."""
    arr = np.clip((np.asarray(values, dtype=np.float64) + 1.0) * 127.5, 0, 255)
    return np.round(arr).astype(np.uint8)


def assert_image_range(values: np.ndarray, context: str = "image") -> None:
    """Global range-invariant hook: every image tensor stays in [-1, 1]."""
    v = np.asarray(values)
    if v.size and (v.min() < -1.0 or v.max() > 1.0):
        raise ValidationError(
            f"{context} violates the [-1, 1] range: min={v.min()}, max={v.max()}"
        )


def bilinear_resize(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Vectorized bilinear resampling with half-pixel-center alignment.

    Resizing an image to its own size is the identity map.
    """
    src = np.asarray(image, dtype=np.float64)
    in_h, in_w = src.shape[:2]

    def axis_coords(n_out, n_in):
        scale = n_in / n_out
        x = (np.arange(n_out) + 0.5) * scale - 0.5
        x = np.clip(x, 0.0, n_in - 1.0)
        lo = np.floor(x).astype(np.int64)
        hi = np.minimum(lo + 1, n_in - 1)
        frac = x - lo
        return lo, hi, frac

    y0, y1, fy = axis_coords(out_h, in_h)
    x0, x1, fx = axis_coords(out_w, in_w)

    fy = fy[:, None, None]
    fx = fx[None, :, None]
    top = src[y0][:, x0] * (1 - fx) + src[y0][:, x1] * fx
    bot = src[y1][:, x0] * (1 - fx) + src[y1][:, x1] * fx
    return top * (1 - fy) + bot * fy


def crop_and_resize(
    frame: Union[bytes, np.ndarray], box: Box, target: int
) -> np.ndarray:
    """Crop ``box`` out of a frame and resize to target x target x 3 in [-1, 1]."""
    if target not in SUPPORTED_TARGETS:
        raise ValidationError(
            f"target must be one of {SUPPORTED_TARGETS}, got {target}"
        )
    image = decode_image(frame)
    h, w = image.shape[:2]
    left, top, right, bottom = (int(v) for v in box)
    if right <= left or bottom <= top:
        raise ValidationError(f"degenerate crop box {box}")
    if left < 0 or top < 0 or right > w or bottom > h:
        raise ValidationError(f"crop box {box} outside frame bounds {w}x{h}")

    crop = image[top:bottom, left:right].astype(np.float64)
    resized = bilinear_resize(crop, target, target)
    out = (resized / 127.5 - 1.0).astype(np.float32)
    assert_image_range(out, "crop_and_resize output")
    return out


def encode_png(image_uint8: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(image_uint8).save(buf, format="PNG")
    return buf.getvalue()
