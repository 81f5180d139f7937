"""Raster containers and PNG I/O.

``ImageBuffer`` wraps an ``(H, W, 4)`` uint8 RGBA array; the alpha channel
marks garment-segment membership (0 = outside). ``SegMask`` wraps an
``(H, W)`` float array with values in ``[0, 1]``.

Normalized coordinates address the image as the unit square: pixel
``(row i, col j)`` has its center at ``((j + 0.5) / W, (i + 0.5) / H)``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ImageBuffer:
    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 4:
            raise ValueError(f"ImageBuffer needs an (H, W, 4) array, got {px.shape}")
        if px.shape[0] == 0 or px.shape[1] == 0:
            raise ValueError("ImageBuffer dimensions must be positive")
        if px.dtype != np.uint8:
            if np.any(px < 0) or np.any(px > 255):
                raise ValueError("pixel values must lie in [0, 255]")
            px = px.astype(np.uint8)
        px = np.array(px, copy=True)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape[:2]

    @property
    def rgb(self) -> np.ndarray:
        return self.pixels[..., :3]

    @property
    def alpha(self) -> np.ndarray:
        return self.pixels[..., 3]

    @classmethod
    def from_rgb(cls, rgb, alpha=None) -> "ImageBuffer":
        rgb = np.asarray(rgb, dtype=np.uint8)
        if alpha is None:
            alpha = np.full(rgb.shape[:2], 255, dtype=np.uint8)
        return cls(np.dstack([rgb, np.asarray(alpha, dtype=np.uint8)]))

    @classmethod
    def blank(cls, width: int, height: int) -> "ImageBuffer":
        return cls(np.zeros((height, width, 4), dtype=np.uint8))

    def with_alpha(self, alpha) -> "ImageBuffer":
        return ImageBuffer.from_rgb(self.rgb, alpha)

    def luma(self) -> np.ndarray:
        """Luma ``0.299 R + 0.587 G + 0.114 B`` scaled to ``[0, 1]``."""
        rgb = self.pixels[..., :3].astype(np.float64) / 255.0
        return rgb @ np.array([0.299, 0.587, 0.114])

    def opaque_area(self) -> int:
        return int(np.count_nonzero(self.alpha))

    def __eq__(self, other):
        if not isinstance(other, ImageBuffer):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class SegMask:
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.ndim != 2 or 0 in v.shape:
            raise ValueError(f"SegMask needs a non-empty 2-D array, got shape {v.shape}")
        if not np.all(np.isfinite(v)) or v.min() < 0.0 or v.max() > 1.0:
            raise ValueError("mask values must lie in [0, 1]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def is_binary(self) -> bool:
        return bool(np.all((self.values == 0.0) | (self.values == 1.0)))

    def binarize(self, threshold: float = 0.5) -> "SegMask":
        return SegMask((self.values >= threshold).astype(np.float64))

    @classmethod
    def from_alpha(cls, image: ImageBuffer, threshold: int = 128) -> "SegMask":
        """Binary mask of pixels whose alpha is at least ``threshold``."""
        return cls((image.alpha >= threshold).astype(np.float64))

    def to_uint8(self) -> np.ndarray:
        return np.floor(self.values * 255.0 + 0.5).astype(np.uint8)

    def __eq__(self, other):
        if not isinstance(other, SegMask):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    __hash__ = None


def require_same_shape(*items) -> None:
    shapes = {tuple(it.shape) for it in items}
    if len(shapes) > 1:
        raise DimensionMismatch(f"raster dimensions differ: {sorted(shapes)}")


def to_uint8(values) -> np.ndarray:
    """Round to the nearest 8-bit value (halves round up) and clip."""
    return np.clip(np.floor(np.asarray(values, dtype=np.float64) + 0.5), 0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# PNG


def _png_bytes(img: Image.Image) -> bytes:
    buf = io.BytesIO()
    img.save(buf, format="PNG", optimize=False)
    return buf.getvalue()


def encode_png(image: ImageBuffer) -> bytes:
    return _png_bytes(Image.fromarray(np.ascontiguousarray(image.pixels), mode="RGBA"))


def decode_png(data: bytes) -> ImageBuffer:
    with Image.open(io.BytesIO(data)) as im:
        return ImageBuffer(np.asarray(im.convert("RGBA")))


def read_image(path) -> ImageBuffer:
    with open(path, "rb") as fh:
        return decode_png(fh.read())


def write_image(image: ImageBuffer, path) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_png(image))


def read_mask(path) -> SegMask:
    """Grayscale PNG, value / 255."""
    with Image.open(path) as im:
        return SegMask(np.asarray(im.convert("L"), dtype=np.float64) / 255.0)


def write_mask(mask: SegMask, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_png_bytes(Image.fromarray(mask.to_uint8(), mode="L")))


def read_label_map(path) -> np.ndarray:
    """8-bit label map (palette or grayscale PNG) as an ``(H, W)`` uint8 array."""
    with Image.open(path) as im:
        if im.mode == "P":
            return np.asarray(im, dtype=np.uint8)
        return np.asarray(im.convert("L"), dtype=np.uint8)


def write_label_map(labels, path) -> None:
    labels = np.asarray(labels, dtype=np.uint8)
    im = Image.fromarray(labels, mode="P")
    rng = np.random.default_rng(0)
    palette = rng.integers(0, 256, size=(256, 3), dtype=np.uint8)
    palette[0] = 0
    im.putpalette(palette.ravel().tolist())
    with open(path, "wb") as fh:
        fh.write(_png_bytes(im))
