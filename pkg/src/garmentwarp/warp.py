"""Apply TPS transforms to rasters and point sets.

Images are warped by inverse mapping: a TPS is fitted from the target
points back to the source points, evaluated at every output pixel center,
and the source is sampled bilinearly there. Landmarks travel through the
forward TPS (:func:`warp_points`).
"""

from __future__ import annotations

import numpy as np

from .imaging import ImageBuffer, to_uint8
from .landmarks import ControlPairs
from .tps import DEFAULT_LAMBDA, TpsTransform, evaluate_tps, fit_tps


def pixel_centers(width: int, height: int) -> np.ndarray:
    """Normalized ``(H, W, 2)`` grid of pixel-center coordinates ``(x, y)``."""
    xs = (np.arange(width) + 0.5) / width
    ys = (np.arange(height) + 0.5) / height
    gx, gy = np.meshgrid(xs, ys)
    return np.stack([gx, gy], axis=-1)


def sample_bilinear(image: ImageBuffer, coords) -> np.ndarray:
    """Bilinear RGBA samples (float) at normalized ``coords`` of shape ``(..., 2)``.

    Locations outside the unit square give ``(0, 0, 0, 0)``. Inside it,
    the half-pixel border beyond the outermost centers replicates the edge.
    """
    coords = np.asarray(coords, dtype=np.float64)
    h, w = image.shape
    src = image.pixels.astype(np.float64)
    x, y = coords[..., 0], coords[..., 1]
    inside = (x >= 0.0) & (x <= 1.0) & (y >= 0.0) & (y <= 1.0)

    u = np.clip(np.where(inside, x, 0.0) * w - 0.5, 0.0, w - 1.0)
    v = np.clip(np.where(inside, y, 0.0) * h - 0.5, 0.0, h - 1.0)
    j0 = np.floor(u).astype(np.intp)
    i0 = np.floor(v).astype(np.intp)
    j1 = np.minimum(j0 + 1, w - 1)
    i1 = np.minimum(i0 + 1, h - 1)
    fu = (u - j0)[..., None]
    fv = (v - i0)[..., None]

    top = src[i0, j0] * (1.0 - fu) + src[i0, j1] * fu
    bottom = src[i1, j0] * (1.0 - fu) + src[i1, j1] * fu
    out = top * (1.0 - fv) + bottom * fv
    return np.where(inside[..., None], out, 0.0)


def bilinear_sample(image: ImageBuffer, point) -> tuple[int, int, int, int]:
    """Single RGBA sample at a normalized point, rounded to 8 bits."""
    px = to_uint8(sample_bilinear(image, np.asarray(point, dtype=np.float64).reshape(1, 2))[0])
    return tuple(int(c) for c in px)


def resample(src: ImageBuffer, inverse: TpsTransform, out_dims: tuple[int, int]) -> ImageBuffer:
    """Warp ``src`` given the output-to-source map ``inverse``."""
    width, height = out_dims
    if width <= 0 or height <= 0:
        raise ValueError(f"output dimensions must be positive, got {out_dims}")
    grid = pixel_centers(width, height)
    coords = evaluate_tps(inverse, grid.reshape(-1, 2)).reshape(height, width, 2)
    out = to_uint8(sample_bilinear(src, coords))
    out[out[..., 3] == 0] = 0
    return ImageBuffer(out)


def warp_image(
    src: ImageBuffer,
    pairs: ControlPairs,
    lam: float = DEFAULT_LAMBDA,
    out_dims: tuple[int, int] | None = None,
) -> ImageBuffer:
    """Warp ``src`` so that ``pairs.source`` locations move to ``pairs.target``.

    ``out_dims`` is ``(width, height)`` and defaults to the source size.
    Output pixels sampling outside the source, or landing on fully
    transparent source, are fully transparent.
    """
    if out_dims is None:
        out_dims = (src.width, src.height)
    inverse = fit_tps(pairs.swapped(), lam)
    return resample(src, inverse, out_dims)


def warp_points(pairs: ControlPairs, lam: float, pts) -> np.ndarray:
    """Forward TPS (source to target) applied to ``pts``."""
    return evaluate_tps(fit_tps(pairs, lam), np.asarray(pts, dtype=np.float64))
