"""Image similarity metrics on [0, 1] luma: SSIM, DSSIM and PSNR."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .imaging import DimensionMismatch, ImageBuffer


@dataclass(frozen=True)
class SsimConfig:
    window: int = 3
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 1.0
    gaussian_sigma: float | None = None  # None = uniform window

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError(f"SSIM window must be odd and >= 3, got {self.window}")

    @property
    def c1(self) -> float:
        return (self.k1 * self.dynamic_range) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.dynamic_range) ** 2

    def weights(self) -> np.ndarray:
        n = self.window
        if self.gaussian_sigma is None:
            return np.full((n, n), 1.0 / (n * n))
        d = np.arange(n) - (n - 1) / 2
        g = np.exp(-(d**2) / (2.0 * self.gaussian_sigma**2))
        w = np.outer(g, g)
        return w / w.sum()


def _as_luma(img) -> np.ndarray:
    if isinstance(img, ImageBuffer):
        return img.luma()
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("expected an ImageBuffer or a 2-D luma array")
    return arr


def ssim_map(a, b, cfg: SsimConfig = SsimConfig()) -> np.ndarray:
    """SSIM for every full window; shape ``(H - w + 1, W - w + 1)``.

    Entry ``(i, j)`` belongs to the window centered on pixel
    ``(i + w // 2, j + w // 2)``.
    """
    x, y = _as_luma(a), _as_luma(b)
    if x.shape != y.shape:
        raise DimensionMismatch(f"image sizes differ: {x.shape} vs {y.shape}")
    if min(x.shape) < cfg.window:
        raise ValueError(f"image {x.shape} is smaller than the {cfg.window}x{cfg.window} window")
    w = cfg.weights()

    def wmean(img):
        return np.einsum("ijkl,kl->ij", sliding_window_view(img, w.shape), w)

    mx, my = wmean(x), wmean(y)
    vx = wmean(x * x) - mx * mx
    vy = wmean(y * y) - my * my
    cov = wmean(x * y) - mx * my
    num = (2.0 * mx * my + cfg.c1) * (2.0 * cov + cfg.c2)
    den = (mx * mx + my * my + cfg.c1) * (vx + vy + cfg.c2)
    return num / den


def ssim(a, b, cfg: SsimConfig = SsimConfig()) -> float:
    """Mean SSIM over all full windows."""
    return float(ssim_map(a, b, cfg).mean())


def masked_ssim(a, b, keep, cfg: SsimConfig = SsimConfig()) -> float:
    """Mean SSIM over the full windows whose center pixel is in ``keep``."""
    smap = ssim_map(a, b, cfg)
    r = cfg.window // 2
    keep = np.asarray(keep, dtype=bool)[r : r + smap.shape[0], r : r + smap.shape[1]]
    if not keep.any():
        raise ValueError("no SSIM window left after masking")
    return float(smap[keep].mean())


def dssim(a, b, cfg: SsimConfig = SsimConfig()) -> float:
    return 1.0 - ssim(a, b, cfg)


def psnr(a, b) -> float:
    """``10 log10(1 / MSE)`` in dB; ``inf`` for identical images."""
    x, y = _as_luma(a), _as_luma(b)
    if x.shape != y.shape:
        raise DimensionMismatch(f"image sizes differ: {x.shape} vs {y.shape}")
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def metric_report(a, b, cfg: SsimConfig = SsimConfig()) -> dict:
    s = ssim(a, b, cfg)
    p = psnr(a, b)
    return {"ssim": s, "dssim": 1.0 - s, "psnr_db": "inf" if math.isinf(p) else p}
