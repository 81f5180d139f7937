"""Synthetic pose-pair datasets for exercising the landmark predictor."""

from __future__ import annotations

import numpy as np

from .landmarks import N_FASHION, N_HUMAN
from .predictor import PoseDataset

_BASE_POSE = np.array(
    [[0.50, 0.14], [0.50, 0.25], [0.35, 0.28], [0.29, 0.45], [0.27, 0.62],
     [0.65, 0.28], [0.71, 0.45], [0.73, 0.62], [0.50, 0.62]]
)


def _poses(rng, n, jitter):
    return np.clip(_BASE_POSE + rng.normal(0.0, jitter, (n, N_HUMAN, 2)), 0.0, 1.0)


def identity_task(n: int = 64, seed: int = 0, jitter: float = 0.05) -> PoseDataset:
    """Garment landmarks stay put whatever the poses: target = input garment landmarks.

    Garment landmarks are spread over ``[0.05, 0.95]`` so the network has to
    read them rather than memorize a mean.
    """
    rng = np.random.default_rng(seed)
    m, p = _poses(rng, n, jitter), _poses(rng, n, jitter)
    c = rng.uniform(0.05, 0.95, (n, N_FASHION, 2))
    return PoseDataset(m, p, c, c.copy())


def affine_task(n: int = 64, seed: int = 0, jitter: float = 0.05) -> PoseDataset:
    """Target = ``0.7 * garment + 0.3 * centroid(person pose)``, a fixed affine map."""
    rng = np.random.default_rng(seed)
    m, p = _poses(rng, n, jitter), _poses(rng, n, jitter)
    c = rng.uniform(0.05, 0.95, (n, N_FASHION, 2))
    target = 0.7 * c + 0.3 * p.mean(axis=1, keepdims=True)
    return PoseDataset(m, p, c, target)
