"""Synthetic warping glitches and self-supervised training samples.

A glitch is produced by jittering a garment's fashion landmarks with
Gaussian noise and warping the garment along the resulting TPS. From a
single model image this yields training pairs for a mask generator
(glitched segment -> true garment mask) and an image synthesizer
(agnostic image + glitched segment -> original image).
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from . import compositor
from .imaging import ImageBuffer, SegMask, require_same_shape, write_image, write_mask
from .landmarks import ControlPairs, Landmark, array_to_landmarks, landmarks_to_array
from .tps import DEFAULT_LAMBDA
from .warp import warp_image

DEFAULT_VARIANCE = 0.001
DEFAULT_DILATION = 3
MASK_GEN = "mask_gen"
SYNTH = "synth"


@dataclass(frozen=True)
class PerturbConfig:
    variance: float = DEFAULT_VARIANCE
    seed: int = 0
    dilation_radius: int = DEFAULT_DILATION

    def __post_init__(self):
        if not self.variance >= 0:
            raise ValueError(f"variance must be nonnegative, got {self.variance}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.dilation_radius < 0:
            raise ValueError("dilation radius must be nonnegative")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(int(self.seed))


def sample_seed(global_seed: int, index: int) -> int:
    """Per-sample seed derived from ``(global_seed, index)``; order independent."""
    digest = hashlib.sha256(f"{int(global_seed)}:{int(index)}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def perturb_landmarks(flm: Sequence[Landmark], cfg: PerturbConfig) -> tuple[Landmark, ...]:
    """Add ``N(0, cfg.variance)`` noise to every coordinate, then clamp to [0, 1]."""
    xy = landmarks_to_array(flm)
    if cfg.variance > 0:
        noise = cfg.rng().normal(0.0, np.sqrt(cfg.variance), size=xy.shape)
        xy = np.clip(xy + noise, 0.0, 1.0)
    return array_to_landmarks(xy, [lm.visible for lm in flm])


def synthesize_glitch(
    segment: ImageBuffer, flm: Sequence[Landmark], cfg: PerturbConfig
) -> tuple[ImageBuffer, tuple[Landmark, ...]]:
    """Warp ``segment`` along the TPS taking ``flm`` to its perturbed copy."""
    perturbed = perturb_landmarks(flm, cfg)
    if cfg.variance == 0:
        return segment, perturbed
    pairs = ControlPairs(landmarks_to_array(flm), landmarks_to_array(perturbed))
    return warp_image(segment, pairs, DEFAULT_LAMBDA), perturbed


def dilate_mask(m: SegMask, radius: int) -> SegMask:
    """Binary dilation by a ``(2 radius + 1)``-sided square."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    if not m.is_binary():
        raise ValueError("dilate_mask expects a binary mask")
    if radius == 0:
        return m
    structure = np.ones((2 * radius + 1, 2 * radius + 1), dtype=bool)
    out = ndimage.binary_dilation(m.values > 0.5, structure=structure)
    return SegMask(out.astype(np.float64))


@dataclass(frozen=True, eq=False)
class SampleBundle:
    mode: str
    seed: int
    inputs: dict  # name -> ImageBuffer | SegMask, in write order
    ground_truth: ImageBuffer | SegMask
    landmarks: tuple[Landmark, ...]

    def write(self, out_dir) -> dict:
        """Write every raster as PNG plus ``manifest.json``; returns the manifest."""
        os.makedirs(out_dir, exist_ok=True)
        paths = []
        for name, raster in self.inputs.items():
            fname = f"{name}.png"
            _write_raster(raster, os.path.join(out_dir, fname))
            paths.append(fname)
        gt_name = "ground_truth.png"
        _write_raster(self.ground_truth, os.path.join(out_dir, gt_name))
        manifest = {
            "mode": self.mode,
            "seed": int(self.seed),
            "inputs": paths,
            "ground_truth": gt_name,
            "perturbed_landmarks": [
                [round(lm.x, 6), round(lm.y, 6), lm.visible] for lm in self.landmarks
            ],
        }
        with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
            json.dump(manifest, fh, sort_keys=True, indent=2)
            fh.write("\n")
        return manifest


def _write_raster(raster, path):
    if isinstance(raster, SegMask):
        write_mask(raster, path)
    else:
        write_image(raster, path)


def make_training_sample(
    model_img: ImageBuffer,
    clothing_mask: SegMask,
    flm: Sequence[Landmark],
    cfg: PerturbConfig,
    mode: str,
) -> SampleBundle:
    """Build one self-supervised sample from a model image.

    ``mask_gen``: input is the glitched garment segment, ground truth the
    original garment mask. ``synth``: inputs are the agnostic image (dilated
    garment region blanked) and that image with the glitched segment laid
    over it; ground truth is the original image.
    """
    if mode not in (MASK_GEN, SYNTH):
        raise ValueError(f"unknown sample mode {mode!r}")
    require_same_shape(model_img, clothing_mask)
    mask = clothing_mask.binarize()
    if not mask.values.any():
        raise ValueError("clothing mask is empty")
    segment = compositor.extract_segment(model_img, mask)
    glitched, perturbed = synthesize_glitch(segment, flm, cfg)
    if mode == MASK_GEN:
        return SampleBundle(
            mode=mode,
            seed=cfg.seed,
            inputs={"glitched_segment": glitched},
            ground_truth=mask,
            landmarks=perturbed,
        )
    region = dilate_mask(mask, cfg.dilation_radius)
    agnostic = compositor.build_person_agnostic(model_img, region)
    combined = compositor.combined_representation(agnostic, glitched)
    return SampleBundle(
        mode=mode,
        seed=cfg.seed,
        inputs={"agnostic": agnostic, "glitched_segment": glitched, "combined": combined},
        ground_truth=model_img,
        landmarks=perturbed,
    )


def generate_samples(items, cfg: PerturbConfig, mode: str, out_dir, workers: int = 1) -> list[dict]:
    """Write one sample per item under ``out_dir/sample_00000`` etc.

    ``items`` is a sequence of ``(model_img, clothing_mask, flm)``. Sample
    ``k`` uses the seed :func:`sample_seed` ``(cfg.seed, k)``, so results do
    not depend on worker scheduling.
    """

    def one(k):
        img, mask, flm = items[k]
        kcfg = PerturbConfig(cfg.variance, sample_seed(cfg.seed, k), cfg.dilation_radius)
        bundle = make_training_sample(img, mask, flm, kcfg, mode)
        return bundle.write(os.path.join(out_dir, f"sample_{k:05d}"))

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        manifests = list(pool.map(one, range(len(items))))
    return manifests


def config_dict(cfg: PerturbConfig) -> dict:
    return asdict(cfg)
