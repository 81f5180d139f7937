"""Three-stage try-on: warp the model's garment, pick a target mask, composite.

Stage 1 predicts where the garment's fashion landmarks land on the person,
pairs them with both sets of human landmarks and warps the garment
segment. Stage 2 takes the target garment mask from an external file when
given, otherwise from the warped segment's alpha. Stage 3 blanks the
person's upper body, lays the warped garment over it and blends.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import compositor, metrics
from .glitch import DEFAULT_DILATION, DEFAULT_VARIANCE, dilate_mask
from .imaging import ImageBuffer, SegMask, require_same_shape, write_image, write_mask
from .landmarks import (
    LandmarkAnnotation,
    build_control_pairs,
    denormalize_landmarks,
    normalize_landmarks,
    serialize_annotation,
)
from .predictor import PredictorModel
from .predictor import forward as predict_fashion
from .tps import DEFAULT_LAMBDA
from .warp import warp_image

ARTIFACTS = (
    "warped_cloth.png",
    "target_mask.png",
    "combined.png",
    "output.png",
    "metrics.json",
    "run.json",
)


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.message = message


@dataclass
class PipelineConfig:
    lam: float = DEFAULT_LAMBDA
    window: int = 3
    variance: float = DEFAULT_VARIANCE
    dilation_radius: int = DEFAULT_DILATION
    seed: int = 0
    out_dir: str = "tryon_out"
    boundary_band: int = 2
    labels: dict = field(default_factory=lambda: {"labels": dict(compositor.LIP_LABELS)})

    @classmethod
    def from_dict(cls, obj: dict) -> "PipelineConfig":
        aliases = {"lambda": "lam", "dilate": "dilation_radius", "out": "out_dir"}
        known = {f.name for f in fields(cls)}
        kwargs = {}
        for key, value in obj.items():
            key = aliases.get(key, key)
            if key not in known:
                raise ValueError(f"unknown config key {key!r}")
            kwargs[key] = value
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(eq=False)
class PipelineResult:
    warped_cloth: ImageBuffer
    target_mask: SegMask
    agnostic: ImageBuffer
    combined: ImageBuffer
    output: ImageBuffer
    predicted: LandmarkAnnotation  # person annotation carrying predicted fashion landmarks
    metrics: dict


def boundary_band(mask: SegMask, width: int) -> np.ndarray:
    """Pixels within ``width`` of the mask contour (boolean array)."""
    if width <= 0:
        return np.zeros(mask.shape, dtype=bool)
    binary = mask.binarize()
    grown = dilate_mask(binary, width).values > 0
    shrunk = ~(dilate_mask(SegMask(1.0 - binary.values), width).values > 0)
    return grown & ~shrunk


def _stage(name):
    def wrap(fn):
        def inner(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except StageError:
                raise
            except (ValueError, KeyError, OSError) as exc:
                raise StageError(name, str(exc)) from exc

        return inner

    return wrap


@_stage("warp")
def _stage_warp(model_ann, person_ann, model_img, model_labels, predictor, cfg, label_cfg):
    if model_ann.fashion_landmarks is None:
        raise ValueError("model annotation has no fashion landmarks")
    if (model_img.width, model_img.height) != (model_ann.width, model_ann.height):
        raise ValueError("model image size does not match its annotation")
    m = normalize_landmarks(model_ann)
    p = normalize_landmarks(person_ann)
    if predictor is None:
        c_prime = m.fashion_landmarks
    else:
        c_prime = predict_fashion(predictor, m.human_landmarks, p.human_landmarks, m.fashion_landmarks)
    pairs = build_control_pairs(m, p, m.fashion_landmarks, c_prime)
    segment = compositor.extract_segment(model_img, compositor.garment_mask(model_labels, label_cfg))
    warped = warp_image(segment, pairs, cfg.lam, (person_ann.width, person_ann.height))
    predicted = LandmarkAnnotation(
        person_ann.image_path, p.width, p.height, p.human_landmarks, tuple(c_prime), "normalized"
    )
    return warped, denormalize_landmarks(predicted), pairs.count


@_stage("mask")
def _stage_mask(warped, external_mask):
    if external_mask is None:
        return SegMask.from_alpha(warped)
    require_same_shape(warped, external_mask)
    return external_mask


@_stage("compose")
def _stage_compose(person_img, person_labels, warped, target_mask, label_cfg):
    require_same_shape(person_img, warped)
    if person_labels is None:
        upper = target_mask.binarize()
    else:
        upper = compositor.upper_body_mask(person_labels, label_cfg)
    agnostic = compositor.build_person_agnostic(person_img, upper)
    combined = compositor.combined_representation(agnostic, warped)
    output = compositor.convex_combine(warped, combined, target_mask)
    return agnostic, combined, output, compositor.uncovered_pixels(upper, warped, target_mask)


def run_pipeline(
    model_annotation: LandmarkAnnotation,
    person_annotation: LandmarkAnnotation,
    model_image: ImageBuffer,
    model_parsing,
    person_image: ImageBuffer,
    person_parsing=None,
    predictor: PredictorModel | None = None,
    cfg: PipelineConfig | None = None,
    external_mask: SegMask | None = None,
    write: bool = True,
) -> PipelineResult:
    """Run all three stages; writes the artifact directory unless ``write`` is false.

    Without a ``predictor`` the garment landmarks are carried over unchanged
    (``c'_flm = c_flm``), which is exact when model and person coincide.
    """
    cfg = cfg or PipelineConfig()
    label_cfg = compositor.LabelConfig.from_dict(cfg.labels)
    warped, predicted, n_pairs = _stage_warp(
        model_annotation, person_annotation, model_image, model_parsing, predictor, cfg, label_cfg
    )
    target_mask = _stage_mask(warped, external_mask)
    agnostic, combined, output, uncovered = _stage_compose(
        person_image, person_parsing, warped, target_mask, label_cfg
    )

    ssim_cfg = metrics.SsimConfig(window=cfg.window)
    report = metrics.metric_report(output, person_image, ssim_cfg)
    band = boundary_band(target_mask, cfg.boundary_band)
    report["ssim_excluding_boundary"] = metrics.masked_ssim(output, person_image, ~band, ssim_cfg)
    report["boundary_band_px"] = cfg.boundary_band
    report["control_pairs"] = n_pairs
    report["uncovered_pixels"] = uncovered

    result = PipelineResult(warped, target_mask, agnostic, combined, output, predicted, report)
    if write:
        write_artifacts(result, cfg, external_mask is not None, predictor is not None)
    return result


def _dump(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def write_artifacts(result: PipelineResult, cfg: PipelineConfig, external_mask: bool, predictor: bool):
    out = cfg.out_dir
    os.makedirs(out, exist_ok=True)
    write_image(result.warped_cloth, os.path.join(out, "warped_cloth.png"))
    write_mask(result.target_mask, os.path.join(out, "target_mask.png"))
    write_image(result.agnostic, os.path.join(out, "agnostic.png"))
    write_image(result.combined, os.path.join(out, "combined.png"))
    write_image(result.output, os.path.join(out, "output.png"))
    with open(os.path.join(out, "predicted_landmarks.json"), "wb") as fh:
        fh.write(serialize_annotation(result.predicted))
    _dump(result.metrics, os.path.join(out, "metrics.json"))
    run = cfg.to_dict()
    run["external_mask"] = external_mask
    run["predictor"] = predictor
    _dump(run, os.path.join(out, "run.json"))
