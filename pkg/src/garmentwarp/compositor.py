"""Deterministic garment compositing.

Mirrors how the try-on synthesizer builds its inputs: the person image with
the upper-body region blanked (the *agnostic* image), the warped garment
laid over it (the *combined representation*), and a final per-pixel convex
blend guided by a garment mask.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .imaging import ImageBuffer, SegMask, require_same_shape, to_uint8

# Label ids of the 20-class LIP human-parsing scheme.
LIP_LABELS = {
    "background": 0,
    "hat": 1,
    "hair": 2,
    "glove": 3,
    "sunglasses": 4,
    "upper_clothes": 5,
    "dress": 6,
    "coat": 7,
    "socks": 8,
    "pants": 9,
    "jumpsuits": 10,
    "scarf": 11,
    "skirt": 12,
    "face": 13,
    "left_arm": 14,
    "right_arm": 15,
    "left_leg": 16,
    "right_leg": 17,
    "left_shoe": 18,
    "right_shoe": 19,
}
GARMENT_PARTS = ("upper_clothes", "dress", "coat")
# Arms are kept: without a learned synthesizer nothing can repaint them.
AGNOSTIC_PARTS = GARMENT_PARTS


@dataclass(frozen=True)
class LabelConfig:
    """Maps parsing label ids to the regions the pipeline needs."""

    labels: Mapping[str, int] = None
    garment_parts: tuple[str, ...] = GARMENT_PARTS
    agnostic_parts: tuple[str, ...] = AGNOSTIC_PARTS

    def __post_init__(self):
        object.__setattr__(self, "labels", dict(self.labels or LIP_LABELS))
        for name in self.garment_parts + self.agnostic_parts:
            if name not in self.labels:
                raise KeyError(f"label {name!r} missing from label config")

    def ids(self, parts: Iterable[str]) -> list[int]:
        return [self.labels[p] for p in parts]

    @classmethod
    def from_dict(cls, obj: Mapping) -> "LabelConfig":
        return cls(
            labels=obj.get("labels"),
            garment_parts=tuple(obj.get("garment_parts", GARMENT_PARTS)),
            agnostic_parts=tuple(obj.get("agnostic_parts", AGNOSTIC_PARTS)),
        )


def mask_from_labels(label_map, ids: Iterable[int]) -> SegMask:
    return SegMask(np.isin(np.asarray(label_map), list(ids)).astype(np.float64))


def garment_mask(label_map, config: LabelConfig | None = None) -> SegMask:
    config = config or LabelConfig()
    return mask_from_labels(label_map, config.ids(config.garment_parts))


def upper_body_mask(label_map, config: LabelConfig | None = None) -> SegMask:
    config = config or LabelConfig()
    return mask_from_labels(label_map, config.ids(config.agnostic_parts))


def extract_segment(image: ImageBuffer, mask: SegMask) -> ImageBuffer:
    """The garment segment: image RGB with alpha taken from ``mask``."""
    require_same_shape(image, mask)
    return image.with_alpha(mask.to_uint8())


def build_person_agnostic(person: ImageBuffer, upper_body_mask: SegMask) -> ImageBuffer:
    """Zero RGB wherever the mask is at least 0.5; alpha is kept."""
    require_same_shape(person, upper_body_mask)
    px = np.array(person.pixels)
    px[upper_body_mask.values >= 0.5, :3] = 0
    return ImageBuffer(px)


def combined_representation(agnostic: ImageBuffer, warped_cloth: ImageBuffer) -> ImageBuffer:
    """Cloth RGB wherever cloth alpha > 0, agnostic RGB elsewhere.

    Alpha always comes from ``agnostic`` (the person canvas).
    """
    require_same_shape(agnostic, warped_cloth)
    px = np.array(agnostic.pixels)
    on = warped_cloth.alpha > 0
    px[on, :3] = warped_cloth.rgb[on]
    return ImageBuffer(px)


def convex_combine(i_o: ImageBuffer, r: ImageBuffer, i_m: SegMask) -> ImageBuffer:
    """``i_m * i_o + (1 - i_m) * r`` per RGB channel, rounded to 8 bits.

    Alpha is taken from ``r``.
    """
    require_same_shape(i_o, r, i_m)
    m = i_m.values[..., None]
    blend = m * i_o.rgb.astype(np.float64) + (1.0 - m) * r.rgb.astype(np.float64)
    px = np.array(r.pixels)
    px[..., :3] = to_uint8(blend)
    return ImageBuffer(px)


def uncovered_pixels(upper_body: SegMask, warped_cloth: ImageBuffer, target_mask: SegMask) -> int:
    """Blanked pixels that neither the new garment nor the target mask cover.

    These stay black in the deterministic composite.
    """
    require_same_shape(upper_body, warped_cloth, target_mask)
    blank = upper_body.values >= 0.5
    covered = (warped_cloth.alpha > 0) | (target_mask.values > 0)
    return int(np.count_nonzero(blank & ~covered))
