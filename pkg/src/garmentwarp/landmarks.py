"""Landmark types, the annotation file format, and control-point assembly.

Annotation files store pixel coordinates. Everything downstream (the TPS
solver, the predictor, glitch synthesis) works in normalized ``[0, 1]``
coordinates, so call :func:`normalize_landmarks` right after parsing.

Landmark index semantics are fixed:

Human landmarks (9, upper body)::

    0 nose            3 right_elbow     6 left_elbow
    1 neck            4 right_wrist     7 left_wrist
    2 right_shoulder  5 left_shoulder   8 mid_hip

Fashion landmarks (6, upper-body garment)::

    0 left_collar     2 left_sleeve     4 left_hem
    1 right_collar    3 right_sleeve    5 right_hem

"Left"/"right" are the wearer's sides.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

HUMAN_LANDMARK_NAMES = (
    "nose",
    "neck",
    "right_shoulder",
    "right_elbow",
    "right_wrist",
    "left_shoulder",
    "left_elbow",
    "left_wrist",
    "mid_hip",
)
FASHION_LANDMARK_NAMES = (
    "left_collar",
    "right_collar",
    "left_sleeve",
    "right_sleeve",
    "left_hem",
    "right_hem",
)
N_HUMAN = len(HUMAN_LANDMARK_NAMES)
N_FASHION = len(FASHION_LANDMARK_NAMES)
MAX_CONTROL_POINTS = N_HUMAN + N_FASHION

PIXEL = "pixel"
NORMALIZED = "normalized"

_DECIMALS = 6


class AnnotationError(ValueError):
    """Raised for malformed or inconsistent annotation data."""


class DegenerateControlPoints(ValueError):
    """Raised when a control-point configuration cannot define a warp."""


@dataclass(frozen=True)
class Landmark:
    x: float
    y: float
    visible: bool = True

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class LandmarkAnnotation:
    image_path: str
    width: int
    height: int
    human_landmarks: tuple[Landmark, ...]
    fashion_landmarks: Optional[tuple[Landmark, ...]] = None
    coordinate_space: str = PIXEL

    def __post_init__(self):
        object.__setattr__(self, "human_landmarks", tuple(self.human_landmarks))
        if self.fashion_landmarks is not None:
            object.__setattr__(self, "fashion_landmarks", tuple(self.fashion_landmarks))
        _validate(self)


@dataclass(frozen=True)
class ControlPairs:
    """Aligned source/target control points, both ``(N, 2)`` float arrays."""

    source: np.ndarray
    target: np.ndarray

    def __post_init__(self):
        src = np.array(self.source, dtype=np.float64).reshape(-1, 2)
        dst = np.array(self.target, dtype=np.float64).reshape(-1, 2)
        if src.shape != dst.shape:
            raise DegenerateControlPoints(
                f"source has {len(src)} points but target has {len(dst)}"
            )
        src.setflags(write=False)
        dst.setflags(write=False)
        object.__setattr__(self, "source", src)
        object.__setattr__(self, "target", dst)

    @property
    def count(self) -> int:
        return len(self.source)

    def swapped(self) -> "ControlPairs":
        return ControlPairs(self.target, self.source)

    def __eq__(self, other):
        if not isinstance(other, ControlPairs):
            return NotImplemented
        return np.array_equal(self.source, other.source) and np.array_equal(
            self.target, other.target
        )

    __hash__ = None


def _validate(a: LandmarkAnnotation) -> None:
    if a.coordinate_space not in (PIXEL, NORMALIZED):
        raise AnnotationError(f"unknown coordinate space {a.coordinate_space!r}")
    if not (isinstance(a.width, (int, np.integer)) and isinstance(a.height, (int, np.integer))):
        raise AnnotationError("width and height must be integers")
    if a.width <= 0 or a.height <= 0:
        raise AnnotationError(f"image size must be positive, got {a.width}x{a.height}")
    if len(a.human_landmarks) != N_HUMAN:
        raise AnnotationError(
            f"expected {N_HUMAN} human landmarks, got {len(a.human_landmarks)}"
        )
    if a.fashion_landmarks is not None and len(a.fashion_landmarks) != N_FASHION:
        raise AnnotationError(
            f"expected {N_FASHION} fashion landmarks, got {len(a.fashion_landmarks)}"
        )
    xmax, ymax = (a.width, a.height) if a.coordinate_space == PIXEL else (1.0, 1.0)
    for lm in all_landmarks(a):
        if not (np.isfinite(lm.x) and np.isfinite(lm.y)):
            raise AnnotationError(f"non-finite landmark {lm}")
        if not (0.0 <= lm.x <= xmax and 0.0 <= lm.y <= ymax):
            raise AnnotationError(
                f"landmark ({lm.x}, {lm.y}) outside image bounds {xmax}x{ymax} "
                f"({a.coordinate_space} space)"
            )


def all_landmarks(a: LandmarkAnnotation) -> tuple[Landmark, ...]:
    return a.human_landmarks + (a.fashion_landmarks or ())


def landmarks_to_array(lms: Sequence[Landmark]) -> np.ndarray:
    """``(n, 2)`` array of coordinates (visibility dropped)."""
    return np.array([[lm.x, lm.y] for lm in lms], dtype=np.float64).reshape(-1, 2)


def array_to_landmarks(xy, visible=None) -> tuple[Landmark, ...]:
    xy = np.asarray(xy, dtype=np.float64).reshape(-1, 2)
    if visible is None:
        visible = [True] * len(xy)
    return tuple(Landmark(float(x), float(y), bool(v)) for (x, y), v in zip(xy, visible))


# ---------------------------------------------------------------------------
# file format


def _lm_from_json(item) -> Landmark:
    if not isinstance(item, (list, tuple)) or len(item) != 3:
        raise AnnotationError(f"landmark must be [x, y, visible], got {item!r}")
    x, y, v = item
    if isinstance(x, bool) or isinstance(y, bool):
        raise AnnotationError(f"landmark coordinates must be numbers, got {item!r}")
    if not isinstance(x, (int, float)) or not isinstance(y, (int, float)):
        raise AnnotationError(f"landmark coordinates must be numbers, got {item!r}")
    if v not in (True, False, 0, 1):
        raise AnnotationError(f"visibility must be a boolean, got {v!r}")
    return Landmark(float(x), float(y), bool(v))


def parse_annotation(data: bytes | str) -> LandmarkAnnotation:
    """Parse an annotation JSON document.

    Raises :class:`AnnotationError` on malformed JSON, missing keys, wrong
    landmark counts, or pixel coordinates outside the image.
    """
    try:
        obj = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise AnnotationError(f"malformed annotation JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise AnnotationError("annotation must be a JSON object")
    missing = {"image", "width", "height", "space", "human_landmarks"} - obj.keys()
    if missing:
        raise AnnotationError(f"annotation missing keys: {sorted(missing)}")
    for key in ("width", "height"):
        if isinstance(obj[key], bool) or not isinstance(obj[key], int):
            raise AnnotationError(f"{key} must be an integer")
    if not isinstance(obj["human_landmarks"], list):
        raise AnnotationError("human_landmarks must be a list")
    human = tuple(_lm_from_json(it) for it in obj["human_landmarks"])
    fashion = None
    if obj.get("fashion_landmarks") is not None:
        if not isinstance(obj["fashion_landmarks"], list):
            raise AnnotationError("fashion_landmarks must be a list")
        fashion = tuple(_lm_from_json(it) for it in obj["fashion_landmarks"])
    return LandmarkAnnotation(
        image_path=str(obj["image"]),
        width=obj["width"],
        height=obj["height"],
        human_landmarks=human,
        fashion_landmarks=fashion,
        coordinate_space=obj["space"],
    )


def _round(v: float) -> float:
    r = round(float(v), _DECIMALS)
    return 0.0 if r == 0 else r  # no "-0.0"


def _lm_to_json(lm: Landmark) -> list:
    return [_round(lm.x), _round(lm.y), bool(lm.visible)]


def serialize_annotation(a: LandmarkAnnotation) -> bytes:
    """Canonical JSON: sorted keys, coordinates rounded to 6 decimals."""
    obj = {
        "image": a.image_path,
        "width": int(a.width),
        "height": int(a.height),
        "space": a.coordinate_space,
        "human_landmarks": [_lm_to_json(lm) for lm in a.human_landmarks],
    }
    if a.fashion_landmarks is not None:
        obj["fashion_landmarks"] = [_lm_to_json(lm) for lm in a.fashion_landmarks]
    return (json.dumps(obj, sort_keys=True) + "\n").encode("utf-8")


def load_annotation(path) -> LandmarkAnnotation:
    with open(path, "rb") as fh:
        return parse_annotation(fh.read())


def save_annotation(a: LandmarkAnnotation, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_annotation(a))


# ---------------------------------------------------------------------------
# coordinates


def _scale(a: LandmarkAnnotation, sx: float, sy: float, space: str) -> LandmarkAnnotation:
    def conv(lms):
        if lms is None:
            return None
        return tuple(Landmark(lm.x * sx, lm.y * sy, lm.visible) for lm in lms)

    return replace(
        a,
        human_landmarks=conv(a.human_landmarks),
        fashion_landmarks=conv(a.fashion_landmarks),
        coordinate_space=space,
    )


def normalize_landmarks(a: LandmarkAnnotation) -> LandmarkAnnotation:
    """Divide pixel coordinates by the image size. Normalized input is returned as is."""
    if a.coordinate_space == NORMALIZED:
        return a
    if a.width == 0 or a.height == 0:
        raise AnnotationError("cannot normalize with zero image size")
    return _scale(a, 1.0 / a.width, 1.0 / a.height, NORMALIZED)


def denormalize_landmarks(a: LandmarkAnnotation) -> LandmarkAnnotation:
    if a.coordinate_space == PIXEL:
        return a
    return _scale(a, float(a.width), float(a.height), PIXEL)


# ---------------------------------------------------------------------------
# control points


def check_nondegenerate(points, tol: float = 1e-9) -> None:
    """Raise unless ``points`` holds at least 3 points that are not all collinear."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(pts) < 3:
        raise DegenerateControlPoints(f"need at least 3 control points, got {len(pts)}")
    centered = pts - pts.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    scale = max(np.abs(centered).max(), 1.0e-300)
    if s[-1] <= tol * scale:
        raise DegenerateControlPoints("control points are collinear")


def build_control_pairs(
    m_hlm: LandmarkAnnotation,
    p_hlm: LandmarkAnnotation,
    c_flm: Sequence[Landmark],
    c_prime_flm: Sequence[Landmark],
) -> ControlPairs:
    """Assemble source (model body + garment) and target (person body + warped garment) points.

    Source is the model's 9 human landmarks followed by the 6 fashion
    landmarks of the model's garment; target is the person's human
    landmarks followed by the predicted fashion landmarks. A pair is kept
    only when the landmark is visible on both sides.
    """
    for ann in (m_hlm, p_hlm):
        if ann.coordinate_space != NORMALIZED:
            raise AnnotationError("build_control_pairs expects normalized annotations")
    if len(c_flm) != N_FASHION or len(c_prime_flm) != N_FASHION:
        raise AnnotationError(
            f"expected {N_FASHION} fashion landmarks per side, "
            f"got {len(c_flm)} and {len(c_prime_flm)}"
        )
    src = tuple(m_hlm.human_landmarks) + tuple(c_flm)
    dst = tuple(p_hlm.human_landmarks) + tuple(c_prime_flm)
    keep = surviving_indices(src, dst)
    source = np.array([src[i].as_tuple() for i in keep], dtype=np.float64).reshape(-1, 2)
    target = np.array([dst[i].as_tuple() for i in keep], dtype=np.float64).reshape(-1, 2)
    check_nondegenerate(source)
    check_nondegenerate(target)
    return ControlPairs(source, target)


def surviving_indices(src: Sequence[Landmark], dst: Sequence[Landmark]) -> list[int]:
    """Indices kept by the both-sides-visible rule."""
    return [i for i, (a, b) in enumerate(zip(src, dst)) if a.visible and b.visible]
