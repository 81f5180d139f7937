"""Synthetic model/person fixtures with hand-placed landmarks.

Each fixture is a flat cartoon figure: head, neck, a patterned short-sleeved
top, bare forearms and trousers on a plain background. The renderer draws
the RGB image and a LIP-style parsing label map from the same primitives,
so labels and pixels agree exactly, and writes an annotation with the 9
human and 6 fashion landmarks in pixel coordinates.

Run ``python -m garmentwarp.fixtures OUT_DIR`` to regenerate the shipped set.
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass
from importlib import resources

import numpy as np
from PIL import Image, ImageDraw

from .compositor import LIP_LABELS
from .imaging import ImageBuffer, read_image, read_label_map, write_image, write_label_map
from .landmarks import Landmark, LandmarkAnnotation, load_annotation, save_annotation

WIDTH, HEIGHT = 96, 128


@dataclass(frozen=True)
class Pose:
    """Joint positions in pixels (x, y)."""

    head: tuple[float, float]
    neck: tuple[float, float]
    r_shoulder: tuple[float, float]
    r_elbow: tuple[float, float]
    r_wrist: tuple[float, float]
    l_shoulder: tuple[float, float]
    l_elbow: tuple[float, float]
    l_wrist: tuple[float, float]
    mid_hip: tuple[float, float]
    hip_half_width: float = 13.0


@dataclass(frozen=True)
class Style:
    background: tuple[int, int, int]
    skin: tuple[int, int, int]
    hair: tuple[int, int, int]
    shirt: tuple[int, int, int]
    shirt_accent: tuple[int, int, int]
    pattern: str  # "stripes", "checks" or "dots"
    pants: tuple[int, int, int]


STANDING = Pose(
    head=(48, 18),
    neck=(48, 32),
    r_shoulder=(34, 36),
    r_elbow=(28, 58),
    r_wrist=(26, 80),
    l_shoulder=(62, 36),
    l_elbow=(68, 58),
    l_wrist=(70, 80),
    mid_hip=(48, 80),
)
ARMS_OUT = Pose(
    head=(48, 18),
    neck=(48, 32),
    r_shoulder=(34, 36),
    r_elbow=(20, 52),
    r_wrist=(10, 68),
    l_shoulder=(62, 36),
    l_elbow=(76, 52),
    l_wrist=(86, 68),
    mid_hip=(48, 80),
)
LEANING = Pose(
    head=(44, 19),
    neck=(45, 33),
    r_shoulder=(31, 38),
    r_elbow=(27, 60),
    r_wrist=(30, 82),
    l_shoulder=(59, 35),
    l_elbow=(69, 55),
    l_wrist=(74, 76),
    mid_hip=(47, 82),
    hip_half_width=14.0,
)

STYLES = {
    "stripes": Style((214, 220, 226), (224, 172, 140), (60, 40, 30), (200, 40, 50), (250, 230, 90), "stripes", (40, 50, 90)),
    "checks": Style((236, 228, 212), (190, 140, 110), (20, 20, 20), (30, 110, 60), (235, 235, 235), "checks", (90, 70, 60)),
    "dots": Style((200, 214, 232), (240, 200, 170), (150, 90, 40), (40, 80, 180), (250, 160, 40), "dots", (30, 30, 30)),
}

FIXTURES = {
    "stripes_standing": ("stripes", STANDING),
    "checks_arms_out": ("checks", ARMS_OUT),
    "dots_leaning": ("dots", LEANING),
}
# second poses of the same outfits, for model-to-person demos
ALT_POSES = {
    "stripes_standing": ARMS_OUT,
    "checks_arms_out": LEANING,
    "dots_leaning": STANDING,
}


def _lerp(a, b, t):
    return (a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t)


def _offset(p, q, d):
    """Points ``p`` and ``q`` shifted ``d`` pixels along the normal of ``pq``."""
    v = np.subtract(q, p).astype(float)
    n = np.array([-v[1], v[0]]) / max(np.hypot(*v), 1e-9)
    return tuple(np.add(p, d * n)), tuple(np.add(q, d * n))


def _sleeve(shoulder, elbow, width=7.0, length=0.55):
    end = _lerp(shoulder, elbow, length)
    a1, b1 = _offset(shoulder, end, width)
    a2, b2 = _offset(shoulder, end, -width)
    return [a1, b1, b2, a2], end


def _garment_geometry(pose: Pose):
    hw = pose.hip_half_width
    hip_r = (pose.mid_hip[0] - hw, pose.mid_hip[1])
    hip_l = (pose.mid_hip[0] + hw, pose.mid_hip[1])
    collar_r = (pose.neck[0] - 5, pose.neck[1] + 1)
    collar_l = (pose.neck[0] + 5, pose.neck[1] + 1)
    torso = [collar_r, pose.r_shoulder, (pose.r_shoulder[0] + 1, pose.r_shoulder[1] + 12), hip_r,
             hip_l, (pose.l_shoulder[0] - 1, pose.l_shoulder[1] + 12), pose.l_shoulder, collar_l,
             (pose.neck[0], pose.neck[1] + 5)]
    r_sleeve, r_end = _sleeve(pose.r_shoulder, pose.r_elbow)
    l_sleeve, l_end = _sleeve(pose.l_shoulder, pose.l_elbow)
    fashion = [collar_l, collar_r, l_end, r_end, hip_l, hip_r]
    return torso, (r_sleeve, l_sleeve), fashion


def _pattern(style: Style, width: int, height: int) -> np.ndarray:
    yy, xx = np.mgrid[0:height, 0:width]
    if style.pattern == "stripes":
        on = (yy // 4) % 2 == 0
    elif style.pattern == "checks":
        on = ((yy // 5) + (xx // 5)) % 2 == 0
    else:
        on = ((xx % 8 - 4) ** 2 + (yy % 8 - 4) ** 2) <= 4
    out = np.empty((height, width, 3), dtype=np.uint8)
    out[:] = style.shirt
    out[on] = style.shirt_accent
    return out


def render(style: Style, pose: Pose, width: int = WIDTH, height: int = HEIGHT):
    """Return ``(ImageBuffer, label_map, human_xy, fashion_xy)``."""
    rgb = Image.new("RGB", (width, height), style.background)
    lab = Image.new("L", (width, height), LIP_LABELS["background"])
    dr, dl = ImageDraw.Draw(rgb), ImageDraw.Draw(lab)

    def both(fn, args, color, label, **kw):
        getattr(dr, fn)(args, fill=color, **kw)
        getattr(dl, fn)(args, fill=LIP_LABELS[label], **kw)

    # trousers
    hw = pose.hip_half_width
    hx, hy = pose.mid_hip
    both("polygon", [(hx - hw, hy - 2), (hx + hw, hy - 2), (hx + hw + 2, height), (hx - hw - 2, height)],
         style.pants, "pants")
    # arms (full length; sleeves cover the upper part)
    for arm, label in (((pose.r_shoulder, pose.r_elbow, pose.r_wrist), "right_arm"),
                       ((pose.l_shoulder, pose.l_elbow, pose.l_wrist), "left_arm")):
        both("line", list(arm), style.skin, label, width=8, joint="curve")
        both("ellipse", [arm[2][0] - 4, arm[2][1] - 4, arm[2][0] + 4, arm[2][1] + 4], style.skin, label)
    # neck and head
    nx, ny = pose.neck
    both("rectangle", [nx - 4, ny - 8, nx + 4, ny + 3], style.skin, "face")
    x, y = pose.head
    both("ellipse", [x - 10, y - 12, x + 10, y + 12], style.skin, "face")
    both("chord", [x - 11, y - 14, x + 11, y + 8], style.hair, "hair", start=180, end=360)

    # shirt: draw its mask, then fill with the pattern
    torso, sleeves, fashion = _garment_geometry(pose)
    shirt = Image.new("L", (width, height), 0)
    ds = ImageDraw.Draw(shirt)
    ds.polygon(torso, fill=255)
    for s in sleeves:
        ds.polygon(s, fill=255)
    on = np.asarray(shirt) > 0
    rgb_arr = np.array(rgb)
    rgb_arr[on] = _pattern(style, width, height)[on]
    lab_arr = np.array(lab)
    lab_arr[on] = LIP_LABELS["upper_clothes"]

    human = [pose.head, pose.neck, pose.r_shoulder, pose.r_elbow, pose.r_wrist,
             pose.l_shoulder, pose.l_elbow, pose.l_wrist, pose.mid_hip]
    return ImageBuffer.from_rgb(rgb_arr), lab_arr, np.array(human, float), np.array(fashion, float)


def make_annotation(image_name, width, height, human_xy, fashion_xy) -> LandmarkAnnotation:
    def lms(xy):
        return tuple(Landmark(round(float(x), 6), round(float(y), 6), True) for x, y in xy)

    return LandmarkAnnotation(image_name, width, height, lms(human_xy), lms(fashion_xy))


def write_fixture(name: str, style: Style, pose: Pose, out_dir) -> str:
    d = os.path.join(out_dir, name)
    os.makedirs(d, exist_ok=True)
    img, labels, human, fashion = render(style, pose)
    write_image(img, os.path.join(d, "image.png"))
    write_label_map(labels, os.path.join(d, "parsing.png"))
    save_annotation(make_annotation("image.png", img.width, img.height, human, fashion),
                    os.path.join(d, "annotation.json"))
    return d


def write_all(out_dir) -> list[str]:
    out = []
    for name, (style_name, pose) in FIXTURES.items():
        style = STYLES[style_name]
        out.append(write_fixture(name, style, pose, out_dir))
        out.append(write_fixture(name + "_alt", style, ALT_POSES[name], out_dir))
    return out


@dataclass(frozen=True, eq=False)
class Fixture:
    name: str
    directory: str
    image: ImageBuffer
    labels: np.ndarray
    annotation: LandmarkAnnotation

    @property
    def image_path(self):
        return os.path.join(self.directory, "image.png")

    @property
    def parsing_path(self):
        return os.path.join(self.directory, "parsing.png")

    @property
    def annotation_path(self):
        return os.path.join(self.directory, "annotation.json")


def fixture_dir() -> str:
    return str(resources.files("garmentwarp") / "data" / "fixtures")


def fixture_names(include_alt: bool = False) -> list[str]:
    names = list(FIXTURES)
    if include_alt:
        names += [n + "_alt" for n in FIXTURES]
    return names


def load_fixture(name: str) -> Fixture:
    d = os.path.join(fixture_dir(), name)
    return Fixture(
        name,
        d,
        read_image(os.path.join(d, "image.png")),
        read_label_map(os.path.join(d, "parsing.png")),
        load_annotation(os.path.join(d, "annotation.json")),
    )


if __name__ == "__main__":
    for path in write_all(sys.argv[1] if len(sys.argv) > 1 else fixture_dir()):
        print(path)
