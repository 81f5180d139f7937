import numpy as np
import pytest

from conftest import random_config
from garmentwarp.fixtures import fixture_names, load_fixture
from garmentwarp.imaging import ImageBuffer
from garmentwarp.landmarks import ControlPairs
from garmentwarp.warp import bilinear_sample, warp_image, warp_points

CORNERS = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def random_image(rng, w=8, h=8, alpha=255):
    rgb = rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
    return ImageBuffer.from_rgb(rgb, np.full((h, w), alpha, dtype=np.uint8))


def affine_oracle(img: ImageBuffer, A, b):
    """Closed-form inverse-affine bilinear resampler over pixel indices.

    Output pixel (i, j) samples the source at the pixel-index location obtained
    by mapping its center through x -> A x + b (normalized units).
    """
    h, w = img.shape
    src = img.pixels.astype(float)
    out = np.zeros_like(src)
    for i in range(h):
        for j in range(w):
            x, y = A @ np.array([(j + 0.5) / w, (i + 0.5) / h]) + b
            if not (0 <= x <= 1 and 0 <= y <= 1):
                continue
            u = min(max(x * w - 0.5, 0), w - 1)
            v = min(max(y * h - 0.5, 0), h - 1)
            j0, i0 = int(np.floor(u)), int(np.floor(v))
            j1, i1 = min(j0 + 1, w - 1), min(i0 + 1, h - 1)
            fu, fv = u - j0, v - i0
            out[i, j] = (
                src[i0, j0] * (1 - fu) * (1 - fv)
                + src[i0, j1] * fu * (1 - fv)
                + src[i1, j0] * (1 - fu) * fv
                + src[i1, j1] * fu * fv
            )
    return out


def test_sample_at_pixel_center(rng):
    img = random_image(rng, 5, 4)
    assert bilinear_sample(img, ((2 + 0.5) / 5, (1 + 0.5) / 4)) == tuple(img.pixels[1, 2])


def test_sample_horizontal_midpoint():
    px = np.zeros((1, 2, 4), np.uint8)
    px[0, 0] = (0, 0, 0, 255)
    px[0, 1] = (100, 0, 0, 255)
    assert bilinear_sample(ImageBuffer(px), (0.5, 0.5)) == (50, 0, 0, 255)


def test_sample_out_of_bounds(rng):
    assert bilinear_sample(random_image(rng), (-0.1, 0.5)) == (0, 0, 0, 0)


def test_identity_warp_is_lossless(rng):
    img = random_image(rng, 17, 11)
    pairs = random_config(rng, 9)
    assert warp_image(img, ControlPairs(pairs.source, pairs.source), 0.01) == img


@pytest.mark.parametrize("shift", [1, 3])
def test_integer_translation_matches_raster_shift(rng, shift):
    img = random_image(rng, 8, 8)
    d = np.array([shift / 8, 0.0])
    out = warp_image(img, ControlPairs(CORNERS, CORNERS + d), 0.0)
    expected = np.zeros_like(img.pixels)
    expected[:, shift:] = img.pixels[:, :-shift]
    np.testing.assert_array_equal(out.pixels, expected)
    assert not out.alpha[:, :shift].any()


def test_quarter_turn_matches_index_rotation(rng):
    img = random_image(rng, 8, 8)
    # (x, y) -> (1 - y, x): a 90 degree turn about the image center
    rotated = np.column_stack([1.0 - CORNERS[:, 1], CORNERS[:, 0]])
    out = warp_image(img, ControlPairs(CORNERS, rotated), 0.0)
    # out(i, j) = src at the preimage; preimage of (x', y') is (y', 1 - x')
    expected = np.rot90(img.pixels, k=-1)
    np.testing.assert_array_equal(out.pixels, expected)


@pytest.mark.parametrize("name", fixture_names())
def test_affine_warp_matches_closed_form(name):
    img = load_fixture(name).image
    A = np.array([[0.95, 0.08], [-0.05, 1.04]])
    b = np.array([0.03, -0.02])
    src = np.array([[0.1, 0.1], [0.9, 0.15], [0.85, 0.9], [0.2, 0.8], [0.5, 0.5]])
    out = warp_image(img, ControlPairs(src, src @ A.T + b), 0.01)
    Ainv = np.linalg.inv(A)
    expected = affine_oracle(img, Ainv, -Ainv @ b)
    interior = (slice(2, -2), slice(2, -2))
    inside = expected[interior][..., 3] > 0
    diff = np.abs(out.pixels[interior].astype(float) - expected[interior])
    assert diff[inside].max() <= 1.0


def test_warp_never_creates_opaque_pixels_from_transparent(rng):
    rgb = rng.integers(0, 256, (20, 20, 3), dtype=np.uint8)
    alpha = np.zeros((20, 20), np.uint8)
    alpha[5:15, 5:15] = 255
    img = ImageBuffer.from_rgb(rgb, alpha)
    pairs = random_config(rng, 8, jitter=0.03)
    out = warp_image(img, pairs, 0.01)
    assert out.opaque_area() > 0
    empty = ImageBuffer.from_rgb(rgb, np.zeros((20, 20), np.uint8))
    assert warp_image(empty, pairs, 0.01).opaque_area() == 0


def test_opaque_area_changes_continuously_with_lambda(rng):
    img = load_fixture("stripes_standing").image
    seg = img.with_alpha((np.asarray(load_fixture("stripes_standing").labels) == 5) * 255)
    pairs = random_config(rng, 10, jitter=0.02)
    areas = [warp_image(seg, pairs, lam).opaque_area() for lam in (0.01, 0.0101, 0.0102)]
    assert max(areas) - min(areas) <= 0.01 * max(areas)


def test_output_dims(rng):
    img = random_image(rng, 8, 6)
    out = warp_image(img, ControlPairs(CORNERS, CORNERS), 0.0, (12, 5))
    assert (out.width, out.height) == (12, 5)


def test_warp_points_examples(rng):
    pairs = random_config(rng, 9)
    np.testing.assert_allclose(warp_points(ControlPairs(pairs.source, pairs.source), 0.01, [[0.2, 0.3]]), [[0.2, 0.3]], atol=1e-12)
    src = np.array([[0.2, 0.2], [0.8, 0.2], [0.2, 0.8]])
    np.testing.assert_allclose(warp_points(ControlPairs(src, src + [0.1, 0]), 0.01, [[0.5, 0.5]]), [[0.6, 0.5]], atol=1e-12)
    np.testing.assert_allclose(warp_points(pairs, 0.0, pairs.source), pairs.target, atol=1e-8)
