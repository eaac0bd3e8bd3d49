import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from ridgekit.imagio import (
    ImageFormatError, Roi, crop_roi, hdr_merge, load_image, to_grayscale, write_image,
)

gray_images = hnp.arrays(np.uint8, hnp.array_shapes(min_dims=2, max_dims=2, min_side=1, max_side=12))


def test_load_minimal_p5(tmp_path):
    p = tmp_path / "a.pgm"
    p.write_bytes(b"P5 2 2 255\n" + bytes([1, 2, 3, 250]))
    img = load_image(p)
    assert img.shape == (2, 2)
    assert img.tolist() == [[1, 2], [3, 250]]


def test_load_p6(tmp_path):
    p = tmp_path / "a.ppm"
    p.write_bytes(b"P6\n3 1\n255\n" + bytes([255, 0, 0, 0, 255, 0, 0, 0, 255]))
    img = load_image(p)
    assert img.shape == (1, 3, 3)
    assert img[0].tolist() == [[255, 0, 0], [0, 255, 0], [0, 0, 255]]


def test_truncated_p5_is_format_error(tmp_path):
    p = tmp_path / "a.pgm"
    p.write_bytes(b"P5 2 2 255\n" + bytes([1, 2]))
    with pytest.raises(ImageFormatError, match="P5 2 2 255"):
        load_image(p)


def test_sixteen_bit_pgm_rejected(tmp_path):
    p = tmp_path / "a.pgm"
    p.write_bytes(b"P5 1 1 65535\n\x00\x01")
    with pytest.raises(ImageFormatError, match="65535"):
        load_image(p)


def test_unknown_format_and_missing_file(tmp_path):
    p = tmp_path / "a.bmp"
    p.write_bytes(b"BM\x00\x00garbage")
    with pytest.raises(ImageFormatError):
        load_image(p)
    with pytest.raises(OSError):
        load_image(tmp_path / "missing.pgm")


def test_png_gray_and_rgb(tmp_path):
    from PIL import Image

    g = np.arange(12, dtype=np.uint8).reshape(3, 4) * 20
    Image.fromarray(g, "L").save(tmp_path / "g.png")
    assert np.array_equal(load_image(tmp_path / "g.png"), g)
    c = np.zeros((2, 2, 3), dtype=np.uint8)
    c[0, 0] = (10, 20, 30)
    Image.fromarray(c, "RGB").save(tmp_path / "c.png")
    assert np.array_equal(load_image(tmp_path / "c.png"), c)


@pytest.mark.parametrize("value", [0, 255])
def test_one_pixel_round_trip(tmp_path, value):
    img = np.array([[value]], dtype=np.uint8)
    write_image(img, tmp_path / "x.pgm")
    assert np.array_equal(load_image(tmp_path / "x.pgm"), img)


def test_random_8x8_round_trip(tmp_path):
    img = np.random.default_rng(3).integers(0, 256, (8, 8), dtype=np.uint8)
    write_image(img, tmp_path / "x.pgm")
    assert np.array_equal(load_image(tmp_path / "x.pgm"), img)


@settings(max_examples=40, deadline=None)
@given(gray_images)
def test_round_trip_property(tmp_path_factory, img):
    p = tmp_path_factory.mktemp("rt") / "x.pgm"
    write_image(img, p)
    assert np.array_equal(load_image(p), img)


def test_write_to_missing_dir_is_io_error(tmp_path):
    with pytest.raises(OSError):
        write_image(np.zeros((2, 2), np.uint8), tmp_path / "nope" / "x.pgm")


@pytest.mark.parametrize("rgb, expected", [
    ((255, 255, 255), 255),
    ((0, 0, 0), 0),
    # round(0.299 * 255) = round(76.245)
    ((255, 0, 0), 76),
])
def test_to_grayscale(rgb, expected):
    img = np.array([[rgb]], dtype=np.uint8)
    assert to_grayscale(img)[0, 0] == expected


def _weight(v):
    return math.exp(-((v / 255 - 0.5) ** 2) / (2 * 0.2**2))


def test_hdr_identical_frames_fixed_point():
    f = np.random.default_rng(0).integers(0, 256, (5, 7), dtype=np.uint8)
    assert np.array_equal(hdr_merge([f] * 5), f)


def test_hdr_symmetric_extremes():
    a = np.zeros((1, 1), np.uint8)
    b = np.full((1, 1), 255, np.uint8)
    assert hdr_merge([a, b])[0, 0] == 128


def test_hdr_scalar_oracle():
    vals = (64, 128, 192)
    frames = [np.full((2, 3), v, np.uint8) for v in vals]
    expected = math.floor(sum(_weight(v) * v for v in vals) / sum(_weight(v) for v in vals) + 0.5)
    assert np.all(hdr_merge(frames) == expected)


def test_hdr_errors():
    with pytest.raises(ValueError):
        hdr_merge([np.zeros((2, 2), np.uint8)])
    with pytest.raises(ValueError):
        hdr_merge([np.zeros((2, 2), np.uint8), np.zeros((2, 3), np.uint8)])


@settings(max_examples=50, deadline=None)
@given(st.data())
def test_hdr_bounded_and_permutation_invariant(data):
    shape = data.draw(st.tuples(st.integers(1, 6), st.integers(1, 6)))
    n = data.draw(st.integers(2, 6))
    frames = [data.draw(hnp.arrays(np.uint8, shape)) for _ in range(n)]
    out = hdr_merge(frames)
    stack = np.stack(frames)
    assert np.all(out >= stack.min(axis=0)) and np.all(out <= stack.max(axis=0))
    perm = data.draw(st.permutations(range(n)))
    assert np.array_equal(hdr_merge([frames[k] for k in perm]), out)


def test_crop_identity():
    img = np.arange(20, dtype=np.uint8).reshape(4, 5)
    assert np.array_equal(crop_roi(img, Roi(0, 0, 5, 4)), img)


def test_crop_fully_outside():
    img = np.zeros((4, 4), np.uint8)
    out = crop_roi(img, Roi(10, 10, 3, 2), fill=255)
    assert out.shape == (2, 3) and np.all(out == 255)


def test_crop_straddling_right_edge():
    img = (np.arange(16, dtype=np.uint8).reshape(4, 4) * 10)
    roi = Roi(2, 1, 4, 2)
    out = crop_roi(img, roi, fill=7)
    for v in range(roi.height):
        for u in range(roi.width):
            sx, sy = roi.x0 + u, roi.y0 + v
            want = img[sy, sx] if sx < 4 and sy < 4 else 7
            assert out[v, u] == want


@settings(max_examples=50, deadline=None)
@given(gray_images, st.integers(0, 20), st.integers(0, 20), st.integers(1, 15), st.integers(1, 15))
def test_crop_size_property(img, x0, y0, w, h):
    assert crop_roi(img, Roi(x0, y0, w, h), 9).shape == (h, w)


def test_roi_validation():
    with pytest.raises(ValueError):
        Roi(0, 0, 0, 3)
    with pytest.raises(ValueError):
        Roi(-1, 0, 3, 3)
