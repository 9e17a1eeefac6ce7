import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image

from magic_codec.imageio import ImageFormatError, load_image, save_image, to_gray


def test_load_white_2x2(tmp_path):
    p = tmp_path / "w.png"
    Image.new("RGB", (2, 2), (255, 255, 255)).save(p)
    img = load_image(p)
    assert img.shape == (2, 2, 3) and img.dtype == np.uint8
    assert (img == 255).all()


def test_load_red_1x1(tmp_path):
    p = tmp_path / "r.png"
    Image.new("RGB", (1, 1), (255, 0, 0)).save(p)
    assert load_image(p).tolist() == [[[255, 0, 0]]]


def test_oversized_rejected(tmp_path):
    p = tmp_path / "wide.png"
    Image.new("RGB", (70000, 1)).save(p)
    with pytest.raises(ImageFormatError, match="16-bit"):
        load_image(p)
    with pytest.raises(ImageFormatError):
        save_image(np.zeros((1, 70000, 3), np.uint8), tmp_path / "x.png")


def test_alpha_and_palette_become_rgb(tmp_path):
    p = tmp_path / "a.png"
    Image.new("RGBA", (3, 2), (10, 20, 30, 40)).save(p)
    assert load_image(p)[0, 0].tolist() == [10, 20, 30]
    p = tmp_path / "g.png"
    Image.new("L", (3, 2), 77).save(p)
    assert (load_image(p) == 77).all()


def test_unsupported_and_missing(tmp_path):
    p = tmp_path / "x.bmp"
    Image.new("RGB", (2, 2)).save(p)
    with pytest.raises(ImageFormatError, match="unsupported"):
        load_image(p)
    with pytest.raises(ImageFormatError):
        load_image(tmp_path / "nope.png")
    with pytest.raises(ImageFormatError):
        save_image(np.zeros((2, 2, 3), np.uint8), tmp_path / "x.jpg")


@pytest.mark.parametrize("rgb,y", [((255, 255, 255), 255), ((0, 0, 0), 0), ((255, 0, 0), 76),
                                   ((0, 255, 0), 150), ((0, 0, 255), 29)])
def test_to_gray_values(rgb, y):
    # oracle: exact decimal BT.601 weights rounded half-up
    from fractions import Fraction as F
    r, g, b = rgb
    exact = F(299, 1000) * r + F(587, 1000) * g + F(114, 1000) * b
    assert int(exact + F(1, 2)) == y
    assert to_gray(np.array([[rgb]], np.uint8))[0, 0] == y


@given(st.integers(0, 255))
def test_gray_fixed_on_gray_pixels(v):
    assert to_gray(np.full((1, 1, 3), v, np.uint8))[0, 0] == v


@settings(max_examples=25, deadline=None)
@given(arrays(np.uint8, st.tuples(st.integers(1, 9), st.integers(1, 9), st.just(3))),
       st.sampled_from([".png", ".ppm"]))
def test_save_load_roundtrip(tmp_path_factory, img, ext):
    p = tmp_path_factory.mktemp("rt") / ("img" + ext)
    save_image(img, p)
    assert np.array_equal(load_image(p), img)
