import numpy as np
import pytest

from curvcomplex.pnm import PNMError, read_image, read_mask, read_seeds, to_uint8, write_image


def test_gray_round_trip(tmp_path):
    a = np.random.default_rng(0).integers(0, 256, (7, 5)).astype(np.uint8)
    write_image(a, tmp_path / "a.pgm", comment="hello\nworld")
    b = read_image(tmp_path / "a.pgm")
    assert b.dtype == np.uint8 and np.array_equal(a, b)


def test_color_round_trip(tmp_path):
    a = np.random.default_rng(1).integers(0, 256, (4, 6, 3)).astype(np.uint8)
    write_image(a, tmp_path / "a.ppm")
    assert np.array_equal(read_image(tmp_path / "a.ppm"), a)


def test_header_comments_and_whitespace(tmp_path):
    raster = bytes([1, 2, 3, 10, 32, 35])
    (tmp_path / "c.pgm").write_bytes(b"P5 # magic\n# size next\n3\t2\n# max\n255\n" + raster)
    img = read_image(tmp_path / "c.pgm")
    assert img.tolist() == [[1, 2, 3], [10, 32, 35]]


@pytest.mark.parametrize("content", [
    b"P5\n2 2\n65535\n" + bytes(8),
    b"P2\n1 1\n255\n0",
    b"P5\n2 2\n255\n" + bytes(3),
    b"P5\n2 2",
    b"P5\n0 2\n255\n",
])
def test_rejected_files(tmp_path, content):
    (tmp_path / "bad.pgm").write_bytes(content)
    with pytest.raises(PNMError):
        read_image(tmp_path / "bad.pgm")


def test_rounding_half_up():
    assert to_uint8(np.array([0.5, 1.49, 2.5, -3, 254.5, 300])).tolist() == \
        [1, 1, 3, 0, 255, 255]
    assert to_uint8(np.array([True, False])).tolist() == [255, 0]


def test_mask_and_seeds(tmp_path):
    m = np.array([[0, 255], [7, 0]], dtype=np.uint8)
    write_image(m, tmp_path / "m.pgm")
    assert read_mask(tmp_path / "m.pgm").tolist() == [[False, True], [True, False]]
    s = np.array([[0, 1], [2, 0]], dtype=np.uint8)
    write_image(s, tmp_path / "s.pgm")
    assert read_seeds(tmp_path / "s.pgm").tolist() == s.tolist()
    write_image(m, tmp_path / "bad.pgm")
    with pytest.raises(PNMError):
        read_seeds(tmp_path / "bad.pgm")
