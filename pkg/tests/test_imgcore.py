import struct

import numpy as np
import pytest
from PIL import Image as PILImage

from flareforge import (DepthMap, DimensionError, FormatError, Image, add_clip,
                        gamma_decode, gamma_encode, load_mask, load_pfm,
                        load_png, to_luma_bt601, write_mask, write_pfm,
                        write_png)
from flareforge.imgcore import RegionMask, quantize_u8


def test_image_validates_range():
    with pytest.raises(ValueError):
        Image(np.full((2, 2, 3), 1.5, np.float32))
    with pytest.raises(ValueError):
        Image(np.full((2, 2, 3), -0.1, np.float32))
    with pytest.raises(ValueError):
        Image(np.full((2, 2, 3), np.nan, np.float32))
    with pytest.raises(DimensionError):
        Image(np.zeros((2, 2), np.float32))


def test_image_headroom_allows_above_one():
    img = Image(np.full((2, 2, 3), 1.5, np.float32), headroom=True)
    assert img.data.max() == np.float32(1.5)


def test_image_is_immutable():
    img = Image(np.zeros((2, 2, 3), np.float32))
    with pytest.raises(ValueError):
        img.data[0, 0, 0] = 1.0


class TestPng:
    def test_full_scale_maps_to_one(self, tmp_path):
        arr = np.zeros((2, 2, 3), np.uint8)
        arr[0, 0] = 255
        PILImage.fromarray(arr).save(tmp_path / "a.png")
        img = load_png(tmp_path / "a.png")
        assert img.data[0, 0, 0] == np.float32(1.0)
        assert img.data[1, 1, 0] == np.float32(0.0)
        assert img.space == "encoded"

    def test_roundtrip_lossless(self, tmp_path):
        rng = np.random.default_rng(7)
        arr = rng.integers(0, 256, size=(13, 9, 3)).astype(np.uint8)
        PILImage.fromarray(arr).save(tmp_path / "src.png")
        img = load_png(tmp_path / "src.png")
        write_png(img, tmp_path / "copy.png")
        again = load_png(tmp_path / "copy.png")
        # payload is byte-identical after a write/read cycle
        assert np.array_equal(quantize_u8(img.data), arr)
        assert np.array_equal(again.data, img.data)

    def test_write_is_deterministic(self, tmp_path):
        rng = np.random.default_rng(3)
        img = Image(rng.uniform(0, 1, (16, 16, 3)).astype(np.float32))
        write_png(img, tmp_path / "one.png")
        write_png(img, tmp_path / "two.png")
        assert (tmp_path / "one.png").read_bytes() == (tmp_path / "two.png").read_bytes()

    def test_sixteen_bit(self, tmp_path):
        import cv2
        arr = np.array([[[65535, 0, 32768]]], dtype=np.uint16)
        cv2.imwrite(str(tmp_path / "s.png"), arr[:, :, ::-1])
        img = load_png(tmp_path / "s.png")
        assert img.data[0, 0, 0] == np.float32(1.0)
        assert img.data[0, 0, 1] == np.float32(0.0)
        assert img.data[0, 0, 2] == pytest.approx(32768 / 65535)

    def test_rgba_alpha_dropped(self, tmp_path):
        arr = np.zeros((2, 2, 4), np.uint8)
        arr[:, :, 0] = 200
        arr[:, :, 3] = 10
        PILImage.fromarray(arr, "RGBA").save(tmp_path / "a.png")
        img = load_png(tmp_path / "a.png")
        assert img.data.shape == (2, 2, 3)
        assert img.data[0, 0, 0] == np.float32(200 / 255)

    def test_missing_file_raises_ioerror(self, tmp_path):
        with pytest.raises(IOError):
            load_png(tmp_path / "nope.png")

    def test_not_a_png_raises_formaterror(self, tmp_path):
        (tmp_path / "junk.png").write_bytes(b"not a png at all" * 4)
        with pytest.raises(FormatError):
            load_png(tmp_path / "junk.png")

    def test_palette_png_rejected(self, tmp_path):
        pil = PILImage.fromarray(np.zeros((4, 4, 3), np.uint8)).convert(
            "P", palette=PILImage.ADAPTIVE)
        pil.save(tmp_path / "pal.png")
        with pytest.raises(FormatError):
            load_png(tmp_path / "pal.png")

    def test_grayscale_png_rejected(self, tmp_path):
        PILImage.fromarray(np.zeros((4, 4), np.uint8), "L").save(tmp_path / "g.png")
        with pytest.raises(FormatError):
            load_png(tmp_path / "g.png")


class TestMaskIo:
    def test_roundtrip(self, tmp_path):
        mask = RegionMask(np.array([[1, 0], [0, 1]], np.uint8))
        write_mask(mask, tmp_path / "m.png")
        again = load_mask(tmp_path / "m.png")
        assert np.array_equal(again.data, mask.data)
        import cv2
        raw = cv2.imread(str(tmp_path / "m.png"), cv2.IMREAD_UNCHANGED)
        assert set(np.unique(raw)) == {0, 255}


def _write_pfm_bytes(path, values, scale=-1.0):
    h, w = values.shape
    with open(path, "wb") as fh:
        fh.write(b"Pf\n")
        fh.write(f"{w} {h}\n".encode())
        fh.write(f"{scale}\n".encode())
        endian = "<" if scale < 0 else ">"
        fh.write(np.asarray(values[::-1], dtype=endian + "f4").tobytes())


class TestPfm:
    def test_plain_load(self, tmp_path):
        _write_pfm_bytes(tmp_path / "d.pfm", np.array([[2.0, 3.0], [4.0, 5.0]]))
        d = load_pfm(tmp_path / "d.pfm")
        assert d.data[0, 0] == np.float32(2.0)
        assert d.data[1, 1] == np.float32(5.0)

    def test_invert(self, tmp_path):
        _write_pfm_bytes(tmp_path / "d.pfm", np.array([[2.0]]))
        d = load_pfm(tmp_path / "d.pfm", invert=True, epsilon=0.0)
        assert d.data[0, 0] == np.float32(0.5)

    def test_invert_zero_clamped_by_epsilon(self, tmp_path):
        _write_pfm_bytes(tmp_path / "d.pfm", np.array([[0.0]]))
        d = load_pfm(tmp_path / "d.pfm", invert=True, epsilon=1e-6)
        assert d.data[0, 0] == pytest.approx(1e6)

    def test_big_endian_accepted(self, tmp_path):
        _write_pfm_bytes(tmp_path / "d.pfm", np.array([[7.0]]), scale=1.0)
        assert load_pfm(tmp_path / "d.pfm").data[0, 0] == np.float32(7.0)

    def test_row_order_flipped(self, tmp_path):
        _write_pfm_bytes(tmp_path / "d.pfm", np.array([[1.0, 2.0], [3.0, 4.0]]))
        d = load_pfm(tmp_path / "d.pfm")
        assert d.data[0].tolist() == [1.0, 2.0]

    def test_color_header_rejected(self, tmp_path):
        (tmp_path / "c.pfm").write_bytes(b"PF\n1 1\n-1.0\n" + struct.pack("<fff", 1, 1, 1))
        with pytest.raises(FormatError):
            load_pfm(tmp_path / "c.pfm")

    def test_nonfinite_rejected(self, tmp_path):
        _write_pfm_bytes(tmp_path / "d.pfm", np.array([[np.nan]]))
        with pytest.raises(ValueError):
            load_pfm(tmp_path / "d.pfm")

    def test_writer_roundtrip(self, tmp_path):
        values = np.random.default_rng(5).uniform(0.5, 9.0, (6, 4)).astype(np.float32)
        write_pfm(DepthMap(values), tmp_path / "w.pfm")
        again = load_pfm(tmp_path / "w.pfm")
        assert np.array_equal(again.data, values)


class TestLuma:
    def test_white_is_one(self):
        img = Image(np.ones((2, 2, 3), np.float32))
        assert to_luma_bt601(img).data[0, 0] == np.float32(1.0)

    def test_black_is_zero(self):
        img = Image(np.zeros((2, 2, 3), np.float32))
        assert to_luma_bt601(img).data[0, 0] == np.float32(0.0)

    def test_red_coefficient(self):
        arr = np.zeros((1, 1, 3), np.float32)
        arr[0, 0, 0] = 1.0
        assert to_luma_bt601(Image(arr)).data[0, 0] == pytest.approx(0.299, abs=1e-7)

    def test_monotone_in_each_channel(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            base = rng.uniform(0, 0.9, (4, 4, 3)).astype(np.float32)
            for c in range(3):
                brighter = base.copy()
                brighter[:, :, c] += 0.05
                y0 = to_luma_bt601(Image(base)).data
                y1 = to_luma_bt601(Image(brighter)).data
                assert (y1 >= y0).all()

    def test_requires_encoded_space(self):
        img = Image(np.ones((2, 2, 3), np.float32), space="linear")
        with pytest.raises(ValueError):
            to_luma_bt601(img)


class TestGamma:
    def test_decode(self):
        img = Image(np.full((1, 1, 3), 0.5, np.float32))
        out = gamma_decode(img, 2.0)
        assert out.data[0, 0, 0] == np.float32(0.25)
        assert out.space == "linear"

    def test_encode(self):
        img = Image(np.full((1, 1, 3), 0.25, np.float32), space="linear")
        out = gamma_encode(img, 2.0)
        assert out.data[0, 0, 0] == np.float32(0.5)
        assert out.space == "encoded"

    def test_one_is_fixed_point(self):
        img = Image(np.ones((1, 1, 3), np.float32))
        for g in (1.8, 2.0, 2.2):
            assert gamma_decode(img, g).data[0, 0, 0] == np.float32(1.0)

    def test_roundtrip_within_tolerance(self):
        rng = np.random.default_rng(2)
        data = rng.uniform(0, 1, (32, 32, 3)).astype(np.float32)
        img = Image(data)
        for g in (1.8, 2.0, 2.2):
            back = gamma_encode(gamma_decode(img, g), g)
            assert np.abs(back.data - data).max() < 1e-6

    def test_invalid_gamma(self):
        img = Image(np.zeros((1, 1, 3), np.float32))
        with pytest.raises(ValueError):
            gamma_decode(img, 0.0)
        with pytest.raises(ValueError):
            gamma_encode(img, -1.0)


class TestAddClip:
    def test_plain_sum(self):
        a = Image(np.full((2, 2, 3), 0.5, np.float32))
        b = Image(np.full((2, 2, 3), 0.3, np.float32))
        assert add_clip(a, b).data[0, 0, 0] == np.float32(0.8)

    def test_clips_to_one(self):
        a = Image(np.full((2, 2, 3), 0.9, np.float32))
        b = Image(np.full((2, 2, 3), 0.5, np.float32))
        assert add_clip(a, b).data.max() == np.float32(1.0)

    def test_zero_addend_is_identity(self):
        rng = np.random.default_rng(9)
        a = Image(rng.uniform(0, 1, (5, 5, 3)).astype(np.float32))
        z = Image(np.zeros((5, 5, 3), np.float32))
        assert np.array_equal(add_clip(a, z).data, a.data)

    def test_output_always_in_range(self):
        rng = np.random.default_rng(10)
        for _ in range(10):
            a = Image(rng.uniform(0, 1, (6, 6, 3)).astype(np.float32))
            b = Image(rng.uniform(0, 3, (6, 6, 3)).astype(np.float32), headroom=True)
            out = add_clip(a, b)
            assert out.data.min() >= 0.0 and out.data.max() <= 1.0

    def test_dimension_mismatch(self):
        a = Image(np.zeros((2, 2, 3), np.float32))
        b = Image(np.zeros((3, 2, 3), np.float32))
        with pytest.raises(DimensionError):
            add_clip(a, b)

    def test_space_mismatch(self):
        a = Image(np.zeros((2, 2, 3), np.float32))
        b = Image(np.zeros((2, 2, 3), np.float32), space="linear")
        with pytest.raises(ValueError):
            add_clip(a, b)
