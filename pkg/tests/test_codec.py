import numpy as np
import pytest

from fusegram import codec, data
from fusegram.errors import DataError, NumericError


def test_encode_constant_five():
    img = codec.encode(np.full(14, 5.0))
    assert img.pixels.tolist() == [255] * 14 + [0, 0]
    assert img.scale_min == 0.0 and img.scale_max == 5.0
    assert img.pad_count == 2


def test_encode_all_zero_degenerate():
    img = codec.encode(np.zeros(14))
    assert img.pixels.tolist() == [0] * 16
    assert img.scale_min == 0.0 and img.scale_max == 0.0


def test_encode_ramp_quantization():
    img = codec.encode(np.arange(14.0))
    assert img.scale_min == 0.0 and img.scale_max == 13.0
    assert img.pixels[1] == 20  # round(255 / 13)


def test_encode_metadata_matches_extrema():
    rng = np.random.default_rng(1)
    for _ in range(50):
        ch = rng.uniform(-5, 5, 14)
        img = codec.encode(ch)
        padded = np.concatenate([ch, [0, 0]])
        assert img.scale_min == padded.min()
        assert img.scale_max == padded.max()


def test_decode_constant_roundtrip_exact():
    back = codec.decode(codec.encode(np.full(14, 5.0)))
    assert np.array_equal(back.channels, np.full(14, 5.0))


def test_decode_degenerate_constant():
    img = codec.EncodedImage(np.zeros(16, dtype=int), 3.25, 3.25)
    back = codec.decode(img)
    assert np.array_equal(back.channels, np.full(14, 3.25))


def test_roundtrip_error_bound_sweep():
    rng = np.random.default_rng(7)
    for _ in range(500):
        ch = rng.uniform(-1, 1, 14)
        img = codec.encode(ch)
        bound = (img.scale_max - img.scale_min) / 510.0
        back = codec.decode(img)
        assert np.abs(back.channels - ch).max() <= bound + 1e-15


def test_pads_recover_near_zero():
    rng = np.random.default_rng(8)
    for _ in range(200):
        ch = rng.uniform(-3, 9, 14)
        img = codec.encode(ch)
        bound = (img.scale_max - img.scale_min) / 510.0
        lo, hi = img.scale_min, img.scale_max
        pads = lo + img.pixels[14:] * (hi - lo) / 255.0
        assert np.abs(pads).max() <= bound + 1e-15


def test_not_shift_invariant():
    rng = np.random.default_rng(9)
    ch = rng.uniform(0, 1, 14)
    a = codec.encode(ch)
    b = codec.encode(ch + 1.0)
    assert not np.array_equal(a.pixels, b.pixels)


def test_encode_rejects_non_finite():
    bad = np.zeros(14)
    bad[3] = np.inf
    with pytest.raises(NumericError, match="non-finite"):
        codec.encode(bad)


def test_pixel_range_enforced():
    with pytest.raises(DataError, match="pixel outside"):
        codec.EncodedImage(np.full(16, 300), 0.0, 1.0)
    with pytest.raises(DataError, match="pixel outside"):
        codec.EncodedImage(np.full(16, -1), 0.0, 1.0)


def test_rounding_half_away_from_zero():
    assert codec._round_half_away(0.5) == 1
    assert codec._round_half_away(1.5) == 2
    assert codec._round_half_away(2.5) == 3
    assert codec._round_half_away(-0.5) == -1


def test_sie_container_roundtrip(tmp_path):
    rng = np.random.default_rng(3)
    img = codec.encode(rng.uniform(-2, 2, 14))
    path = tmp_path / "x.sie"
    codec.write_sie(img, path)
    blob = path.read_bytes()
    assert blob[:4] == b"SIE1"
    assert len(blob) == 42
    back = codec.read_sie(path)
    assert np.array_equal(back.pixels, img.pixels)
    assert back.scale_min == img.scale_min
    assert back.scale_max == img.scale_max
    # write the parsed image again: bit-exact container
    path2 = tmp_path / "y.sie"
    codec.write_sie(back, path2)
    assert path2.read_bytes() == blob


def test_sie_bad_magic(tmp_path):
    path = tmp_path / "bad.sie"
    path.write_bytes(b"NOPE" + b"\x00" * 38)
    with pytest.raises(DataError, match="magic"):
        codec.read_sie(path)


def test_pgm_roundtrip(tmp_path):
    img = codec.encode(np.arange(14.0) - 6.5)
    path = tmp_path / "x.pgm"
    codec.write_pgm(img, path)
    raw = path.read_bytes()
    assert raw.startswith(b"P5\n4 4\n255\n")
    assert len(raw) == len(b"P5\n4 4\n255\n") + 16
    back = codec.read_pgm(path)
    assert np.array_equal(back.pixels, img.pixels)
    assert back.scale_min == img.scale_min
    assert back.scale_max == img.scale_max


def test_decode_accepts_fusedsample_source():
    s = data.FusedSample(np.linspace(-1, 1, 14), 1, 4)
    back = codec.decode(codec.encode(s), id=4, label=1)
    assert back.id == 4 and back.label == 1
