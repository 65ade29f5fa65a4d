import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _helpers import random_params
from mclp.bitstream import (HEADER_SIZE, BitReader, BitWriter, ContainerHeader,
                            narrowband_section, pack_frame, read_container, strip_highband,
                            unpack_frame, write_container, is_truncated_wideband)
from mclp.codebooks import MODES, NB_HIGH, NB_LOW, WB_HIGH, WB_LOW
from mclp.codec import decode_frames
from mclp.errors import (ContainerError, MalformedFrameError, NotAContainerError,
                         TruncatedFrameError)
from mclp.nb import FrameParams, SubframeParams
from mclp.wideband import HighbandParams, WbFrameParams

ALL_MODES = list(MODES.values())

# Documented test vector (also worked through in FORMAT.md).
VECTOR = FrameParams(
    lsp_indices=(1, 2, 3, 4, 5, 6, 7, 8, 9, 10),
    global_gain_index=17,
    subframes=(SubframeParams(60, 5, 3, (1, 30)),
               SubframeParams(17, 0, 7, (0, 31)),
               SubframeParams(144, 31, 0, (16, 15)),
               SubframeParams(100, 12, 4, (5, 27))),
)
GOLDEN_NB_LOW = "123456789a8ab2b0f800383fffe20fa6c85d80"


def bit_oracle(params: FrameParams, inno_bits: int) -> bytes:
    bits = "".join(f"{i:04b}" for i in params.lsp_indices) + f"{params.global_gain_index:05b}"
    for s in params.subframes:
        bits += f"{s.pitch - 17:07b}{s.pitch_gain_index:05b}{s.corr_index:03b}"
        bits += "".join(f"{i:0{inno_bits}b}" for i in s.innovation)
    bits += "0" * (-len(bits) % 8)
    return int(bits, 2).to_bytes(len(bits) // 8, "big")


def test_golden_vector():
    data = pack_frame(VECTOR, NB_LOW)
    assert len(data) == 19
    assert data == bit_oracle(VECTOR, 5)
    assert data.hex() == GOLDEN_NB_LOW
    assert unpack_frame(data, NB_LOW) == VECTOR


def test_frame_sizes():
    assert [m.frame_bytes for m in (NB_LOW, NB_HIGH, WB_LOW, WB_HIGH)] == [19, 46, 26, 85]
    assert [m.nb_bytes for m in (WB_LOW, WB_HIGH)] == [19, 46]


@pytest.mark.parametrize("mode", [NB_LOW, NB_HIGH])
def test_random_frames_match_bit_oracle(mode):
    rng = np.random.default_rng(10 + mode.mode_id)
    for _ in range(200):
        p = random_params(rng, mode)
        assert pack_frame(p, mode) == bit_oracle(p, mode.narrowband.codebook_bits)


@pytest.mark.parametrize("mode", ALL_MODES, ids=lambda m: m.name)
def test_round_trip_random_params(mode):
    rng = np.random.default_rng(mode.mode_id)
    for _ in range(1000):
        p = random_params(rng, mode)
        data = pack_frame(p, mode)
        assert len(data) == mode.frame_bytes
        assert unpack_frame(data, mode) == p


@pytest.mark.parametrize("mode", ALL_MODES, ids=lambda m: m.name)
def test_all_ones_frame_is_valid(mode):
    # every field has full index range, so no bit pattern is malformed
    p = unpack_frame(b"\xff" * mode.frame_bytes, mode)
    nb = p.nb if mode.wideband else p
    assert nb.global_gain_index == 31
    assert all(s.pitch == 144 for s in nb.subframes)
    assert unpack_frame(pack_frame(p, mode), mode) == p


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(ALL_MODES), st.data())
def test_any_bytes_parse_or_fail_cleanly(mode, data):
    raw = data.draw(st.binary(min_size=mode.frame_bytes, max_size=mode.frame_bytes))
    try:
        p = unpack_frame(raw, mode)
    except MalformedFrameError:
        return
    again = pack_frame(p, mode)
    # only padding bits may differ
    assert unpack_frame(again, mode) == p
    assert len(again) == len(raw)


def test_short_buffer_raises():
    with pytest.raises(TruncatedFrameError):
        unpack_frame(b"\0" * 18, NB_LOW)
    with pytest.raises(TruncatedFrameError):
        unpack_frame(b"\0" * 25, WB_HIGH)


def test_zero_params_pack_to_zero_bytes():
    p = FrameParams((0,) * 10, 0, tuple(SubframeParams(17, 0, 0, (0,) * 8) for _ in range(4)))
    assert pack_frame(p, NB_HIGH) == bytes(46)


def test_invalid_params_rejected():
    bad = FrameParams((16,) + (0,) * 9, 0, VECTOR.subframes)
    with pytest.raises(MalformedFrameError):
        pack_frame(bad, NB_LOW)
    with pytest.raises(TypeError):
        pack_frame(VECTOR, WB_LOW)


def test_wideband_layout_is_nb_then_aligned_hb():
    hb = HighbandParams((15, 0, 1, 2, 3, 4, 5, 6), 31, (7, 0, 1, 2), None)
    data = pack_frame(WbFrameParams(VECTOR, hb), WB_LOW)
    assert data[:19] == pack_frame(VECTOR, NB_LOW)
    bits = "".join(f"{i:04b}" for i in hb.lsp_indices) + "11111" + "111000001010"
    bits += "0" * (-len(bits) % 8)
    assert data[19:] == int(bits, 2).to_bytes(7, "big")
    assert narrowband_section(data, WB_LOW) == data[:19]
    assert unpack_frame(data[:19], WB_LOW) == WbFrameParams(VECTOR, None)
    assert pack_frame(WbFrameParams(VECTOR, None), WB_LOW) == data[:19]


def test_bit_writer_reader():
    w = BitWriter()
    for value, n in ((1, 1), (0, 2), (5, 3), (0x1ff, 9)):
        w.write(value, n)
    assert w.bit_count == 15
    assert w.getvalue() == bytes([0b10010111, 0b11111110])
    r = BitReader(w.getvalue())
    assert [r.read(n) for n in (1, 2, 3, 9)] == [1, 0, 5, 0x1ff]
    assert r.remaining == 1
    with pytest.raises(TruncatedFrameError):
        r.read(2)
    with pytest.raises(ValueError):
        BitWriter().write(8, 3)


@given(st.lists(st.tuples(st.integers(1, 32), st.integers(0, 2**32 - 1)), max_size=40))
def test_bit_io_round_trip(fields):
    w = BitWriter()
    fields = [(n, v & ((1 << n) - 1)) for n, v in fields]
    for n, v in fields:
        w.write(v, n)
    data = w.getvalue()
    assert len(data) == (w.bit_count + 7) // 8
    r = BitReader(data)
    assert [r.read(n) for n, _ in fields] == [v for _, v in fields]
    assert r.remaining < 8 and r.read(r.remaining) == 0


# --- container -------------------------------------------------------------

def test_container_header_bytes():
    data = write_container(ContainerHeader(8000, 0, 0), [b"\x01\x02", b""])
    assert data == (b"MCLP" + b"\x01" + struct.pack("<I", 8000) + b"\x00" + struct.pack("<I", 2)
                    + b"\x02\x00\x01\x02" + b"\x00\x00")
    assert HEADER_SIZE == 14


@given(st.sampled_from(ALL_MODES), st.lists(st.binary(max_size=100), max_size=20))
def test_container_identity(mode, frames):
    header = ContainerHeader(mode.rate, mode.mode_id, len(frames))
    h, out = read_container(write_container(header, frames))
    assert h == header and out == frames


def test_empty_container():
    data = write_container(ContainerHeader(16000, 3, 5), [])
    assert len(data) == HEADER_SIZE
    h, frames = read_container(data)
    assert h.frame_count == 0 and frames == []


def test_bad_magic_and_version():
    good = write_container(ContainerHeader(8000, 0, 1), [b"abc"])
    with pytest.raises(NotAContainerError):
        read_container(b"RIFF" + good[4:])
    with pytest.raises(NotAContainerError):
        read_container(good[:4] + b"\x02" + good[5:])
    with pytest.raises(NotAContainerError):
        read_container(good[:10])
    with pytest.raises(ContainerError):
        read_container(good[:9] + b"\x09" + good[10:])


def test_truncated_file_reports_frame_index():
    data = write_container(ContainerHeader(8000, 0, 3), [b"a" * 19] * 3)
    for cut, index in ((len(data) - 1, 2), (HEADER_SIZE + 21 + 1, 1), (HEADER_SIZE + 5, 0)):
        with pytest.raises(ContainerError) as exc:
            read_container(data[:cut])
        assert exc.value.frame_index == index
        assert f"frame {index}" in str(exc.value)


def test_container_with_truncated_wideband_frame():
    rng = np.random.default_rng(3)
    params = [random_params(rng, WB_HIGH) for _ in range(6)]
    frames = [pack_frame(p, WB_HIGH) for p in params]
    frames[2] = narrowband_section(frames[2], WB_HIGH)
    header, back = read_container(write_container(ContainerHeader(16000, 3, 6), frames))
    assert len(back[2]) == WB_HIGH.nb_bytes
    assert unpack_frame(back[2], WB_HIGH).hb is None
    assert not is_truncated_wideband(header, back)
    y = decode_frames(back, WB_HIGH)
    assert y.shape == (6 * 320,) and np.all(np.isfinite(y))
    # stripping every frame gives a stream the narrowband decoder reads as-is
    header, stripped = strip_highband(header, back)
    assert is_truncated_wideband(header, stripped)
    nb_only = decode_frames(stripped, WB_HIGH, narrowband=True)
    np.testing.assert_array_equal(nb_only, decode_frames(stripped, NB_HIGH))
