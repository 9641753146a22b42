import subprocess
import zlib
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from PIL import Image

from rppkit._tools import resolve_executable
from rppkit.exceptions import (
    ContractViolation,
    UnsupportedFormatError,
    Y4MParseError,
)
from rppkit.media_io import (
    Frame,
    PixelFormat,
    VideoSequence,
    format_y4m,
    from_uint8,
    gray_to_yuv420,
    parse_y4m,
    read_frames,
    read_png,
    read_y4m,
    to_luma,
    to_uint8,
    write_png,
    write_y4m,
)

from _corpus import ffmpeg_has


def random_yuv(rng, w, h):
    y, u, v = (rng.integers(0, 256, s).astype(np.uint8)
               for s in [(h, w), (h // 2, w // 2), (h // 2, w // 2)])
    return Frame.yuv420(from_uint8(y), from_uint8(u), from_uint8(v))


def test_uint8_normalization_round_trip_all_values():
    v = np.arange(256, dtype=np.uint8)
    assert np.array_equal(to_uint8(from_uint8(v)), v)


def test_to_uint8_rounds_half_away_from_zero():
    assert to_uint8(np.array([0.5 / 255, 1.5 / 255, 254.5 / 255])).tolist() == [1, 2, 255]


class TestFrame:
    def test_rejects_out_of_range(self):
        with pytest.raises(ContractViolation, match=r"\[0, 1\]"):
            Frame.gray(np.full((4, 4), 1.5))

    def test_yuv420_needs_half_size_chroma(self):
        with pytest.raises(ContractViolation, match="chroma"):
            Frame.yuv420(np.zeros((4, 4)), np.zeros((4, 4)), np.zeros((2, 2)))

    def test_yuv420_needs_even_luma(self):
        with pytest.raises(ContractViolation, match="even"):
            Frame.yuv420(np.zeros((5, 4)), np.zeros((2, 2)), np.zeros((2, 2)))

    def test_planes_are_read_only(self):
        f = Frame.gray(np.zeros((4, 4)))
        with pytest.raises(ValueError):
            f.planes[0][0, 0] = 1.0

    def test_sequence_requires_uniform_frames(self):
        with pytest.raises(ContractViolation):
            VideoSequence((Frame.gray(np.zeros((4, 4))), Frame.gray(np.zeros((4, 6)))))

    def test_sequence_rate_positive(self):
        with pytest.raises(ContractViolation):
            VideoSequence((Frame.gray(np.zeros((4, 4))),), frame_rate=0)


class TestY4M:
    def test_two_frame_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        seq = VideoSequence((random_yuv(rng, 16, 16), random_yuv(rng, 16, 16)),
                            Fraction(25), "clip")
        path = tmp_path / "clip.y4m"
        write_y4m(seq, path)
        back = read_y4m(path)
        assert back.equals(seq)
        assert back.name == "clip"

    def test_read_write_read_is_byte_identical(self, tmp_path):
        rng = np.random.default_rng(1)
        seq = VideoSequence(tuple(random_yuv(rng, 32, 18) for _ in range(3)),
                            Fraction(30000, 1001))
        first = format_y4m(seq)
        assert format_y4m(parse_y4m(first)) == first

    def test_header_tokens(self):
        payload = bytes(16 * 16 + 2 * 8 * 8)
        data = b"YUV4MPEG2 W16 H16 F25:1 Ip A1:1 C420\nFRAME\n" + payload
        seq = parse_y4m(data)
        assert seq.frame_rate == 25
        assert (seq.width, seq.height) == (16, 16)
        assert len(seq) == 1

    def test_colorspace_defaults_to_420(self):
        data = b"YUV4MPEG2 W2 H2 F1:1\nFRAME\n" + bytes(6)
        assert len(parse_y4m(data)) == 1

    def test_frame_parameters_after_marker_accepted(self):
        data = b"YUV4MPEG2 W2 H2 F1:1 C420jpeg\nFRAME Ip\n" + bytes(6)
        assert len(parse_y4m(data)) == 1

    def test_malformed_token_is_named(self):
        with pytest.raises(Y4MParseError, match="Wabc"):
            parse_y4m(b"YUV4MPEG2 Wabc H16 F25:1 C420\n")

    def test_bad_signature(self):
        with pytest.raises(Y4MParseError, match="signature"):
            parse_y4m(b"YUV4MPEG W16 H16 F25:1\n")

    def test_missing_rate(self):
        with pytest.raises(Y4MParseError, match="F token"):
            parse_y4m(b"YUV4MPEG2 W16 H16 C420\n")

    @pytest.mark.parametrize("cs", ["C444", "C422", "C420p10", "Cmono"])
    def test_unsupported_chroma(self, cs):
        with pytest.raises(UnsupportedFormatError):
            parse_y4m(f"YUV4MPEG2 W16 H16 F25:1 {cs}\n".encode())

    def test_truncated_payload_raises(self):
        data = b"YUV4MPEG2 W16 H16 F25:1 C420\nFRAME\n" + bytes(16 * 16 + 2 * 64)
        data += b"FRAME\n" + bytes(100)
        with pytest.raises(Y4MParseError, match="truncated"):
            parse_y4m(data)

    def test_empty_sequence_not_writable(self, tmp_path):
        with pytest.raises(ContractViolation):
            write_y4m(VideoSequence(()), tmp_path / "x.y4m")

    def test_gray_sequence_not_writable(self):
        seq = VideoSequence((Frame.gray(np.zeros((4, 4))),))
        with pytest.raises(ContractViolation, match="YUV420"):
            format_y4m(seq)

    @pytest.mark.codec
    @pytest.mark.skipif(not ffmpeg_has("encoder", "libx264"), reason="no ffmpeg with libx264")
    def test_gray_ramp_is_accepted_by_an_encoder(self, tmp_path):
        ramp = np.tile(np.linspace(0.0, 1.0, 8), (8, 1))
        seq = VideoSequence((gray_to_yuv420(Frame.gray(ramp)),), Fraction(25))
        src = tmp_path / "ramp.y4m"
        write_y4m(seq, src)
        proc = subprocess.run(
            [resolve_executable("ffmpeg"), "-hide_banner", "-nostdin", "-loglevel", "error",
             "-i", str(src), "-c:v", "libx264", "-qp", "0", "-f", "h264",
             str(tmp_path / "ramp.264")],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert (tmp_path / "ramp.264").stat().st_size > 0


class TestPNG:
    def test_gray_round_trip(self, tmp_path):
        rng = np.random.default_rng(2)
        f = Frame.gray(from_uint8(rng.integers(0, 256, (13, 21))))
        write_png(f, tmp_path / "g.png")
        back = read_png(tmp_path / "g.png")
        assert back.pixel_format is PixelFormat.GRAY
        assert back.equals(f)

    def test_rgb_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        f = Frame.rgb(*(from_uint8(rng.integers(0, 256, (9, 7))) for _ in range(3)))
        write_png(f, tmp_path / "c.png")
        back = read_png(tmp_path / "c.png")
        assert back.pixel_format is PixelFormat.RGB
        assert len(back.planes) == 3
        assert back.equals(f)

    def test_sixteen_bit_rejected(self, tmp_path):
        Image.fromarray(np.full((4, 4), 40000, dtype=np.uint16)).save(tmp_path / "d.png")
        with pytest.raises(UnsupportedFormatError):
            read_png(tmp_path / "d.png")

    def test_interlaced_rejected(self, tmp_path):
        img = Image.fromarray(np.zeros((8, 8), dtype=np.uint8))
        img.save(tmp_path / "i.png")
        raw = bytearray((tmp_path / "i.png").read_bytes())
        # IHDR interlace byte sits at offset 8 (sig) + 8 (len, type) + 12.
        raw[28] = 1
        raw[29:33] = zlib.crc32(bytes(raw[12:29])).to_bytes(4, "big")
        (tmp_path / "i.png").write_bytes(bytes(raw))
        with pytest.raises(UnsupportedFormatError):
            read_png(tmp_path / "i.png")

    def test_read_frames_dispatch(self, tmp_path):
        write_png(Frame.gray(np.zeros((4, 4))), tmp_path / "a.png")
        frames, seq = read_frames(tmp_path / "a.png")
        assert seq is None and len(frames) == 1


class TestToLuma:
    def test_white_rgb(self):
        one = np.ones((4, 4))
        assert np.array_equal(to_luma(Frame.rgb(one, one, one)).luma, one)

    def test_green_rgb(self):
        z, one = np.zeros((3, 3)), np.ones((3, 3))
        assert np.all(to_luma(Frame.rgb(z, one, z)).luma == 0.7152)

    def test_bt601_option(self):
        z, one = np.zeros((3, 3)), np.ones((3, 3))
        assert np.all(to_luma(Frame.rgb(one, z, z), weights="bt601").luma == 0.299)

    def test_yuv_returns_y_plane(self):
        f = random_yuv(np.random.default_rng(4), 8, 8)
        y = to_luma(f)
        assert y.pixel_format is PixelFormat.GRAY
        assert np.array_equal(y.luma, f.planes[0])


@settings(max_examples=40, deadline=None)
@given(w=st.integers(1, 12).map(lambda k: 2 * k), h=st.integers(1, 12).map(lambda k: 2 * k),
       n=st.integers(1, 3), seed=st.integers(0, 2**32 - 1))
def test_y4m_round_trip_property(w, h, n, seed):
    rng = np.random.default_rng(seed)
    seq = VideoSequence(tuple(random_yuv(rng, w, h) for _ in range(n)), Fraction(24))
    data = format_y4m(seq)
    assert parse_y4m(data).equals(seq)
    header, _, _ = data.partition(b"\n")
    assert len(data) == len(header) + 1 + n * (len(b"FRAME\n") + w * h * 3 // 2)
