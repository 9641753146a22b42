"""Frames, sequences, and bit-exact Y4M / PNG input and output.

Samples are held as float64 in [0, 1]. Conversion to 8 bits only happens at
file boundaries, rounding half away from zero.
"""

import enum
import io
import os
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from PIL import Image

from ._validation import check_plane
from .exceptions import ContractViolation, UnsupportedFormatError, Y4MParseError

LUMA_WEIGHTS = {
    "bt709": (0.2126, 0.7152, 0.0722),
    "bt601": (0.299, 0.587, 0.114),
}

# Every 8-bit 4:2:0 chroma siting variant is accepted on input.
_Y4M_420_TAGS = {"420", "420jpeg", "420paldv", "420mpeg2"}


class PixelFormat(enum.Enum):
    GRAY = "gray"
    YUV420 = "yuv420"
    RGB = "rgb"


def to_uint8(plane):
    """Quantize [0, 1] samples to 8 bits, rounding half away from zero."""
    x = np.clip(np.asarray(plane, dtype=np.float64), 0.0, 1.0) * 255.0
    return np.floor(x + 0.5).astype(np.uint8)


def from_uint8(plane):
    return np.asarray(plane, dtype=np.float64) / 255.0


def _frozen(arr):
    arr = np.array(arr, dtype=np.float64, copy=True, order="C")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Frame:
    """A planar image with samples in [0, 1].

    Planes are stored read-only; build a new frame to change samples.
    """

    planes: tuple
    pixel_format: PixelFormat = PixelFormat.GRAY

    def __post_init__(self):
        fmt = PixelFormat(self.pixel_format)
        planes = tuple(_frozen(check_plane(p, "plane")) for p in self.planes)
        expected = {PixelFormat.GRAY: 1, PixelFormat.YUV420: 3, PixelFormat.RGB: 3}[fmt]
        if len(planes) != expected:
            raise ContractViolation(
                f"{fmt.name} frame needs {expected} planes, got {len(planes)}"
            )
        h, w = planes[0].shape
        if fmt is PixelFormat.YUV420:
            if h % 2 or w % 2:
                raise ContractViolation(
                    f"YUV420 luma must have even dimensions, got {w}x{h}"
                )
            for p in planes[1:]:
                if p.shape != (h // 2, w // 2):
                    raise ContractViolation(
                        f"YUV420 chroma must be {w // 2}x{h // 2}, got "
                        f"{p.shape[1]}x{p.shape[0]}"
                    )
        elif fmt is PixelFormat.RGB:
            for p in planes[1:]:
                if p.shape != (h, w):
                    raise ContractViolation("RGB planes must share dimensions")
        for p in planes:
            if p.size and (p.min() < 0.0 or p.max() > 1.0):
                raise ContractViolation(
                    f"samples must lie in [0, 1], got range "
                    f"[{p.min():.6g}, {p.max():.6g}]"
                )
        object.__setattr__(self, "planes", planes)
        object.__setattr__(self, "pixel_format", fmt)

    @classmethod
    def gray(cls, y):
        return cls((y,), PixelFormat.GRAY)

    @classmethod
    def yuv420(cls, y, u, v):
        return cls((y, u, v), PixelFormat.YUV420)

    @classmethod
    def rgb(cls, r, g, b):
        return cls((r, g, b), PixelFormat.RGB)

    @property
    def height(self):
        return self.planes[0].shape[0]

    @property
    def width(self):
        return self.planes[0].shape[1]

    @property
    def luma(self):
        """Working plane: Y for GRAY/YUV420. RGB frames have no stored luma."""
        if self.pixel_format is PixelFormat.RGB:
            raise ContractViolation("RGB frame has no luma plane; use to_luma()")
        return self.planes[0]

    def replace_planes(self, planes):
        return Frame(tuple(planes), self.pixel_format)

    def equals(self, other):
        """Sample-exact equality (format, shapes and every value)."""
        return (
            isinstance(other, Frame)
            and self.pixel_format is other.pixel_format
            and len(self.planes) == len(other.planes)
            and all(
                a.shape == b.shape and np.array_equal(a, b)
                for a, b in zip(self.planes, other.planes)
            )
        )


@dataclass(frozen=True, eq=False)
class VideoSequence:
    frames: tuple
    frame_rate: Fraction = Fraction(25)
    name: str = "sequence"

    def __post_init__(self):
        frames = tuple(self.frames)
        rate = Fraction(self.frame_rate)
        if rate <= 0:
            raise ContractViolation(f"frame_rate must be > 0, got {rate}")
        if frames:
            f0 = frames[0]
            for i, f in enumerate(frames[1:], 1):
                if (f.width, f.height, f.pixel_format) != (
                    f0.width, f0.height, f0.pixel_format
                ):
                    raise ContractViolation(
                        f"frame {i} is {f.width}x{f.height} {f.pixel_format.name}, "
                        f"sequence is {f0.width}x{f0.height} {f0.pixel_format.name}"
                    )
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "frame_rate", rate)

    def __len__(self):
        return len(self.frames)

    def __iter__(self):
        return iter(self.frames)

    def __getitem__(self, i):
        return self.frames[i]

    @property
    def width(self):
        return self.frames[0].width

    @property
    def height(self):
        return self.frames[0].height

    def with_frames(self, frames):
        return VideoSequence(tuple(frames), self.frame_rate, self.name)

    def equals(self, other):
        return (
            isinstance(other, VideoSequence)
            and self.frame_rate == other.frame_rate
            and len(self) == len(other)
            and all(a.equals(b) for a, b in zip(self.frames, other.frames))
        )


# -- Y4M ---------------------------------------------------------------------


def _parse_y4m_header(line):
    tokens = line.split(b" ")
    if tokens[0] != b"YUV4MPEG2":
        raise Y4MParseError(f"missing YUV4MPEG2 signature, got {tokens[0][:16]!r}")
    width = height = rate = None
    colorspace = "420jpeg"
    for raw in tokens[1:]:
        if not raw:
            continue
        tok = raw.decode("ascii", errors="replace")
        key, val = tok[0], tok[1:]
        try:
            if key == "W":
                width = int(val)
            elif key == "H":
                height = int(val)
            elif key == "F":
                num, den = val.split(":")
                rate = Fraction(int(num), int(den))
            elif key in "IAX":
                pass
            elif key == "C":
                colorspace = val
            else:
                raise ValueError
        except (ValueError, ZeroDivisionError):
            raise Y4MParseError(f"malformed Y4M header token {tok!r}") from None
        if key in "WH" and int(val) <= 0:
            raise Y4MParseError(f"malformed Y4M header token {tok!r}")
        if key == "F" and rate <= 0:
            raise Y4MParseError(f"malformed Y4M header token {tok!r}")
    for key, got in (("W", width), ("H", height), ("F", rate)):
        if got is None:
            raise Y4MParseError(f"Y4M header lacks the {key} token")
    if colorspace not in _Y4M_420_TAGS:
        raise UnsupportedFormatError(
            f"unsupported Y4M colorspace C{colorspace}; only 8-bit 4:2:0 is handled"
        )
    if width % 2 or height % 2:
        raise UnsupportedFormatError(
            f"4:2:0 with odd dimensions {width}x{height} is not supported"
        )
    return width, height, rate


def parse_y4m(data, name="sequence"):
    """Decode an in-memory Y4M stream."""
    nl = data.find(b"\n")
    if nl < 0:
        raise Y4MParseError("Y4M header is not newline-terminated")
    width, height, rate = _parse_y4m_header(data[:nl])
    ysize, csize = width * height, (width // 2) * (height // 2)
    frame_bytes = ysize + 2 * csize
    frames = []
    pos = nl + 1
    while pos < len(data):
        end = data.find(b"\n", pos)
        if end < 0 or not data.startswith(b"FRAME", pos):
            raise Y4MParseError(f"expected FRAME marker at byte {pos}")
        pos = end + 1
        if pos + frame_bytes > len(data):
            raise Y4MParseError(
                f"frame {len(frames)} truncated: needs {frame_bytes} bytes, "
                f"{len(data) - pos} left"
            )
        buf = np.frombuffer(data, dtype=np.uint8, count=frame_bytes, offset=pos)
        y = buf[:ysize].reshape(height, width)
        u = buf[ysize:ysize + csize].reshape(height // 2, width // 2)
        v = buf[ysize + csize:].reshape(height // 2, width // 2)
        frames.append(Frame.yuv420(from_uint8(y), from_uint8(u), from_uint8(v)))
        pos += frame_bytes
    return VideoSequence(tuple(frames), rate, name)


def read_y4m(path):
    """Read an 8-bit 4:2:0 YUV4MPEG2 file into a :class:`VideoSequence`."""
    with open(path, "rb") as fh:
        data = fh.read()
    name = os.path.splitext(os.path.basename(os.fspath(path)))[0]
    return parse_y4m(data, name=name)


def format_y4m(seq):
    if not len(seq):
        raise ContractViolation("cannot write an empty sequence")
    if seq.frames[0].pixel_format is not PixelFormat.YUV420:
        raise ContractViolation(
            f"Y4M output needs YUV420 frames, got {seq.frames[0].pixel_format.name}"
        )
    rate = seq.frame_rate
    out = io.BytesIO()
    out.write(
        f"YUV4MPEG2 W{seq.width} H{seq.height} F{rate.numerator}:{rate.denominator}"
        f" Ip A1:1 C420\n".encode("ascii")
    )
    for frame in seq.frames:
        out.write(b"FRAME\n")
        for p in frame.planes:
            out.write(to_uint8(p).tobytes())
    return out.getvalue()


def write_y4m(seq, path):
    """Write a YUV420 sequence; reading it back is sample-exact at 8 bits."""
    data = format_y4m(seq)
    with open(path, "wb") as fh:
        fh.write(data)


def gray_to_yuv420(frame):
    """Wrap a GRAY frame as YUV420 with neutral chroma (dimensions must be even)."""
    y = frame.luma
    h, w = y.shape
    neutral = np.full((h // 2, w // 2), 128 / 255.0)
    return Frame.yuv420(y, neutral, neutral)


# -- PNG ---------------------------------------------------------------------


def read_png(path):
    """Read an 8-bit gray or RGB non-interlaced PNG."""
    with Image.open(path) as img:
        if img.format != "PNG":
            raise UnsupportedFormatError(f"{path}: not a PNG file")
        if img.info.get("interlace"):
            raise UnsupportedFormatError(f"{path}: interlaced PNG is not supported")
        if img.mode == "L":
            arr = np.asarray(img, dtype=np.uint8)
            return Frame.gray(from_uint8(arr))
        if img.mode == "RGB":
            arr = np.asarray(img, dtype=np.uint8)
            return Frame.rgb(*(from_uint8(arr[..., c]) for c in range(3)))
        raise UnsupportedFormatError(
            f"{path}: PNG mode {img.mode!r} unsupported; need 8-bit L or RGB"
        )


def write_png(frame, path):
    if frame.pixel_format is PixelFormat.GRAY:
        img = Image.fromarray(to_uint8(frame.planes[0]), mode="L")
    elif frame.pixel_format is PixelFormat.RGB:
        img = Image.fromarray(
            np.stack([to_uint8(p) for p in frame.planes], axis=-1), mode="RGB"
        )
    else:
        raise UnsupportedFormatError("PNG output needs a GRAY or RGB frame")
    img.save(path, format="PNG")


def to_luma(frame, weights="bt709"):
    """Return the GRAY working plane of ``frame``.

    RGB uses the named luma weights; GRAY and YUV420 return their Y plane
    untouched.
    """
    if frame.pixel_format is PixelFormat.RGB:
        wr, wg, wb = LUMA_WEIGHTS[weights]
        r, g, b = frame.planes
        y = np.clip(wr * r + wg * g + wb * b, 0.0, 1.0)
        return Frame.gray(y)
    return Frame.gray(frame.planes[0])


def read_frames(path):
    """Load a PNG as one frame or a Y4M as its frames; returns (frames, seq|None)."""
    with open(path, "rb") as fh:
        head = fh.read(9)
    if head.startswith(b"YUV4MPEG2"):
        seq = read_y4m(path)
        return list(seq.frames), seq
    return [read_png(path)], None
