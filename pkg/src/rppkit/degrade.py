"""Seeded two-order degradation model: blur, resize, noise, JPEG-style and codec.

A :class:`DegradationRecipe` is fully materialized when sampled: every stage
carries its concrete parameters, including the seed for its noise draw, so
applying a recipe is a pure function of (frame, recipe). Recipes serialize
to YAML for replay.

Recipe file schema::

    format: rppkit-degradation-recipe
    version: 1
    seed: <int>            # seed the recipe was sampled from
    orders:                # list of orders, each a list of stages
      - - kind: blur       # blur | resize | noise_gaussian | noise_poisson
          sigma_x: 1.3     #   | jpeg | codec
          ...

Stage parameters:

========================  ===================================================
blur                      sigma_x, sigma_y in [0.1, 3], theta (radians),
                          kernel_size odd in [3, 21]
resize                    mode in {area, bilinear, bicubic}, scale in [0.5, 2]
noise_gaussian            sigma in [0, 0.5] (unit-range samples), seed
noise_poisson             scale > 0 (photon count at full scale), seed
jpeg                      quality in [10, 95]
codec                     qp in [0, 51]
========================  ===================================================
"""

import enum
import math
from dataclasses import dataclass, field

import cv2
import numpy as np
import yaml
from scipy import ndimage

from ._validation import check_plane
from .dct_core import blockize, dct_matrix, unblockize
from .exceptions import ConfigError, ContractViolation, StageUnavailableError
from .media_io import Frame, to_luma

RECIPE_FORMAT = "rppkit-degradation-recipe"
RECIPE_VERSION = 1

# ITU-T T.81 Annex K luminance table.
JPEG_LUMA_TABLE = np.array([
    [16, 11, 10, 16, 24, 40, 51, 61],
    [12, 12, 14, 19, 26, 58, 60, 55],
    [14, 13, 16, 24, 40, 57, 69, 56],
    [14, 17, 22, 29, 51, 87, 80, 62],
    [18, 22, 37, 56, 68, 109, 103, 77],
    [24, 35, 55, 64, 81, 104, 113, 92],
    [49, 64, 78, 87, 103, 121, 120, 101],
    [72, 92, 95, 98, 112, 100, 103, 99],
], dtype=np.float64)

_CV2_INTERP = {
    "area": cv2.INTER_AREA,
    "bilinear": cv2.INTER_LINEAR,
    "bicubic": cv2.INTER_CUBIC,
}


class StageKind(enum.Enum):
    BLUR = "blur"
    RESIZE = "resize"
    NOISE_GAUSSIAN = "noise_gaussian"
    NOISE_POISSON = "noise_poisson"
    JPEG = "jpeg"
    CODEC = "codec"


_REQUIRED = {
    StageKind.BLUR: ("sigma_x", "sigma_y", "theta", "kernel_size"),
    StageKind.RESIZE: ("mode", "scale"),
    StageKind.NOISE_GAUSSIAN: ("sigma", "seed"),
    StageKind.NOISE_POISSON: ("scale", "seed"),
    StageKind.JPEG: ("quality",),
    StageKind.CODEC: ("qp",),
}


def _in(name, value, lo, hi):
    if not lo <= value <= hi:
        raise ConfigError(f"{name}={value!r} outside [{lo}, {hi}]")


@dataclass(frozen=True)
class DegradationStage:
    kind: StageKind
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        kind = StageKind(self.kind)
        params = dict(self.params)
        missing = [k for k in _REQUIRED[kind] if k not in params]
        extra = [k for k in params if k not in _REQUIRED[kind]]
        if missing or extra:
            raise ConfigError(
                f"{kind.value} stage: missing {missing or 'nothing'}, "
                f"unexpected {extra or 'nothing'}"
            )
        if kind is StageKind.BLUR:
            params["sigma_x"] = float(params["sigma_x"])
            params["sigma_y"] = float(params["sigma_y"])
            params["theta"] = float(params["theta"])
            params["kernel_size"] = int(params["kernel_size"])
            _in("sigma_x", params["sigma_x"], 0.1, 3.0)
            _in("sigma_y", params["sigma_y"], 0.1, 3.0)
            k = params["kernel_size"]
            if k % 2 == 0 or not 3 <= k <= 21:
                raise ConfigError(f"kernel_size={k} must be odd in [3, 21]")
        elif kind is StageKind.RESIZE:
            params["scale"] = float(params["scale"])
            _in("scale", params["scale"], 0.5, 2.0)
            if params["mode"] not in _CV2_INTERP:
                raise ConfigError(
                    f"resize mode {params['mode']!r} not in {sorted(_CV2_INTERP)}"
                )
        elif kind is StageKind.NOISE_GAUSSIAN:
            params["sigma"] = float(params["sigma"])
            params["seed"] = int(params["seed"])
            _in("sigma", params["sigma"], 0.0, 0.5)
        elif kind is StageKind.NOISE_POISSON:
            params["scale"] = float(params["scale"])
            params["seed"] = int(params["seed"])
            if not params["scale"] > 0:
                raise ConfigError(f"poisson scale must be > 0, got {params['scale']}")
        elif kind is StageKind.JPEG:
            params["quality"] = int(params["quality"])
            _in("quality", params["quality"], 10, 95)
        elif kind is StageKind.CODEC:
            params["qp"] = int(params["qp"])
            _in("qp", params["qp"], 0, 51)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "params", params)

    def to_dict(self):
        return {"kind": self.kind.value, **self.params}

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        return cls(StageKind(d.pop("kind")), d)


@dataclass(frozen=True)
class DegradationRecipe:
    orders: tuple
    seed: int = 0

    def __post_init__(self):
        orders = tuple(tuple(order) for order in self.orders)
        for order in orders:
            for st in order:
                if not isinstance(st, DegradationStage):
                    raise ConfigError(f"not a DegradationStage: {st!r}")
        object.__setattr__(self, "orders", orders)
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def stages(self):
        return [st for order in self.orders for st in order]

    def to_dict(self):
        return {
            "format": RECIPE_FORMAT,
            "version": RECIPE_VERSION,
            "seed": self.seed,
            "orders": [[st.to_dict() for st in order] for order in self.orders],
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != RECIPE_FORMAT:
            raise ConfigError(f"not a degradation recipe (format={d.get('format')!r})")
        if d.get("version") != RECIPE_VERSION:
            raise ConfigError(f"unsupported recipe version {d.get('version')!r}")
        orders = tuple(
            tuple(DegradationStage.from_dict(s) for s in order or ())
            for order in d.get("orders") or ()
        )
        return cls(orders, d.get("seed", 0))

    def dumps(self):
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    @classmethod
    def loads(cls, text):
        return cls.from_dict(yaml.safe_load(text))

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.loads(fh.read())


@dataclass(frozen=True)
class DegradationRanges:
    """Sampling ranges for one order; pin a range with ``lo == hi``.

    None of these values come from a published setting; they follow common
    second-order degradation practice and are meant to be overridden.
    """

    blur_prob: float = 0.8
    isotropic_prob: float = 0.5
    sigma: tuple = (0.2, 3.0)
    kernel_size: tuple = (7, 21)
    theta: tuple = (0.0, math.pi)
    resize_prob: float = 0.7
    resize_modes: tuple = ("area", "bilinear", "bicubic")
    resize_scale: tuple = (0.5, 2.0)
    noise_prob: float = 0.8
    poisson_prob: float = 0.4
    gaussian_sigma: tuple = (1 / 255, 25 / 255)
    poisson_scale: tuple = (100.0, 10000.0)  # sampled log-uniformly
    jpeg_prob: float = 0.8
    jpeg_quality: tuple = (30, 95)
    codec_prob: float = 0.0
    codec_qp: tuple = (22, 37)

    def __post_init__(self):
        for name in ("blur_prob", "isotropic_prob", "resize_prob", "noise_prob",
                     "poisson_prob", "jpeg_prob", "codec_prob"):
            _in(name, getattr(self, name), 0.0, 1.0)
        for name in ("sigma", "kernel_size", "theta", "resize_scale",
                     "gaussian_sigma", "poisson_scale", "jpeg_quality", "codec_qp"):
            rng = getattr(self, name)
            if len(rng) != 2 or rng[0] > rng[1]:
                raise ConfigError(f"{name} range {rng!r} is empty")
        if not self.resize_modes:
            raise ConfigError("resize_modes is empty")
        k0, k1 = self.kernel_size
        if not any(k % 2 for k in range(int(k0), int(k1) + 1)):
            raise ConfigError(f"kernel_size range {self.kernel_size!r} has no odd size")


def _uniform(rng, lo_hi):
    lo, hi = lo_hi
    return float(lo) if lo == hi else float(rng.uniform(lo, hi))


def _sample_order(rng, r):
    stages = []
    if rng.random() < r.blur_prob:
        if rng.random() < r.isotropic_prob:
            sx = sy = _uniform(rng, r.sigma)
        else:
            sx, sy = _uniform(rng, r.sigma), _uniform(rng, r.sigma)
        odd = [k for k in range(int(r.kernel_size[0]), int(r.kernel_size[1]) + 1) if k % 2]
        k = odd[int(rng.integers(len(odd)))]
        stages.append(DegradationStage(StageKind.BLUR, {
            "sigma_x": sx, "sigma_y": sy, "theta": _uniform(rng, r.theta),
            "kernel_size": k,
        }))
    if rng.random() < r.resize_prob:
        mode = r.resize_modes[int(rng.integers(len(r.resize_modes)))]
        stages.append(DegradationStage(StageKind.RESIZE, {
            "mode": mode, "scale": _uniform(rng, r.resize_scale),
        }))
    if rng.random() < r.noise_prob:
        seed = int(rng.integers(2**63))
        if rng.random() < r.poisson_prob:
            lo, hi = np.log10(r.poisson_scale[0]), np.log10(r.poisson_scale[1])
            scale = float(10 ** _uniform(rng, (lo, hi)))
            stages.append(DegradationStage(
                StageKind.NOISE_POISSON, {"scale": scale, "seed": seed}))
        else:
            stages.append(DegradationStage(
                StageKind.NOISE_GAUSSIAN,
                {"sigma": _uniform(rng, r.gaussian_sigma), "seed": seed}))
    if rng.random() < r.jpeg_prob:
        q0, q1 = int(r.jpeg_quality[0]), int(r.jpeg_quality[1])
        stages.append(DegradationStage(
            StageKind.JPEG, {"quality": int(rng.integers(q0, q1 + 1))}))
    if rng.random() < r.codec_prob:
        p0, p1 = int(r.codec_qp[0]), int(r.codec_qp[1])
        stages.append(DegradationStage(
            StageKind.CODEC, {"qp": int(rng.integers(p0, p1 + 1))}))
    return tuple(stages)


def sample_recipe(seed, ranges=None, n_orders=2):
    """Draw a materialized recipe.

    ``ranges`` is one :class:`DegradationRanges` used for every order or a
    sequence with one entry per order. Within an order stages always run
    blur, resize, noise, then compression.
    """
    if ranges is None:
        ranges = DegradationRanges()
    per_order = list(ranges) if isinstance(ranges, (list, tuple)) else [ranges] * n_orders
    if len(per_order) != n_orders:
        raise ConfigError(f"need {n_orders} range sets, got {len(per_order)}")
    rng = np.random.default_rng(seed)
    return DegradationRecipe(tuple(_sample_order(rng, r) for r in per_order), seed)


# -- stage implementations ---------------------------------------------------


def gaussian_kernel(kernel_size, sigma_x, sigma_y, theta=0.0):
    """Normalized anisotropic Gaussian kernel rotated by ``theta`` radians."""
    c, s = math.cos(theta), math.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    cov = rot @ np.diag([sigma_x**2, sigma_y**2]) @ rot.T
    inv = np.linalg.inv(cov)
    r = np.arange(kernel_size) - kernel_size // 2
    xx, yy = np.meshgrid(r, r)
    pts = np.stack([xx, yy], axis=-1)
    k = np.exp(-0.5 * np.einsum("...i,ij,...j->...", pts, inv, pts))
    return k / k.sum()


def _round_half_away(x):
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def jpeg_quant_table(quality):
    """IJG quality scaling of the standard luminance table (q=100 gives all ones)."""
    q = int(quality)
    if not 1 <= q <= 100:
        raise ConfigError(f"JPEG quality {q} outside [1, 100]")
    scale = 5000 / q if q < 50 else 200 - 2 * q
    return np.clip(np.floor((JPEG_LUMA_TABLE * scale + 50) / 100), 1, 255)


def jpeg_like(plane, quality=None, table=None):
    """Luma-only JPEG-style round trip: 8x8 DCT, quantize, dequantize, inverse."""
    if table is None:
        table = jpeg_quant_table(quality)
    p = check_plane(plane)
    m = dct_matrix(8)
    coeffs = m @ blockize(p * 255.0 - 128.0, 8) @ m.T
    coeffs = _round_half_away(coeffs / table) * table
    out = unblockize(m.T @ coeffs @ m, p.shape)
    return np.clip((out + 128.0) / 255.0, 0.0, 1.0)


def resize_plane(plane, scale=None, mode="bicubic", size=None):
    """Resample a plane by ``scale`` or to ``size`` (height, width)."""
    h, w = plane.shape
    if size is None:
        size = (max(1, int(round(h * scale))), max(1, int(round(w * scale))))
    if tuple(size) == (h, w):
        return np.array(plane, dtype=np.float64)
    out = cv2.resize(
        np.ascontiguousarray(plane, dtype=np.float64), (size[1], size[0]),
        interpolation=_CV2_INTERP[mode],
    )
    return np.clip(out, 0.0, 1.0)


def _codec_roundtrip(plane, qp, encoder):
    from .media_io import VideoSequence, gray_to_yuv420
    from .rd_harness import encode_decode

    h, w = plane.shape
    padded = np.pad(plane, ((0, h % 2), (0, w % 2)), mode="edge")
    seq = VideoSequence((gray_to_yuv420(Frame.gray(padded)),), 25, "codec-stage")
    _, decoded = encode_decode(seq, encoder, qp)
    return np.array(decoded.frames[0].luma[:h, :w])


def apply_stage(frame, stage, encoder=None):
    """Apply one stage to a GRAY frame or 2-D array; returns the same kind."""
    as_frame = isinstance(frame, Frame)
    plane = check_plane(to_luma(frame).luma if as_frame else frame)
    p = stage.params
    kind = stage.kind
    if kind is StageKind.BLUR:
        k = gaussian_kernel(p["kernel_size"], p["sigma_x"], p["sigma_y"], p["theta"])
        out = ndimage.convolve(plane, k, mode="reflect")
    elif kind is StageKind.RESIZE:
        out = resize_plane(plane, p["scale"], p["mode"])
    elif kind is StageKind.NOISE_GAUSSIAN:
        rng = np.random.default_rng(p["seed"])
        out = plane + rng.normal(0.0, p["sigma"], plane.shape)
    elif kind is StageKind.NOISE_POISSON:
        rng = np.random.default_rng(p["seed"])
        lam = p["scale"]
        out = rng.poisson(plane * lam) / lam
    elif kind is StageKind.JPEG:
        out = jpeg_like(plane, p["quality"])
    elif kind is StageKind.CODEC:
        if encoder is None:
            raise StageUnavailableError(
                "codec stage needs an encoder profile; none configured"
            )
        out = _codec_roundtrip(plane, p["qp"], encoder)
    else:  # pragma: no cover
        raise ContractViolation(f"unknown stage kind {kind}")
    out = np.clip(out, 0.0, 1.0)
    return Frame.gray(out) if as_frame else out


def apply_recipe(frame, recipe, encoder=None):
    """Run every stage in order, then resize back to the input size if needed.

    Returns ``(degraded, recipe)``. Non-GRAY frames are reduced to luma
    first. The final size restoration uses the mode of the last resize stage.
    """
    as_frame = isinstance(frame, Frame)
    plane = check_plane(to_luma(frame).luma if as_frame else frame)
    out = plane
    last_mode = "bicubic"
    for stage in recipe.stages:
        out = apply_stage(out, stage, encoder)
        if stage.kind is StageKind.RESIZE:
            last_mode = stage.params["mode"]
    if out.shape != plane.shape:
        out = resize_plane(out, mode=last_mode, size=plane.shape)
    out = np.clip(out, 0.0, 1.0)
    return (Frame.gray(out) if as_frame else out), recipe
