"""Full-reference quality metrics and the training-style losses.

PSNR, SSIM and 5-scale MS-SSIM operate on the luma plane by default
(``all_planes=True`` averages planes 6:1:1 for YUV420, equally for RGB).
VMAF is not computed here; :class:`VmafScorer` shells out to an external
scorer and parses its pooled score.
"""

import json
import logging
import math
import os
import subprocess
import tempfile
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ._tools import check_template, render_command
from ._validation import check_plane, check_same_shape
from .dct_core import DctConfig, adaptive_dct_loss
from .exceptions import ConfigError, ContractViolation, EncoderError
from .media_io import Frame, PixelFormat, to_luma

logger = logging.getLogger(__name__)

MS_SSIM_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
MS_SSIM_MIN_SIZE = SSIM_WINDOW * 2 ** (len(MS_SSIM_WEIGHTS) - 1)  # 176


@dataclass(frozen=True)
class LossWeights:
    lambda1: float = 10.0  # rate (adaptive DCT) term
    lambda2: float = 0.1  # perceptual (MS-SSIM) term

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ConfigError(f"loss weights must be >= 0, got {self}")


@dataclass(frozen=True)
class MetricReport:
    psnr: float
    ssim: float
    ms_ssim: float
    vmaf: float = None

    def as_dict(self):
        d = {"psnr": self.psnr, "ssim": self.ssim, "msssim": self.ms_ssim}
        if self.vmaf is not None:
            d["vmaf"] = self.vmaf
        return d


@dataclass(frozen=True)
class LossBreakdown:
    """Total loss with each component before weighting."""

    total: float
    dct: float
    perceptual: float
    reconstruction: float
    weights: LossWeights = field(default_factory=LossWeights)


def _plane_pairs(a, b, all_planes):
    """Yield ``(weight, plane_a, plane_b)`` for the planes to compare."""
    if isinstance(a, Frame) != isinstance(b, Frame):
        raise ContractViolation("compare two Frames or two arrays, not a mix")
    if not isinstance(a, Frame):
        pa, pb = check_plane(a, "a"), check_plane(b, "b")
        check_same_shape(pa, pb, "frames")
        return [(1.0, pa, pb)]
    if a.pixel_format is not b.pixel_format:
        raise ContractViolation(
            f"pixel formats differ: {a.pixel_format.name} vs {b.pixel_format.name}"
        )
    for pa, pb in zip(a.planes, b.planes):
        check_same_shape(pa, pb, "frames")
    if not all_planes:
        return [(1.0, to_luma(a).luma, to_luma(b).luma)]
    if a.pixel_format is PixelFormat.YUV420:
        weights = (6.0, 1.0, 1.0)
    else:
        weights = (1.0,) * len(a.planes)
    total = sum(weights)
    return [(w / total, pa, pb) for w, pa, pb in zip(weights, a.planes, b.planes)]


def _weighted(pairs, fn):
    if len(pairs) == 1:
        return fn(pairs[0][1], pairs[0][2])
    return float(sum(w * fn(pa, pb) for w, pa, pb in pairs))


def _seq_mean(x):
    flat = np.ravel(x)
    return float(np.cumsum(flat)[-1]) / flat.size


def _psnr_plane(a, b):
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def psnr(a, b, all_planes=False):
    """PSNR in dB for unit-range samples; ``inf`` for identical inputs."""
    pairs = _plane_pairs(a, b, all_planes)
    if len(pairs) == 1:
        return _psnr_plane(pairs[0][1], pairs[0][2])
    mse = sum(w * float(np.mean((pa - pb) ** 2)) for w, pa, pb in pairs)
    return math.inf if mse == 0.0 else 10.0 * math.log10(1.0 / mse)


def gaussian_window(size=SSIM_WINDOW, sigma=SSIM_SIGMA):
    r = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(r**2) / (2.0 * sigma**2))
    return g / g.sum()


def _filter_valid(x, g):
    k = g.size
    rows = sliding_window_view(x, k, axis=0) @ g
    return sliding_window_view(rows, k, axis=1) @ g


def _ssim_maps(a, b, g, k1, k2):
    c1, c2 = k1**2, k2**2
    mu_a = _filter_valid(a, g)
    mu_b = _filter_valid(b, g)
    var_a = _filter_valid(a * a, g) - mu_a * mu_a
    var_b = _filter_valid(b * b, g) - mu_b * mu_b
    cov = _filter_valid(a * b, g) - mu_a * mu_b
    lum = (2.0 * mu_a * mu_b + c1) / (mu_a * mu_a + mu_b * mu_b + c1)
    cs = (2.0 * cov + c2) / (var_a + var_b + c2)
    return lum, cs


def _ssim_plane(a, b, window, sigma, k1, k2):
    if min(a.shape) < window:
        raise ContractViolation(
            f"SSIM needs frames of at least {window}x{window}, got "
            f"{a.shape[1]}x{a.shape[0]}"
        )
    lum, cs = _ssim_maps(a, b, gaussian_window(window, sigma), k1, k2)
    return float(np.mean(lum * cs))


def ssim(a, b, window=SSIM_WINDOW, sigma=SSIM_SIGMA, k1=SSIM_K1, k2=SSIM_K2,
         all_planes=False):
    """Mean SSIM over valid (unpadded) Gaussian-window positions."""
    return _weighted(
        _plane_pairs(a, b, all_planes),
        lambda pa, pb: _ssim_plane(pa, pb, window, sigma, k1, k2),
    )


def _downsample2(x):
    h, w = (x.shape[0] // 2) * 2, (x.shape[1] // 2) * 2
    x = x[:h, :w]
    return 0.25 * (x[0::2, 0::2] + x[1::2, 0::2] + x[0::2, 1::2] + x[1::2, 1::2])


def _ms_ssim_plane(a, b, weights, window, sigma, k1, k2):
    levels = len(weights)
    min_size = window * 2 ** (levels - 1)
    if min(a.shape) < min_size:
        raise ContractViolation(
            f"MS-SSIM needs frames of at least {min_size}x{min_size} "
            f"({levels} scales, window {window}); got {a.shape[1]}x{a.shape[0]}"
        )
    g = gaussian_window(window, sigma)
    score = 1.0
    for j, w in enumerate(weights):
        lum, cs = _ssim_maps(a, b, g, k1, k2)
        if j == levels - 1:
            value = float(np.mean(lum * cs))
        else:
            value = float(np.mean(cs))
            a, b = _downsample2(a), _downsample2(b)
        # Negative contrast-structure terms are clipped so fractional
        # exponents stay real.
        score *= max(value, 0.0) ** w
    return score


def ms_ssim(a, b, weights=MS_SSIM_WEIGHTS, window=SSIM_WINDOW, sigma=SSIM_SIGMA,
            k1=SSIM_K1, k2=SSIM_K2, all_planes=False):
    """Five-scale MS-SSIM with 2x2 mean downsampling."""
    return _weighted(
        _plane_pairs(a, b, all_planes),
        lambda pa, pb: _ms_ssim_plane(pa, pb, weights, window, sigma, k1, k2),
    )


def reconstruction_loss(gt, pred):
    """Mean absolute difference over the luma plane."""
    (_, pa, pb), = _plane_pairs(gt, pred, False)
    return _seq_mean(np.abs(pa - pb))


def perceptual_loss(pred, gt):
    return 1.0 - ms_ssim(pred, gt)


def total_loss(pred, gt, dct_config=None, weights=None):
    """Weighted sum of the rate, perceptual and reconstruction terms.

    The rate term is reference-free: it only looks at ``pred``.
    """
    weights = weights or LossWeights()
    l_dct = adaptive_dct_loss(to_luma(pred) if isinstance(pred, Frame) else pred,
                              dct_config or DctConfig())
    l_p = perceptual_loss(pred, gt)
    l_r = reconstruction_loss(gt, pred)
    total = weights.lambda1 * l_dct + weights.lambda2 * l_p + l_r
    return LossBreakdown(total, l_dct, l_p, l_r, weights)


def metric_report(ref, dist, all_planes=False):
    return MetricReport(
        psnr(ref, dist, all_planes=all_planes),
        ssim(ref, dist, all_planes=all_planes),
        ms_ssim(ref, dist, all_planes=all_planes),
    )


# -- external VMAF -----------------------------------------------------------

VMAF_PLACEHOLDERS = {"reference", "distorted", "output"}

DEFAULT_VMAF_TEMPLATES = {
    "vmaf": "vmaf --reference {reference} --distorted {distorted} --json --output {output}",
    "ffmpeg": (
        "ffmpeg -hide_banner -nostdin -loglevel error -i {distorted} -i {reference} "
        "-lavfi libvmaf=log_fmt=json:log_path={output} -f null -"
    ),
}


def parse_vmaf_log(text):
    """Pooled VMAF score from a libvmaf JSON or XML log."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        doc = json.loads(stripped)
        pooled = doc.get("pooled_metrics", {})
        if "vmaf" in pooled:
            return float(pooled["vmaf"]["mean"])
        agg = doc.get("aggregate", {})
        for key in ("VMAF_score", "vmaf"):
            if key in agg:
                return float(agg[key])
        raise ValueError("no pooled VMAF score in JSON log")
    root = ET.fromstring(stripped)
    for metric in root.iter("metric"):
        if metric.get("name") == "vmaf" and metric.get("mean") is not None:
            return float(metric.get("mean"))
    for fyi in root.iter("fyi"):
        if fyi.get("aggregateVMAF") is not None:
            return float(fyi.get("aggregateVMAF"))
    raise ValueError("no pooled VMAF score in XML log")


@dataclass(frozen=True)
class VmafScorer:
    """Runs an external VMAF tool on two Y4M files.

    ``command_template`` uses ``{reference}``, ``{distorted}`` and
    ``{output}`` (the log file the tool writes, JSON or XML).
    """

    command_template: str = DEFAULT_VMAF_TEMPLATES["vmaf"]
    timeout: float = 3600.0

    def __post_init__(self):
        check_template(self.command_template, VMAF_PLACEHOLDERS, VMAF_PLACEHOLDERS,
                       "VMAF template")

    def check_available(self):
        """Raise if the scorer executable cannot be resolved."""
        render_command(self.command_template, reference="r", distorted="d", output="o")

    def score(self, reference_path, distorted_path):
        with tempfile.TemporaryDirectory(prefix="rpp-vmaf-") as tmp:
            log_path = os.path.join(tmp, "vmaf.log")
            argv = render_command(
                self.command_template, reference=os.fspath(reference_path),
                distorted=os.fspath(distorted_path), output=log_path,
            )
            proc = subprocess.run(argv, capture_output=True, text=True,
                                  timeout=self.timeout)
            if proc.returncode != 0:
                raise EncoderError(
                    f"VMAF scorer exited with {proc.returncode}: {proc.stderr.strip()[-500:]}",
                    proc.returncode, proc.stderr,
                )
            with open(log_path) as fh:
                return parse_vmaf_log(fh.read())
