"""Rate-distortion evaluation against external encoders.

Pipeline per sequence and encoder profile: optionally preprocess every frame
(adaptive DCT filter, then alpha blend with the source), write Y4M, encode at
each QP, decode, and score the decoded frames against the *original* source.
Curves are compared with the Bjontegaard delta rate.

Report CSV columns (one row per RD point)::

    sequence,codec,preset,label,qp,bitrate_kbps,psnr,ssim,msssim,vmaf

``vmaf`` is empty when no scorer was configured; ``psnr`` may be ``inf``.

Profile file (YAML)::

    profiles:
      - name: h264
        command_template: "ffmpeg ... -qp {qp} ... {output}"
        decode_template: "ffmpeg ... -i {input} ... {output}"
        preset: veryfast
        qp_list: [22, 27, 32, 37]
        extension: .264
"""

import csv
import dataclasses
import logging
import math
import os
import subprocess
import tempfile
import xml.etree.ElementTree as ET
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import yaml

from ._tools import check_template, render_command
from ._validation import check_same_shape, check_unit_interval
from .dct_core import DctConfig, adaptive_dct_filter
from .exceptions import (
    ConfigError,
    ContractViolation,
    CurveDataError,
    EncoderError,
    IntegrityError,
    OverlapError,
)
from .media_io import Frame, read_y4m, write_y4m
from .metrics import (
    MS_SSIM_MIN_SIZE,
    SSIM_WINDOW,
    MetricReport,
    ms_ssim,
    psnr,
    ssim,
)

logger = logging.getLogger(__name__)

ENCODE_REQUIRED = {"input", "output", "qp"}
ENCODE_ALLOWED = ENCODE_REQUIRED | {"preset"}
DECODE_REQUIRED = {"input", "output"}
DECODE_ALLOWED = DECODE_REQUIRED | {"fps"}

REPORT_COLUMNS = (
    "sequence", "codec", "preset", "label", "qp",
    "bitrate_kbps", "psnr", "ssim", "msssim", "vmaf",
)
METRIC_ATTRS = {"psnr": "psnr", "ssim": "ssim", "msssim": "ms_ssim", "vmaf": "vmaf"}


# -- blending ----------------------------------------------------------------


@dataclass(frozen=True)
class BlendConfig:
    alpha: float = 0.5

    def __post_init__(self):
        check_unit_interval(self.alpha, "alpha")


def alpha_blend(f_o, f_i, cfg=None):
    """``alpha * f_o + (1 - alpha) * f_i`` per sample, clamped to [0, 1].

    ``f_o`` is the processed frame, ``f_i`` the input. Works on Frames (all
    planes) or arrays.
    """
    if cfg is None:
        cfg = BlendConfig()
    alpha = cfg.alpha if isinstance(cfg, BlendConfig) else check_unit_interval(cfg, "alpha")
    if isinstance(f_o, Frame):
        if not isinstance(f_i, Frame) or f_o.pixel_format is not f_i.pixel_format:
            raise ContractViolation("alpha_blend needs two frames of the same format")
        planes = []
        for po, pi in zip(f_o.planes, f_i.planes):
            check_same_shape(po, pi, "frames")
            planes.append(np.clip(alpha * po + (1.0 - alpha) * pi, 0.0, 1.0))
        return f_o.replace_planes(planes)
    po, pi = np.asarray(f_o, dtype=np.float64), np.asarray(f_i, dtype=np.float64)
    check_same_shape(po, pi, "frames")
    return np.clip(alpha * po + (1.0 - alpha) * pi, 0.0, 1.0)


@dataclass(frozen=True)
class Preprocessor:
    """Adaptive DCT filter followed by an alpha blend with the source."""

    dct_config: DctConfig = field(default_factory=DctConfig)
    strength: float = 1.0
    blend: BlendConfig = field(default_factory=BlendConfig)

    def __post_init__(self):
        check_unit_interval(self.strength, "strength")

    @property
    def label(self):
        sizes = "+".join(str(n) for n in self.dct_config.block_sizes)
        return f"rpp-n{sizes}-s{self.strength:g}-a{self.blend.alpha:g}"

    def apply(self, frame):
        return alpha_blend(
            adaptive_dct_filter(frame, self.dct_config, self.strength), frame, self.blend
        )


def prepare_input(seq, preprocessor=None, workers=1):
    """The sequence as it is handed to the encoder."""
    if preprocessor is None:
        return seq
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        frames = list(pool.map(preprocessor.apply, seq.frames))
    return seq.with_frames(frames)


# -- encoder profiles --------------------------------------------------------

_FFMPEG = "ffmpeg -hide_banner -nostdin -loglevel error -y"
_FFMPEG_DECODE = (
    f"{_FFMPEG} -framerate {{fps}} -i {{input}} -f yuv4mpegpipe -pix_fmt yuv420p {{output}}"
)


@dataclass(frozen=True)
class EncoderProfile:
    name: str
    command_template: str
    decode_template: str = _FFMPEG_DECODE
    preset: str = "veryfast"
    qp_list: tuple = (22, 27, 32, 37)
    extension: str = ".bin"

    def __post_init__(self):
        check_template(self.command_template, ENCODE_REQUIRED, ENCODE_ALLOWED,
                       f"profile {self.name!r} command_template")
        check_template(self.decode_template, DECODE_REQUIRED, DECODE_ALLOWED,
                       f"profile {self.name!r} decode_template")
        qps = tuple(int(q) for q in self.qp_list)
        if len(qps) < 4:
            raise ConfigError(
                f"profile {self.name!r}: qp_list needs >= 4 points for BD-rate, got {qps}"
            )
        if any(b <= a for a, b in zip(qps, qps[1:])):
            raise ConfigError(f"profile {self.name!r}: qp_list must be strictly increasing")
        object.__setattr__(self, "qp_list", qps)

    def with_overrides(self, **kw):
        return dataclasses.replace(self, **{k: v for k, v in kw.items() if v is not None})


DEFAULT_PROFILES = {
    "h264": EncoderProfile(
        "h264",
        f"{_FFMPEG} -i {{input}} -an -c:v libx264 -preset {{preset}} -qp {{qp}} "
        "-threads 1 -f h264 {output}",
        preset="veryfast", extension=".264",
    ),
    "h265": EncoderProfile(
        "h265",
        f"{_FFMPEG} -i {{input}} -an -c:v libx265 -preset {{preset}} "
        "-x265-params qp={qp}:pools=none:frame-threads=1:log-level=error "
        "-f hevc {output}",
        preset="veryfast", extension=".265",
    ),
    "h266": EncoderProfile(
        "h266",
        "vvencapp --input {input} --output {output} --qp {qp} --preset {preset} --threads 1",
        decode_template="vvdecapp --bitstream {input} --output {output} --y4m",
        preset="faster", extension=".266",
    ),
}


def load_profiles(path):
    """Read encoder profiles from a YAML file; returns ``{name: profile}``."""
    with open(path) as fh:
        doc = yaml.safe_load(fh) or {}
    entries = doc.get("profiles")
    if not isinstance(entries, list) or not entries:
        raise ConfigError(f"{path}: expected a non-empty 'profiles' list")
    known = {f.name for f in dataclasses.fields(EncoderProfile)}
    out = {}
    for entry in entries:
        unknown = set(entry) - known
        if unknown:
            raise ConfigError(f"{path}: unknown profile keys {sorted(unknown)}")
        prof = EncoderProfile(**entry)
        out[prof.name] = prof
    return out


def get_profile(name, profiles_file=None):
    table = dict(DEFAULT_PROFILES)
    if profiles_file:
        table.update(load_profiles(profiles_file))
    try:
        return table[name]
    except KeyError:
        raise ConfigError(
            f"unknown encoder profile {name!r}; known: {', '.join(sorted(table))}"
        ) from None


# -- encode / decode ---------------------------------------------------------


def _run(argv, what, timeout):
    logger.debug("running %s", " ".join(argv))
    proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
    if proc.returncode != 0:
        tail = (proc.stderr or proc.stdout).strip()[-2000:]
        raise EncoderError(
            f"{what} exited with status {proc.returncode}: {tail}",
            proc.returncode, proc.stderr,
        )
    return proc


def _fps_token(rate):
    rate = Fraction(rate)
    return f"{rate.numerator}/{rate.denominator}"


def _encode_decode_file(input_path, source, profile, qp, workdir, bitstream_path=None,
                        timeout=3600.0):
    bitstream = bitstream_path or os.path.join(workdir, f"qp{qp}{profile.extension}")
    decoded_path = os.path.join(workdir, f"qp{qp}.decoded.y4m")
    _run(render_command(profile.command_template, input=input_path, output=bitstream,
                        qp=str(qp), preset=profile.preset),
         f"{profile.name} encoder", timeout)
    size = os.path.getsize(bitstream)
    if size <= 0:
        raise IntegrityError(f"{profile.name} produced an empty bitstream at qp {qp}")
    _run(render_command(profile.decode_template, input=bitstream, output=decoded_path,
                        fps=_fps_token(source.frame_rate)),
         f"{profile.name} decoder", timeout)
    decoded = read_y4m(decoded_path)
    if len(decoded) != len(source):
        raise IntegrityError(
            f"decoded {len(decoded)} frames at qp {qp}, source has {len(source)}"
        )
    if (decoded.width, decoded.height) != (source.width, source.height):
        raise IntegrityError(
            f"decoded size {decoded.width}x{decoded.height} != source "
            f"{source.width}x{source.height}"
        )
    if decoded.frame_rate != source.frame_rate:
        raise IntegrityError(
            f"decoded frame rate {decoded.frame_rate} != source {source.frame_rate}"
        )
    return size, decoded, decoded_path


def encode_decode(seq, profile, qp, workdir=None):
    """Encode ``seq`` at ``qp`` and decode it back.

    Returns ``(bitstream_bytes, decoded_sequence)``.
    """
    with tempfile.TemporaryDirectory(prefix="rpp-enc-", dir=workdir) as tmp:
        src = os.path.join(tmp, "input.y4m")
        write_y4m(seq, src)
        size, decoded, _ = _encode_decode_file(src, seq, profile, qp, tmp)
    return size, decoded


# -- RD points and curves ----------------------------------------------------


def bitrate_kbps(n_bytes, frame_rate, frame_count):
    return 8.0 * n_bytes * float(frame_rate) / (1000.0 * frame_count)


@dataclass(frozen=True)
class RdPoint:
    qp: int
    bitrate: float  # kbit/s
    metrics: MetricReport

    def __post_init__(self):
        if not self.bitrate > 0:
            raise CurveDataError(f"bitrate must be > 0, got {self.bitrate} at qp {self.qp}")


@dataclass(frozen=True)
class RdCurve:
    sequence: str
    codec: str
    preset: str
    label: str
    points: tuple

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(sorted(self.points, key=lambda p: p.qp)))

    @property
    def key(self):
        return (self.sequence, self.codec, self.preset)

    def rates(self):
        return np.array([p.bitrate for p in self.points])

    def qualities(self, metric):
        attr = METRIC_ATTRS.get(metric)
        if attr is None:
            raise ConfigError(f"unknown metric {metric!r}; use one of {sorted(METRIC_ATTRS)}")
        vals = [getattr(p.metrics, attr) for p in self.points]
        if any(v is None for v in vals):
            raise CurveDataError(f"curve {self.label!r} has no {metric} scores")
        return np.array(vals, dtype=np.float64)


def _frame_metrics(pair):
    ref, dist = pair
    a, b = ref.luma, dist.luma
    p = psnr(a, b)
    s = ssim(a, b) if min(a.shape) >= SSIM_WINDOW else math.nan
    m = ms_ssim(a, b) if min(a.shape) >= MS_SSIM_MIN_SIZE else math.nan
    return p, s, m


def sequence_metrics(reference, distorted, workers=1):
    """Frame-mean luma PSNR, SSIM and MS-SSIM (NaN when the frame is too small)."""
    if len(reference) != len(distorted):
        raise IntegrityError(
            f"frame counts differ: {len(reference)} vs {len(distorted)}"
        )
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        rows = list(pool.map(_frame_metrics, zip(reference.frames, distorted.frames)))
    arr = np.array(rows, dtype=np.float64)
    return MetricReport(*(float(v) for v in arr.mean(axis=0)))


def sweep(seq, profile, preprocessor=None, workers=1, vmaf=None, out_dir=None,
          qp_list=None):
    """Encode at every QP of ``profile`` and return the RD curve.

    Metrics always compare decoded frames with the unprocessed ``seq``. When
    ``out_dir`` is given the encoder input and bitstreams are kept there.
    """
    qps = tuple(qp_list or profile.qp_list)
    label = "none" if preprocessor is None else preprocessor.label
    prepared = prepare_input(seq, preprocessor, workers)
    with tempfile.TemporaryDirectory(prefix="rpp-sweep-") as tmp:
        keep = out_dir is not None
        if keep:
            os.makedirs(out_dir, exist_ok=True)
        stem = f"{seq.name}.{profile.name}.{profile.preset}.{label}"
        src = os.path.join(out_dir if keep else tmp, f"{stem}.input.y4m")
        write_y4m(prepared, src)
        ref_path = None
        if vmaf is not None:
            ref_path = os.path.join(tmp, "reference.y4m")
            write_y4m(seq, ref_path)

        def one(qp):
            qdir = os.path.join(tmp, f"qp{qp}")
            os.makedirs(qdir)
            bs = os.path.join(out_dir, f"{stem}.qp{qp}{profile.extension}") if keep else None
            size, decoded, decoded_path = _encode_decode_file(
                src, seq, profile, qp, qdir, bitstream_path=bs)
            report = sequence_metrics(seq, decoded)
            if vmaf is not None:
                report = dataclasses.replace(report, vmaf=vmaf.score(ref_path, decoded_path))
            rate = bitrate_kbps(size, seq.frame_rate, len(seq))
            logger.info("%s qp=%d %.1f kbps msssim=%.5f", stem, qp, rate, report.ms_ssim)
            return RdPoint(qp, rate, report)

        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            points = {qp: pt for qp, pt in zip(qps, pool.map(one, qps))}
    return RdCurve(seq.name, profile.name, profile.preset, label,
                   tuple(points[q] for q in sorted(points)))


def alpha_ablation(seq, profile, alphas=(0.2, 0.5, 0.8, 1.0), dct_config=None,
                   strength=1.0, metric="msssim", workers=1, out_dir=None):
    """Baseline plus one preprocessed curve per alpha, with BD-rates vs baseline."""
    base = sweep(seq, profile, None, workers, out_dir=out_dir)
    curves, results = [base], []
    for a in alphas:
        pre = Preprocessor(dct_config or DctConfig(), strength, BlendConfig(a))
        c = sweep(seq, profile, pre, workers, out_dir=out_dir)
        curves.append(c)
        results.append(bd_rate(base, c, metric))
    return curves, results


def same_qp_savings(baseline, test):
    """Percent bitrate change of ``test`` vs ``baseline`` at every shared QP."""
    b = {p.qp: p.bitrate for p in baseline.points}
    return {p.qp: (p.bitrate / b[p.qp] - 1.0) * 100.0 for p in test.points if p.qp in b}


# -- BD-rate -----------------------------------------------------------------


@dataclass(frozen=True)
class BdRateResult:
    percent: float
    metric: str
    interval: tuple
    baseline_label: str = ""
    test_label: str = ""
    sequence: str = ""
    codec: str = ""
    preset: str = ""

    def as_dict(self):
        return {
            "sequence": self.sequence, "codec": self.codec, "preset": self.preset,
            "baseline": self.baseline_label, "test": self.test_label,
            "metric": self.metric, "percent": self.percent,
            "overlap": [float(self.interval[0]), float(self.interval[1])],
        }


def pchip_slopes(x, y):
    """Shape-preserving (Fritsch-Carlson) derivatives at the knots."""
    x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    h = np.diff(x)
    delta = np.diff(y) / h
    n = x.size
    d = np.zeros(n)
    if n == 2:
        d[:] = delta[0]
        return d
    for k in range(1, n - 1):
        d0, d1 = delta[k - 1], delta[k]
        if d0 == 0 or d1 == 0 or np.sign(d0) != np.sign(d1):
            d[k] = 0.0
        else:
            w1 = 2 * h[k] + h[k - 1]
            w2 = h[k] + 2 * h[k - 1]
            d[k] = (w1 + w2) / (w1 / d0 + w2 / d1)

    def edge(h0, h1, m0, m1):
        e = ((2 * h0 + h1) * m0 - h0 * m1) / (h0 + h1)
        if np.sign(e) != np.sign(m0):
            return 0.0
        if np.sign(m0) != np.sign(m1) and abs(e) > 3 * abs(m0):
            return 3 * m0
        return e

    d[0] = edge(h[0], h[1], delta[0], delta[1])
    d[-1] = edge(h[-1], h[-2], delta[-1], delta[-2])
    return d


def pchip_integral(x, y, lo, hi):
    """Exact integral over [lo, hi] of the piecewise-cubic Hermite interpolant."""
    x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    d = pchip_slopes(x, y)
    total = 0.0
    for k in range(x.size - 1):
        a, b = max(lo, x[k]), min(hi, x[k + 1])
        if b <= a:
            continue
        h = x[k + 1] - x[k]
        delta = (y[k + 1] - y[k]) / h
        c2 = (3 * delta - 2 * d[k] - d[k + 1]) / h
        c3 = (d[k] + d[k + 1] - 2 * delta) / h**2

        def prim(t, k=k, c2=c2, c3=c3):
            return y[k] * t + d[k] * t**2 / 2 + c2 * t**3 / 3 + c3 * t**4 / 4

        total += prim(b - x[k]) - prim(a - x[k])
    return total


def _poly_integral(x, y, lo, hi):
    p = np.polyint(np.polyfit(x, y, 3))
    return np.polyval(p, hi) - np.polyval(p, lo)


def _check_curve(curve, metric):
    if len(curve.points) < 4:
        raise CurveDataError(
            f"curve {curve.label!r} has {len(curve.points)} points; BD-rate needs >= 4"
        )
    q = curve.qualities(metric)
    r = curve.rates()
    if not np.all(np.isfinite(q)):
        raise CurveDataError(f"curve {curve.label!r} has non-finite {metric} values")
    bad = []
    for p0, p1, q0, q1 in zip(curve.points, curve.points[1:], q, q[1:]):
        if not (p1.bitrate < p0.bitrate and q1 < q0):
            bad.append(
                f"qp {p0.qp}->{p1.qp}: rate {p0.bitrate:.6g}->{p1.bitrate:.6g}, "
                f"{metric} {q0:.6g}->{q1:.6g}"
            )
    if bad:
        raise CurveDataError(
            f"curve {curve.label!r} is not monotone (rate and quality must both fall "
            f"as qp rises): " + "; ".join(bad)
        )
    order = np.argsort(q)
    return q[order], np.log10(r[order])


def bd_rate(baseline, test, metric="msssim", method="pchip"):
    """Average bitrate difference of ``test`` vs ``baseline`` at equal quality.

    Negative means ``test`` needs fewer bits. ``method`` is ``"pchip"``
    (monotone piecewise cubic, exact integration) or ``"cubic"`` (the
    classic single cubic polynomial fit).
    """
    qb, lb = _check_curve(baseline, metric)
    qt, lt = _check_curve(test, metric)
    lo, hi = max(qb[0], qt[0]), min(qb[-1], qt[-1])
    if not hi > lo:
        raise OverlapError(
            f"no overlapping {metric} range: baseline [{qb[0]:.6g}, {qb[-1]:.6g}], "
            f"test [{qt[0]:.6g}, {qt[-1]:.6g}]"
        )
    if method == "pchip":
        integrate = pchip_integral
    elif method == "cubic":
        integrate = _poly_integral
    else:
        raise ConfigError(f"unknown BD-rate method {method!r}")
    diff = integrate(qt, lt, lo, hi) - integrate(qb, lb, lo, hi)
    percent = (10.0 ** (diff / (hi - lo)) - 1.0) * 100.0
    return BdRateResult(float(percent), metric, (float(lo), float(hi)),
                        baseline.label, test.label, baseline.sequence,
                        baseline.codec, baseline.preset)


# -- reports -----------------------------------------------------------------


def _fmt(v):
    if v is None:
        return ""
    return repr(float(v))


def write_report_csv(curves, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(REPORT_COLUMNS)
        for c in curves:
            for p in c.points:
                m = p.metrics
                w.writerow([c.sequence, c.codec, c.preset, c.label, p.qp,
                            _fmt(p.bitrate), _fmt(m.psnr), _fmt(m.ssim),
                            _fmt(m.ms_ssim), _fmt(m.vmaf)])


def read_report(path):
    """Parse a report CSV back into curves, in order of first appearance."""
    groups = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != REPORT_COLUMNS:
            raise CurveDataError(
                f"{path}: header {reader.fieldnames} != {list(REPORT_COLUMNS)}"
            )
        for row in reader:
            key = (row["sequence"], row["codec"], row["preset"], row["label"])
            vmaf = row["vmaf"]
            point = RdPoint(
                int(row["qp"]), float(row["bitrate_kbps"]),
                MetricReport(float(row["psnr"]), float(row["ssim"]),
                             float(row["msssim"]), float(vmaf) if vmaf else None),
            )
            groups.setdefault(key, []).append(point)
    return [RdCurve(*key, tuple(points)) for key, points in groups.items()]


def emit_report(curves, bd_results, path, summary_path=None):
    """Write the RD CSV and, when BD results exist, a YAML summary next to it."""
    curves = list(curves)
    if not curves:
        raise ContractViolation("no curves to report")
    write_report_csv(curves, path)
    bd_results = list(bd_results or ())
    if bd_results:
        if summary_path is None:
            summary_path = os.path.splitext(os.fspath(path))[0] + ".bdrate.yaml"
        with open(summary_path, "w") as fh:
            yaml.safe_dump({"bd_rates": [r.as_dict() for r in bd_results]}, fh,
                           sort_keys=False)
    return summary_path


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
            "#e377c2", "#7f7f7f")


def emit_plot(curves, path, metric="msssim", width=720, height=440):
    """Standalone SVG: log-scaled bitrate axis, one polyline per curve."""
    curves = list(curves)
    if not curves:
        raise ContractViolation("no curves to plot")
    series = [(c, np.log10(c.rates()), c.qualities(metric)) for c in curves]
    xs = np.concatenate([s[1] for s in series])
    ys = np.concatenate([s[2] for s in series])
    ys = ys[np.isfinite(ys)]
    if not ys.size:
        raise CurveDataError(f"no finite {metric} values to plot")
    x0, x1 = math.floor(xs.min() * 4) / 4, math.ceil(xs.max() * 4) / 4
    if x1 <= x0:
        x1 = x0 + 0.25
    y0, y1 = float(ys.min()), float(ys.max())
    pad = (y1 - y0) * 0.05 or 0.01
    y0, y1 = y0 - pad, y1 + pad
    left, right, top, bottom = 70, 200, 20, 50
    pw, ph = width - left - right, height - top - bottom

    def px(lx):
        return left + (lx - x0) / (x1 - x0) * pw

    def py(v):
        return top + (y1 - v) / (y1 - y0) * ph

    svg = ET.Element("svg", xmlns="http://www.w3.org/2000/svg", width=str(width),
                     height=str(height), viewBox=f"0 0 {width} {height}")
    ET.SubElement(svg, "rect", x=str(left), y=str(top), width=str(pw), height=str(ph),
                  fill="none", stroke="black")
    for e in range(math.floor(x0), math.ceil(x1) + 1):
        for mult in (1, 2, 5):
            lx = e + math.log10(mult)
            if x0 <= lx <= x1:
                X = px(lx)
                ET.SubElement(svg, "line", x1=f"{X:.2f}", x2=f"{X:.2f}", y1=str(top),
                              y2=str(top + ph), stroke="#dddddd")
                t = ET.SubElement(svg, "text", x=f"{X:.2f}", y=str(top + ph + 16),
                                  **{"text-anchor": "middle", "font-size": "11"})
                t.text = f"{mult * 10.0 ** e:g}"
    for v in np.linspace(y0, y1, 6):
        Y = py(v)
        ET.SubElement(svg, "line", x1=str(left), x2=str(left + pw), y1=f"{Y:.2f}",
                      y2=f"{Y:.2f}", stroke="#eeeeee")
        t = ET.SubElement(svg, "text", x=str(left - 6), y=f"{Y + 4:.2f}",
                          **{"text-anchor": "end", "font-size": "11"})
        t.text = f"{v:.4g}"
    xl = ET.SubElement(svg, "text", x=str(left + pw / 2), y=str(height - 10),
                       **{"text-anchor": "middle", "font-size": "12"})
    xl.text = "bitrate (kbps, log scale)"
    yl = ET.SubElement(svg, "text", x="16", y=str(top + ph / 2),
                       transform=f"rotate(-90 16 {top + ph / 2})",
                       **{"text-anchor": "middle", "font-size": "12"})
    yl.text = metric
    for i, (c, lx, q) in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(lx, q) if np.isfinite(b))
        ET.SubElement(svg, "polyline", points=pts, fill="none", stroke=color,
                      **{"stroke-width": "2"})
        ly = top + 14 + 18 * i
        ET.SubElement(svg, "line", x1=str(left + pw + 12), x2=str(left + pw + 32),
                      y1=str(ly), y2=str(ly), stroke=color, **{"stroke-width": "2"})
        t = ET.SubElement(svg, "text", x=str(left + pw + 36), y=str(ly + 4),
                          **{"font-size": "11"})
        t.text = f"{c.codec}/{c.preset} {c.label}"
    ET.ElementTree(svg).write(path, encoding="utf-8", xml_declaration=True)
