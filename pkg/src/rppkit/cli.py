"""``rpp`` command line interface.

Exit codes: 0 success, 1 environment or I/O failure, 2 usage or contract
violation.
"""

import argparse
import json
import logging
import os
import sys

import numpy as np
import yaml

from . import __version__
from .dct_core import (
    DctConfig,
    Normalization,
    Reduction,
    ThresholdMode,
    adaptive_dct_filter,
    analyze,
)
from .degrade import DegradationRecipe, apply_recipe, sample_recipe
from .exceptions import EncoderError, IntegrityError, StageUnavailableError
from .media_io import read_frames, read_y4m, to_luma, write_png, write_y4m
from .metrics import DEFAULT_VMAF_TEMPLATES, VmafScorer, ms_ssim, psnr, ssim
from .rd_harness import (
    BlendConfig,
    Preprocessor,
    alpha_blend,
    bd_rate,
    emit_plot,
    emit_report,
    get_profile,
    read_report,
    sweep,
)

logger = logging.getLogger("rppkit")

EXIT_OK, EXIT_ENV, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _int_list(text):
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _unit(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"{v} outside [0, 1]")
    return v


def _add_dct_flags(p):
    g = p.add_argument_group("adaptive DCT options")
    g.add_argument("--block-sizes", type=_int_list, default=[8, 16], metavar="N[,N]",
                   help="block sizes; several sizes are averaged")
    g.add_argument("--s", type=int, default=None, metavar="S",
                   help="anti-diagonal cut h+w >= S (default: N for each size)")
    g.add_argument("--normalization", choices=[m.value for m in Normalization],
                   default=Normalization.ORTHONORMAL.value, help="DCT scaling")
    g.add_argument("--threshold-mode", choices=[m.value for m in ThresholdMode],
                   default=ThresholdMode.BLOCK_AREA.value,
                   help="threshold divisor: N*N or masked-coefficient count")
    g.add_argument("--reduction", choices=[m.value for m in Reduction],
                   default=Reduction.MEAN.value, help="combine block losses by mean or sum")


def _dct_config(args):
    return DctConfig(tuple(args.block_sizes), args.s, args.normalization,
                     args.threshold_mode, args.reduction)


def build_parser():
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(
        prog="rpp", formatter_class=fmt,
        description="Adaptive-DCT preprocessing, degradation and RD evaluation tools.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for frame and QP parallelism")
    parser.add_argument("--seed", type=int, default=0, help="random seed")
    parser.add_argument("--config", default=None, metavar="FILE",
                        help="YAML file whose values override flags")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="more output (repeatable)")
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    p = sub.add_parser("dct-loss", formatter_class=fmt,
                       help="adaptive DCT loss of an image or video",
                       description="Print the adaptive DCT loss (mean over frames for Y4M).")
    p.add_argument("input", help="PNG or Y4M file")
    p.add_argument("--luma-weights", choices=["bt709", "bt601"], default="bt709",
                   help="RGB to luma weights")
    _add_dct_flags(p)

    p = sub.add_parser("filter", formatter_class=fmt,
                       help="adaptive DCT filter followed by alpha blend",
                       description="Preprocess an image or video; output type follows input.")
    p.add_argument("input", help="PNG or Y4M file")
    p.add_argument("output", help="output path")
    p.add_argument("--strength", type=_unit, default=1.0,
                   help="attenuation of selected coefficients (1 zeroes them)")
    p.add_argument("--alpha", type=_unit, default=0.5,
                   help="blend weight of the filtered frame")
    _add_dct_flags(p)

    p = sub.add_parser("degrade", formatter_class=fmt,
                       help="seeded two-order degradation",
                       description="Degrade the luma plane and save the recipe used.")
    p.add_argument("input", help="PNG or Y4M file")
    p.add_argument("output", help="output path (gray PNG or Y4M)")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                   help="random seed (overrides the global --seed)")
    p.add_argument("--recipe-in", default=None, metavar="FILE",
                   help="replay this recipe instead of sampling one")
    p.add_argument("--recipe-out", default=None, metavar="FILE",
                   help="write the applied recipe here")
    p.add_argument("--orders", type=int, default=2, help="degradation orders to sample")

    p = sub.add_parser("metric", formatter_class=fmt, help="full-reference quality scores",
                       description="Score DIST against REF (frame mean for Y4M).")
    p.add_argument("ref", help="reference PNG or Y4M")
    p.add_argument("dist", help="distorted PNG or Y4M")
    p.add_argument("--metrics", default="psnr,ssim,msssim",
                   help="comma list from psnr,ssim,msssim,vmaf")
    p.add_argument("--all-planes", action="store_true",
                   help="average planes (6:1:1 for YUV420) instead of luma only")
    p.add_argument("--vmaf-cmd", default=DEFAULT_VMAF_TEMPLATES["vmaf"],
                   help="VMAF scorer template with {reference} {distorted} {output}")

    p = sub.add_parser("sweep", formatter_class=fmt, help="QP sweep with an external encoder",
                       description="Encode at every QP, decode, score against the source "
                                   "and write an RD CSV.")
    p.add_argument("input", help="8-bit 4:2:0 Y4M file")
    p.add_argument("--profile", default="h264", help="profile name (h264, h265, h266 or "
                   "one from --profiles-file)")
    p.add_argument("--profiles-file", default=None, metavar="FILE",
                   help="YAML file with extra encoder profiles")
    p.add_argument("--preset", default=None, help="override the profile preset")
    p.add_argument("--qp", type=_int_list, default=None, metavar="QP[,QP...]",
                   help="override the profile QP list")
    p.add_argument("--preprocess", action="store_true",
                   help="filter and blend frames before encoding")
    p.add_argument("--strength", type=_unit, default=1.0, help="filter strength")
    p.add_argument("--alpha", type=_unit, default=0.5, help="blend weight")
    p.add_argument("--vmaf-cmd", default=None,
                   help="VMAF scorer template; VMAF column omitted when unset")
    p.add_argument("--out-dir", default="rd-out", help="directory for CSV and bitstreams")
    p.add_argument("--plot", action="store_true", help="also write an SVG RD plot")
    _add_dct_flags(p)

    p = sub.add_parser("bdrate", formatter_class=fmt, help="BD-rate between two RD CSVs",
                       description="BD-rate of TEST vs BASELINE for every curve pair "
                                   "sharing sequence, codec and preset.")
    p.add_argument("baseline", help="baseline report CSV")
    p.add_argument("test", help="test report CSV")
    p.add_argument("--metric", choices=["psnr", "ssim", "msssim", "vmaf"],
                   default="msssim", help="quality axis")
    p.add_argument("--method", choices=["pchip", "cubic"], default="pchip",
                   help="interpolation of log-rate over quality")

    p = sub.add_parser("plot", formatter_class=fmt, help="SVG RD plot from report CSVs",
                       description="Draw every curve found in the given reports.")
    p.add_argument("reports", nargs="+", help="report CSV files")
    p.add_argument("--output", required=True, help="SVG path")
    p.add_argument("--metric", choices=["psnr", "ssim", "msssim", "vmaf"],
                   default="msssim", help="quality axis")
    return parser


def _apply_config(args, parser):
    if not args.config:
        return
    with open(args.config) as fh:
        doc = yaml.safe_load(fh) or {}
    if not isinstance(doc, dict):
        raise UsageError(f"{args.config}: expected a mapping")
    section = doc.pop(args.command, None) or {}
    commands = set(parser._subparsers._group_actions[0].choices)
    for cmd in commands & set(doc):
        doc.pop(cmd)
    for key, value in list(doc.items()) + list(section.items()):
        dest = key.replace("-", "_")
        if dest in ("command", "config") or not hasattr(args, dest):
            raise UsageError(f"{args.config}: unknown option {key!r} for {args.command}")
        setattr(args, dest, value)


def _emit(args, payload, text=None):
    if args.json:
        print(json.dumps(payload, sort_keys=True, allow_nan=True))
    elif text is not None:
        print(text)
    else:
        for k, v in payload.items():
            print(f"{k}: {v}")


def _gray_plane(frame, weights):
    return to_luma(frame, weights).luma


def cmd_dct_loss(args):
    cfg = _dct_config(args)
    frames, _ = read_frames(args.input)
    losses, stats = [], []
    for f in frames:
        per_n = analyze(_gray_plane(f, args.luma_weights), cfg)
        total = 0.0
        for a in per_n:
            total += a.loss
        losses.append(total / len(per_n))
        stats.append(per_n)
    loss = float(np.mean(losses))
    payload = {"loss": loss, "frames": len(frames)}
    if args.verbose:
        blocks = []
        for idx, per_n in enumerate(stats):
            for a in per_n:
                blocks.append({
                    "frame": idx, "n": a.n, "s": a.s,
                    "blocks": int(a.block_losses.size),
                    "mean_threshold": float(a.thresholds.mean()),
                    "selected": int(a.selection.sum()),
                    "loss": a.loss,
                })
        payload["per_block_size"] = blocks
    if args.json:
        _emit(args, payload)
    else:
        print(repr(loss))
        if args.verbose:
            for b in payload["per_block_size"]:
                print(" ".join(f"{k}={v}" for k, v in b.items()))
    return EXIT_OK


def cmd_filter(args):
    cfg = _dct_config(args)
    blend = BlendConfig(args.alpha)
    frames, seq = read_frames(args.input)
    out = [alpha_blend(adaptive_dct_filter(f, cfg, args.strength), f, blend) for f in frames]
    if seq is not None:
        write_y4m(seq.with_frames(out), args.output)
    else:
        write_png(out[0], args.output)
    return EXIT_OK


def cmd_degrade(args):
    if args.recipe_in:
        recipe = DegradationRecipe.load(args.recipe_in)
    else:
        recipe = sample_recipe(args.seed, n_orders=args.orders)
    frames, seq = read_frames(args.input)
    if seq is not None:
        out = []
        for f in frames:
            y, _ = apply_recipe(f.luma, recipe)
            out.append(f.replace_planes([y] + list(f.planes[1:])))
        write_y4m(seq.with_frames(out), args.output)
    else:
        degraded, _ = apply_recipe(to_luma(frames[0]), recipe)
        write_png(degraded, args.output)
    if args.recipe_out:
        recipe.save(args.recipe_out)
    logger.info("applied %d stages", len(recipe.stages))
    return EXIT_OK


def cmd_metric(args):
    wanted = [m.strip() for m in args.metrics.split(",") if m.strip()]
    unknown = [m for m in wanted if m not in ("psnr", "ssim", "msssim", "vmaf")]
    if unknown:
        raise UsageError(f"unknown metric {unknown[0]!r}")
    ref_frames, ref_seq = read_frames(args.ref)
    dist_frames, dist_seq = read_frames(args.dist)
    if len(ref_frames) != len(dist_frames):
        raise UsageError(
            f"frame counts differ: {len(ref_frames)} vs {len(dist_frames)}")
    fns = {"psnr": psnr, "ssim": ssim, "msssim": ms_ssim}
    scores = {}
    for name in wanted:
        if name == "vmaf":
            continue
        vals = [fns[name](a, b, all_planes=args.all_planes)
                for a, b in zip(ref_frames, dist_frames)]
        scores[name] = float(np.mean(vals))
    if "vmaf" in wanted:
        try:
            scorer = VmafScorer(args.vmaf_cmd)
            scorer.check_available()
        except FileNotFoundError as exc:
            print(f"rpp: warning: VMAF omitted: {exc}", file=sys.stderr)
        else:
            if ref_seq is None or dist_seq is None:
                print("rpp: warning: VMAF omitted: needs Y4M inputs", file=sys.stderr)
            else:
                scores["vmaf"] = scorer.score(args.ref, args.dist)
    _emit(args, scores)
    return EXIT_OK


def cmd_sweep(args):
    profile = get_profile(args.profile, args.profiles_file).with_overrides(
        preset=args.preset, qp_list=tuple(args.qp) if args.qp else None)
    seq = read_y4m(args.input)
    pre = None
    if args.preprocess:
        pre = Preprocessor(_dct_config(args), args.strength, BlendConfig(args.alpha))
    vmaf = VmafScorer(args.vmaf_cmd) if args.vmaf_cmd else None
    curve = sweep(seq, profile, pre, workers=args.threads, vmaf=vmaf, out_dir=args.out_dir)
    csv_path = os.path.join(args.out_dir, f"{seq.name}.{profile.name}.{curve.label}.csv")
    emit_report([curve], [], csv_path)
    if args.plot:
        emit_plot([curve], os.path.splitext(csv_path)[0] + ".svg")
    payload = {
        "csv": csv_path,
        "points": [{"qp": p.qp, "bitrate_kbps": p.bitrate, **p.metrics.as_dict()}
                   for p in curve.points],
    }
    if args.json:
        _emit(args, payload)
    else:
        print(csv_path)
        for p in curve.points:
            print(f"qp={p.qp} bitrate_kbps={p.bitrate:.3f} msssim={p.metrics.ms_ssim:.6f}")
    return EXIT_OK


def cmd_bdrate(args):
    base = {c.key: c for c in read_report(args.baseline)}
    test = read_report(args.test)
    results = []
    for c in test:
        if c.key in base:
            results.append(bd_rate(base[c.key], c, args.metric, args.method))
    if not results:
        raise UsageError("no curve pairs share sequence, codec and preset")
    if args.json:
        _emit(args, {"bd_rates": [r.as_dict() for r in results]})
    elif len(results) == 1:
        print(repr(results[0].percent))
    else:
        for r in results:
            print(f"{r.sequence} {r.codec} {r.preset} {r.test_label}: {r.percent!r}")
    return EXIT_OK


def cmd_plot(args):
    curves = [c for path in args.reports for c in read_report(path)]
    emit_plot(curves, args.output, args.metric)
    return EXIT_OK


COMMANDS = {
    "dct-loss": cmd_dct_loss,
    "filter": cmd_filter,
    "degrade": cmd_degrade,
    "metric": cmd_metric,
    "sweep": cmd_sweep,
    "bdrate": cmd_bdrate,
    "plot": cmd_plot,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        _apply_config(args, parser)
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        import cv2

        cv2.setNumThreads(args.threads)
        return COMMANDS[args.command](args)
    except (UsageError, ValueError) as exc:
        print(f"rpp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, EncoderError, IntegrityError, StageUnavailableError) as exc:
        print(f"rpp: error: {exc}", file=sys.stderr)
        return EXIT_ENV


if __name__ == "__main__":
    sys.exit(main())
