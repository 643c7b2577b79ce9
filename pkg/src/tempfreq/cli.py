"""Command-line front end: one subcommand per aggregation protocol.

Exit status is 0 on success, 1 on bad input or usage, 2 on file I/O errors.
Warnings go to standard error.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import sys
from pathlib import Path

from . import __version__
from .aggregation import spd
from .calibration import INDEPENDENCE_ASSUMPTION, LIKELIHOOD_ID, PRIOR_ID, DateRecord, calibrate_many
from .errors import CalibrationFailure, DomainError, IoError, TempfreqError
from .grid import CALBP_MAX, CALBP_MIN, TimeGrid, point_estimates
from .hoi import DEFAULT_HALF_WIDTH, SiteRecord, choid_from_posteriors
from .io_formats import Dataset, ResultEnvelope, parse_curve, parse_dates, write_result
from .kde import SHAPES, BandwidthSelector, kde_from_posterior_points
from .montecarlo import McConfig, bandwidth_dispersion, ckde
from .weighted_kde import WkdeConfig, weighted_kde

COMMANDS = ("calibrate", "spd", "kde", "ckde", "wkde", "hoi", "pointest")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _date_pair(text):
    try:
        r, s = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected R,S (e.g. 1760,25), got {text!r}") from None
    return r, s


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    io_ = common.add_argument_group("input/output")
    io_.add_argument("--curve", required=True, metavar="PATH",
                     help="calibration curve file (cal BP, 14C BP, sigma columns)")
    io_.add_argument("--dates", metavar="PATH", help="CSV with id,c14_age,c14_error[,site_id,site_area]")
    io_.add_argument("--date", action="append", type=_date_pair, default=[], metavar="R,S",
                     help="inline 14C age and error; repeatable")
    io_.add_argument("--out", default="-", metavar="PATH", help="output file (default: stdout)")
    io_.add_argument("--format", choices=("csv", "json", "svg"), help="output format (default: from --out suffix, else csv)")
    io_.add_argument("--strict", action="store_true", help="abort on the first invalid input row")
    io_.add_argument("--skip-failed", action="store_true",
                     help="drop dates that cannot be calibrated instead of aborting")
    g = common.add_argument_group("timeline")
    g.add_argument("--grid-start", type=float, help="youngest grid point, cal BP (default: curve start)")
    g.add_argument("--grid-end", type=float, help="oldest grid point, cal BP (default: curve end)")
    g.add_argument("--grid-step", type=float, default=1.0, help="grid spacing in years (default 1)")
    common.add_argument("--threads", type=_positive_int, default=1,
                        help="worker threads for Monte Carlo runs; results do not depend on it")

    def kernel_opts(p, kernel, bandwidth, bw_help):
        p.add_argument("--kernel", choices=SHAPES, default=kernel, help=f"kernel shape (default {kernel})")
        p.add_argument("--bandwidth", default=bandwidth, help=bw_help)

    def mc_opts(p):
        p.add_argument("--guesses", type=_positive_int, default=1000,
                       help="Monte Carlo guesses drawn from the joint posterior (default 1000)")
        p.add_argument("--seed", type=int, default=0, help="64-bit seed; guess g uses stream (seed, g)")

    parser = _Parser(prog="tempfreq", description="Temporal frequency distributions from radiocarbon dates.")
    parser.add_argument("--version", action="version", version=f"tempfreq {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    sub.add_parser("calibrate", parents=[common], help="calibrated posterior per date (uniform prior)")

    p = sub.add_parser("spd", parents=[common], help="summed probability distribution of the posteriors")
    p.add_argument("--scale", choices=("raw", "normalized"), default="raw",
                   help="raw: area = n; normalized: scaled by 1/n to area 1 (default raw)")

    p = sub.add_parser("kde", parents=[common], help="KDE of one point estimate per posterior")
    kernel_opts(p, "gaussian", "ucv", "ucv | silverman | fixed:H (default ucv)")
    p.add_argument("--point-estimate", choices=("mean", "median", "map"), default="mean",
                   help="posterior summary used as each kernel centre (default mean)")

    p = sub.add_parser("ckde", parents=[common], help="composite KDE averaged over Monte Carlo guesses")
    kernel_opts(p, "gaussian", "ucv", "per-guess selector: ucv | silverman | fixed:H (default ucv)")
    mc_opts(p)

    p = sub.add_parser("wkde", parents=[common], help="kernel-smoothed SPD (weighted KDE)")
    kernel_opts(p, "laplace", "iqr",
                "iqr (-IQR(spd) * n^(-1/6) / ln 0.05) | fixed:H (default iqr)")

    p = sub.add_parser("hoi", parents=[common], help="composite human occupation index (needs site_area)")
    p.add_argument("--window-half-width", type=float, default=DEFAULT_HALF_WIDTH,
                   help="occupation window half-width h in years; windows span 2h (default 50)")
    mc_opts(p)

    sub.add_parser("pointest", parents=[common], help="posterior mean, median and mode of each date")
    return parser


def _sha256(path) -> str:
    try:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


def _warn(msg):
    print(f"warning: {msg}", file=sys.stderr)


def _load_dataset(args) -> Dataset:
    records = []
    source = None
    warnings = []
    if args.dates:
        ds = parse_dates(args.dates, strict=args.strict)
        records += ds.records
        warnings += ds.parse_warnings
        source = args.dates
    for k, (r, s) in enumerate(args.date, start=1):
        records.append(DateRecord(f"date-{k}", r, s))
    if not records:
        raise DomainError("no dates given (use --dates PATH or --date R,S)")
    return Dataset(records, source, warnings)


def _grid(args, curve) -> TimeGrid:
    step = args.grid_step
    if not step > 0:
        raise DomainError("--grid-step must be > 0")
    lo, hi = curve.span
    start = args.grid_start if args.grid_start is not None else math.ceil(max(lo, CALBP_MIN) / step) * step
    end = args.grid_end if args.grid_end is not None else math.floor(min(hi, CALBP_MAX) / step) * step
    return TimeGrid.from_range(start, end, step)


def _selector(text, allow_iqr=False):
    if allow_iqr:
        if text == "iqr":
            return "iqr"
        if text.startswith("fixed:"):
            return BandwidthSelector.parse(text).h
        raise DomainError("weighted KDE bandwidth must be iqr or fixed:H")
    if text == "iqr":
        raise DomainError("iqr bandwidth rule applies to wkde only")
    return BandwidthSelector.parse(text)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        env = _execute(args)
        for w in env.warnings:
            _warn(w)
        fmt = args.format or {".json": "json", ".svg": "svg"}.get(Path(args.out).suffix.lower(), "csv")
        write_result(env, fmt, args.out)
    except IoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (TempfreqError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def _execute(args) -> ResultEnvelope:
    curve = parse_curve(args.curve)
    ds = _load_dataset(args)
    grid = _grid(args, curve)
    params = {
        "tempfreq_version": __version__,
        "curve": {"path": str(args.curve), "name": curve.name, "sha256": _sha256(args.curve)},
        "dates": {
            "path": ds.source_path,
            "sha256": _sha256(ds.source_path) if ds.source_path else None,
            "inline": [list(p) for p in args.date],
            "strict": args.strict,
            "skip_failed": args.skip_failed,
        },
        "grid": {"start_calbp": grid.start_calbp, "step": grid.step, "count": grid.count},
        "likelihood": LIKELIHOOD_ID,
        "prior": PRIOR_ID,
    }
    warnings = list(ds.parse_warnings)

    records = ds.records
    posteriors, failures = calibrate_many(ds.dates, curve, grid)
    if failures:
        if not args.skip_failed:
            raise CalibrationFailure(failures)
        warnings += [f"skipped {k}: {v}" for k, v in failures.items()]
        records = [r for r in records if (r.date.id if isinstance(r, SiteRecord) else r.id) not in failures]
    if not posteriors:
        raise DomainError("no dates could be calibrated")
    for p in posteriors:
        warnings += p.meta.get("warnings", [])
    ids = [p.meta["id"] for p in posteriors]
    cmd = args.command

    if cmd == "calibrate":
        return ResultEnvelope(cmd, params, dict(zip(ids, posteriors)), warnings=warnings)

    if cmd == "pointest":
        table = []
        for i, p in zip(ids, posteriors):
            pe = point_estimates(p)
            table.append({"id": i, "mean": pe.mean, "median": pe.median, "map": pe.map})
        return ResultEnvelope(cmd, params, table=table, warnings=warnings)

    if cmd == "spd":
        res = spd(posteriors, args.scale)
        params.update(scale=args.scale, scale_c=res.scale_c, n=res.n)
        return ResultEnvelope(cmd, params, {"spd": res.series}, warnings=warnings)

    if cmd == "kde":
        sel = _selector(args.bandwidth)
        f = kde_from_posterior_points(posteriors, args.point_estimate, args.kernel, sel, grid)
        params.update(kernel=args.kernel, selector=str(sel), point_estimate=args.point_estimate,
                      bandwidth=f.meta["bandwidth"], n=len(posteriors))
        return ResultEnvelope(cmd, params, {"kde": f}, rug=f.meta["points"], warnings=warnings)

    if cmd == "ckde":
        sel = _selector(args.bandwidth)
        cfg = McConfig(args.seed, args.guesses)
        res = ckde(posteriors, args.kernel, sel, cfg, grid, workers=args.threads)
        hs = res.per_guess_bandwidths
        params.update(kernel=args.kernel, selector=str(sel), seed=cfg.seed, guesses=cfg.guesses,
                      stream_policy=cfg.stream_policy, independence=INDEPENDENCE_ASSUMPTION, n=len(posteriors),
                      bandwidth_mean=float(hs.mean()), bandwidth_cv=bandwidth_dispersion(hs),
                      bandwidth_fallbacks=len(res.fallback_guesses))
        if res.fallback_guesses:
            warnings.append(f"{len(res.fallback_guesses)} guess(es) had a degenerate sample; bandwidth carried over")
        return ResultEnvelope(cmd, params, {"ckde": res.composite}, warnings=warnings)

    if cmd == "wkde":
        bw = _selector(args.bandwidth, allow_iqr=True)
        res = spd(posteriors, "normalized")
        f = weighted_kde(res, WkdeConfig(args.kernel, bw))
        params.update(kernel=args.kernel, bandwidth_rule=args.bandwidth, bandwidth=f.meta["bandwidth"],
                      n=res.n)
        warnings += f.meta["warnings"]
        return ResultEnvelope(cmd, params, {"wkde": f}, warnings=warnings)

    # hoi
    missing = [r.id for r in records if not isinstance(r, SiteRecord)]
    if missing:
        raise DomainError(f"site_area missing for: {', '.join(missing)}")
    cfg = McConfig(args.seed, args.guesses)
    res = choid_from_posteriors(posteriors, records, grid, cfg, args.window_half_width, workers=args.threads)
    params.update(half_width=args.window_half_width, seed=cfg.seed, guesses=cfg.guesses,
                  stream_policy=cfg.stream_policy, independence=INDEPENDENCE_ASSUMPTION,
                  site_masses=res.site_masses, n=len(records))
    warnings += res.series.meta["warnings"]
    return ResultEnvelope(cmd, params, {"choid": res.series}, warnings=warnings)


def main():
    sys.exit(run())
