"""Command-line interface: ``rectkde <subcommand> [options]``.

Subcommands: sample, estimate, experiment, probe-bias, probe-variance,
probe-tangent.  Every option may also come from ``--config FILE`` (section
named after the subcommand); explicit flags win.  Exit status is 0 on
success, 1 on a runtime failure and 2 on a usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, Option, RunConfig, read_config_file, resolve
from .domains import make_domain
from .estimator import Dataset, Fixed, RateSchedule, build_estimator, read_points_csv, write_points_csv
from .experiments import (
    ExperimentPlan,
    RecordWriter,
    ambient_invariance_check,
    bias_probe,
    fit_rate,
    loglog_fit,
    mse_probe,
    report_json,
    tangent_blowup_probe,
    variance_law_fit,
    variance_probe,
)
from .kernels import KernelKind, get_kernel
from .spatial import DEFAULT_LEAF_SIZE, INDEX_KINDS

log = logging.getLogger("rectkde")

AUDIT_TOL = 1e-12


def _ints(text) -> tuple[int, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(int(v) for v in text)
    return tuple(int(float(v)) for v in str(text).split(",") if v.strip())


def _floats(text) -> tuple[float, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    return tuple(float(v) for v in str(text).split(",") if v.strip())


def _count(text) -> int:
    value = float(text)
    if value != int(value):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(value)


COMMON = [
    Option("--seed", "seed", _count, 0, "64-bit master seed"),
    Option("--threads", "threads", _count, 1, "worker threads"),
]

DOMAIN = [
    Option("--domain", "domain", str, None, "sparse | sphere | vmf | cross", required=True),
    Option("--D", "D", _count, None, "ambient dimension"),
    Option("--d", "d", _count, None, "intrinsic dimension"),
    Option("--kappa", "kappa", float, None, "vMF concentration"),
    Option("--mu", "mu", str, None, "vMF mean direction, comma separated"),
    Option("--angles", "angles", str, None, "cross: line angles in radians (plane)"),
    Option("--bases", "bases", str, None, "cross: ';'-separated flattened (d, D) bases"),
    Option("--weights", "weights", str, None, "cross: mixture weights"),
    Option("--radius", "radius", float, None, "cross: ball radius on each subspace"),
]

KERNEL = Option("--kernel", "kernel", str, KernelKind.TRUNCATED_GAUSSIAN.value, "truncated_gaussian | uniform | epanechnikov")
INDEX = [
    Option("--index", "index", str, "kdtree", "kdtree | brute"),
    Option("--leaf-size", "leaf_size", _count, DEFAULT_LEAF_SIZE, "kd-tree leaf bucket size"),
]
RATE = [
    Option("--c", "c", float, 1.0, "bandwidth constant in h = c n^(-1/(d+2m))"),
    Option("--m", "m", float, 2.0, "tangent approximation order"),
]

COMMANDS: dict[str, list[Option]] = {
    "sample": COMMON
    + DOMAIN
    + [
        Option("--n", "n", _count, None, "number of points", required=True),
        Option("--out", "out", str, None, "output CSV path", required=True),
    ],
    "estimate": COMMON
    + [
        Option("--train", "train", str, None, "training CSV", required=True),
        Option("--query", "query", str, None, "query CSV", required=True),
        KERNEL,
        Option("--d", "d", _count, None, "intrinsic dimension", required=True),
        Option("--h", "h", float, None, "fixed bandwidth (default: rate schedule)"),
        *RATE,
        *INDEX,
        Option("--ambient", "ambient", bool, False, "use ambient-dimension normalization", is_flag=True),
        Option("--out", "out", str, None, "output CSV path (default stdout)"),
    ],
    "experiment": COMMON
    + DOMAIN
    + [
        KERNEL,
        *RATE,
        Option("--fixed-h", "fixed_h", float, None, "use this bandwidth for every n"),
        Option("--n-grid", "n_grid", _ints, None, "comma separated sample sizes", required=True),
        Option("--reps", "reps", _count, 10, "repetitions per n"),
        Option("--test-size", "test_size", _count, 200, "test points"),
        *INDEX,
        Option("--D-grid", "D_grid", _ints, None, "ambient dimensions for the invariance check"),
        Option("--n-star", "n_star", _count, None, "n used by the invariance check"),
        Option("--timing", "timing", bool, False, "write wall-clock seconds to the CSV", is_flag=True),
        Option("--out", "out", str, None, "output directory", required=True),
    ],
    "probe-bias": COMMON
    + DOMAIN
    + [
        KERNEL,
        Option("--x", "x", _floats, None, "evaluation point, comma separated", required=True),
        Option("--h-grid", "h_grid", _floats, None, "decreasing bandwidths", required=True),
        Option("--n-mc", "n_mc", _count, 1_000_000, "Monte Carlo draws per bandwidth"),
        Option("--batches", "batches", _count, 10, "independent batches for the standard error"),
        Option("--allow-singular", "allow_singular", bool, False, "permit points where strata meet", is_flag=True),
        Option("--out", "out", str, None, "output CSV path (default stdout)"),
    ],
    "probe-variance": COMMON
    + DOMAIN
    + [
        KERNEL,
        Option("--x", "x", _floats, None, "evaluation point, comma separated", required=True),
        Option("--n-grid", "n_grid", _ints, None, "comma separated sample sizes", required=True),
        Option("--h-grid", "h_grid", _floats, None, "fixed bandwidths (default: rate schedule)"),
        *RATE,
        Option("--reps", "reps", _count, 50, "training sets per cell"),
        *INDEX,
        Option("--out", "out", str, None, "output CSV path (default stdout)"),
    ],
    "probe-tangent": COMMON
    + DOMAIN
    + [
        Option("--x", "x", _floats, None, "base point, comma separated", required=True),
        Option("--f", "f", str, "truncated_gaussian", "test function: truncated_gaussian | epanechnikov | bump | zero"),
        Option("--h-grid", "h_grid", _floats, None, "bandwidths", required=True),
        Option("--n-mc", "n_mc", _count, 1_000_000, "Monte Carlo draws per bandwidth"),
        Option("--batches", "batches", _count, 10, "independent batches for the standard error"),
        Option("--out", "out", str, None, "output CSV path (default stdout)"),
    ],
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rectkde", description="Intrinsic-dimension kernel density estimation")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    parser.subcommands = {}
    for name, options in COMMANDS.items():
        p = sub.add_parser(name, help=f"{name} subcommand")
        parser.subcommands[name] = p
        p.add_argument("--config", help="INI file; section [%s] or [DEFAULT]" % name)
        p.add_argument("-v", "--verbose", action="store_true", help="log one line per cell")
        for opt in options:
            if opt.is_flag:
                p.add_argument(opt.flag, dest=opt.dest, action="store_const", const=True, default=None, help=opt.help)
            else:
                p.add_argument(opt.flag, dest=opt.dest, type=opt.type, default=None, help=opt.help)
    return parser


def _domain(cfg: RunConfig):
    keys = ("D", "d", "kappa", "mu", "angles", "bases", "weights", "radius")
    params = {k: cfg.get(k) for k in keys if cfg.get(k) is not None}
    try:
        return make_domain(cfg["domain"], **params)
    except KeyError as exc:
        raise ConfigError(f"domain {cfg['domain']!r} needs --{exc.args[0]}") from None


def _echo(cfg: RunConfig, path: Path) -> None:
    path.write_text(cfg.to_ini())


def _open_out(path):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _check_index(cfg):
    if cfg["index"] not in INDEX_KINDS:
        raise ConfigError(f"unknown index kind {cfg['index']!r}; expected one of {INDEX_KINDS}")


# --------------------------------------------------------------------------- #


def cmd_sample(cfg: RunConfig):
    dom = _domain(cfg)
    if cfg["n"] < 1:
        raise ConfigError("--n must be positive")

    def run():
        data = dom.sample(cfg["n"], cfg["seed"])
        out = Path(cfg["out"])
        write_points_csv(out, data.points)
        _echo(cfg, out.with_name(out.name + ".config.ini"))
        ok = dom.on_support(data.points, tol=AUDIT_TOL)
        print(f"support audit: {int(ok.sum())}/{data.n} rows on {dom.domain_id} (tol {AUDIT_TOL:g})")
        return 0 if ok.all() else 1

    return run


def cmd_estimate(cfg: RunConfig):
    _check_index(cfg)
    try:
        train = Dataset(read_points_csv(cfg["train"]))
        query = read_points_csv(cfg["query"])
    except OSError as exc:
        raise ConfigError(str(exc)) from None
    if query.shape[1] != train.D:
        raise ConfigError(f"query has {query.shape[1]} columns, training data has {train.D}")
    kernel = get_kernel(cfg["kernel"], cfg["d"])
    rule = Fixed(cfg["h"]) if cfg.get("h") is not None else RateSchedule(cfg["c"], cfg["d"], cfg["m"])

    def run():
        est = build_estimator(train, kernel, rule, index_kind=cfg["index"], leaf_size=cfg["leaf_size"])
        values = est.density_batch(query, threads=cfg["threads"], ambient=bool(cfg["ambient"]))
        fh, close = _open_out(cfg.get("out"))
        try:
            for v in values:
                fh.write(repr(float(v)) + "\n")
        finally:
            if close:
                fh.close()
        if cfg.get("out"):
            out = Path(cfg["out"])
            _echo(cfg, out.with_name(out.name + ".config.ini"))
        return 0

    return run


def cmd_experiment(cfg: RunConfig):
    _check_index(cfg)
    d_grid = cfg.get("D_grid")
    if d_grid:
        if len(d_grid) < 2:
            raise ConfigError("--D-grid needs at least two ambient dimensions")
        domains = [_domain(RunConfig(cfg.command, {**cfg.values, "D": D})) for D in d_grid]
    else:
        domains = [_domain(cfg)]
    base = domains[0]
    get_kernel(cfg["kernel"], base.d)
    plans = [
        ExperimentPlan(
            domain=dom,
            n_grid=cfg["n_grid"],
            kernel=cfg["kernel"],
            c=cfg["c"],
            m=cfg["m"],
            repetitions=cfg["reps"],
            test_size=cfg["test_size"],
            seed=cfg["seed"],
            index_kind=cfg["index"],
            leaf_size=cfg["leaf_size"],
            fixed_h=cfg.get("fixed_h"),
        )
        for dom in domains
    ]
    n_star = cfg.get("n_star") or max(cfg["n_grid"])
    if d_grid and n_star not in cfg["n_grid"]:
        raise ConfigError(f"--n-star {n_star} is not in the n-grid")

    def run():
        out = Path(cfg["out"])
        out.mkdir(parents=True, exist_ok=True)
        _echo(cfg, out / "config.ini")
        by_D = {}
        with open(out / "records.csv", "w", newline="") as fh:
            writer = RecordWriter(fh, timing=bool(cfg["timing"]))
            for plan in plans:
                by_D[plan.domain.D] = mse_probe(plan, threads=cfg["threads"], on_group=writer.write)
        fits = {}
        if len(cfg["n_grid"]) >= 4:
            fits = {D: fit_rate(recs, recs[0].d, cfg["m"]) for D, recs in by_D.items()}
        inv = ambient_invariance_check(by_D, n_star, m=cfg["m"]) if len(by_D) > 1 else None
        text = []
        for D, fit in fits.items():
            if len(fits) > 1:
                text.append(f"[D={D}]")
            text.append(fit.to_text().rstrip("\n"))
        if not fits:
            text.append("# fewer than 4 n values: no rate fit")
        if inv is not None:
            text.append("[invariance]")
            text.append(inv.to_text().rstrip("\n"))
        (out / "report.txt").write_text("\n".join(text) + "\n")
        (out / "report.json").write_text(report_json(fits, inv))
        sys.stdout.write((out / "report.txt").read_text())
        return 0

    return run


def _write_rows(path, header, rows):
    fh, close = _open_out(path)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    finally:
        if close:
            fh.close()


def _base_point(cfg: RunConfig, dom, regular: bool = False) -> np.ndarray:
    x = np.asarray(cfg["x"], dtype=np.float64)
    dom.strata(x)  # dimension and support checks
    if regular:
        dom.tangent_frame(x)
    return x


def cmd_probe_bias(cfg: RunConfig):
    dom = _domain(cfg)
    get_kernel(cfg["kernel"], dom.d)
    x = _base_point(cfg, dom, regular=not cfg["allow_singular"])

    def run():
        pts = bias_probe(
            dom,
            cfg["kernel"],
            x,
            cfg["h_grid"],
            n_mc=cfg["n_mc"],
            seed=cfg["seed"],
            batches=cfg["batches"],
            allow_singular=bool(cfg["allow_singular"]),
        )
        _write_rows(cfg.get("out"), ["h", "bias", "abs_bias", "se", "density"],
                    [(p.h, p.bias, p.abs_bias, p.se, p.density) for p in pts])
        if len(pts) >= 2 and all(p.abs_bias > 0 for p in pts):
            slope, _, se = loglog_fit([p.h for p in pts], [p.abs_bias for p in pts])
            print(f"bias_slope = {slope!r}\nbias_slope_se = {se!r}", file=sys.stderr)
        return 0

    return run


def cmd_probe_variance(cfg: RunConfig):
    _check_index(cfg)
    dom = _domain(cfg)
    get_kernel(cfg["kernel"], dom.d)
    if cfg["reps"] < 30:
        raise ConfigError("R too small: --reps must be at least 30")
    rules = [Fixed(h) for h in cfg["h_grid"]] if cfg.get("h_grid") else [RateSchedule(cfg["c"], dom.d, cfg["m"])]
    x = _base_point(cfg, dom)

    def run():
        recs = []
        for rule in rules:
            recs += variance_probe(
                dom, cfg["kernel"], x, cfg["n_grid"], rule,
                R=cfg["reps"], seed=cfg["seed"], index_kind=cfg["index"], threads=cfg["threads"],
            )
        _write_rows(cfg.get("out"), ["n", "h", "variance", "variance_se", "predicted", "ratio"],
                    [(r.n, r.h, r.variance, r.variance_se, r.predicted, r.ratio) for r in recs])
        if len({r.n * r.h**dom.d for r in recs}) >= 2:
            slope, _, se = variance_law_fit(recs, dom.d)
            print(f"variance_slope = {slope!r}\nvariance_slope_se = {se!r}", file=sys.stderr)
        return 0

    return run


def cmd_probe_tangent(cfg: RunConfig):
    dom = _domain(cfg)
    x = _base_point(cfg, dom)

    def run():
        pts = tangent_blowup_probe(
            dom, x, cfg["f"], cfg["h_grid"],
            n_mc=cfg["n_mc"], seed=cfg["seed"], batches=cfg["batches"],
        )
        _write_rows(cfg.get("out"), ["h", "lhs", "lhs_se", "rhs"], [(p.h, p.lhs, p.lhs_se, p.rhs) for p in pts])
        return 0

    return run


HANDLERS = {
    "sample": cmd_sample,
    "estimate": cmd_estimate,
    "experiment": cmd_experiment,
    "probe-bias": cmd_probe_bias,
    "probe-variance": cmd_probe_variance,
    "probe-tangent": cmd_probe_tangent,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    options = COMMANDS[args.command]
    flags = {opt.dest: getattr(args, opt.dest) for opt in options}
    try:
        file = read_config_file(args.config) if args.config else None
        cfg = resolve(args.command, options, flags, file)
        run = HANDLERS[args.command](cfg)
    except (ConfigError, ValueError) as exc:
        parser.subcommands[args.command].print_usage(sys.stderr)
        print(f"rectkde {args.command}: error: {exc}", file=sys.stderr)
        return 2
    try:
        return run()
    except Exception as exc:  # runtime failure after a valid configuration
        log.error("%s failed: %s", args.command, exc)
        print(f"rectkde {args.command}: runtime error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
