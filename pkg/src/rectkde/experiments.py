"""Monte Carlo probes of estimator error and convergence-rate fitting.

All randomness derives from one integer seed through named substreams
(:func:`substream`), e.g. ``"train:<n>:<rep>"`` for a training set and
``"test"`` for the shared test set, so adding repetitions or grid points
never changes the draws of existing cells.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import time
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .domains import DomainModel
from .estimator import Fixed, RateSchedule, bandwidth, build_estimator
from .kernels import NormalizedKernel, get_kernel, normalize, radial_integral
from .spatial import DEFAULT_LEAF_SIZE

__all__ = [
    "substream",
    "ExperimentPlan",
    "ExperimentRecord",
    "RateFit",
    "InvarianceReport",
    "BiasPoint",
    "VarianceRecord",
    "BlowupPoint",
    "mse_probe",
    "decomposition_gaps",
    "fit_rate",
    "loglog_fit",
    "ambient_invariance_check",
    "bias_probe",
    "bias_from_replicates",
    "variance_probe",
    "variance_law_fit",
    "tangent_blowup_probe",
    "TEST_FUNCTIONS",
    "RECORD_COLUMNS",
    "RecordWriter",
    "records_to_csv",
    "read_records_csv",
]

log = logging.getLogger(__name__)

RECORD_COLUMNS = ("domain", "D", "d", "n", "rep", "h", "mse", "bias2", "var", "seconds")
MIN_BIAS_MC = 100_000
MIN_VARIANCE_REPS = 30


def substream(seed: int, name: str) -> np.random.Generator:
    """Generator for the named substream of ``seed``; independent of creation order."""
    if int(seed) != seed or seed < 0:
        raise ValueError(f"seed must be a non-negative integer, got {seed!r}")
    words = np.frombuffer(hashlib.sha256(name.encode()).digest(), dtype="<u4").tolist()
    return np.random.default_rng(np.random.SeedSequence([int(seed), *words]))


def _as_kernel(kernel, d: int) -> NormalizedKernel:
    if isinstance(kernel, NormalizedKernel):
        if kernel.d != d:
            return normalize(kernel.profile, d)
        return kernel
    return get_kernel(str(kernel), d)


# --------------------------------------------------------------------------- #
# MSE experiments


@dataclass(frozen=True, eq=False)
class ExperimentPlan:
    """Grid of training sizes and repetitions on one domain.

    The bandwidth is ``c * n^(-1/(d + 2m))`` unless ``fixed_h`` is given.
    ``test_points`` overrides the ``test_size`` points otherwise drawn from
    the domain's ``"test"`` substream.
    """

    domain: DomainModel
    n_grid: tuple[int, ...]
    kernel: str = "truncated_gaussian"
    c: float = 1.0
    m: float = 2.0
    repetitions: int = 10
    test_size: int = 200
    seed: int = 0
    index_kind: str = "kdtree"
    leaf_size: int = DEFAULT_LEAF_SIZE
    fixed_h: float | None = None
    test_points: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        grid = tuple(int(n) for n in self.n_grid)
        if not grid:
            raise ValueError("n-grid is empty")
        if any(n < 1 for n in grid):
            raise ValueError("n-grid entries must be positive")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError(f"n-grid must be strictly increasing, got {grid}")
        object.__setattr__(self, "n_grid", grid)
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.test_points is None and self.test_size < 1:
            raise ValueError("test size must be >= 1")
        if self.test_points is not None:
            tp = np.atleast_2d(np.asarray(self.test_points, dtype=np.float64))
            if tp.shape[1] != self.domain.D:
                raise ValueError(f"test points must have {self.domain.D} columns")
            object.__setattr__(self, "test_points", tp)
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        self.rule  # validates c, m, fixed_h

    @property
    def rule(self) -> Fixed | RateSchedule:
        if self.fixed_h is not None:
            return Fixed(self.fixed_h)
        return RateSchedule(c=self.c, d=self.domain.d, m=self.m)

    def draw_test_points(self) -> np.ndarray:
        if self.test_points is not None:
            return self.test_points
        return self.domain.sample(self.test_size, substream(self.seed, "test")).points


@dataclass(eq=False)
class ExperimentRecord:
    """One (n, repetition) cell.

    ``mse`` is the test-set average squared error of this repetition.
    ``bias2`` and ``var`` decompose the error across the repetitions at the
    same ``n`` (test-set averages of squared mean deviation and of the
    population variance), so they are shared by all records with that ``n``.
    """

    domain: str
    D: int
    d: int
    n: int
    rep: int
    h: float
    mse: float
    bias2: float = math.nan
    var: float = math.nan
    seconds: float = math.nan
    estimates: np.ndarray | None = field(default=None, repr=False)
    point_sq_errors: np.ndarray | None = field(default=None, repr=False)
    note: str = ""


def _run_cell(plan: ExperimentPlan, kernel, n, rep, test, truth):
    t0 = time.perf_counter()
    train = plan.domain.sample(n, substream(plan.seed, f"train:{n}:{rep}"))
    est = build_estimator(train, kernel, plan.rule, index_kind=plan.index_kind, leaf_size=plan.leaf_size)
    values = est.density_batch(test)
    seconds = time.perf_counter() - t0
    return est.h, values, seconds


def mse_probe(
    plan: ExperimentPlan,
    threads: int = 1,
    on_group: Callable[[list[ExperimentRecord]], None] | None = None,
) -> list[ExperimentRecord]:
    """Empirical MSE, squared bias and variance for every cell of ``plan``.

    Cells run on ``threads`` workers; the output is ordered by ``n`` then
    repetition and is identical for any worker count.  ``on_group`` is called
    with the records of each ``n`` as soon as they are complete.
    """
    dom = plan.domain
    kernel = _as_kernel(plan.kernel, dom.d)
    test = plan.draw_test_points()
    truth = dom.exact_density_batch(test)
    records: list[ExperimentRecord] = []
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for n in plan.n_grid:
            jobs = [(n, rep) for rep in range(plan.repetitions)]
            if pool is None:
                results = [_run_cell(plan, kernel, n, rep, test, truth) for n, rep in jobs]
            else:
                results = list(pool.map(lambda job: _run_cell(plan, kernel, *job, test, truth), jobs))
            group = _summarize_group(plan, n, results, truth)
            for rec in group:
                log.info(
                    "cell domain=%s n=%d rep=%d h=%.6g mse=%.6g (%.3fs)",
                    rec.domain, rec.n, rec.rep, rec.h, rec.mse, rec.seconds,
                )
            records.extend(group)
            if on_group is not None:
                on_group(group)
    finally:
        if pool is not None:
            pool.shutdown()
    return records


def _summarize_group(plan, n, results, truth) -> list[ExperimentRecord]:
    dom = plan.domain
    est = np.array([values for _, values, _ in results])  # (R, T)
    ok = bool(np.all(np.isfinite(est)))
    if ok:
        mean_est = est.mean(axis=0)
        bias2 = float(np.mean((mean_est - truth) ** 2))
        var = float(np.mean(est.var(axis=0)))
    else:
        bias2 = var = math.nan
        log.warning("non-finite estimates at n=%d on %s; cell aborted", n, dom.domain_id)
    group = []
    for rep, (h, values, seconds) in enumerate(results):
        sq = (values - truth) ** 2
        finite = bool(np.all(np.isfinite(sq)))
        group.append(
            ExperimentRecord(
                domain=dom.domain_id,
                D=dom.D,
                d=dom.d,
                n=n,
                rep=rep,
                h=h,
                mse=float(np.mean(sq)) if finite else math.nan,
                bias2=bias2,
                var=var,
                seconds=seconds,
                estimates=values,
                point_sq_errors=sq,
                note="" if finite else "non-finite estimate",
            )
        )
    return group


def _group_by_n(records: Iterable[ExperimentRecord]) -> dict[int, list[ExperimentRecord]]:
    groups: dict[int, list[ExperimentRecord]] = defaultdict(list)
    for rec in records:
        groups[rec.n].append(rec)
    return dict(sorted(groups.items()))


def decomposition_gaps(records: Sequence[ExperimentRecord]) -> list[dict]:
    """Per ``n``: mean MSE over repetitions minus ``bias2 + var``, with the MC standard error of the mean MSE."""
    out = []
    for n, group in _group_by_n(records).items():
        mse = np.array([r.mse for r in group])
        se = float(mse.std(ddof=1) / math.sqrt(len(mse))) if len(mse) > 1 else math.nan
        out.append(
            {
                "n": n,
                "reps": len(group),
                "mse": float(mse.mean()),
                "bias2": group[0].bias2,
                "var": group[0].var,
                "gap": float(mse.mean() - group[0].bias2 - group[0].var),
                "se": se,
            }
        )
    return out


# --------------------------------------------------------------------------- #
# Rate fitting


def loglog_fit(x, y) -> tuple[float, float, float]:
    """Least squares of ``log y`` on ``log x``: returns ``(slope, intercept, slope standard error)``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("need matching arrays with at least two points")
    if np.any(x <= 0) or np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise ValueError("log-log fit needs positive finite values")
    lx, ly = np.log(x), np.log(y)
    mx, my = lx.mean(), ly.mean()
    sxx = float(np.sum((lx - mx) ** 2))
    if sxx == 0:
        raise ValueError("x values must not all coincide")
    slope = float(np.sum((lx - mx) * (ly - my)) / sxx)
    intercept = float(my - slope * mx)
    dof = x.size - 2
    if dof > 0:
        resid = ly - (intercept + slope * lx)
        se = math.sqrt(float(resid @ resid) / dof / sxx)
    else:
        se = math.nan
    return slope, intercept, se


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    slope_se: float
    slope_theory: float
    n_points: int

    def as_dict(self) -> dict:
        return {
            "slope": self.slope,
            "slope_se": self.slope_se,
            "slope_theory": self.slope_theory,
            "intercept": self.intercept,
            "n_points": self.n_points,
        }

    def to_text(self) -> str:
        return "".join(f"{k} = {v!r}\n" for k, v in self.as_dict().items())


def fit_rate(records: Sequence[ExperimentRecord], d: int, m: float = 2.0) -> RateFit:
    """Fit ``log(mean MSE)`` against ``log n``; the theoretical slope is ``-2m / (d + 2m)``."""
    groups = _group_by_n(records)
    if len(groups) < 4:
        raise ValueError(f"rate fit needs at least 4 distinct n values, got {len(groups)}")
    ns = np.array(list(groups), dtype=np.float64)
    mse = np.array([np.mean([r.mse for r in g]) for g in groups.values()])
    if not np.all(np.isfinite(mse)) or np.any(mse <= 0):
        raise ValueError("rate fit needs positive finite MSE values")
    slope, intercept, se = loglog_fit(ns, mse)
    return RateFit(slope, intercept, se, -2.0 * m / (d + 2.0 * m), len(groups))


@dataclass(frozen=True)
class InvarianceReport:
    n_star: int
    mean_mse: dict
    ci95: dict
    ratio: float
    lower: float
    upper: float
    slopes: dict

    @property
    def violation(self) -> bool:
        return not (self.lower <= self.ratio <= self.upper)

    @property
    def slope_spread(self) -> float:
        vals = [s for s in self.slopes.values() if s is not None]
        return max(vals) - min(vals) if len(vals) > 1 else math.nan

    def as_dict(self) -> dict:
        return {
            "n_star": self.n_star,
            "mean_mse": {str(k): v for k, v in self.mean_mse.items()},
            "ci95": {str(k): list(v) for k, v in self.ci95.items()},
            "ratio": self.ratio,
            "violation": self.violation,
            "slopes": {str(k): v for k, v in self.slopes.items()},
            "slope_spread": self.slope_spread,
        }

    def to_text(self) -> str:
        lines = [f"n_star = {self.n_star}"]
        for D in self.mean_mse:
            lo, hi = self.ci95[D]
            lines.append(f"mean_mse[D={D}] = {self.mean_mse[D]!r}")
            lines.append(f"ci95[D={D}] = {lo!r},{hi!r}")
            if self.slopes.get(D) is not None:
                lines.append(f"slope[D={D}] = {self.slopes[D]!r}")
        lines.append(f"ratio = {self.ratio!r}")
        lines.append(f"slope_spread = {self.slope_spread!r}")
        lines.append(f"violation = {self.violation}")
        return "\n".join(lines) + "\n"


def ambient_invariance_check(
    records_by_D: Mapping[int, Sequence[ExperimentRecord]],
    n_star: int,
    m: float = 2.0,
    bounds: tuple[float, float] = (0.5, 2.0),
) -> InvarianceReport:
    """Compare mean MSE at ``n_star`` across ambient dimensions.

    ``ratio`` is the largest mean MSE divided by the smallest, so every
    pairwise ratio lies in ``bounds`` exactly when ``ratio <= bounds[1]``
    (for the symmetric default).  Confidence intervals are normal
    approximations over repetitions.  Slopes are included for each ``D``
    whose records span at least four ``n`` values.
    """
    if len(records_by_D) < 2:
        raise ValueError("need ≥ 2 ambient dimensions")
    mean_mse, ci, slopes = {}, {}, {}
    for D, recs in sorted(records_by_D.items()):
        at = [r.mse for r in recs if r.n == n_star]
        if not at:
            raise ValueError(f"mismatched grids: no records at n={n_star} for D={D}")
        arr = np.asarray(at, dtype=np.float64)
        mu = float(arr.mean())
        half = 1.96 * float(arr.std(ddof=1)) / math.sqrt(arr.size) if arr.size > 1 else math.nan
        mean_mse[D] = mu
        ci[D] = (mu - half, mu + half)
        d = recs[0].d
        try:
            slopes[D] = fit_rate(recs, d, m).slope
        except ValueError:
            slopes[D] = None
    vals = list(mean_mse.values())
    ratio = max(vals) / min(vals) if min(vals) > 0 else math.inf
    return InvarianceReport(n_star, mean_mse, ci, ratio, bounds[0], bounds[1], slopes)


# --------------------------------------------------------------------------- #
# Bias, variance and blow-up probes


def _bump(r):
    r = np.asarray(r, dtype=np.float64)
    out = np.zeros_like(r)
    inside = r < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
    return out


def _test_function(name: str, d: int) -> Callable[[np.ndarray], np.ndarray]:
    if name == "zero":
        return lambda r: np.zeros_like(np.asarray(r, dtype=np.float64))
    if name == "bump":
        return _bump
    if name in ("truncated_gaussian", "epanechnikov", "uniform"):
        k = get_kernel(name, d)
        return lambda r: k.c_d * k.profile.raw(r)
    raise ValueError(f"unknown test function {name!r}; expected one of {TEST_FUNCTIONS}")


TEST_FUNCTIONS = ("truncated_gaussian", "epanechnikov", "bump", "zero")


def _local_means(domain, x, radius, n_mc, batches, rng, integrand):
    """Batch means of ``weights * integrand(|X - x| / radius)`` over localized draws."""
    sizes = [n_mc // batches + (1 if b < n_mc % batches else 0) for b in range(batches)]
    means = []
    for size in sizes:
        pts, w = domain.local_sample(x, radius, size, rng)
        diff = pts - x
        r = np.sqrt(np.sum(diff * diff, axis=1)) / radius
        means.append(float(np.mean(w * integrand(r))))
    means = np.asarray(means)
    return float(means.mean()), float(means.std(ddof=1) / math.sqrt(batches))


@dataclass(frozen=True)
class BiasPoint:
    h: float
    bias: float
    abs_bias: float
    se: float
    density: float


def bias_probe(
    domain: DomainModel,
    kernel,
    x,
    h_grid: Sequence[float],
    n_mc: int = 1_000_000,
    seed: int = 0,
    batches: int = 10,
    allow_singular: bool = False,
) -> list[BiasPoint]:
    """Monte Carlo bias ``E[h^-d K(|X - x| / h)] - p(x)`` of a single kernel term.

    This is the exact bias of the estimator at any ``n``, free of estimator
    variance.  Draws come from ``domain.local_sample`` (stratified on the
    sphere) in ``batches`` independent batches; the reported standard error is
    the spread of the batch means.
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    hs = [float(h) for h in h_grid]
    if not hs or any(h <= 0 for h in hs):
        raise ValueError("h-grid must contain positive bandwidths")
    if any(b >= a for a, b in zip(hs, hs[1:])):
        raise ValueError("h-grid must be strictly decreasing")
    if n_mc < MIN_BIAS_MC:
        raise ValueError(f"n_mc must be at least {MIN_BIAS_MC}, got {n_mc}")
    if batches < 2:
        raise ValueError("need at least two batches for a standard error")
    if not allow_singular:
        domain.tangent_frame(x)
    p = domain.exact_density(x)
    k = _as_kernel(kernel, domain.d)
    out = []
    for i, h in enumerate(hs):
        rng = substream(seed, f"mc:bias:{i}")
        scale = h**-domain.d
        mean, se = _local_means(domain, x, h, n_mc, batches, rng, lambda r: scale * k.c_d * k.profile.raw(r))
        out.append(BiasPoint(h, mean - p, abs(mean - p), se, p))
    return out


def bias_from_replicates(domain, kernel, x, h: float, n: int, R: int, seed: int = 0, index_kind="kdtree"):
    """Bias estimated by averaging ``p_hat(x)`` over ``R`` training sets; returns ``(bias, se)``."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    k = _as_kernel(kernel, domain.d)
    vals = np.empty(R)
    for rep in range(R):
        train = domain.sample(n, substream(seed, f"train:{n}:{rep}"))
        vals[rep] = build_estimator(train, k, Fixed(h), index_kind=index_kind).density_at(x)
    p = domain.exact_density(x)
    return float(vals.mean() - p), float(vals.std(ddof=1) / math.sqrt(R))


@dataclass(frozen=True)
class VarianceRecord:
    n: int
    h: float
    variance: float
    variance_se: float
    predicted: float

    @property
    def ratio(self) -> float:
        return self.variance / self.predicted


def variance_probe(
    domain: DomainModel,
    kernel,
    x,
    n_grid: Sequence[int],
    rule: Fixed | RateSchedule,
    R: int = 50,
    seed: int = 0,
    index_kind: str = "kdtree",
    threads: int = 1,
) -> list[VarianceRecord]:
    """Sample variance of ``p_hat(x)`` over ``R`` independent training sets per ``n``.

    Each record carries the leading-order prediction ``p(x) s_d / (n h^d)``,
    with ``s_d`` the squared integral of the kernel.
    """
    if R < MIN_VARIANCE_REPS:
        raise ValueError(f"R too small: need at least {MIN_VARIANCE_REPS} repetitions, got {R}")
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    k = _as_kernel(kernel, domain.d)
    p = domain.exact_density(x)

    def one(job):
        n, rep = job
        train = domain.sample(n, substream(seed, f"train:{n}:{rep}"))
        return build_estimator(train, k, rule, index_kind=index_kind).density_at(x)

    out = []
    with ThreadPoolExecutor(max_workers=max(threads, 1)) as pool:
        for n in n_grid:
            vals = np.array(list(pool.map(one, [(int(n), rep) for rep in range(R)])))
            h = bandwidth(rule, int(n))
            var = float(vals.var(ddof=1))
            # standard error of the sample variance from the fourth central moment
            m4 = float(np.mean((vals - vals.mean()) ** 4))
            se = math.sqrt(max(m4 - var**2 * (R - 3) / (R - 1), 0.0) / R)
            out.append(VarianceRecord(int(n), h, var, se, p * k.s_d / (n * h**domain.d)))
    return out


def variance_law_fit(records: Sequence[VarianceRecord], d: int) -> tuple[float, float, float]:
    """Slope of ``log variance`` against ``log(n h^d)``; the leading-order law predicts ``-1``."""
    nh = np.array([r.n * r.h**d for r in records])
    var = np.array([r.variance for r in records])
    return loglog_fit(nh, var)


@dataclass(frozen=True)
class BlowupPoint:
    h: float
    lhs: float
    lhs_se: float
    rhs: float


def tangent_blowup_probe(
    domain: DomainModel,
    x,
    f: str,
    h_grid: Sequence[float],
    n_mc: int = 1_000_000,
    seed: int = 0,
    batches: int = 10,
) -> list[BlowupPoint]:
    """Compare the blown-up integral of ``f`` around ``x`` with its tangent-plane limit.

    ``f`` names a radial test function supported in the unit ball.  The
    left side is ``E[f((X - x)/h)] / h^d``; the right side is ``p(x)`` times
    the integral of ``f`` over the tangent plane.  At a point where several
    strata meet, the right side sums the contribution of each stratum.
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    hs = [float(h) for h in h_grid]
    if not hs or any(h <= 0 for h in hs):
        raise ValueError("h-grid must contain positive bandwidths")
    pieces = domain.strata(x)
    fn = _test_function(f, domain.d)
    if len(pieces) == 1:
        frame = domain.tangent_frame(x)
        rhs = pieces[0].density * radial_integral(lambda r: float(fn(np.float64(r))), frame.basis.shape[0])
    else:
        rhs = sum(s.density * radial_integral(lambda r: float(fn(np.float64(r))), s.basis.shape[0]) for s in pieces)
    out = []
    for i, h in enumerate(hs):
        rng = substream(seed, f"mc:blowup:{i}")
        scale = h**-domain.d
        lhs, se = _local_means(domain, x, h, n_mc, batches, rng, lambda r: scale * fn(r))
        out.append(BlowupPoint(h, lhs, se, float(rhs)))
    return out


# --------------------------------------------------------------------------- #
# CSV output


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


class RecordWriter:
    """Streams records to CSV, one flushed block per completed ``n``.

    Wall-clock seconds vary between runs, so the ``seconds`` column is
    written as ``nan`` unless ``timing`` is set; this keeps repeated runs
    byte-identical.
    """

    def __init__(self, fh: io.TextIOBase, timing: bool = False):
        self._fh = fh
        self._writer = csv.writer(fh, lineterminator="\n")
        self._writer.writerow(RECORD_COLUMNS)
        self.timing = timing
        fh.flush()

    def write(self, records: Iterable[ExperimentRecord]) -> None:
        for rec in records:
            row = [getattr(rec, col) for col in RECORD_COLUMNS]
            if not self.timing:
                row[-1] = math.nan
            self._writer.writerow([_fmt(v) for v in row])
        self._fh.flush()


def records_to_csv(records: Iterable[ExperimentRecord], timing: bool = False) -> str:
    buf = io.StringIO()
    RecordWriter(buf, timing=timing).write(records)
    return buf.getvalue()


def read_records_csv(path) -> list[ExperimentRecord]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != RECORD_COLUMNS:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        for row in reader:
            out.append(
                ExperimentRecord(
                    domain=row["domain"],
                    D=int(row["D"]),
                    d=int(row["d"]),
                    n=int(row["n"]),
                    rep=int(row["rep"]),
                    h=float(row["h"]),
                    mse=float(row["mse"]),
                    bias2=float(row["bias2"]),
                    var=float(row["var"]),
                    seconds=float(row["seconds"]),
                )
            )
    return out


def report_json(fits: Mapping[int, RateFit], invariance: InvarianceReport | None = None) -> str:
    """JSON report; with a single ambient dimension the fit keys sit at top level."""
    payload: dict = {}
    if len(fits) == 1:
        payload.update(next(iter(fits.values())).as_dict())
    payload["fits"] = {str(D): fit.as_dict() for D, fit in fits.items()}
    if invariance is not None:
        payload["invariance"] = invariance.as_dict()
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
