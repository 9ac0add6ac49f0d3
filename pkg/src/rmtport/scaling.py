"""Power-law scaling of weight entropy against portfolio risk.

On the upper frontier branch, entropy decays with risk approximately as
E(sigma) ~ sigma^(-gamma); gamma is estimated by OLS in log-log space and
scanned across rolling windows to track its drift through calm and
stressed regimes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .correlation import correlation
from .errors import DegenerateAbscissa, InsufficientPoints, RmtportError, ShapeError
from .markowitz import Frontier, PortfolioProblem, efficient_frontier
from .panel import ReturnPanel, standardize, window_count
from .rmt import variant_matrix

__all__ = [
    "PowerLawFit",
    "WindowFit",
    "ExponentSeries",
    "EntropyReturnDiagnostic",
    "fit_power_law",
    "frontier_fit",
    "entropy_vs_return",
    "rolling_exponents",
    "save_exponents_csv",
]

DEFAULT_ENTROPY_FLOOR = 1e-12


@dataclass(frozen=True)
class PowerLawFit:
    """OLS fit of ln E on ln sigma; gamma is the negated slope.

    ``n_excluded`` counts points dropped by the positivity/floor filter.
    """

    gamma: float
    log_intercept: float
    r_squared: float
    n_points: int
    sigma_range: tuple[float, float]
    n_excluded: int = 0


def fit_power_law(
    points: Sequence[tuple[float, float]],
    entropy_floor: float = DEFAULT_ENTROPY_FLOOR,
) -> PowerLawFit:
    """Fit E = exp(log_intercept) * sigma^(-gamma) on (sigma, entropy) pairs.

    Points with nonpositive sigma or entropy at or below ``entropy_floor``
    (corner portfolios) are excluded and counted. Needs >= 3 usable points
    and at least two distinct sigma values.
    """
    pts = [(float(s), float(e)) for s, e in points]
    usable = [(s, e) for s, e in pts if s > 0 and e > entropy_floor]
    n_excluded = len(pts) - len(usable)
    if len(usable) < 3:
        raise InsufficientPoints(
            f"power-law fit needs >= 3 usable points, got {len(usable)} "
            f"({n_excluded} excluded)"
        )
    sig = np.array([s for s, _ in usable])
    ent = np.array([e for _, e in usable])
    if float(sig.max()) == float(sig.min()):
        raise DegenerateAbscissa("all sigma values coincide")
    x = np.log(sig)
    y = np.log(ent)
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(np.sum(xc * xc))
    sxy = float(np.sum(xc * yc))
    slope = sxy / sxx
    intercept = float(y.mean() - slope * x.mean())
    ss_res = float(np.sum((y - (intercept + slope * x)) ** 2))
    ss_tot = float(np.sum(yc * yc))
    # flat data is fit exactly by slope 0; report a perfect fit
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return PowerLawFit(
        gamma=-slope,
        log_intercept=intercept,
        r_squared=min(max(r2, 0.0), 1.0),
        n_points=len(usable),
        sigma_range=(float(sig.min()), float(sig.max())),
        n_excluded=n_excluded,
    )


def _branch_points(f: Frontier, branch: str) -> list[tuple[float, float]]:
    if branch not in ("upper", "all"):
        raise ShapeError(f"unknown branch {branch!r}")
    pts = list(f.points)
    if branch == "upper" and pts:
        pivot = min(pts, key=lambda pt: pt.achieved_sigma).target_mu
        pts = [pt for pt in pts if pt.target_mu >= pivot]
    return [(pt.achieved_sigma, pt.entropy) for pt in pts]


def frontier_fit(
    f: Frontier,
    branch: str = "upper",
    sigma_range: tuple[float | None, float | None] | None = None,
    entropy_floor: float = DEFAULT_ENTROPY_FLOOR,
) -> PowerLawFit:
    """Power-law fit of entropy against risk on one frontier branch.

    ``upper`` keeps targets at or above the minimum-variance point, where
    entropy is single-valued in sigma; ``sigma_range`` optionally restricts
    the fitted risk interval.
    """
    pts = _branch_points(f, branch)
    if sigma_range is not None:
        lo, hi = sigma_range
        pts = [
            (s, e)
            for s, e in pts
            if (lo is None or s >= lo) and (hi is None or s <= hi)
        ]
    return fit_power_law(pts, entropy_floor=entropy_floor)


@dataclass(frozen=True)
class EntropyReturnDiagnostic:
    """Raw (target return, entropy) series plus a log-log fit attempt.

    The fit is diagnostic only: no power law is expected here, and a fit
    that cannot be formed (too few positive-return points) is reported via
    ``status`` rather than raised.
    """

    series: tuple[tuple[float, float], ...]
    fit: PowerLawFit | None
    status: str


def entropy_vs_return(
    f: Frontier, entropy_floor: float = DEFAULT_ENTROPY_FLOOR
) -> EntropyReturnDiagnostic:
    series = tuple((pt.target_mu, pt.entropy) for pt in f.points)
    try:
        fit = fit_power_law(series, entropy_floor=entropy_floor)
        status = "ok"
    except (InsufficientPoints, DegenerateAbscissa) as exc:
        fit = None
        status = type(exc).__name__
    return EntropyReturnDiagnostic(series=series, fit=fit, status=status)


@dataclass(frozen=True)
class WindowFit:
    start_time: str
    fit: PowerLawFit | None
    status: str


@dataclass(frozen=True)
class ExponentSeries:
    entries: tuple[WindowFit, ...]
    window_length: int
    step: int


def rolling_exponents(
    r: ReturnPanel,
    window_length: int = 500,
    step: int = 20,
    corr_variant: str = "original",
    frontier_points: int = 100,
    branch: str = "upper",
    diagonal_repair: bool = True,
    sigma_range: tuple[float | None, float | None] | None = None,
    entropy_floor: float = DEFAULT_ENTROPY_FLOOR,
) -> ExponentSeries:
    """Scan the entropy-risk exponent across rolling windows.

    Per window: per-window means/sds from the raw returns, correlation from
    the re-standardized window, the requested matrix variant, a frontier
    sweep, and the log-log fit. A window that fails (degenerate series,
    unfittable frontier) is recorded with its error status instead of
    aborting the scan.
    """
    if window_length > r.l:
        raise ShapeError(f"window length {window_length} exceeds panel length {r.l}")
    entries = []
    raw = r.returns
    for k in range(window_count(r.l, window_length, step)):
        start = k * step
        start_time = r.times[start]
        block = raw[:, start : start + window_length]
        try:
            window = standardize(
                ReturnPanel(
                    assets=r.assets,
                    times=r.times[start : start + window_length],
                    returns=block,
                    meta=dict(r.meta),
                )
            )
            c = variant_matrix(
                correlation(window),
                q=window_length / r.n,
                variant=corr_variant,
                diagonal_repair=diagonal_repair,
            )
            problem = PortfolioProblem(
                mu=block.mean(axis=1), sigma=block.std(axis=1), corr=c
            )
            frontier = efficient_frontier(problem, n_points=frontier_points)
            fit = frontier_fit(
                frontier,
                branch=branch,
                sigma_range=sigma_range,
                entropy_floor=entropy_floor,
            )
            entries.append(WindowFit(start_time=start_time, fit=fit, status="ok"))
        except RmtportError as exc:
            entries.append(
                WindowFit(start_time=start_time, fit=None, status=type(exc).__name__)
            )
    return ExponentSeries(entries=tuple(entries), window_length=window_length, step=step)


def save_exponents_csv(es: ExponentSeries, path: str, comment: str | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if comment is not None:
            fh.write(f"# {comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["window_start", "gamma", "r_squared", "n_points", "status"])
        for entry in es.entries:
            if entry.fit is None:
                writer.writerow([entry.start_time, "", "", "", entry.status])
            else:
                writer.writerow(
                    [
                        entry.start_time,
                        repr(entry.fit.gamma),
                        repr(entry.fit.r_squared),
                        entry.fit.n_points,
                        entry.status,
                    ]
                )
