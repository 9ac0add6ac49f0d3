"""Eigenportfolio time series and one-factor market regressions."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSeries, ShapeError
from .panel import MarketSeries, ReturnPanel, standardize
from .rmt import SpectralDecomposition

__all__ = [
    "RegressionResult",
    "eigenportfolio_series",
    "ols_beta",
    "beta_profile",
    "save_beta_profile_csv",
]


@dataclass(frozen=True)
class RegressionResult:
    alpha: float
    beta: float
    r_squared: float
    residual_sd: float
    residuals: np.ndarray | None = None


def eigenportfolio_series(r: ReturnPanel, v: np.ndarray) -> np.ndarray:
    """Weight the standardized panel rows by eigenvector components.

    Returns the length-L series R(t) = sum_i v_i * r_i(t).
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (r.n,):
        raise ShapeError(f"eigenvector length {v.shape} does not match N={r.n}")
    if not r.standardized:
        r = standardize(r)
    return v @ r.returns


def _standardize_series(x: np.ndarray, what: str) -> np.ndarray:
    sd = x.std()
    if sd == 0.0:
        raise DegenerateSeries(f"{what} series is constant")
    return (x - x.mean()) / sd


def ols_beta(
    series: np.ndarray,
    market: MarketSeries | np.ndarray,
    normalize: bool = True,
    keep_residuals: bool = False,
) -> RegressionResult:
    """Ordinary least squares of ``series`` on the market series.

    With ``normalize`` (the default) both series are standardized first, so
    beta is comparable across eigenportfolios and alpha collapses to 0.
    """
    y = np.asarray(series, dtype=float)
    x = market.values if isinstance(market, MarketSeries) else np.asarray(market, dtype=float)
    if y.shape != x.shape or y.ndim != 1:
        raise ShapeError(f"series length {y.shape} does not match market {x.shape}")
    if y.size < 3:
        raise ShapeError(f"regression needs at least 3 observations, got {y.size}")
    if x.std() == 0.0:
        raise DegenerateSeries("market series is constant")
    if normalize:
        x = _standardize_series(x, "market")
        y = _standardize_series(y, "dependent")
    xc = x - x.mean()
    yc = y - y.mean()
    var_x = float(np.mean(xc**2))
    beta = float(np.mean(xc * yc)) / var_x
    alpha = float(y.mean() - beta * x.mean())
    resid = y - (alpha + beta * x)
    var_y = float(np.mean(yc**2))
    r2 = float(np.mean(xc * yc)) ** 2 / (var_x * var_y) if var_y > 0 else 0.0
    return RegressionResult(
        alpha=alpha,
        beta=beta,
        r_squared=min(max(r2, 0.0), 1.0),
        residual_sd=float(resid.std()),
        residuals=resid if keep_residuals else None,
    )


def beta_profile(
    r: ReturnPanel,
    d: SpectralDecomposition,
    market: MarketSeries,
    normalize: bool = True,
) -> list[tuple[int, RegressionResult]]:
    """One market regression per eigenvector, in ascending eigenvalue order."""
    if d.n != r.n:
        raise ShapeError(f"decomposition order {d.n} does not match panel N={r.n}")
    if market.l != r.l:
        raise ShapeError(f"market length {market.l} does not match panel L={r.l}")
    if not r.standardized:
        r = standardize(r)
    out = []
    for k in range(d.n):
        series = eigenportfolio_series(r, d.eigenvectors[:, k])
        out.append((k, ols_beta(series, market, normalize=normalize)))
    return out


def save_beta_profile_csv(
    profile: list[tuple[int, RegressionResult]],
    eigenvalues: np.ndarray,
    path: str,
    comment: str | None = None,
) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if comment is not None:
            fh.write(f"# {comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["index", "eigenvalue", "alpha", "beta", "r_squared", "residual_sd"])
        for k, res in profile:
            writer.writerow(
                [
                    k,
                    repr(float(eigenvalues[k])),
                    repr(res.alpha),
                    repr(res.beta),
                    repr(res.r_squared),
                    repr(res.residual_sd),
                ]
            )
