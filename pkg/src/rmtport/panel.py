"""Return panels: loading, transforming, windowing, and synthesizing.

A panel is a rectangular block of per-asset series. Prices enter via CSV,
become (log or simple) returns, get standardized row-wise, and are sliced
into rolling windows. Synthetic generators produce iid-Gaussian panels and
one-factor market panels; all randomness goes through
``numpy.random.default_rng`` (PCG64), which is the fixed, documented
generator for reproducible runs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import DomainError, ParseError, ShapeError, DegenerateSeries

__all__ = [
    "PricePanel",
    "ReturnPanel",
    "MarketSeries",
    "load_csv",
    "save_prices_csv",
    "save_returns_csv",
    "load_market_csv",
    "save_market_csv",
    "log_returns",
    "simple_returns",
    "standardize",
    "windows",
    "synth_iid",
    "synth_one_factor",
]

LAYOUT_ROWS_ARE_DATES = "rows-are-dates"
LAYOUT_ROWS_ARE_ASSETS = "rows-are-assets"

# Row means/sds use the population form (denominator L) so that G.G^T/L on
# a standardized panel has an exactly unit diagonal.
_STD_DDOF = 0


def _as_readonly(a: np.ndarray) -> np.ndarray:
    out = np.asarray(a, dtype=float)
    out.setflags(write=False)
    return out


def _check_times_increasing(times: Sequence[str]) -> None:
    # Numeric comparison when every stamp parses as a number, else lexicographic.
    try:
        keys: list = [float(t) for t in times]
    except (TypeError, ValueError):
        keys = list(times)
    for a, b in zip(keys, keys[1:]):
        if not a < b:
            raise DomainError(f"timestamps not strictly increasing at {a!r} -> {b!r}")


@dataclass(frozen=True)
class PricePanel:
    """N positive price series over L+1 strictly increasing timestamps."""

    assets: tuple[str, ...]
    times: tuple[str, ...]
    prices: np.ndarray  # shape (N, L+1)

    def __post_init__(self) -> None:
        prices = _as_readonly(self.prices)
        object.__setattr__(self, "prices", prices)
        n, cols = prices.shape
        if n != len(self.assets):
            raise ShapeError(f"{len(self.assets)} asset ids for {n} price rows")
        if cols != len(self.times):
            raise ShapeError(f"{len(self.times)} timestamps for {cols} price columns")
        if cols < 2:
            raise ShapeError("a price panel needs at least 2 observations per asset")
        if not np.all(np.isfinite(prices)):
            raise DomainError("prices contain non-finite values")
        if np.any(prices <= 0):
            i, t = np.argwhere(prices <= 0)[0]
            raise DomainError(
                f"non-positive price {prices[i, t]!r} for asset {self.assets[i]!r} "
                f"at time {self.times[t]!r}"
            )
        _check_times_increasing(self.times)

    @property
    def n(self) -> int:
        return len(self.assets)


@dataclass(frozen=True)
class ReturnPanel:
    """N return series of length L, optionally standardized row-wise.

    ``meta`` carries provenance (generator name, seed, planted betas) and is
    preserved by transformations that do not invalidate it.
    """

    assets: tuple[str, ...]
    times: tuple[str, ...]
    returns: np.ndarray  # shape (N, L)
    standardized: bool = False
    meta: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        returns = _as_readonly(self.returns)
        object.__setattr__(self, "returns", returns)
        n, l = returns.shape
        if n != len(self.assets):
            raise ShapeError(f"{len(self.assets)} asset ids for {n} return rows")
        if l != len(self.times):
            raise ShapeError(f"{len(self.times)} timestamps for {l} return columns")
        if n < 1 or l < 2:
            raise ShapeError(f"panel too small: N={n}, L={l}")
        if not np.all(np.isfinite(returns)):
            raise DomainError("returns contain non-finite values")
        if self.standardized:
            means = returns.mean(axis=1)
            sds = returns.std(axis=1, ddof=_STD_DDOF)
            if np.max(np.abs(means)) >= 1e-10 or np.max(np.abs(sds - 1.0)) >= 1e-10:
                raise DomainError("standardized flag set but rows are not mean-0/sd-1")

    @property
    def n(self) -> int:
        return len(self.assets)

    @property
    def l(self) -> int:
        return len(self.times)

    @property
    def q(self) -> float:
        """Observations-per-asset ratio L/N."""
        return self.l / self.n


@dataclass(frozen=True)
class MarketSeries:
    """A single market series aligned with a panel's return timestamps."""

    times: tuple[str, ...]
    values: np.ndarray
    standardized: bool = False

    def __post_init__(self) -> None:
        values = _as_readonly(self.values)
        object.__setattr__(self, "values", values)
        if values.ndim != 1:
            raise ShapeError("market series must be one-dimensional")
        if len(values) != len(self.times):
            raise ShapeError(f"{len(self.times)} timestamps for {len(values)} values")
        if not np.all(np.isfinite(values)):
            raise DomainError("market series contains non-finite values")

    @property
    def l(self) -> int:
        return len(self.times)


def _parse_cell(raw: str, row: int, col: int) -> float:
    text = raw.strip()
    if text == "":
        raise ParseError(f"missing cell at row {row}, column {col}")
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"non-numeric cell {raw!r} at row {row}, column {col}") from None


def _read_table(path: str) -> list[list[str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row and not row[0].startswith("#")]
    if len(rows) < 2:
        raise ShapeError(f"{path}: needs a header row and at least one data row")
    width = len(rows[0])
    for k, row in enumerate(rows):
        if len(row) != width:
            raise ShapeError(f"{path}: row {k + 1} has {len(row)} cells, expected {width}")
    return rows


def load_csv(path: str, layout: str = LAYOUT_ROWS_ARE_DATES) -> PricePanel:
    """Load a price panel from CSV.

    ``rows-are-dates``: header row carries asset identifiers, first column
    carries timestamps. ``rows-are-assets`` is the transpose. Files with
    missing or malformed cells are rejected outright; no imputation.
    """
    if layout not in (LAYOUT_ROWS_ARE_DATES, LAYOUT_ROWS_ARE_ASSETS):
        raise DomainError(f"unknown layout {layout!r}")
    rows = _read_table(path)
    header = [c.strip() for c in rows[0][1:]]
    first_col = [row[0].strip() for row in rows[1:]]
    values = np.empty((len(rows) - 1, len(header)))
    for i, row in enumerate(rows[1:]):
        for j, raw in enumerate(row[1:]):
            # file coordinates are 1-based, including the header row/column
            values[i, j] = _parse_cell(raw, row=i + 2, col=j + 2)
    if layout == LAYOUT_ROWS_ARE_DATES:
        assets, times, prices = header, first_col, values.T
    else:
        assets, times, prices = first_col, header, values
    return PricePanel(assets=tuple(assets), times=tuple(times), prices=prices)


def _write_table(
    path: str,
    corner: str,
    col_labels: Sequence[str],
    row_labels: Sequence[str],
    values: np.ndarray,
    comment: str | None = None,
) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if comment is not None:
            fh.write(f"# {comment}\n")
        writer = csv.writer(fh)
        writer.writerow([corner, *col_labels])
        for label, row in zip(row_labels, values):
            writer.writerow([label, *[repr(float(v)) for v in row]])


def save_prices_csv(
    panel: PricePanel,
    path: str,
    layout: str = LAYOUT_ROWS_ARE_DATES,
    comment: str | None = None,
) -> None:
    if layout == LAYOUT_ROWS_ARE_DATES:
        _write_table(path, "time", panel.assets, panel.times, panel.prices.T, comment)
    elif layout == LAYOUT_ROWS_ARE_ASSETS:
        _write_table(path, "asset", panel.times, panel.assets, panel.prices, comment)
    else:
        raise DomainError(f"unknown layout {layout!r}")


def save_returns_csv(
    panel: ReturnPanel,
    path: str,
    layout: str = LAYOUT_ROWS_ARE_DATES,
    comment: str | None = None,
) -> None:
    """Write a return panel in the same CSV shape as price input, for chaining."""
    if layout == LAYOUT_ROWS_ARE_DATES:
        _write_table(path, "time", panel.assets, panel.times, panel.returns.T, comment)
    elif layout == LAYOUT_ROWS_ARE_ASSETS:
        _write_table(path, "asset", panel.times, panel.assets, panel.returns, comment)
    else:
        raise DomainError(f"unknown layout {layout!r}")


def load_market_csv(path: str) -> MarketSeries:
    """Load a market series from a two-column CSV (time, value)."""
    rows = _read_table(path)
    times = []
    values = []
    for i, row in enumerate(rows[1:]):
        if len(row) != 2:
            raise ShapeError(f"{path}: market row {i + 2} must have exactly 2 cells")
        times.append(row[0].strip())
        values.append(_parse_cell(row[1], row=i + 2, col=2))
    return MarketSeries(times=tuple(times), values=np.asarray(values))


def save_market_csv(series: MarketSeries, path: str, comment: str | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if comment is not None:
            fh.write(f"# {comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["time", "value"])
        for t, v in zip(series.times, series.values):
            writer.writerow([t, repr(float(v))])


def log_returns(p: PricePanel) -> ReturnPanel:
    """Row-wise log returns; column t is ln(p[t+1]/p[t]), stamped at t+1."""
    r = np.log(p.prices[:, 1:] / p.prices[:, :-1])
    return ReturnPanel(assets=p.assets, times=p.times[1:], returns=r)


def simple_returns(p: PricePanel) -> ReturnPanel:
    """Row-wise simple returns p[t+1]/p[t] - 1, stamped at t+1."""
    r = p.prices[:, 1:] / p.prices[:, :-1] - 1.0
    return ReturnPanel(assets=p.assets, times=p.times[1:], returns=r)


def standardize(r: ReturnPanel) -> ReturnPanel:
    """Shift/scale each row to mean 0, sd 1 (population denominator L)."""
    means = r.returns.mean(axis=1, keepdims=True)
    sds = r.returns.std(axis=1, ddof=_STD_DDOF, keepdims=True)
    flat = np.nonzero(sds[:, 0] == 0.0)[0]
    if flat.size:
        raise DegenerateSeries(f"constant return series for asset {r.assets[flat[0]]!r}")
    out = (r.returns - means) / sds
    return ReturnPanel(
        assets=r.assets, times=r.times, returns=out, standardized=True, meta=dict(r.meta)
    )


def window_count(l: int, length: int, step: int) -> int:
    """Number of full rolling windows: floor((L - length)/step) + 1."""
    return (l - length) // step + 1


def windows(r: ReturnPanel, length: int, step: int) -> list[ReturnPanel]:
    """Rolling windows of ``length`` columns every ``step`` columns.

    Each window is re-standardized independently; a trailing partial window
    is discarded.
    """
    if length > r.l:
        raise ShapeError(f"window length {length} exceeds panel length {r.l}")
    if length < 2:
        raise ShapeError("window length must be at least 2")
    if step < 1:
        raise ShapeError("window step must be at least 1")
    out = []
    for k in range(window_count(r.l, length, step)):
        start = k * step
        piece = ReturnPanel(
            assets=r.assets,
            times=r.times[start : start + length],
            returns=r.returns[:, start : start + length],
            meta=dict(r.meta),
        )
        out.append(standardize(piece))
    return out


def _default_labels(prefix: str, count: int) -> tuple[str, ...]:
    width = max(1, len(str(count - 1)))
    return tuple(f"{prefix}{i:0{width}d}" for i in range(count))


def synth_iid(n: int, l: int, seed: int) -> ReturnPanel:
    """N x L panel of independent standard Gaussian draws (PCG64, seeded)."""
    if n < 2 or l < 2:
        raise ShapeError(f"synthetic panel too small: n={n}, l={l}")
    rng = np.random.default_rng(seed)
    returns = rng.standard_normal((n, l))
    return ReturnPanel(
        assets=_default_labels("A", n),
        times=tuple(str(t) for t in range(l)),
        returns=returns,
        meta={"source": "synth-iid", "seed": seed},
    )


def synth_one_factor(
    n: int,
    l: int,
    beta_range: tuple[float, float],
    noise_sd: float,
    seed: int,
) -> tuple[ReturnPanel, MarketSeries]:
    """One-factor panel: r_i(t) = beta_i * m(t) + eps_i(t).

    The market m is iid Gaussian(0,1), beta_i uniform over ``beta_range``,
    eps_i iid Gaussian(0, noise_sd^2). The planted betas are recorded in the
    panel's ``meta["betas"]`` for fixture-based tests.
    """
    if n < 2 or l < 2:
        raise ShapeError(f"synthetic panel too small: n={n}, l={l}")
    lo, hi = float(beta_range[0]), float(beta_range[1])
    if not (0 < lo <= hi):
        raise DomainError(f"beta_range must satisfy 0 < lo <= hi, got ({lo}, {hi})")
    if noise_sd < 0:
        raise DomainError(f"noise_sd must be nonnegative, got {noise_sd}")
    rng = np.random.default_rng(seed)
    market = rng.standard_normal(l)
    betas = rng.uniform(lo, hi, n)
    returns = betas[:, None] * market[None, :]
    if noise_sd > 0:
        returns = returns + noise_sd * rng.standard_normal((n, l))
    times = tuple(str(t) for t in range(l))
    panel = ReturnPanel(
        assets=_default_labels("A", n),
        times=times,
        returns=returns,
        meta={
            "source": "synth-one-factor",
            "seed": seed,
            "betas": tuple(float(b) for b in betas),
            "noise_sd": float(noise_sd),
        },
    )
    return panel, MarketSeries(times=times, values=market)
