"""Equal-time correlation matrices and their off-diagonal distribution."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError
from .panel import ReturnPanel, standardize, windows

__all__ = [
    "CorrelationMatrix",
    "OffDiagonalStats",
    "Histogram",
    "LABEL_ORIGINAL",
    "LABEL_RANDOM_SYNTHETIC",
    "LABEL_FILTERED",
    "LABEL_RANDOM_BAND",
    "LABEL_LARGEST_MODE",
    "correlation",
    "offdiag_values",
    "offdiag_stats",
    "offdiag_histogram",
    "rolling_mean_correlation",
    "save_matrix_csv",
    "save_histogram_csv",
]

LABEL_ORIGINAL = "original"
LABEL_RANDOM_SYNTHETIC = "random-synthetic"
LABEL_FILTERED = "filtered"
LABEL_RANDOM_BAND = "random-band"
LABEL_LARGEST_MODE = "largest-mode"

# Labels whose matrices are genuine correlation matrices (unit diagonal,
# entries in [-1, 1]); the spectral components relax those constraints.
_STRICT_LABELS = (LABEL_ORIGINAL, LABEL_RANDOM_SYNTHETIC)
_ALL_LABELS = _STRICT_LABELS + (LABEL_FILTERED, LABEL_RANDOM_BAND, LABEL_LARGEST_MODE)


@dataclass(frozen=True)
class CorrelationMatrix:
    """A symmetric N x N matrix tagged with its provenance label."""

    entries: np.ndarray
    label: str
    assets: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        entries = np.asarray(self.entries, dtype=float)
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        if self.label not in _ALL_LABELS:
            raise DomainError(f"unknown correlation label {self.label!r}")
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ShapeError(f"correlation matrix must be square, got {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise DomainError("correlation matrix contains non-finite values")
        if np.max(np.abs(entries - entries.T), initial=0.0) >= 1e-12:
            raise DomainError("correlation matrix not symmetric within 1e-12")
        if self.label in _STRICT_LABELS:
            if np.max(np.abs(np.diag(entries) - 1.0), initial=0.0) >= 1e-12:
                raise DomainError(f"label {self.label!r} requires a unit diagonal")
            if np.any(np.abs(entries) > 1.0 + 1e-12):
                raise DomainError(f"label {self.label!r} requires entries in [-1, 1]")
        if self.assets is not None and len(self.assets) != entries.shape[0]:
            raise ShapeError("asset identifiers do not match matrix order")

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class OffDiagonalStats:
    mean: float
    sd: float
    skewness: float
    count: int


@dataclass(frozen=True)
class Histogram:
    """Density-normalized histogram: densities sum to 1 when multiplied by widths."""

    edges: np.ndarray
    densities: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)


def correlation(r: ReturnPanel) -> CorrelationMatrix:
    """Pearson correlation matrix C = G.G^T / L on the standardized panel.

    Standardizes internally when the panel is not already standardized. The
    label is ``random-synthetic`` for iid-generated panels and ``original``
    otherwise.
    """
    if not r.standardized:
        r = standardize(r)
    g = r.returns
    c = (g @ g.T) / r.l
    c = 0.5 * (c + c.T)
    c = np.clip(c, -1.0, 1.0)
    np.fill_diagonal(c, 1.0)
    label = LABEL_RANDOM_SYNTHETIC if r.meta.get("source") == "synth-iid" else LABEL_ORIGINAL
    return CorrelationMatrix(entries=c, label=label, assets=r.assets)


def offdiag_values(c: CorrelationMatrix) -> np.ndarray:
    """The N(N-1)/2 upper-triangle entries, row-major."""
    return c.entries[np.triu_indices(c.n, k=1)]


def offdiag_stats(c: CorrelationMatrix) -> OffDiagonalStats:
    """Mean, sd, and skewness (population moments) of the off-diagonal entries.

    Skewness of a constant sample is reported as 0 by convention.
    """
    if c.n < 2:
        raise ShapeError("off-diagonal statistics need at least 2 assets")
    v = offdiag_values(c)
    mean = float(v.mean())
    centered = v - mean
    m2 = float(np.mean(centered**2))
    sd = float(np.sqrt(m2))
    skew = float(np.mean(centered**3) / m2**1.5) if m2 > 0 else 0.0
    return OffDiagonalStats(mean=mean, sd=sd, skewness=skew, count=v.size)


def offdiag_histogram(
    c: CorrelationMatrix, bins: int, range: tuple[float, float] = (-1.0, 1.0)
) -> Histogram:
    """Density histogram of the off-diagonal entries.

    Values outside ``range`` are clamped into the edge bins so that mass is
    conserved when comparing matrices with different supports.
    """
    return values_histogram(offdiag_values(c), bins, range)


def values_histogram(
    values: np.ndarray, bins: int, range: tuple[float, float]
) -> Histogram:
    lo, hi = float(range[0]), float(range[1])
    if bins < 1:
        raise DomainError(f"bins must be >= 1, got {bins}")
    if not lo < hi:
        raise DomainError(f"histogram range must satisfy lo < hi, got ({lo}, {hi})")
    clamped = np.clip(np.asarray(values, dtype=float), lo, hi)
    densities, edges = np.histogram(clamped, bins=bins, range=(lo, hi), density=True)
    return Histogram(edges=edges, densities=densities)


def rolling_mean_correlation(
    r: ReturnPanel, length: int, step: int
) -> list[tuple[str, float]]:
    """Mean off-diagonal correlation per rolling window, in window order."""
    out = []
    for w in windows(r, length, step):
        c = correlation(w)
        out.append((w.times[0], offdiag_stats(c).mean))
    return out


def save_matrix_csv(c: CorrelationMatrix, path: str, comment: str | None = None) -> None:
    """Write the N x N matrix with asset identifiers as header row/column."""
    labels = c.assets if c.assets is not None else tuple(str(i) for i in range(c.n))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if comment is not None:
            fh.write(f"# {comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["asset", *labels])
        for label, row in zip(labels, c.entries):
            writer.writerow([label, *[repr(float(v)) for v in row]])


def save_histogram_csv(h: Histogram, path: str, comment: str | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if comment is not None:
            fh.write(f"# {comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["bin_left", "bin_right", "density"])
        for left, right, d in zip(h.edges[:-1], h.edges[1:], h.densities):
            writer.writerow([repr(float(left)), repr(float(right)), repr(float(d))])
