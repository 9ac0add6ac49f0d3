"""Marchenko-Pastur spectrum, eigendecomposition, and spectral partitioning.

The bulk of a sample correlation spectrum for noise-only data falls inside
[lambda_minus, lambda_plus], fixed by the observations-per-asset ratio
q = L/N. Eigenvalues above lambda_plus carry structure; projecting onto
them (with the original eigenvalues) splits any correlation matrix into an
exact sum of a random-band part and a filtered part.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .correlation import (
    LABEL_FILTERED,
    LABEL_LARGEST_MODE,
    LABEL_RANDOM_BAND,
    CorrelationMatrix,
    Histogram,
    values_histogram,
)
from .errors import ConvergenceError, DomainError

__all__ = [
    "MarchenkoPasturLaw",
    "SpectralDecomposition",
    "RmtPartition",
    "SpectrumHistogram",
    "mp_bounds",
    "mp_density",
    "eigendecompose",
    "partition",
    "ratio_to_bound",
    "restore_unit_diagonal",
    "variant_matrix",
    "VARIANTS",
    "spectrum_histogram",
    "save_spectrum_csv",
    "save_spectrum_histogram_csv",
]


@dataclass(frozen=True)
class MarchenkoPasturLaw:
    """Support of the noise eigenvalue density at ratio q = L/N."""

    q: float
    lambda_minus: float
    lambda_plus: float


def mp_bounds(q: float) -> MarchenkoPasturLaw:
    """Edges of the noise band: lambda_pm = 1 + 1/q +- 2*sqrt(1/q)."""
    if q <= 0:
        raise DomainError(f"q must be positive, got {q}")
    root = np.sqrt(1.0 / q)
    return MarchenkoPasturLaw(
        q=float(q),
        lambda_minus=float((1.0 - root) ** 2),
        lambda_plus=float((1.0 + root) ** 2),
    )


def mp_density(lam: float | np.ndarray, q: float) -> float | np.ndarray:
    """Noise eigenvalue density (q/2pi) * sqrt((l+ - l)(l - l-)) / l.

    Zero outside [lambda_minus, lambda_plus]; integrates to 1 over the
    support. Accepts scalars or arrays.
    """
    law = mp_bounds(q)
    lam_arr = np.asarray(lam, dtype=float)
    inside = (lam_arr >= law.lambda_minus) & (lam_arr <= law.lambda_plus) & (lam_arr > 0)
    prod = np.where(inside, (law.lambda_plus - lam_arr) * (lam_arr - law.lambda_minus), 0.0)
    dens = np.zeros_like(lam_arr)
    np.divide(q / (2.0 * np.pi) * np.sqrt(prod), lam_arr, out=dens, where=inside)
    if np.isscalar(lam) or lam_arr.ndim == 0:
        return float(dens)
    return dens


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues (ascending) and orthonormal eigenvectors, column-paired.

    Sign convention: each eigenvector's largest-magnitude entry is positive,
    which makes the decomposition deterministic.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    source_label: str

    def __post_init__(self) -> None:
        vals = np.asarray(self.eigenvalues, dtype=float)
        vecs = np.asarray(self.eigenvectors, dtype=float)
        vals.setflags(write=False)
        vecs.setflags(write=False)
        object.__setattr__(self, "eigenvalues", vals)
        object.__setattr__(self, "eigenvectors", vecs)

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    def top_eigenvalue(self) -> float:
        return float(self.eigenvalues[-1])

    def top_eigenvector(self) -> np.ndarray:
        return self.eigenvectors[:, -1]


def eigendecompose(c: CorrelationMatrix) -> SpectralDecomposition:
    """Full symmetric eigendecomposition with the deterministic sign fix."""
    try:
        vals, vecs = np.linalg.eigh(c.entries)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigendecomposition failed: {exc}") from exc
    vecs = vecs.copy()
    for k in range(vecs.shape[1]):
        col = vecs[:, k]
        if col[np.argmax(np.abs(col))] < 0:
            vecs[:, k] = -col
    return SpectralDecomposition(eigenvalues=vals, eigenvectors=vecs, source_label=c.label)


@dataclass(frozen=True)
class RmtPartition:
    """Split of a correlation matrix into random-band and deviating parts.

    ``c_random + c_filter`` reconstructs the source exactly (spectral
    additivity); ``c_largest`` is the rank-one projection onto the top
    eigenvector. An empty ``deviating_indices`` means nothing rose above
    the noise band and ``c_filter`` is the zero matrix.
    """

    law: MarchenkoPasturLaw
    random_indices: tuple[int, ...]
    deviating_indices: tuple[int, ...]
    c_random: CorrelationMatrix
    c_filter: CorrelationMatrix
    c_largest: CorrelationMatrix

    @property
    def has_deviating(self) -> bool:
        return len(self.deviating_indices) > 0


def _projection(vals: np.ndarray, vecs: np.ndarray, idx: np.ndarray, n: int) -> np.ndarray:
    if idx.size == 0:
        return np.zeros((n, n))
    v = vecs[:, idx]
    m = (v * vals[idx]) @ v.T
    return 0.5 * (m + m.T)


def partition(d: SpectralDecomposition, law: MarchenkoPasturLaw) -> RmtPartition:
    """Project onto the noise band (lambda <= lambda_plus) and its complement.

    Eigenvalues below lambda_minus stay in the random band; only deviation
    above the bulk is treated as structure. Components keep the original
    eigenvalues, so the two parts sum back to the source matrix exactly.
    """
    vals, vecs = d.eigenvalues, d.eigenvectors
    n = d.n
    random_idx = np.nonzero(vals <= law.lambda_plus)[0]
    deviating_idx = np.nonzero(vals > law.lambda_plus)[0]
    c_random = _projection(vals, vecs, random_idx, n)
    c_filter = _projection(vals, vecs, deviating_idx, n)
    c_largest = _projection(vals, vecs, np.array([n - 1]), n)
    return RmtPartition(
        law=law,
        random_indices=tuple(int(i) for i in random_idx),
        deviating_indices=tuple(int(i) for i in deviating_idx),
        c_random=CorrelationMatrix(entries=c_random, label=LABEL_RANDOM_BAND),
        c_filter=CorrelationMatrix(entries=c_filter, label=LABEL_FILTERED),
        c_largest=CorrelationMatrix(entries=c_largest, label=LABEL_LARGEST_MODE),
    )


def ratio_to_bound(d: SpectralDecomposition, law: MarchenkoPasturLaw) -> float:
    """Largest eigenvalue relative to the theoretical noise-band edge."""
    return d.top_eigenvalue() / law.lambda_plus


def restore_unit_diagonal(c: CorrelationMatrix) -> CorrelationMatrix:
    """Set the diagonal to exactly 1, leaving off-diagonal entries untouched.

    Needed before a spectral component can drive a portfolio problem. The
    diagonal increment is nonnegative (component diagonals never exceed 1
    for a unit-diagonal source), so positive semidefiniteness is preserved.
    """
    diag = np.diag(c.entries)
    if np.any(diag > 1.0 + 1e-10):
        i = int(np.argmax(diag))
        raise DomainError(f"diagonal entry {diag[i]!r} at index {i} exceeds 1")
    out = np.array(c.entries)
    np.fill_diagonal(out, 1.0)
    return CorrelationMatrix(entries=out, label=c.label, assets=c.assets)


VARIANT_ORIGINAL = "original"
VARIANT_RANDOM_BAND = "random_band"
VARIANT_FILTERED = "filtered"
VARIANT_LARGEST = "largest"
VARIANTS = (VARIANT_ORIGINAL, VARIANT_RANDOM_BAND, VARIANT_FILTERED, VARIANT_LARGEST)


def variant_matrix(
    c: CorrelationMatrix, q: float, variant: str, diagonal_repair: bool = True
) -> CorrelationMatrix:
    """Pick a correlation-matrix variant for downstream portfolio use.

    ``original`` returns the input unchanged; the spectral variants
    decompose at ratio q and, by default, repair the diagonal so the result
    can enter a portfolio problem.
    """
    if variant == VARIANT_ORIGINAL:
        return c
    if variant not in VARIANTS:
        raise DomainError(f"unknown correlation variant {variant!r}")
    part = partition(eigendecompose(c), mp_bounds(q))
    component = {
        VARIANT_RANDOM_BAND: part.c_random,
        VARIANT_FILTERED: part.c_filter,
        VARIANT_LARGEST: part.c_largest,
    }[variant]
    if c.assets is not None:
        component = CorrelationMatrix(
            entries=component.entries, label=component.label, assets=c.assets
        )
    return restore_unit_diagonal(component) if diagonal_repair else component


@dataclass(frozen=True)
class SpectrumHistogram:
    """Empirical eigenvalue density with the theoretical density at bin centers."""

    histogram: Histogram
    mp_at_centers: np.ndarray


def spectrum_histogram(
    d: SpectralDecomposition, law: MarchenkoPasturLaw, bins: int
) -> SpectrumHistogram:
    """Density histogram of the eigenvalues, side by side with mp_density."""
    vals = d.eigenvalues
    lo = min(float(vals[0]), law.lambda_minus)
    hi = max(float(vals[-1]), law.lambda_plus)
    if hi <= lo:
        hi = lo + 1.0
    hist = values_histogram(vals, bins, (lo, hi))
    dens = np.asarray(mp_density(hist.centers, law.q))
    return SpectrumHistogram(histogram=hist, mp_at_centers=dens)


def save_spectrum_csv(d: SpectralDecomposition, path: str, comment: str | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if comment is not None:
            fh.write(f"# {comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["index", "eigenvalue"])
        for i, v in enumerate(d.eigenvalues):
            writer.writerow([i, repr(float(v))])


def save_spectrum_histogram_csv(
    sh: SpectrumHistogram, path: str, comment: str | None = None
) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if comment is not None:
            fh.write(f"# {comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["bin_left", "bin_right", "density", "mp_density_at_center"])
        h = sh.histogram
        for left, right, d_emp, d_mp in zip(
            h.edges[:-1], h.edges[1:], h.densities, sh.mp_at_centers
        ):
            writer.writerow(
                [repr(float(left)), repr(float(right)), repr(float(d_emp)), repr(float(d_mp))]
            )
