"""Long-only mean-variance optimization, frontiers, and weight entropy.

The minimum-variance problem

    minimize   w' . (sigma_i sigma_j C_ij) . w
    subject to mu'w = target,  sum(w) = 1,  w >= 0

is solved with a primal active-set method on the reduced KKT system: bound
constraints enter the working set as they block feasible steps and leave it
when their multiplier turns negative. Solutions carry exact zeros on bound-
active weights and satisfy the equality constraints to machine precision,
which keeps frontier sweeps byte-deterministic.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .correlation import CorrelationMatrix
from .errors import DomainError, InfeasibleTarget, NumericalFailure, ShapeError

__all__ = [
    "PortfolioProblem",
    "WeightVector",
    "FrontierPoint",
    "Frontier",
    "portfolio_variance",
    "portfolio_return",
    "min_variance_weights",
    "efficient_frontier",
    "weight_entropy",
    "save_frontier_csv",
]

log = logging.getLogger(__name__)

# Correlation matrices with smaller minimum eigenvalue get a diagonal bump
# before entering the optimizer; rank-deficient filtered components would
# otherwise make the QP degenerate.
_REG_EIG_FLOOR = 1e-8


@dataclass(frozen=True)
class WeightVector:
    """Long-only portfolio weights: w >= 0, sum(w) = 1 within 1e-10."""

    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size < 1:
            raise ShapeError(f"weights must be a nonempty vector, got shape {w.shape}")
        if np.any(w < -1e-10):
            i = int(np.argmin(w))
            raise DomainError(f"negative weight {w[i]!r} at index {i}")
        w = np.where(w < 0.0, 0.0, w)  # scrub fp dust below the tolerance
        total = float(w.sum())
        if abs(total - 1.0) >= 1e-10:
            raise DomainError(f"weights sum to {total!r}, expected 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.weights.size


@dataclass(frozen=True)
class PortfolioProblem:
    """Mean returns, return sds, and a unit-diagonal correlation matrix."""

    mu: np.ndarray
    sigma: np.ndarray
    corr: CorrelationMatrix

    def __post_init__(self) -> None:
        mu = np.asarray(self.mu, dtype=float)
        sigma = np.asarray(self.sigma, dtype=float)
        mu.setflags(write=False)
        sigma.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        n = self.corr.n
        if mu.shape != (n,) or sigma.shape != (n,):
            raise ShapeError(
                f"mu {mu.shape} / sigma {sigma.shape} do not match correlation order {n}"
            )
        if np.any(sigma <= 0):
            i = int(np.argmin(sigma))
            raise DomainError(f"sigma must be positive; got {sigma[i]!r} at index {i}")
        diag = np.diag(self.corr.entries)
        if np.max(np.abs(diag - 1.0), initial=0.0) >= 1e-10:
            raise DomainError("portfolio correlation must have a unit diagonal")
        min_eig = float(np.linalg.eigvalsh(self.corr.entries)[0])
        if min_eig < -1e-8:
            raise DomainError(f"correlation is indefinite (min eigenvalue {min_eig!r})")
        object.__setattr__(self, "_min_eig", min_eig)
        scale = np.outer(sigma, sigma)
        cov = scale * self.corr.entries
        if min_eig < _REG_EIG_FLOOR:
            log.info(
                "regularizing near-singular correlation (min eigenvalue %.3e): "
                "adding %.0e to the diagonal",
                min_eig,
                _REG_EIG_FLOOR,
            )
            cov_solver = scale * (self.corr.entries + _REG_EIG_FLOOR * np.eye(n))
        else:
            cov_solver = cov
        cov.setflags(write=False)
        object.__setattr__(self, "_cov_raw", cov)
        object.__setattr__(self, "_two_cov_solver", 2.0 * cov_solver)

    @property
    def n(self) -> int:
        return self.corr.n

    @property
    def covariance(self) -> np.ndarray:
        """Covariance exactly as the variance formula defines it (no bump)."""
        return self._cov_raw


def portfolio_variance(p: PortfolioProblem, w: WeightVector) -> float:
    """The double sum over w_i w_j C_ij sigma_i sigma_j, clamped at 0."""
    wv = w.weights
    if wv.size != p.n:
        raise ShapeError(f"weights length {wv.size} does not match N={p.n}")
    var = float(wv @ p.covariance @ wv)
    if var < 0:
        if var < -1e-8 * max(1.0, float(np.max(p.sigma)) ** 2):
            raise NumericalFailure(f"variance {var!r} is negative beyond tolerance")
        var = 0.0
    return var


def portfolio_return(p: PortfolioProblem, w: WeightVector) -> float:
    wv = w.weights
    if wv.size != p.n:
        raise ShapeError(f"weights length {wv.size} does not match N={p.n}")
    return float(p.mu @ wv)


def weight_entropy(w: WeightVector | np.ndarray) -> float:
    """Shannon entropy -sum(w ln w) in nats; zero weights contribute 0."""
    wv = w.weights if isinstance(w, WeightVector) else np.asarray(w, dtype=float)
    return float(-np.sum(xlogy(wv, wv)))


def _kkt_solve(
    two_cov: np.ndarray, mu: np.ndarray, free: np.ndarray, target: float
) -> tuple[np.ndarray, float, float]:
    """Solve the equality-constrained subproblem on the free index set.

    Returns (w_free, a_hat, b_hat) where stationarity on free rows reads
    2.Cov.w + a_hat*mu + b_hat = 0; lstsq handles rank-deficient faces
    (e.g. duplicated assets) with the minimum-norm solution.
    """
    k = free.size
    kkt = np.zeros((k + 2, k + 2))
    kkt[:k, :k] = two_cov[np.ix_(free, free)]
    kkt[:k, k] = mu[free]
    kkt[k, :k] = mu[free]
    kkt[:k, k + 1] = 1.0
    kkt[k + 1, :k] = 1.0
    rhs = np.zeros(k + 2)
    rhs[k] = target
    rhs[k + 1] = 1.0
    try:
        sol = np.linalg.solve(kkt, rhs)
        if not np.all(np.isfinite(sol)):
            raise np.linalg.LinAlgError("non-finite KKT solution")
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
    return sol[:k], float(sol[k]), float(sol[k + 1])


def _feasible_start(mu: np.ndarray, target: float) -> np.ndarray:
    """A simplex point meeting the target: blend of the min- and max-mu corners."""
    n = mu.size
    lo, hi = int(np.argmin(mu)), int(np.argmax(mu))
    spread = mu[hi] - mu[lo]
    if spread <= 0:
        return np.full(n, 1.0 / n)
    theta = min(max((target - mu[lo]) / spread, 0.0), 1.0)
    w = np.zeros(n)
    w[lo] = 1.0 - theta
    w[hi] += theta
    return w


def _shift_to_target(w: np.ndarray, mu: np.ndarray, target: float) -> np.ndarray | None:
    """Move a feasible point to a new target by blending toward a corner."""
    cur = float(mu @ w)
    if cur == target:
        return w.copy()
    corner = int(np.argmax(mu)) if target > cur else int(np.argmin(mu))
    denom = mu[corner] - cur
    if denom == 0.0:
        return None
    theta = (target - cur) / denom
    if not 0.0 <= theta <= 1.0:
        return None
    out = (1.0 - theta) * w
    out[corner] += theta
    return out


def _active_set_qp(
    two_cov: np.ndarray, mu: np.ndarray, target: float, w0: np.ndarray
) -> np.ndarray:
    n = mu.size
    w = w0.copy()
    active = w <= 0.0
    w[active] = 0.0
    tol_mult = 1e-10 * max(1.0, float(np.max(np.abs(two_cov))))
    max_iter = 4 * n + 40
    for _ in range(max_iter):
        free = np.nonzero(~active)[0]
        if free.size == 0:
            raise NumericalFailure("working set removed every asset")
        w_free, a_hat, b_hat = _kkt_solve(two_cov, mu, free, target)
        w_star = np.zeros(n)
        w_star[free] = w_free
        step = w_star - w
        if np.max(np.abs(step)) <= 1e-13:
            eta = two_cov @ w + a_hat * mu + b_hat
            held = np.nonzero(active)[0]
            if held.size == 0 or float(np.min(eta[held])) >= -tol_mult:
                return w
            active[held[np.argmin(eta[held])]] = False
            continue
        alpha = 1.0
        block = -1
        shrinking = free[step[free] < 0.0]
        if shrinking.size:
            ratios = -w[shrinking] / step[shrinking]
            j = int(np.argmin(ratios))
            if ratios[j] < 1.0:
                alpha = max(float(ratios[j]), 0.0)
                block = int(shrinking[j])
        w = w + alpha * step
        if block >= 0:
            w[block] = 0.0
            active[block] = True
        np.clip(w, 0.0, None, out=w)
    raise NumericalFailure(f"active-set method did not converge in {max_iter} iterations")


def min_variance_weights(
    p: PortfolioProblem, target_mu: float, start: np.ndarray | None = None
) -> WeightVector:
    """Minimum-variance long-only weights at the given target return.

    ``start`` may carry a feasible warm-start point (used by frontier
    sweeps); it is shifted onto the new target before solving.
    """
    lo, hi = float(np.min(p.mu)), float(np.max(p.mu))
    slack = 1e-12 * max(1.0, hi - lo)
    if target_mu < lo - slack or target_mu > hi + slack:
        raise InfeasibleTarget(
            f"target {target_mu!r} outside attainable range [{lo!r}, {hi!r}]"
        )
    target = min(max(float(target_mu), lo), hi)
    w0 = None
    if start is not None:
        w0 = _shift_to_target(np.asarray(start, dtype=float), p.mu, target)
    if w0 is None:
        w0 = _feasible_start(p.mu, target)
    w = _active_set_qp(p._two_cov_solver, p.mu, target, w0)
    return WeightVector(weights=w)


@dataclass(frozen=True)
class FrontierPoint:
    target_mu: float
    achieved_sigma: float
    weights: WeightVector
    entropy: float


@dataclass(frozen=True)
class Frontier:
    """Frontier points ordered by strictly increasing target return."""

    points: tuple[FrontierPoint, ...]
    problem_label: str

    def __post_init__(self) -> None:
        targets = [pt.target_mu for pt in self.points]
        if any(a >= b for a, b in zip(targets, targets[1:])):
            raise DomainError("frontier targets must be strictly increasing")

    @property
    def targets(self) -> np.ndarray:
        return np.array([pt.target_mu for pt in self.points])

    @property
    def sigmas(self) -> np.ndarray:
        return np.array([pt.achieved_sigma for pt in self.points])

    @property
    def entropies(self) -> np.ndarray:
        return np.array([pt.entropy for pt in self.points])


def _frontier_point(p: PortfolioProblem, target: float, w: WeightVector) -> FrontierPoint:
    return FrontierPoint(
        target_mu=float(target),
        achieved_sigma=float(np.sqrt(portfolio_variance(p, w))),
        weights=w,
        entropy=weight_entropy(w),
    )


def efficient_frontier(p: PortfolioProblem, n_points: int = 100) -> Frontier:
    """Sweep evenly spaced targets over the attainable return range.

    Targets sit on [min mu + eps, max mu - eps] with eps = 1e-9 of the
    range; a degenerate range (N = 1 or identical means) collapses to a
    single point.
    """
    if n_points < 2:
        raise DomainError(f"n_points must be >= 2, got {n_points}")
    lo, hi = float(np.min(p.mu)), float(np.max(p.mu))
    if hi - lo <= 0:
        w = min_variance_weights(p, lo)
        return Frontier(points=(_frontier_point(p, lo, w),), problem_label=p.corr.label)
    eps = 1e-9 * (hi - lo)
    targets = np.linspace(lo + eps, hi - eps, n_points)
    points = []
    prev: np.ndarray | None = None
    for target in targets:
        w = min_variance_weights(p, float(target), start=prev)
        prev = w.weights
        points.append(_frontier_point(p, float(target), w))
    return Frontier(points=tuple(points), problem_label=p.corr.label)


def save_frontier_csv(
    f: Frontier,
    path: str,
    assets: tuple[str, ...] | None = None,
    include_weights: bool = True,
    comment: str | None = None,
) -> None:
    """Frontier CSV: target_mu, achieved_sigma, entropy, then weight columns."""
    n = f.points[0].weights.n if f.points else 0
    labels = assets if assets is not None else tuple(str(i) for i in range(n))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if comment is not None:
            fh.write(f"# {comment}\n")
        writer = csv.writer(fh)
        header = ["target_mu", "achieved_sigma", "entropy"]
        if include_weights:
            header += [f"w_{a}" for a in labels]
        writer.writerow(header)
        for pt in f.points:
            row = [repr(pt.target_mu), repr(pt.achieved_sigma), repr(pt.entropy)]
            if include_weights:
                row += [repr(float(v)) for v in pt.weights.weights]
            writer.writerow(row)
