"""Correlation spectra, random-matrix filtering, and long-only frontier analysis.

The library mirrors a pipeline: build or load a return panel, estimate its
correlation matrix, split the spectrum into a noise band and deviating
modes, regress eigenportfolios on a market index, sweep the long-only
mean-variance frontier for each matrix variant, and fit the power-law decay
of weight entropy against portfolio risk.
"""

__version__ = "0.1.0"

from .correlation import (
    CorrelationMatrix,
    Histogram,
    OffDiagonalStats,
    correlation,
    offdiag_histogram,
    offdiag_stats,
    offdiag_values,
    rolling_mean_correlation,
)
from .errors import (
    AlignmentError,
    ConfigError,
    ConvergenceError,
    DegenerateAbscissa,
    DegenerateSeries,
    DomainError,
    InfeasibleTarget,
    InsufficientPoints,
    NumericalFailure,
    ParseError,
    RmtportError,
    ShapeError,
)
from .factor import RegressionResult, beta_profile, eigenportfolio_series, ols_beta
from .markowitz import (
    Frontier,
    FrontierPoint,
    PortfolioProblem,
    WeightVector,
    efficient_frontier,
    min_variance_weights,
    portfolio_return,
    portfolio_variance,
    weight_entropy,
)
from .panel import (
    MarketSeries,
    PricePanel,
    ReturnPanel,
    load_csv,
    load_market_csv,
    log_returns,
    simple_returns,
    standardize,
    synth_iid,
    synth_one_factor,
    windows,
)
from .rmt import (
    MarchenkoPasturLaw,
    RmtPartition,
    SpectralDecomposition,
    eigendecompose,
    mp_bounds,
    mp_density,
    partition,
    ratio_to_bound,
    restore_unit_diagonal,
    spectrum_histogram,
    variant_matrix,
)
from .scaling import (
    ExponentSeries,
    PowerLawFit,
    entropy_vs_return,
    fit_power_law,
    frontier_fit,
    rolling_exponents,
)

__all__ = [
    "__version__",
    # panel
    "PricePanel",
    "ReturnPanel",
    "MarketSeries",
    "load_csv",
    "load_market_csv",
    "log_returns",
    "simple_returns",
    "standardize",
    "windows",
    "synth_iid",
    "synth_one_factor",
    # correlation
    "CorrelationMatrix",
    "OffDiagonalStats",
    "Histogram",
    "correlation",
    "offdiag_values",
    "offdiag_stats",
    "offdiag_histogram",
    "rolling_mean_correlation",
    # rmt
    "MarchenkoPasturLaw",
    "SpectralDecomposition",
    "RmtPartition",
    "mp_bounds",
    "mp_density",
    "eigendecompose",
    "partition",
    "ratio_to_bound",
    "restore_unit_diagonal",
    "variant_matrix",
    "spectrum_histogram",
    # factor
    "RegressionResult",
    "eigenportfolio_series",
    "ols_beta",
    "beta_profile",
    # markowitz
    "PortfolioProblem",
    "WeightVector",
    "FrontierPoint",
    "Frontier",
    "portfolio_variance",
    "portfolio_return",
    "min_variance_weights",
    "efficient_frontier",
    "weight_entropy",
    # scaling
    "PowerLawFit",
    "ExponentSeries",
    "fit_power_law",
    "frontier_fit",
    "entropy_vs_return",
    "rolling_exponents",
    # errors
    "RmtportError",
    "ParseError",
    "ShapeError",
    "DomainError",
    "DegenerateSeries",
    "ConvergenceError",
    "InfeasibleTarget",
    "NumericalFailure",
    "InsufficientPoints",
    "DegenerateAbscissa",
    "AlignmentError",
    "ConfigError",
]
