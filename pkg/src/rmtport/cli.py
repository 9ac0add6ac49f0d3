"""Pipeline command line: corr, spectrum, beta, frontier, scan.

Runs are driven by a flat key=value config file with CLI-flag overrides;
every output CSV carries a provenance comment (config hash + tool version)
and each invocation writes a machine-readable run summary JSON. Identical
config and seed produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .correlation import (
    correlation,
    offdiag_histogram,
    offdiag_stats,
    rolling_mean_correlation,
    save_histogram_csv,
    save_matrix_csv,
)
from .errors import AlignmentError, ConfigError, RmtportError
from .factor import beta_profile, save_beta_profile_csv
from .markowitz import PortfolioProblem, efficient_frontier, save_frontier_csv
from .panel import (
    LAYOUT_ROWS_ARE_ASSETS,
    LAYOUT_ROWS_ARE_DATES,
    MarketSeries,
    ReturnPanel,
    load_csv,
    load_market_csv,
    log_returns,
    simple_returns,
    synth_iid,
    synth_one_factor,
)
from .rmt import (
    VARIANTS,
    eigendecompose,
    mp_bounds,
    partition,
    ratio_to_bound,
    save_spectrum_csv,
    save_spectrum_histogram_csv,
    spectrum_histogram,
    variant_matrix,
)
from .scaling import (
    entropy_vs_return,
    frontier_fit,
    rolling_exponents,
    save_exponents_csv,
)

_DEFAULTS: dict[str, str] = {
    "input": "",
    "layout": LAYOUT_ROWS_ARE_DATES,
    "synthetic": "",
    "market": "",
    "return_type": "log",
    "window_length": "",
    "window_step": "",
    "corr_variant": "original",
    "diagonal_repair": "true",
    "frontier_points": "100",
    "frontier_include_weights": "true",
    "fit_branch": "upper",
    "fit_sigma_min": "",
    "fit_sigma_max": "",
    "entropy_floor": "1e-12",
    "hist_bins": "50",
    "hist_min": "-1.0",
    "hist_max": "1.0",
    "out_dir": "out",
    "seed": "0",
}

# Window defaults differ by command: whole-sample correlation scans use the
# short window, exponent scans the long one.
_WINDOW_DEFAULTS = {"corr": (250, 21), "scan": (500, 20)}


def _parse_bool(key: str, raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {raw!r}")


def _parse_int(key: str, raw: str, minimum: int | None = None) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
    if minimum is not None and value < minimum:
        raise ConfigError(f"{key}: must be >= {minimum}, got {value}")
    return value


def _parse_float(key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from None


def _parse_synth_spec(spec: str) -> tuple[str, dict[str, float]]:
    kind, _, rest = spec.partition(":")
    kind = kind.strip()
    if kind not in ("iid", "onefactor"):
        raise ConfigError(f"synthetic: unknown generator {kind!r}")
    params: dict[str, str] = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"synthetic: malformed parameter {item!r}")
        params[key.strip()] = value.strip()
    allowed = {"iid": {"n", "l"}, "onefactor": {"n", "l", "beta_min", "beta_max", "noise_sd"}}
    unknown = set(params) - allowed[kind]
    if unknown:
        raise ConfigError(f"synthetic: unknown parameter {sorted(unknown)[0]!r}")
    out: dict[str, float] = {
        "n": _parse_int("synthetic.n", params.get("n", "100"), minimum=2),
        "l": _parse_int("synthetic.l", params.get("l", "500"), minimum=2),
    }
    if kind == "onefactor":
        out["beta_min"] = _parse_float("synthetic.beta_min", params.get("beta_min", "0.5"))
        out["beta_max"] = _parse_float("synthetic.beta_max", params.get("beta_max", "1.5"))
        out["noise_sd"] = _parse_float("synthetic.noise_sd", params.get("noise_sd", "1.0"))
        if not 0 < out["beta_min"] <= out["beta_max"]:
            raise ConfigError("synthetic: need 0 < beta_min <= beta_max")
        if out["noise_sd"] < 0:
            raise ConfigError("synthetic: noise_sd must be nonnegative")
    return kind, out


@dataclass(frozen=True)
class RunConfig:
    """Resolved, validated run configuration."""

    raw: dict[str, str]
    input: str
    layout: str
    synthetic: str
    market: str
    return_type: str
    window_length: int | None
    window_step: int | None
    corr_variants: tuple[str, ...]
    diagonal_repair: bool
    frontier_points: int
    frontier_include_weights: bool
    fit_branch: str
    fit_sigma_min: float | None
    fit_sigma_max: float | None
    entropy_floor: float
    hist_bins: int
    hist_min: float
    hist_max: float
    out_dir: str
    seed: int

    @property
    def config_hash(self) -> str:
        canon = "\n".join(f"{k}={self.raw[k]}" for k in sorted(self.raw))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]

    def window_for(self, command: str, panel_l: int) -> tuple[int, int]:
        """Window length/step: explicit values, else command defaults capped at L."""
        default_length, default_step = _WINDOW_DEFAULTS[command]
        length = self.window_length if self.window_length is not None else min(default_length, panel_l)
        step = self.window_step if self.window_step is not None else default_step
        if length > panel_l:
            raise ConfigError(f"window_length {length} exceeds panel length {panel_l}")
        return length, step


def _read_config_file(path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {line!r}")
        out[key.strip()] = value.strip()
    return out


def resolve_config(args: argparse.Namespace) -> RunConfig:
    raw = dict(_DEFAULTS)
    if args.config:
        if not Path(args.config).is_file():
            raise ConfigError(f"config file not found: {args.config}")
        for key, value in _read_config_file(args.config).items():
            if key not in _DEFAULTS:
                raise ConfigError(f"unknown config key {key!r}")
            raw[key] = value
    for key in ("input", "synthetic", "market", "out_dir", "seed"):
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = str(value)

    layout = raw["layout"]
    if layout not in (LAYOUT_ROWS_ARE_DATES, LAYOUT_ROWS_ARE_ASSETS):
        raise ConfigError(f"layout: expected rows-are-dates or rows-are-assets, got {layout!r}")
    return_type = raw["return_type"]
    if return_type not in ("log", "simple"):
        raise ConfigError(f"return_type: expected log or simple, got {return_type!r}")
    fit_branch = raw["fit_branch"]
    if fit_branch not in ("upper", "all"):
        raise ConfigError(f"fit_branch: expected upper or all, got {fit_branch!r}")
    variants = tuple(v.strip() for v in raw["corr_variant"].split(",") if v.strip())
    if not variants:
        raise ConfigError("corr_variant: at least one variant required")
    for v in variants:
        if v not in VARIANTS:
            raise ConfigError(f"corr_variant: unknown variant {v!r} (choose from {VARIANTS})")
    if raw["synthetic"]:
        _parse_synth_spec(raw["synthetic"])  # validated here, generated later
    hist_min = _parse_float("hist_min", raw["hist_min"])
    hist_max = _parse_float("hist_max", raw["hist_max"])
    if not hist_min < hist_max:
        raise ConfigError(f"hist range: need hist_min < hist_max, got ({hist_min}, {hist_max})")
    fit_lo = _parse_float("fit_sigma_min", raw["fit_sigma_min"]) if raw["fit_sigma_min"] else None
    fit_hi = _parse_float("fit_sigma_max", raw["fit_sigma_max"]) if raw["fit_sigma_max"] else None
    if fit_lo is not None and fit_hi is not None and not fit_lo < fit_hi:
        raise ConfigError("fit sigma range: need fit_sigma_min < fit_sigma_max")
    entropy_floor = _parse_float("entropy_floor", raw["entropy_floor"])
    if entropy_floor < 0:
        raise ConfigError(f"entropy_floor: must be nonnegative, got {entropy_floor}")

    return RunConfig(
        raw=raw,
        input=raw["input"],
        layout=layout,
        synthetic=raw["synthetic"],
        market=raw["market"],
        return_type=return_type,
        window_length=_parse_int("window_length", raw["window_length"], minimum=2)
        if raw["window_length"]
        else None,
        window_step=_parse_int("window_step", raw["window_step"], minimum=1)
        if raw["window_step"]
        else None,
        corr_variants=variants,
        diagonal_repair=_parse_bool("diagonal_repair", raw["diagonal_repair"]),
        frontier_points=_parse_int("frontier_points", raw["frontier_points"], minimum=2),
        frontier_include_weights=_parse_bool(
            "frontier_include_weights", raw["frontier_include_weights"]
        ),
        fit_branch=fit_branch,
        fit_sigma_min=fit_lo,
        fit_sigma_max=fit_hi,
        entropy_floor=entropy_floor,
        hist_bins=_parse_int("hist_bins", raw["hist_bins"], minimum=1),
        hist_min=hist_min,
        hist_max=hist_max,
        out_dir=raw["out_dir"],
        seed=_parse_int("seed", raw["seed"]),
    )


def _build_panel(cfg: RunConfig) -> tuple[ReturnPanel, MarketSeries | None]:
    """Panel from the synthetic generator or from a price CSV."""
    if cfg.synthetic:
        kind, params = _parse_synth_spec(cfg.synthetic)
        if kind == "iid":
            return synth_iid(int(params["n"]), int(params["l"]), cfg.seed), None
        panel, market = synth_one_factor(
            int(params["n"]),
            int(params["l"]),
            (params["beta_min"], params["beta_max"]),
            params["noise_sd"],
            cfg.seed,
        )
        return panel, market
    if not cfg.input:
        raise ConfigError("either input or synthetic must be set")
    if not Path(cfg.input).is_file():
        raise FileNotFoundError(f"input file not found: {cfg.input}")
    prices = load_csv(cfg.input, layout=cfg.layout)
    returns = log_returns(prices) if cfg.return_type == "log" else simple_returns(prices)
    return returns, None


def _load_market(cfg: RunConfig, panel: ReturnPanel, generated: MarketSeries | None) -> MarketSeries:
    if cfg.market:
        market = load_market_csv(cfg.market)
    elif generated is not None:
        market = generated
    else:
        raise ConfigError("beta needs a market series: set market or use the onefactor generator")
    if market.times != panel.times:
        n_common = sum(a == b for a, b in zip(market.times, panel.times))
        raise AlignmentError(
            f"market timestamps do not match panel returns "
            f"({n_common}/{panel.l} aligned, market has {market.l})"
        )
    return market


class _Run:
    """Accumulates output files and summary fields for one invocation."""

    def __init__(self, command: str, cfg: RunConfig):
        self.command = command
        self.cfg = cfg
        self.out_dir = Path(cfg.out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.comment = f"config_hash={cfg.config_hash} version={__version__}"
        self.outputs: list[str] = []
        self.results: dict = {}

    def path(self, name: str) -> str:
        self.outputs.append(name)
        return str(self.out_dir / name)

    def finish(self) -> int:
        summary = {
            "command": self.command,
            "version": __version__,
            "config_hash": self.cfg.config_hash,
            "config": dict(sorted(self.cfg.raw.items())),
            "outputs": sorted(self.outputs),
            "results": self.results,
        }
        path = self.out_dir / "run_summary.json"
        path.write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n", encoding="utf-8")
        return 0


def cmd_corr(cfg: RunConfig) -> int:
    panel, _ = _build_panel(cfg)
    length, step = cfg.window_for("corr", panel.l)
    run = _Run("corr", cfg)
    c = correlation(panel)
    stats = offdiag_stats(c)
    hist = offdiag_histogram(c, cfg.hist_bins, (cfg.hist_min, cfg.hist_max))
    rolling = rolling_mean_correlation(panel, length, step)

    save_matrix_csv(c, run.path("correlation.csv"), comment=run.comment)
    save_histogram_csv(hist, run.path("offdiag_histogram.csv"), comment=run.comment)
    with open(run.path("offdiag_stats.csv"), "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# {run.comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["mean", "sd", "skewness", "count"])
        writer.writerow([repr(stats.mean), repr(stats.sd), repr(stats.skewness), stats.count])
    with open(run.path("rolling_mean.csv"), "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# {run.comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["window_start", "mean_offdiag"])
        for t, m in rolling:
            writer.writerow([t, repr(m)])
    run.results = {
        "n": panel.n,
        "l": panel.l,
        "offdiag_mean": stats.mean,
        "offdiag_sd": stats.sd,
        "offdiag_skewness": stats.skewness,
        "windows": len(rolling),
        "window_length": length,
        "window_step": step,
    }
    return run.finish()


def cmd_spectrum(cfg: RunConfig) -> int:
    panel, _ = _build_panel(cfg)
    run = _Run("spectrum", cfg)
    c = correlation(panel)
    decomp = eigendecompose(c)
    law = mp_bounds(panel.q)
    part = partition(decomp, law)
    hist = spectrum_histogram(decomp, law, cfg.hist_bins)

    # simulated baseline: largest eigenvalue of a same-shape iid panel
    iid = synth_iid(panel.n, panel.l, cfg.seed) if panel.n >= 2 else None
    simulated_max = (
        float(eigendecompose(correlation(iid)).top_eigenvalue()) if iid is not None else None
    )

    save_spectrum_csv(decomp, run.path("eigenvalues.csv"), comment=run.comment)
    save_spectrum_histogram_csv(hist, run.path("spectrum_histogram.csv"), comment=run.comment)
    save_matrix_csv(part.c_random, run.path("corr_random_band.csv"), comment=run.comment)
    save_matrix_csv(part.c_filter, run.path("corr_filtered.csv"), comment=run.comment)
    save_matrix_csv(part.c_largest, run.path("corr_largest_mode.csv"), comment=run.comment)
    run.results = {
        "n": panel.n,
        "l": panel.l,
        "q": panel.q,
        "lambda_minus": law.lambda_minus,
        "lambda_plus": law.lambda_plus,
        "max_eigenvalue": decomp.top_eigenvalue(),
        "ratio_to_bound": ratio_to_bound(decomp, law),
        "ratio_to_simulated": (
            decomp.top_eigenvalue() / simulated_max if simulated_max else None
        ),
        "simulated_max_eigenvalue": simulated_max,
        "n_deviating": len(part.deviating_indices),
        "deviating_indices": list(part.deviating_indices),
    }
    return run.finish()


def cmd_beta(cfg: RunConfig) -> int:
    panel, generated_market = _build_panel(cfg)
    market = _load_market(cfg, panel, generated_market)
    run = _Run("beta", cfg)
    c = correlation(panel)
    decomp = eigendecompose(c)
    profile = beta_profile(panel, decomp, market)
    save_beta_profile_csv(
        profile, decomp.eigenvalues, run.path("beta_profile.csv"), comment=run.comment
    )
    betas = [res.beta for _, res in profile]
    run.results = {
        "n": panel.n,
        "l": panel.l,
        "top_beta": betas[-1],
        "max_beta_index": int(np.argmax(np.abs(betas))),
        "median_abs_beta": float(np.median(np.abs(betas))),
    }
    return run.finish()


def cmd_frontier(cfg: RunConfig) -> int:
    panel, _ = _build_panel(cfg)
    run = _Run("frontier", cfg)
    mu = panel.returns.mean(axis=1)
    sigma = panel.returns.std(axis=1)
    base = correlation(panel)
    fit_rows: list[list] = []
    variant_status: dict[str, str] = {}
    sigma_range = (cfg.fit_sigma_min, cfg.fit_sigma_max)

    for variant in cfg.corr_variants:
        try:
            cvar = variant_matrix(base, panel.q, variant, diagonal_repair=cfg.diagonal_repair)
            problem = PortfolioProblem(mu=mu, sigma=sigma, corr=cvar)
            frontier = efficient_frontier(problem, n_points=cfg.frontier_points)
            save_frontier_csv(
                frontier,
                run.path(f"frontier_{variant}.csv"),
                assets=panel.assets,
                include_weights=cfg.frontier_include_weights,
                comment=run.comment,
            )
            for kind, attempt in (
                ("entropy_vs_sigma", lambda: frontier_fit(
                    frontier,
                    branch=cfg.fit_branch,
                    sigma_range=sigma_range,
                    entropy_floor=cfg.entropy_floor,
                )),
                ("entropy_vs_mu", lambda: entropy_vs_return(
                    frontier, entropy_floor=cfg.entropy_floor
                )),
            ):
                try:
                    result = attempt()
                except RmtportError as exc:
                    fit_rows.append([variant, kind, type(exc).__name__, "", "", "", "", "", "", ""])
                    continue
                fit = result if kind == "entropy_vs_sigma" else result.fit
                status = "ok" if kind == "entropy_vs_sigma" else result.status
                if fit is None:
                    fit_rows.append([variant, kind, status, "", "", "", "", "", "", ""])
                else:
                    fit_rows.append(
                        [
                            variant,
                            kind,
                            status,
                            repr(fit.gamma),
                            repr(fit.log_intercept),
                            repr(fit.r_squared),
                            fit.n_points,
                            repr(fit.sigma_range[0]),
                            repr(fit.sigma_range[1]),
                            fit.n_excluded,
                        ]
                    )
            variant_status[variant] = "ok"
        except RmtportError as exc:
            variant_status[variant] = f"{type(exc).__name__}: {exc}"

    with open(run.path("fits.csv"), "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# {run.comment}\n")
        writer = csv.writer(fh)
        writer.writerow(
            [
                "variant",
                "fit_kind",
                "status",
                "gamma",
                "log_intercept",
                "r_squared",
                "n_points",
                "sigma_min",
                "sigma_max",
                "n_excluded",
            ]
        )
        writer.writerows(fit_rows)
    run.results = {"n": panel.n, "l": panel.l, "variants": variant_status}
    return run.finish()


def cmd_scan(cfg: RunConfig) -> int:
    panel, _ = _build_panel(cfg)
    length, step = cfg.window_for("scan", panel.l)
    if len(cfg.corr_variants) != 1:
        raise ConfigError("scan uses a single corr_variant")
    run = _Run("scan", cfg)
    series = rolling_exponents(
        panel,
        window_length=length,
        step=step,
        corr_variant=cfg.corr_variants[0],
        frontier_points=cfg.frontier_points,
        branch=cfg.fit_branch,
        diagonal_repair=cfg.diagonal_repair,
        sigma_range=(cfg.fit_sigma_min, cfg.fit_sigma_max),
        entropy_floor=cfg.entropy_floor,
    )
    save_exponents_csv(series, run.path("exponents.csv"), comment=run.comment)
    ok = [e for e in series.entries if e.status == "ok"]
    run.results = {
        "n": panel.n,
        "l": panel.l,
        "window_length": length,
        "window_step": step,
        "windows": len(series.entries),
        "windows_ok": len(ok),
        "gamma_mean": float(np.mean([e.fit.gamma for e in ok])) if ok else None,
    }
    return run.finish()


_COMMANDS = {
    "corr": cmd_corr,
    "spectrum": cmd_spectrum,
    "beta": cmd_beta,
    "frontier": cmd_frontier,
    "scan": cmd_scan,
}


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value config file")
    common.add_argument("--seed", type=int, help="seed for all randomness")
    common.add_argument("--out-dir", dest="out_dir", help="output directory")
    common.add_argument("--input", help="price panel CSV")
    common.add_argument("--synthetic", help="generator spec, e.g. iid:n=100,l=500")
    common.add_argument("--market", help="market series CSV (beta)")
    parser = argparse.ArgumentParser(
        prog="rmtport",
        description="Correlation spectra, RMT filtering, and long-only frontier analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("corr", parents=[common], help="correlation matrix and its distribution")
    sub.add_parser("spectrum", parents=[common], help="eigenvalue spectrum and RMT partition")
    sub.add_parser("beta", parents=[common], help="eigenportfolio market regressions")
    sub.add_parser("frontier", parents=[common], help="long-only frontiers and entropy fits")
    sub.add_parser("scan", parents=[common], help="rolling entropy-risk exponents")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"rmtport: config error: {exc}", file=sys.stderr)
        return 2
    try:
        return _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"rmtport: config error: {exc}", file=sys.stderr)
        return 2
    except (RmtportError, OSError) as exc:
        print(f"rmtport: data error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
