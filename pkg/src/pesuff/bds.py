"""BDS independence test and the log-transform failure experiment.

The BDS statistic compares the ``M``-history correlation integral with the
``M``-th power of its one-dimensional counterpart; under iid data it is
asymptotically standard normal.  The experiment couples a deliberately
under-persistent GARCH predictor with (a) the BDS test on log-transformed
squared standardized residuals, which loses the remaining structure, and
(b) the ordinal sufficiency test on the additive residuals, which keeps it.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from . import rng
from .dgp import DgpKind, DgpSpec, simulate
from .errors import InvalidArgumentError
from .inference import BootstrapConfig, IndependenceCalibration
from .sufftest import SufficiencyVerdict, run_sufficiency_test

__all__ = [
    "BdsConfig",
    "BdsTable",
    "correlation_integral",
    "bds_statistic",
    "bds_table",
    "appendix_experiment",
    "AppendixResult",
    "INADEQUATE_GARCH_PARAMS",
]

# Truth (alpha0, alpha1, beta1) = (0.18, 0.16, 0.74); the inadequate
# predictor keeps the long-run mean but underestimates the persistence
# split, so its conditional-mean path misses most of the dynamics.
INADEQUATE_GARCH_PARAMS = {"alpha0": 0.18, "alpha1": 0.03, "beta1": 0.87}

_CHUNK_ROWS = 512


@dataclass(frozen=True)
class BdsConfig:
    """Grid of embedding dimensions and radius multipliers."""

    dims: tuple[int, ...] = tuple(range(2, 11))
    r_multipliers: tuple[float, ...] = (0.25, 0.5, 0.75, 1.0, 1.25)

    def __post_init__(self):
        if any(m < 2 for m in self.dims):
            raise InvalidArgumentError("every embedding dimension must be >= 2")
        if any(r <= 0 for r in self.r_multipliers):
            raise InvalidArgumentError("radius multipliers must be positive")


@dataclass(frozen=True)
class BdsTable:
    """BDS statistics on a (dimension x radius-multiplier) grid."""

    dims: tuple[int, ...]
    r_multipliers: tuple[float, ...]
    statistics: np.ndarray  # shape (len(dims), len(r_multipliers))
    n: int
    scale: float  # the series standard deviation the multipliers refer to

    def cell(self, m: int, multiplier: float) -> float:
        return float(self.statistics[self.dims.index(m), self.r_multipliers.index(multiplier)])

    def significance(self, level: float = 0.05) -> np.ndarray:
        from scipy.stats import norm

        return np.abs(self.statistics) > norm.ppf(1 - level / 2)

    def fraction_insignificant(self, level: float = 0.05) -> float:
        flags = self.significance(level)
        return 1.0 - flags.sum() / flags.size

    def write_csv(self, path) -> None:
        """One row per dimension, one column per radius multiplier, with stars."""
        sig5 = self.significance(0.05)
        sig1 = self.significance(0.01)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["M"] + [f"{r}sd" for r in self.r_multipliers])
            for i, m in enumerate(self.dims):
                row = [str(m)]
                for j in range(len(self.r_multipliers)):
                    stars = "**" if sig1[i, j] else ("*" if sig5[i, j] else "")
                    row.append(f"{self.statistics[i, j]:.4f}{stars}")
                writer.writerow(row)


def _indicator_matrix(x: np.ndarray, r: float) -> np.ndarray:
    n = x.size
    out = np.empty((n, n), dtype=bool)
    for lo in range(0, n, _CHUNK_ROWS):
        hi = min(lo + _CHUNK_ROWS, n)
        out[lo:hi] = np.abs(x[lo:hi, None] - x[None, :]) <= r
    return out


def _pair_fraction(mat: np.ndarray) -> float:
    n = mat.shape[0]
    return (int(mat.sum()) - n) / (n * (n - 1))


def _triple_term(mat: np.ndarray) -> float:
    n = mat.shape[0]
    c = mat.sum(axis=1).astype(np.float64) - 1.0
    return float((c * (c - 1.0)).sum()) / (n * (n - 1) * (n - 2))


def _variance(c1: float, k: float, m: int) -> float:
    tail = sum(k ** (m - j) * c1 ** (2 * j) for j in range(1, m))
    return 4.0 * (k**m + 2.0 * tail + (m - 1) ** 2 * c1 ** (2 * m) - m**2 * k * c1 ** (2 * m - 2))


def correlation_integral(series, m: int, r: float) -> float:
    """Fraction of m-history pairs within sup-norm distance ``r``."""
    x = np.asarray(series, dtype=np.float64)
    if m < 1:
        raise InvalidArgumentError("embedding dimension must be >= 1")
    if r <= 0:
        raise InvalidArgumentError("radius must be positive")
    if x.size < m + 1:
        raise InvalidArgumentError("series too short for this embedding dimension")
    mat = _indicator_matrix(x, r)
    prod = mat.copy()
    for k in range(1, m):
        sub = mat[k:, k:]
        prod = prod[: sub.shape[0], : sub.shape[0]] & sub
    return _pair_fraction(prod)


def _stats_for_radius(x: np.ndarray, r: float, dims: tuple[int, ...]) -> dict[int, float]:
    n = x.size
    mat = _indicator_matrix(x, r)
    c1_full = _pair_fraction(mat)
    k_full = _triple_term(mat)
    max_m = max(dims)
    stats = {}
    prod = mat.copy()
    for m in range(2, max_m + 1):
        sub = mat[m - 1:, m - 1:]
        prod = prod[: sub.shape[0], : sub.shape[0]] & sub
        if m in dims:
            c_m = _pair_fraction(prod)
            c1_m = _pair_fraction(sub)  # C_1 on the same n - m + 1 observations
            sigma2 = _variance(c1_full, k_full, m)
            stats[m] = float(np.sqrt(n) * (c_m - c1_m**m) / np.sqrt(sigma2))
    return stats


def bds_statistic(series, m: int, r: float) -> float:
    """BDS statistic ``sqrt(N) * (C_M(r) - C_1(r)^M) / sigma_M(r)``.

    ``C_1`` in the numerator is computed on the ``N - M + 1`` observations
    that enter the M-histories; the variance uses the standard consistent
    estimator built from the full-sample correlation integral and triple
    term.
    """
    x = np.asarray(series, dtype=np.float64)
    if m < 2:
        raise InvalidArgumentError("BDS embedding dimension must be >= 2")
    if r <= 0:
        raise InvalidArgumentError("radius must be positive")
    if x.size <= m + 10:
        raise InvalidArgumentError(f"series too short (N={x.size}) for M={m}")
    return _stats_for_radius(x, r, (m,))[m]


def bds_table(series, config: BdsConfig | None = None) -> BdsTable:
    """BDS statistics over the whole (M, r-multiplier) grid."""
    x = np.asarray(series, dtype=np.float64)
    if config is None:
        config = BdsConfig()
    if x.size <= max(config.dims) + 10:
        raise InvalidArgumentError("series too short for the largest embedding dimension")
    scale = float(np.std(x, ddof=1))
    stats = np.empty((len(config.dims), len(config.r_multipliers)))
    for j, mult in enumerate(config.r_multipliers):
        per_m = _stats_for_radius(x, mult * scale, tuple(config.dims))
        for i, m in enumerate(config.dims):
            stats[i, j] = per_m[m]
    return BdsTable(
        dims=tuple(config.dims),
        r_multipliers=tuple(config.r_multipliers),
        statistics=stats,
        n=x.size,
        scale=scale,
    )


def inadequate_predictor_path(observations: np.ndarray, params: dict | None = None) -> np.ndarray:
    """Conditional-mean path of the under-persistent GARCH recursion, driven by the data."""
    if params is None:
        params = INADEQUATE_GARCH_PARAMS
    a0, a1, b1 = params["alpha0"], params["alpha1"], params["beta1"]
    y = np.asarray(observations, dtype=np.float64)
    s0 = a0 / (1.0 - a1 - b1)
    driver = a0 + a1 * y[:-1]
    rest, _ = lfilter([1.0], [1.0, -b1], driver, zi=np.array([b1 * s0]))
    return np.concatenate(([s0], rest))


@dataclass(frozen=True)
class AppendixResult:
    bds: BdsTable
    verdict: SufficiencyVerdict
    seed: int


def appendix_experiment(
    seed: int,
    calib: IndependenceCalibration,
    bcfg: BootstrapConfig | None = None,
    replications: int = 500,
    bds_config: BdsConfig | None = None,
) -> AppendixResult:
    """Simulate the squared-return series, degrade the predictor, test both ways.

    The BDS grid runs on ``ln(y / yhat)`` (log squared standardized
    residuals); the ordinal sufficiency test runs on the additive
    residuals ``y - yhat`` of the same predictor.
    """
    if bcfg is None:
        bcfg = BootstrapConfig()
    spec = DgpSpec(DgpKind.GARCH_SQ, length=calib.series_length, seed=rng.child_seed(seed, "path"))
    path = simulate(spec)
    y = path.observations
    yhat = inadequate_predictor_path(y)
    table = bds_table(np.log(y / yhat), bds_config)
    verdict = run_sufficiency_test(
        y, yhat, calib.cfg, calib, bcfg, replications, seed=rng.child_seed(seed, "pe-test")
    )
    return AppendixResult(bds=table, verdict=verdict, seed=seed)
