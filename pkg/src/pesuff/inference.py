"""Critical-value calibration for the K statistics.

Two calibrations back the sufficiency test:

* a Monte Carlo independence threshold: the K statistic computed on many
  simulated independent iid pairs, summarised as the mean of per-batch
  95th percentiles;
* a moving-block bootstrap threshold for the difference
  ``K(x, resid) - K(resid, resid)``, used once the cross statistic is
  significant.  Replicates are centred on their bootstrap mean before the
  upper quantile is taken; every report carries that centring choice.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import ks_2samp

from . import rng
from .dependence import draw_index_matrix, k_self, k_statistic, k_value_fast
from .dgp import DgpSpec, simulate
from .errors import InvalidArgumentError
from .ordinal import SegmentConfig, count_mixed_segments

__all__ = [
    "IndependenceCalibration",
    "BootstrapConfig",
    "DifferenceBootstrap",
    "SensitivityReport",
    "calibrate_independence",
    "block_bootstrap_difference",
    "block_length_sensitivity",
]

_MARGINALS = {
    "normal": lambda g, n: g.normal(size=n),
    "uniform": lambda g, n: g.uniform(size=n),
    "exponential": lambda g, n: g.exponential(size=n),
}

_FIXTURE_VERSION = 1


@dataclass(frozen=True)
class IndependenceCalibration:
    """Critical value of K under independence for one (d, tau, N, R)."""

    cfg: SegmentConfig
    series_length: int
    paths: int
    quantile: float
    replications: int
    seed: int
    critical_value: float
    batch_quantiles: np.ndarray
    k_values: np.ndarray
    distribution: str = "normal"
    quick_warning: str | None = None

    def critical_value_at(self, quantile: float) -> float:
        """Re-summarise the stored K draws at another quantile."""
        batches = np.array_split(self.k_values, len(self.batch_quantiles))
        return float(np.mean([np.quantile(b, quantile) for b in batches]))

    def to_payload(self) -> dict:
        return {
            "version": _FIXTURE_VERSION,
            "d": self.cfg.d,
            "tau": self.cfg.tau,
            "series_length": self.series_length,
            "paths": self.paths,
            "quantile": self.quantile,
            "replications": self.replications,
            "seed": self.seed,
            "distribution": self.distribution,
            "critical_value": self.critical_value,
            "batch_quantiles": [float(v) for v in self.batch_quantiles],
            "k_values": [float(v) for v in self.k_values],
            "quick_warning": self.quick_warning,
        }

    @property
    def fixture_id(self) -> str:
        canonical = json.dumps(self.to_payload(), sort_keys=True).encode()
        return hashlib.sha256(canonical).hexdigest()[:16]

    def save(self, path) -> None:
        payload = self.to_payload()
        payload["fixture_id"] = self.fixture_id
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "IndependenceCalibration":
        with open(path) as fh:
            payload = json.load(fh)
        if payload.get("version") != _FIXTURE_VERSION:
            raise InvalidArgumentError(f"unsupported calibration fixture version in {path}")
        cfg = SegmentConfig(payload["d"], payload["tau"], allow_d2=payload["d"] == 2)
        return cls(
            cfg=cfg,
            series_length=payload["series_length"],
            paths=payload["paths"],
            quantile=payload["quantile"],
            replications=payload["replications"],
            seed=payload["seed"],
            critical_value=payload["critical_value"],
            batch_quantiles=np.asarray(payload["batch_quantiles"]),
            k_values=np.asarray(payload["k_values"]),
            distribution=payload["distribution"],
            quick_warning=payload.get("quick_warning"),
        )


def _independence_k(args) -> float:
    cfg, n, replications, distribution, data_seed, k_seed = args
    g = np.random.default_rng(data_seed)
    draw = _MARGINALS[distribution]
    x = draw(g, n)
    y = draw(g, n)
    return k_statistic(x, y, cfg, replications, seed=k_seed).k_value


def calibrate_independence(
    cfg: SegmentConfig,
    n: int,
    paths: int = 1000,
    seed: int = 0,
    quantile: float = 0.95,
    batches: int = 10,
    replications: int = 500,
    distribution: str = "normal",
    n_jobs: int = 1,
    quick_warning: str | None = None,
) -> IndependenceCalibration:
    """Monte Carlo critical value of K on independent iid pairs.

    Simulates ``paths`` pairs of length ``n``, computes K on each, splits
    the draws into ``batches`` batches and returns the mean of per-batch
    ``quantile`` quantiles.  Deterministic given ``seed`` regardless of
    ``n_jobs``.
    """
    if paths < 100:
        raise InvalidArgumentError(f"need at least 100 paths, got {paths}")
    if not 0 < quantile < 1:
        raise InvalidArgumentError("quantile must lie strictly between 0 and 1")
    if distribution not in _MARGINALS:
        raise InvalidArgumentError(f"unknown marginal: {distribution!r}")
    cfg.validate_series_length(n)
    jobs = [
        (
            cfg,
            n,
            replications,
            distribution,
            rng.child_seed(seed, f"path/{i}/data"),
            rng.child_seed(seed, f"path/{i}/k"),
        )
        for i in range(paths)
    ]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            k_values = np.fromiter(pool.map(_independence_k, jobs, chunksize=16), dtype=float, count=paths)
    else:
        k_values = np.fromiter(map(_independence_k, jobs), dtype=float, count=paths)
    # keep at least ~50 draws per batch so the per-batch quantile is usable
    batches = max(1, min(batches, paths // 50))
    batch_quantiles = np.array([np.quantile(b, quantile) for b in np.array_split(k_values, batches)])
    return IndependenceCalibration(
        cfg=cfg,
        series_length=n,
        paths=paths,
        quantile=quantile,
        replications=replications,
        seed=seed,
        critical_value=float(batch_quantiles.mean()),
        batch_quantiles=batch_quantiles,
        k_values=k_values,
        distribution=distribution,
        quick_warning=quick_warning,
    )


@dataclass(frozen=True)
class BootstrapConfig:
    """Moving-block bootstrap settings for the difference statistic."""

    block_length: int = 20
    replications: int = 500
    quantile: float = 0.95
    seed: int = 0

    def __post_init__(self):
        if self.block_length < 1:
            raise InvalidArgumentError("block length must be >= 1")
        if self.replications < 2:
            raise InvalidArgumentError("need at least 2 bootstrap replications")
        if not 0 < self.quantile < 1:
            raise InvalidArgumentError("quantile must lie strictly between 0 and 1")


@dataclass(frozen=True)
class DifferenceBootstrap:
    """Centred bootstrap critical value for K(x, resid) - K(resid, resid)."""

    critical_value: float
    replicate_values: np.ndarray
    block_length: int
    replications: int
    quantile: float
    block_seed: int
    ensemble_seed: int
    centered: bool = True


def _block_resample_indices(n: int, block_length: int, g: np.random.Generator) -> np.ndarray:
    n_blocks = -(-n // block_length)
    starts = g.integers(0, n - block_length + 1, size=n_blocks)
    idx = (starts[:, None] + np.arange(block_length)[None, :]).ravel()
    return idx[:n]


def block_bootstrap_difference(
    x,
    residuals,
    cfg: SegmentConfig,
    bcfg: BootstrapConfig,
    replications: int = 500,
    seed: int | None = None,
    ensemble_seed: int | None = None,
) -> DifferenceBootstrap:
    """Bootstrap critical value for the cross-minus-self K difference.

    Aligned ``(x_t, residual_t)`` pairs are resampled jointly in
    overlapping moving blocks (dependence within blocks preserved), the
    difference statistic is recomputed on every resample, and the
    ``bcfg.quantile`` upper quantile of the mean-centred replicates is
    returned.

    One surrogate index matrix, drawn from ``ensemble_seed``, is shared by
    both statistics and all replicates so that replicate-to-replicate
    variation reflects the data resampling rather than surrogate noise.
    """
    x = np.asarray(x, dtype=np.float64)
    residuals = np.asarray(residuals, dtype=np.float64)
    if x.shape != residuals.shape:
        raise InvalidArgumentError("x and residuals must have equal length")
    n = x.size
    if bcfg.block_length > n:
        raise InvalidArgumentError(f"block length {bcfg.block_length} exceeds series length {n}")
    if seed is None:
        seed = bcfg.seed
    if ensemble_seed is None:
        ensemble_seed = rng.child_seed(seed, "ensemble")
    n_seg = count_mixed_segments(n, cfg)
    ens_idx = draw_index_matrix(n, n_seg, replications, ensemble_seed)
    diffs = np.empty(bcfg.replications)
    for b in range(bcfg.replications):
        g = rng.generator(seed, f"block/{b}")
        take = _block_resample_indices(n, bcfg.block_length, g)
        xb = x[take]
        eb = residuals[take]
        diffs[b] = k_value_fast(xb, eb, cfg, ens_idx) - k_value_fast(eb, eb, cfg, ens_idx)
    if np.ptp(diffs) == 0.0:
        centered = np.zeros_like(diffs)  # degenerate at the observed value
    else:
        centered = diffs - diffs.mean()
    return DifferenceBootstrap(
        critical_value=float(np.quantile(centered, bcfg.quantile)),
        replicate_values=diffs,
        block_length=bcfg.block_length,
        replications=bcfg.replications,
        quantile=bcfg.quantile,
        block_seed=seed,
        ensemble_seed=ensemble_seed,
    )


@dataclass(frozen=True)
class SensitivityReport:
    """Kolmogorov-Smirnov distances of bootstrap vs fresh-simulation K distributions."""

    rows: list[dict]
    paths: int
    bootstrap_replications: int
    seed: int

    def distance(self, block_length: int) -> float:
        for row in self.rows:
            if row["block_length"] == block_length:
                return row["ks_distance"]
        raise KeyError(block_length)


def _self_k_of_fresh_path(args) -> float:
    spec, cfg, replications, k_seed = args
    path = simulate(spec)
    return k_self(path.innovations, cfg, replications, seed=k_seed).k_value


def reference_k_sample(
    innovation_spec: DgpSpec,
    cfg: SegmentConfig,
    paths: int = 500,
    replications: int = 200,
    seed: int = 0,
    n_jobs: int = 1,
) -> np.ndarray:
    """K(resid, resid) draws over fresh innovation realizations (the truth sample)."""
    jobs = [
        (
            replace(innovation_spec, seed=rng.child_seed(seed, f"truth/{i}")),
            cfg,
            replications,
            rng.child_seed(seed, f"truth/{i}/k"),
        )
        for i in range(paths)
    ]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            return np.fromiter(pool.map(_self_k_of_fresh_path, jobs, chunksize=8), dtype=float, count=paths)
    return np.fromiter(map(_self_k_of_fresh_path, jobs), dtype=float, count=paths)


def block_length_sensitivity(
    innovation_spec: DgpSpec,
    lengths: Sequence[int],
    paths: int = 500,
    seed: int = 0,
    cfg: SegmentConfig | None = None,
    replications: int = 200,
    bootstrap_replications: int = 200,
    reference_sample: np.ndarray | None = None,
) -> SensitivityReport:
    """Compare bootstrap K-distributions against fresh-simulation truth.

    One innovation realization is block-bootstrap resampled at each
    candidate block length; the distribution of the self-K statistic over
    resamples is compared (KS distance) with its distribution over
    ``paths`` fresh realizations.  Smaller distances mean the block length
    preserves enough of the temporal dependence.
    """
    lengths = list(lengths)
    if not lengths:
        raise InvalidArgumentError("need at least one block length")
    if cfg is None:
        cfg = SegmentConfig(4, 1)
    if reference_sample is None:
        reference_sample = reference_k_sample(innovation_spec, cfg, paths, replications, seed)
    realization = simulate(replace(innovation_spec, seed=rng.child_seed(seed, "realization"))).innovations
    n = realization.size
    rows = []
    for length in lengths:
        if length > n:
            raise InvalidArgumentError(f"block length {length} exceeds series length {n}")
        boot = np.empty(bootstrap_replications)
        for b in range(bootstrap_replications):
            g = rng.generator(seed, f"block/{length}/{b}")
            take = _block_resample_indices(n, length, g)
            eb = realization[take]
            # fresh surrogate draws per resample: the compared object is the
            # raw K distribution, so its noise composition must match the
            # fresh-simulation reference
            boot[b] = k_self(eb, cfg, replications, seed=rng.child_seed(seed, f"block/{length}/{b}/ens")).k_value
        rows.append(
            {
                "block_length": int(length),
                "ks_distance": float(ks_2samp(reference_sample, boot).statistic),
            }
        )
    return SensitivityReport(
        rows=rows,
        paths=len(reference_sample),
        bootstrap_replications=bootstrap_replications,
        seed=seed,
    )
