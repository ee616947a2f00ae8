"""The K dependence statistic between a lag block and a delayed entry.

``k_statistic(x, y)`` measures how strongly the last ``d - 1``
observations of ``x`` predict ``y`` one ``tau``-delay ahead.  The observed
mixed-segment pattern distribution is compared against a surrogate
ensemble in which the delayed entry is replaced by an independent draw
from ``y``'s own values; K sums the squared standardised deviations over
all patterns, so K ~ 0 under independence and grows with dependence.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from . import rng
from .errors import DegenerateDataError, InvalidArgumentError
from .ordinal import (
    PatternDistribution,
    SegmentConfig,
    block_pattern_codes,
    final_insertion_ranks,
    insertion_table,
    mixed_segments,
    snap,
)

__all__ = ["SurrogateEnsemble", "KResult", "surrogate_ensemble", "k_statistic", "k_self"]

ZERO_SD_EPS = 1e-12

# Replications processed per vectorised batch; fixed so accumulation order
# (hence floating-point results) never depends on available memory.
_CHUNK = 128


@dataclass(frozen=True)
class SurrogateEnsemble:
    """Per-pattern mean and standard deviation under the independence surrogate."""

    replications: int
    per_pattern_mean: np.ndarray
    per_pattern_sd: np.ndarray
    rng_seed: int
    replace: bool = True


@dataclass(frozen=True)
class KResult:
    """K statistic with its per-pattern contributions and provenance."""

    k_value: float
    contributions: np.ndarray
    observed: PatternDistribution
    ensemble: SurrogateEnsemble
    excluded: np.ndarray  # boolean mask over pattern indices (sd below guard)

    @property
    def excluded_patterns(self) -> set[tuple[int, ...]]:
        from .ordinal import index_to_rank_word

        d = self.observed.config.d
        return {index_to_rank_word(i, d) for i in np.flatnonzero(self.excluded)}


def draw_index_matrix(
    n_values: int, n_draws: int, replications: int, seed: int, replace: bool = True
) -> np.ndarray:
    """Resampling indices, one row per replication.

    Each replication draws from its own child generator so results do not
    depend on execution order or parallelism.
    """
    if replications < 2:
        raise InvalidArgumentError(f"need at least 2 replications, got {replications}")
    if not replace and n_draws > n_values:
        raise InvalidArgumentError("cannot draw without replacement more values than exist")
    seeds = rng.child_seeds(seed, "surrogate", replications)
    idx = np.empty((replications, n_draws), dtype=np.int64)
    for r, s in enumerate(seeds):
        g = np.random.default_rng(s)
        if replace:
            idx[r] = g.integers(0, n_values, size=n_draws)
        else:
            idx[r] = g.permutation(n_values)[:n_draws]
    return idx


def _ensemble_stats(blocks, block_codes, table, y_values, idx):
    """Mean/sd of per-pattern probabilities across surrogate replications."""
    n_seg = blocks.shape[0]
    fact = int(table.max()) + 1
    replications = idx.shape[0]
    s1 = np.zeros(fact)
    s2 = np.zeros(fact)
    for lo in range(0, replications, _CHUNK):
        rows = idx[lo:lo + _CHUNK]
        draws = y_values[rows]
        finals = snap(draws - draws.mean(axis=1, keepdims=True))
        k_ins = final_insertion_ranks(blocks, finals)
        pats = table[block_codes[None, :], k_ins - 1]
        offsets = np.arange(rows.shape[0], dtype=np.int64)[:, None] * fact
        counts = np.bincount((pats + offsets).ravel(), minlength=rows.shape[0] * fact)
        probs = counts.reshape(rows.shape[0], fact) / n_seg
        s1 += probs.sum(axis=0)
        s2 += (probs * probs).sum(axis=0)
    mean = s1 / replications
    var = (s2 - s1 * s1 / replications) / (replications - 1)
    sd = np.sqrt(np.maximum(var, 0.0))
    return mean, sd


def _observed_counts(blocks, block_codes, table, finals):
    k_ins = final_insertion_ranks(blocks, finals)
    pats = table[block_codes, k_ins - 1]
    return np.bincount(pats, minlength=int(table.max()) + 1)


def _prepare(x, y, cfg: SegmentConfig):
    segments = mixed_segments(x, y, cfg)
    blocks = np.ascontiguousarray(segments[:, :-1])
    finals = segments[:, -1]
    return blocks, finals, block_pattern_codes(blocks), insertion_table(cfg.d)


def surrogate_ensemble(
    x, y, cfg: SegmentConfig, replications: int = 500, seed: int = 0, replace: bool = True
) -> SurrogateEnsemble:
    """Estimate the null per-pattern probability mean and sd.

    For each replication the delayed entries are replaced by an iid
    resample of ``y``'s observed values (centred on the resample's own
    mean), independent of ``x``.  ``replace=False`` switches to a
    permutation of ``y``'s values instead of draws with replacement.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    cfg.validate_series_length(x.size)
    blocks, _, block_codes, table = _prepare(x, y, cfg)
    idx = draw_index_matrix(y.size, blocks.shape[0], replications, seed, replace)
    mean, sd = _ensemble_stats(blocks, block_codes, table, y, idx)
    return SurrogateEnsemble(
        replications=replications,
        per_pattern_mean=mean,
        per_pattern_sd=sd,
        rng_seed=seed,
        replace=replace,
    )


def k_from_probabilities(p_obs, mean, sd):
    """K and per-pattern contributions from observed and null statistics."""
    excluded = sd < ZERO_SD_EPS
    if excluded.all():
        raise DegenerateDataError("every pattern has a degenerate surrogate sd; K is undefined")
    z = np.zeros_like(p_obs, dtype=np.float64)
    ok = ~excluded
    z[ok] = (p_obs[ok] - mean[ok]) / sd[ok]
    contributions = z * z
    return float(contributions[ok].sum()), contributions, excluded


def k_statistic(
    x, y, cfg: SegmentConfig, replications: int = 500, seed: int = 0, replace: bool = True
) -> KResult:
    """The K dependence statistic of the lag block of ``x`` on delayed ``y``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    cfg.validate_series_length(x.size)
    blocks, finals, block_codes, table = _prepare(x, y, cfg)
    n_seg = blocks.shape[0]
    counts = _observed_counts(blocks, block_codes, table, finals)
    observed = PatternDistribution(config=cfg, counts=counts, total=n_seg)
    idx = draw_index_matrix(y.size, n_seg, replications, seed, replace)
    mean, sd = _ensemble_stats(blocks, block_codes, table, y, idx)
    ensemble = SurrogateEnsemble(
        replications=replications,
        per_pattern_mean=mean,
        per_pattern_sd=sd,
        rng_seed=seed,
        replace=replace,
    )
    k_value, contributions, excluded = k_from_probabilities(observed.probabilities, mean, sd)
    return KResult(
        k_value=k_value,
        contributions=contributions,
        observed=observed,
        ensemble=ensemble,
        excluded=excluded,
    )


def k_self(residuals, cfg: SegmentConfig, replications: int = 500, seed: int = 0, replace: bool = True) -> KResult:
    """K of past residuals on the current residual (``x = y = residuals``)."""
    return k_statistic(residuals, residuals, cfg, replications, seed, replace)


def k_value_fast(x, y, cfg: SegmentConfig, idx: np.ndarray) -> float:
    """K value only, reusing a precomputed resampling index matrix.

    Sharing one index matrix across the two statistics of a test run (and
    across bootstrap replicates) is a common-random-numbers device: the
    surrogate noise largely cancels in differences of K values.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    blocks, finals, block_codes, table = _prepare(x, y, cfg)
    n_seg = blocks.shape[0]
    counts = _observed_counts(blocks, block_codes, table, finals)
    mean, sd = _ensemble_stats(blocks, block_codes, table, y, idx)
    k, _, _ = k_from_probabilities(counts / n_seg, mean, sd)
    return k
