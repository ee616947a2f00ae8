"""Ordinal-pattern encoding of real-valued segments.

A length-``D`` segment is mapped to its *rank word*: entry ``i`` receives
rank ``r`` when it is the ``r``-th smallest value in the segment (rank
``D`` = largest).  Ties are broken by temporal order, the earlier entry
taking the lower rank, so the encoding is total and deterministic even on
resampled data that repeats values.

Patterns are indexed ``0 .. D!-1`` by the lexicographic order of their
rank words, e.g. for ``D = 3``: ``(1,2,3) -> 0``, ..., ``(3,2,1) -> 5``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from math import factorial

import numpy as np

from .errors import InsufficientDataError, InvalidArgumentError, InvalidDataError

__all__ = [
    "TieRule",
    "SegmentConfig",
    "OrdinalPattern",
    "PatternDistribution",
    "encode_segment",
    "mixed_segments",
    "pattern_distribution",
    "count_mixed_segments",
    "rank_word_to_index",
    "index_to_rank_word",
]


class TieRule(Enum):
    """How equal values inside a segment are ranked."""

    EARLIER_WINS = "earlier_wins"


@dataclass(frozen=True)
class SegmentConfig:
    """Segment length ``d`` and forecast delay ``tau``.

    ``d`` is the number of entries per segment (``d - 1`` lags plus one
    delayed target entry).  The usual working range is ``3 <= d <= 7``;
    ``d = 2`` is accepted only with ``allow_d2=True`` and is meant for
    minimal unit-testable cases.

    A series of length ``n`` is long enough for this configuration when
    ``n - (d - 1) * tau >= min_length_factor * d!``.
    """

    d: int
    tau: int = 1
    allow_d2: bool = False
    min_length_factor: int = 10

    def __post_init__(self):
        if not (2 <= self.d <= 7):
            raise InvalidArgumentError(f"segment length d must be in 2..7, got {self.d}")
        if self.d == 2 and not self.allow_d2:
            raise InvalidArgumentError("d=2 is below the recommended range; pass allow_d2=True to use it")
        if self.tau < 1:
            raise InvalidArgumentError(f"delay tau must be >= 1, got {self.tau}")
        if self.min_length_factor < 1:
            raise InvalidArgumentError("min_length_factor must be >= 1")

    @property
    def n_patterns(self) -> int:
        return factorial(self.d)

    def validate_series_length(self, n: int) -> None:
        """Raise when ``n`` observations cannot support this configuration."""
        needed = (self.d - 1) * self.tau + self.min_length_factor * self.n_patterns
        if n - (self.d - 1) * self.tau < self.min_length_factor * self.n_patterns:
            raise InsufficientDataError(
                f"series of length {n} is too short for d={self.d}, tau={self.tau}: "
                f"need at least {needed} observations"
            )


@dataclass(frozen=True)
class OrdinalPattern:
    """A rank word: ``rank_word[i]`` is the rank of segment entry ``i``."""

    rank_word: tuple[int, ...]

    def __post_init__(self):
        d = len(self.rank_word)
        if sorted(self.rank_word) != list(range(1, d + 1)):
            raise InvalidArgumentError(f"rank word {self.rank_word} is not a permutation of 1..{d}")

    @property
    def d(self) -> int:
        return len(self.rank_word)

    @property
    def index(self) -> int:
        return rank_word_to_index(self.rank_word)


# --- lexicographic pattern indexing -----------------------------------------

def _all_rank_words(d: int) -> list[tuple[int, ...]]:
    return list(itertools.permutations(range(1, d + 1)))


def rank_word_to_index(rank_word: tuple[int, ...]) -> int:
    """Lexicographic index of a rank word among all d! rank words."""
    d = len(rank_word)
    # Lehmer code on the rank word read as a digit string.
    index = 0
    word = list(rank_word)
    for i in range(d):
        smaller = sum(1 for v in word[i + 1:] if v < word[i])
        index += smaller * factorial(d - 1 - i)
    return index


def index_to_rank_word(index: int, d: int) -> tuple[int, ...]:
    """Inverse of :func:`rank_word_to_index`."""
    if not 0 <= index < factorial(d):
        raise InvalidArgumentError(f"pattern index {index} out of range for d={d}")
    pool = list(range(1, d + 1))
    word = []
    for i in range(d, 0, -1):
        q, index = divmod(index, factorial(i - 1))
        word.append(pool.pop(q))
    return tuple(word)


# --- vectorised encoders ------------------------------------------------------

def _rank_rows(values: np.ndarray) -> np.ndarray:
    """Row-wise rank words (ties: earlier entry gets the lower rank)."""
    n, m = values.shape
    ranks = np.ones((n, m), dtype=np.int8)
    for i in range(m):
        vi = values[:, i]
        for j in range(m):
            if j == i:
                continue
            vj = values[:, j]
            if j < i:
                ranks[:, i] += (vj <= vi)
            else:
                ranks[:, i] += (vj < vi)
    return ranks


def _lex_keys(ranks: np.ndarray) -> np.ndarray:
    """Base-m integer keys whose order equals lexicographic rank-word order."""
    n, m = ranks.shape
    keys = np.zeros(n, dtype=np.int64)
    for i in range(m):
        keys = keys * m + (ranks[:, i].astype(np.int64) - 1)
    return keys


def _sorted_perm_keys(m: int) -> np.ndarray:
    words = np.array(_all_rank_words(m), dtype=np.int64)  # lex order
    keys = np.zeros(len(words), dtype=np.int64)
    for i in range(m):
        keys = keys * m + (words[:, i] - 1)
    return keys


def encode_rows(values: np.ndarray, tie_rule: TieRule = TieRule.EARLIER_WINS) -> np.ndarray:
    """Pattern indices for a (n, d) array of segments."""
    if tie_rule is not TieRule.EARLIER_WINS:
        raise InvalidArgumentError(f"unsupported tie rule: {tie_rule}")
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise InvalidArgumentError("segments must form a 2-d array")
    if not np.isfinite(values).all():
        raise InvalidDataError("segments contain non-finite values")
    ranks = _rank_rows(values)
    return np.searchsorted(_sorted_perm_keys(values.shape[1]), _lex_keys(ranks))


def insertion_table(d: int) -> np.ndarray:
    """Pattern index reached by appending a final entry to a ranked block.

    ``table[b, k-1]`` is the full d-pattern index when the leading
    ``d - 1`` entries form the ``b``-th (lexicographic) rank word of
    length ``d - 1`` and the appended entry takes insertion rank ``k``
    among all ``d`` entries.
    """
    blocks = _all_rank_words(d - 1)
    table = np.empty((len(blocks), d), dtype=np.int32)
    for b, block in enumerate(blocks):
        for k in range(1, d + 1):
            full = tuple(r if r < k else r + 1 for r in block) + (k,)
            table[b, k - 1] = rank_word_to_index(full)
    return table


def block_pattern_codes(blocks: np.ndarray) -> np.ndarray:
    """Lexicographic rank-word indices of the (n, d-1) leading-block rows."""
    ranks = _rank_rows(np.asarray(blocks, dtype=np.float64))
    return np.searchsorted(_sorted_perm_keys(blocks.shape[1]), _lex_keys(ranks))


def final_insertion_ranks(blocks: np.ndarray, finals: np.ndarray) -> np.ndarray:
    """Insertion rank of the final entry: 1 + #{block entries <= final}.

    The ``<=`` realises the earlier-wins tie rule, the final entry being
    the latest in the segment.  ``finals`` may be 1-d (one segment set) or
    2-d with one row per surrogate replication.
    """
    finals = np.asarray(finals)
    k = np.ones(finals.shape, dtype=np.int8)
    for j in range(blocks.shape[1]):
        k += blocks[:, j] <= finals
    return k


# --- public operations --------------------------------------------------------

def encode_segment(values, tie_rule: TieRule = TieRule.EARLIER_WINS) -> OrdinalPattern:
    """Encode one segment of at least two entries into its ordinal pattern."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 2:
        raise InvalidArgumentError("segment must be a 1-d sequence with at least 2 entries")
    if not np.isfinite(arr).all():
        raise InvalidDataError("segment contains non-finite values")
    if tie_rule is not TieRule.EARLIER_WINS:
        raise InvalidArgumentError(f"unsupported tie rule: {tie_rule}")
    ranks = _rank_rows(arr[None, :])[0]
    return OrdinalPattern(tuple(int(r) for r in ranks))


def count_mixed_segments(n: int, cfg: SegmentConfig) -> int:
    """Number of mixed segments a length-``n`` series pair yields."""
    return n - cfg.d - cfg.tau + 2


def snap(values: np.ndarray) -> np.ndarray:
    """Round to single precision (returned as float64).

    Centred entries of two related series can differ by a few double-
    precision ulps even when the underlying values are identical (the two
    series' means round differently).  Comparing snapped values makes
    tie handling independent of that sub-single-precision noise, so
    pattern extraction is exactly invariant under common affine maps and
    under shifting one series by a constant.
    """
    return values.astype(np.float32).astype(np.float64)


def mixed_segments(x, y, cfg: SegmentConfig) -> np.ndarray:
    """Mean-centred mixed segments of a series pair.

    Row ``t`` is ``(x[t-d+2] - mean(x), ..., x[t] - mean(x),
    y[t+tau] - mean(y))``, one row for every in-range ``t``; the row count
    is ``n - d - tau + 2``.  Subtracting each series' own mean makes
    entries from the two series comparable inside one segment; centred
    entries are snapped to single precision (see :func:`snap`).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1:
        raise InvalidArgumentError("series must be 1-dimensional")
    if x.shape != y.shape:
        raise InvalidArgumentError(f"series lengths differ: {x.size} vs {y.size}")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise InvalidDataError("series contain non-finite values")
    n = x.size
    n_seg = count_mixed_segments(n, cfg)
    if n_seg < 1:
        raise InsufficientDataError(
            f"series of length {n} yields no segments for d={cfg.d}, tau={cfg.tau}"
        )
    xc = snap(x - x.mean())
    yc = snap(y - y.mean())
    d = cfg.d
    segments = np.empty((n_seg, d), dtype=np.float64)
    for j in range(d - 1):
        segments[:, j] = xc[j:j + n_seg]
    segments[:, d - 1] = yc[d - 2 + cfg.tau:d - 2 + cfg.tau + n_seg]
    return segments


@dataclass(frozen=True)
class PatternDistribution:
    """Empirical distribution over the ``d!`` ordinal patterns."""

    config: SegmentConfig
    counts: np.ndarray
    total: int
    probabilities: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.counts.sum() != self.total:
            raise InvalidArgumentError("pattern counts do not sum to the segment total")
        probs = self.counts / self.total if self.total > 0 else np.zeros_like(self.counts, dtype=float)
        object.__setattr__(self, "probabilities", probs)

    def probability(self, rank_word: tuple[int, ...]) -> float:
        return float(self.probabilities[rank_word_to_index(rank_word)])

    def as_dict(self) -> dict[tuple[int, ...], int]:
        return {index_to_rank_word(i, self.config.d): int(c) for i, c in enumerate(self.counts)}


def pattern_distribution(
    segments: np.ndarray,
    tie_rule: TieRule = TieRule.EARLIER_WINS,
    config: SegmentConfig | None = None,
) -> PatternDistribution:
    """Tabulate the pattern distribution of pre-built segments."""
    segments = np.asarray(segments, dtype=np.float64)
    if segments.ndim != 2 or segments.shape[0] == 0:
        raise InsufficientDataError("no segments supplied")
    d = segments.shape[1]
    if config is None:
        config = SegmentConfig(d, allow_d2=True) if d == 2 else SegmentConfig(d)
    elif config.d != d:
        raise InvalidArgumentError(f"segments have arity {d} but config.d={config.d}")
    indices = encode_rows(segments, tie_rule)
    counts = np.bincount(indices, minlength=factorial(d))
    return PatternDistribution(config=config, counts=counts, total=segments.shape[0])
