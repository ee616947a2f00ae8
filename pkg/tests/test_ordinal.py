import itertools
import math

import numpy as np
import pytest

from pesuff.errors import InsufficientDataError, InvalidArgumentError, InvalidDataError
from pesuff.ordinal import (
    OrdinalPattern,
    SegmentConfig,
    TieRule,
    count_mixed_segments,
    encode_rows,
    encode_segment,
    index_to_rank_word,
    mixed_segments,
    pattern_distribution,
    rank_word_to_index,
)


class TestEncodeSegment:
    def test_middle_low_high(self):
        assert encode_segment((2.1, 0.5, 3.3)).rank_word == (2, 1, 3)

    def test_increasing(self):
        assert encode_segment((1.0, 2.0, 3.0)).rank_word == (1, 2, 3)

    def test_tie_broken_by_temporal_order(self):
        assert encode_segment((5.0, 5.0)).rank_word == (1, 2)
        assert encode_segment((5.0, 5.0, 5.0)).rank_word == (1, 2, 3)

    def test_too_short(self):
        with pytest.raises(InvalidArgumentError):
            encode_segment((1.0,))

    def test_non_finite(self):
        with pytest.raises(InvalidDataError):
            encode_segment((1.0, np.nan, 2.0))

    def test_rank_word_must_be_permutation(self):
        with pytest.raises(InvalidArgumentError):
            OrdinalPattern((1, 1, 3))


class TestPatternIndexing:
    @pytest.mark.parametrize("d", [2, 3, 4, 5])
    def test_lexicographic_roundtrip(self, d):
        words = list(itertools.permutations(range(1, d + 1)))
        for i, word in enumerate(words):  # permutations() yields in lex order
            assert rank_word_to_index(word) == i
            assert index_to_rank_word(i, d) == word

    def test_out_of_range(self):
        with pytest.raises(InvalidArgumentError):
            index_to_rank_word(6, 3)

    @pytest.mark.parametrize("d", [2, 3, 4, 5, 6, 7])
    def test_encoding_is_bijective_over_all_orderings(self, d):
        values = np.array(list(itertools.permutations(np.linspace(0.0, 1.0, d))))
        indices = encode_rows(values)
        assert sorted(indices) == list(range(math.factorial(d)))

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_monotone_invariance_exhaustive(self, d):
        base = np.array(list(itertools.permutations(np.linspace(0.1, 1.0, d))))
        reference = encode_rows(base)
        for f in (np.exp, lambda v: v**3, lambda v: 2.0 * v + 1.0):
            assert np.array_equal(encode_rows(f(base)), reference)


class TestSegmentConfig:
    def test_d_range(self):
        with pytest.raises(InvalidArgumentError):
            SegmentConfig(8, 1)
        with pytest.raises(InvalidArgumentError):
            SegmentConfig(1, 1)

    def test_d2_requires_flag(self):
        with pytest.raises(InvalidArgumentError):
            SegmentConfig(2, 1)
        assert SegmentConfig(2, 1, allow_d2=True).d == 2

    def test_tau_positive(self):
        with pytest.raises(InvalidArgumentError):
            SegmentConfig(3, 0)

    def test_length_restriction_boundary(self):
        cfg = SegmentConfig(3, 2)
        # n - (d-1)*tau >= 10 * d!  <=>  n >= 64 here
        cfg.validate_series_length(64)
        with pytest.raises(InsufficientDataError):
            cfg.validate_series_length(63)


class TestMixedSegments:
    def test_count_small(self):
        x = np.arange(10.0)
        assert mixed_segments(x, x, SegmentConfig(3, 1)).shape[0] == 8
        assert count_mixed_segments(10, SegmentConfig(3, 1)) == 8

    def test_count_paper_scale(self):
        g = np.random.default_rng(0)
        x = g.normal(size=6360)
        assert mixed_segments(x, x, SegmentConfig(4, 1)).shape[0] == 6357

    def test_explicit_construction(self):
        x = np.array([1.0, 2.0, 3.0, 4.0])
        segs = mixed_segments(x, x, SegmentConfig(2, 1, allow_d2=True))
        expected = np.array([[-1.5, -0.5], [-0.5, 0.5], [0.5, 1.5]])
        assert np.allclose(segs, expected)

    def test_unequal_lengths(self):
        with pytest.raises(InvalidArgumentError):
            mixed_segments(np.zeros(5), np.zeros(6), SegmentConfig(3, 1))

    def test_too_short(self):
        with pytest.raises(InsufficientDataError):
            mixed_segments(np.arange(3.0), np.arange(3.0), SegmentConfig(4, 1))

    def test_common_affine_invariance(self):
        g = np.random.default_rng(7)
        x, y = g.normal(size=500), g.normal(size=500)
        cfg = SegmentConfig(3, 1)
        base = pattern_distribution(mixed_segments(x, y, cfg))
        moved = pattern_distribution(mixed_segments(2.5 * x + 3.0, 2.5 * y - 1.0, cfg))
        assert np.array_equal(base.counts, moved.counts)


class TestPatternDistribution:
    def test_all_increasing(self):
        x = np.arange(40.0)
        dist = pattern_distribution(mixed_segments(x, x, SegmentConfig(3, 1)))
        assert dist.probability((1, 2, 3)) == 1.0
        assert dist.counts.sum() == dist.total

    def test_all_decreasing(self):
        x = -np.arange(40.0)
        dist = pattern_distribution(mixed_segments(x, x, SegmentConfig(3, 1)))
        assert dist.probability((3, 2, 1)) == 1.0

    def test_count_identity(self):
        g = np.random.default_rng(1)
        x, y = g.normal(size=321), g.normal(size=321)
        cfg = SegmentConfig(4, 2)
        dist = pattern_distribution(mixed_segments(x, y, cfg), config=cfg)
        assert dist.total == 321 - 4 - 2 + 2

    def test_uniform_noise_is_uniform(self):
        cfg = SegmentConfig(3, 1)
        for seed in range(20):
            g = np.random.default_rng(seed)
            x, y = g.uniform(size=60000), g.uniform(size=60000)
            dist = pattern_distribution(mixed_segments(x, y, cfg))
            assert np.all(np.abs(dist.probabilities - 1.0 / 6.0) < 0.01)

    def test_empty_input(self):
        with pytest.raises(InsufficientDataError):
            pattern_distribution(np.empty((0, 3)))

    def test_probabilities_normalized(self):
        g = np.random.default_rng(2)
        segs = g.normal(size=(500, 3))
        dist = pattern_distribution(segs)
        assert abs(dist.probabilities.sum() - 1.0) < 1e-12

    def test_as_dict_covers_all_patterns(self):
        g = np.random.default_rng(3)
        segs = g.normal(size=(100, 3))
        d = pattern_distribution(segs).as_dict()
        assert len(d) == 6
        assert sum(d.values()) == 100

    def test_tie_rule_enum_is_explicit(self):
        with pytest.raises(InvalidArgumentError):
            encode_segment((1.0, 2.0), tie_rule="whatever")
