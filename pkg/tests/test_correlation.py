"""
Tests for Pearson correlation, polarity handling and grid ranking.
"""
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from src.evaluation import (
    CorrelationAnalyzer,
    EvaluationError,
    UndefinedCorrelationError,
    correlate,
    pearson,
    rank_row,
    top_models,
)
from src.models import AppliedAugmentation, EvalRecord, Polarity, ReportCell


def brute_force_pearson(x, y):
    mx, my = sum(x) / len(x), sum(y) / len(y)
    cov = sum((a - mx) * (b - my) for a, b in zip(x, y))
    vx = sum((a - mx) ** 2 for a in x)
    vy = sum((b - my) ** 2 for b in y)
    return cov / math.sqrt(vx * vy)


def record(quality, match, self_score=None, model='default', attack='blur', backend='oracle',
           polarity=Polarity.SIMILARITY, sample_id='s'):
    return EvalRecord(sample_id=sample_id, dataset='synthetic', attack=attack,
                      augmentation=AppliedAugmentation(), model=model, predicted_quality=quality,
                      match_score=match, self_score=match if self_score is None else self_score,
                      backend=backend, polarity=polarity)


finite = st.floats(min_value=-100, max_value=100, allow_nan=False)


class TestPearson:
    """Test cases for pearson."""

    def test_perfect_correlation(self):
        """Test exactly linear inputs give r of one and minus one."""
        assert pearson([1, 2, 3], [2, 4, 6]).r == pytest.approx(1.0)
        assert pearson([1, 2, 3], [3, 2, 1]).r == pytest.approx(-1.0)
        assert pearson([1, 2, 3], [2, 4, 6]).n == 3

    @settings(max_examples=100, deadline=None)
    @given(data=st.lists(st.tuples(finite, finite), min_size=3, max_size=30))
    def test_matches_brute_force(self, data):
        """Test agreement with the textbook formula."""
        x, y = [a for a, _ in data], [b for _, b in data]
        assume(np.std(x) > 1e-3 and np.std(y) > 1e-3)
        assert pearson(x, y).r == pytest.approx(brute_force_pearson(x, y), abs=1e-9)

    @settings(max_examples=50, deadline=None)
    @given(data=st.lists(st.tuples(finite, finite), min_size=3, max_size=30),
           scale=st.floats(min_value=0.1, max_value=10), shift=finite)
    def test_affine_invariance(self, data, scale, shift):
        """Test positive affine maps keep r and negation flips its sign."""
        x, y = np.array([a for a, _ in data]), np.array([b for _, b in data])
        assume(np.std(x) > 1e-2 and np.std(y) > 1e-2)
        r = pearson(x, y).r
        assert pearson(scale * x + shift, y).r == pytest.approx(r, abs=1e-9)
        assert pearson(-x, y).r == pytest.approx(-r, abs=1e-9)

    def test_zero_variance(self):
        """Test constant inputs have no correlation."""
        with pytest.raises(UndefinedCorrelationError, match="zero variance"):
            pearson([1, 1, 1], [1, 2, 3])

    def test_rounding_noise_counts_as_constant(self):
        """Test spreads at rounding level count as zero variance."""
        with pytest.raises(UndefinedCorrelationError):
            pearson([1, 2, 3], [1.0, 1.0 - 2e-16, 1.0])

    def test_small_spread_is_not_constant(self):
        """Test tiny but genuine spreads are measured against their own magnitude."""
        x = [1e-9, 2e-9, 4e-9]
        result = pearson(x, [1, 2, 3])
        assert result.r == pytest.approx(brute_force_pearson([1, 2, 4], [1, 2, 3]), abs=1e-9)
        assert pearson([0.0, 1e-14, 3e-14], [1, 2, 3]).n == 3

    def test_length_mismatch(self):
        """Test lists must be equally long."""
        with pytest.raises(EvaluationError, match="equally long"):
            pearson([1, 2, 3], [1, 2])

    def test_too_few(self):
        """Test a single pair is rejected."""
        with pytest.raises(EvaluationError, match="at least 2 values"):
            pearson([1], [2])

    def test_non_finite(self):
        """Test NaN inputs are rejected."""
        with pytest.raises(EvaluationError, match="must be finite"):
            pearson([1, float('nan')], [1, 2])


class TestPolarity:
    """Test cases for the polarity rule."""

    def setup_method(self):
        self.quality = [0.2, 0.5, 0.4, 0.9]
        self.similarity = [0.1, 0.6, 0.3, 0.95]

    def test_distance_view_gives_same_r(self):
        """Test a backend exposed as distance 1 - s reports the similarity r."""
        similar = [record(q, s) for q, s in zip(self.quality, self.similarity)]
        distant = [record(q, s - 1.0, polarity=Polarity.DISTANCE) for q, s in zip(self.quality, self.similarity)]
        a = correlate(similar, 'match')
        b = correlate(distant, 'match')
        assert b.r == pytest.approx(a.r, abs=1e-12)
        assert b.negated and not a.negated

    def test_quality_equal_to_raw_distance_reports_minus_one(self):
        """Test the negation rule keeps the similarity orientation: quality rising with raw distance is r = -1."""
        distances = [0.2, 0.4, 0.6, 0.8]
        records = [record(q, -d, polarity=Polarity.DISTANCE) for q, d in zip([1, 2, 3, 4], distances)]
        assert correlate(records, 'match').r == pytest.approx(-1.0)

    def test_mixed_polarities(self):
        """Test records of both polarities cannot be correlated together."""
        records = [record(0.1, 0.2), record(0.3, -0.4, polarity=Polarity.DISTANCE)]
        with pytest.raises(EvaluationError, match="mix similarity and distance"):
            correlate(records, 'match')

    def test_unknown_score_kind(self):
        """Test score kinds are validated."""
        with pytest.raises(EvaluationError, match="score_kind must be one of"):
            correlate([record(0.1, 0.2)], 'pair')


class TestGrid:
    """Test cases for grid construction and ranking."""

    def test_grid_cells_and_skips(self):
        """Test every (attack, score kind, model) gets a cell, skipped ones with a reason."""
        records = []
        for i, (q, s) in enumerate([(0.1, 0.2), (0.5, 0.4), (0.9, 0.8)]):
            records.append(record(q, s, self_score=0.5 + 0.1 * i, model='blur', sample_id=f"s{i}"))
            records.append(record(0.3, s, self_score=0.5, model='rot', sample_id=f"s{i}"))
        records.append(record(0.4, 0.4, model='occ', sample_id='s0'))
        cells = CorrelationAnalyzer().build_grid(records, models=['blur', 'rot', 'occ'])
        assert len(cells) == 1 * 2 * 3
        by_key = {(c.score_kind, c.model): c for c in cells}
        assert by_key[('match', 'blur')].r == pytest.approx(pearson([0.1, 0.5, 0.9], [0.2, 0.4, 0.8]).r)
        assert by_key[('match', 'blur')].rank == 1
        assert 'zero variance' in by_key[('match', 'rot')].skipped_reason
        assert by_key[('self', 'occ')].skipped_reason == 'only 1 records'
        assert by_key[('self', 'occ')].rank is None

    def test_rank_ties_share(self):
        """Test equal r values share the better rank."""
        row = [ReportCell('d', 'b', 'blur', 'match', m, r=r, n=5)
               for m, r in [('a', 0.5), ('b', 0.9), ('c', 0.5)]]
        row.append(ReportCell('d', 'b', 'blur', 'match', 'x', skipped_reason='only 0 records'))
        ranked = rank_row(row)
        assert [c.rank for c in ranked] == [2, 1, 2, None]
        assert top_models(ranked, ('d', 'b', 'blur', 'match')) == ['b', 'a', 'c']
        assert top_models(ranked, ('d', 'b', 'blur', 'match'), count=1) == ['b']
