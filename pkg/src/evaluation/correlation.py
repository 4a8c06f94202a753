"""
Pearson correlation between predicted quality and recognition scores.

All reported coefficients share the high-is-better orientation: when a
distance-polarity backend is correlated on its raw scores the coefficient is
negated, so exposing a backend as similarity s or as distance 1 - s yields
the same grid.
"""
import logging
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from ..models.evaluation_result import EvalRecord, PearsonResult, ReportCell, VALID_SCORE_KINDS
from ..models.scores import Polarity


# Spread below this fraction of the list's own largest magnitude counts as zero variance
ZERO_SPREAD_TOLERANCE = 1e-12


class EvaluationError(Exception):
    """Custom exception for evaluation operations"""
    pass


class UndefinedCorrelationError(EvaluationError):
    """Raised when either input has zero variance."""
    pass


def _constant(values: np.ndarray) -> bool:
    spread = float(np.ptp(values))
    return spread == 0.0 or spread <= ZERO_SPREAD_TOLERANCE * float(np.abs(values).max())


def pearson(x: Sequence[float], y: Sequence[float]) -> PearsonResult:
    """
    Product-moment correlation of two equally long lists.

    Raises:
        EvaluationError: On mismatched lengths, fewer than 2 values or non-finite input
        UndefinedCorrelationError: If either list has zero variance
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise EvaluationError(f"pearson needs two equally long lists, got {x.shape} and {y.shape}")
    if x.size < 2:
        raise EvaluationError(f"pearson needs at least 2 values, got {x.size}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise EvaluationError("pearson inputs must be finite")
    if _constant(x) or _constant(y):
        raise UndefinedCorrelationError("undefined correlation: zero variance input")

    r, _ = stats.pearsonr(x, y)
    if not np.isfinite(r):
        raise UndefinedCorrelationError("undefined correlation: degenerate input")
    return PearsonResult(r=float(np.clip(r, -1.0, 1.0)), n=int(x.size))


def correlate(records: Sequence[EvalRecord], score_kind: str, raw: bool = True) -> PearsonResult:
    """
    Pearson between predicted quality and the chosen score.

    Args:
        records: Records of one model/backend
        score_kind: 'match' or 'self'
        raw: Correlate against the backend's raw scores; for a distance
            backend the raw score is the negated normalized score and the
            coefficient is negated back

    Raises:
        EvaluationError: If records mix polarities or are too few
        UndefinedCorrelationError: Propagated from pearson
    """
    if score_kind not in VALID_SCORE_KINDS:
        raise EvaluationError(f"score_kind must be one of {list(VALID_SCORE_KINDS)}")
    polarities = {record.polarity for record in records}
    if len(polarities) > 1:
        raise EvaluationError("records mix similarity and distance polarities")
    quality = [record.predicted_quality for record in records]
    scores = [record.score(score_kind) for record in records]

    distance = polarities == {Polarity.DISTANCE}
    if raw and distance:
        result = pearson(quality, [-s for s in scores])
        return PearsonResult(r=-result.r, n=result.n, negated=True)
    return pearson(quality, scores)


class CorrelationAnalyzer:
    """
    Builds correlation grids over evaluation records.

    A grid has one cell per (dataset, backend, attack, score kind, model);
    cells that cannot be computed carry a skipped reason. Inside each
    (dataset, backend, attack, score kind) row, models are ranked by r,
    descending, equal values sharing a rank.
    """

    def __init__(self, raw: bool = True):
        self.raw = raw
        self.logger = logging.getLogger(__name__)

    def cell(self, records: List[EvalRecord], key: Tuple[str, str, str, str, str]) -> ReportCell:
        dataset, backend, attack, score_kind, model = key
        if len(records) < 2:
            return ReportCell(dataset, backend, attack, score_kind, model, n=len(records),
                              skipped_reason=f"only {len(records)} records")
        try:
            result = correlate(records, score_kind, raw=self.raw)
        except EvaluationError as e:
            self.logger.warning(f"Cell {key} skipped: {str(e)}")
            return ReportCell(dataset, backend, attack, score_kind, model,
                              n=len(records), skipped_reason=str(e))
        return ReportCell(dataset, backend, attack, score_kind, model,
                          r=result.r, n=result.n, negated=result.negated)

    def build_grid(self, records: Iterable[EvalRecord],
                   models: Optional[Sequence[str]] = None,
                   attacks: Optional[Sequence[str]] = None,
                   score_kinds: Sequence[str] = VALID_SCORE_KINDS) -> List[ReportCell]:
        """
        Correlation cells for every requested combination.

        Args:
            records: Evaluation records
            models: Models to include, in column order (all models seen when None)
            attacks: Attacks to include, in row order (all attacks seen when None)
            score_kinds: Score kinds to include

        Returns:
            Ranked cells ordered by dataset, backend, attack, score kind, model
        """
        records = list(records)
        grouped: Dict[Tuple[str, str, str, str], List[EvalRecord]] = {}
        for record in records:
            grouped.setdefault((record.dataset, record.backend, record.attack, record.model), []).append(record)

        datasets = sorted({r.dataset for r in records})
        backends = sorted({r.backend for r in records})
        models = list(models) if models is not None else list(dict.fromkeys(r.model for r in records))
        attacks = list(attacks) if attacks is not None else list(dict.fromkeys(r.attack for r in records))

        cells = []
        for dataset in datasets:
            for backend in backends:
                for attack in attacks:
                    for score_kind in score_kinds:
                        row = [
                            self.cell(grouped.get((dataset, backend, attack, model), []),
                                      (dataset, backend, attack, score_kind, model))
                            for model in models
                        ]
                        cells.extend(rank_row(row))
        self.logger.info(f"Built correlation grid with {len(cells)} cells")
        return cells


def rank_row(row: List[ReportCell]) -> List[ReportCell]:
    """Assign 1-based ranks by r descending; skipped cells stay unranked."""
    values = pd.Series([cell.r for cell in row], dtype='float64')
    ranks = values.rank(method='min', ascending=False)
    for cell, rank in zip(row, ranks):
        cell.rank = None if pd.isna(rank) else int(rank)
    return row


def top_models(cells: Iterable[ReportCell], row_key: Tuple[str, str, str, str],
               count: int = 2) -> List[str]:
    """Models holding the best `count` ranks of a row."""
    ranked = [c for c in cells if c.row_key == tuple(row_key) and c.rank is not None]
    return [c.model for c in sorted(ranked, key=lambda c: (c.rank, c.model)) if c.rank <= count]
