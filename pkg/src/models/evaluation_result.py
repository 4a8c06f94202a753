"""
Evaluation result data models with validation methods.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional
import csv
import json
import math
from io import StringIO

from .augmentation_record import AppliedAugmentation
from .scores import Polarity

VALID_ATTACKS = ('none', 'blur', 'occlusion', 'blur_occ')
VALID_SCORE_KINDS = ('match', 'self')


@dataclass(frozen=True)
class EvalRecord:
    """
    One (sample, attack, model) measurement.

    Attributes:
        sample_id: Manifest sample id of the probe
        dataset: Dataset name the probe belongs to
        attack: Attack kind applied to the probe
        augmentation: Concrete attack parameters
        model: Quality model (head variant or baseline) that produced the prediction
        predicted_quality: Model output on the attacked probe
        match_score: Normalized best-match score against the undistorted gallery
        self_score: Normalized similarity to the undistorted original
        backend: Recognition backend name
        polarity: Polarity of the backend's raw scores
    """
    sample_id: str
    dataset: str
    attack: str
    augmentation: AppliedAugmentation
    model: str
    predicted_quality: float
    match_score: float
    self_score: float
    backend: str
    polarity: Polarity = Polarity.SIMILARITY

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.attack not in VALID_ATTACKS:
            raise ValueError(f"attack must be one of {list(VALID_ATTACKS)}")
        for name in ('predicted_quality', 'match_score', 'self_score'):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def score(self, score_kind: str) -> float:
        if score_kind == 'match':
            return self.match_score
        if score_kind == 'self':
            return self.self_score
        raise ValueError(f"score_kind must be one of {list(VALID_SCORE_KINDS)}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            'sample_id': self.sample_id,
            'dataset': self.dataset,
            'attack': self.attack,
            'augmentation': self.augmentation.to_dict(),
            'model': self.model,
            'predicted_quality': self.predicted_quality,
            'match_score': self.match_score,
            'self_score': self.self_score,
            'backend': self.backend,
            'polarity': self.polarity.value
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'EvalRecord':
        return cls(
            sample_id=data['sample_id'],
            dataset=data['dataset'],
            attack=data['attack'],
            augmentation=AppliedAugmentation.from_dict(data['augmentation']),
            model=data['model'],
            predicted_quality=float(data['predicted_quality']),
            match_score=float(data['match_score']),
            self_score=float(data['self_score']),
            backend=data['backend'],
            polarity=Polarity(data.get('polarity', Polarity.SIMILARITY.value))
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass(frozen=True)
class PearsonResult:
    """
    Pearson correlation outcome.

    Attributes:
        r: Correlation coefficient
        n: Sample count
        negated: True when the sign was flipped by the polarity rule
    """
    r: float
    n: int
    negated: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not isinstance(self.r, (int, float)) or not math.isfinite(self.r):
            raise ValueError("r must be a finite number")
        if abs(self.r) > 1.0 + 1e-12:
            raise ValueError("r must be between -1 and 1")
        if not isinstance(self.n, int) or self.n < 2:
            raise ValueError("n must be an integer >= 2")


@dataclass
class ReportCell:
    """
    One cell of the correlation grid.

    Attributes:
        dataset / backend / attack / score_kind / model: Cell key
        r: Correlation, None when skipped
        n: Number of records used
        negated: Polarity-rule flag
        rank: 1-based rank of the model inside its (dataset, backend, attack, score_kind) row
        skipped_reason: Why the cell has no value
    """
    dataset: str
    backend: str
    attack: str
    score_kind: str
    model: str
    r: Optional[float] = None
    n: int = 0
    negated: bool = False
    rank: Optional[int] = None
    skipped_reason: Optional[str] = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.attack not in VALID_ATTACKS:
            raise ValueError(f"attack must be one of {list(VALID_ATTACKS)}")
        if self.score_kind not in VALID_SCORE_KINDS:
            raise ValueError(f"score_kind must be one of {list(VALID_SCORE_KINDS)}")
        if self.r is None and not self.skipped_reason:
            raise ValueError("a cell without r must carry a skipped_reason")

    @property
    def row_key(self) -> tuple:
        return (self.dataset, self.backend, self.attack, self.score_kind)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'dataset': self.dataset,
            'backend': self.backend,
            'attack': self.attack,
            'score_kind': self.score_kind,
            'model': self.model,
            'r': self.r,
            'n': self.n,
            'negated': self.negated,
            'rank': self.rank,
            'skipped_reason': self.skipped_reason
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ReportCell':
        return cls(**data)

    @classmethod
    def csv_headers(cls) -> List[str]:
        return ['dataset', 'backend', 'attack', 'score_kind', 'model',
                'r', 'n', 'negated', 'rank', 'skipped_reason']

    def to_csv_row(self, precision: int = 6) -> List[str]:
        return [
            self.dataset,
            self.backend,
            self.attack,
            self.score_kind,
            self.model,
            f"{self.r:.{precision}f}" if self.r is not None else '',
            str(self.n),
            'true' if self.negated else 'false',
            str(self.rank) if self.rank is not None else '',
            self.skipped_reason or ''
        ]

    @classmethod
    def from_csv_row(cls, row: List[str]) -> 'ReportCell':
        if len(row) != 10:
            raise ValueError(f"Expected 10 CSV columns, got {len(row)}")
        return cls(
            dataset=row[0],
            backend=row[1],
            attack=row[2],
            score_kind=row[3],
            model=row[4],
            r=float(row[5]) if row[5] else None,
            n=int(row[6]),
            negated=row[7] == 'true',
            rank=int(row[8]) if row[8] else None,
            skipped_reason=row[9] or None
        )


@dataclass(frozen=True)
class AttackEffectRow:
    """Mean normalized scores for one (dataset, backend, attack) cell."""
    dataset: str
    backend: str
    attack: str
    mean_match: float
    mean_self: float
    n: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            'dataset': self.dataset,
            'backend': self.backend,
            'attack': self.attack,
            'mean_match': self.mean_match,
            'mean_self': self.mean_self,
            'n': self.n
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'AttackEffectRow':
        return cls(**data)


@dataclass
class EvalReport:
    """
    Aggregated evaluation output: correlation grid, attack-effect table and
    run metadata (seed, skip counts, best models per row).
    """
    cells: List[ReportCell] = field(default_factory=list)
    attack_effect: List[AttackEffectRow] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def cell(self, dataset: str, backend: str, attack: str,
             score_kind: str, model: str) -> Optional[ReportCell]:
        for candidate in self.cells:
            if (candidate.dataset, candidate.backend, candidate.attack,
                    candidate.score_kind, candidate.model) == (dataset, backend, attack, score_kind, model):
                return candidate
        return None

    def extend(self, other: 'EvalReport') -> None:
        self.cells.extend(other.cells)
        self.attack_effect.extend(other.attack_effect)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'cells': [c.to_dict() for c in self.cells],
            'attack_effect': [row.to_dict() for row in self.attack_effect],
            'metadata': self.metadata
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'EvalReport':
        return cls(
            cells=[ReportCell.from_dict(c) for c in data.get('cells', [])],
            attack_effect=[AttackEffectRow.from_dict(r) for r in data.get('attack_effect', [])],
            metadata=data.get('metadata', {})
        )


def cells_to_csv(cells: List[ReportCell], precision: int = 6) -> str:
    """
    Convert report cells to CSV format.

    Args:
        cells: Cells to write
        precision: Decimal places for r

    Returns:
        CSV string with a header row (header only when `cells` is empty)
    """
    output = StringIO()
    writer = csv.writer(output, lineterminator='\n')
    writer.writerow(ReportCell.csv_headers())
    for cell in cells:
        writer.writerow(cell.to_csv_row(precision))
    return output.getvalue()


def cells_from_csv(csv_str: str) -> List[ReportCell]:
    """Parse cells written by `cells_to_csv`."""
    if not csv_str.strip():
        return []
    reader = csv.reader(StringIO(csv_str))
    next(reader, None)
    return [ReportCell.from_csv_row(row) for row in reader if row]
