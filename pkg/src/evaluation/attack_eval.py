"""
Attack-based evaluation harness.

Every evaluation probe is distorted by each requested attack; the attacked
probe gets a predicted quality from every head (and baseline), a self score
against its undistorted original and a match score against the undistorted
gallery of all other evaluation samples. Correlating predictions with those
scores gives the ablation, baseline and cross-backend grids.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from config.settings import EVALUATION_CONFIG
from ..augmentation.distortions import EVAL_ATTACKS, AugmentationError, derive_seed, make_eval_attack
from ..concurrency import ordered_map
from ..data_ingestion.crops import CropError, CropProvider
from ..data_ingestion.manifest_loader import ManifestError
from ..models.evaluation_result import AttackEffectRow, EvalRecord, EvalReport, ReportCell, VALID_SCORE_KINDS
from ..models.manifest import DatasetManifest, ManifestRecord
from ..monet.network import MonetError, MonetModel, QualityHead, predict_batch
from ..recognition.backends import RecognitionBackend, RecognitionError
from ..recognition.labels import distorted_key
from ..recognition.scoring import GalleryEntry, best_match_score, normalize_score
from .baselines import BASELINES
from .correlation import CorrelationAnalyzer, EvaluationError, top_models

SKIPPABLE_ERRORS = (RecognitionError, CropError, ManifestError, AugmentationError, MonetError)


@dataclass
class AttackEvalResult:
    """
    Records of one sweep plus skip accounting.

    Attributes:
        records: One record per (sample, attack, model), in sample, attack, model order
        skipped: (sample id, attack, reason) of skipped probes
    """
    records: List[EvalRecord] = field(default_factory=list)
    skipped: List[Tuple[str, str, str]] = field(default_factory=list)

    @property
    def skipped_count(self) -> int:
        return len(self.skipped)

    def for_model(self, model: str) -> List[EvalRecord]:
        return [r for r in self.records if r.model == model]

    def extend(self, other: 'AttackEvalResult') -> None:
        self.records.extend(other.records)
        self.skipped.extend(other.skipped)


def eval_records(manifest: DatasetManifest) -> List[ManifestRecord]:
    """Records tagged 'eval' (all records when the manifest has no eval tag)."""
    if manifest.has_split('eval'):
        return manifest.by_split('eval').records
    return list(manifest.records)


def attack_seed(seed: int, sample_index: int, attack: str) -> int:
    """Per-(sample, attack) seed; independent of which other attacks run."""
    return derive_seed(seed, sample_index * len(EVAL_ATTACKS) + EVAL_ATTACKS.index(attack))


class AttackEvaluator:
    """
    Runs the attack sweep for one backend.

    Args:
        model: Frozen extractor
        heads: Variant name -> quality head
        backend: Recognition backend scoring the probes
        dataset: Dataset name written into the records
        baselines: Baseline metric names (keys of BASELINES) evaluated on the attacked probes
        provider: Crop source
        sigma_range: Blur sigma range of the blur attacks
    """

    def __init__(self, model: MonetModel, heads: Mapping[str, QualityHead],
                 backend: RecognitionBackend, dataset: str = 'dataset',
                 baselines: Sequence[str] = (), provider: Optional[CropProvider] = None,
                 sigma_range: Tuple[float, float] = EVALUATION_CONFIG['blur_sigma_range']):
        unknown = [name for name in baselines if name not in BASELINES]
        if unknown:
            raise EvaluationError(f"Unknown baselines {unknown}; available: {sorted(BASELINES)}")
        self.model = model
        self.heads = dict(heads)
        self.backend = backend
        self.dataset = dataset
        self.baselines = list(baselines)
        self.provider = provider
        self.sigma_range = sigma_range
        self.logger = logging.getLogger(__name__)

    def _gallery(self, records: List[ManifestRecord], provider: CropProvider):
        def embed_one(record: ManifestRecord):
            try:
                crop = provider.crop(record).image
                entry = GalleryEntry(record.sample_id, record.identity,
                                     self.backend.embed(crop, record.sample_id))
                return entry, crop
            except SKIPPABLE_ERRORS as e:
                self.logger.warning(f"Gallery entry {record.sample_id} skipped: {str(e)}")
                return None, None

        gallery, originals = [], {}
        for entry, crop in ordered_map(embed_one, records):
            if entry is not None:
                gallery.append(entry)
                originals[entry.sample_id] = (entry, crop)
        return gallery, originals

    def run(self, manifest: DatasetManifest, attacks: Sequence[str], seed: int) -> AttackEvalResult:
        """
        Sweep every evaluation sample under every attack.

        Raises:
            EvaluationError: If the evaluation split is empty or an attack is unknown
        """
        records = eval_records(manifest)
        if not records:
            raise EvaluationError("evaluation split is empty")
        unknown = [a for a in attacks if a not in EVAL_ATTACKS]
        if unknown:
            raise EvaluationError(f"Unknown attacks {unknown}; valid: {list(EVAL_ATTACKS)}")

        provider = self.provider or CropProvider(manifest)
        gallery, originals = self._gallery(records, provider)
        polarity = self.backend.polarity

        def evaluate(item: Tuple[int, ManifestRecord, str]):
            index, record, attack = item
            sample_id = record.sample_id
            if sample_id not in originals:
                return [], (sample_id, attack, 'original could not be embedded')
            original_entry, crop = originals[sample_id]
            try:
                attacked, applied = make_eval_attack(
                    crop, attack, attack_seed(seed, index, attack), self.sigma_range
                )
                key = sample_id if attack == 'none' else distorted_key(sample_id, attack)
                probe = self.backend.embed(attacked, key)
                self_score = normalize_score(self.backend.score(original_entry.embedding, probe))
                match_score = normalize_score(best_match_score(probe, gallery, sample_id, self.backend).score)
                _, qualities = predict_batch(self.model, self.heads, [attacked])
                predictions = [(name, float(values[0])) for name, values in qualities.items()]
                predictions.extend((name, BASELINES[name](attacked)) for name in self.baselines)
            except SKIPPABLE_ERRORS as e:
                return [], (sample_id, attack, str(e))

            return [
                EvalRecord(
                    sample_id=sample_id,
                    dataset=self.dataset,
                    attack=attack,
                    augmentation=applied,
                    model=model_name,
                    predicted_quality=quality,
                    match_score=match_score,
                    self_score=self_score,
                    backend=self.backend.name,
                    polarity=polarity
                )
                for model_name, quality in predictions
            ], None

        items = [(i, record, attack) for i, record in enumerate(records) for attack in attacks]
        result = AttackEvalResult()
        for item_records, skip in ordered_map(evaluate, items):
            if skip is not None:
                self.logger.warning(f"Skipped {skip[0]} under {skip[1]}: {skip[2]}")
                result.skipped.append(skip)
                continue
            result.records.extend(item_records)

        self.logger.info(
            f"Evaluated {len(records)} samples x {len(attacks)} attacks with {self.backend.name}: "
            f"{len(result.records)} records, {result.skipped_count} skipped"
        )
        return result


def run_attack_eval(manifest: DatasetManifest, model: MonetModel, heads: Mapping[str, QualityHead],
                    backend: RecognitionBackend, attacks: Sequence[str], seed: int,
                    provider: Optional[CropProvider] = None, dataset: str = 'dataset',
                    baselines: Sequence[str] = ()) -> AttackEvalResult:
    """Convenience wrapper around AttackEvaluator.run."""
    evaluator = AttackEvaluator(model, heads, backend, dataset=dataset,
                                baselines=baselines, provider=provider)
    return evaluator.run(manifest, attacks, seed)


def attack_effect_table(records: Sequence[EvalRecord]) -> List[AttackEffectRow]:
    """
    Mean normalized match and self scores per (dataset, backend, attack).

    Records repeat per model for the same probe; each probe counts once.
    """
    if not records:
        return []
    frame = pd.DataFrame([{
        'dataset': r.dataset,
        'backend': r.backend,
        'attack': r.attack,
        'sample_id': r.sample_id,
        'match_score': r.match_score,
        'self_score': r.self_score
    } for r in records])
    frame = frame.drop_duplicates(subset=['dataset', 'backend', 'attack', 'sample_id'])
    frame['attack_order'] = frame['attack'].map(EVAL_ATTACKS.index)
    summary = (frame.groupby(['dataset', 'backend', 'attack_order', 'attack'], sort=True)
               .agg(mean_match=('match_score', 'mean'),
                    mean_self=('self_score', 'mean'),
                    n=('sample_id', 'count'))
               .reset_index())
    return [
        AttackEffectRow(
            dataset=row.dataset,
            backend=row.backend,
            attack=row.attack,
            mean_match=float(row.mean_match),
            mean_self=float(row.mean_self),
            n=int(row.n)
        )
        for row in summary.itertuples(index=False)
    ]


def _best_models_metadata(cells: Sequence[ReportCell], count: int = 2) -> Dict[str, List[str]]:
    keys = list(dict.fromkeys(cell.row_key for cell in cells))
    return {'/'.join(key): top_models(cells, key, count) for key in keys}


def ablation_report(records: Sequence[EvalRecord], models: Sequence[str],
                    attacks: Optional[Sequence[str]] = None,
                    metadata: Optional[Dict[str, Any]] = None) -> EvalReport:
    """
    Correlation grid of the given models plus the attack-effect table.

    The report metadata lists, per grid row, the best and second-best model.
    """
    cells = CorrelationAnalyzer().build_grid(records, models=models, attacks=attacks)
    report_metadata = dict(metadata or {})
    report_metadata['best_models'] = _best_models_metadata(cells)
    return EvalReport(cells=cells, attack_effect=attack_effect_table(records), metadata=report_metadata)


def ablation_eval(manifest: DatasetManifest, model: MonetModel, heads: Mapping[str, QualityHead],
                  backend: RecognitionBackend, seed: int,
                  attacks: Sequence[str] = tuple(EVALUATION_CONFIG['attacks']),
                  provider: Optional[CropProvider] = None,
                  dataset: str = 'dataset') -> EvalReport:
    """
    Full (attack x score kind x head) grid for heads sharing one frozen extractor.

    Every head is scored on the same attacked probes.
    """
    result = run_attack_eval(manifest, model, heads, backend, attacks, seed,
                             provider=provider, dataset=dataset)
    return ablation_report(result.records, list(heads), attacks,
                           metadata={'seed': seed, 'skipped': result.skipped_count})


def baseline_comparison(records: Sequence[EvalRecord], baselines: Sequence[str],
                        models: Optional[Sequence[str]] = None) -> List[ReportCell]:
    """
    FQA-vs-baselines grid from the same records; baseline predictions must
    have been computed on the attacked probes during the sweep.
    """
    present = {r.model for r in records}
    missing = [name for name in baselines if name not in present]
    if missing:
        raise EvaluationError(f"records hold no predictions for baselines {missing}")
    heads = list(models) if models is not None else [
        m for m in dict.fromkeys(r.model for r in records) if m not in baselines
    ]
    return CorrelationAnalyzer().build_grid(records, models=heads + list(baselines))


def cross_backend_grid(manifest: DatasetManifest, model: MonetModel,
                       heads_by_label_backend: Mapping[str, Mapping[str, QualityHead]],
                       eval_backends: Sequence[RecognitionBackend], seed: int,
                       attacks: Sequence[str] = tuple(EVALUATION_CONFIG['attacks']),
                       provider: Optional[CropProvider] = None,
                       dataset: str = 'dataset') -> EvalReport:
    """
    Heads trained on the labels of one backend evaluated against the scores of
    every backend. Models are named '<variant>@<label backend>'; coefficients
    against distance-polarity backends are negated.
    """
    heads = {
        f"{variant}@{label_backend}": head
        for label_backend, variants in heads_by_label_backend.items()
        for variant, head in variants.items()
    }
    combined = AttackEvalResult()
    for backend in eval_backends:
        combined.extend(run_attack_eval(manifest, model, heads, backend, attacks, seed,
                                        provider=provider, dataset=dataset))
    return ablation_report(combined.records, list(heads), attacks,
                           metadata={'seed': seed, 'skipped': combined.skipped_count,
                                     'eval_backends': [b.name for b in eval_backends]})


def natural_eval(manifest: DatasetManifest, model: MonetModel, heads: Mapping[str, QualityHead],
                 backend: RecognitionBackend, seed: int,
                 provider: Optional[CropProvider] = None, dataset: str = 'dataset',
                 baselines: Sequence[str] = ()) -> EvalReport:
    """
    Evaluation without synthetic attacks, for naturally degraded inputs. Self
    cells are skipped (self scores are constant); match cells carry the result.
    """
    result = run_attack_eval(manifest, model, heads, backend, ('none',), seed,
                             provider=provider, dataset=dataset, baselines=baselines)
    return ablation_report(result.records, list(heads) + list(baselines), ('none',),
                           metadata={'seed': seed, 'skipped': result.skipped_count})


def mean_scores(records: Sequence[EvalRecord], score_kind: str) -> Dict[str, float]:
    """Mean normalized score per attack, each probe counted once."""
    if score_kind not in VALID_SCORE_KINDS:
        raise EvaluationError(f"score_kind must be one of {list(VALID_SCORE_KINDS)}")
    seen, values = set(), {}
    for record in records:
        key = (record.dataset, record.backend, record.attack, record.sample_id)
        if key in seen:
            continue
        seen.add(key)
        values.setdefault(record.attack, []).append(record.score(score_kind))
    return {attack: float(np.mean(v)) for attack, v in values.items()}
