"""
Training label generation.

Each training crop is distorted draws_per_sample times with the configured
augmentation mode, every draw from its own seed. Each copy is labelled with
the recognition score of the distorted crop: by default its similarity to
its own undistorted original ('self'), optionally its best match among the
other undistorted images of the same identity ('best_match'). Labels stay
in the normalized high-is-better orientation and are not clamped.
"""
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..augmentation.distortions import (
    apply_training_augmentation,
    derive_seed,
    normalize_mode,
    replay_augmentation,
)
from ..concurrency import ordered_map
from ..data_ingestion.crops import CropError, CropProvider
from ..data_ingestion.manifest_loader import ManifestError
from ..models.augmentation_record import AppliedAugmentation, AugmentationSpec
from ..models.manifest import DatasetManifest, ManifestRecord
from .backends import RecognitionBackend, RecognitionError
from .scoring import GalleryEntry, best_match_score, normalize_score, self_similarity

LABEL_MODES = ('self', 'best_match')

logger = logging.getLogger(__name__)


def distorted_key(sample_id: str, suffix: str) -> str:
    """Lookup key of a distorted image for key-based backends."""
    return f"{sample_id}@{suffix}"


def training_suffix(draw: int) -> str:
    """'train' for the first augmented copy, 'train<draw>' for later ones."""
    return 'train' if draw == 0 else f"train{draw}"


@dataclass(frozen=True)
class LabelRow:
    """One label table row: sample reference, draw index, applied augmentation and label."""
    sample_id: str
    augmentation: AppliedAugmentation
    label: float
    draw: int = 0

    @property
    def key(self) -> Tuple[str, int]:
        return self.sample_id, self.draw

    def to_dict(self) -> Dict[str, Any]:
        return {
            'sample_id': self.sample_id,
            'draw': self.draw,
            'augmentation': self.augmentation.to_dict(),
            'label': self.label
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'LabelRow':
        return cls(
            sample_id=data['sample_id'],
            augmentation=AppliedAugmentation.from_dict(data['augmentation']),
            label=float(data['label']),
            draw=int(data.get('draw', 0))
        )


@dataclass
class LabelTable:
    """
    Ordered label rows plus skip accounting.

    Attributes:
        rows: Rows in training-record order, draws of one record adjacent
        skipped: (sample id, reason) of skipped records
        crops: Augmented crops by (sample id, draw), kept only when requested
    """
    rows: List[LabelRow] = field(default_factory=list)
    skipped: List[Tuple[str, str]] = field(default_factory=list)
    crops: Dict[Tuple[str, int], np.ndarray] = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def skipped_count(self) -> int:
        return len(self.skipped)

    def labels(self) -> np.ndarray:
        return np.array([row.label for row in self.rows], dtype=np.float64)

    def mean_label(self) -> float:
        return float(self.labels().mean()) if self.rows else float('nan')

    def to_jsonl(self) -> str:
        return ''.join(json.dumps(row.to_dict(), sort_keys=True) + '\n' for row in self.rows)

    def save(self, path: str) -> None:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(self.to_jsonl())

    @classmethod
    def from_jsonl(cls, text: str) -> 'LabelTable':
        rows = []
        for line_number, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                rows.append(LabelRow.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise RecognitionError(f"label table line {line_number}: {str(e)}")
        return cls(rows=rows)

    @classmethod
    def load(cls, path: str) -> 'LabelTable':
        try:
            with open(path, 'r', encoding='utf-8') as f:
                return cls.from_jsonl(f.read())
        except OSError as e:
            raise RecognitionError(f"Failed to read label table {path}: {str(e)}")


def training_records(manifest: DatasetManifest) -> List[ManifestRecord]:
    """Records tagged 'train' (all records when the manifest has no train tag)."""
    if manifest.has_split('train'):
        return manifest.by_split('train').records
    return list(manifest.records)


class LabelGenerator:
    """
    Generates recognition-score labels for augmented training crops.
    """

    def __init__(self, backend: RecognitionBackend, spec: AugmentationSpec,
                 mode: str, seed: int, label_mode: str = 'self'):
        if label_mode not in LABEL_MODES:
            raise RecognitionError(f"label_mode must be one of {list(LABEL_MODES)}")
        self.backend = backend
        self.spec = spec
        self.mode = normalize_mode(mode)
        self.seed = seed
        self.label_mode = label_mode
        self.logger = logging.getLogger(__name__)

    def _gallery(self, records: List[ManifestRecord],
                 provider: CropProvider) -> Dict[str, List[GalleryEntry]]:
        def embed_one(record: ManifestRecord) -> Optional[GalleryEntry]:
            try:
                crop = provider.crop(record).image
                return GalleryEntry(record.sample_id, record.identity,
                                    self.backend.embed(crop, record.sample_id))
            except (RecognitionError, CropError, ManifestError) as e:
                self.logger.warning(f"Gallery entry {record.sample_id} skipped: {str(e)}")
                return None

        by_identity: Dict[str, List[GalleryEntry]] = {}
        for entry in ordered_map(embed_one, records):
            if entry is not None:
                by_identity.setdefault(entry.identity, []).append(entry)
        return by_identity

    def generate(self, manifest: DatasetManifest, provider: Optional[CropProvider] = None,
                 keep_crops: bool = False) -> LabelTable:
        """
        Label every training record.

        Args:
            manifest: Dataset manifest
            provider: Crop source (reads images under the manifest root when None)
            keep_crops: Keep augmented crops in the returned table

        Returns:
            LabelTable with draws_per_sample rows per labelled record; a
            record where any draw fails (degenerate embedding, unreadable
            image, empty gallery) is skipped as a whole and counted once
        """
        provider = provider or CropProvider(manifest)
        records = training_records(manifest)
        gallery = self._gallery(records, provider) if self.label_mode == 'best_match' else {}
        draws = self.spec.draws_per_sample

        def label_draw(record: ManifestRecord, crop: np.ndarray, index: int, draw: int):
            augmented, applied = apply_training_augmentation(
                crop, self.spec, self.mode, derive_seed(self.seed, index * draws + draw)
            )
            key = record.sample_id if applied.is_identity else distorted_key(record.sample_id,
                                                                              training_suffix(draw))
            if self.label_mode == 'self':
                score = self_similarity(self.backend, crop, augmented,
                                        key=record.sample_id, distorted_key=key)
            else:
                probe = self.backend.embed(augmented, key)
                score = best_match_score(
                    probe, gallery.get(record.identity, []), record.sample_id, self.backend
                ).score
            return LabelRow(record.sample_id, applied, normalize_score(score), draw), augmented

        def label_one(item: Tuple[int, ManifestRecord]):
            index, record = item
            try:
                crop = provider.crop(record).image
                return [label_draw(record, crop, index, draw) for draw in range(draws)], None
            except (RecognitionError, CropError, ManifestError) as e:
                return [], (record.sample_id, str(e))

        table = LabelTable()
        for labelled, skip in ordered_map(label_one, list(enumerate(records))):
            if skip is not None:
                self.logger.warning(f"Skipped {skip[0]}: {skip[1]}")
                table.skipped.append(skip)
                continue
            for row, augmented in labelled:
                table.rows.append(row)
                if keep_crops:
                    table.crops[row.key] = augmented

        self.logger.info(
            f"Generated {len(table)} label rows ({self.mode}, {self.label_mode}); "
            f"skipped {table.skipped_count}"
        )
        return table


def generate_labels(manifest: DatasetManifest, backend: RecognitionBackend,
                    spec: AugmentationSpec, mode: str, seed: int,
                    label_mode: str = 'self', provider: Optional[CropProvider] = None,
                    keep_crops: bool = False) -> LabelTable:
    """Convenience wrapper around LabelGenerator.generate."""
    return LabelGenerator(backend, spec, mode, seed, label_mode).generate(manifest, provider, keep_crops)


def materialize_crops(table: LabelTable, manifest: DatasetManifest,
                      provider: Optional[CropProvider] = None) -> List[np.ndarray]:
    """
    Augmented crops of every label row, in row order. Crops kept in the table
    are reused; the others are rebuilt by replaying the recorded augmentation.

    Raises:
        RecognitionError: If a row references a sample missing from the manifest
    """
    provider = provider or CropProvider(manifest)
    index = manifest.index()

    def build(row: LabelRow) -> np.ndarray:
        if row.key in table.crops:
            return table.crops[row.key]
        record = index.get(row.sample_id)
        if record is None:
            raise RecognitionError(f"label row references unknown sample {row.sample_id}")
        return replay_augmentation(provider.crop(record).image, row.augmentation)

    return ordered_map(build, table.rows)
