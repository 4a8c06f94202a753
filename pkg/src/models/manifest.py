"""
Dataset manifest and pair list data models with validation methods.
"""
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Iterator, List, Optional
import json

from .face_sample import BoundingBox, LandmarkSet

VALID_SPLITS = ('train', 'eval')


@dataclass(frozen=True)
class ManifestRecord:
    """
    One annotated image of a dataset manifest.

    Attributes:
        path: Image path, relative to the manifest root (also the sample id)
        identity: Identity label
        bbox: Face bounding box
        landmarks: Five-point landmarks
        split: 'train' or 'eval'
    """
    path: str
    identity: str
    bbox: BoundingBox
    landmarks: LandmarkSet
    split: str = 'train'

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not self.path or not isinstance(self.path, str):
            raise ValueError("path must be a non-empty string")
        if not self.identity or not isinstance(self.identity, str):
            raise ValueError("identity must be a non-empty string")
        if self.split not in VALID_SPLITS:
            raise ValueError(f"split must be one of {list(VALID_SPLITS)}")

    @property
    def sample_id(self) -> str:
        return self.path

    def to_dict(self) -> Dict[str, Any]:
        return {
            'path': self.path,
            'identity': self.identity,
            'bbox': self.bbox.to_list(),
            'landmarks': self.landmarks.to_flat(),
            'split': self.split
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ManifestRecord':
        return cls(
            path=data['path'],
            identity=str(data['identity']),
            bbox=BoundingBox.from_list(data['bbox']),
            landmarks=LandmarkSet.from_flat(data['landmarks']),
            split=data.get('split', 'train')
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass
class DatasetManifest:
    """
    Ordered collection of manifest records.

    Attributes:
        records: Records in file order
        root: Directory that record paths are relative to
        dropped_count: Records dropped at load time for missing annotations
    """
    records: List[ManifestRecord]
    root: str = '.'
    dropped_count: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        seen = set()
        for record in self.records:
            if record.path in seen:
                raise ValueError(f"duplicate manifest path: {record.path}")
            seen.add(record.path)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[ManifestRecord]:
        return iter(self.records)

    def identities(self) -> List[str]:
        """Sorted distinct identities."""
        return sorted({record.identity for record in self.records})

    def by_split(self, split: str) -> 'DatasetManifest':
        return DatasetManifest(
            records=[r for r in self.records if r.split == split],
            root=self.root
        )

    def has_split(self, split: str) -> bool:
        return any(r.split == split for r in self.records)

    def index(self) -> Dict[str, ManifestRecord]:
        """Map of sample id to record."""
        return {record.path: record for record in self.records}

    def get(self, sample_id: str) -> Optional[ManifestRecord]:
        return self.index().get(sample_id)

    def with_split(self, split: str) -> 'DatasetManifest':
        """Copy of the manifest with every record tagged with `split`."""
        return DatasetManifest(
            records=[replace(r, split=split) for r in self.records],
            root=self.root
        )


@dataclass(frozen=True)
class Pair:
    """Verification pair referencing two manifest sample ids."""
    sample_ref_a: str
    sample_ref_b: str
    same_identity: bool


@dataclass
class PairList:
    """
    Verification pairs resolved against a manifest.

    Attributes:
        pairs: Resolved pairs
        unresolved_count: Pairs dropped because a ref was missing from the manifest
    """
    pairs: List[Pair] = field(default_factory=list)
    unresolved_count: int = 0

    def __len__(self) -> int:
        return len(self.pairs)

    def matched(self) -> List[Pair]:
        return [p for p in self.pairs if p.same_identity]

    def mismatched(self) -> List[Pair]:
        return [p for p in self.pairs if not p.same_identity]
