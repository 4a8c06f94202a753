"""
Dataset manifest ingestion.

Supported inputs:
- jsonl manifests, one object per line with keys `path`, `identity`, `bbox`
  ([x, y, w, h]), `landmarks` ([x1, y1, ..., x5, y5]) and optional `split`
- CelebA annotation triplets (identity list, bbox list, landmark list, plus
  the optional evaluation partition), joined on image filename
- LFW pairs text files resolved against a manifest
"""
import json
import logging
import os
from typing import Dict, List, Optional, Tuple

import cv2
import numpy as np

from ..models.face_sample import BoundingBox, FaceSample, LandmarkSet
from ..models.manifest import DatasetManifest, ManifestRecord, Pair, PairList

CELEBA_IDENTITY_FILE = 'identity_CelebA.txt'
CELEBA_BBOX_FILE = 'list_bbox_celeba.txt'
CELEBA_LANDMARK_FILE = 'list_landmarks_celeba.txt'
CELEBA_PARTITION_FILE = 'list_eval_partition.txt'
CELEBA_IMAGE_DIR = 'img_celeba'


class ManifestError(Exception):
    """Custom exception for manifest loading errors"""
    pass


class ManifestParseError(ManifestError):
    """Malformed manifest line; the message names the file and line number"""

    def __init__(self, path: str, line_number: int, reason: str):
        self.path = path
        self.line_number = line_number
        super().__init__(f"{path}: line {line_number}: {reason}")


class SplitError(Exception):
    """Custom exception for train/eval split errors"""
    pass


class ManifestLoader:
    """
    Loads dataset manifests from jsonl files or CelebA annotation triplets.
    """

    def __init__(self):
        self.logger = logging.getLogger(__name__)

    def load(self, path: str, format: str = 'jsonl') -> DatasetManifest:
        """
        Load a manifest.

        Args:
            path: jsonl file, or directory holding the CelebA annotation files
            format: 'jsonl' or 'celeba_triplet'

        Returns:
            DatasetManifest with one record per annotated image

        Raises:
            ManifestError: If a file is missing or unreadable
            ManifestParseError: If a line is malformed
        """
        if format == 'jsonl':
            return self.load_jsonl(path)
        if format == 'celeba_triplet':
            return self.load_celeba_triplet(path)
        raise ManifestError(f"Unknown manifest format: {format}")

    def load_jsonl(self, path: str) -> DatasetManifest:
        lines = _read_lines(path)
        records: List[ManifestRecord] = []
        seen = set()
        dropped = 0

        for line_number, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as e:
                raise ManifestParseError(path, line_number, f"invalid JSON ({e.msg})")
            if not isinstance(data, dict):
                raise ManifestParseError(path, line_number, "expected a JSON object")

            if data.get('bbox') is None or data.get('landmarks') is None:
                self.logger.warning(f"{path}: line {line_number}: missing annotation, record dropped")
                dropped += 1
                continue

            try:
                record = ManifestRecord.from_dict(data)
            except (KeyError, TypeError, ValueError) as e:
                raise ManifestParseError(path, line_number, str(e))

            if record.path in seen:
                raise ManifestParseError(path, line_number, f"duplicate path {record.path}")
            seen.add(record.path)
            records.append(record)

        if dropped:
            self.logger.warning(f"Dropped {dropped} records with missing annotations from {path}")
        self.logger.info(f"Loaded {len(records)} manifest records from {path}")
        return DatasetManifest(
            records=records,
            root=os.path.dirname(os.path.abspath(path)),
            dropped_count=dropped
        )

    def load_celeba_triplet(self, directory: str,
                            image_dir: str = CELEBA_IMAGE_DIR) -> DatasetManifest:
        """
        Join the CelebA identity, bbox and landmark lists on image filename.

        Images present in the identity list but lacking a bbox or landmark
        line are dropped and counted. When list_eval_partition.txt exists,
        partition 0 maps to 'train' and partitions 1/2 to 'eval'.
        """
        if not os.path.isdir(directory):
            raise ManifestError(f"CelebA annotation directory not found: {directory}")

        identity_path = os.path.join(directory, CELEBA_IDENTITY_FILE)
        identities = _read_celeba_table(identity_path, n_values=1, numeric=False)
        bboxes = _read_celeba_table(os.path.join(directory, CELEBA_BBOX_FILE), n_values=4)
        landmarks = _read_celeba_table(os.path.join(directory, CELEBA_LANDMARK_FILE), n_values=10)

        partition_path = os.path.join(directory, CELEBA_PARTITION_FILE)
        partitions = {}
        if os.path.exists(partition_path):
            partitions = _read_celeba_table(partition_path, n_values=1)

        records = []
        dropped = 0
        for filename, (identity,) in identities.items():
            if filename not in bboxes or filename not in landmarks:
                self.logger.warning(f"{filename}: missing bbox or landmark annotation, record dropped")
                dropped += 1
                continue
            split = 'train'
            if filename in partitions and int(partitions[filename][0]) != 0:
                split = 'eval'
            try:
                records.append(ManifestRecord(
                    path=filename,
                    identity=str(identity),
                    bbox=BoundingBox.from_list(bboxes[filename]),
                    landmarks=LandmarkSet.from_flat(landmarks[filename]),
                    split=split
                ))
            except ValueError as e:
                self.logger.warning(f"{filename}: invalid annotation ({str(e)}), record dropped")
                dropped += 1

        if dropped:
            self.logger.warning(f"Dropped {dropped} CelebA records with missing annotations")
        self.logger.info(f"Loaded {len(records)} CelebA records from {directory}")

        root = os.path.join(directory, image_dir)
        if not os.path.isdir(root):
            root = directory
        return DatasetManifest(records=records, root=os.path.abspath(root), dropped_count=dropped)


def _read_lines(path: str) -> List[str]:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return f.read().splitlines()
    except OSError as e:
        raise ManifestError(f"Failed to read {path}: {str(e)}")


def _read_celeba_table(path: str, n_values: int, numeric: bool = True) -> Dict[str, tuple]:
    """
    Read a whitespace-delimited CelebA annotation list.

    The bbox and landmark lists open with a count line and a column header
    line; the identity and partition lists have neither. Both layouts are
    accepted.
    """
    lines = _read_lines(path)
    table: Dict[str, tuple] = {}
    start = 0
    if lines and len(lines[0].split()) == 1 and lines[0].strip().isdigit():
        start = 2

    for offset, line in enumerate(lines[start:], start=start + 1):
        tokens = line.split()
        if not tokens:
            continue
        if len(tokens) != n_values + 1:
            raise ManifestParseError(
                path, offset, f"expected {n_values + 1} columns, got {len(tokens)}"
            )
        filename, values = tokens[0], tokens[1:]
        if numeric:
            try:
                values = [float(v) for v in values]
            except ValueError:
                raise ManifestParseError(path, offset, "non-numeric annotation value")
        table[filename] = tuple(values)
    return table


def load_manifest(path: str, format: str = 'jsonl') -> DatasetManifest:
    """Convenience wrapper around ManifestLoader.load."""
    return ManifestLoader().load(path, format)


def save_manifest(manifest: DatasetManifest, path: str) -> None:
    """
    Write a manifest as jsonl, one record per line in manifest order.

    Raises:
        ManifestError: If the file cannot be written
    """
    try:
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            for record in manifest.records:
                f.write(record.to_json() + '\n')
    except OSError as e:
        raise ManifestError(f"Failed to write manifest {path}: {str(e)}")


def load_face_sample(record: ManifestRecord, root: str = '.') -> FaceSample:
    """
    Read a manifest record's image (OpenCV, converted to RGB) into a FaceSample.

    Raises:
        ManifestError: If the image cannot be read or the annotations do not fit it
    """
    image_path = record.path if os.path.isabs(record.path) else os.path.join(root, record.path)
    image = cv2.imread(image_path, cv2.IMREAD_COLOR)
    if image is None:
        raise ManifestError(f"Failed to read image {image_path}")
    image = np.ascontiguousarray(cv2.cvtColor(image, cv2.COLOR_BGR2RGB))
    try:
        return FaceSample(
            image=image,
            identity=record.identity,
            source_id=record.sample_id,
            bbox=record.bbox,
            landmarks=record.landmarks
        )
    except ValueError as e:
        raise ManifestError(f"Record {record.path} does not fit its image: {str(e)}")


def load_lfw_pairs(path: str, manifest: DatasetManifest) -> PairList:
    """
    Parse an LFW pairs file and resolve its references against a manifest.

    Same-identity lines read `name i j`, different-identity lines
    `name1 i name2 j`. `name i` resolves to the record with that identity
    whose file stem is `name_000i` (LFW naming). Pairs with an unresolved
    reference are dropped and counted.

    Raises:
        ManifestError: If the file cannot be read
        ManifestParseError: If a line has neither 3 nor 4 fields
    """
    logger = logging.getLogger(__name__)
    lines = _read_lines(path)

    by_stem: Dict[Tuple[str, str], str] = {}
    for record in manifest.records:
        stem = os.path.splitext(os.path.basename(record.path))[0]
        by_stem[(record.identity, stem)] = record.sample_id

    def resolve(name: str, index: str) -> Optional[str]:
        return by_stem.get((name, f"{name}_{int(index):04d}"))

    pairs = []
    unresolved = 0
    for line_number, line in enumerate(lines, start=1):
        tokens = line.split()
        if not tokens:
            continue
        # header line holds the fold count and pairs per fold
        if line_number == 1 and all(t.isdigit() for t in tokens):
            continue
        try:
            if len(tokens) == 3:
                name, i, j = tokens
                refs = (resolve(name, i), resolve(name, j))
                same = True
            elif len(tokens) == 4:
                name_a, i, name_b, j = tokens
                refs = (resolve(name_a, i), resolve(name_b, j))
                same = False
            else:
                raise ManifestParseError(path, line_number, f"expected 3 or 4 fields, got {len(tokens)}")
        except ValueError:
            raise ManifestParseError(path, line_number, "image index must be an integer")

        if refs[0] is None or refs[1] is None:
            unresolved += 1
            continue
        pairs.append(Pair(refs[0], refs[1], same))

    if unresolved:
        logger.warning(f"Dropped {unresolved} pairs with references missing from the manifest")
    logger.info(f"Loaded {len(pairs)} pairs from {path}")
    return PairList(pairs=pairs, unresolved_count=unresolved)


def split_train_eval(manifest: DatasetManifest, eval_fraction: float,
                     seed: int) -> Tuple[DatasetManifest, DatasetManifest]:
    """
    Identity-disjoint train/eval split.

    Identities are sorted, permuted with a generator seeded by `seed` and the
    first round(eval_fraction * n) (clamped to [1, n - 1]) go to eval.

    Args:
        manifest: Manifest to split
        eval_fraction: Fraction of identities assigned to eval, 0 < f < 1
        seed: Permutation seed

    Returns:
        (train manifest, eval manifest) with split tags set

    Raises:
        SplitError: If the fraction is out of range or fewer than 2 identities exist
    """
    if not (0.0 < eval_fraction < 1.0):
        raise SplitError("eval_fraction must be in (0, 1)")
    identities = manifest.identities()
    if len(identities) < 2:
        raise SplitError(f"split needs at least 2 identities, got {len(identities)}")

    rng = np.random.default_rng(seed)
    order = rng.permutation(len(identities))
    n_eval = min(max(int(round(eval_fraction * len(identities))), 1), len(identities) - 1)
    eval_identities = {identities[i] for i in order[:n_eval]}

    train_records = [r for r in manifest.records if r.identity not in eval_identities]
    eval_records = [r for r in manifest.records if r.identity in eval_identities]
    train = DatasetManifest(records=train_records, root=manifest.root).with_split('train')
    evaluation = DatasetManifest(records=eval_records, root=manifest.root).with_split('eval')
    logging.getLogger(__name__).info(
        f"Split {len(identities)} identities: {len(identities) - n_eval} train, {n_eval} eval"
    )
    return train, evaluation
