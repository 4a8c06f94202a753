"""
Tests for manifest ingestion, LFW pairs and the identity split.
"""
import json

import cv2
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.data_ingestion import (
    ManifestError,
    ManifestLoader,
    ManifestParseError,
    SplitError,
    load_face_sample,
    load_lfw_pairs,
    load_manifest,
    save_manifest,
    split_train_eval,
)
from src.models import BoundingBox, DatasetManifest, LandmarkSet, ManifestRecord

LANDMARKS = [30, 40, 70, 40, 50, 60, 35, 80, 65, 80]


def row(path, identity, split=None, **extra):
    data = {'path': path, 'identity': identity, 'bbox': [10, 10, 80, 90], 'landmarks': LANDMARKS}
    if split:
        data['split'] = split
    data.update(extra)
    return data


def write_jsonl(path, rows):
    path.write_text(''.join(json.dumps(r) + '\n' for r in rows))
    return str(path)


def make_manifest(identities, per_identity=2):
    records = [
        ManifestRecord(f"{name}/{name}_{i + 1:04d}.png", name, BoundingBox(0, 0, 10, 10),
                       LandmarkSet.from_flat(LANDMARKS))
        for name in identities for i in range(per_identity)
    ]
    return DatasetManifest(records=records)


class TestJsonlManifest:
    """Test cases for jsonl manifests."""

    def setup_method(self):
        self.loader = ManifestLoader()

    def test_load_in_file_order(self, tmp_path):
        """Test records keep file order and the root is the manifest directory."""
        path = write_jsonl(tmp_path / 'm.jsonl', [row('b.png', 'bob'), row('a.png', 'alice', 'eval')])
        manifest = self.loader.load(path)
        assert [r.path for r in manifest] == ['b.png', 'a.png']
        assert manifest.records[1].split == 'eval'
        assert manifest.root == str(tmp_path)

    def test_missing_annotation_dropped_and_counted(self, tmp_path):
        """Test records without landmarks are dropped, not fatal."""
        rows = [row('a.png', 'alice'), {'path': 'b.png', 'identity': 'bob', 'bbox': [0, 0, 5, 5]}]
        manifest = self.loader.load(write_jsonl(tmp_path / 'm.jsonl', rows))
        assert len(manifest) == 1
        assert manifest.dropped_count == 1

    def test_malformed_json_names_line(self, tmp_path):
        """Test a broken line is reported with its number."""
        path = tmp_path / 'm.jsonl'
        path.write_text(json.dumps(row('a.png', 'alice')) + '\n{not json\n')
        with pytest.raises(ManifestParseError, match="line 2") as info:
            self.loader.load(str(path))
        assert info.value.line_number == 2

    def test_wrong_landmark_count(self, tmp_path):
        """Test a record with nine landmark values is a parse error."""
        rows = [row('a.png', 'alice', landmarks=LANDMARKS[:9])]
        with pytest.raises(ManifestParseError, match="landmarks require 10 numbers"):
            self.loader.load(write_jsonl(tmp_path / 'm.jsonl', rows))

    def test_duplicate_path(self, tmp_path):
        """Test duplicate paths are rejected with the line number."""
        rows = [row('a.png', 'alice'), row('a.png', 'bob')]
        with pytest.raises(ManifestParseError, match="line 2: duplicate path a.png"):
            self.loader.load(write_jsonl(tmp_path / 'm.jsonl', rows))

    def test_missing_file(self, tmp_path):
        """Test a missing manifest raises ManifestError."""
        with pytest.raises(ManifestError, match="Failed to read"):
            load_manifest(str(tmp_path / 'missing.jsonl'))

    def test_unknown_format(self, tmp_path):
        """Test unknown formats are rejected."""
        with pytest.raises(ManifestError, match="Unknown manifest format"):
            load_manifest(str(tmp_path), 'csv')

    def test_save_then_load(self, tmp_path):
        """Test saved manifests load back to the same records."""
        manifest = make_manifest(['alice', 'bob'])
        path = tmp_path / 'out' / 'm.jsonl'
        save_manifest(manifest, str(path))
        assert load_manifest(str(path)).records == manifest.records


class TestCelebaTriplet:
    """Test cases for the CelebA annotation triplet."""

    def write_triplet(self, directory, with_partition=True):
        (directory / 'identity_CelebA.txt').write_text("000001.jpg 7\n000002.jpg 7\n000003.jpg 9\n")
        (directory / 'list_bbox_celeba.txt').write_text(
            "2\nimage_id x_1 y_1 width height\n000001.jpg 10 20 100 120\n000003.jpg 5 5 50 60\n")
        (directory / 'list_landmarks_celeba.txt').write_text(
            "3\nlefteye_x lefteye_y righteye_x righteye_y nose_x nose_y "
            "leftmouth_x leftmouth_y rightmouth_x rightmouth_y\n"
            "000001.jpg 40 60 80 60 60 80 45 100 75 100\n"
            "000002.jpg 40 60 80 60 60 80 45 100 75 100\n"
            "000003.jpg 20 20 40 20 30 30 22 45 38 45\n")
        if with_partition:
            (directory / 'list_eval_partition.txt').write_text("000001.jpg 0\n000002.jpg 0\n000003.jpg 2\n")

    def test_join_on_filename(self, tmp_path):
        """Test the three lists join and records missing a bbox are dropped."""
        self.write_triplet(tmp_path)
        manifest = load_manifest(str(tmp_path), 'celeba_triplet')
        assert [r.path for r in manifest] == ['000001.jpg', '000003.jpg']
        assert manifest.dropped_count == 1
        assert manifest.records[0].identity == '7'
        assert manifest.records[0].bbox.to_list() == [10.0, 20.0, 100.0, 120.0]

    def test_partition_maps_to_split(self, tmp_path):
        """Test partition 0 is train and partition 2 is eval."""
        self.write_triplet(tmp_path)
        manifest = load_manifest(str(tmp_path), 'celeba_triplet')
        assert [r.split for r in manifest] == ['train', 'eval']

    def test_without_partition_everything_trains(self, tmp_path):
        """Test the partition list is optional."""
        self.write_triplet(tmp_path, with_partition=False)
        manifest = load_manifest(str(tmp_path), 'celeba_triplet')
        assert {r.split for r in manifest} == {'train'}

    def test_bad_column_count(self, tmp_path):
        """Test a short bbox line is a parse error."""
        self.write_triplet(tmp_path)
        (tmp_path / 'list_bbox_celeba.txt').write_text("000001.jpg 10 20 100\n")
        with pytest.raises(ManifestParseError, match="expected 5 columns"):
            load_manifest(str(tmp_path), 'celeba_triplet')

    def test_missing_directory(self, tmp_path):
        """Test a missing annotation directory."""
        with pytest.raises(ManifestError, match="not found"):
            load_manifest(str(tmp_path / 'nope'), 'celeba_triplet')


class TestLfwPairs:
    """Test cases for LFW pairs parsing."""

    def setup_method(self):
        self.manifest = make_manifest(['Ann', 'Ben'], per_identity=3)

    def test_resolves_same_and_different(self, tmp_path):
        """Test both line shapes resolve to manifest sample ids."""
        path = tmp_path / 'pairs.txt'
        path.write_text("1 2\nAnn 1 2\nAnn 3 Ben 1\n")
        pairs = load_lfw_pairs(str(path), self.manifest)
        assert len(pairs) == 2
        assert pairs.matched()[0].sample_ref_a == 'Ann/Ann_0001.png'
        assert pairs.mismatched()[0].sample_ref_b == 'Ben/Ben_0001.png'

    def test_unresolved_dropped(self, tmp_path):
        """Test pairs referencing missing images are dropped and counted."""
        path = tmp_path / 'pairs.txt'
        path.write_text("Ann 1 9\nCat 1 Ben 2\nBen 1 2\n")
        pairs = load_lfw_pairs(str(path), self.manifest)
        assert len(pairs) == 1
        assert pairs.unresolved_count == 2

    def test_bad_line(self, tmp_path):
        """Test a line with two fields is a parse error."""
        path = tmp_path / 'pairs.txt'
        path.write_text("Ann 1 2\nAnn 1\n")
        with pytest.raises(ManifestParseError, match="line 2: expected 3 or 4 fields"):
            load_lfw_pairs(str(path), self.manifest)


class TestSplit:
    """Test cases for the identity-disjoint split."""

    def test_identity_disjoint(self):
        """Test no identity lands in both splits."""
        manifest = make_manifest([f"p{i}" for i in range(10)])
        train, evaluation = split_train_eval(manifest, 0.2, seed=3)
        assert len(evaluation.identities()) == 2
        assert not set(train.identities()) & set(evaluation.identities())
        assert {r.split for r in evaluation} == {'eval'}
        assert len(train) + len(evaluation) == len(manifest)

    def test_deterministic(self):
        """Test equal seeds give equal splits."""
        manifest = make_manifest([f"p{i}" for i in range(10)])
        assert split_train_eval(manifest, 0.3, 5)[1].identities() == \
            split_train_eval(manifest, 0.3, 5)[1].identities()

    def test_single_identity(self):
        """Test one identity cannot be split."""
        with pytest.raises(SplitError, match="at least 2 identities"):
            split_train_eval(make_manifest(['solo']), 0.5, 0)

    def test_fraction_range(self):
        """Test the fraction must lie strictly between 0 and 1."""
        with pytest.raises(SplitError, match="eval_fraction must be in"):
            split_train_eval(make_manifest(['a', 'b']), 1.0, 0)

    @settings(max_examples=30, deadline=None)
    @given(n=st.integers(min_value=2, max_value=30), fraction=st.floats(min_value=0.01, max_value=0.99),
           seed=st.integers(min_value=0, max_value=2**31))
    def test_both_splits_non_empty(self, n, fraction, seed):
        """Test clamping keeps at least one identity on each side."""
        train, evaluation = split_train_eval(make_manifest([f"p{i}" for i in range(n)], 1), fraction, seed)
        assert 1 <= len(evaluation.identities()) <= n - 1
        assert len(train.identities()) + len(evaluation.identities()) == n


class TestLoadFaceSample:
    """Test cases for image reading."""

    def test_reads_rgb(self, tmp_path):
        """Test images are converted from BGR to RGB."""
        image = np.zeros((20, 20, 3), np.uint8)
        image[:, :, 0] = 200
        cv2.imwrite(str(tmp_path / 'a.png'), cv2.cvtColor(image, cv2.COLOR_RGB2BGR))
        record = ManifestRecord('a.png', 'alice', BoundingBox(2, 2, 10, 10), LandmarkSet.from_flat(LANDMARKS))
        sample = load_face_sample(record, str(tmp_path))
        assert sample.image[0, 0, 0] == 200
        assert sample.image[0, 0, 2] == 0

    def test_unreadable_image(self, tmp_path):
        """Test a missing image raises ManifestError."""
        record = ManifestRecord('a.png', 'alice', BoundingBox(2, 2, 10, 10), LandmarkSet.from_flat(LANDMARKS))
        with pytest.raises(ManifestError, match="Failed to read image"):
            load_face_sample(record, str(tmp_path))
