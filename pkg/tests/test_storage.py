"""
Tests for the tensor archive codec and the local artifact store.
"""
import hashlib
import json
import struct

import cv2
import numpy as np
import pandas as pd
import pytest

from src.storage import (
    RUN_MANIFEST_NAME,
    ArtifactStore,
    ArtifactStoreError,
    TensorArchiveError,
    decode_archive,
    encode_archive,
    file_digest,
    read_archive,
    write_archive,
)


class TestTensorArchive:
    """Test cases for the tensor archive codec."""

    def setup_method(self):
        self.tensors = {
            'conv.weight': np.arange(24, dtype=np.float32).reshape(2, 3, 2, 2),
            'scalar': np.array(1.5, dtype=np.float32),
            'bias': np.array([-1.0, 0.25], dtype=np.float32),
        }

    def test_header_layout(self):
        """Test magic, version and count lead the archive."""
        data = encode_archive(self.tensors)
        assert data[:4] == b'FQTA'
        assert struct.unpack('<II', data[4:12]) == (1, 3)
        (name_len,) = struct.unpack('<H', data[12:14])
        assert data[14:14 + name_len] == b'conv.weight'

    def test_decode_keeps_order_and_values(self):
        """Test decoded tensors keep names, order, shapes and float32 values."""
        decoded = decode_archive(encode_archive(self.tensors))
        assert list(decoded) == list(self.tensors)
        for name, array in self.tensors.items():
            assert decoded[name].dtype == np.float32
            np.testing.assert_array_equal(decoded[name], array)

    def test_float64_narrowed(self):
        """Test float64 input is stored as float32."""
        decoded = decode_archive(encode_archive({'w': np.array([0.1, 0.2])}))
        assert decoded['w'].dtype == np.float32

    def test_unsupported_dtype(self):
        """Test integer tensors are rejected."""
        with pytest.raises(TensorArchiveError, match="unsupported dtype"):
            encode_archive({'ids': np.arange(3)})

    def test_non_finite(self):
        """Test NaN tensors are rejected."""
        with pytest.raises(TensorArchiveError, match="non-finite"):
            encode_archive({'w': np.array([np.nan], np.float32)})

    def test_bad_magic(self):
        """Test foreign files are rejected."""
        with pytest.raises(TensorArchiveError, match="Not a tensor archive"):
            decode_archive(b'PK\x03\x04' + b'\x00' * 8)

    def test_version_mismatch(self):
        """Test other archive versions are rejected."""
        data = bytearray(encode_archive(self.tensors))
        data[4:8] = struct.pack('<I', 2)
        with pytest.raises(TensorArchiveError, match="Unsupported archive version 2"):
            decode_archive(bytes(data))

    def test_truncation_names_tensor(self):
        """Test a truncated payload names the tensor being read."""
        data = encode_archive(self.tensors)
        with pytest.raises(TensorArchiveError, match="truncated while reading tensor 'bias'"):
            decode_archive(data[:-1])

    def test_trailing_bytes(self):
        """Test bytes after the last tensor are rejected."""
        with pytest.raises(TensorArchiveError, match="2 trailing bytes"):
            decode_archive(encode_archive(self.tensors) + b'\x00\x00')

    def test_expected_shapes(self):
        """Test expected name/shape maps catch unknown names and shape mismatches."""
        data = encode_archive(self.tensors)
        expected = {'conv.weight': (2, 3, 2, 2), 'scalar': (), 'bias': (3,)}
        with pytest.raises(TensorArchiveError, match="Shape mismatch for tensor 'bias'"):
            decode_archive(data, expected)
        with pytest.raises(TensorArchiveError, match="Unknown tensor 'scalar'"):
            decode_archive(data, {'conv.weight': (2, 3, 2, 2)})

    def test_file_errors_name_path(self, tmp_path):
        """Test file-level errors carry the archive path."""
        path = tmp_path / 'broken.fqta'
        path.write_bytes(b'nope')
        with pytest.raises(TensorArchiveError, match="broken.fqta: Not a tensor archive"):
            read_archive(str(path))
        with pytest.raises(TensorArchiveError, match="Failed to read archive"):
            read_archive(str(tmp_path / 'missing.fqta'))

    def test_write_then_read(self, tmp_path):
        """Test archives written to nested directories read back."""
        path = write_archive(str(tmp_path / 'a' / 'b.fqta'), self.tensors)
        np.testing.assert_array_equal(read_archive(path)['bias'], self.tensors['bias'])


class TestArtifactStore:
    """Test cases for ArtifactStore."""

    def setup_method(self):
        self.frame = pd.DataFrame({'variant': ['blur', 'rot'], 'r': [0.123456789, -0.5]})

    def test_layout_folders(self, tmp_path):
        """Test files land in their configured folders."""
        store = ArtifactStore(str(tmp_path / 'out'))
        path = store.write_json({'b': 1, 'a': 2}, 'eval', 'report.json')
        assert path == str(tmp_path / 'out' / 'eval' / 'report.json')
        assert (tmp_path / 'out' / 'eval' / 'report.json').read_text() == '{\n  "a": 2,\n  "b": 1\n}\n'

    def test_unknown_folder(self, tmp_path):
        """Test unknown layout folders are rejected."""
        with pytest.raises(ArtifactStoreError, match="Unknown output folder: logs"):
            ArtifactStore(str(tmp_path)).path_for('logs', 'x.txt')

    def test_jsonl_sorted_keys(self, tmp_path):
        """Test jsonl rows are written with sorted keys, one per line."""
        store = ArtifactStore(str(tmp_path))
        store.write_jsonl([{'z': 1, 'a': 0}, {'k': 'v'}], 'pipeline', 'events.jsonl')
        lines = (tmp_path / 'pipeline' / 'events.jsonl').read_text().splitlines()
        assert lines == ['{"a": 0, "z": 1}', '{"k": "v"}']

    def test_csv_precision(self, tmp_path):
        """Test CSV floats use the fixed precision and no index."""
        store = ArtifactStore(str(tmp_path))
        store.write_csv(self.frame, 'eval', 'cells.csv', precision=3)
        text = (tmp_path / 'eval' / 'cells.csv').read_text()
        assert text == 'variant,r\nblur,0.123\nrot,-0.500\n'

    def test_image_written_as_rgb(self, tmp_path):
        """Test images round-trip through PNG in RGB order."""
        store = ArtifactStore(str(tmp_path))
        image = np.zeros((8, 8, 3), np.uint8)
        image[..., 0] = 255
        path = store.write_image(image, 'pipeline_crops', 'track_0001/frame_0003.png')
        loaded = cv2.cvtColor(cv2.imread(path), cv2.COLOR_BGR2RGB)
        np.testing.assert_array_equal(loaded, image)

    def test_run_manifest_digests(self, tmp_path):
        """Test the run manifest lists input and output digests."""
        source = tmp_path / 'input.jsonl'
        source.write_text('{}\n')
        store = ArtifactStore(str(tmp_path / 'out'))
        store.register_input(str(source))
        store.write_text('hello', 'train', 'training.json')
        manifest = store.write_run_manifest('train-head', 'abc123')
        assert manifest.outputs == {'train/training.json': hashlib.sha256(b'hello').hexdigest()}
        assert manifest.inputs[str(source)] == file_digest(str(source))
        written = json.loads((tmp_path / 'out' / RUN_MANIFEST_NAME).read_text())
        assert written['command'] == 'train-head'
        assert written['config_hash'] == 'abc123'

    def test_verify_detects_changes(self, tmp_path):
        """Test verify reports outputs modified after the run."""
        store = ArtifactStore(str(tmp_path))
        path = store.write_text('one', 'eval', 'a.txt')
        manifest = store.write_run_manifest('eval', 'h')
        assert store.verify(manifest) == []
        with open(path, 'w') as f:
            f.write('two')
        assert store.verify(manifest) == ['eval/a.txt']

    def test_register_missing_output(self, tmp_path):
        """Test registering a missing file fails."""
        with pytest.raises(ArtifactStoreError, match="Output file does not exist"):
            ArtifactStore(str(tmp_path)).register_output(str(tmp_path / 'ghost.fqta'))

    def test_register_input_directory(self, tmp_path):
        """Test directory inputs record every file inside."""
        (tmp_path / 'annotations').mkdir()
        (tmp_path / 'annotations' / 'a.txt').write_text('a')
        (tmp_path / 'annotations' / 'b.txt').write_text('b')
        store = ArtifactStore(str(tmp_path / 'out'))
        store.register_input(str(tmp_path / 'annotations'))
        assert len(store.inputs) == 2
