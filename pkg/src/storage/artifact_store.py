"""
Local artifact store.

Organizes command outputs under one output directory using the folder layout
from config.settings.OUTPUT_FOLDERS, writes JSON/jsonl/CSV/PNG artifacts
deterministically and keeps a SHA-256 digest of every file it writes or
reads so a RunManifest can be emitted at the end of a command.
"""
import hashlib
import json
import logging
import os
from datetime import datetime, timezone
from typing import Any, Dict, Iterable, List, Optional

import cv2
import numpy as np
import pandas as pd

from config.settings import OUTPUT_FOLDERS
from ..models.run_config import RunManifest

RUN_MANIFEST_NAME = 'run_manifest.json'


class ArtifactStoreError(Exception):
    """Custom exception for artifact store operations"""
    pass


def file_digest(path: str) -> str:
    """SHA-256 hex digest of a file."""
    digest = hashlib.sha256()
    try:
        with open(path, 'rb') as f:
            for block in iter(lambda: f.read(1 << 20), b''):
                digest.update(block)
    except OSError as e:
        raise ArtifactStoreError(f"Failed to read {path}: {str(e)}")
    return digest.hexdigest()


def utc_timestamp() -> str:
    return datetime.now(timezone.utc).isoformat()


class ArtifactStore:
    """
    Writes the artifacts of one command run under `root`.

    Attributes:
        root: Output directory
        outputs: Relative output path -> digest
        inputs: Input path -> digest
    """

    def __init__(self, root: str, folders: Optional[Dict[str, str]] = None):
        """
        Args:
            root: Output directory (created if missing)
            folders: Folder layout override (defaults to config setting)

        Raises:
            ArtifactStoreError: If the directory cannot be created
        """
        self.root = root
        self.folders = folders or OUTPUT_FOLDERS
        self.outputs: Dict[str, str] = {}
        self.inputs: Dict[str, str] = {}
        self.started_at = utc_timestamp()
        self.logger = logging.getLogger(__name__)
        try:
            os.makedirs(self.root, exist_ok=True)
        except OSError as e:
            raise ArtifactStoreError(f"Failed to create output directory {root}: {str(e)}")

    def path_for(self, folder: str, filename: str) -> str:
        """
        Absolute path of `filename` inside a layout folder.

        Args:
            folder: Key of OUTPUT_FOLDERS, or '' for the output root

        Raises:
            ArtifactStoreError: On an unknown folder key
        """
        if folder and folder not in self.folders:
            raise ArtifactStoreError(f"Unknown output folder: {folder}")
        prefix = self.folders[folder] if folder else ''
        return os.path.join(self.root, prefix, filename)

    def _record(self, path: str) -> str:
        relative = os.path.relpath(path, self.root).replace(os.sep, '/')
        self.outputs[relative] = file_digest(path)
        return path

    def _open_for_write(self, path: str):
        try:
            os.makedirs(os.path.dirname(path), exist_ok=True)
            return open(path, 'w', encoding='utf-8', newline='\n')
        except OSError as e:
            raise ArtifactStoreError(f"Failed to open {path} for writing: {str(e)}")

    def write_text(self, text: str, folder: str, filename: str) -> str:
        path = self.path_for(folder, filename)
        try:
            with self._open_for_write(path) as f:
                f.write(text)
        except OSError as e:
            raise ArtifactStoreError(f"Failed to write {path}: {str(e)}")
        return self._record(path)

    def write_json(self, data: Any, folder: str, filename: str) -> str:
        """Write JSON with sorted keys and fixed indentation."""
        return self.write_text(json.dumps(data, indent=2, sort_keys=True) + '\n', folder, filename)

    def write_jsonl(self, rows: Iterable[Dict[str, Any]], folder: str, filename: str) -> str:
        """Write one sorted-key JSON object per line."""
        text = ''.join(json.dumps(row, sort_keys=True) + '\n' for row in rows)
        return self.write_text(text, folder, filename)

    def write_csv(self, frame: pd.DataFrame, folder: str, filename: str,
                  precision: int = 6) -> str:
        """Write a DataFrame as CSV with a fixed float format and no index."""
        text = frame.to_csv(index=False, float_format=f'%.{precision}f', lineterminator='\n')
        return self.write_text(text, folder, filename)

    def write_image(self, image: np.ndarray, folder: str, filename: str) -> str:
        """Write an RGB image as PNG."""
        path = self.path_for(folder, filename)
        os.makedirs(os.path.dirname(path), exist_ok=True)
        if not cv2.imwrite(path, cv2.cvtColor(image, cv2.COLOR_RGB2BGR)):
            raise ArtifactStoreError(f"Failed to write image {path}")
        return self._record(path)

    def register_output(self, path: str) -> str:
        """Record a file written by another component (e.g. a tensor archive)."""
        if not os.path.exists(path):
            raise ArtifactStoreError(f"Output file does not exist: {path}")
        return self._record(path)

    def register_input(self, path: str) -> None:
        """Record the digest of an input file; directories record each file inside."""
        if os.path.isdir(path):
            for name in sorted(os.listdir(path)):
                child = os.path.join(path, name)
                if os.path.isfile(child):
                    self.inputs[child] = file_digest(child)
            return
        self.inputs[path] = file_digest(path)

    def write_run_manifest(self, command: str, config_hash: str) -> RunManifest:
        """
        Write run_manifest.json listing every recorded input and output.

        Returns:
            The RunManifest written
        """
        manifest = RunManifest(
            command=command,
            config_hash=config_hash,
            inputs=dict(self.inputs),
            outputs=dict(self.outputs),
            started_at=self.started_at,
            finished_at=utc_timestamp()
        )
        path = self.path_for('', RUN_MANIFEST_NAME)
        try:
            with self._open_for_write(path) as f:
                f.write(manifest.to_json() + '\n')
        except OSError as e:
            raise ArtifactStoreError(f"Failed to write run manifest: {str(e)}")
        self.logger.info(f"Run manifest written to {path} ({len(self.outputs)} outputs)")
        return manifest

    def verify(self, manifest: RunManifest) -> List[str]:
        """Relative output paths whose on-disk digest differs from the manifest."""
        mismatched = []
        for relative, digest in sorted(manifest.outputs.items()):
            path = os.path.join(self.root, relative)
            if not os.path.exists(path) or file_digest(path) != digest:
                mismatched.append(relative)
        return mismatched
