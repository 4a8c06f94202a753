# Storage service modules
from .tensor_archive import (
    TensorArchiveError, encode_archive, decode_archive, write_archive, read_archive
)
from .artifact_store import ArtifactStore, ArtifactStoreError, file_digest, RUN_MANIFEST_NAME

__all__ = [
    'TensorArchiveError',
    'encode_archive',
    'decode_archive',
    'write_archive',
    'read_archive',
    'ArtifactStore',
    'ArtifactStoreError',
    'file_digest',
    'RUN_MANIFEST_NAME'
]
