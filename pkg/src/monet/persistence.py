"""
Weights archive I/O: extractor tensors plus quality heads.

Head tensors are named 'quality.weight' / 'quality.bias' for the default
head and 'quality.<variant>.weight' / 'quality.<variant>.bias' for
per-variant heads.
"""
import logging
import re
from collections import OrderedDict
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from ..storage.tensor_archive import TensorArchiveError, read_archive, write_archive
from .network import EXTRACTOR_SHAPES, FEATURE_SIZE, MonetWeights, QualityHead

DEFAULT_HEAD = 'default'
HEAD_PATTERN = re.compile(r'^quality(?:\.(?P<variant>[A-Za-z0-9_\-]+))?\.(?P<part>weight|bias)$')
HEAD_SHAPES = {'weight': (FEATURE_SIZE,), 'bias': (1,)}

logger = logging.getLogger(__name__)


def head_prefix(variant: str) -> str:
    return 'quality' if variant == DEFAULT_HEAD else f"quality.{variant}"


def expected_names() -> list:
    return list(EXTRACTOR_SHAPES) + ['quality.weight', 'quality.bias',
                                     'quality.<variant>.weight', 'quality.<variant>.bias']


def save_weights(weights: MonetWeights, heads: Optional[Mapping[str, QualityHead]],
                 path: str) -> str:
    """
    Write the extractor and any heads to one archive.

    Args:
        weights: Extractor tensors
        heads: Variant -> head; the key 'default' maps to 'quality.*'
        path: Output path
    """
    tensors: Dict[str, np.ndarray] = OrderedDict(weights.ordered())
    for variant, head in (heads or {}).items():
        tensors.update(head.to_tensors(head_prefix(variant)))
    return write_archive(path, tensors)


def _split_tensors(tensors: Mapping[str, np.ndarray]) -> Tuple[MonetWeights, Dict[str, QualityHead]]:
    extractor = {}
    parts: Dict[str, Dict[str, np.ndarray]] = {}
    for name, array in tensors.items():
        if name in EXTRACTOR_SHAPES:
            if tuple(array.shape) != EXTRACTOR_SHAPES[name]:
                raise TensorArchiveError(
                    f"Shape mismatch for tensor '{name}': archive {tuple(array.shape)}, "
                    f"expected {EXTRACTOR_SHAPES[name]}"
                )
            extractor[name] = array
            continue
        match = HEAD_PATTERN.match(name)
        if match is None:
            raise TensorArchiveError(
                f"Unknown tensor '{name}' in archive; expected names: {expected_names()}"
            )
        part = match.group('part')
        if tuple(array.shape) != HEAD_SHAPES[part]:
            raise TensorArchiveError(
                f"Shape mismatch for tensor '{name}': archive {tuple(array.shape)}, "
                f"expected {HEAD_SHAPES[part]}"
            )
        parts.setdefault(match.group('variant') or DEFAULT_HEAD, {})[part] = array

    missing = [name for name in EXTRACTOR_SHAPES if name not in extractor]
    if missing:
        raise TensorArchiveError(f"Archive is missing extractor tensors {missing}")

    heads = {}
    for variant, found in parts.items():
        if set(found) != {'weight', 'bias'}:
            raise TensorArchiveError(f"Head '{variant}' needs both weight and bias")
        heads[variant] = QualityHead(found['weight'], float(found['bias'][0]))
    return MonetWeights(extractor), heads


def load_archive(path: str) -> Tuple[MonetWeights, Dict[str, QualityHead]]:
    """
    Read the extractor and every head stored in `path`.

    Raises:
        TensorArchiveError: Version mismatch, truncation, unknown names,
            shape mismatches or missing extractor tensors
    """
    try:
        return _split_tensors(read_archive(path))
    except TensorArchiveError as e:
        message = str(e)
        raise TensorArchiveError(message if message.startswith(path) else f"{path}: {message}")


def load_weights(path: str, variant: str = DEFAULT_HEAD) -> Tuple[MonetWeights, Optional[QualityHead]]:
    """Extractor plus one head (None when the archive holds no such head)."""
    weights, heads = load_archive(path)
    return weights, heads.get(variant)


def load_heads(path: str) -> Dict[str, QualityHead]:
    return load_archive(path)[1]
