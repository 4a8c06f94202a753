"""
Modified O-Net.

The O-Net stage of MTCNN with its face-classification and bbox branches
removed and one quality node appended to the 256-wide fc representation:

    48x48x3 -> conv1 3x3 (32) -> PReLU -> maxpool 3/2
            -> conv2 3x3 (64) -> PReLU -> maxpool 3/2
            -> conv3 3x3 (64) -> PReLU -> maxpool 2/2
            -> conv4 2x2 (128) -> PReLU -> flatten (1152)
            -> fc (256) -> PReLU -> landmarks (10)
                                 -> quality (1)

Max pooling uses ceiling arithmetic, giving spatial sizes 48 -> 23 -> 10 -> 4 -> 3.
The extractor is frozen; only the quality node is ever trained.
"""
import logging
from collections import OrderedDict
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Tuple, Union

import cv2
import numpy as np
import torch
import torch.nn as nn

from ..models.face_sample import LandmarkSet, validate_image
from ..models.scores import QualityScore

INPUT_SIZE = 48
FEATURE_SIZE = 256
LANDMARK_OUTPUTS = 10

# Extractor tensor names and shapes (conv weights are out, in, kh, kw)
EXTRACTOR_SHAPES: Dict[str, Tuple[int, ...]] = OrderedDict([
    ('conv1.weight', (32, 3, 3, 3)),
    ('conv1.bias', (32,)),
    ('prelu1.weight', (32,)),
    ('conv2.weight', (64, 32, 3, 3)),
    ('conv2.bias', (64,)),
    ('prelu2.weight', (64,)),
    ('conv3.weight', (64, 64, 3, 3)),
    ('conv3.bias', (64,)),
    ('prelu3.weight', (64,)),
    ('conv4.weight', (128, 64, 2, 2)),
    ('conv4.bias', (128,)),
    ('prelu4.weight', (128,)),
    ('fc.weight', (256, 1152)),
    ('fc.bias', (256,)),
    ('prelu5.weight', (256,)),
    ('landmark.weight', (10, 256)),
    ('landmark.bias', (10,)),
])

FORBIDDEN_PREFIXES = ('class_fc', 'cls', 'bbox_fc')


class MonetError(Exception):
    """Custom exception for network construction and inference errors"""
    pass


class MonetNetwork(nn.Module):
    """O-Net trunk with the landmark head; the class head is absent."""

    def __init__(self):
        super(MonetNetwork, self).__init__()
        self.conv1 = nn.Conv2d(in_channels=3, out_channels=32, kernel_size=(3, 3))
        self.prelu1 = nn.PReLU(32)
        self.pool1 = nn.MaxPool2d(kernel_size=3, stride=2, ceil_mode=True)
        self.conv2 = nn.Conv2d(in_channels=32, out_channels=64, kernel_size=(3, 3))
        self.prelu2 = nn.PReLU(64)
        self.pool2 = nn.MaxPool2d(kernel_size=3, stride=2, ceil_mode=True)
        self.conv3 = nn.Conv2d(in_channels=64, out_channels=64, kernel_size=(3, 3))
        self.prelu3 = nn.PReLU(64)
        self.pool3 = nn.MaxPool2d(kernel_size=2, stride=2, ceil_mode=True)
        self.conv4 = nn.Conv2d(in_channels=64, out_channels=128, kernel_size=(2, 2))
        self.prelu4 = nn.PReLU(128)
        self.flatten = nn.Flatten()
        self.fc = nn.Linear(in_features=1152, out_features=256)
        self.prelu5 = nn.PReLU(256)
        self.landmark = nn.Linear(in_features=256, out_features=10)

    def trunk(self, x: torch.Tensor) -> torch.Tensor:
        """Activations entering the fc layer (N, 1152)."""
        x = self.pool1(self.prelu1(self.conv1(x)))
        x = self.pool2(self.prelu2(self.conv2(x)))
        x = self.pool3(self.prelu3(self.conv3(x)))
        x = self.prelu4(self.conv4(x))
        return self.flatten(x)

    def forward(self, x: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        features = self.prelu5(self.fc(self.trunk(x)))
        return features, self.landmark(features)


@dataclass
class MonetWeights:
    """
    Named extractor tensors (float32, shapes as EXTRACTOR_SHAPES).
    """
    tensors: Dict[str, np.ndarray]

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for name in self.tensors:
            if name.startswith(FORBIDDEN_PREFIXES):
                raise ValueError(f"face-classification tensor '{name}' is not part of the network")
        missing = [n for n in EXTRACTOR_SHAPES if n not in self.tensors]
        unknown = [n for n in self.tensors if n not in EXTRACTOR_SHAPES]
        if missing or unknown:
            raise ValueError(
                f"weights must hold exactly {list(EXTRACTOR_SHAPES)}; "
                f"missing {missing}, unknown {unknown}"
            )
        for name, shape in EXTRACTOR_SHAPES.items():
            array = self.tensors[name]
            if tuple(array.shape) != shape:
                raise ValueError(f"{name} must have shape {shape}, got {tuple(array.shape)}")
            if not np.all(np.isfinite(array)):
                raise ValueError(f"{name} must be finite")

    def copy(self) -> 'MonetWeights':
        return MonetWeights({name: array.copy() for name, array in self.tensors.items()})

    def ordered(self) -> 'OrderedDict[str, np.ndarray]':
        return OrderedDict((name, self.tensors[name]) for name in EXTRACTOR_SHAPES)

    def equals(self, other: 'MonetWeights') -> bool:
        """Bit-identical comparison."""
        return all(
            np.array_equal(self.tensors[name], other.tensors[name]) and
            self.tensors[name].dtype == other.tensors[name].dtype
            for name in EXTRACTOR_SHAPES
        )

    @classmethod
    def zeros(cls) -> 'MonetWeights':
        return cls({name: np.zeros(shape, dtype=np.float32) for name, shape in EXTRACTOR_SHAPES.items()})


@dataclass
class QualityHead:
    """
    The single trainable node: quality = weight . features + bias.
    """
    weight: np.ndarray
    bias: float = 0.0

    def __post_init__(self):
        self.weight = np.asarray(self.weight, dtype=np.float64).reshape(-1)
        self.bias = float(self.bias)
        self.validate()

    def validate(self) -> None:
        if self.weight.shape != (FEATURE_SIZE,):
            raise ValueError(f"head weight must have shape ({FEATURE_SIZE},), got {self.weight.shape}")
        if not np.all(np.isfinite(self.weight)) or not np.isfinite(self.bias):
            raise ValueError("head weight and bias must be finite")

    @classmethod
    def zeros(cls) -> 'QualityHead':
        return cls(np.zeros(FEATURE_SIZE), 0.0)

    def predict(self, features: np.ndarray) -> np.ndarray:
        """Quality for one (256,) feature vector or a batch (N, 256)."""
        return np.asarray(features, dtype=np.float64) @ self.weight + self.bias

    def to_tensors(self, prefix: str = 'quality') -> 'OrderedDict[str, np.ndarray]':
        return OrderedDict([
            (f"{prefix}.weight", self.weight.astype(np.float32)),
            (f"{prefix}.bias", np.array([self.bias], dtype=np.float32)),
        ])


def init_random_weights(seed: int) -> MonetWeights:
    """
    Fixed-seed extractor weights: He-normal convolution and linear weights,
    small biases and 0.25 PReLU slopes.
    """
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shape in EXTRACTOR_SHAPES.items():
        if name.startswith('prelu'):
            tensors[name] = np.full(shape, 0.25, dtype=np.float32)
        elif name.endswith('.bias'):
            tensors[name] = rng.normal(0.0, 0.01, size=shape).astype(np.float32)
        else:
            fan_in = int(np.prod(shape[1:]))
            tensors[name] = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape).astype(np.float32)
    return MonetWeights(tensors)


def preprocess(crop: np.ndarray) -> np.ndarray:
    """
    Network input for a square RGB crop: bilinear resize to 48x48 (skipped
    when already 48x48), then (v - 127.5) / 128 per channel.

    Returns:
        (48, 48, 3) float32 array

    Raises:
        MonetError: If the crop is not square
    """
    validate_image(crop)
    height, width = crop.shape[:2]
    if height != width:
        raise MonetError(f"crop must be square, got {width}x{height}")
    if height != INPUT_SIZE:
        crop = cv2.resize(crop, (INPUT_SIZE, INPUT_SIZE), interpolation=cv2.INTER_LINEAR)
    return ((crop.astype(np.float32) - 127.5) / 128.0).astype(np.float32)


class MonetModel:
    """
    Inference wrapper around a frozen MonetNetwork built from MonetWeights.

    Runs in float64 on CPU; forward passes do not touch the weights and may
    be called concurrently.
    """

    def __init__(self, weights: MonetWeights):
        self.weights = weights
        self.logger = logging.getLogger(__name__)
        self.network = MonetNetwork().double()
        state = {name: torch.from_numpy(np.asarray(array, dtype=np.float64).copy())
                 for name, array in weights.tensors.items()}
        self.network.load_state_dict(state, strict=True)
        self.network.eval()
        for parameter in self.network.parameters():
            parameter.requires_grad_(False)

    @staticmethod
    def _to_tensor(inputs: np.ndarray) -> torch.Tensor:
        inputs = np.asarray(inputs)
        if inputs.ndim == 3:
            inputs = inputs[None]
        if inputs.ndim != 4 or inputs.shape[1:] != (INPUT_SIZE, INPUT_SIZE, 3):
            raise MonetError(
                f"network input must be ({INPUT_SIZE}, {INPUT_SIZE}, 3), got {inputs.shape[-3:]}"
            )
        return torch.from_numpy(np.ascontiguousarray(inputs.transpose(0, 3, 1, 2), dtype=np.float64))

    def forward(self, inputs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Forward preprocessed inputs.

        Args:
            inputs: (48, 48, 3) or (N, 48, 48, 3)

        Returns:
            (features (N, 256), normalized landmark outputs (N, 10))
        """
        with torch.no_grad():
            features, landmarks = self.network(self._to_tensor(inputs))
        return features.numpy(), landmarks.numpy()

    def trunk(self, inputs: np.ndarray) -> np.ndarray:
        """Pre-fc activations (N, 1152) in torch flatten order (channel, row, col)."""
        with torch.no_grad():
            return self.network.trunk(self._to_tensor(inputs)).numpy()

    def features(self, crops: Iterable[np.ndarray], batch_size: int = 256) -> np.ndarray:
        """(N, 256) features of raw RGB crops."""
        inputs = [preprocess(crop) for crop in crops]
        if not inputs:
            return np.zeros((0, FEATURE_SIZE))
        chunks = []
        for start in range(0, len(inputs), batch_size):
            features, _ = self.forward(np.stack(inputs[start:start + batch_size]))
            chunks.append(features)
        return np.concatenate(chunks, axis=0)


WeightsLike = Union[MonetWeights, MonetModel]


def as_model(weights: WeightsLike) -> MonetModel:
    return weights if isinstance(weights, MonetModel) else MonetModel(weights)


def forward_features(weights: WeightsLike, inputs: np.ndarray) -> np.ndarray:
    """
    256-dim post-PReLU fc features of one preprocessed (48, 48, 3) input.

    Raises:
        MonetError: On an input shape mismatch
    """
    features, _ = as_model(weights).forward(inputs)
    return features[0]


def decode_landmarks(outputs: np.ndarray, width: int, height: int) -> LandmarkSet:
    """Interleaved normalized (x1, y1, ..., x5, y5) outputs to crop pixels."""
    points = np.asarray(outputs, dtype=np.float64).reshape(5, 2) * np.array([width, height])
    return LandmarkSet.from_array(points)


def predict(weights: WeightsLike, head: QualityHead,
            crop: np.ndarray) -> Tuple[LandmarkSet, QualityScore]:
    """
    One forward pass giving landmarks (crop pixels) and quality.

    Raises:
        MonetError: If the crop is not square
    """
    features, landmarks = as_model(weights).forward(preprocess(crop))
    quality = float(head.predict(features[0]))
    return decode_landmarks(landmarks[0], crop.shape[1], crop.shape[0]), QualityScore(quality)


def predict_batch(model: MonetModel, heads: Mapping[str, QualityHead],
                  crops: List[np.ndarray]) -> Tuple[List[LandmarkSet], Dict[str, np.ndarray]]:
    """
    Landmarks plus the quality of every head for a batch of crops; one
    forward pass per crop, heads evaluated on the shared features.
    """
    if not crops:
        return [], {name: np.zeros(0) for name in heads}
    inputs = np.stack([preprocess(crop) for crop in crops])
    features, outputs = model.forward(inputs)
    landmarks = [decode_landmarks(o, c.shape[1], c.shape[0]) for o, c in zip(outputs, crops)]
    return landmarks, {name: head.predict(features) for name, head in heads.items()}
