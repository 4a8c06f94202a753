"""
Quality head training on frozen extractor features.

Features are extracted once per label table and reused by every epoch. The
objective is the ridge objective over raw features,

    (1/N) ||F w + b - y||^2 + weight_decay * ||w||^2,

minimized by SGD in torch over ridge-preconditioned coordinates: centred
features projected on the covariance eigenvectors and scaled by
1/sqrt(eigenvalue + weight_decay). There the objective has Hessian 2I, so
one learning rate suits any extractor and no noise direction is amplified.
The trained affine map is folded back into a head over the raw features.
The ridge closed form over the same features is the correctness oracle.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import torch

from ..concurrency import ordered_map
from ..models.run_config import TrainingConfig
from ..recognition.labels import LabelTable
from .network import FEATURE_SIZE, MonetError, QualityHead, WeightsLike, as_model, preprocess

# Eigenvalues below this fraction of the largest are dropped by the whitener
WHITENING_CUTOFF = 1e-8
# Condition number above which the unregularized normal equations are rejected
MAX_CONDITION = 1e12

LabelsLike = Union[LabelTable, Sequence[float], np.ndarray]


class TrainingError(MonetError):
    """Custom exception for quality head training errors"""
    pass


@dataclass
class TrainingResult:
    """Trained head plus the full-data MSE after every epoch."""
    head: QualityHead
    loss_trace: List[float] = field(default_factory=list)
    rows: int = 0

    def to_dict(self):
        return {
            'rows': self.rows,
            'loss_trace': list(self.loss_trace),
            'final_loss': self.loss_trace[-1] if self.loss_trace else None,
            'bias': self.head.bias
        }


def _labels_array(labels: LabelsLike) -> np.ndarray:
    values = labels.labels() if isinstance(labels, LabelTable) else np.asarray(labels, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(values)):
        raise TrainingError("labels contain non-finite values")
    return values


def _check_rows(features: np.ndarray, labels: np.ndarray, minimum: int) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != FEATURE_SIZE:
        raise TrainingError(f"features must be (N, {FEATURE_SIZE}), got {features.shape}")
    if features.shape[0] != labels.shape[0]:
        raise TrainingError(f"{features.shape[0]} feature rows but {labels.shape[0]} labels")
    if features.shape[0] < minimum:
        raise TrainingError(f"need at least {minimum} rows, got {features.shape[0]}")
    if not np.all(np.isfinite(features)):
        raise TrainingError("features contain non-finite values")
    return features


def extract_features(weights: WeightsLike, crops: Sequence[np.ndarray],
                     batch_size: int = 256) -> np.ndarray:
    """
    Frozen 256-dim features of every crop, in crop order.

    Batches fan out over the worker pool; the result does not depend on the
    worker count.
    """
    model = as_model(weights)
    crops = list(crops)
    if not crops:
        return np.zeros((0, FEATURE_SIZE))
    batches = [crops[start:start + batch_size] for start in range(0, len(crops), batch_size)]

    def run(batch: List[np.ndarray]) -> np.ndarray:
        features, _ = model.forward(np.stack([preprocess(crop) for crop in batch]))
        return features

    return np.concatenate(ordered_map(run, batches), axis=0)


@dataclass
class FeatureWhitener:
    """
    z = (f - mean) @ projection, with projection = U / sqrt(eigenvalues + ridge)
    over the retained covariance eigenvectors. ridge = 0 is plain whitening.
    """
    mean: np.ndarray
    projection: np.ndarray
    eigenvalues: np.ndarray
    ridge: float = 0.0

    @classmethod
    def fit(cls, features: np.ndarray, ridge: float = 0.0) -> 'FeatureWhitener':
        if ridge < 0:
            raise TrainingError("ridge must be non-negative")
        mean = features.mean(axis=0)
        centred = features - mean
        covariance = centred.T @ centred / features.shape[0]
        eigenvalues, eigenvectors = np.linalg.eigh(covariance)
        top = eigenvalues.max() if eigenvalues.size else 0.0
        keep = eigenvalues > max(top * WHITENING_CUTOFF, 0.0)
        kept = eigenvalues[keep]
        projection = eigenvectors[:, keep] / np.sqrt(kept + ridge)
        return cls(mean=mean, projection=projection, eigenvalues=kept, ridge=float(ridge))

    @property
    def rank(self) -> int:
        return self.projection.shape[1]

    @property
    def penalty_weights(self) -> np.ndarray:
        """p such that ridge * ||raw weight||^2 = sum(p * z_weight^2)."""
        return self.ridge / (self.eigenvalues + self.ridge) if self.ridge else np.zeros(self.rank)

    def transform(self, features: np.ndarray) -> np.ndarray:
        return (features - self.mean) @ self.projection

    def fold(self, weight: np.ndarray, bias: float) -> QualityHead:
        """Head over raw features equal to (weight, bias) over whitened ones."""
        raw_weight = self.projection @ weight if self.rank else np.zeros(self.mean.shape[0])
        return QualityHead(raw_weight, float(bias - self.mean @ raw_weight))


class HeadTrainer:
    """
    Mini-batch SGD on the quality node.

    Plain SGD (no momentum) on MSE plus weight_decay * ||w||^2 in raw feature
    space (the bias is not penalized), learning rate multiplied by lr_gamma
    at each milestone epoch, shuffle order drawn from a torch generator
    seeded with config.seed. Converges to fit_head(features, labels,
    weight_decay).
    """

    def __init__(self, config: Optional[TrainingConfig] = None):
        self.config = config or TrainingConfig()
        self.logger = logging.getLogger(__name__)

    def fit(self, features: np.ndarray, labels: LabelsLike) -> TrainingResult:
        """
        Train on precomputed features.

        Raises:
            TrainingError: On empty or mismatched input, or a non-finite loss
        """
        targets = _labels_array(labels)
        features = _check_rows(features, targets, minimum=1)
        config = self.config
        whitener = FeatureWhitener.fit(features, ridge=config.weight_decay)

        z = torch.from_numpy(whitener.transform(features))
        y = torch.from_numpy(targets)
        weight = torch.zeros(whitener.rank, dtype=torch.float64, requires_grad=True)
        bias = torch.zeros(1, dtype=torch.float64, requires_grad=True)
        penalty = torch.from_numpy(whitener.penalty_weights)
        optimizer = torch.optim.SGD([weight, bias], lr=config.learning_rate, momentum=0.0)
        scheduler = torch.optim.lr_scheduler.MultiStepLR(
            optimizer, milestones=list(config.lr_milestones), gamma=config.lr_gamma
        )
        generator = torch.Generator().manual_seed(int(config.seed))

        rows = z.shape[0]
        loss_trace: List[float] = []
        for epoch in range(config.epochs):
            order = torch.randperm(rows, generator=generator)
            for start in range(0, rows, config.batch_size):
                batch = order[start:start + config.batch_size]
                optimizer.zero_grad()
                residual = z[batch] @ weight + bias - y[batch]
                loss = torch.mean(residual ** 2) + torch.sum(penalty * weight ** 2)
                loss.backward()
                optimizer.step()
            scheduler.step()

            with torch.no_grad():
                epoch_loss = float(torch.mean((z @ weight + bias - y) ** 2))
            if not np.isfinite(epoch_loss):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch + 1} "
                    f"(lr {optimizer.param_groups[0]['lr']:g}); lower the learning rate"
                )
            loss_trace.append(epoch_loss)
            self.logger.debug(f"epoch {epoch + 1}/{config.epochs} loss {epoch_loss:.6g}")

        head = whitener.fold(weight.detach().numpy(), float(bias.detach()[0]))
        self.logger.info(
            f"Trained quality head on {rows} rows ({whitener.rank} feature directions) for "
            f"{config.epochs} epochs; final loss {loss_trace[-1]:.6g}"
        )
        return TrainingResult(head=head, loss_trace=loss_trace, rows=rows)


def train_quality_head(weights: WeightsLike, crops: Sequence[np.ndarray], labels: LabelsLike,
                       config: Optional[TrainingConfig] = None) -> TrainingResult:
    """
    Train the quality node on the frozen extractor's features of `crops`.

    The extractor weights are only read.
    """
    targets = _labels_array(labels)
    if len(targets) == 0:
        raise TrainingError("label table is empty")
    return HeadTrainer(config).fit(extract_features(weights, crops), targets)


def fit_head(features: np.ndarray, labels: LabelsLike, ridge_lambda: float) -> QualityHead:
    """
    Minimizer of (1/N)||F w + b - y||^2 + lambda ||w||^2 with an unpenalized bias.

    Raises:
        TrainingError: Fewer than 2 rows, negative lambda, or a singular
            system at lambda = 0
    """
    if ridge_lambda < 0:
        raise TrainingError("ridge_lambda must be non-negative")
    targets = _labels_array(labels)
    features = _check_rows(features, targets, minimum=2)

    mean = features.mean(axis=0)
    label_mean = float(targets.mean())
    centred = features - mean
    rows = features.shape[0]
    system = centred.T @ centred / rows + ridge_lambda * np.eye(FEATURE_SIZE)
    rhs = centred.T @ (targets - label_mean) / rows

    if ridge_lambda == 0 and np.linalg.cond(system) > MAX_CONDITION:
        raise TrainingError(
            "normal equations are singular at ridge_lambda=0; use ridge_lambda > 0"
        )
    try:
        weight = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError as e:
        raise TrainingError(f"closed-form fit failed ({str(e)}); use ridge_lambda > 0")
    return QualityHead(weight, label_mean - float(mean @ weight))


def fit_closed_form(weights: WeightsLike, crops: Sequence[np.ndarray], labels: LabelsLike,
                    ridge_lambda: float) -> QualityHead:
    """Closed-form ridge head over the frozen features of `crops`."""
    return fit_head(extract_features(weights, crops), labels, ridge_lambda)


def head_objective(head: QualityHead, features: np.ndarray, labels: LabelsLike) -> float:
    """Mean squared error of the head on the given rows."""
    residual = head.predict(features) - _labels_array(labels)
    return float(np.mean(residual ** 2))


def head_gradient(features: np.ndarray, labels: LabelsLike,
                  head: QualityHead) -> Tuple[np.ndarray, float]:
    """Analytic MSE gradient with respect to (weight, bias)."""
    features = np.asarray(features, dtype=np.float64)
    residual = head.predict(features) - _labels_array(labels)
    rows = features.shape[0]
    return 2.0 * features.T @ residual / rows, float(2.0 * residual.sum() / rows)


def finite_difference_gradient(features: np.ndarray, labels: LabelsLike, head: QualityHead,
                               eps: float = 1e-6) -> Tuple[np.ndarray, float]:
    """Central-difference MSE gradient with respect to (weight, bias)."""
    grad_weight = np.zeros(FEATURE_SIZE)
    for i in range(FEATURE_SIZE):
        step = np.zeros(FEATURE_SIZE)
        step[i] = eps
        plus = head_objective(QualityHead(head.weight + step, head.bias), features, labels)
        minus = head_objective(QualityHead(head.weight - step, head.bias), features, labels)
        grad_weight[i] = (plus - minus) / (2 * eps)
    plus = head_objective(QualityHead(head.weight, head.bias + eps), features, labels)
    minus = head_objective(QualityHead(head.weight, head.bias - eps), features, labels)
    return grad_weight, (plus - minus) / (2 * eps)


def check_head_gradient(features: np.ndarray, labels: LabelsLike, head: QualityHead,
                        eps: float = 1e-6, atol: float = 1e-5, rtol: float = 1e-5) -> bool:
    """torch.autograd.gradcheck of the head MSE at `head`."""
    f = torch.from_numpy(np.asarray(features, dtype=np.float64))
    y = torch.from_numpy(_labels_array(labels))
    weight = torch.tensor(head.weight, dtype=torch.float64, requires_grad=True)
    bias = torch.tensor([head.bias], dtype=torch.float64, requires_grad=True)

    def objective(w: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
        return torch.mean((f @ w + b - y) ** 2)

    return bool(torch.autograd.gradcheck(objective, (weight, bias), eps=eps, atol=atol, rtol=rtol))


def prediction_correlation(first: QualityHead, second: QualityHead, features: np.ndarray) -> float:
    """Pearson correlation between two heads' predictions on the same rows."""
    a = first.predict(features)
    b = second.predict(features)
    if np.std(a) == 0 or np.std(b) == 0:
        return float('nan')
    return float(np.corrcoef(a, b)[0, 1])
