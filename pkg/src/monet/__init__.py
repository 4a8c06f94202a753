"""
Modified O-Net: frozen landmark extractor plus the appended quality node.
"""

from .network import (
    EXTRACTOR_SHAPES,
    FEATURE_SIZE,
    INPUT_SIZE,
    MonetError,
    MonetModel,
    MonetNetwork,
    MonetWeights,
    QualityHead,
    decode_landmarks,
    forward_features,
    init_random_weights,
    predict,
    predict_batch,
    preprocess
)

from .training import (
    FeatureWhitener,
    HeadTrainer,
    TrainingError,
    TrainingResult,
    check_head_gradient,
    extract_features,
    finite_difference_gradient,
    fit_closed_form,
    fit_head,
    head_gradient,
    head_objective,
    prediction_correlation,
    train_quality_head
)

from .persistence import (
    DEFAULT_HEAD,
    load_archive,
    load_heads,
    load_weights,
    save_weights
)

__all__ = [
    'EXTRACTOR_SHAPES',
    'FEATURE_SIZE',
    'INPUT_SIZE',
    'MonetError',
    'MonetModel',
    'MonetNetwork',
    'MonetWeights',
    'QualityHead',
    'decode_landmarks',
    'forward_features',
    'init_random_weights',
    'predict',
    'predict_batch',
    'preprocess',
    'FeatureWhitener',
    'HeadTrainer',
    'TrainingError',
    'TrainingResult',
    'check_head_gradient',
    'extract_features',
    'finite_difference_gradient',
    'fit_closed_form',
    'fit_head',
    'head_gradient',
    'head_objective',
    'prediction_correlation',
    'train_quality_head',
    'DEFAULT_HEAD',
    'load_archive',
    'load_heads',
    'load_weights',
    'save_weights'
]
