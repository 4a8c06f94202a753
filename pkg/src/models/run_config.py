"""
Run configuration, training configuration and run manifest data models.

A RunConfig is loaded from one JSON file; command-line flags are applied on
top (flags win) and anything left unset falls back to config/settings.py.
"""
from dataclasses import dataclass, field, asdict
from typing import Any, Dict, List, Optional, Tuple
import hashlib
import json
import os

from config.settings import (
    AUGMENTATION_CONFIG,
    CROP_CONFIG,
    DEFAULT_SEED,
    EVALUATION_CONFIG,
    PIPELINE_CONFIG,
    TOOLKIT_VERSION,
    TRAINING_CONFIG,
)
from .augmentation_record import AugmentationSpec
from .evaluation_result import VALID_ATTACKS

VALID_MODES = ('blur', 'rot', 'occ', 'bro')
VALID_BACKEND_KINDS = ('oracle', 'precomputed')
VALID_LABEL_MODES = ('self', 'best_match')


class ConfigError(Exception):
    """Custom exception for invalid or incomplete run configuration"""
    pass


@dataclass(frozen=True)
class TrainingConfig:
    """
    Quality head training parameters (plain mini-batch SGD with step decay).

    Attributes:
        batch_size: Rows per mini-batch
        learning_rate: Initial learning rate
        epochs: Passes over the label table
        seed: Shuffle seed
        lr_milestones: Epochs at which the learning rate is multiplied by lr_gamma
        lr_gamma: Step decay factor
        weight_decay: L2 penalty on the raw head weight; the trainer minimizes
            MSE + weight_decay * ||w||^2, the closed-form ridge objective
        ridge_lambda: Ridge penalty for the closed-form oracle
    """
    batch_size: int = TRAINING_CONFIG['batch_size']
    learning_rate: float = TRAINING_CONFIG['learning_rate']
    epochs: int = TRAINING_CONFIG['epochs']
    seed: int = DEFAULT_SEED
    lr_milestones: Tuple[int, ...] = TRAINING_CONFIG['lr_milestones']
    lr_gamma: float = TRAINING_CONFIG['lr_gamma']
    weight_decay: float = TRAINING_CONFIG['weight_decay']
    ridge_lambda: float = TRAINING_CONFIG['ridge_lambda']

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not isinstance(self.batch_size, int) or self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if not isinstance(self.epochs, int) or self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not (0.0 < self.lr_gamma <= 1.0):
            raise ValueError("lr_gamma must be in (0, 1]")
        if self.weight_decay < 0 or self.ridge_lambda < 0:
            raise ValueError("weight_decay and ridge_lambda must be non-negative")
        if list(self.lr_milestones) != sorted(self.lr_milestones):
            raise ValueError("lr_milestones must be increasing")

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['lr_milestones'] = list(self.lr_milestones)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TrainingConfig':
        data = dict(data)
        if 'lr_milestones' in data:
            data['lr_milestones'] = tuple(int(m) for m in data['lr_milestones'])
        return cls(**data)


@dataclass(frozen=True)
class BackendConfig:
    """
    Recognition backend selection.

    Attributes:
        name: Name used in reports
        kind: 'oracle' or 'precomputed'
        distance: Expose scores as distance 1 - s
        archive: Embedding archive path for the precomputed backend
    """
    name: str = 'oracle'
    kind: str = 'oracle'
    distance: bool = False
    archive: Optional[str] = None

    def __post_init__(self):
        if self.kind not in VALID_BACKEND_KINDS:
            raise ValueError(f"backend kind must be one of {list(VALID_BACKEND_KINDS)}")
        if self.kind == 'precomputed' and not self.archive:
            raise ValueError("precomputed backend requires an archive path")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class PipelineParams:
    iou_threshold: float = PIPELINE_CONFIG['iou_threshold']
    max_misses: int = PIPELINE_CONFIG['max_misses']
    k: int = PIPELINE_CONFIG['top_k']
    min_confidence: float = PIPELINE_CONFIG['min_confidence']
    jitter_px: float = PIPELINE_CONFIG['jitter_px']
    dropout: float = PIPELINE_CONFIG['dropout']

    def __post_init__(self):
        if not (0.0 < self.iou_threshold <= 1.0):
            raise ValueError("iou_threshold must be in (0, 1]")
        if self.max_misses < 1:
            raise ValueError("max_misses must be >= 1")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not (0.0 <= self.dropout <= 1.0):
            raise ValueError("dropout must be between 0 and 1")
        if self.jitter_px < 0:
            raise ValueError("jitter_px must be non-negative")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class RunConfig:
    """
    Effective configuration of one command run.

    Attributes:
        seed: Global seed; every generator is derived from it
        output_dir: Root output directory
        manifest_path / manifest_format: Dataset manifest
        dataset: Dataset name used in reports
        weights_path: Tensor archive with extractor weights (and heads for eval)
        labels_path: Label table for train-head (defaults to the augment output)
        scenario_path: Scenario jsonl for pipeline-sim
        augmentation: Training distortion ranges
        mode: Training augmentation mode for augment
        label_mode: 'self' or 'best_match'
        write_crops: Also write augmented crops in augment
        crop_size / crop_margin: Crop extraction parameters
        training: Head training parameters
        backends: Recognition backends, one report grid each
        attacks: Evaluation attacks
        variants: Head variants to train / evaluate
        eval_fraction: Fallback identity split fraction when the manifest has no eval split
        baselines: Include the sharpness/contrast baselines in eval
        oracle_check: Compare SGD heads with the closed-form oracle in train-head
        pipeline: Tracker and selection parameters
    """
    seed: int = DEFAULT_SEED
    output_dir: str = 'out'
    manifest_path: Optional[str] = None
    manifest_format: str = 'jsonl'
    dataset: str = 'synthetic'
    weights_path: Optional[str] = None
    labels_path: Optional[str] = None
    scenario_path: Optional[str] = None
    augmentation: AugmentationSpec = field(default_factory=AugmentationSpec)
    mode: str = AUGMENTATION_CONFIG['mode']
    label_mode: str = 'self'
    write_crops: bool = False
    crop_size: int = CROP_CONFIG['output_size']
    crop_margin: float = CROP_CONFIG['margin']
    training: TrainingConfig = field(default_factory=TrainingConfig)
    backends: Tuple[BackendConfig, ...] = (BackendConfig(),)
    attacks: Tuple[str, ...] = tuple(EVALUATION_CONFIG['attacks'])
    variants: Tuple[str, ...] = tuple(EVALUATION_CONFIG['variants'])
    eval_fraction: float = EVALUATION_CONFIG['eval_fraction']
    baselines: bool = True
    oracle_check: bool = False
    pipeline: PipelineParams = field(default_factory=PipelineParams)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        if self.mode not in VALID_MODES:
            raise ValueError(f"mode must be one of {list(VALID_MODES)}")
        if self.label_mode not in VALID_LABEL_MODES:
            raise ValueError(f"label_mode must be one of {list(VALID_LABEL_MODES)}")
        if self.manifest_format not in ('jsonl', 'celeba_triplet'):
            raise ValueError("manifest_format must be 'jsonl' or 'celeba_triplet'")
        for attack in self.attacks:
            if attack not in VALID_ATTACKS:
                raise ValueError(f"attack must be one of {list(VALID_ATTACKS)}, got '{attack}'")
        for variant in self.variants:
            if variant not in VALID_MODES:
                raise ValueError(f"variant must be one of {list(VALID_MODES)}, got '{variant}'")
        if not self.backends:
            raise ValueError("at least one backend must be configured")
        names = [b.name for b in self.backends]
        if len(set(names)) != len(names):
            raise ValueError("backend names must be unique")
        if not (0.0 < self.eval_fraction < 1.0):
            raise ValueError("eval_fraction must be in (0, 1)")
        if self.crop_size < 1 or not (0.0 <= self.crop_margin < 1.0):
            raise ValueError("crop_size must be >= 1 and crop_margin in [0, 1)")

    def to_dict(self) -> Dict[str, Any]:
        return {
            'seed': self.seed,
            'output_dir': self.output_dir,
            'manifest_path': self.manifest_path,
            'manifest_format': self.manifest_format,
            'dataset': self.dataset,
            'weights_path': self.weights_path,
            'labels_path': self.labels_path,
            'scenario_path': self.scenario_path,
            'augmentation': self.augmentation.to_dict(),
            'mode': self.mode,
            'label_mode': self.label_mode,
            'write_crops': self.write_crops,
            'crop_size': self.crop_size,
            'crop_margin': self.crop_margin,
            'training': self.training.to_dict(),
            'backends': [b.to_dict() for b in self.backends],
            'attacks': list(self.attacks),
            'variants': list(self.variants),
            'eval_fraction': self.eval_fraction,
            'baselines': self.baselines,
            'oracle_check': self.oracle_check,
            'pipeline': self.pipeline.to_dict()
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RunConfig':
        """
        Build a RunConfig from a (possibly partial) dict.

        Raises:
            ConfigError: On unknown keys or invalid values
        """
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"Unknown config keys: {unknown}")

        kwargs = dict(data)
        try:
            if 'augmentation' in kwargs:
                kwargs['augmentation'] = AugmentationSpec.from_dict(kwargs['augmentation'])
            if 'training' in kwargs:
                training = dict(kwargs['training'])
                training.setdefault('seed', kwargs.get('seed', DEFAULT_SEED))
                kwargs['training'] = TrainingConfig.from_dict(training)
            elif 'seed' in kwargs:
                kwargs['training'] = TrainingConfig(seed=kwargs['seed'])
            if 'backends' in kwargs:
                kwargs['backends'] = tuple(BackendConfig(**b) for b in kwargs['backends'])
            if 'pipeline' in kwargs:
                kwargs['pipeline'] = PipelineParams(**kwargs['pipeline'])
            for name in ('attacks', 'variants'):
                if name in kwargs:
                    kwargs[name] = tuple(kwargs[name])
            return cls(**kwargs)
        except ConfigError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Invalid config: {str(e)}")

    @classmethod
    def load(cls, path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> 'RunConfig':
        """
        Load a config file and apply flag overrides.

        Args:
            path: JSON config file, or None for defaults only
            overrides: Values from command-line flags; None entries are ignored

        Returns:
            Effective RunConfig

        Raises:
            ConfigError: If the file is missing, unparseable or invalid
        """
        data: Dict[str, Any] = {}
        if path is not None:
            if not os.path.isfile(path):
                raise ConfigError(f"Config file not found: {path}")
            try:
                with open(path, 'r', encoding='utf-8') as f:
                    data = json.load(f)
            except json.JSONDecodeError as e:
                raise ConfigError(f"Config file {path} is not valid JSON: {str(e)}")
            if not isinstance(data, dict):
                raise ConfigError(f"Config file {path} must contain a JSON object")

        for key, value in (overrides or {}).items():
            if value is None:
                continue
            if key == 'seed' and isinstance(data.get('training'), dict):
                data['training'] = dict(data['training'], seed=value)
            data[key] = value
        return cls.from_dict(data)

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON of the effective config."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()

    def require_file(self, name: str) -> str:
        """
        Return a configured input path, checking that it exists.

        Raises:
            ConfigError: If the path is unset or missing on disk
        """
        value = getattr(self, name)
        if not value:
            raise ConfigError(f"{name} is required for this command")
        if not os.path.exists(value):
            raise ConfigError(f"{name} does not exist: {value}")
        return value


@dataclass
class RunManifest:
    """
    Provenance record written next to every command's outputs.

    Attributes:
        command: Command name
        config_hash: Hash of the effective RunConfig
        toolkit_version: Version string
        inputs: Input file path -> SHA-256
        outputs: Output file path (relative to the output dir) -> SHA-256
        started_at / finished_at: ISO-8601 timestamps
    """
    command: str
    config_hash: str
    toolkit_version: str = TOOLKIT_VERSION
    inputs: Dict[str, str] = field(default_factory=dict)
    outputs: Dict[str, str] = field(default_factory=dict)
    started_at: str = ''
    finished_at: str = ''

    def to_dict(self) -> Dict[str, Any]:
        return {
            'command': self.command,
            'config_hash': self.config_hash,
            'toolkit_version': self.toolkit_version,
            'inputs': dict(sorted(self.inputs.items())),
            'outputs': dict(sorted(self.outputs.items())),
            'started_at': self.started_at,
            'finished_at': self.finished_at
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RunManifest':
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, json_str: str) -> 'RunManifest':
        return cls.from_dict(json.loads(json_str))

    def output_names(self) -> List[str]:
        return sorted(self.outputs)
