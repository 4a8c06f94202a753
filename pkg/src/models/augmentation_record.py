"""
Augmentation parameter ranges and per-image applied augmentation records.
"""
from dataclasses import dataclass, field, asdict, replace
from typing import Any, Dict, List, Optional, Tuple
import json
import math

from config.settings import AUGMENTATION_CONFIG

# Allowed rasterization slack on top of the occlusion area bound
OCCLUSION_AREA_SLACK = 0.02


@dataclass(frozen=True)
class AugmentationSpec:
    """
    Parameter ranges for the training distortions.

    Attributes:
        rotation_degrees: Closed interval of rotation angles
        blur_kernel_range: Inclusive range of odd Gaussian kernel sizes
        occlusion_max_area_fraction: Upper bound of the occluder area
        enable_rotation / enable_blur / enable_occlusion: Per-distortion switches
        rotation_probability / blur_probability / occlusion_probability:
            Per-distortion application probability
        draws_per_sample: Independently augmented, labelled copies of each training image
    """
    rotation_degrees: Tuple[float, float] = AUGMENTATION_CONFIG['rotation_degrees']
    blur_kernel_range: Tuple[int, int] = AUGMENTATION_CONFIG['blur_kernel_range']
    occlusion_max_area_fraction: float = AUGMENTATION_CONFIG['occlusion_max_area_fraction']
    enable_rotation: bool = True
    enable_blur: bool = True
    enable_occlusion: bool = True
    rotation_probability: float = AUGMENTATION_CONFIG['rotation_probability']
    blur_probability: float = AUGMENTATION_CONFIG['blur_probability']
    occlusion_probability: float = AUGMENTATION_CONFIG['occlusion_probability']
    draws_per_sample: int = AUGMENTATION_CONFIG['draws_per_sample']

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        """
        Validate all ranges.

        Raises:
            ValueError: If any range or probability is invalid
        """
        low, high = self.rotation_degrees
        if not (math.isfinite(low) and math.isfinite(high)) or low > high:
            raise ValueError("rotation_degrees must be a finite interval with low <= high")

        k_low, k_high = self.blur_kernel_range
        if int(k_low) != k_low or int(k_high) != k_high:
            raise ValueError("blur_kernel_range bounds must be integers")
        if k_low < 3 or k_low % 2 == 0 or k_high % 2 == 0 or k_low > k_high:
            raise ValueError("blur_kernel_range must hold odd kernel sizes >= 3")

        if not (0.0 < self.occlusion_max_area_fraction <= 1.0):
            raise ValueError("occlusion_max_area_fraction must be in (0, 1]")

        for name in ('rotation_probability', 'blur_probability', 'occlusion_probability'):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise ValueError(f"{name} must be between 0 and 1")

        if not isinstance(self.draws_per_sample, int) or self.draws_per_sample < 1:
            raise ValueError("draws_per_sample must be an integer >= 1")

    def kernel_sizes(self) -> List[int]:
        """Odd kernel sizes inside the blur range."""
        low, high = self.blur_kernel_range
        return list(range(int(low), int(high) + 1, 2))

    def with_probability(self, probability: float) -> 'AugmentationSpec':
        """Copy with every application probability set to `probability`."""
        return replace(
            self,
            rotation_probability=probability,
            blur_probability=probability,
            occlusion_probability=probability
        )

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['rotation_degrees'] = list(self.rotation_degrees)
        data['blur_kernel_range'] = list(self.blur_kernel_range)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'AugmentationSpec':
        data = dict(data)
        if 'rotation_degrees' in data:
            data['rotation_degrees'] = tuple(float(v) for v in data['rotation_degrees'])
        if 'blur_kernel_range' in data:
            data['blur_kernel_range'] = tuple(int(v) for v in data['blur_kernel_range'])
        return cls(**data)


@dataclass(frozen=True)
class AppliedAugmentation:
    """
    Concrete parameters applied to one image.

    Attributes:
        rotation_angle: Sampled rotation in degrees (0 if none)
        kernel_size: Sampled odd blur kernel size (0 if none)
        blur_sigma: Gaussian sigma in pixels (0 if none)
        occlusion_polygon: Occluder vertices, empty if none
        occluded_fraction: Fraction of image pixels painted
        occlusion_kind: 'rect' (training), 'quad' (evaluation) or '' (none)
        occlusion_color: RGB fill color, None if no occlusion
        seed: Seed of the generator the parameters were drawn from
    """
    rotation_angle: float = 0.0
    kernel_size: int = 0
    blur_sigma: float = 0.0
    occlusion_polygon: Tuple[Tuple[float, float], ...] = field(default_factory=tuple)
    occluded_fraction: float = 0.0
    occlusion_kind: str = ''
    occlusion_color: Optional[Tuple[int, int, int]] = None
    seed: Optional[int] = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.kernel_size != 0 and (self.kernel_size < 3 or self.kernel_size % 2 == 0):
            raise ValueError("kernel_size must be 0 or an odd integer >= 3")
        if self.blur_sigma < 0:
            raise ValueError("blur_sigma must be non-negative")
        if not (0.0 <= self.occluded_fraction <= 1.0):
            raise ValueError("occluded_fraction must be between 0 and 1")
        if self.occlusion_kind not in ('', 'rect', 'quad'):
            raise ValueError("occlusion_kind must be '', 'rect' or 'quad'")

    @property
    def is_identity(self) -> bool:
        return (self.rotation_angle == 0.0 and self.kernel_size == 0
                and not self.occlusion_polygon)

    def merge(self, other: 'AppliedAugmentation') -> 'AppliedAugmentation':
        """
        Combine two records of distortions applied in sequence; fields set by
        `other` take precedence.
        """
        merged = self
        if other.rotation_angle != 0.0:
            merged = replace(merged, rotation_angle=other.rotation_angle)
        if other.kernel_size != 0:
            merged = replace(merged, kernel_size=other.kernel_size, blur_sigma=other.blur_sigma)
        if other.occlusion_kind:
            merged = replace(
                merged,
                occlusion_polygon=other.occlusion_polygon,
                occluded_fraction=other.occluded_fraction,
                occlusion_kind=other.occlusion_kind,
                occlusion_color=other.occlusion_color
            )
        return merged

    def within(self, spec: AugmentationSpec) -> bool:
        """True when all recorded values lie inside the ranges of `spec`."""
        low, high = spec.rotation_degrees
        if not (low <= self.rotation_angle <= high):
            return False
        if self.kernel_size and self.kernel_size not in spec.kernel_sizes():
            return False
        if self.occlusion_kind == 'rect':
            return self.occluded_fraction <= spec.occlusion_max_area_fraction + OCCLUSION_AREA_SLACK
        return True

    def to_dict(self) -> Dict[str, Any]:
        return {
            'rotation_angle': float(self.rotation_angle),
            'kernel_size': int(self.kernel_size),
            'blur_sigma': float(self.blur_sigma),
            'occlusion_polygon': [[float(x), float(y)] for x, y in self.occlusion_polygon],
            'occluded_fraction': float(self.occluded_fraction),
            'occlusion_kind': self.occlusion_kind,
            'occlusion_color': list(self.occlusion_color) if self.occlusion_color else None,
            'seed': self.seed
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'AppliedAugmentation':
        color = data.get('occlusion_color')
        return cls(
            rotation_angle=float(data.get('rotation_angle', 0.0)),
            kernel_size=int(data.get('kernel_size', 0)),
            blur_sigma=float(data.get('blur_sigma', 0.0)),
            occlusion_polygon=tuple((float(x), float(y)) for x, y in data.get('occlusion_polygon', [])),
            occluded_fraction=float(data.get('occluded_fraction', 0.0)),
            occlusion_kind=data.get('occlusion_kind', ''),
            occlusion_color=tuple(int(c) for c in color) if color else None,
            seed=data.get('seed')
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, json_str: str) -> 'AppliedAugmentation':
        return cls.from_dict(json.loads(json_str))
