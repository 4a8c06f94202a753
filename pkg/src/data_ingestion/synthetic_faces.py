"""
Synthetic face generator for desk-scale runs.

Renders textured, face-like images with known identity, bounding box and
five-point landmarks. Every identity shares one spectral profile, sinusoids
at evenly spaced frequencies between min_cycles and max_cycles with
comparable amplitudes, and owns their orientations, phases, colours and a
skin tone. Each image of the identity adds a small position/scale jitter, a
background gradient with a faint texture of its own and pixel noise. The
texture keeps enough structure below the 16x16 embedding resolution that
blur, rotation and occlusion measurably reduce embedding similarity, and
the shared profile makes the loss of texture energy comparable across
identities.

Scenario helpers render multi-face video frames from the same identities so
the pipeline simulator can run without external video.
"""
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import cv2
import numpy as np

from ..models.face_sample import BoundingBox, FaceSample, LandmarkSet
from ..models.manifest import DatasetManifest, ManifestRecord
from ..models.tracking import CANONICAL_TEMPLATE_112

# Landmarks in face-box units: the canonical 112 template seen through a 0.1 crop margin
_TEMPLATE_UNITS = (np.asarray(CANONICAL_TEMPLATE_112) / 112.0) * 1.2 - 0.1


@dataclass
class GeneratorConfig:
    """Configuration parameters for synthetic face generation."""

    num_identities: int = 20
    images_per_identity: int = 10
    image_size: int = 128
    face_fraction: float = 0.62
    seed: int = 0

    # texture
    components_per_identity: int = 4
    min_cycles: float = 1.5
    max_cycles: float = 4.0
    texture_amplitude: float = 45.0
    min_component_amplitude: float = 0.7

    # per-image variation
    jitter_fraction: float = 0.04
    scale_jitter: float = 0.05
    noise_std: float = 3.0
    background_amplitude: float = 25.0
    background_texture: float = 10.0

    eval_identities: int = 0
    identity_prefix: str = 'id'

    def __post_init__(self):
        if self.num_identities < 1 or self.images_per_identity < 1:
            raise ValueError("num_identities and images_per_identity must be >= 1")
        if not (0.1 <= self.face_fraction <= 0.9):
            raise ValueError("face_fraction must be between 0.1 and 0.9")
        if self.min_cycles <= 0 or self.max_cycles < self.min_cycles:
            raise ValueError("cycle range must be positive with min <= max")
        if not (0.0 < self.min_component_amplitude <= 1.0):
            raise ValueError("min_component_amplitude must be in (0, 1]")
        if not (0 <= self.eval_identities < self.num_identities):
            raise ValueError("eval_identities must be in [0, num_identities)")


@dataclass(frozen=True)
class IdentityAppearance:
    """Fixed rendering parameters of one synthetic identity."""
    name: str
    skin: Tuple[float, float, float]
    # rows of (cycles_u, cycles_v, phase, amp_r, amp_g, amp_b)
    components: np.ndarray = field(repr=False)
    eye_darkness: float = 0.35


class SyntheticFaceGenerator:
    """
    Generates synthetic annotated faces, datasets and tracking scenarios.
    """

    def __init__(self, config: Optional[GeneratorConfig] = None):
        self.config = config or GeneratorConfig()
        self.logger = logging.getLogger(__name__)
        self.identities = [self._make_identity(i) for i in range(self.config.num_identities)]

    def _make_identity(self, index: int) -> IdentityAppearance:
        rng = np.random.default_rng([self.config.seed, index, 0x1D])
        n = self.config.components_per_identity
        cycles = np.linspace(self.config.min_cycles, self.config.max_cycles, n).reshape(n, 1)
        angle = rng.uniform(0.0, np.pi, size=(n, 1))
        phase = rng.uniform(0.0, 2.0 * np.pi, size=(n, 1))
        amps = (rng.uniform(self.config.min_component_amplitude, 1.0, size=(n, 3))
                * rng.choice([-1.0, 1.0], size=(n, 3)))
        components = np.hstack([cycles * np.cos(angle), cycles * np.sin(angle), phase, amps])
        skin = tuple(float(c) for c in rng.uniform([140, 95, 70], [220, 170, 140]))
        return IdentityAppearance(
            name=f"{self.config.identity_prefix}{index:03d}",
            skin=skin,
            components=components,
            eye_darkness=float(rng.uniform(0.25, 0.45))
        )

    def render_face(self, canvas: np.ndarray, box: BoundingBox,
                    identity: IdentityAppearance) -> LandmarkSet:
        """
        Paint one face into `canvas` (float32 RGB, modified in place) inside `box`.

        Returns:
            Landmarks of the painted face in canvas coordinates
        """
        height, width = canvas.shape[:2]
        yy, xx = np.mgrid[0:height, 0:width].astype(np.float32)
        u = (xx + 0.5 - box.x) / box.w
        v = (yy + 0.5 - box.y) / box.h

        face_mask = ((u - 0.5) / 0.5) ** 2 + ((v - 0.52) / 0.56) ** 2 <= 1.0
        if not face_mask.any():
            return LandmarkSet.from_array(_TEMPLATE_UNITS * [box.w, box.h] + [box.x, box.y])

        amplitude = self.config.texture_amplitude
        face = np.empty((int(face_mask.sum()), 3), dtype=np.float32)
        face[:] = identity.skin
        uf, vf = u[face_mask], v[face_mask]
        for fu, fv, phase, ar, ag, ab in identity.components:
            wave = np.sin(2.0 * np.pi * (fu * uf + fv * vf) + phase).astype(np.float32)
            face += amplitude * wave[:, None] * np.array([ar, ag, ab], dtype=np.float32)

        # eyes, nose and mouth as dark blobs at the landmark positions
        shade = np.ones_like(uf)
        (lx, ly), (rx, ry), (nx, ny), (mlx, mly), (mrx, mry) = _TEMPLATE_UNITS
        for cx, cy, rx_, ry_, depth in (
            (lx, ly, 0.075, 0.045, identity.eye_darkness),
            (rx, ry, 0.075, 0.045, identity.eye_darkness),
            (nx, ny, 0.05, 0.07, 0.75),
            ((mlx + mrx) / 2, (mly + mry) / 2, (mrx - mlx) / 2 + 0.03, 0.035, 0.45),
        ):
            inside = ((uf - cx) / rx_) ** 2 + ((vf - cy) / ry_) ** 2 <= 1.0
            shade[inside] = np.minimum(shade[inside], depth)
        face *= shade[:, None]

        canvas[face_mask] = face
        points = _TEMPLATE_UNITS * [box.w, box.h] + [box.x, box.y]
        return LandmarkSet.from_array(points)

    def _background(self, height: int, width: int, rng: np.random.Generator) -> np.ndarray:
        base = rng.uniform(60, 190, size=3).astype(np.float32)
        gx, gy = rng.uniform(-1, 1, size=2)
        yy, xx = np.mgrid[0:height, 0:width].astype(np.float32)
        ramp = (gx * (xx / max(width - 1, 1) - 0.5) + gy * (yy / max(height - 1, 1) - 0.5))
        background = base[None, None, :] + self.config.background_amplitude * ramp[:, :, None]
        if self.config.background_texture > 0:
            cycles = rng.uniform(2.0, 4.0)
            angle, phase = rng.uniform(0.0, np.pi), rng.uniform(0.0, 2.0 * np.pi)
            t = (np.cos(angle) * xx / width + np.sin(angle) * yy / height).astype(np.float32)
            wave = np.sin(2.0 * np.pi * cycles * t + phase)
            background = background + self.config.background_texture * wave[:, :, None]
        return background

    def _finish(self, canvas: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        if self.config.noise_std > 0:
            canvas = canvas + rng.normal(0.0, self.config.noise_std, size=canvas.shape)
        return np.clip(np.rint(canvas), 0, 255).astype(np.uint8)

    def generate_sample(self, identity_index: int, image_index: int) -> FaceSample:
        """Render image `image_index` of identity `identity_index`."""
        identity = self.identities[identity_index]
        rng = np.random.default_rng([self.config.seed, identity_index, image_index, 0x5A])
        size = self.config.image_size

        scale = self.config.face_fraction * (1.0 + rng.uniform(-1, 1) * self.config.scale_jitter)
        face_w = size * scale
        face_h = face_w * 1.1
        shift = rng.uniform(-1, 1, size=2) * self.config.jitter_fraction * size
        box = BoundingBox(
            float((size - face_w) / 2 + shift[0]),
            float((size - face_h) / 2 + shift[1]),
            float(face_w),
            float(face_h)
        )

        canvas = self._background(size, size, rng)
        landmarks = self.render_face(canvas, box, identity)
        image = self._finish(canvas, rng)
        return FaceSample(
            image=image,
            identity=identity.name,
            source_id=self.sample_path(identity_index, image_index),
            bbox=box,
            landmarks=landmarks
        )

    def sample_path(self, identity_index: int, image_index: int) -> str:
        name = self.identities[identity_index].name
        # LFW-style naming: <identity>/<identity>_<1-based index>.png
        return f"{name}/{name}_{image_index + 1:04d}.png"

    def split_of(self, identity_index: int) -> str:
        cutoff = self.config.num_identities - self.config.eval_identities
        return 'eval' if identity_index >= cutoff else 'train'

    def generate_samples(self) -> List[FaceSample]:
        """All samples in identity-major order."""
        return [
            self.generate_sample(i, j)
            for i in range(self.config.num_identities)
            for j in range(self.config.images_per_identity)
        ]

    def generate_dataset(self) -> Tuple[DatasetManifest, Dict[str, FaceSample]]:
        """
        In-memory dataset: a manifest plus its samples keyed by sample id.
        """
        records = []
        samples: Dict[str, FaceSample] = {}
        for i in range(self.config.num_identities):
            for j in range(self.config.images_per_identity):
                sample = self.generate_sample(i, j)
                samples[sample.source_id] = sample
                records.append(ManifestRecord(
                    path=sample.source_id,
                    identity=sample.identity,
                    bbox=sample.bbox,
                    landmarks=sample.landmarks,
                    split=self.split_of(i)
                ))
        return DatasetManifest(records=records), samples

    def write_dataset(self, out_dir: str, manifest_name: str = 'manifest.jsonl') -> DatasetManifest:
        """
        Write PNG images and a jsonl manifest.

        Returns:
            The written manifest, rooted at `out_dir`
        """
        records = []
        for i in range(self.config.num_identities):
            for j in range(self.config.images_per_identity):
                sample = self.generate_sample(i, j)
                path = os.path.join(out_dir, sample.source_id)
                os.makedirs(os.path.dirname(path), exist_ok=True)
                if not cv2.imwrite(path, cv2.cvtColor(sample.image, cv2.COLOR_RGB2BGR)):
                    raise OSError(f"Failed to write {path}")
                records.append(ManifestRecord(
                    path=sample.source_id,
                    identity=sample.identity,
                    bbox=sample.bbox,
                    landmarks=sample.landmarks,
                    split=self.split_of(i)
                ))

        manifest = DatasetManifest(records=records, root=os.path.abspath(out_dir))
        with open(os.path.join(out_dir, manifest_name), 'w', encoding='utf-8') as f:
            for record in records:
                f.write(record.to_json() + '\n')
        self.logger.info(f"Wrote {len(records)} synthetic faces to {out_dir}")
        return manifest

    def generate_scenario(self, num_tracks: int = 2, num_frames: int = 20,
                          frame_size: Tuple[int, int] = (320, 240),
                          face_size: float = 64.0) -> List[Dict]:
        """
        Scripted scenario: faces moving on straight lines across the frame.

        Returns:
            Scenario rows {frame, boxes, identities}
        """
        rng = np.random.default_rng([self.config.seed, num_tracks, num_frames, 0x5C])
        width, height = frame_size
        starts = rng.uniform([0, 0], [width - face_size, height - face_size * 1.1], size=(num_tracks, 2))
        ends = rng.uniform([0, 0], [width - face_size, height - face_size * 1.1], size=(num_tracks, 2))
        rows = []
        for frame in range(num_frames):
            t = frame / max(num_frames - 1, 1)
            positions = starts + (ends - starts) * t
            rows.append({
                'frame': frame,
                'boxes': [[round(float(x), 3), round(float(y), 3), face_size, face_size * 1.1]
                          for x, y in positions],
                'identities': [self.identities[k % len(self.identities)].name for k in range(num_tracks)]
            })
        return rows

    def render_scenario_frame(self, row: Dict, frame_size: Tuple[int, int] = (320, 240)) -> np.ndarray:
        """Render the frame described by one scenario row."""
        width, height = frame_size
        rng = np.random.default_rng([self.config.seed, int(row['frame']), 0xF0])
        canvas = self._background(height, width, rng)
        by_name = {identity.name: identity for identity in self.identities}
        identities = row.get('identities') or []
        for k, values in enumerate(row.get('boxes', [])):
            name = identities[k] if k < len(identities) else None
            identity = by_name.get(name, self.identities[k % len(self.identities)])
            self.render_face(canvas, BoundingBox.from_list(values), identity)
        return self._finish(canvas, rng)


def write_scenario(rows: Sequence[Dict], path: str) -> None:
    """Write scenario rows as jsonl."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        for row in rows:
            f.write(json.dumps(row, sort_keys=True) + '\n')


def create_default_config(seed: int = 0) -> GeneratorConfig:
    """Default configuration of the bundled 200-sample desk set."""
    return GeneratorConfig(num_identities=20, images_per_identity=10, seed=seed, eval_identities=4)
