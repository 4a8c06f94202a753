"""
Command implementations.

Each command takes the effective RunConfig, writes its artifacts through an
ArtifactStore rooted at the configured output directory, finishes with a
run_manifest.json and returns a small summary dict for the console.
"""
import logging
import os
from dataclasses import asdict
from typing import Any, Callable, Dict, List, Optional, Tuple

from config.settings import PIPELINE_CONFIG
from ..data_ingestion.crops import CropProvider
from ..data_ingestion.manifest_loader import load_manifest, split_train_eval
from ..data_ingestion.synthetic_faces import GeneratorConfig, SyntheticFaceGenerator, create_default_config
from ..evaluation.attack_eval import AttackEvalResult, ablation_report, run_attack_eval
from ..evaluation.baselines import BASELINES
from ..evaluation.report import REPORT_NAME, load_report, summarize_report, write_report, write_report_csvs
from ..models.manifest import DatasetManifest
from ..models.run_config import BackendConfig, ConfigError, RunConfig
from ..monet.network import MonetModel, QualityHead, init_random_weights
from ..monet.persistence import DEFAULT_HEAD, load_archive, save_weights
from ..monet.training import HeadTrainer, extract_features, fit_head, prediction_correlation
from ..pipeline.detectors import GroundTruthDetector, load_scenario, scenario_from_rows
from ..pipeline.selection import FacePipeline
from ..recognition.backends import (
    DistanceBackend,
    PrecomputedEmbeddingBackend,
    RecognitionBackend,
    SyntheticOracleEmbedder
)
from ..recognition.labels import LabelGenerator, LabelTable, materialize_crops
from ..storage.artifact_store import ArtifactStore

WEIGHTS_NAME = 'monet.fqta'
TRAINING_LOG_NAME = 'training.json'
RECORDS_NAME = 'records.jsonl'
SELECTIONS_NAME = 'selections.jsonl'

logger = logging.getLogger(__name__)


def labels_name(mode: str) -> str:
    return f"labels_{mode}.jsonl"


def build_backend(config: BackendConfig) -> RecognitionBackend:
    """
    Instantiate a configured recognition backend.

    Raises:
        ConfigError: If a precomputed archive is missing
    """
    if config.kind == 'oracle':
        backend: RecognitionBackend = SyntheticOracleEmbedder()
    else:
        if not os.path.isfile(config.archive):
            raise ConfigError(f"embedding archive does not exist: {config.archive}")
        backend = PrecomputedEmbeddingBackend.from_archive(config.archive, name=config.name)
    if config.distance:
        return DistanceBackend(backend, name=config.name)
    backend.name = config.name
    return backend


def prepare_manifest(config: RunConfig, store: ArtifactStore) -> DatasetManifest:
    """
    Load the configured manifest; untagged manifests get the identity split.

    Raises:
        ConfigError: If the manifest path is unset or missing
    """
    path = config.require_file('manifest_path')
    store.register_input(path)
    manifest = load_manifest(path, config.manifest_format)
    if manifest.has_split('train') and manifest.has_split('eval'):
        return manifest
    train, evaluation = split_train_eval(manifest, config.eval_fraction, config.seed)
    return DatasetManifest(records=train.records + evaluation.records, root=manifest.root)


def crop_provider(config: RunConfig, manifest: DatasetManifest) -> CropProvider:
    return CropProvider(manifest, output_size=config.crop_size, margin=config.crop_margin)


def generate_label_table(config: RunConfig, manifest: DatasetManifest, mode: str,
                         keep_crops: bool = False) -> LabelTable:
    backend = build_backend(config.backends[0])
    generator = LabelGenerator(backend, config.augmentation, mode, config.seed, config.label_mode)
    return generator.generate(manifest, crop_provider(config, manifest), keep_crops=keep_crops)


def default_weights_path(config: RunConfig, store: ArtifactStore) -> str:
    return config.weights_path or store.path_for('train', WEIGHTS_NAME)


def load_trained_archive(config: RunConfig, store: ArtifactStore):
    path = default_weights_path(config, store)
    if not os.path.isfile(path):
        raise ConfigError(f"weights archive does not exist: {path}")
    store.register_input(path)
    return load_archive(path)


def select_heads(config: RunConfig, heads: Dict[str, QualityHead]) -> Dict[str, QualityHead]:
    """Configured variants present in the archive, falling back to every stored head."""
    selected = {variant: heads[variant] for variant in config.variants if variant in heads}
    if not selected:
        selected = dict(heads)
    if not selected:
        raise ConfigError("weights archive holds no quality head")
    return selected


def cmd_synth(config: RunConfig) -> Dict[str, Any]:
    """Write the bundled synthetic desk set (PNG images and a jsonl manifest)."""
    store = ArtifactStore(config.output_dir)
    directory = store.path_for('synthetic', '')
    manifest = SyntheticFaceGenerator(create_default_config(config.seed)).write_dataset(directory)
    store.register_output(os.path.join(directory, 'manifest.jsonl'))
    store.write_run_manifest('synth', config.config_hash())
    return {'samples': len(manifest), 'identities': len(manifest.identities()),
            'manifest': os.path.join(directory, 'manifest.jsonl')}


def cmd_augment(config: RunConfig) -> Dict[str, Any]:
    """Augment the training split and label every augmented crop."""
    store = ArtifactStore(config.output_dir)
    manifest = prepare_manifest(config, store)
    table = generate_label_table(config, manifest, config.mode, keep_crops=config.write_crops)
    store.write_text(table.to_jsonl(), 'augment', labels_name(config.mode))

    if config.write_crops:
        for row in table.rows:
            suffix = f"_{row.draw}" if row.draw else ''
            name = os.path.splitext(row.sample_id)[0] + suffix + '.png'
            store.write_image(table.crops[row.key], 'augmented_crops', f"{config.mode}/{name}")

    summary = {
        'mode': config.mode,
        'label_mode': config.label_mode,
        'backend': config.backends[0].name,
        'rows': len(table),
        'skipped': table.skipped_count,
        'mean_label': table.mean_label() if len(table) else None
    }
    store.write_json(summary, 'augment', f"summary_{config.mode}.json")
    store.write_run_manifest('augment', config.config_hash())
    return summary


def _labels_for_variant(config: RunConfig, store: ArtifactStore, manifest: DatasetManifest,
                        variant: str) -> LabelTable:
    if config.labels_path:
        if len(config.variants) != 1:
            raise ConfigError("labels_path can only be used with a single variant")
        path = config.require_file('labels_path')
        store.register_input(path)
        return LabelTable.load(path)

    path = store.path_for('augment', labels_name(variant))
    if os.path.isfile(path):
        store.register_input(path)
        return LabelTable.load(path)
    logger.info(f"No label table for '{variant}' at {path}; generating labels in-process")
    return generate_label_table(config, manifest, variant, keep_crops=True)


def cmd_train_head(config: RunConfig) -> Dict[str, Any]:
    """
    Train one quality head per configured variant on the frozen extractor.

    The extractor comes from weights_path (heads already stored there are
    kept) or from a fixed-seed random initialization.
    """
    store = ArtifactStore(config.output_dir)
    heads: Dict[str, QualityHead] = {}
    if config.weights_path:
        path = config.require_file('weights_path')
        store.register_input(path)
        weights, heads = load_archive(path)
    else:
        weights = init_random_weights(config.seed)

    manifest = prepare_manifest(config, store)
    provider = crop_provider(config, manifest)
    model = MonetModel(weights)
    trainer = HeadTrainer(config.training)
    log: Dict[str, Any] = {}

    for variant in config.variants:
        table = _labels_for_variant(config, store, manifest, variant)
        crops = materialize_crops(table, manifest, provider)
        features = extract_features(model, crops)
        result = trainer.fit(features, table.labels())
        heads[variant] = result.head
        entry = result.to_dict()
        if config.oracle_check:
            # Same objective as the trainer when it is regularized
            ridge = config.training.weight_decay or config.training.ridge_lambda
            oracle = fit_head(features, table.labels(), ridge)
            entry['oracle_correlation'] = prediction_correlation(result.head, oracle, features)
            logger.info(f"Head '{variant}': correlation with closed-form oracle "
                        f"{entry['oracle_correlation']:.6f}")
        log[variant] = entry

    archive = save_weights(weights, heads, store.path_for('train', WEIGHTS_NAME))
    store.register_output(archive)
    store.write_json(log, 'train', TRAINING_LOG_NAME)
    store.write_run_manifest('train-head', config.config_hash())
    return {'variants': list(config.variants), 'archive': archive,
            'final_loss': {v: entry['final_loss'] for v, entry in log.items()}}


def cmd_eval(config: RunConfig) -> Dict[str, Any]:
    """Attack sweep per backend, then the correlation grid and attack-effect table."""
    store = ArtifactStore(config.output_dir)
    weights, stored_heads = load_trained_archive(config, store)
    heads = select_heads(config, stored_heads)
    manifest = prepare_manifest(config, store)
    provider = crop_provider(config, manifest)
    model = MonetModel(weights)
    baselines = sorted(BASELINES) if config.baselines else []

    combined = AttackEvalResult()
    for backend_config in config.backends:
        backend = build_backend(backend_config)
        combined.extend(run_attack_eval(manifest, model, heads, backend, config.attacks, config.seed,
                                        provider=provider, dataset=config.dataset, baselines=baselines))

    report = ablation_report(combined.records, list(heads) + baselines, config.attacks, metadata={
        'seed': config.seed,
        'skipped': combined.skipped_count,
        'backends': [b.name for b in config.backends],
        'baselines': baselines
    })
    store.write_jsonl((record.to_dict() for record in combined.records), 'eval', RECORDS_NAME)
    write_report(report, store, 'eval')
    store.write_run_manifest('eval', config.config_hash())
    return dict(summarize_report(report), records=len(combined.records), skipped=combined.skipped_count)


def _pipeline_head(config: RunConfig, heads: Dict[str, QualityHead]) -> Tuple[str, QualityHead]:
    if DEFAULT_HEAD in heads:
        return DEFAULT_HEAD, heads[DEFAULT_HEAD]
    name, head = next(iter(select_heads(config, heads).items()))
    return name, head


def cmd_pipeline_sim(config: RunConfig) -> Dict[str, Any]:
    """
    Replay a scenario through detection, tracking, joint landmark/quality
    scoring and per-track top-k selection.
    """
    store = ArtifactStore(config.output_dir)
    frame_size = (PIPELINE_CONFIG['frame_width'], PIPELINE_CONFIG['frame_height'])
    generator = SyntheticFaceGenerator(GeneratorConfig(seed=config.seed))

    if config.scenario_path:
        path = config.require_file('scenario_path')
        store.register_input(path)
        scenario = load_scenario(path)
    else:
        rows = generator.generate_scenario(frame_size=frame_size)
        store.write_jsonl(rows, 'pipeline', 'scenario.jsonl')
        scenario = scenario_from_rows(rows)

    weights, heads = load_trained_archive(config, store)
    head_name, head = _pipeline_head(config, heads)
    params = config.pipeline
    detector = GroundTruthDetector(scenario, params.jitter_px, params.dropout, config.seed, frame_size)
    pipeline = FacePipeline(MonetModel(weights), head, params=params, crop_margin=config.crop_margin)

    frames = ((row.frame, generator.render_scenario_frame(row.to_dict(), frame_size))
              for row in scenario.frames)
    results = pipeline.run(detector, frames)
    events = [event for result in results for event in result.events] + pipeline.finish()

    store.write_jsonl((row.to_dict() for row in pipeline.selection_rows()), 'pipeline', SELECTIONS_NAME)
    for entry in pipeline.selected_entries():
        if entry.crop is not None:
            store.write_image(entry.crop, 'pipeline_crops', entry.crop_ref)
    store.write_jsonl((asdict(event) for event in events), 'pipeline', 'events.jsonl')
    summaries = [summary.to_dict() for summary in pipeline.summaries()]
    store.write_json(summaries, 'pipeline', 'summaries.json')
    timing = pipeline.timer.report()
    store.write_json(timing, 'pipeline', 'timing.json')
    store.write_run_manifest('pipeline-sim', config.config_hash())
    return {
        'head': head_name,
        'frames': len(scenario),
        'tracks': len(summaries),
        'selections': sum(s['forwarded'] for s in summaries),
        'failures': sum(len(result.failures) for result in results)
    }


def cmd_report(config: RunConfig, report_path: Optional[str] = None) -> Dict[str, Any]:
    """Re-render the CSV tables from an existing report.json."""
    store = ArtifactStore(config.output_dir)
    path = report_path or store.path_for('eval', REPORT_NAME)
    if not os.path.isfile(path):
        raise ConfigError(f"report does not exist: {path}")
    store.register_input(path)
    report = load_report(path)
    written: List[str] = write_report_csvs(report, store, 'eval')
    store.write_run_manifest('report', config.config_hash())
    return dict(summarize_report(report), written=written)


COMMANDS: Dict[str, Callable[..., Dict[str, Any]]] = {
    'synth': cmd_synth,
    'augment': cmd_augment,
    'train-head': cmd_train_head,
    'eval': cmd_eval,
    'pipeline-sim': cmd_pipeline_sim,
    'report': cmd_report,
}
