"""
Report writing: report.json plus one CSV per table.

Output is byte-deterministic for a fixed report (sorted JSON keys, fixed
float format, '\\n' line endings, no timestamps).
"""
import json
import logging
import os
from typing import Dict, List, Union

import pandas as pd

from config.settings import EVALUATION_CONFIG
from ..models.evaluation_result import EvalReport, cells_to_csv
from ..storage.artifact_store import ArtifactStore, ArtifactStoreError
from .correlation import EvaluationError

REPORT_NAME = 'report.json'
GRID_CSV = 'correlation_grid.csv'
ATTACK_EFFECT_CSV = 'attack_effect.csv'
ATTACK_EFFECT_COLUMNS = ['dataset', 'backend', 'attack', 'mean_match', 'mean_self', 'n']

logger = logging.getLogger(__name__)


def _as_store(target: Union[str, ArtifactStore]) -> ArtifactStore:
    return target if isinstance(target, ArtifactStore) else ArtifactStore(target)


def attack_effect_frame(report: EvalReport) -> pd.DataFrame:
    return pd.DataFrame([row.to_dict() for row in report.attack_effect], columns=ATTACK_EFFECT_COLUMNS)


def write_report_csvs(report: EvalReport, target: Union[str, ArtifactStore], folder: str = '',
                      precision: int = EVALUATION_CONFIG['report_float_precision']) -> List[str]:
    """Write the correlation grid and attack-effect CSVs."""
    store = _as_store(target)
    return [
        store.write_text(cells_to_csv(report.cells, precision), folder, GRID_CSV),
        store.write_csv(attack_effect_frame(report), folder, ATTACK_EFFECT_CSV, precision),
    ]


def write_report(report: EvalReport, target: Union[str, ArtifactStore], folder: str = '',
                 precision: int = EVALUATION_CONFIG['report_float_precision']) -> List[str]:
    """
    Write report.json and the table CSVs.

    Args:
        report: Evaluation report
        target: Output directory or artifact store
        folder: Output folder key of the store ('' for its root)
        precision: Decimal places in the CSVs

    Returns:
        Paths written

    Raises:
        EvaluationError: If the directory is not writable
    """
    try:
        store = _as_store(target)
        paths = [store.write_json(report.to_dict(), folder, REPORT_NAME)]
        paths.extend(write_report_csvs(report, store, folder, precision))
    except ArtifactStoreError as e:
        raise EvaluationError(f"Failed to write report: {str(e)}")
    logger.info(f"Report written: {len(report.cells)} cells, {len(report.attack_effect)} attack rows")
    return paths


def load_report(path: str) -> EvalReport:
    """
    Raises:
        EvaluationError: If the file is missing or malformed
    """
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return EvalReport.from_dict(json.load(f))
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise EvaluationError(f"Failed to read report {path}: {str(e)}")


def render_report_csvs(report_path: str, out_dir: Union[str, ArtifactStore, None] = None,
                       precision: int = EVALUATION_CONFIG['report_float_precision']) -> List[str]:
    """Re-render the CSVs of an existing report.json (next to it by default)."""
    report = load_report(report_path)
    target = out_dir if out_dir is not None else os.path.dirname(os.path.abspath(report_path))
    try:
        return write_report_csvs(report, target, '', precision)
    except ArtifactStoreError as e:
        raise EvaluationError(f"Failed to write report CSVs: {str(e)}")


def summarize_report(report: EvalReport) -> Dict[str, int]:
    skipped = sum(1 for cell in report.cells if cell.r is None)
    return {'cells': len(report.cells), 'skipped_cells': skipped, 'attack_rows': len(report.attack_effect)}
