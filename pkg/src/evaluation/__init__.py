"""
Evaluation module: Pearson correlation, attack sweeps, ablation and baseline
grids, and report writing.
"""

from .correlation import (
    EvaluationError,
    UndefinedCorrelationError,
    CorrelationAnalyzer,
    pearson,
    correlate,
    rank_row,
    top_models
)

from .baselines import (
    BASELINES,
    baseline_sharpness,
    baseline_contrast
)

from .attack_eval import (
    AttackEvalResult,
    AttackEvaluator,
    ablation_eval,
    ablation_report,
    attack_effect_table,
    attack_seed,
    baseline_comparison,
    cross_backend_grid,
    eval_records,
    mean_scores,
    natural_eval,
    run_attack_eval
)

from .report import (
    REPORT_NAME,
    load_report,
    render_report_csvs,
    summarize_report,
    write_report,
    write_report_csvs
)

__all__ = [
    'EvaluationError',
    'UndefinedCorrelationError',
    'CorrelationAnalyzer',
    'pearson',
    'correlate',
    'rank_row',
    'top_models',
    'BASELINES',
    'baseline_sharpness',
    'baseline_contrast',
    'AttackEvalResult',
    'AttackEvaluator',
    'ablation_eval',
    'ablation_report',
    'attack_effect_table',
    'attack_seed',
    'baseline_comparison',
    'cross_backend_grid',
    'eval_records',
    'mean_scores',
    'natural_eval',
    'run_attack_eval',
    'REPORT_NAME',
    'load_report',
    'render_report_csvs',
    'summarize_report',
    'write_report',
    'write_report_csvs'
]
