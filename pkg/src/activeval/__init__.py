"""Active testing for classifiers evaluated on noisy test sets.

Combines all noisy labels with a small, actively selected set of vetted
labels to produce approximately unbiased P@K and precision-recall
estimates, via a Bayesian per-cell posterior and an iterative
vet-estimate loop.
"""

from .data import (
    EntityPair,
    PredictionDataset,
    RankedItem,
    RankedList,
    flatten_and_rank,
    label_vector,
)
from .estimator import (
    NoiseTable,
    PosteriorModel,
    PosteriorTable,
    ScoreCalibrator,
    estimate_all,
    fit_calibrator,
    fit_noise_table,
    fit_posterior_model,
    posterior_cell,
)
from .metrics import (
    MetricReport,
    PrCurve,
    curve_distance,
    expected_metrics,
    metric_report,
    pr_curve,
    precision_at_k,
    recall_at_k,
)
from .vetting import (
    ActiveTestingConfig,
    ActiveTestingSession,
    Annotator,
    EvaluationReport,
    IterationRecord,
    VettingState,
    memc_priority,
    pair_priority,
    run_active_testing,
    select_batch,
)
from .simulation import (
    NoiseSummary,
    ScoreModel,
    StrategyComparison,
    SyntheticConfig,
    compare_strategies,
    generate,
    oracle_annotator,
    realized_noise_rates,
)

__version__ = "0.1.0"

__all__ = [
    "ActiveTestingConfig",
    "ActiveTestingSession",
    "Annotator",
    "EntityPair",
    "EvaluationReport",
    "IterationRecord",
    "MetricReport",
    "NoiseSummary",
    "NoiseTable",
    "PosteriorModel",
    "PosteriorTable",
    "PrCurve",
    "PredictionDataset",
    "RankedItem",
    "RankedList",
    "ScoreCalibrator",
    "ScoreModel",
    "StrategyComparison",
    "SyntheticConfig",
    "VettingState",
    "compare_strategies",
    "curve_distance",
    "estimate_all",
    "expected_metrics",
    "fit_calibrator",
    "fit_noise_table",
    "fit_posterior_model",
    "flatten_and_rank",
    "generate",
    "label_vector",
    "memc_priority",
    "metric_report",
    "oracle_annotator",
    "pair_priority",
    "posterior_cell",
    "pr_curve",
    "precision_at_k",
    "realized_noise_rates",
    "recall_at_k",
    "run_active_testing",
    "select_batch",
]
