"""Synthetic noisy-labeled datasets with known ground truth.

The generator draws true labels, flips them into noisy labels at
configurable false-negative / false-positive rates, and produces scores
from a two-component model in which truly positive cells score
stochastically higher.  Defaults mirror a 500-pair relabeled benchmark
subset: 21.2% positive pairs and an 8.75% cell-level false-negative rate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data import EntityPair, PredictionDataset
from .metrics import curve_distance
from .vetting import (
    ActiveTestingConfig,
    Annotator,
    EvaluationReport,
    run_active_testing,
)

SCORE_EPS = 1e-9


@dataclass(frozen=True)
class ScoreModel:
    """Score generator: sigmoid(base + separation * z + noise)."""

    base: float = -2.0
    separation: float = 4.0
    noise_scale: float = 1.0


@dataclass(frozen=True)
class SyntheticConfig:
    n_pairs: int = 500
    n_relations: int = 5
    positive_rate: float = 0.212
    false_negative_rate: float = 0.0875
    false_positive_rate: float = 0.0
    multi_relation_rate: float = 0.05
    score_model: ScoreModel = field(default_factory=ScoreModel)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_pairs < 1 or self.n_relations < 1:
            raise ValueError("need at least one pair and one relation")
        for name in ("positive_rate", "false_negative_rate", "false_positive_rate",
                     "multi_relation_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")


@dataclass(frozen=True)
class NoiseSummary:
    """Realized noise rates of a generated dataset."""

    n_pairs: int
    n_true_positive_cells: int
    n_false_negative_cells: int
    n_false_positive_cells: int
    n_false_negative_pairs: int
    cell_fn_rate: float
    pair_fn_rate: float


def generate(config: SyntheticConfig) -> PredictionDataset:
    """Draw a synthetic dataset with oracle labels; deterministic per seed."""
    rng = np.random.default_rng(config.seed)
    n, p = config.n_pairs, config.n_relations

    true = np.zeros((n, p), dtype=np.int64)
    positive = rng.random(n) < config.positive_rate
    primary = rng.integers(0, p, size=n)
    extra = rng.random((n, p)) < config.multi_relation_rate
    true[np.arange(n)[positive], primary[positive]] = 1
    true[positive] |= extra[positive]

    noisy = true.copy()
    fn_flip = rng.random((n, p)) < config.false_negative_rate
    fp_flip = rng.random((n, p)) < config.false_positive_rate
    noisy[(true == 1) & fn_flip] = 0
    noisy[(true == 0) & fp_flip] = 1

    sm = config.score_model
    eta = sm.base + sm.separation * true + sm.noise_scale * rng.normal(size=(n, p))
    scores = np.clip(1.0 / (1.0 + np.exp(-eta)), SCORE_EPS, 1.0 - SCORE_EPS)

    width = len(str(n - 1))
    relations = tuple(f"r{j:02d}" for j in range(p))
    pairs = []
    for i in range(n):
        pair_id = f"pair-{i:0{width}d}"
        pairs.append(
            EntityPair(
                pair_id=pair_id,
                head=f"head-{i}",
                tail=f"tail-{i}",
                scores={rel: float(scores[i, j]) for j, rel in enumerate(relations)},
                noisy_labels={rel: int(noisy[i, j]) for j, rel in enumerate(relations)},
                oracle_labels={rel: int(true[i, j]) for j, rel in enumerate(relations)},
            )
        )
    return PredictionDataset(pairs=tuple(pairs), relations=relations)


def realized_noise_rates(dataset: PredictionDataset) -> NoiseSummary:
    """Cell- and pair-level noise realized in a dataset with oracle labels.

    A false-negative pair is one whose every truly positive cell carries a
    noisy zero.
    """
    if not dataset.has_oracle():
        raise ValueError("noise summary requires oracle labels")
    n_tp = n_fn = n_fp = n_fn_pairs = 0
    for pair in dataset.pairs:
        assert pair.oracle_labels is not None
        true_cells = [rel for rel in dataset.relations if pair.oracle_labels[rel] == 1]
        n_tp += len(true_cells)
        fn_cells = [rel for rel in true_cells if pair.noisy_labels[rel] == 0]
        n_fn += len(fn_cells)
        n_fp += sum(
            1
            for rel in dataset.relations
            if pair.oracle_labels[rel] == 0 and pair.noisy_labels[rel] == 1
        )
        if true_cells and len(fn_cells) == len(true_cells):
            n_fn_pairs += 1
    return NoiseSummary(
        n_pairs=dataset.n_pairs,
        n_true_positive_cells=n_tp,
        n_false_negative_cells=n_fn,
        n_false_positive_cells=n_fp,
        n_false_negative_pairs=n_fn_pairs,
        cell_fn_rate=n_fn / n_tp if n_tp else 0.0,
        pair_fn_rate=n_fn_pairs / dataset.n_pairs,
    )


def oracle_annotator(dataset: PredictionDataset) -> Annotator:
    """Annotator that answers instantly with the dataset's oracle labels."""

    def annotate(pair_ids: Sequence[str]) -> dict[str, dict[str, int]]:
        out: dict[str, dict[str, int]] = {}
        for pair_id in pair_ids:
            pair = dataset.pair(pair_id)
            if pair.oracle_labels is None:
                raise ValueError(f"pair {pair_id!r} has no oracle labels")
            out[pair_id] = dict(pair.oracle_labels)
        return out

    return annotate


@dataclass(frozen=True)
class ComparisonRow:
    """Result of one (strategy, budget, seed) run."""

    strategy: str
    budget: int
    seed: int
    distance_to_oracle: float
    p_at_k_abs_error: dict[int, float]


@dataclass(frozen=True)
class StrategyComparison:
    """Sweep results plus the per-iteration distance trace of each run."""

    rows: tuple[ComparisonRow, ...]
    traces: dict[tuple[str, int], tuple[tuple[int, float], ...]]

    def mean_distance(self, strategy: str, budget: int) -> float:
        vals = [
            r.distance_to_oracle
            for r in self.rows
            if r.strategy == strategy and r.budget == budget
        ]
        if not vals:
            raise ValueError(f"no rows for strategy={strategy!r}, budget={budget}")
        return float(np.mean(vals))

    def mean_p_at_k_error(self, strategy: str, budget: int, k: int) -> float:
        vals = [
            r.p_at_k_abs_error[k]
            for r in self.rows
            if r.strategy == strategy and r.budget == budget
        ]
        if not vals:
            raise ValueError(f"no rows for strategy={strategy!r}, budget={budget}")
        return float(np.mean(vals))


def compare_strategies(
    config: SyntheticConfig,
    strategies: Sequence[str],
    budgets: Sequence[int],
    n_seeds: int,
    run_config: ActiveTestingConfig | None = None,
) -> StrategyComparison:
    """Run the full loop per (strategy, budget, seed) against the oracle curve.

    Each (strategy, seed) pair runs once at the largest budget; smaller
    budgets are read off the per-iteration trace, so requested budgets
    should be multiples of the batch size.
    """
    if n_seeds < 1:
        raise ValueError("n_seeds must be >= 1")
    budgets = sorted(set(int(b) for b in budgets))
    max_budget = max(budgets)
    base = run_config or ActiveTestingConfig()

    rows: list[ComparisonRow] = []
    traces: dict[tuple[str, int], tuple[tuple[int, float], ...]] = {}
    for seed in range(n_seeds):
        dataset = generate(
            SyntheticConfig(**{**config.__dict__, "seed": config.seed + seed})
        )
        annotator = oracle_annotator(dataset)
        for strategy in strategies:
            cfg = ActiveTestingConfig(
                **{
                    **base.__dict__,
                    "strategy": strategy,
                    "budget": max_budget,
                    "seed": base.seed + seed,
                }
            )
            report = run_active_testing(dataset, cfg, annotator)
            rows.extend(_rows_from_report(report, strategy, budgets, seed, cfg))
            trace = _distance_trace(report, cfg)
            traces[(strategy, seed)] = tuple(trace)
    return StrategyComparison(rows=tuple(rows), traces=traces)


def _distance_trace(
    report: EvaluationReport, cfg: ActiveTestingConfig
) -> list[tuple[int, float]]:
    trace: list[tuple[int, float]] = []
    used = 0
    for record in report.history:
        used += len(record.batch)
        if record.distance_to_oracle is None:
            raise ValueError("distance trace requires oracle labels")
        trace.append((used, record.distance_to_oracle))
    return trace


def _rows_from_report(
    report: EvaluationReport,
    strategy: str,
    budgets: Sequence[int],
    seed: int,
    cfg: ActiveTestingConfig,
) -> list[ComparisonRow]:
    if report.oracle is None:
        raise ValueError("strategy comparison requires oracle labels")
    oracle = report.oracle
    # budget 0 corresponds to the initial estimate, before any batch
    initial_distance = curve_distance(report.initial_expected.curve, oracle.curve)
    snapshots: dict[int, tuple[dict[int, float], float]] = {
        0: (report.initial_expected.p_at_k, initial_distance)
    }
    used = 0
    for record in report.history:
        used += len(record.batch)
        assert record.distance_to_oracle is not None
        snapshots[used] = (record.metrics.p_at_k, record.distance_to_oracle)

    rows = []
    for budget in budgets:
        if budget not in snapshots:
            raise ValueError(
                f"budget {budget} does not align with batch boundaries {sorted(snapshots)}"
            )
        p_at_k, distance = snapshots[budget]
        rows.append(
            ComparisonRow(
                strategy=strategy,
                budget=budget,
                seed=seed,
                distance_to_oracle=distance,
                p_at_k_abs_error={
                    k: abs(p_at_k[k] - oracle.p_at_k[k]) for k in cfg.ks
                },
            )
        )
    return rows


