"""Vetting strategies and the iterative vet-estimate loop.

Each iteration selects a batch of unvetted entity pairs (by expected model
change or at random), obtains trusted labels for them, refits the posterior
model on the grown vetted set, and recomputes the expected metrics.  The
loop stops when the pair budget is exhausted or nothing is left to vet.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .data import NOISY, ORACLE, PredictionDataset, RankedList, flatten_and_rank, label_vector
from .estimator import PosteriorModel, PosteriorTable, estimate_all, fit_posterior_model
from .metrics import (
    HELD_OUT,
    MetricReport,
    curve_distance,
    expected_metrics,
    metric_report,
)

MEMC = "memc"
RANDOM = "random"
STRATEGIES = (MEMC, RANDOM)

INIT_NONE = "none"
INIT_RANDOM = "random"
INIT_POSITIVES = "positives"
INIT_POLICIES = (INIT_NONE, INIT_RANDOM, INIT_POSITIVES)

# Annotator: given a batch of pair ids, returns a true label map per pair.
Annotator = Callable[[Sequence[str]], Mapping[str, Mapping[str, int]]]


@dataclass(frozen=True)
class IterationRecord:
    """Snapshot taken after one vetting batch has been applied."""

    iteration: int
    batch: tuple[str, ...]
    metrics: MetricReport
    noise_summary: dict[str, tuple[float, float]]
    distance_to_oracle: float | None = None


@dataclass
class VettingState:
    """Disjoint partition of pairs into unvetted (U) and vetted (V).

    ``vetted`` maps pair_id to the observed true label map.  The budget is
    counted in entity pairs and only ever decreases.
    """

    unvetted: set[str]
    vetted: dict[str, dict[str, int]]
    budget_remaining: int
    initial_budget: int
    history: list[IterationRecord] = field(default_factory=list)

    def check_invariants(self, dataset: PredictionDataset) -> None:
        if self.unvetted & self.vetted.keys():
            raise ValueError("unvetted and vetted sets overlap")
        if self.unvetted | self.vetted.keys() != set(dataset.pair_ids):
            raise ValueError("unvetted and vetted sets do not partition the dataset")
        if self.budget_remaining < 0:
            raise ValueError("negative budget")


@dataclass(frozen=True)
class ActiveTestingConfig:
    """Knobs for one vet-estimate run."""

    strategy: str = MEMC
    batch_size: int = 20
    budget: int = 100
    ks: tuple[int, ...] = (50, 100, 150)
    init_policy: str = INIT_RANDOM
    init_size: int = 50
    init_negatives: int = 150
    memc_aggregate: str = "max"
    pooled_noise: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "ks", tuple(int(k) for k in self.ks))
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.init_policy not in INIT_POLICIES:
            raise ValueError(f"unknown init policy {self.init_policy!r}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.budget < 0:
            raise ValueError("budget must be >= 0")
        if not self.ks:
            raise ValueError("at least one K is required")
        if self.memc_aggregate not in ("max", "sum"):
            raise ValueError(f"unknown memc aggregate {self.memc_aggregate!r}")


@dataclass(frozen=True)
class EvaluationReport:
    """Final estimates plus the per-iteration trace of one run."""

    ks: tuple[int, ...]
    expected: MetricReport
    initial_expected: MetricReport
    held_out: MetricReport | None
    oracle: MetricReport | None
    history: tuple[IterationRecord, ...]
    distances: dict[str, float]


def memc_priority(q: float, k: int) -> float:
    """Expected change of P@K caused by vetting a cell with posterior ``q``.

    Vetting resolves the cell to 0 or 1, shifting the P@K estimate by q/K or
    (1-q)/K; the expectation of the absolute shift is (2/K) * q * (1-q).
    """
    return (2.0 / k) * q * (1.0 - q)


def pair_priority(
    pair_id: str,
    posteriors: PosteriorTable,
    ranking: RankedList,
    strategy: str = MEMC,
    rng: np.random.Generator | None = None,
    aggregate: str = "max",
) -> float:
    """Vetting priority of one pair.

    MEMC aggregates the cell-level uncertainty q*(1-q) over the pair's cells
    (the 2/K factor is rank-invariant and omitted); the random strategy is a
    seeded uniform draw.
    """
    if strategy == RANDOM:
        if rng is None:
            raise ValueError("random strategy requires an rng")
        ranking.indices_of_pair(pair_id)  # raises on unknown pair
        return float(rng.random())
    idx = np.asarray(ranking.indices_of_pair(pair_id), dtype=np.int64)
    u = posteriors.q[idx] * (1.0 - posteriors.q[idx])
    return float(np.sum(u)) if aggregate == "sum" else float(np.max(u))


def pair_priorities(
    pair_ids: Sequence[str],
    posteriors: PosteriorTable,
    ranking: RankedList,
    strategy: str = MEMC,
    rng: np.random.Generator | None = None,
    aggregate: str = "max",
) -> dict[str, float]:
    """Priorities for a set of pairs; random draws happen in sorted id order."""
    return {
        pid: pair_priority(pid, posteriors, ranking, strategy, rng=rng, aggregate=aggregate)
        for pid in sorted(pair_ids)
    }


def select_batch(
    state: VettingState,
    posteriors: PosteriorTable,
    ranking: RankedList,
    strategy: str = MEMC,
    batch_size: int = 20,
    rng: np.random.Generator | None = None,
    aggregate: str = "max",
) -> list[str]:
    """Pick the highest-priority unvetted pairs for the next batch.

    Returns min(batch_size, budget_remaining, |U|) pairs; ties break by
    pair_id ascending.  An empty unvetted set yields an empty batch.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    size = min(batch_size, state.budget_remaining, len(state.unvetted))
    if size <= 0:
        return []
    priorities = pair_priorities(
        state.unvetted, posteriors, ranking, strategy, rng=rng, aggregate=aggregate
    )
    ordered = sorted(priorities, key=lambda pid: (-priorities[pid], pid))
    return ordered[:size]


def _validate_annotations(
    dataset: PredictionDataset,
    batch: Sequence[str],
    labels: Mapping[str, Mapping[str, int]],
) -> dict[str, dict[str, int]]:
    """Reject partial or malformed annotations before any state changes."""
    if set(labels.keys()) != set(batch):
        missing = sorted(set(batch) - set(labels.keys()))
        extra = sorted(set(labels.keys()) - set(batch))
        raise ValueError(
            f"annotations do not match the batch (missing={missing}, unexpected={extra})"
        )
    out: dict[str, dict[str, int]] = {}
    for pair_id in batch:
        label_map = labels[pair_id]
        cleaned: dict[str, int] = {}
        for rel in dataset.relations:
            if rel not in label_map:
                raise ValueError(
                    f"annotation for pair {pair_id!r} is missing relation {rel!r}"
                )
            v = label_map[rel]
            if v not in (0, 1):
                raise ValueError(
                    f"annotation for pair {pair_id!r}, relation {rel!r} must be 0 or 1"
                )
            cleaned[rel] = int(v)
        out[pair_id] = cleaned
    return out


class ActiveTestingSession:
    """Owns one vet-estimate run: state, model, posteriors, pending batch.

    The session is the single writer of its ``VettingState``.  Annotation is
    applied atomically: validation happens before any mutation, so a failed
    batch leaves the state and budget untouched.
    """

    def __init__(
        self,
        dataset: PredictionDataset,
        config: ActiveTestingConfig,
        state: VettingState,
        rng: np.random.Generator,
        initial_expected: MetricReport | None = None,
    ) -> None:
        self.dataset = dataset
        self.config = config
        self.state = state
        self.rng = rng
        self.ranking = flatten_and_rank(dataset)
        for k in config.ks:
            if not 1 <= k <= len(self.ranking):
                raise ValueError(
                    f"K={k} out of range for {len(self.ranking)} ranked cells"
                )
        self._refit()
        if initial_expected is None:
            initial_expected = self.expected_report()
        self.initial_expected = initial_expected
        self._checkpoint_and_select()

    # -- construction ----------------------------------------------------

    @classmethod
    def create(
        cls,
        dataset: PredictionDataset,
        config: ActiveTestingConfig,
        annotator: Annotator | None = None,
    ) -> "ActiveTestingSession":
        """Start a session: seed the vetted set per the init policy.

        Seeding labels come from the annotator and do not consume budget;
        a non-empty init policy therefore requires an annotator.
        """
        rng = np.random.default_rng(config.seed)
        seed_ids = cls._initial_pairs(dataset, config, rng)
        vetted: dict[str, dict[str, int]] = {}
        if seed_ids:
            if annotator is None:
                raise ValueError(
                    f"init policy {config.init_policy!r} needs an annotator for the seed set"
                )
            labels = annotator(seed_ids)
            vetted = _validate_annotations(dataset, seed_ids, labels)
        state = VettingState(
            unvetted=set(dataset.pair_ids) - vetted.keys(),
            vetted=vetted,
            budget_remaining=config.budget,
            initial_budget=config.budget,
        )
        return cls(dataset, config, state, rng)

    @staticmethod
    def _initial_pairs(
        dataset: PredictionDataset, config: ActiveTestingConfig, rng: np.random.Generator
    ) -> list[str]:
        all_ids = sorted(dataset.pair_ids)
        if config.init_policy == INIT_NONE:
            return []
        if config.init_policy == INIT_RANDOM:
            size = min(config.init_size, len(all_ids))
            picked = rng.choice(np.asarray(all_ids, dtype=object), size=size, replace=False)
            return sorted(str(p) for p in picked)
        # "positives": every noisy-positive pair plus random noisy-negative pairs
        positives = [
            pid for pid in all_ids
            if any(dataset.pair(pid).noisy_labels[rel] for rel in dataset.relations)
        ]
        positive_set = set(positives)
        negatives = [pid for pid in all_ids if pid not in positive_set]
        size = min(config.init_negatives, len(negatives))
        picked = rng.choice(np.asarray(negatives, dtype=object), size=size, replace=False)
        return sorted(positives + [str(p) for p in picked])

    # -- internals --------------------------------------------------------

    def _refit(self) -> None:
        self.model: PosteriorModel = fit_posterior_model(
            self.dataset, self.state.vetted, pooled_noise=self.config.pooled_noise
        )
        self.posteriors: PosteriorTable = estimate_all(
            self.dataset, self.ranking, self.state.vetted, self.model
        )

    def _checkpoint_and_select(self) -> None:
        # rng state is captured before the draw so a restored session
        # reproduces the same pending batch
        self.rng_checkpoint = self.rng.bit_generator.state
        self.pending_batch: list[str] = select_batch(
            self.state,
            self.posteriors,
            self.ranking,
            strategy=self.config.strategy,
            batch_size=self.config.batch_size,
            rng=self.rng,
            aggregate=self.config.memc_aggregate,
        )

    # -- public API -------------------------------------------------------

    @property
    def done(self) -> bool:
        return not self.pending_batch

    @property
    def iteration(self) -> int:
        return len(self.state.history)

    def batch_token(self) -> str:
        """Optimistic-concurrency token for the current pending batch."""
        payload = "|".join(
            [str(self.iteration), str(self.state.budget_remaining), *self.pending_batch]
        )
        return f"b{self.iteration}-{hashlib.sha256(payload.encode()).hexdigest()[:12]}"

    def expected_report(self, ks: Sequence[int] | None = None) -> MetricReport:
        return expected_metrics(self.posteriors, self.ranking, list(ks or self.config.ks))

    def held_out_report(self, ks: Sequence[int] | None = None) -> MetricReport | None:
        labels = label_vector(self.dataset, self.ranking, NOISY)
        if labels.sum() == 0:
            return None
        return metric_report(labels, list(ks or self.config.ks), source=HELD_OUT)

    def oracle_report(self, ks: Sequence[int] | None = None) -> MetricReport | None:
        if not self.dataset.has_oracle():
            return None
        labels = label_vector(self.dataset, self.ranking, ORACLE)
        if labels.sum() == 0:
            return None
        return metric_report(labels, list(ks or self.config.ks), source=ORACLE)

    def apply_batch(self, labels: Mapping[str, Mapping[str, int]]) -> IterationRecord:
        """Apply annotations for the pending batch atomically.

        Moves the batch from U to V, decrements the budget by the batch
        size, refits the model, recomputes expected metrics, appends the
        iteration record, and selects the next pending batch.
        """
        if not self.pending_batch:
            raise ValueError("no pending batch: session is complete")
        batch = list(self.pending_batch)
        cleaned = _validate_annotations(self.dataset, batch, labels)

        self.state.vetted.update(cleaned)
        self.state.unvetted.difference_update(batch)
        self.state.budget_remaining -= len(batch)
        self._refit()

        metrics = self.expected_report()
        oracle = self.oracle_report()
        distance = None
        if oracle is not None:
            distance = curve_distance(metrics.curve, oracle.curve)
        record = IterationRecord(
            iteration=self.iteration + 1,
            batch=tuple(batch),
            metrics=metrics,
            noise_summary=self.model.noise.summary(),
            distance_to_oracle=distance,
        )
        self.state.history.append(record)
        self._checkpoint_and_select()
        return record

    def run(self, annotator: Annotator, max_iterations: int | None = None) -> None:
        """Drive the loop with a programmatic annotator.

        An annotator failure propagates without touching the state; the
        pending batch stays selected and can be retried.
        """
        done_iterations = 0
        while not self.done:
            if max_iterations is not None and done_iterations >= max_iterations:
                break
            labels = annotator(list(self.pending_batch))
            self.apply_batch(labels)
            done_iterations += 1

    def report(self, ks: Sequence[int] | None = None) -> EvaluationReport:
        expected = self.expected_report(ks)
        held_out = self.held_out_report(ks)
        oracle = self.oracle_report(ks)
        distances: dict[str, float] = {}
        if held_out is not None:
            distances["expected_vs_held_out"] = curve_distance(expected.curve, held_out.curve)
        if oracle is not None:
            distances["expected_vs_oracle"] = curve_distance(expected.curve, oracle.curve)
        if held_out is not None and oracle is not None:
            distances["held_out_vs_oracle"] = curve_distance(held_out.curve, oracle.curve)
        return EvaluationReport(
            ks=tuple(ks) if ks else self.config.ks,
            expected=expected,
            initial_expected=self.initial_expected,
            held_out=held_out,
            oracle=oracle,
            history=tuple(self.state.history),
            distances=distances,
        )


def run_active_testing(
    dataset: PredictionDataset,
    config: ActiveTestingConfig,
    annotator: Annotator,
) -> EvaluationReport:
    """Run the full vet-estimate loop and return the final report."""
    session = ActiveTestingSession.create(dataset, config, annotator)
    session.run(annotator)
    return session.report()
