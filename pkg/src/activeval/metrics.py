"""Precision/recall at K, PR curves, and the curve-distance score.

All operations accept real-valued label vectors, so the same code path
computes exact metrics (0/1 labels), held-out metrics (noisy labels), and
expected metrics (posterior probabilities mixed with vetted point masses).
Expected recall is a ratio of expectations: the expectation is applied to
numerator and denominator separately.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HELD_OUT = "held-out"
EXPECTED = "expected"
ORACLE = "oracle"

CURVE_SAMPLE_POINTS = 20


@dataclass(frozen=True)
class PrCurve:
    """A precision-recall curve: one point per rank K = 1..max_rank."""

    recall: np.ndarray
    precision: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "recall", np.asarray(self.recall, dtype=np.float64))
        object.__setattr__(self, "precision", np.asarray(self.precision, dtype=np.float64))
        if self.recall.shape != self.precision.shape or self.recall.ndim != 1:
            raise ValueError("recall and precision must be 1-d arrays of equal length")
        if len(self.recall) == 0:
            raise ValueError("empty PR curve")
        if np.any(np.diff(self.recall) < 0):
            raise ValueError("recall must be non-decreasing along the curve")

    def __len__(self) -> int:
        return len(self.recall)

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.recall.tolist(), self.precision.tolist()))


@dataclass(frozen=True)
class MetricReport:
    """P@K / R@K values and the PR curve for one evaluation source."""

    source: str
    p_at_k: dict[int, float]
    r_at_k: dict[int, float]
    curve: PrCurve


def precision_at_k(labels: np.ndarray, k: int) -> float:
    """Mean of the first ``k`` entries of a rank-ordered label vector."""
    labels = np.asarray(labels, dtype=np.float64)
    if not 1 <= k <= len(labels):
        raise ValueError(f"K={k} out of range for {len(labels)} labels")
    return float(np.sum(labels[:k]) / k)


def recall_at_k(labels: np.ndarray, k: int) -> float:
    """Partial sum over the top ``k`` divided by the total over all ranks."""
    labels = np.asarray(labels, dtype=np.float64)
    if not 1 <= k <= len(labels):
        raise ValueError(f"K={k} out of range for {len(labels)} labels")
    total = float(np.sum(labels))
    if total <= 0.0:
        raise ValueError("recall undefined: label vector sums to zero")
    return float(np.sum(labels[:k]) / total)


def pr_curve(labels: np.ndarray, max_rank: int | None = None) -> PrCurve:
    """PR curve with one (R@K, P@K) point per K = 1..max_rank.

    Recall denominators always use the full label vector, even when the
    curve is truncated at ``max_rank``.
    """
    labels = np.asarray(labels, dtype=np.float64)
    n = len(labels)
    if n == 0:
        raise ValueError("empty label vector")
    if max_rank is None:
        max_rank = n
    if not 1 <= max_rank <= n:
        raise ValueError(f"max_rank={max_rank} out of range for {n} labels")
    total = float(np.sum(labels))
    if total <= 0.0:
        raise ValueError("recall undefined: label vector sums to zero")
    cum = np.cumsum(labels)[:max_rank]
    ranks = np.arange(1, max_rank + 1, dtype=np.float64)
    return PrCurve(recall=cum / total, precision=cum / ranks)


def metric_report(labels: np.ndarray, ks: list[int], source: str) -> MetricReport:
    """P@K and R@K at each requested K plus the full PR curve."""
    labels = np.asarray(labels, dtype=np.float64)
    p_at_k = {int(k): precision_at_k(labels, int(k)) for k in ks}
    r_at_k = {int(k): recall_at_k(labels, int(k)) for k in ks}
    return MetricReport(source=source, p_at_k=p_at_k, r_at_k=r_at_k, curve=pr_curve(labels))


def expected_metrics(posteriors, ranking, ks: list[int]) -> MetricReport:
    """Expected P@K / R@K / PR curve from a posterior table.

    The posterior vector already mixes vetted point masses with unvetted
    posteriors, so plugging it into the exact formulas yields the expected
    metrics directly.
    """
    q = np.asarray(posteriors.q, dtype=np.float64)
    if len(q) != len(ranking):
        raise ValueError(
            f"posterior table length {len(q)} does not match ranking length {len(ranking)}"
        )
    return metric_report(q, ks, source=EXPECTED)


def _sample_precision(curve: PrCurve, recall_values: np.ndarray) -> np.ndarray:
    """Precision at given recall values by linear interpolation.

    Where several ranks share one recall value (runs of zero labels), the
    point with the largest rank wins, which makes precision a well-defined
    function of recall.
    """
    recall = curve.recall
    precision = curve.precision
    # keep the last point of every run of equal recall
    keep = np.append(recall[1:] != recall[:-1], True)
    return np.interp(recall_values, recall[keep], precision[keep])


def curve_distance(a: PrCurve, b: PrCurve, n_points: int = CURVE_SAMPLE_POINTS) -> float:
    """Euclidean distance between two PR curves.

    Samples both curves at ``n_points`` recall values equally spaced across
    the intersection of their recall ranges and returns the norm of the
    precision-difference vector.
    """
    lo = max(float(a.recall[0]), float(b.recall[0]))
    hi = min(float(a.recall[-1]), float(b.recall[-1]))
    if lo > hi:
        raise ValueError("curves have disjoint recall ranges")
    xs = np.linspace(lo, hi, n_points)
    diff = _sample_precision(a, xs) - _sample_precision(b, xs)
    return float(np.linalg.norm(diff))
