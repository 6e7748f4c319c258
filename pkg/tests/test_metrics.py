from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from activeval.estimator import PosteriorTable
from activeval.metrics import (
    PrCurve,
    curve_distance,
    expected_metrics,
    metric_report,
    pr_curve,
    precision_at_k,
    recall_at_k,
)


def enumerate_expected_p_at_k(q, k):
    """Independent oracle: expectation of exact P@K over all 0/1 completions."""
    q = list(q)
    total = 0.0
    for bits in product([0, 1], repeat=len(q)):
        w = 1.0
        for qi, b in zip(q, bits):
            w *= qi if b else (1.0 - qi)
        total += w * precision_at_k(np.array(bits, dtype=float), k)
    return total


def enumerate_expectations_num_den(q, k):
    """Independent oracle for recall: E[top-k sum] and E[total sum] separately."""
    q = list(q)
    e_num = e_den = 0.0
    for bits in product([0, 1], repeat=len(q)):
        w = 1.0
        for qi, b in zip(q, bits):
            w *= qi if b else (1.0 - qi)
        e_num += w * sum(bits[:k])
        e_den += w * sum(bits)
    return e_num, e_den


@pytest.mark.parametrize(
    "labels,k,expected",
    [
        ([1, 1, 0, 1], 2, 1.0),
        ([1, 1, 0, 1], 4, 0.75),
        ([1, 0, 0.5, 0.5], 4, 0.5),
    ],
)
def test_precision_at_k(labels, k, expected):
    assert precision_at_k(np.array(labels, dtype=float), k) == pytest.approx(expected)


def test_expected_precision_matches_enumeration_oracle():
    q = [1.0, 0.0, 0.5, 0.5]
    assert enumerate_expected_p_at_k(q, 4) == pytest.approx(0.5)
    assert precision_at_k(np.array(q), 4) == pytest.approx(enumerate_expected_p_at_k(q, 4))


@pytest.mark.parametrize(
    "labels,k,expected",
    [
        ([1, 0, 1, 0], 1, 0.5),
        ([1, 0, 1, 0], 4, 1.0),
        ([1, 0.5, 0.5, 0], 2, 0.75),
    ],
)
def test_recall_at_k(labels, k, expected):
    assert recall_at_k(np.array(labels, dtype=float), k) == pytest.approx(expected)


def test_expected_recall_is_ratio_of_expectations():
    # numerator and denominator take the expectation separately
    q = [1.0, 0.5, 0.5, 0.0]
    e_num, e_den = enumerate_expectations_num_den(q, 2)
    assert (e_num, e_den) == pytest.approx((1.5, 2.0))
    assert recall_at_k(np.array(q), 2) == pytest.approx(e_num / e_den)


@pytest.mark.parametrize("k", [0, 5, -1])
def test_k_out_of_range_rejected(k):
    with pytest.raises(ValueError, match="out of range"):
        precision_at_k(np.ones(4), k)
    with pytest.raises(ValueError, match="out of range"):
        recall_at_k(np.ones(4), k)


def test_recall_rejects_all_zero_labels():
    with pytest.raises(ValueError, match="sums to zero"):
        recall_at_k(np.zeros(4), 2)
    with pytest.raises(ValueError, match="sums to zero"):
        pr_curve(np.zeros(4))


def test_pr_curve_example():
    curve = pr_curve(np.array([1.0, 1.0, 0.0]))
    assert curve.recall.tolist() == pytest.approx([0.5, 1.0, 1.0])
    assert curve.precision.tolist() == pytest.approx([1.0, 1.0, 2 / 3])


def test_pr_curve_all_ones_has_precision_one():
    curve = pr_curve(np.ones(5))
    assert np.all(curve.precision == 1.0)


def test_pr_curve_truncation_keeps_full_denominator():
    curve = pr_curve(np.array([1.0, 0.0, 1.0, 0.0]), max_rank=2)
    assert len(curve) == 2
    assert curve.recall.tolist() == pytest.approx([0.5, 0.5])


@given(
    st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=30).filter(
        lambda ls: sum(ls) > 0
    )
)
@settings(max_examples=80)
def test_metric_bounds_and_recall_monotone(labels):
    arr = np.array(labels)
    curve = pr_curve(arr)
    assert np.all((curve.precision >= 0) & (curve.precision <= 1 + 1e-12))
    assert np.all((curve.recall >= 0) & (curve.recall <= 1 + 1e-12))
    assert np.all(np.diff(curve.recall) >= -1e-15)
    assert recall_at_k(arr, len(arr)) == pytest.approx(1.0)


def test_expected_metrics_equal_exact_on_binary_posteriors():
    labels = np.array([1.0, 0.0, 1.0, 1.0, 0.0])

    class FakeRanking:
        def __len__(self):
            return 5

    table = PosteriorTable(q=labels, vetted=np.ones(5, dtype=bool))
    expected = expected_metrics(table, FakeRanking(), [1, 3, 5])
    exact = metric_report(labels, [1, 3, 5], source="oracle")
    assert expected.p_at_k == exact.p_at_k
    assert expected.r_at_k == exact.r_at_k
    assert np.array_equal(expected.curve.precision, exact.curve.precision)


def test_expected_metrics_constant_posteriors():
    q = np.full(6, 0.37)

    class FakeRanking:
        def __len__(self):
            return 6

    table = PosteriorTable(q=q, vetted=np.zeros(6, dtype=bool))
    report = expected_metrics(table, FakeRanking(), [1, 2, 6])
    assert all(v == pytest.approx(0.37) for v in report.p_at_k.values())
    assert report.source == "expected"


def test_expected_metrics_length_mismatch_rejected():
    class FakeRanking:
        def __len__(self):
            return 4

    table = PosteriorTable(q=np.ones(3), vetted=np.zeros(3, dtype=bool))
    with pytest.raises(ValueError, match="does not match"):
        expected_metrics(table, FakeRanking(), [1])


def test_monte_carlo_linearity_of_expected_precision():
    rng = np.random.default_rng(11)
    for _ in range(10):
        n = int(rng.integers(3, 15))
        q = rng.uniform(0.05, 0.95, size=n)
        k = int(rng.integers(1, n + 1))
        samples = rng.random((800, n)) < q
        mc = samples[:, :k].mean(axis=1)
        se = mc.std(ddof=1) / np.sqrt(len(mc))
        assert abs(precision_at_k(q, k) - mc.mean()) <= 3 * se + 1e-12


def test_curve_distance_identical_is_zero_and_symmetric():
    curve = pr_curve(np.array([1.0, 0.0, 1.0, 0.4]))
    assert curve_distance(curve, curve) == 0.0
    other = pr_curve(np.array([0.5, 0.5, 0.9, 0.1]))
    assert curve_distance(curve, other) == pytest.approx(curve_distance(other, curve))


def test_curve_distance_constant_gap():
    recall = np.linspace(0.1, 1.0, 10)
    a = PrCurve(recall=recall, precision=np.full(10, 0.8))
    b = PrCurve(recall=recall, precision=np.full(10, 0.7))
    assert curve_distance(a, b) == pytest.approx(np.sqrt(20 * 0.01))


def test_curve_distance_disjoint_ranges_rejected():
    a = PrCurve(recall=np.array([0.1, 0.2]), precision=np.array([1.0, 1.0]))
    b = PrCurve(recall=np.array([0.8, 0.9]), precision=np.array([1.0, 1.0]))
    with pytest.raises(ValueError, match="disjoint"):
        curve_distance(a, b)


def test_pr_curve_rejects_decreasing_recall():
    with pytest.raises(ValueError, match="non-decreasing"):
        PrCurve(recall=np.array([0.5, 0.4]), precision=np.array([1.0, 1.0]))
