"""Two-part posterior model over latent true labels.

For every (pair, relation) cell the estimator combines a noise-conditional
table p(y|z), fitted by counting vetted examples with Laplace smoothing,
with a per-relation logistic calibrator p(z|s) on logit-transformed scores.
Bayes' rule then gives p(z=1 | y, s) for unvetted cells; vetted cells are
point masses at their observed labels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .data import PredictionDataset, RankedList

LAPLACE_ALPHA = 1.0
L2_STRENGTH = 1.0
MAX_ITERATIONS = 500
GRADIENT_TOL = 1e-8
MIN_FIT_EXAMPLES = 4

VettedLabels = Mapping[str, Mapping[str, int]]


def sigmoid(x: np.ndarray | float) -> np.ndarray | float:
    """Overflow-safe logistic function."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    if out.ndim == 0:
        return float(out)
    return out


def logit(p: np.ndarray | float) -> np.ndarray | float:
    p = np.asarray(p, dtype=np.float64)
    out = np.log(p) - np.log1p(-p)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class NoiseRates:
    """Noise-conditional label rates for one relation, with the fit counts."""

    p_y1_given_z1: float
    p_y1_given_z0: float
    n_z1: int
    n_z0: int

    def p_y_given_z(self, y: int, z: int) -> float:
        p1 = self.p_y1_given_z1 if z == 1 else self.p_y1_given_z0
        return p1 if y == 1 else 1.0 - p1


@dataclass(frozen=True)
class NoiseTable:
    """Per-relation p(y|z) rates fitted from vetted examples."""

    rates: dict[str, NoiseRates]
    alpha: float = LAPLACE_ALPHA

    def p_y_given_z(self, relation: str, y: int, z: int) -> float:
        return self.rates[relation].p_y_given_z(y, z)

    def summary(self) -> dict[str, tuple[float, float]]:
        """relation -> (p(y=1|z=1), p(y=1|z=0)); used in iteration records."""
        return {
            rel: (r.p_y1_given_z1, r.p_y1_given_z0) for rel, r in sorted(self.rates.items())
        }


@dataclass(frozen=True)
class ScoreCalibrator:
    """Logistic calibrator p(z=1|s) = sigmoid(w * logit(s) + b) for one relation.

    When fitting is degenerate (single-class vetted labels or fewer than
    ``MIN_FIT_EXAMPLES`` examples) the calibrator is the smoothed class
    frequency ``fallback_constant`` instead of a regression.
    """

    relation: str
    weight: float
    bias: float
    fallback_constant: float | None = None
    n_examples: int = 0
    grad_norm: float = float("nan")
    iterations: int = 0

    def predict(self, scores: np.ndarray | float) -> np.ndarray | float:
        if self.fallback_constant is not None:
            if np.ndim(scores) == 0:
                return float(self.fallback_constant)
            return np.full(np.shape(scores), self.fallback_constant, dtype=np.float64)
        return sigmoid(self.weight * logit(scores) + self.bias)


@dataclass(frozen=True)
class PosteriorModel:
    """Everything needed to score p(z=1 | y, s) for any cell."""

    noise: NoiseTable
    calibrators: dict[str, ScoreCalibrator]


@dataclass(frozen=True)
class PosteriorTable:
    """p(z=1) per ranked cell; vetted cells are exact 0/1 point masses."""

    q: np.ndarray
    vetted: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "q", np.asarray(self.q, dtype=np.float64))
        object.__setattr__(self, "vetted", np.asarray(self.vetted, dtype=bool))
        if self.q.shape != self.vetted.shape:
            raise ValueError("q and vetted mask must have equal shape")

    def __len__(self) -> int:
        return len(self.q)


def _vetted_cells(
    dataset: PredictionDataset, vetted: VettedLabels, relation: str
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(scores, noisy y, vetted z) arrays for one relation, pair_id order."""
    scores, ys, zs = [], [], []
    for pair_id in sorted(vetted):
        pair = dataset.pair(pair_id)
        scores.append(pair.scores[relation])
        ys.append(pair.noisy_labels[relation])
        zs.append(vetted[pair_id][relation])
    return (
        np.asarray(scores, dtype=np.float64),
        np.asarray(ys, dtype=np.int64),
        np.asarray(zs, dtype=np.int64),
    )


def fit_noise_table(
    dataset: PredictionDataset,
    vetted: VettedLabels,
    alpha: float = LAPLACE_ALPHA,
    pooled: bool = False,
) -> NoiseTable:
    """Fit p(y=1|z) per relation by counting vetted examples.

    Laplace smoothing: p(y=1|z=v) = (count(y=1, z=v) + alpha) / (count(z=v)
    + 2*alpha), so a class with zero examples falls back to 0.5.  With
    ``pooled=True`` the counts are aggregated over all relations and every
    relation shares the same rates.
    """
    per_relation: dict[str, tuple[int, int, int, int]] = {}
    for rel in dataset.relations:
        _, ys, zs = _vetted_cells(dataset, vetted, rel)
        n_z1 = int(np.sum(zs == 1))
        n_z0 = int(np.sum(zs == 0))
        n_y1_z1 = int(np.sum((zs == 1) & (ys == 1)))
        n_y1_z0 = int(np.sum((zs == 0) & (ys == 1)))
        per_relation[rel] = (n_z1, n_z0, n_y1_z1, n_y1_z0)

    if pooled:
        tot = tuple(sum(c[i] for c in per_relation.values()) for i in range(4))
        per_relation = {rel: tot for rel in dataset.relations}  # type: ignore[misc]

    def smoothed(num: int, den: int) -> float:
        if den + 2 * alpha == 0:
            return 0.5
        return (num + alpha) / (den + 2 * alpha)

    rates = {
        rel: NoiseRates(
            p_y1_given_z1=smoothed(n_y1_z1, n_z1),
            p_y1_given_z0=smoothed(n_y1_z0, n_z0),
            n_z1=n_z1,
            n_z0=n_z0,
        )
        for rel, (n_z1, n_z0, n_y1_z1, n_y1_z0) in per_relation.items()
    }
    return NoiseTable(rates=rates, alpha=alpha)


def penalized_loglik_and_grad(
    w: float, b: float, x: np.ndarray, z: np.ndarray, l2: float = L2_STRENGTH
) -> tuple[float, float, float]:
    """L2-penalized Bernoulli log-likelihood and its analytic gradient.

    The penalty applies to the weight only, never the bias.  Returns
    (objective, d/dw, d/db).
    """
    eta = w * x + b
    # log sigma(eta) = -log(1 + exp(-eta)), computed stably for both signs
    ll = float(np.sum(z * eta - np.logaddexp(0.0, eta))) - 0.5 * l2 * w * w
    resid = z - sigmoid(eta)
    gw = float(np.dot(resid, x)) - l2 * w
    gb = float(np.sum(resid))
    return ll, gw, gb


def fit_calibrator(
    dataset: PredictionDataset,
    vetted: VettedLabels,
    relation: str,
    l2: float = L2_STRENGTH,
    max_iterations: int = MAX_ITERATIONS,
    tol: float = GRADIENT_TOL,
    min_examples: int = MIN_FIT_EXAMPLES,
    alpha: float = LAPLACE_ALPHA,
) -> ScoreCalibrator:
    """Fit the per-relation logistic calibrator on vetted (score, z) examples.

    Deterministic full-batch gradient ascent with Armijo backtracking,
    capped at ``max_iterations`` or gradient norm below ``tol``.  Degenerate
    inputs (single-class z, fewer than ``min_examples`` examples) yield a
    constant calibrator at the smoothed z frequency.
    """
    scores, _, zs = _vetted_cells(dataset, vetted, relation)
    if not np.all(np.isfinite(scores)):
        raise ValueError(f"non-finite score among vetted examples for {relation!r}")
    n = len(zs)
    n_pos = int(np.sum(zs == 1))
    if n < min_examples or n_pos == 0 or n_pos == n:
        fallback = (n_pos + alpha) / (n + 2 * alpha)
        return ScoreCalibrator(
            relation=relation, weight=0.0, bias=0.0,
            fallback_constant=float(fallback), n_examples=n,
        )

    x = np.asarray(logit(scores), dtype=np.float64)
    z = zs.astype(np.float64)
    w, b = 0.0, 0.0
    ll, gw, gb = penalized_loglik_and_grad(w, b, x, z, l2)
    step = 1.0
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        gnorm2 = gw * gw + gb * gb
        if np.sqrt(gnorm2) < tol:
            iterations -= 1
            break
        # Armijo backtracking along the gradient direction
        accepted = False
        for _ in range(60):
            w_new = w + step * gw
            b_new = b + step * gb
            ll_new, gw_new, gb_new = penalized_loglik_and_grad(w_new, b_new, x, z, l2)
            if ll_new >= ll + 1e-4 * step * gnorm2:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        w, b, ll, gw, gb = w_new, b_new, ll_new, gw_new, gb_new
        step = min(step * 2.0, 1.0e6)
    grad_norm = float(np.hypot(gw, gb))
    return ScoreCalibrator(
        relation=relation, weight=float(w), bias=float(b),
        n_examples=n, grad_norm=grad_norm, iterations=iterations,
    )


def fit_posterior_model(
    dataset: PredictionDataset,
    vetted: VettedLabels,
    alpha: float = LAPLACE_ALPHA,
    l2: float = L2_STRENGTH,
    pooled_noise: bool = False,
) -> PosteriorModel:
    """Fit the noise table and every per-relation calibrator."""
    for pair_id in vetted:
        if pair_id not in dataset:
            raise ValueError(f"vetted labels reference unknown pair {pair_id!r}")
    noise = fit_noise_table(dataset, vetted, alpha=alpha, pooled=pooled_noise)
    calibrators = {
        rel: fit_calibrator(dataset, vetted, rel, l2=l2, alpha=alpha)
        for rel in dataset.relations
    }
    return PosteriorModel(noise=noise, calibrators=calibrators)


def posterior_given(
    y: np.ndarray, s: np.ndarray, relation: str, model: PosteriorModel
) -> np.ndarray:
    """Vectorized p(z=1 | y, s) for cells of one relation."""
    y = np.asarray(y, dtype=np.int64)
    s = np.asarray(s, dtype=np.float64)
    prior = np.asarray(model.calibrators[relation].predict(s), dtype=np.float64)
    rates = model.noise.rates[relation]
    like_z1 = np.where(y == 1, rates.p_y1_given_z1, 1.0 - rates.p_y1_given_z1)
    like_z0 = np.where(y == 1, rates.p_y1_given_z0, 1.0 - rates.p_y1_given_z0)
    num = like_z1 * prior
    return num / (num + like_z0 * (1.0 - prior))


def posterior_cell(y: int, s: float, relation: str, model: PosteriorModel) -> float:
    """p(z=1 | y, s) for a single cell via the two-term Bayes quotient."""
    if not np.isfinite(s):
        raise ValueError(f"non-finite score {s!r}")
    if y not in (0, 1):
        raise ValueError(f"noisy label must be 0 or 1, got {y!r}")
    return float(posterior_given(np.array([y]), np.array([s]), relation, model)[0])


def estimate_all(
    dataset: PredictionDataset,
    ranking: RankedList,
    vetted: VettedLabels,
    model: PosteriorModel,
) -> PosteriorTable:
    """Posterior for every ranked cell.

    Vetted cells become point masses at their observed labels; unvetted
    cells get the Bayes posterior from their noisy label and score.
    """
    for pair_id in vetted:
        if pair_id not in dataset:
            raise ValueError(f"vetted labels reference unknown pair {pair_id!r}")
    p = len(ranking)
    q = np.empty(p, dtype=np.float64)
    vetted_mask = np.zeros(p, dtype=bool)

    by_relation: dict[str, list[int]] = {rel: [] for rel in dataset.relations}
    for i, item in enumerate(ranking):
        if item.pair_id in vetted:
            q[i] = float(vetted[item.pair_id][item.relation])
            vetted_mask[i] = True
        else:
            by_relation[item.relation].append(i)

    for rel, idx in by_relation.items():
        if not idx:
            continue
        idx_arr = np.asarray(idx, dtype=np.int64)
        ys = np.empty(len(idx), dtype=np.int64)
        ss = np.empty(len(idx), dtype=np.float64)
        for j, i in enumerate(idx):
            item = ranking[i]
            ys[j] = dataset.pair(item.pair_id).noisy_labels[rel]
            ss[j] = item.score
        q[idx_arr] = posterior_given(ys, ss, rel, model)
    return PosteriorTable(q=q, vetted=vetted_mask)
