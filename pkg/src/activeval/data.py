"""Data model for scored entity-pair predictions and the flattened ranking.

A prediction dataset holds, for every entity pair, one confidence score and
one noisy (automatically derived) label per relation, plus optional
ground-truth labels when they are known (synthetic data, fully relabeled
subsets).  All downstream estimation works on the flattened ranking: the
N x p (pair, relation) cells sorted by score descending.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping

import numpy as np

SCORE_CLAMP_EPS = 1e-6

NOISY = "noisy"
ORACLE = "oracle"


@dataclass(frozen=True)
class EntityPair:
    """One entity pair with per-relation scores and labels.

    Scores must lie strictly inside (0, 1).  A pair may be positive for
    more than one relation.  ``sentences`` is display-only context for
    annotators; nothing downstream reads it.
    """

    pair_id: str
    head: str
    tail: str
    scores: Mapping[str, float]
    noisy_labels: Mapping[str, int]
    oracle_labels: Mapping[str, int] | None = None
    sentences: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "scores", dict(self.scores))
        object.__setattr__(self, "noisy_labels", dict(self.noisy_labels))
        if self.oracle_labels is not None:
            object.__setattr__(self, "oracle_labels", dict(self.oracle_labels))
        if self.sentences is not None:
            object.__setattr__(self, "sentences", tuple(self.sentences))


@dataclass(frozen=True)
class PredictionDataset:
    """Immutable collection of entity pairs scored against a fixed relation set.

    ``relations`` lists the positive relations only; the non-relation (NA)
    class is never scored, so "negative pair" means an all-zero label vector.
    """

    pairs: tuple[EntityPair, ...]
    relations: tuple[str, ...]
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "pairs", tuple(self.pairs))
        object.__setattr__(self, "relations", tuple(self.relations))
        self._validate()
        object.__setattr__(
            self, "_index", {p.pair_id: i for i, p in enumerate(self.pairs)}
        )

    def _validate(self) -> None:
        if len(set(self.relations)) != len(self.relations):
            raise ValueError("duplicate relation identifiers")
        seen: set[str] = set()
        for pair in self.pairs:
            if pair.pair_id in seen:
                raise ValueError(f"duplicate pair_id {pair.pair_id!r}")
            seen.add(pair.pair_id)
            for rel in self.relations:
                if rel not in pair.scores:
                    raise ValueError(
                        f"pair {pair.pair_id!r} is missing a score for relation {rel!r}"
                    )
                if rel not in pair.noisy_labels:
                    raise ValueError(
                        f"pair {pair.pair_id!r} is missing a noisy label for relation {rel!r}"
                    )
                s = pair.scores[rel]
                if not np.isfinite(s) or not 0.0 < s < 1.0:
                    raise ValueError(
                        f"pair {pair.pair_id!r} has score {s!r} for relation {rel!r};"
                        " scores must lie strictly inside (0, 1)"
                    )
                if pair.noisy_labels[rel] not in (0, 1):
                    raise ValueError(
                        f"pair {pair.pair_id!r} has a non-binary noisy label for {rel!r}"
                    )
            if pair.oracle_labels is not None:
                for rel in self.relations:
                    if rel not in pair.oracle_labels:
                        raise ValueError(
                            f"pair {pair.pair_id!r} has oracle labels for some relations"
                            f" but not for {rel!r}"
                        )
                    if pair.oracle_labels[rel] not in (0, 1):
                        raise ValueError(
                            f"pair {pair.pair_id!r} has a non-binary oracle label for {rel!r}"
                        )

    @property
    def n_pairs(self) -> int:
        return len(self.pairs)

    @property
    def n_relations(self) -> int:
        return len(self.relations)

    @property
    def total_cells(self) -> int:
        """Size of the flattened ranking: n_pairs * n_relations."""
        return self.n_pairs * self.n_relations

    @property
    def pair_ids(self) -> tuple[str, ...]:
        return tuple(p.pair_id for p in self.pairs)

    def pair(self, pair_id: str) -> EntityPair:
        try:
            return self.pairs[self._index[pair_id]]
        except KeyError:
            raise KeyError(f"unknown pair_id {pair_id!r}") from None

    def __contains__(self, pair_id: str) -> bool:
        return pair_id in self._index

    def has_oracle(self) -> bool:
        """True when every pair carries ground-truth labels."""
        return all(p.oracle_labels is not None for p in self.pairs)


@dataclass(frozen=True, slots=True)
class RankedItem:
    """One cell of the flattened ranking. ``rank`` is 1-based."""

    rank: int
    pair_id: str
    relation: str
    score: float


@dataclass(frozen=True)
class RankedList:
    """All N x p cells sorted by score descending.

    The (pair_id, relation) <-> index mapping is a bijection; ties are
    broken by (pair_id, relation index) ascending so ranking is
    deterministic.
    """

    items: tuple[RankedItem, ...]
    _cell_index: dict[tuple[str, str], int] = field(init=False, repr=False, compare=False)
    _pair_index: dict[str, tuple[int, ...]] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", tuple(self.items))
        cell_index: dict[tuple[str, str], int] = {}
        pair_index: dict[str, list[int]] = {}
        for i, item in enumerate(self.items):
            key = (item.pair_id, item.relation)
            if key in cell_index:
                raise ValueError(f"duplicate cell {key!r} in ranking")
            cell_index[key] = i
            pair_index.setdefault(item.pair_id, []).append(i)
        object.__setattr__(self, "_cell_index", cell_index)
        object.__setattr__(
            self, "_pair_index", {k: tuple(v) for k, v in pair_index.items()}
        )

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self) -> Iterator[RankedItem]:
        return iter(self.items)

    def __getitem__(self, i: int) -> RankedItem:
        return self.items[i]

    def index_of(self, pair_id: str, relation: str) -> int:
        """0-based position of one cell in the ranking."""
        return self._cell_index[(pair_id, relation)]

    def indices_of_pair(self, pair_id: str) -> tuple[int, ...]:
        """0-based positions of every cell belonging to one pair."""
        try:
            return self._pair_index[pair_id]
        except KeyError:
            raise KeyError(f"unknown pair_id {pair_id!r}") from None

    @property
    def scores(self) -> np.ndarray:
        return np.array([item.score for item in self.items], dtype=np.float64)


def flatten_and_rank(dataset: PredictionDataset) -> RankedList:
    """Flatten all (pair, relation) cells and sort by score descending.

    Ties break by (pair_id ascending, relation index ascending); two calls
    on equal inputs produce identical sequences.
    """
    rel_order = {rel: j for j, rel in enumerate(dataset.relations)}
    cells = [
        (pair.pair_id, rel, float(pair.scores[rel]))
        for pair in dataset.pairs
        for rel in dataset.relations
    ]
    cells.sort(key=lambda c: (-c[2], c[0], rel_order[c[1]]))
    items = [
        RankedItem(rank=i + 1, pair_id=pid, relation=rel, score=score)
        for i, (pid, rel, score) in enumerate(cells)
    ]
    return RankedList(items=tuple(items))


def label_vector(
    dataset: PredictionDataset, ranking: RankedList, source: str
) -> np.ndarray:
    """Project per-pair labels onto the ranking.

    Entry ``r`` is the chosen label of the cell at rank ``r + 1``.
    ``source`` is ``"noisy"`` or ``"oracle"``; requesting oracle labels on a
    dataset that lacks them raises, naming the first missing pair.
    """
    if source not in (NOISY, ORACLE):
        raise ValueError(f"unknown label source {source!r}")
    if source == ORACLE:
        for pair in dataset.pairs:
            if pair.oracle_labels is None:
                raise ValueError(
                    f"oracle labels requested but pair {pair.pair_id!r} has none"
                )
    out = np.empty(len(ranking), dtype=np.int64)
    for i, item in enumerate(ranking):
        pair = dataset.pair(item.pair_id)
        labels = pair.noisy_labels if source == NOISY else pair.oracle_labels
        assert labels is not None
        out[i] = labels[item.relation]
    return out


def clamp_score(s: float, eps: float = SCORE_CLAMP_EPS) -> float:
    """Clamp a score into [eps, 1 - eps]; used only under an explicit flag."""
    return min(max(float(s), eps), 1.0 - eps)
