"""Domain types shared by every module.

Ratings live in a dense float matrix where missing cells are NaN.  The 99
sentinel of the Jester files never makes it past :func:`validate_matrix`, so
no arithmetic can pick it up by accident.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Optional, Protocol, Sequence

import numpy as np

from .errors import OutOfRangeRating, RaggedGrid

RATING_MIN = -10.0
RATING_MAX = 10.0
MISSING_SENTINEL = 99.0
GAUGE_SIZE = 10


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RatingMatrix:
    """Immutable users x items rating grid.

    ``values`` holds NaN for missing cells.  ``user_ids`` maps rows back to the
    original dataset rows and ``item_ids`` maps columns to item identifiers
    (1-based joke ids by default).
    """

    values: np.ndarray
    user_ids: np.ndarray = None
    item_ids: np.ndarray = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise RaggedGrid(f"rating matrix must be 2-D, got shape {values.shape}")
        present = values[~np.isnan(values)]
        if present.size and (
            not np.all(np.isfinite(present))
            or present.min() < RATING_MIN
            or present.max() > RATING_MAX
        ):
            bad = present[~((present >= RATING_MIN) & (present <= RATING_MAX))][0]
            raise OutOfRangeRating(f"rating {bad!r} outside [{RATING_MIN}, {RATING_MAX}]")
        n_users, n_items = values.shape
        user_ids = np.arange(n_users) if self.user_ids is None else self.user_ids
        item_ids = np.arange(1, n_items + 1) if self.item_ids is None else self.item_ids
        user_ids = np.asarray(user_ids, dtype=np.int64)
        item_ids = np.asarray(item_ids, dtype=np.int64)
        if user_ids.shape != (n_users,) or item_ids.shape != (n_items,):
            raise RaggedGrid("id arrays do not match matrix shape")
        if len(np.unique(item_ids)) != n_items:
            raise RaggedGrid("duplicate item ids")
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "user_ids", _frozen(user_ids))
        object.__setattr__(self, "item_ids", _frozen(item_ids))

    @property
    def n_users(self) -> int:
        return self.values.shape[0]

    @property
    def n_items(self) -> int:
        return self.values.shape[1]

    @cached_property
    def mask(self) -> np.ndarray:
        m = ~np.isnan(self.values)
        m.setflags(write=False)
        return m

    @cached_property
    def rated_counts(self) -> np.ndarray:
        c = self.mask.sum(axis=1)
        c.setflags(write=False)
        return c

    @cached_property
    def _user_index(self) -> dict[int, int]:
        return {int(u): i for i, u in enumerate(self.user_ids)}

    @cached_property
    def _item_index(self) -> dict[int, int]:
        return {int(j): i for i, j in enumerate(self.item_ids)}

    def user_row(self, user_id: int) -> int:
        return self._user_index[int(user_id)]

    def item_columns(self, item_ids: Sequence[int]) -> np.ndarray:
        return np.array([self._item_index[int(j)] for j in item_ids], dtype=np.int64)

    def has_user(self, user_id: int) -> bool:
        return int(user_id) in self._user_index

    def take_rows(self, rows: Sequence[int]) -> "RatingMatrix":
        rows = np.asarray(rows, dtype=np.int64)
        return RatingMatrix(self.values[rows], self.user_ids[rows], self.item_ids)

    def append_rows(self, values: np.ndarray, user_ids: Sequence[int]) -> "RatingMatrix":
        """Return a new snapshot with ``values`` stacked below the existing rows."""
        values = np.asarray(values, dtype=np.float64).reshape(-1, self.n_items)
        return RatingMatrix(
            np.vstack([self.values, values]),
            np.concatenate([self.user_ids, np.asarray(user_ids, dtype=np.int64)]),
            self.item_ids,
        )

    def item_means(self) -> np.ndarray:
        """Mean of present ratings per item; NaN for items nobody rated."""
        counts = self.mask.sum(axis=0)
        sums = np.where(self.mask, self.values, 0.0).sum(axis=0)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RatingMatrix):
            return NotImplemented
        return (
            self.values.shape == other.values.shape
            and np.array_equal(self.values, other.values, equal_nan=True)
            and np.array_equal(self.user_ids, other.user_ids)
            and np.array_equal(self.item_ids, other.item_ids)
        )

    __hash__ = None


def validate_matrix(raw, user_ids=None, item_ids=None) -> RatingMatrix:
    """Build a :class:`RatingMatrix` from a grid using 99 as the missing marker."""
    rows = list(raw)
    if rows:
        widths = {len(r) for r in rows}
        if len(widths) != 1:
            raise RaggedGrid(f"rows have differing lengths {sorted(widths)}")
        grid = np.array(rows, dtype=np.float64)
    else:
        grid = np.empty((0, 0))
    grid = np.where(grid == MISSING_SENTINEL, np.nan, grid)
    return RatingMatrix(grid, user_ids, item_ids)


@dataclass(frozen=True)
class GaugeSet:
    """Items every profiled user rates before receiving a recommendation."""

    item_ids: tuple

    def __post_init__(self):
        ids = tuple(sorted(int(j) for j in self.item_ids))
        if len(set(ids)) != len(ids):
            raise ValueError("gauge items must be distinct")
        object.__setattr__(self, "item_ids", ids)

    def __len__(self) -> int:
        return len(self.item_ids)

    def __contains__(self, item_id) -> bool:
        return int(item_id) in self.item_ids

    def __iter__(self):
        return iter(self.item_ids)


@dataclass(frozen=True)
class UserProfile:
    user_id: int
    gauge_ratings: Mapping[int, float]

    def vector(self, gauge: GaugeSet) -> np.ndarray:
        if set(self.gauge_ratings) != set(gauge.item_ids):
            raise ValueError("profile keys must equal the gauge set")
        return np.array([self.gauge_ratings[j] for j in gauge.item_ids], dtype=np.float64)

    @classmethod
    def from_matrix(cls, matrix: RatingMatrix, row: int, gauge: GaugeSet) -> "UserProfile":
        cols = matrix.item_columns(gauge.item_ids)
        vals = matrix.values[row, cols]
        if np.isnan(vals).any():
            raise ValueError(f"user {matrix.user_ids[row]} lacks gauge ratings")
        return cls(int(matrix.user_ids[row]), dict(zip(gauge.item_ids, vals.tolist())))


@dataclass(frozen=True, eq=False)
class RankedRecommendation:
    """Items ordered best first, with non-increasing scores."""

    item_ids: np.ndarray
    scores: np.ndarray = field(default=None)

    def __post_init__(self):
        items = np.asarray(self.item_ids, dtype=np.int64)
        scores = np.zeros(len(items)) if self.scores is None else np.asarray(self.scores, dtype=np.float64)
        if items.shape != scores.shape:
            raise ValueError("items and scores differ in length")
        if len(scores) > 1 and np.any(np.diff(scores) > 0):
            raise ValueError("scores must be non-increasing")
        object.__setattr__(self, "item_ids", _frozen(items))
        object.__setattr__(self, "scores", _frozen(scores))

    def __len__(self) -> int:
        return len(self.item_ids)

    @property
    def top(self) -> Optional[int]:
        return int(self.item_ids[0]) if len(self.item_ids) else None

    def head(self, n: Optional[int]) -> "RankedRecommendation":
        if n is None:
            return self
        return RankedRecommendation(self.item_ids[:n], self.scores[:n])


def rank_by_score(item_ids: np.ndarray, scores: np.ndarray, top_n: Optional[int] = None) -> RankedRecommendation:
    """Sort by descending score, breaking ties by ascending item id."""
    item_ids = np.asarray(item_ids, dtype=np.int64)
    scores = np.asarray(scores, dtype=np.float64)
    order = np.lexsort((item_ids, -scores))
    return RankedRecommendation(item_ids[order], scores[order]).head(top_n)


class Recommender(Protocol):
    """Common contract: fit on a snapshot, then rank items for a profile.

    Stochastic recommenders draw only from the ``rng`` they are handed.
    """

    name: str

    def fit(self, snapshot: RatingMatrix, gauge: GaugeSet) -> "Recommender": ...

    def recommend(
        self,
        profile: UserProfile,
        top_n: Optional[int] = None,
        rng: Optional[np.random.Generator] = None,
    ) -> RankedRecommendation: ...
