"""Inequality and popularity measurements over logs and rating matrices."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import AllZero, DegenerateRegression
from .recommenders import recommendable_items
from .simulator import SimulationLog
from .types import GaugeSet, RatingMatrix

FULL = "full"
RECOMMENDED_ONLY = "recommended-only"


def gini(counts) -> float:
    """Gini coefficient of non-negative counts via the sorted rank form.

    Equal to ``sum_i sum_j |x_i - x_j| / (2 n sum x)``.
    """
    x = np.sort(np.asarray(counts, dtype=np.float64))
    if x.size == 0 or x.sum() <= 0:
        raise AllZero("gini needs at least one positive count")
    if np.any(x < 0):
        raise ValueError("gini is undefined for negative counts")
    n = x.size
    ranks = 2.0 * np.arange(1, n + 1) - n - 1
    return float(max(np.dot(ranks, x) / (n * x.sum()), 0.0))


@dataclass
class GiniSeries:
    checkpoints: list[tuple[int, float]]

    @property
    def final(self) -> float:
        return self.checkpoints[-1][1]

    @property
    def steps(self) -> list[int]:
        return [s for s, _ in self.checkpoints]

    @property
    def values(self) -> list[float]:
        return [g for _, g in self.checkpoints]

    def late_slope(self, fraction: float = 0.5) -> float:
        """OLS slope of gini against step over the last ``fraction`` of checkpoints."""
        k = max(2, int(round(len(self.checkpoints) * fraction)))
        pts = np.array(self.checkpoints[-k:], dtype=np.float64)
        if len(pts) < 2:
            return 0.0
        return float(np.polyfit(pts[:, 0], pts[:, 1], 1)[0])

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "gini"])
            for step, g in self.checkpoints:
                writer.writerow([step, repr(g)])

    @classmethod
    def from_csv(cls, path) -> "GiniSeries":
        with Path(path).open(newline="") as fh:
            return cls([(int(r["step"]), float(r["gini"])) for r in csv.DictReader(fh)])


def gini_series(log: SimulationLog, catalog, gauge: GaugeSet, interval: int = 100,
                support: str = FULL) -> GiniSeries:
    """Gini of cumulative recommendation counts every ``interval`` steps and at the end.

    Entries without an item (recommender failures) are skipped.  With
    ``support="full"`` every non-gauge item is counted, including never
    recommended ones; ``"recommended-only"`` restricts to items seen so far.
    """
    if len(log) == 0:
        raise ValueError("empty log")
    if support not in (FULL, RECOMMENDED_ONLY):
        raise ValueError(f"unknown gini support {support!r}")
    items = recommendable_items(catalog, gauge)
    index = {int(j): i for i, j in enumerate(items)}
    counts = np.zeros(items.size)
    checkpoints = []
    n = len(log)
    for step, entry in enumerate(log.entries, start=1):
        if entry.item_id is not None and entry.item_id in index:
            counts[index[entry.item_id]] += 1
        if step % interval == 0 or step == n:
            if counts.sum() == 0:
                continue
            used = counts if support == FULL else counts[counts > 0]
            checkpoints.append((step, gini(used)))
    return GiniSeries(checkpoints)


@dataclass
class PopularityHistogram:
    item_ids: np.ndarray
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def ranked(self) -> list[tuple[int, int, int]]:
        """``(item_id, count, rank)`` rows, most frequent first, ties by item id."""
        order = np.lexsort((self.item_ids, -self.counts))
        return [(int(self.item_ids[i]), int(self.counts[i]), r) for r, i in enumerate(order, start=1)]

    def __getitem__(self, item_id: int) -> int:
        return int(self.counts[np.nonzero(self.item_ids == item_id)[0][0]])

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["item_id", "count", "rank"])
            writer.writerows(self.ranked())

    @classmethod
    def from_csv(cls, path) -> "PopularityHistogram":
        with Path(path).open(newline="") as fh:
            rows = [(int(r["item_id"]), int(r["count"])) for r in csv.DictReader(fh)]
        rows.sort()
        return cls(np.array([r[0] for r in rows]), np.array([r[1] for r in rows]))


def popularity_histogram(source, top_k_per_user: Optional[int] = 5,
                         item_ids: Optional[Sequence[int]] = None) -> PopularityHistogram:
    """Count recommendations per item, or each user's top-k rated items.

    For a :class:`SimulationLog`, ``item_ids`` fixes the catalog (defaults to
    the items that appear).  For a :class:`RatingMatrix`, each user
    contributes their ``top_k_per_user`` highest-rated items, ties broken by
    ascending item id.
    """
    if isinstance(source, RatingMatrix):
        if source.n_users == 0:
            raise ValueError("empty matrix")
        k = 5 if top_k_per_user is None else top_k_per_user
        counts = np.zeros(source.n_items, dtype=np.int64)
        scores = np.where(source.mask, source.values, -np.inf)
        for row, present in zip(scores, source.mask):
            order = np.lexsort((source.item_ids, -row))[: min(k, int(present.sum()))]
            counts[order] += 1
        return PopularityHistogram(source.item_ids.copy(), counts)
    if len(source) == 0:
        raise ValueError("empty log")
    seen = [e.item_id for e in source.entries if e.item_id is not None]
    ids = np.array(sorted(set(seen)) if item_ids is None else sorted(item_ids), dtype=np.int64)
    index = {int(j): i for i, j in enumerate(ids)}
    counts = np.zeros(ids.size, dtype=np.int64)
    for j in seen:
        counts[index[j]] += 1
    return PopularityHistogram(ids, counts)


@dataclass
class Regression:
    slope: float
    intercept: float
    n_items: int
    standardized: float

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.__dict__, indent=2, sort_keys=True) + "\n")


def count_mean_regression(matrix: RatingMatrix) -> Regression:
    """OLS of item mean rating on item rating count.

    ``standardized`` is the slope with both variables scaled to unit standard
    deviation, which for one regressor is the correlation coefficient.
    """
    counts = matrix.mask.sum(axis=0).astype(np.float64)
    rated = counts > 0
    x = counts[rated]
    y = matrix.item_means()[rated]
    if x.size < 2:
        raise DegenerateRegression("need at least two rated items")
    dx = x - x.mean()
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise DegenerateRegression("every item has the same rating count")
    dy = y - y.mean()
    slope = float(dx @ dy) / sxx
    intercept = float(y.mean() - slope * x.mean())
    syy = float(dy @ dy)
    beta = slope * np.sqrt(sxx / syy) if syy > 0 else 0.0
    return Regression(slope, intercept, int(x.size), float(beta))
