"""Replays arriving test users against a recommender.

Static mode fits once on the training snapshot.  Dynamic mode feeds every
served user's gauge ratings, plus the rating of the item they were given, back
into the snapshot and refits after each ``retrain_interval`` users.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError, RecIneqError
from .types import GaugeSet, RatingMatrix, Recommender, UserProfile

log = logging.getLogger(__name__)

RATED = "rated"
NO_RATING = "no_rating"
LOG_COLUMNS = ("step", "user_id", "item_id", "outcome", "rating", "retrain_flag")


class Mode(str, Enum):
    STATIC = "static"
    DYNAMIC = "dynamic"


@dataclass(frozen=True)
class SimulationConfig:
    mode: Mode = Mode.STATIC
    retrain_interval: int = 100
    gini_interval: int = 100
    fallback_depth: int = 3

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.retrain_interval < 1:
            raise ConfigError("retrain_interval must be >= 1")
        if self.fallback_depth < 1:
            raise ConfigError("fallback_depth must be >= 1")
        if self.gini_interval < 1:
            raise ConfigError("gini_interval must be >= 1")


@dataclass
class LogEntry:
    step: int
    user_id: int
    item_id: Optional[int]
    rating: Optional[float] = None
    retrain: bool = False
    diagnostic: str = ""

    @property
    def outcome(self) -> str:
        return NO_RATING if self.rating is None else RATED


@dataclass
class SimulationLog:
    entries: list[LogEntry] = field(default_factory=list)
    final_train_users: Optional[int] = None

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def retrain_steps(self) -> list[int]:
        return [e.step for e in self.entries if e.retrain]

    @property
    def no_rating_count(self) -> int:
        return sum(e.rating is None for e in self.entries)

    def item_ids(self) -> list[Optional[int]]:
        return [e.item_id for e in self.entries]

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(LOG_COLUMNS)
            for e in self.entries:
                writer.writerow([
                    e.step,
                    e.user_id,
                    "" if e.item_id is None else e.item_id,
                    e.outcome,
                    "" if e.rating is None else repr(e.rating),
                    int(e.retrain),
                ])

    @classmethod
    def from_csv(cls, path) -> "SimulationLog":
        entries = []
        with Path(path).open(newline="") as fh:
            for row in csv.DictReader(fh):
                entries.append(LogEntry(
                    step=int(row["step"]),
                    user_id=int(row["user_id"]),
                    item_id=int(row["item_id"]) if row["item_id"] else None,
                    rating=float(row["rating"]) if row["rating"] else None,
                    retrain=row["retrain_flag"] == "1",
                ))
        return cls(entries)


def _serve(recommender, profile, truth_row, columns, depth, rng):
    """Return (item_id, rating or None, diagnostic) for one user."""
    try:
        ranking = recommender.recommend(profile, top_n=depth, rng=rng)
    except RecIneqError as exc:
        log.debug("user %s: %s", profile.user_id, exc)
        return None, None, f"{type(exc).__name__}: {exc}"
    if len(ranking) == 0:
        return None, None, "empty ranking"
    for item in ranking.item_ids[:depth]:
        value = truth_row[columns[int(item)]]
        if not math.isnan(value):
            return int(item), float(value), ""
    return ranking.top, None, ""


def _simulate(train, test, gauge, recommender, depth, retrain_interval, rng):
    columns = {int(j): i for i, j in enumerate(test.item_ids)}
    gcols = test.item_columns(gauge.item_ids)
    snapshot = train
    recommender.fit(snapshot, gauge)
    result = SimulationLog()
    pending_rows, pending_ids = [], []
    n = test.n_users
    for row in range(n):
        step = row + 1
        profile = UserProfile.from_matrix(test, row, gauge)
        item, rating, diag = _serve(recommender, profile, test.values[row], columns, depth, rng)
        entry = LogEntry(step, profile.user_id, item, rating, diagnostic=diag)
        result.entries.append(entry)
        if retrain_interval is None:
            continue
        new_row = np.full(test.n_items, np.nan)
        new_row[gcols] = test.values[row, gcols]
        if rating is not None:
            new_row[columns[item]] = rating
        pending_rows.append(new_row)
        pending_ids.append(profile.user_id)
        if step % retrain_interval == 0 and step < n:
            snapshot = snapshot.append_rows(np.array(pending_rows), pending_ids)
            pending_rows, pending_ids = [], []
            recommender.fit(snapshot, gauge)
            entry.retrain = True
    result.final_train_users = snapshot.n_users
    return result


def run_static(train: RatingMatrix, test: RatingMatrix, gauge: GaugeSet,
               recommender: Recommender, config: SimulationConfig = SimulationConfig(),
               rng: Optional[np.random.Generator] = None) -> SimulationLog:
    """Fit once on ``train`` and serve each test user their top item, no fallback."""
    return _simulate(train, test, gauge, recommender, 1, None, rng)


def run_dynamic(train: RatingMatrix, test: RatingMatrix, gauge: GaugeSet,
                recommender: Recommender, config: SimulationConfig = SimulationConfig(mode=Mode.DYNAMIC),
                rng: Optional[np.random.Generator] = None) -> SimulationLog:
    """Serve with fallback down the ranking and periodic refits on grown data.

    A refit happens after every ``retrain_interval`` served users as long as
    more users remain, so users beyond the last boundary never join the
    snapshot.
    """
    return _simulate(train, test, gauge, recommender, config.fallback_depth,
                     config.retrain_interval, rng)


def simulate(train, test, gauge, recommender, config: SimulationConfig, rng=None) -> SimulationLog:
    if config.mode is Mode.STATIC:
        return run_static(train, test, gauge, recommender, config, rng)
    return run_dynamic(train, test, gauge, recommender, config, rng)
