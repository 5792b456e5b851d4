"""Loading Jester-format files, user filtering, gauge derivation and splitting."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import (
    CountMismatch,
    EmptyDataset,
    InsufficientGaugeCandidates,
    NotEnoughUsers,
    ParseError,
    RaggedGrid,
)
from .types import GAUGE_SIZE, MISSING_SENTINEL, GaugeSet, RatingMatrix, validate_matrix


@dataclass(frozen=True)
class DatasetConfig:
    path: Optional[str] = None
    min_rated_fraction: float = 0.5
    train_size: int = 500
    test_size: int = 4000
    seed: int = 0


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def load_jester_csv(path) -> RatingMatrix:
    """Read a Jester table: one user per row, rated count first, 99 = missing.

    Comma or tab delimiters are detected from the first non-empty line, and a
    header row is skipped when its first field is not numeric.  Users get
    0-based ids from their data-row order.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise EmptyDataset(f"{path}: no rows")
    delimiter = "\t" if lines[0].count("\t") > lines[0].count(",") else ","
    reader = csv.reader(lines, delimiter=delimiter)
    rows = []
    declared = []
    start = 1
    for lineno, fields in enumerate(reader, start=1):
        fields = [f.strip() for f in fields]
        if lineno == 1 and not _is_number(fields[0]):
            start = 2
            continue
        parsed = []
        for col, text in enumerate(fields, start=1):
            try:
                parsed.append(float(text))
            except ValueError:
                raise ParseError(f"{path}: line {lineno}, column {col}: cannot parse {text!r}") from None
        declared.append(parsed[0])
        rows.append(parsed[1:])
    if not rows:
        raise EmptyDataset(f"{path}: no data rows")
    try:
        matrix = validate_matrix(rows)
    except RaggedGrid as exc:
        raise RaggedGrid(f"{path}: {exc}") from None
    bad = np.nonzero(np.asarray(declared) != matrix.rated_counts)[0]
    if bad.size:
        i = int(bad[0])
        raise CountMismatch(
            f"{path}: line {i + start}: declared rated count {declared[i]:g} "
            f"but {int(matrix.rated_counts[i])} ratings present"
        )
    return matrix


def save_jester_csv(matrix: RatingMatrix, path) -> None:
    """Write ``matrix`` in the layout :func:`load_jester_csv` reads.

    Floats are written with ``repr`` so values round-trip exactly.
    """
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        for row, count in zip(matrix.values, matrix.rated_counts):
            cells = [repr(MISSING_SENTINEL) if math.isnan(v) else repr(float(v)) for v in row]
            writer.writerow([int(count), *cells])


def filter_users(matrix: RatingMatrix, min_rated_fraction: float) -> RatingMatrix:
    """Keep users who rated at least ``ceil(fraction * items)`` items."""
    if not 0.0 <= min_rated_fraction <= 1.0:
        raise ValueError("min_rated_fraction must lie in [0, 1]")
    threshold = math.ceil(min_rated_fraction * matrix.n_items)
    return matrix.take_rows(np.nonzero(matrix.rated_counts >= threshold)[0])


def derive_gauge_set(matrix: RatingMatrix, size: int = GAUGE_SIZE) -> GaugeSet:
    """Pick the ``size`` lowest-id items that every user in ``matrix`` rated."""
    full = matrix.item_ids[matrix.mask.all(axis=0)] if matrix.n_users else matrix.item_ids
    full = np.sort(full)
    if len(full) < size:
        raise InsufficientGaugeCandidates(len(full), size)
    return GaugeSet(tuple(int(j) for j in full[:size]))


def gauge_from_ids(matrix: RatingMatrix, item_ids: Sequence[int]) -> GaugeSet:
    """Validate a user-pinned gauge set against ``matrix`` coverage."""
    gauge = GaugeSet(tuple(item_ids))
    try:
        cols = matrix.item_columns(gauge.item_ids)
    except KeyError as exc:
        raise InsufficientGaugeCandidates(0, len(gauge)) from exc
    covered = int(matrix.mask[:, cols].all(axis=0).sum())
    if covered < len(gauge):
        raise InsufficientGaugeCandidates(covered, len(gauge))
    return gauge


def split_users(
    matrix: RatingMatrix, train_size: int, test_size: int, rng: np.random.Generator
) -> tuple[RatingMatrix, RatingMatrix]:
    """Draw disjoint random train and test user sets.

    The test rows come back in the shuffled order the simulator serves them.
    """
    if train_size < 0 or test_size < 0:
        raise ValueError("split sizes must be non-negative")
    if train_size + test_size > matrix.n_users:
        raise NotEnoughUsers(
            f"need {train_size} + {test_size} users, only {matrix.n_users} available"
        )
    perm = rng.permutation(matrix.n_users)
    train = np.sort(perm[:train_size])
    test = perm[train_size : train_size + test_size]
    return matrix.take_rows(train), matrix.take_rows(test)
