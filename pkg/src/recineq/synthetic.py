"""Synthetic Jester-like rating matrices for tests and CI."""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .types import RATING_MAX, RATING_MIN, RatingMatrix

RATING_MODELS = ("uniform", "long-tail")


def generate_synthetic(
    users: int,
    items: int,
    gauge_size: int = 10,
    rating_model: str = "long-tail",
    seed: int = 0,
    density: float = 0.75,
    n_factors: int = 3,
) -> RatingMatrix:
    """Random rating matrix whose first ``gauge_size`` items every user rated.

    Outside the gauge block each cell is observed independently with
    probability ``density``.  ``uniform`` draws ratings uniformly from
    [-10, 10].  ``long-tail`` gives items a steeply decaying mean (assigned to
    item ids in random order) plus user bias, a few latent taste factors and
    noise, so a handful of items dominate users' favourites.
    """
    if users < 1 or items < 1:
        raise ConfigError("users and items must be positive")
    if not 0 <= gauge_size <= items:
        raise ConfigError("gauge_size must lie in [0, items]")
    if not 0.0 <= density <= 1.0:
        raise ConfigError("density must lie in [0, 1]")
    if rating_model not in RATING_MODELS:
        raise ConfigError(f"rating_model must be one of {RATING_MODELS}")
    rng = np.random.default_rng(seed)
    if rating_model == "uniform":
        ratings = rng.uniform(RATING_MIN, RATING_MAX, size=(users, items))
    else:
        rank = rng.permutation(items) + 1
        item_mean = -6.0 + 14.0 * rank ** -0.8
        user_bias = rng.normal(0.0, 1.5, size=(users, 1))
        taste = rng.normal(0.0, 1.0, size=(users, n_factors)) @ rng.normal(0.0, 1.2, size=(n_factors, items))
        noise = rng.normal(0.0, 1.5, size=(users, items))
        ratings = item_mean + user_bias + taste + noise
    ratings = np.round(np.clip(ratings, RATING_MIN, RATING_MAX), 2)
    observed = rng.random((users, items)) < density
    observed[:, :gauge_size] = True
    return RatingMatrix(np.where(observed, ratings, np.nan))
