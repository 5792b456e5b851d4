"""The five recommendation methods: random, popularity, Pearson user-CF,
truncated-SVD matrix factorization and the ground-truth optimal oracle.

Every recommender follows the :class:`~recineq.types.Recommender` contract and
never ranks gauge items.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    AllZeroMass,
    EmptyCatalog,
    NoSimilarUsers,
    RankOutOfRange,
    SingularProjection,
    UnknownUser,
)
from .numerics import SvdResult, pearson_rows, svd, truncate_rank
from .types import GaugeSet, RankedRecommendation, RatingMatrix, UserProfile, rank_by_score

log = logging.getLogger(__name__)

RATING_SHIFT = 10.0
NEUTRAL_SHIFTED_MEAN = 10.0
DEFAULT_MF_RANK = 15


def recommendable_items(item_ids: np.ndarray, gauge: GaugeSet) -> np.ndarray:
    item_ids = np.asarray(item_ids, dtype=np.int64)
    return item_ids[~np.isin(item_ids, gauge.item_ids)]


def _require_rng(rng):
    if rng is None:
        raise ValueError("stochastic recommender needs an explicit rng")
    return rng


def random_recommend(catalog, gauge: GaugeSet, rng: np.random.Generator) -> RankedRecommendation:
    """Uniform random permutation of the non-gauge catalog."""
    items = recommendable_items(catalog, gauge)
    if items.size == 0:
        raise EmptyCatalog("no recommendable items outside the gauge set")
    order = rng.permutation(items.size)
    return RankedRecommendation(items[order], np.full(items.size, 1.0 / items.size))


@dataclass(frozen=True, eq=False)
class PopularityModel:
    item_ids: np.ndarray
    probabilities: np.ndarray
    exponent: int
    recommendable: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.recommendable is None:
            object.__setattr__(self, "recommendable", np.ones(len(self.item_ids), dtype=bool))


def popularity_fit(snapshot: RatingMatrix, gauge: GaugeSet, exponent: int = 1) -> PopularityModel:
    """Selection probability proportional to ``(mean + 10) ** exponent``.

    Ratings are shifted from [-10, 10] into [0, 20] so the weights stay
    non-negative and order-preserving; unrated items take the midpoint 10.
    """
    if exponent < 1:
        raise ValueError("exponent must be >= 1")
    if snapshot.n_users == 0:
        raise ValueError("cannot fit popularity on an empty snapshot")
    means = snapshot.item_means() + RATING_SHIFT
    means = np.where(np.isnan(means), NEUTRAL_SHIFTED_MEAN, means)
    weights = np.clip(means, 0.0, None) ** exponent
    recommendable = ~np.isin(snapshot.item_ids, gauge.item_ids)
    weights[~recommendable] = 0.0
    total = weights.sum()
    if total <= 0.0:
        raise AllZeroMass("every recommendable item has zero popularity mass")
    return PopularityModel(snapshot.item_ids.copy(), weights / total, exponent, recommendable)


def popularity_weights(shifted_means, exponent: int) -> np.ndarray:
    """Normalise already-shifted means; exposed for direct checks of the rule."""
    w = np.asarray(shifted_means, dtype=np.float64) ** exponent
    if w.sum() <= 0.0:
        raise AllZeroMass("zero total mass")
    return w / w.sum()


def popularity_recommend(model: PopularityModel, rng: np.random.Generator) -> RankedRecommendation:
    """Sample the top item from the model; rank the rest by probability."""
    live = model.probabilities > 0
    items = model.item_ids[live]
    probs = model.probabilities[live]
    pick = rng.choice(items.size, p=probs / probs.sum())
    rest = np.delete(np.arange(items.size), pick)
    tail = rank_by_score(items[rest], probs[rest])
    dead = ~live & model.recommendable
    dead = rank_by_score(model.item_ids[dead], model.probabilities[dead])
    return RankedRecommendation(
        np.concatenate([[items[pick]], tail.item_ids, dead.item_ids]),
        np.concatenate([[1.0], tail.scores, dead.scores]),
    )


class RandomRecommender:
    name = "random"

    def fit(self, snapshot: RatingMatrix, gauge: GaugeSet):
        self.catalog = snapshot.item_ids.copy()
        self.gauge = gauge
        return self

    def recommend(self, profile, top_n=None, rng=None):
        return random_recommend(self.catalog, self.gauge, _require_rng(rng)).head(top_n)


class PopularityRecommender:
    def __init__(self, exponent: int = 1):
        self.exponent = exponent
        self.name = f"pop{exponent}"

    def fit(self, snapshot: RatingMatrix, gauge: GaugeSet):
        self.model = popularity_fit(snapshot, gauge, self.exponent)
        return self

    def recommend(self, profile, top_n=None, rng=None):
        return popularity_recommend(self.model, _require_rng(rng)).head(top_n)


def _item_mean_ranking(snapshot: RatingMatrix, gauge: GaugeSet, top_n) -> RankedRecommendation:
    items = recommendable_items(snapshot.item_ids, gauge)
    means = snapshot.item_means()[snapshot.item_columns(items)]
    return rank_by_score(items, np.where(np.isnan(means), -np.inf, means), top_n)


def pearson_scores(snapshot: RatingMatrix, gauge: GaugeSet, profile: UserProfile):
    """Similarity-weighted average rating for every non-gauge item.

    Returns ``(items, scores, weights)``; items nobody similar rated score
    ``-inf``.  Users whose gauge correlation is undefined or not positive are
    dropped.  Raises :class:`NoSimilarUsers` when nobody is left.
    """
    gcols = snapshot.item_columns(gauge.item_ids)
    weights = pearson_rows(snapshot.values[:, gcols], profile.vector(gauge))
    keep = np.nan_to_num(weights, nan=-1.0) > 0
    if not keep.any():
        raise NoSimilarUsers(f"no positively correlated users for user {profile.user_id}")
    items = recommendable_items(snapshot.item_ids, gauge)
    cols = snapshot.item_columns(items)
    w = weights[keep]
    block = snapshot.values[np.ix_(keep, cols)]
    present = ~np.isnan(block)
    num = w @ np.where(present, block, 0.0)
    den = w @ present
    with np.errstate(invalid="ignore", divide="ignore"):
        scores = np.where(den > 0, num / den, -np.inf)
    return items, scores, weights


def pearson_recommend(snapshot: RatingMatrix, gauge: GaugeSet, profile: UserProfile, top_n=None) -> RankedRecommendation:
    items, scores, _ = pearson_scores(snapshot, gauge, profile)
    return rank_by_score(items, scores, top_n)


class PearsonRecommender:
    name = "pearson"

    def fit(self, snapshot: RatingMatrix, gauge: GaugeSet):
        self.snapshot = snapshot
        self.gauge = gauge
        return self

    def recommend(self, profile, top_n=None, rng=None):
        try:
            return pearson_recommend(self.snapshot, self.gauge, profile, top_n)
        except NoSimilarUsers as exc:
            log.warning("%s; falling back to item-mean ordering", exc)
            return _item_mean_ranking(self.snapshot, self.gauge, top_n)


@dataclass(frozen=True, eq=False)
class MfModel:
    factors: SvdResult
    user_means: np.ndarray
    item_ids: np.ndarray
    rank: int

    def reconstruct(self) -> np.ndarray:
        """Predicted ratings for the training users."""
        return self.factors.reconstruct() + self.user_means[:, None]


def mf_fit(snapshot: RatingMatrix, rank: int = DEFAULT_MF_RANK) -> MfModel:
    """Row-mean impute, de-mean each row, factorize and keep ``rank`` factors."""
    if snapshot.n_users == 0 or snapshot.n_items == 0:
        raise ValueError("cannot factorize an empty snapshot")
    if not 1 <= rank <= min(snapshot.values.shape):
        raise RankOutOfRange(f"rank {rank} outside [1, {min(snapshot.values.shape)}]")
    values = snapshot.values
    counts = snapshot.rated_counts
    means = np.where(snapshot.mask, values, 0.0).sum(axis=1) / np.maximum(counts, 1)
    centered = np.where(snapshot.mask, values - means[:, None], 0.0)
    factors = truncate_rank(svd(centered), rank)
    return MfModel(factors, means, snapshot.item_ids.copy(), rank)


def mf_predict(model: MfModel, gauge: GaugeSet, profile: UserProfile) -> np.ndarray:
    """Fold a profile into the latent space and predict every item."""
    sigma = model.factors.singular_values
    if np.any(sigma < 1e-12):
        raise SingularProjection(f"singular value {sigma.min():.3g} too small to invert")
    r = profile.vector(gauge)
    mean = r.mean()
    index = {int(j): i for i, j in enumerate(model.item_ids)}
    cols = np.array([index[j] for j in gauge.item_ids], dtype=np.int64)
    Vt = model.factors.Vt
    latent = (r - mean) @ Vt[:, cols].T / sigma
    return (latent * sigma) @ Vt + mean


def mf_recommend(model: MfModel, gauge: GaugeSet, profile: UserProfile, top_n=None) -> RankedRecommendation:
    pred = mf_predict(model, gauge, profile)
    keep = ~np.isin(model.item_ids, gauge.item_ids)
    return rank_by_score(model.item_ids[keep], pred[keep], top_n)


class MfRecommender:
    name = "mf"

    def __init__(self, rank: int = DEFAULT_MF_RANK):
        self.rank = rank

    def fit(self, snapshot: RatingMatrix, gauge: GaugeSet):
        self.gauge = gauge
        self.model = mf_fit(snapshot, min(self.rank, *snapshot.values.shape))
        return self

    def recommend(self, profile, top_n=None, rng=None):
        return mf_recommend(self.model, self.gauge, profile, top_n)


def optimal_recommend(truth: RatingMatrix, gauge: GaugeSet, user_id: int, top_n=None) -> RankedRecommendation:
    """The user's own non-gauge ratings, best first."""
    if not truth.has_user(user_id):
        raise UnknownUser(f"user {user_id} not in ground truth")
    row = truth.values[truth.user_row(user_id)]
    keep = ~np.isnan(row) & ~np.isin(truth.item_ids, gauge.item_ids)
    return rank_by_score(truth.item_ids[keep], row[keep], top_n)


class OptimalRecommender:
    """Looks up each served user's true ratings; the snapshot is ignored."""

    name = "optimal"

    def __init__(self, truth: RatingMatrix):
        self.truth = truth

    def fit(self, snapshot: RatingMatrix, gauge: GaugeSet):
        self.gauge = gauge
        return self

    def recommend(self, profile, top_n=None, rng=None):
        return optimal_recommend(self.truth, self.gauge, profile.user_id, top_n)


METHODS = ("random", "pop1", "pop2", "pearson", "mf", "optimal")


def make_recommender(method: str, truth: Optional[RatingMatrix] = None, mf_rank: int = DEFAULT_MF_RANK):
    """Build an unfitted recommender from its CLI name."""
    if method == "random":
        return RandomRecommender()
    if method in ("pop1", "pop2"):
        return PopularityRecommender(int(method[-1]))
    if method == "pearson":
        return PearsonRecommender()
    if method == "mf":
        return MfRecommender(mf_rank)
    if method == "optimal":
        if truth is None:
            raise ValueError("optimal needs the ground-truth matrix")
        return OptimalRecommender(truth)
    raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
