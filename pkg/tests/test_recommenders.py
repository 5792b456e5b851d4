import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from recineq.errors import (
    AllZeroMass,
    EmptyCatalog,
    NoSimilarUsers,
    RankOutOfRange,
    SingularProjection,
    UnknownUser,
)
from recineq.numerics import SvdResult, pearson
from recineq.recommenders import (
    MfModel,
    PearsonRecommender,
    PopularityModel,
    make_recommender,
    mf_fit,
    mf_predict,
    mf_recommend,
    optimal_recommend,
    pearson_recommend,
    pearson_scores,
    popularity_fit,
    popularity_recommend,
    popularity_weights,
    random_recommend,
)
from recineq.synthetic import generate_synthetic
from recineq.types import GaugeSet, RatingMatrix, UserProfile

nan = np.nan


def profile_of(values, gauge, user_id=999):
    return UserProfile(user_id, dict(zip(gauge.item_ids, values)))


class TestRandom:
    def test_uniform_top_item(self):
        rng = np.random.default_rng(2024)
        catalog = np.arange(1, 101)
        gauge = GaugeSet(tuple(range(1, 11)))
        tops = np.array([random_recommend(catalog, gauge, rng).top for _ in range(90_000)])
        counts = np.bincount(tops, minlength=101)[11:]
        assert counts.sum() == 90_000
        assert stats.chisquare(counts).pvalue > 0.001

    def test_single_item(self, rng):
        assert random_recommend([1], GaugeSet(()), rng).item_ids.tolist() == [1]

    def test_empty_catalog(self, rng):
        with pytest.raises(EmptyCatalog):
            random_recommend([1, 2], GaugeSet((1, 2)), rng)


class TestPopularity:
    def test_symmetric(self):
        np.testing.assert_allclose(popularity_weights([10, 10], 1), [0.5, 0.5], atol=1e-15)

    @pytest.mark.parametrize("k, expected", [(1, [0.25, 0.75]), (2, [0.1, 0.9])])
    def test_weights(self, k, expected):
        np.testing.assert_allclose(popularity_weights([5, 15], k), expected, atol=1e-15)

    @pytest.mark.parametrize("k, expected", [(1, [0.25, 0.75]), (2, [0.1, 0.9])])
    def test_fit_shifts_means(self, k, expected):
        # raw means -5 and 5 shift to 5 and 15; item 3 is a gauge item
        m = RatingMatrix(np.array([[-4.0, 4.0, 1.0], [-6.0, 6.0, 2.0]]))
        model = popularity_fit(m, GaugeSet((3,)), k)
        np.testing.assert_allclose(model.probabilities, expected + [0.0], atol=1e-12)

    def test_unrated_item_gets_neutral_mass(self):
        m = RatingMatrix(np.array([[0.0, nan, 10.0]]))
        model = popularity_fit(m, GaugeSet(()), 1)
        np.testing.assert_allclose(model.probabilities, [10 / 40, 10 / 40, 20 / 40])

    def test_all_zero_mass(self):
        m = RatingMatrix(np.array([[-10.0, 5.0]]))
        with pytest.raises(AllZeroMass):
            popularity_fit(m, GaugeSet((2,)), 1)

    def test_degenerate_model_always_picks_item(self, rng):
        model = PopularityModel(np.array([1, 2]), np.array([1.0, 0.0]), 1)
        for _ in range(50):
            r = popularity_recommend(model, rng)
            assert r.top == 1 and r.item_ids.tolist() == [1, 2]

    def test_binomial_frequency(self):
        model = PopularityModel(np.array([1, 2]), np.array([0.1, 0.9]), 1)
        rng = np.random.default_rng(77)
        hits = sum(popularity_recommend(model, rng).top == 2 for _ in range(10_000))
        assert abs(hits - 9000) <= 3 * math.sqrt(10_000 * 0.9 * 0.1)

    def test_seeded_sequence_repeats(self):
        model = PopularityModel(np.arange(1, 6), np.full(5, 0.2), 1)
        a = [popularity_recommend(model, np.random.default_rng(9)).top for _ in range(3)]
        r1, r2 = np.random.default_rng(9), np.random.default_rng(9)
        assert [popularity_recommend(model, r1).top for _ in range(20)] == \
               [popularity_recommend(model, r2).top for _ in range(20)]
        assert len(set(a)) == 1

    def test_tail_ordered_by_probability(self, rng):
        model = PopularityModel(np.arange(1, 5), np.array([0.1, 0.4, 0.2, 0.3]), 1)
        r = popularity_recommend(model, rng)
        rest = [j for j in [2, 4, 3, 1] if j != r.top]
        assert r.item_ids[1:].tolist() == rest

    @settings(max_examples=100)
    @given(st.lists(st.floats(0.01, 20), min_size=2, max_size=10), st.integers(1, 4))
    def test_scale_monotone(self, means, k):
        p = popularity_weights(means, k)
        assert p.sum() == pytest.approx(1.0, abs=1e-12)
        for a in range(len(means)):
            for b in range(len(means)):
                if means[a] > means[b]:
                    assert p[a] > p[b]


def pearson_scores_oracle(train, gauge, profile):
    """Loop-by-loop weighted average, independent of the vectorised path."""
    gcols = [list(train.item_ids).index(j) for j in gauge.item_ids]
    prof = [profile.gauge_ratings[j] for j in gauge.item_ids]
    weights = []
    for u in range(train.n_users):
        try:
            w = pearson([train.values[u, c] for c in gcols], prof)
        except Exception:
            w = None
        weights.append(w if w is not None and w > 0 else None)
    out = {}
    for c, j in enumerate(train.item_ids):
        if j in gauge:
            continue
        num = den = 0.0
        for u, w in enumerate(weights):
            v = train.values[u, c]
            if w is not None and not math.isnan(v):
                num += w * v
                den += w
        out[int(j)] = num / den if den > 0 else -math.inf
    return out


class TestPearson:
    def test_single_identical_user(self):
        gauge = GaugeSet((1, 2, 3))
        train = RatingMatrix(np.array([[1.0, 2.0, 3.0, 7.5, -2.0, nan]]))
        items, scores, weights = pearson_scores(train, gauge, profile_of([1, 2, 3], gauge))
        assert weights[0] == pytest.approx(1.0)
        assert dict(zip(items.tolist(), scores.tolist())) == {4: 7.5, 5: -2.0, 6: -math.inf}

    def test_equal_weights(self):
        gauge = GaugeSet((1, 2, 3))
        # both users correlate 0.5 with the profile
        train = RatingMatrix(np.array([[1.0, 3.0, 2.0, 2.0], [1.0, 3.0, 2.0, 4.0]]))
        items, scores, weights = pearson_scores(train, gauge, profile_of([1, 2, 3], gauge))
        np.testing.assert_allclose(weights, [0.5, 0.5])
        assert scores.tolist() == [3.0]

    def test_negative_weight_discarded(self, toy):
        train, _, gauge = toy
        # weights 1.0, -1.0 (dropped), 0.5; item 4 ratings 5, -4, 2
        rows = train.values.copy()
        rows[:, 3] = [4.0, 9.0, -2.0]
        m = RatingMatrix(rows)
        items, scores, weights = pearson_scores(m, gauge, profile_of([2, 4, 6], gauge))
        np.testing.assert_allclose(weights, [1.0, -1.0, 0.5], atol=1e-12)
        assert scores[0] == pytest.approx((1.0 * 4 + 0.5 * -2) / 1.5)
        assert scores[0] == pytest.approx(2.0)

    def test_matches_loop_oracle(self):
        m = generate_synthetic(80, 25, 10, "long-tail", seed=3, density=0.6)
        gauge = GaugeSet(tuple(range(1, 11)))
        rng = np.random.default_rng(0)
        for _ in range(5):
            prof = profile_of(np.round(rng.uniform(-10, 10, 10), 2), gauge)
            items, scores, _ = pearson_scores(m, gauge, prof)
            oracle = pearson_scores_oracle(m, gauge, prof)
            for j, s in zip(items.tolist(), scores.tolist()):
                assert s == pytest.approx(oracle[j], abs=1e-10) or (s == oracle[j] == -math.inf)

    def test_scores_bounded_by_contributing_ratings(self):
        m = generate_synthetic(60, 20, 10, "uniform", seed=8, density=0.5)
        gauge = GaugeSet(tuple(range(1, 11)))
        prof = profile_of(np.linspace(-5, 5, 10), gauge)
        items, scores, weights = pearson_scores(m, gauge, prof)
        keep = np.nan_to_num(weights, nan=-1) > 0
        for j, s in zip(items, scores):
            col = m.values[keep, list(m.item_ids).index(j)]
            col = col[~np.isnan(col)]
            if col.size:
                assert col.min() - 1e-9 <= s <= col.max() + 1e-9

    def test_ranking_and_ties(self):
        gauge = GaugeSet((1, 2, 3))
        train = RatingMatrix(np.array([[1.0, 2.0, 3.0, 4.0, 6.0, 4.0, nan]]))
        r = pearson_recommend(train, gauge, profile_of([1, 2, 3], gauge))
        assert r.item_ids.tolist() == [5, 4, 6, 7]

    def test_no_similar_users_falls_back_to_item_means(self, caplog):
        gauge = GaugeSet((1, 2, 3))
        train = RatingMatrix(np.array([[3.0, 2.0, 1.0, 1.0, 5.0], [3.0, 2.0, 1.0, 3.0, -5.0]]))
        prof = profile_of([1, 2, 3], gauge)
        with pytest.raises(NoSimilarUsers):
            pearson_scores(train, gauge, prof)
        rec = PearsonRecommender().fit(train, gauge)
        assert rec.recommend(prof).item_ids.tolist() == [4, 5]
        assert "falling back" in caplog.text

    def test_constant_profile_falls_back(self):
        gauge = GaugeSet((1, 2, 3))
        train = RatingMatrix(np.array([[1.0, 2.0, 3.0, 1.0, 5.0]]))
        rec = PearsonRecommender().fit(train, gauge)
        assert rec.recommend(profile_of([4, 4, 4], gauge)).top == 5


class TestMf:
    def test_full_rank_reproduces_present_ratings(self):
        m = generate_synthetic(30, 12, 4, "uniform", seed=5, density=0.7)
        model = mf_fit(m, 12)
        pred = model.reconstruct()
        assert np.abs(pred[m.mask] - m.values[m.mask]).max() < 1e-6

    def test_full_rank_fully_observed(self, rng):
        A = np.round(rng.uniform(-10, 10, size=(15, 9)), 2)
        assert np.abs(mf_fit(RatingMatrix(A), 9).reconstruct() - A).max() < 1e-6

    def test_rank_one_recovery(self, rng):
        u = rng.uniform(0.5, 1.5, size=12)
        v = rng.uniform(-5, 5, size=7)
        A = np.outer(u, v)
        assert np.abs(mf_fit(RatingMatrix(A), 1).reconstruct() - A).max() < 1e-8

    def test_rank_out_of_range(self):
        with pytest.raises(RankOutOfRange):
            mf_fit(RatingMatrix(np.ones((3, 5))), 4)

    def test_fold_in_matches_user_included_in_matrix(self, rng):
        # rows = a_i * v + c_i with v zero-mean on gauge and non-gauge parts
        gauge = GaugeSet(tuple(range(1, 11)))
        vg = rng.normal(size=10)
        vg -= vg.mean()
        vr = np.array([3.0, -1.0, 0.5, -2.5])
        v = np.concatenate([vg, vr]) / 4
        a = rng.uniform(0.5, 2.0, size=20)
        c = rng.uniform(-2, 2, size=20)
        train = RatingMatrix(np.outer(a, v) + c[:, None])
        model = mf_fit(train, 1)
        for a_star, c_star in [(1.3, 0.4), (0.7, -1.0)]:
            row = a_star * v + c_star
            prof = profile_of(row[:10], gauge)
            folded = mf_recommend(model, gauge, prof)
            included = mf_fit(train.append_rows(row[None, :], [999]), 1).reconstruct()[-1]
            assert folded.top == 10 + 1 + int(np.argmax(included[10:]))
            assert np.argsort(-mf_predict(model, gauge, prof)[10:]).tolist() == np.argsort(-included[10:]).tolist()

    def test_zero_centered_profile_predicts_mean(self, rng):
        gauge = GaugeSet((1, 2, 3))
        train = RatingMatrix(rng.uniform(-5, 5, size=(10, 6)))
        model = mf_fit(train, 2)
        prof = profile_of([2.5, 2.5, 2.5], gauge)
        np.testing.assert_allclose(mf_predict(model, gauge, prof), 2.5, atol=1e-12)
        assert mf_recommend(model, gauge, prof).item_ids.tolist() == [4, 5, 6]

    def test_singular_projection(self):
        f = SvdResult(np.eye(2), np.array([1.0, 1e-14]), np.eye(2))
        model = MfModel(f, np.zeros(2), np.array([1, 2]), 2)
        gauge = GaugeSet((1,))
        with pytest.raises(SingularProjection):
            mf_predict(model, gauge, profile_of([1.0], gauge))


class TestOptimal:
    def truth(self):
        return RatingMatrix(np.array([[-2.0, 5.0, 1.0, 9.0], [5.0, 5.0, nan, 9.0], [nan, nan, nan, 3.0]]),
                            user_ids=[7, 8, 9])

    def test_max_rating(self):
        r = optimal_recommend(self.truth(), GaugeSet((4,)), 7)
        assert r.top == 2 and r.scores[0] == 5.0
        assert r.item_ids.tolist() == [2, 3, 1]

    def test_tie_by_id(self):
        assert optimal_recommend(self.truth(), GaugeSet((4,)), 8).top == 1

    def test_only_gauge_rated(self):
        assert len(optimal_recommend(self.truth(), GaugeSet((4,)), 9)) == 0

    def test_unknown_user(self):
        with pytest.raises(UnknownUser):
            optimal_recommend(self.truth(), GaugeSet((4,)), 1)

    def test_brute_force_equality(self):
        m = generate_synthetic(50, 20, 10, "long-tail", seed=11, density=0.6)
        gauge = GaugeSet(tuple(range(1, 11)))
        for u in range(m.n_users):
            best = max(v for j, v in zip(m.item_ids, m.values[u]) if j > 10 and not math.isnan(v))
            r = optimal_recommend(m, gauge, int(m.user_ids[u]))
            assert r.scores[0] == best


@pytest.mark.parametrize("method", ["random", "pop1", "pop2", "pearson", "mf", "optimal"])
def test_every_method_excludes_gauge(method):
    m = generate_synthetic(120, 25, 10, "long-tail", seed=21, density=0.7)
    rng = np.random.default_rng(1)
    for trial in range(5):
        gauge = GaugeSet(tuple(sorted(rng.choice(np.arange(1, 11), size=4, replace=False).tolist())))
        rec = make_recommender(method, truth=m, mf_rank=5).fit(m.take_rows(range(80)), gauge)
        for row in range(80, 120, 7):
            prof = UserProfile.from_matrix(m, row, gauge)
            r = rec.recommend(prof, rng=rng)
            assert not set(r.item_ids.tolist()) & set(gauge.item_ids)
            assert np.all(np.diff(r.scores) <= 0)


def test_unknown_method():
    with pytest.raises(ValueError):
        make_recommender("eigentaste")
