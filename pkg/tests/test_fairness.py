import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import random_dataset, random_theta, tiny
from fairpoison import Dataset, GapTracker, ModelParams, Sample
from fairpoison.errors import EmptyDataset, EmptyGroup
from fairpoison.fairness import (RelaxedPenalty, dp_gap, dp_relaxed, eo_gap, eo_relaxed,
                                 grad_relaxed, penalty_value, tracker_query_with_candidate,
                                 tracker_refresh)

ZERO = ModelParams([0.0, 0.0], 0.0)
T = ModelParams([1.0, -1.0], 0.0)


class TestTinyExamples:
    def test_dp_gap(self, tiny_d):
        assert dp_gap(T, tiny_d) == 0.5
        assert dp_gap(ZERO, tiny_d) == 0.0

    def test_dp_gap_extreme(self):
        d = Dataset([[1.0], [2.0], [-1.0], [-3.0]], s=[0, 0, 1, 1], y=[0, 1, 0, 1])
        assert dp_gap(ModelParams([1.0], 0.0), d) == 1.0

    def test_eo_gap(self, tiny_d):
        assert eo_gap(T, tiny_d) == 1.0
        assert eo_gap(ZERO, tiny_d) == 0.0

    def test_eo_gap_perfect_classifier(self, tiny_d):
        perfect = ModelParams([2.0, 0.0], -1.0)
        assert (np.array([perfect.weights @ smp.features + perfect.bias >= 0 for smp in tiny_d])
                == tiny_d.y.astype(bool)).all()
        assert eo_gap(perfect, tiny_d) == 0.0

    def test_dp_relaxed(self, tiny_d):
        assert dp_relaxed(T, tiny_d) == 0.0

    def test_dp_relaxed_equal_distances(self):
        d = Dataset([[1.0], [1.0]], s=[1, 0], y=[1, 1])
        assert dp_relaxed(ModelParams([2.0], 0.0), d) == 0.0

    def test_eo_relaxed(self, tiny_d):
        # cell risks: R(1,0)=0, R(1,1)=0.5, R(0,0)=0, R(0,1)=0.5 since d((0,0)) = 0
        assert eo_relaxed(T, tiny_d) == 0.5
        assert eo_relaxed(T, tiny_d) == pytest.approx(oracles.eo_relaxed(T, tiny_d), abs=1e-15)
        assert eo_relaxed(ZERO, tiny_d) == 0.0

    def test_eo_relaxed_symmetric_groups(self):
        X = [[0.3, 1.0], [0.3, 1.0], [-2.0, 0.5], [-2.0, 0.5]]
        d = Dataset(X, s=[0, 1, 0, 1], y=[1, 1, 0, 0])
        assert eo_relaxed(ModelParams([0.7, -1.1], 0.2), d) == 0.0

    def test_identical_groups_zero_dp(self):
        d = Dataset([[1.0], [3.0], [-2.0]], s=[1, 1, 1], y=[0, 1, 1])
        assert dp_relaxed(ModelParams([5.0], 1.0), d) == 0.0
        np.testing.assert_array_equal(grad_relaxed(ModelParams([5.0], 1.0), d, "dp"), [0.0, 0.0])

    def test_dp_gradient_at_zero_covariance(self, tiny_d):
        np.testing.assert_array_equal(grad_relaxed(T, tiny_d, "dp"), [0.0, 0.0, 0.0])


class TestGroupCoverage:
    def test_eo_needs_all_cells(self, tiny_d):
        d = tiny_d.subset([0, 1, 2])
        for f in (eo_gap, eo_relaxed):
            with pytest.raises(EmptyGroup):
                f(T, d)

    def test_dp_needs_both_groups(self, tiny_d):
        with pytest.raises(EmptyGroup):
            dp_gap(T, tiny_d.subset([0, 1]))

    def test_empty(self, tiny_d):
        with pytest.raises(EmptyDataset):
            dp_relaxed(T, tiny_d.subset([]))


def test_oracle_equivalence_small_instances():
    rng = np.random.default_rng(1)
    for _ in range(300):
        d = random_dataset(rng)
        theta = random_theta(rng, d.dim)
        assert abs(dp_gap(theta, d) - oracles.dp_gap(theta, d)) <= 1e-12
        assert abs(eo_gap(theta, d) - oracles.eo_gap(theta, d)) <= 1e-12
        assert abs(dp_relaxed(theta, d) - oracles.dp_relaxed(theta, d)) <= 1e-12
        assert abs(eo_relaxed(theta, d) - oracles.eo_relaxed(theta, d)) <= 1e-12


class TestProperties:
    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.01, 100.0))
    def test_empirical_gaps_scale_invariant(self, seed, c):
        rng = np.random.default_rng(seed)
        d = random_dataset(rng)
        theta = random_theta(rng, d.dim)
        scaled = ModelParams(c * theta.weights, c * theta.bias)
        pred = d.X @ theta.weights + theta.bias >= 0
        if (pred == (d.X @ scaled.weights + scaled.bias >= 0)).all():
            assert dp_gap(scaled, d) == dp_gap(theta, d)
            assert eo_gap(scaled, d) == eo_gap(theta, d)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(-10.0, 10.0))
    def test_dp_relaxed_linear(self, seed, c):
        rng = np.random.default_rng(seed)
        d = random_dataset(rng)
        theta = random_theta(rng, d.dim)
        scaled = ModelParams(c * theta.weights, c * theta.bias)
        assert dp_relaxed(scaled, d) == pytest.approx(c * dp_relaxed(theta, d), abs=1e-10)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_eo_relaxed_nonnegative(self, seed):
        rng = np.random.default_rng(seed)
        d = random_dataset(rng)
        assert eo_relaxed(random_theta(rng, d.dim), d) >= 0.0
        assert eo_relaxed(ModelParams.zeros(d.dim), d) == 0.0


class TestRelaxedGradient:
    @pytest.mark.parametrize("notion", ["dp", "eo"])
    def test_tiny_finite_differences(self, notion):
        rng = np.random.default_rng(7)
        d = tiny()
        for _ in range(20):
            v = rng.normal(size=3)
            fd = oracles.central_difference(
                lambda u: penalty_value(ModelParams.from_vector(u), d, notion), v.tolist())
            g = grad_relaxed(ModelParams.from_vector(v), d, notion)
            assert oracles.rel_err(g.tolist(), fd) < 1e-5 or np.allclose(fd, 0, atol=1e-9)

    def test_eo_bias_component_is_zero(self, rng):
        d = random_dataset(rng, n=30, d=3)
        assert grad_relaxed(random_theta(rng, 3), d, "eo")[-1] == 0.0

    @pytest.mark.parametrize("notion", ["dp", "eo"])
    def test_penalty_matches_value_functions(self, notion, rng):
        d = random_dataset(rng, n=25, d=2)
        theta = random_theta(rng, 2)
        pen = RelaxedPenalty(d, notion)
        assert pen.value(theta.as_vector()) == pytest.approx(penalty_value(theta, d, notion), abs=1e-12)


class TestTracker:
    def test_base_query_matches_full(self, rng):
        d = random_dataset(rng, n=20, d=3)
        theta = random_theta(rng, 3)
        for notion, gap, rel in (("dp", dp_gap, dp_relaxed), ("eo", eo_gap, eo_relaxed)):
            v = GapTracker.build(notion, theta, d).query(theta)
            assert v.empirical_gap == gap(theta, d)
            assert v.relaxed_value == pytest.approx(rel(theta, d), abs=1e-12)

    def test_refresh_empty(self, tiny_d):
        t = tracker_refresh(GapTracker.empty("dp"), T, tiny_d.subset([]))
        assert t.total == 0 and t.sum_s == 0 and t.sum_d == 0 and t.sum_s_times_d == 0
        assert not t.group_counts.any() and not t.linear_loss_sums.any()

    def test_refresh_idempotent(self, tiny_d):
        a = GapTracker.build("eo", T, tiny_d)
        b = tracker_refresh(a, T, tiny_d)
        for field in ("group_counts", "positive_pred_counts", "misclassified_counts",
                      "linear_loss_sums"):
            np.testing.assert_array_equal(getattr(a, field), getattr(b, field))
        assert (a.sum_s, a.sum_d, a.sum_s_times_d, a.total) == (b.sum_s, b.sum_d, b.sum_s_times_d, b.total)

    def test_tiny_candidate(self, tiny_d):
        t = GapTracker.build("dp", T, tiny_d.subset([0, 1, 2]))
        v = tracker_query_with_candidate(t, T, tiny_d[3])
        assert v.empirical_gap == 0.5

    def test_duplicate_candidate_recount(self, rng):
        d = random_dataset(rng, n=15, d=2)
        theta = random_theta(rng, 2)
        t = GapTracker.build("dp", theta, d)
        c = d[4]
        full = d.concat(Dataset(c.features[None, :], [c.sensitive], [c.label]))
        assert tracker_query_with_candidate(t, theta, c).empirical_gap == oracles.dp_gap(theta, full)

    def test_eo_candidate_relaxed(self, tiny_d):
        t = GapTracker.build("eo", T, tiny_d)
        c = Sample([0.5, 0.25], 1, 0)
        full = tiny_d.concat(Dataset([[0.5, 0.25]], [1], [0]))
        assert abs(t.query(T, c).relaxed_value - eo_relaxed(T, full)) <= 1e-12

    def test_candidate_filling_empty_cell(self, tiny_d):
        base = tiny_d.subset([0, 1, 2])
        t = GapTracker.build("eo", T, base)
        with pytest.raises(EmptyGroup):
            t.query(T)
        assert t.query(T, tiny_d[3]).empirical_gap == eo_gap(T, tiny_d)

    def test_query_many_matches_single(self, rng):
        d = random_dataset(rng, n=20, d=3)
        cands = random_dataset(rng, n=10, d=3, all_cells=False)
        theta = random_theta(rng, 3)
        t = GapTracker.build("eo", theta, d)
        gaps, rel = t.query_many(theta, cands.X, cands.s, cands.y)
        for i, c in enumerate(cands):
            v = t.query(theta, c)
            assert (gaps[i], rel[i]) == (v.empirical_gap, v.relaxed_value)

    def test_random_candidates_match_recomputation(self):
        rng = np.random.default_rng(11)
        for _ in range(500):
            d = random_dataset(rng)
            theta = random_theta(rng, d.dim)
            c = random_dataset(rng, n=1, d=d.dim, all_cells=False)[0]
            full = d.concat(Dataset(c.features[None, :], [c.sensitive], [c.label]))
            for notion, gap, rel in (("dp", dp_gap, dp_relaxed), ("eo", eo_gap, eo_relaxed)):
                v = GapTracker.build(notion, theta, d).query(theta, c)
                assert abs(v.empirical_gap - gap(theta, full)) <= 1e-12
                assert abs(v.relaxed_value - rel(theta, full)) <= 1e-12
