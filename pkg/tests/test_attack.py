import numpy as np
import pytest

from conftest import random_dataset
from fairpoison import (AttackConfig, Dataset, GapTracker, ModelParams, build_as,
                        run_online_accuracy, run_pfml, score_candidate)
from fairpoison.attack import poison_count, resolve_gamma
from fairpoison.errors import PoolExhausted
from fairpoison.fairness import eo_gap
from fairpoison.linear import PenalizedObjective, hinge_losses, mean_hinge


@pytest.fixture(scope="module")
def setting():
    rng = np.random.default_rng(42)
    dc = random_dataset(rng, n=60, d=3)
    dk = random_dataset(rng, n=40, d=3, all_cells=False)
    return dc, build_as(dk)


FAST = dict(pretrain_iters=200, eta=0.01, epsilon=0.1)


class TestPoisonCount:
    @pytest.mark.parametrize("n, eps, k", [(200, 0.1, 20), (5, 0.1, 1), (199, 0.1, 19), (40, 0.025, 1)])
    def test_floor_with_minimum(self, n, eps, k):
        assert poison_count(n, eps) == k


class TestScoring:
    def test_endpoints_and_mix(self, tiny_d, theta_1m1):
        tracker = GapTracker.build("dp", theta_1m1, tiny_d.subset([0, 1, 2]))
        c = tiny_d[3]
        hinge = float(hinge_losses(theta_1m1, c.features[None, :], [c.label])[0])
        gap = tracker.query(theta_1m1, c).empirical_gap
        assert score_candidate(theta_1m1, c, tracker, 1.0, 7.0) == hinge
        assert score_candidate(theta_1m1, c, tracker, 0.0, 2.0) == 2.0 * gap
        assert score_candidate(theta_1m1, c, tracker, 0.5, 2.0) == 0.5 * hinge + 0.5 * 2.0 * gap

    def test_formula_arithmetic(self):
        assert 0.5 * 0.4 + 0.5 * 2 * 0.3 == pytest.approx(0.5)


class TestGamma:
    def test_auto_ratio(self, setting):
        dc, _ = setting
        theta = ModelParams([0.5, -0.2, 0.1], 0.05)
        g = resolve_gamma(AttackConfig(), theta, dc)
        assert g.mode == "auto"
        assert g.value == mean_hinge(theta, dc) / max(eo_gap(theta, dc), 1e-6)

    def test_floor_when_fair(self, tiny_d):
        zero = ModelParams.zeros(2)
        g = resolve_gamma(AttackConfig(), zero, tiny_d)
        assert g.value == 1.0 / 1e-6

    def test_fixed(self, tiny_d):
        assert resolve_gamma(AttackConfig(gamma=3.0), ModelParams.zeros(2), tiny_d).value == 3.0


class TestGreedy:
    def test_single_step_picks_highest_hinge(self, tiny_d):
        dc = tiny_d
        cand = Dataset([[-5.0, 0.0], [5.0, 0.0]], s=[0, 1], y=[1, 1])
        cfg = AttackConfig(alpha=1.0, epsilon=0.25, pretrain_iters=1)
        res = run_pfml(dc, build_as(cand), cfg)
        theta = res.pretrained_theta
        losses = hinge_losses(theta, cand.X, cand.y)
        assert losses[0] > losses[1]
        assert res.chosen == [0]

    def test_pool_exhausted(self, tiny_d):
        with pytest.raises(PoolExhausted):
            run_pfml(tiny_d, build_as(tiny_d.subset([0])), AttackConfig(epsilon=0.5))

    def test_lengths_and_removal(self, setting):
        dc, pool = setting
        res = run_pfml(dc, pool, AttackConfig(record_scores=True, **FAST))
        k = poison_count(len(dc), 0.1)
        assert len(res.poison_set) == len(res.trace) == k
        assert len(set(res.chosen)) == k
        for t, rem in enumerate(res.remaining):
            assert len(rem) == len(pool) - t
            assert not set(res.chosen[:t]) & set(rem.tolist())

    @pytest.mark.parametrize("alpha", [0.0, 0.3, 0.8, 1.0])
    def test_choice_is_argmax(self, setting, alpha):
        dc, pool = setting
        res = run_pfml(dc, pool, AttackConfig(alpha=alpha, record_scores=True, **FAST))
        for rec, scores, rem in zip(res.trace, res.scores, res.remaining):
            j = list(rem).index(rec.candidate)
            assert scores[j] == scores.max() == rec.combined_score
            # lowest index among ties
            assert j == int(np.flatnonzero(scores == scores.max())[0])

    def test_trace_matches_scores(self, setting):
        dc, pool = setting
        res = run_pfml(dc, pool, AttackConfig(alpha=0.5, **FAST))
        g = res.gamma.value
        for r in res.trace:
            assert r.combined_score == pytest.approx(0.5 * r.accuracy_loss + 0.5 * g * r.fairness_empirical)

    def test_deterministic(self, setting):
        dc, pool = setting
        cfg = AttackConfig(alpha=0.4, notion="dp", **FAST)
        assert run_pfml(dc, pool, cfg) == run_pfml(dc, pool, cfg)

    def test_gamma_scaling_keeps_sequence_at_alpha_zero(self, setting):
        dc, pool = setting
        base = dict(alpha=0.0, notion="dp", **FAST)
        a = run_pfml(dc, pool, AttackConfig(gamma=1.0, record_scores=True, **base))
        b = run_pfml(dc, pool, AttackConfig(gamma=2.0, **base))
        distinct = all(np.sort(s)[-1] > np.sort(s)[-2] for s in a.scores)
        if distinct:
            assert a.chosen == b.chosen

    def test_final_theta_follows_one_step_per_pick(self, setting):
        dc, pool = setting
        cfg = AttackConfig(alpha=0.7, **FAST)
        res = run_pfml(dc, pool, cfg)
        v = res.pretrained_theta.as_vector()
        train = dc
        for i in range(len(res.poison_set)):
            train = train.concat(res.poison_set.subset([i]))
            v = PenalizedObjective(train, cfg.notion, cfg.lam).step(v, cfg.eta)
        np.testing.assert_array_equal(v, res.final_theta.as_vector())


class TestOnlineAccuracy:
    def test_equivalent_to_degenerate_pfml(self, setting):
        dc, pool = setting
        cfg = AttackConfig(alpha=1.0, lam=0.0, **FAST)
        assert run_online_accuracy(dc, pool, cfg) == run_pfml(dc, pool, cfg)

    def test_ignores_sensitive_attribute(self, setting):
        dc, pool = setting
        cfg = AttackConfig(**FAST)
        c = pool.candidates
        shuffled = build_as(Dataset(c.X, np.random.default_rng(0).permutation(c.s), c.y))
        assert run_online_accuracy(dc, pool, cfg).chosen == run_online_accuracy(dc, shuffled, cfg).chosen

    def test_exhausts_small_pool(self, tiny_d):
        cand = Dataset([[0.2, 0.1], [-1.0, 2.0], [3.0, -1.0]], s=[0, 1, 0], y=[1, 1, 0])
        res = run_online_accuracy(tiny_d.concat(tiny_d).concat(tiny_d), build_as(cand),
                                  AttackConfig(epsilon=0.25, pretrain_iters=10))
        assert sorted(res.chosen) == [0, 1, 2]

    def test_frozen_theta_gives_sorted_order(self, setting, monkeypatch):
        dc, pool = setting

        class Frozen(PenalizedObjective):
            def step(self, v, eta):
                return v

        # pretraining still moves theta; only the per-pick updates are frozen
        monkeypatch.setattr("fairpoison.attack.PenalizedObjective", Frozen)
        res = run_online_accuracy(dc, pool, AttackConfig(**{**FAST, "epsilon": 0.3}))
        assert res.final_theta == res.pretrained_theta
        losses = [r.accuracy_loss for r in res.trace]
        assert losses == sorted(losses, reverse=True)
        expected = np.argsort(-hinge_losses(res.pretrained_theta, pool.candidates.X, pool.candidates.y),
                              kind="stable")[:len(losses)]
        assert res.chosen == expected.tolist()
