"""Online greedy poisoning against a fairness-penalised linear SVM.

The attacker pretrains the victim's penalised model on the clean data, then
repeatedly picks the pool candidate maximising

    alpha * hinge(theta; x, y) + (1 - alpha) * gamma * gap(theta; D_c + D_p + {(x, y)})

adds it to the poison set and takes one penalised subgradient step on the
enlarged training set. ``alpha = 1, lam = 0`` is the plain loss-only attack.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .domain import AttackConfig, Dataset, ModelParams
from .errors import NumericError, PoolExhausted
from .fairness import GapTracker, empirical_gap, require_groups
from .linear import PenalizedObjective, hinge_losses, mean_hinge, train_penalized
from .pools import PoisonPool

GAMMA_FLOOR = 1e-6


@dataclass(frozen=True)
class TraceRecord:
    t: int
    candidate: int           # index into the original pool
    accuracy_loss: float
    fairness_empirical: float
    fairness_relaxed: float
    combined_score: float
    objective: float         # penalised objective after the update


@dataclass(frozen=True)
class GammaValue:
    value: float
    mode: str  # "auto" | "fixed"


@dataclass(eq=True)
class AttackResult:
    poison_set: Dataset
    final_theta: ModelParams
    pretrained_theta: ModelParams
    gamma: GammaValue
    trace: list
    # candidate scores per iteration, aligned with `remaining`; only with record_scores
    scores: list | None = field(default=None, compare=False, repr=False)
    remaining: list | None = field(default=None, compare=False, repr=False)
    # wall-clock seconds of the pretraining and greedy phases
    timings: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def chosen(self) -> list:
        return [r.candidate for r in self.trace]


def poison_count(n: int, epsilon: float) -> int:
    return max(1, math.floor(epsilon * n))


def resolve_gamma(config: AttackConfig, theta: ModelParams, dc: Dataset) -> GammaValue:
    if config.gamma != "auto":
        return GammaValue(float(config.gamma), "fixed")
    gap = empirical_gap(theta, dc, config.notion)
    return GammaValue(mean_hinge(theta, dc) / max(gap, GAMMA_FLOOR), "auto")


def run_pfml(dc: Dataset, pool: PoisonPool, config: AttackConfig) -> AttackResult:
    notion, alpha, lam, eta = config.notion, config.alpha, config.lam, config.eta
    n = len(dc)
    k = poison_count(n, config.epsilon)
    if k > len(pool):
        raise PoolExhausted(f"need {k} poisoning points but the pool holds {len(pool)}")
    require_groups(dc, notion, empirical=True)

    start = time.perf_counter()
    theta = train_penalized(dc, notion, lam, eta, config.pretrain_iters).final_params
    pretrained = theta
    pretrain_done = time.perf_counter()
    gamma = resolve_gamma(config, theta, dc)
    fair_weight = (1.0 - alpha) * gamma.value

    cand = pool.candidates
    remaining = np.arange(len(pool))
    picked: list[int] = []
    train = dc
    tracker = GapTracker.empty(notion)
    trace, all_scores, all_remaining = [], [], []
    for t in range(1, k + 1):
        tracker = tracker.refresh(theta, train)
        Xr, sr, yr = cand.X[remaining], cand.s[remaining], cand.y[remaining]
        acc = hinge_losses(theta, Xr, yr)
        gap, relaxed = tracker.query_many(theta, Xr, sr, yr)
        scores = alpha * acc + fair_weight * gap
        if not np.all(np.isfinite(scores)):
            raise NumericError(f"non-finite candidate score at iteration {t}")
        j = int(np.argmax(scores))  # first maximum: lowest pool index wins ties
        if config.record_scores:
            all_scores.append(scores)
            all_remaining.append(remaining.copy())
        chosen = int(remaining[j])
        picked.append(chosen)
        remaining = np.delete(remaining, j)
        train = train.concat(cand.subset([chosen]))

        objective = PenalizedObjective(train, notion, lam)
        v = objective.step(theta.as_vector(), eta)
        theta = ModelParams.from_vector(v)
        obj = objective.value(v)
        trace.append(TraceRecord(t, chosen, float(acc[j]), float(gap[j]), float(relaxed[j]),
                                 float(scores[j]), obj))

    end = time.perf_counter()
    return AttackResult(cand.subset(picked), theta, pretrained, gamma, trace,
                        all_scores if config.record_scores else None,
                        all_remaining if config.record_scores else None,
                        {"pretrain": pretrain_done - start, "greedy": end - pretrain_done})


def run_online_accuracy(dc: Dataset, pool: PoisonPool, config: AttackConfig) -> AttackResult:
    """Loss-only greedy attack: no fairness term in selection or in the updates."""
    return run_pfml(dc, pool, config.replace(alpha=1.0, lam=0.0))


def score_candidate(theta: ModelParams, c, tracker: GapTracker, alpha: float, gamma: float) -> float:
    acc = float(hinge_losses(theta, c.features[None, :], [c.label])[0])
    gap = tracker.query(theta, c).empirical_gap
    return alpha * acc + (1.0 - alpha) * gamma * gap
