"""Small synthetic fairness benchmark.

Two informative features, one binary feature, and a binary sensitive
attribute correlated with the label. Clean and test data are iid draws; the
attack pool mixes iid points with hard examples taken from the high-loss end
of an SVM fit on the whole population, as in the loss-ranked split protocol.
"""
from __future__ import annotations

import numpy as np

from ._rng import stage_rng
from .data import SplitResult, preprocess
from .domain import Dataset
from .linear import fit_svm, hinge_losses

FEATURES = ("x1", "x2", "b")

# the committed acceptance fixture: Student-t(3) noise gives the pool a few
# high-leverage points; features depend on s only through the label
ACCEPTANCE = {"seed": 0, "noise_df": 3.0, "group_shift": 0.0}


def make_population(n: int = 1500, seed: int = 0, label_rate=(0.35, 0.65),
                    separation: float = 1.0, group_shift: float = 0.5,
                    noise_df: float | None = None) -> Dataset:
    """Raw (unscaled) population; ``label_rate[s]`` is P(y=1 | s).

    ``noise_df`` switches the feature noise from Gaussian to Student-t.
    """
    rng = stage_rng(seed, "population")
    s = (rng.random(n) < 0.5).astype(np.int64)
    y = (rng.random(n) < np.asarray(label_rate)[s]).astype(np.int64)
    ys = 2 * y - 1

    def noise():
        return rng.normal(size=n) if noise_df is None else rng.standard_t(noise_df, size=n)

    x1 = separation * ys + group_shift * (2 * s - 1) + noise()
    x2 = 0.5 * separation * ys + noise()
    b = (rng.random(n) < np.where(y == 1, 0.7, 0.3)).astype(float)
    X = np.column_stack([x1, x2, b])
    return Dataset(X, s, y, FEATURES, frozenset({2}))


def make_fixture(seed: int = 0, n_clean: int = 200, n_pool_easy: int = 60, n_pool_hard: int = 200,
                 n_test: int = 400, population: int = 3000, easy_fraction: float = 0.6,
                 **population_kw) -> SplitResult:
    """Clean and test sets are iid draws; the pool adds hard examples to iid ones.

    Hardness is judged by an SVM fit on the whole (standardised) population:
    hard examples are drawn from its highest-loss ``1 - easy_fraction`` share.
    """
    pop = preprocess(make_population(population, seed, **population_kw))
    losses = hinge_losses(fit_svm(pop), pop.X, pop.y)
    order = np.argsort(losses, kind="stable")
    n_easy = int(easy_fraction * len(pop))
    rng = stage_rng(seed, "fixture")
    hard = rng.permutation(order[n_easy:])[:n_pool_hard]
    rest = rng.permutation(np.setdiff1d(np.arange(len(pop)), hard))
    c_idx = rest[:n_clean]
    k_idx = rest[n_clean:n_clean + n_pool_easy]
    t_idx = rest[n_clean + n_pool_easy:n_clean + n_pool_easy + n_test]
    if len(t_idx) < n_test or len(hard) < n_pool_hard:
        raise ValueError("population too small for the requested fixture sizes")
    flags = np.r_[np.zeros(len(k_idx), bool), np.ones(len(hard), bool)]
    return SplitResult(pop.subset(c_idx), pop.subset(np.concatenate([k_idx, hard])),
                       pop.subset(t_idx), flags)


def acceptance_fixture() -> SplitResult:
    """200 clean, 260 pool (200 hard), 400 test."""
    return make_fixture(**ACCEPTANCE)
