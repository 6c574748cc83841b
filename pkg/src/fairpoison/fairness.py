"""Group fairness gaps, their convex surrogates, and an incremental tracker.

Empirical gaps count predictions per sensitive group (DP) or per (label,
group) cell (EO). The surrogates are the sensitive-attribute / signed-distance
covariance (DP) and half the summed gap in per-cell mean linear loss (EO).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import Dataset, FairnessNotion, ModelParams, Sample
from .errors import EmptyDataset, EmptyGroup
from .linear import decision_values, signed


def require_groups(d: Dataset, notion: FairnessNotion, empirical: bool = False):
    notion = FairnessNotion.parse(notion)
    if len(d) == 0:
        raise EmptyDataset("fairness terms need a nonempty dataset")
    counts = d.group_counts()
    if notion is FairnessNotion.EO:
        if (counts == 0).any():
            missing = [(y, s) for y in (0, 1) for s in (0, 1) if counts[y, s] == 0]
            raise EmptyGroup(f"empty (label, sensitive) cells: {missing}")
    elif empirical and (counts.sum(axis=0) == 0).any():
        raise EmptyGroup("one sensitive group is empty")


def _rates_gap_dp(pos: np.ndarray, n_s: np.ndarray) -> np.ndarray:
    # pos, n_s: (..., 2) indexed by s
    return np.abs(pos[..., 1] / n_s[..., 1] - pos[..., 0] / n_s[..., 0])


def _rates_gap_eo(mis: np.ndarray, n_ys: np.ndarray) -> np.ndarray:
    # mis, n_ys: (..., 2, 2) indexed [y, s]
    rates = mis / n_ys
    return np.max(np.abs(rates[..., 0] - rates[..., 1]), axis=-1)


def _eo_relaxed_from(loss_sums: np.ndarray, n_ys: np.ndarray) -> np.ndarray:
    risk = loss_sums / n_ys
    return 0.5 * np.sum(np.abs(risk[..., 0] - risk[..., 1]), axis=-1)


def _dp_relaxed_from(sum_sd, sum_s, sum_d, total):
    return sum_sd / total - (sum_s / total) * (sum_d / total)


def dp_gap(theta: ModelParams, d: Dataset) -> float:
    require_groups(d, FairnessNotion.DP, empirical=True)
    pred = decision_values(theta, d.X) >= 0
    pos = np.array([np.sum(pred & (d.s == g)) for g in (0, 1)])
    n_s = np.array([np.sum(d.s == g) for g in (0, 1)])
    return float(_rates_gap_dp(pos, n_s))


def eo_gap(theta: ModelParams, d: Dataset) -> float:
    require_groups(d, FairnessNotion.EO)
    wrong = (decision_values(theta, d.X) >= 0).astype(np.int64) != d.y
    mis = np.zeros((2, 2), dtype=np.int64)
    np.add.at(mis, (d.y, d.s), wrong.astype(np.int64))
    return float(_rates_gap_eo(mis, d.group_counts()))


def dp_relaxed(theta: ModelParams, d: Dataset) -> float:
    """Signed covariance between the sensitive attribute and the decision value."""
    if len(d) == 0:
        raise EmptyDataset("covariance needs a nonempty dataset")
    s = d.s.astype(float)
    return float(np.mean((s - s.mean()) * decision_values(theta, d.X)))


def eo_relaxed(theta: ModelParams, d: Dataset) -> float:
    require_groups(d, FairnessNotion.EO)
    sums = np.zeros((2, 2))
    np.add.at(sums, (d.y, d.s), 0.5 * (1.0 - signed(d.y) * decision_values(theta, d.X)))
    return float(_eo_relaxed_from(sums, d.group_counts()))


def empirical_gap(theta: ModelParams, d: Dataset, notion) -> float:
    return dp_gap(theta, d) if FairnessNotion.parse(notion) is FairnessNotion.DP else eo_gap(theta, d)


def relaxed_value(theta: ModelParams, d: Dataset, notion) -> float:
    return dp_relaxed(theta, d) if FairnessNotion.parse(notion) is FairnessNotion.DP else eo_relaxed(theta, d)


def penalty_value(theta: ModelParams, d: Dataset, notion) -> float:
    """The non-negative penalty used in training: ``|cov|`` for DP, the EO surrogate as is."""
    return abs(relaxed_value(theta, d, notion))


class RelaxedPenalty:
    """The relaxed penalty of a fixed dataset as a function of ``(weights, bias)``.

    Both surrogates have the form ``sum_k c_k * |a_k . theta|``: one term (the
    covariance) for DP, one term per label for EO (the constant parts of the
    two cell risks cancel). The directions ``a_k`` are computed once.
    """

    def __init__(self, d: Dataset, notion):
        notion = FairnessNotion.parse(notion)
        self.notion = notion
        if notion is FairnessNotion.DP:
            if len(d) == 0:
                raise EmptyDataset("covariance needs a nonempty dataset")
            centred = d.s - d.s.mean()
            self.directions = (np.append(centred @ d.X, centred.sum()) / len(d))[None, :]
            self.coefs = np.ones(1)
        else:
            require_groups(d, notion)
            rows = []
            for y in (0, 1):
                means = [d.X[(d.y == y) & (d.s == g)].mean(axis=0) for g in (0, 1)]
                rows.append(np.append(-0.5 * (2 * y - 1) * (means[0] - means[1]), 0.0))
            self.directions = np.array(rows)
            self.coefs = np.full(2, 0.5)

    def inner(self, v: np.ndarray) -> np.ndarray:
        return self.directions @ v

    def value(self, v: np.ndarray) -> float:
        return float(self.coefs @ np.abs(self.inner(v)))

    def grad(self, v: np.ndarray) -> np.ndarray:
        return (self.coefs * np.sign(self.inner(v))) @ self.directions


def grad_relaxed(theta: ModelParams, d: Dataset, notion) -> np.ndarray:
    """Subgradient of the penalty w.r.t. ``(weights, bias)``; ``sign(0) = 0``."""
    return RelaxedPenalty(d, notion).grad(theta.as_vector())


@dataclass(frozen=True)
class FairnessValue:
    empirical_gap: float
    relaxed_value: float


@dataclass(frozen=True, eq=False)
class GapTracker:
    """Per-cell sufficient statistics of ``(theta, D)``.

    After :meth:`refresh`, the gaps of ``D`` plus any single candidate follow
    from the stored aggregates in O(1) once the candidate's own score is known.
    """

    notion: FairnessNotion
    group_counts: np.ndarray          # [y, s]
    positive_pred_counts: np.ndarray  # [s]
    misclassified_counts: np.ndarray  # [y, s]
    linear_loss_sums: np.ndarray      # [y, s]
    sum_s: float = 0.0
    sum_d: float = 0.0
    sum_s_times_d: float = 0.0
    total: int = 0

    @classmethod
    def empty(cls, notion) -> "GapTracker":
        return cls(FairnessNotion.parse(notion), np.zeros((2, 2), np.int64), np.zeros(2, np.int64),
                   np.zeros((2, 2), np.int64), np.zeros((2, 2)))

    @classmethod
    def build(cls, notion, theta: ModelParams, d: Dataset) -> "GapTracker":
        return cls.empty(notion).refresh(theta, d)

    def refresh(self, theta: ModelParams, d: Dataset) -> "GapTracker":
        dv = decision_values(theta, d.X) if len(d) else np.zeros(0)
        pred = (dv >= 0).astype(np.int64)
        pos = np.zeros(2, np.int64)
        np.add.at(pos, d.s, pred)
        mis = np.zeros((2, 2), np.int64)
        np.add.at(mis, (d.y, d.s), (pred != d.y).astype(np.int64))
        sums = np.zeros((2, 2))
        np.add.at(sums, (d.y, d.s), 0.5 * (1.0 - signed(d.y) * dv))
        s = d.s.astype(float)
        return GapTracker(self.notion, d.group_counts(), pos, mis, sums,
                          float(s.sum()), float(dv.sum()), float(s @ dv), len(d))

    def query_many(self, theta: ModelParams, X, s, y) -> tuple[np.ndarray, np.ndarray]:
        """Empirical gaps and surrogate values of the base set plus each candidate row."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        s = np.asarray(s, dtype=np.int64).reshape(-1)
        y = np.asarray(y, dtype=np.int64).reshape(-1)
        m = len(s)
        dv = decision_values(theta, X)
        pred = (dv >= 0).astype(np.int64)
        cell = np.zeros((m, 2, 2), np.int64)
        cell[np.arange(m), y, s] = 1
        n_ys = self.group_counts + cell
        if self.notion is FairnessNotion.DP:
            one_s = cell.sum(axis=1)
            n_s = n_ys.sum(axis=1)
            if (n_s == 0).any():
                raise EmptyGroup("one sensitive group is empty even with the candidate")
            gap = _rates_gap_dp(self.positive_pred_counts + one_s * pred[:, None], n_s)
            total = self.total + 1
            relaxed = _dp_relaxed_from(self.sum_s_times_d + s * dv, self.sum_s + s,
                                       self.sum_d + dv, total)
        else:
            if (n_ys == 0).any():
                raise EmptyGroup("a (label, sensitive) cell is empty even with the candidate")
            wrong = (pred != y).astype(np.int64)
            gap = _rates_gap_eo(self.misclassified_counts + cell * wrong[:, None, None], n_ys)
            lin = 0.5 * (1.0 - signed(y) * dv)
            relaxed = _eo_relaxed_from(self.linear_loss_sums + cell * lin[:, None, None], n_ys)
        return np.asarray(gap, dtype=float), np.asarray(relaxed, dtype=float)

    def query(self, theta: ModelParams, candidate: Sample | None = None) -> FairnessValue:
        if candidate is None:
            return self._query_base()
        gap, relaxed = self.query_many(theta, candidate.features[None, :],
                                       [candidate.sensitive], [candidate.label])
        return FairnessValue(float(gap[0]), float(relaxed[0]))

    def _query_base(self) -> FairnessValue:
        if self.notion is FairnessNotion.DP:
            n_s = self.group_counts.sum(axis=0)
            if self.total == 0:
                raise EmptyDataset("tracker holds no samples")
            if (n_s == 0).any():
                raise EmptyGroup("one sensitive group is empty")
            return FairnessValue(float(_rates_gap_dp(self.positive_pred_counts, n_s)),
                                 float(_dp_relaxed_from(self.sum_s_times_d, self.sum_s,
                                                        self.sum_d, self.total)))
        if (self.group_counts == 0).any():
            raise EmptyGroup("a (label, sensitive) cell is empty")
        return FairnessValue(float(_rates_gap_eo(self.misclassified_counts, self.group_counts)),
                             float(_eo_relaxed_from(self.linear_loss_sums, self.group_counts)))


def tracker_refresh(t: GapTracker, theta: ModelParams, d: Dataset) -> GapTracker:
    return t.refresh(theta, d)


def tracker_query_with_candidate(t: GapTracker, theta: ModelParams, c: Sample) -> FairnessValue:
    return t.query(theta, c)
