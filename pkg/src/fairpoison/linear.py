"""Linear SVM: scores, hinge and linear losses, subgradients, penalised training.

Labels live in {0, 1}; losses use the signed label ``2y - 1``. A decision
value of exactly zero predicts 1, and the hinge subgradient at margin exactly
1 is zero.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import Dataset, FairnessNotion, ModelParams, Sample
from .errors import DimensionMismatch, NumericError


def _check_dim(theta: ModelParams, d: int):
    if theta.dim != d:
        raise DimensionMismatch(f"parameters have d={theta.dim}, input has d={d}")


def signed(y) -> np.ndarray:
    return 2 * np.asarray(y, dtype=float) - 1


# -- vectorised forms ------------------------------------------------------

def decision_values(theta: ModelParams, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    _check_dim(theta, X.shape[1])
    return X @ theta.weights + theta.bias


def predictions(theta: ModelParams, X: np.ndarray) -> np.ndarray:
    return (decision_values(theta, X) >= 0).astype(np.int64)


def hinge_losses(theta: ModelParams, X: np.ndarray, y) -> np.ndarray:
    return np.maximum(0.0, 1.0 - signed(y) * decision_values(theta, X))


def linear_losses(theta: ModelParams, X: np.ndarray, y) -> np.ndarray:
    return 0.5 * (1.0 - signed(y) * decision_values(theta, X))


def mean_hinge(theta: ModelParams, d: Dataset) -> float:
    return float(np.mean(hinge_losses(theta, d.X, d.y)))


def mean_hinge_grad(theta: ModelParams, d: Dataset) -> np.ndarray:
    """Subgradient of the mean hinge loss as a ``d + 1`` vector (bias last)."""
    return PenalizedObjective(d, FairnessNotion.EO, 0.0).grad(theta.as_vector())


# -- single-sample forms -----------------------------------------------------

def decision_value(theta: ModelParams, x) -> float:
    x = np.asarray(x, dtype=float).reshape(-1)
    _check_dim(theta, x.shape[0])
    return float(x @ theta.weights + theta.bias)


def predict(theta: ModelParams, x) -> int:
    return int(decision_value(theta, x) >= 0)


def hinge_loss(theta: ModelParams, s: Sample) -> float:
    return max(0.0, 1.0 - (2 * s.label - 1) * decision_value(theta, s.features))


def linear_loss(theta: ModelParams, s: Sample) -> float:
    return 0.5 * (1.0 - (2 * s.label - 1) * decision_value(theta, s.features))


def grad_hinge(theta: ModelParams, s: Sample) -> np.ndarray:
    ys = 2 * s.label - 1
    if ys * decision_value(theta, s.features) < 1.0:
        return np.append(-ys * s.features, -ys).astype(float)
    return np.zeros(theta.dim + 1)


# -- training ----------------------------------------------------------------

@dataclass(frozen=True)
class TrainReport:
    final_params: ModelParams
    iterations: int
    objective_trace: tuple

    def __post_init__(self):
        assert len(self.objective_trace) == self.iterations


class PenalizedObjective:
    """Mean hinge loss plus ``lam`` times the relaxed fairness penalty, on flat vectors."""

    def __init__(self, d: Dataset, notion, lam: float):
        from .fairness import RelaxedPenalty

        self.Xb = np.column_stack([d.X, np.ones(len(d))])
        self.ys = signed(d.y)
        self.n = len(d)
        self.lam = float(lam)
        self.penalty = RelaxedPenalty(d, notion) if self.lam else None

    def decision(self, v: np.ndarray) -> np.ndarray:
        return self.Xb @ v

    def value(self, v: np.ndarray, dv: np.ndarray | None = None) -> float:
        if dv is None:
            dv = self.decision(v)
        obj = float(np.mean(np.maximum(0.0, 1.0 - self.ys * dv)))
        if self.penalty is not None:
            obj += self.lam * self.penalty.value(v)
        return obj

    def grad(self, v: np.ndarray, dv: np.ndarray | None = None) -> np.ndarray:
        if dv is None:
            dv = self.decision(v)
        coef = np.where(self.ys * dv < 1.0, -self.ys, 0.0)
        g = coef @ self.Xb / self.n
        if self.penalty is not None:
            g = g + self.lam * self.penalty.grad(v)
        return g

    def step(self, v: np.ndarray, eta: float, dv: np.ndarray | None = None) -> np.ndarray:
        out = v - eta * self.grad(v, dv)
        if not np.all(np.isfinite(out)):
            raise NumericError("parameters diverged to non-finite values")
        return out


def penalized_objective(theta: ModelParams, d: Dataset, notion, lam: float) -> float:
    return PenalizedObjective(d, FairnessNotion.parse(notion), lam).value(theta.as_vector())


def penalized_step(theta: ModelParams, d: Dataset, notion, lam: float, eta: float) -> ModelParams:
    """One full-batch subgradient step on mean hinge + lam * relaxed penalty."""
    obj = PenalizedObjective(d, FairnessNotion.parse(notion), lam)
    return ModelParams.from_vector(obj.step(theta.as_vector(), eta))


def train_penalized(d: Dataset, notion: FairnessNotion | str = FairnessNotion.EO,
                    lam: float = 5.0, eta: float = 0.001, iters: int = 2000,
                    init: ModelParams | None = None) -> TrainReport:
    notion = FairnessNotion.parse(notion)
    theta = init if init is not None else ModelParams.zeros(d.dim)
    _check_dim(theta, d.dim)
    obj = PenalizedObjective(d, notion, lam)
    v = theta.as_vector()
    dv = obj.decision(v)
    trace = []
    for _ in range(int(iters)):
        v = obj.step(v, eta, dv)
        dv = obj.decision(v)
        trace.append(obj.value(v, dv))
    final = ModelParams.from_vector(v) if iters else theta
    return TrainReport(final, int(iters), tuple(trace))


def fit_svm(d: Dataset, eta: float = 0.001, iters: int = 2000) -> ModelParams:
    """Unpenalised subgradient SVM from zero initialisation."""
    return train_penalized(d, FairnessNotion.EO, 0.0, eta, iters).final_params


def accuracy(theta: ModelParams, d: Dataset) -> float:
    return float(np.mean(predictions(theta, d.X) == d.y))
