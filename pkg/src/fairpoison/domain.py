"""Core value types: samples, datasets, linear parameters and attack settings.

Everything here is immutable after construction. Arrays are copied on the way
in and flagged read-only, so a ``Dataset`` can be shared freely.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence, Union

import numpy as np

from .errors import (ConfigError, DimensionMismatch, EmptyDataset, NonBinaryColumn,
                     NonFiniteValue)


def _frozen(a, dtype) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.flags.writeable = False
    return out


class FairnessNotion(str, enum.Enum):
    DP = "dp"
    EO = "eo"

    @classmethod
    def parse(cls, value) -> "FairnessNotion":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"dp": cls.DP, "demographic_parity": cls.DP, "demographicparity": cls.DP,
                   "eo": cls.EO, "equalized_odds": cls.EO, "equalizedodds": cls.EO}
        if key not in aliases:
            raise ConfigError(f"unknown fairness notion {value!r}")
        return aliases[key]


@dataclass(frozen=True, eq=False)
class Sample:
    features: np.ndarray
    sensitive: int
    label: int

    def __post_init__(self):
        object.__setattr__(self, "features", _frozen(self.features, float))
        object.__setattr__(self, "sensitive", int(self.sensitive))
        object.__setattr__(self, "label", int(self.label))

    def __eq__(self, other):
        if not isinstance(other, Sample):
            return NotImplemented
        return (self.sensitive == other.sensitive and self.label == other.label
                and np.array_equal(self.features, other.features))

    def __hash__(self):
        return hash((self.features.tobytes(), self.sensitive, self.label))


@dataclass(frozen=True, eq=False)
class Dataset:
    """Column-oriented collection of samples.

    ``X`` is ``(n, d)``; ``s`` and ``y`` are length-``n`` integer vectors. Row
    order is insertion order and is what every tie-break refers to.
    """

    X: np.ndarray
    s: np.ndarray
    y: np.ndarray
    feature_names: tuple = ()
    binary_features: frozenset = frozenset()

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1 and X.size == 0:
            X = X.reshape(0, 0)
        if X.ndim != 2:
            raise DimensionMismatch(f"features must be 2-D, got shape {X.shape}")
        object.__setattr__(self, "X", _frozen(X, float))
        object.__setattr__(self, "s", _frozen(np.asarray(self.s).reshape(-1), np.int64))
        object.__setattr__(self, "y", _frozen(np.asarray(self.y).reshape(-1), np.int64))
        if not (len(self.s) == len(self.y) == X.shape[0]):
            raise DimensionMismatch(
                f"row counts differ: X={X.shape[0]}, s={len(self.s)}, y={len(self.y)}")
        names = tuple(self.feature_names) or tuple(f"x{j}" for j in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise DimensionMismatch(f"{len(names)} feature names for {X.shape[1]} columns")
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "binary_features", frozenset(int(j) for j in self.binary_features))

    @classmethod
    def from_samples(cls, samples: Iterable[Sample], feature_names: Sequence[str] = (),
                     binary_features: Iterable[int] = (), dim: int | None = None) -> "Dataset":
        samples = list(samples)
        dims = {len(smp.features) for smp in samples}
        if len(dims) > 1:
            raise DimensionMismatch(f"ragged feature vectors: dimensions {sorted(dims)}")
        d = dims.pop() if dims else (dim if dim is not None else len(feature_names))
        X = np.array([smp.features for smp in samples], dtype=float).reshape(len(samples), d)
        return cls(X, [smp.sensitive for smp in samples], [smp.label for smp in samples],
                   tuple(feature_names), frozenset(binary_features))

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.X.shape[0]

    def __getitem__(self, i: int) -> Sample:
        return Sample(self.X[i], self.s[i], self.y[i])

    def __iter__(self) -> Iterator[Sample]:
        for i in range(len(self)):
            yield self[i]

    @property
    def samples(self) -> list:
        return list(self)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (np.array_equal(self.X, other.X) and np.array_equal(self.s, other.s)
                and np.array_equal(self.y, other.y)
                and self.feature_names == other.feature_names
                and self.binary_features == other.binary_features)

    __hash__ = None

    def _like(self, X, s, y) -> "Dataset":
        return Dataset(X, s, y, self.feature_names, self.binary_features)

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return self._like(self.X[idx], self.s[idx], self.y[idx])

    def concat(self, other: "Dataset") -> "Dataset":
        if other.dim != self.dim:
            raise DimensionMismatch(f"cannot concatenate d={self.dim} with d={other.dim}")
        return self._like(np.vstack([self.X, other.X]),
                          np.concatenate([self.s, other.s]),
                          np.concatenate([self.y, other.y]))

    def with_labels(self, y) -> "Dataset":
        return self._like(self.X, self.s, y)

    def empty_like(self) -> "Dataset":
        return self._like(np.zeros((0, self.dim)), [], [])

    def group_counts(self) -> np.ndarray:
        """2x2 integer matrix indexed ``[y, s]``."""
        counts = np.zeros((2, 2), dtype=np.int64)
        np.add.at(counts, (self.y, self.s), 1)
        return counts


def validate_dataset(d: Dataset) -> None:
    """Raise unless every Dataset invariant holds."""
    if len(d) == 0:
        raise EmptyDataset("dataset has no samples")
    if d.dim < 1:
        raise DimensionMismatch("feature dimension must be at least 1")
    if not np.all(np.isfinite(d.X)):
        raise NonFiniteValue("feature matrix contains non-finite values")
    for name, col in (("sensitive", d.s), ("label", d.y)):
        if not np.isin(col, (0, 1)).all():
            raise NonBinaryColumn(f"{name} column contains values outside {{0,1}}")
    for j in sorted(d.binary_features):
        if not 0 <= j < d.dim:
            raise DimensionMismatch(f"binary feature index {j} out of range for d={d.dim}")
        if not np.isin(d.X[:, j], (0.0, 1.0)).all():
            raise NonBinaryColumn(f"declared binary column {j} ({d.feature_names[j]}) "
                                  "contains values outside {0,1}")


@dataclass(frozen=True, eq=False)
class ModelParams:
    weights: np.ndarray
    bias: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "weights", _frozen(np.asarray(self.weights).reshape(-1), float))
        object.__setattr__(self, "bias", float(self.bias))

    @classmethod
    def zeros(cls, d: int) -> "ModelParams":
        return cls(np.zeros(d), 0.0)

    @classmethod
    def from_vector(cls, v) -> "ModelParams":
        v = np.asarray(v, dtype=float)
        return cls(v[:-1], v[-1])

    def as_vector(self) -> np.ndarray:
        return np.append(self.weights, self.bias)

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.weights)) and np.isfinite(self.bias))

    def __eq__(self, other):
        if not isinstance(other, ModelParams):
            return NotImplemented
        return np.array_equal(self.weights, other.weights) and self.bias == other.bias

    __hash__ = None

    def to_dict(self) -> dict:
        return {"weights": [float(w) for w in self.weights], "bias": self.bias}


VARIANTS = ("AS", "AF", "AM")
Gamma = Union[float, str]


@dataclass(frozen=True)
class AttackConfig:
    """Attack hyperparameters. Defaults follow the published experimental setup."""

    alpha: float = 0.5
    epsilon: float = 0.1
    lam: float = 5.0
    eta: float = 0.001
    gamma: Gamma = "auto"
    notion: FairnessNotion = FairnessNotion.EO
    variant: str = "AS"
    pretrain_iters: int = 2000
    flip_fraction: float = 0.15
    seed: int = 0
    record_scores: bool = field(default=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "notion", FairnessNotion.parse(self.notion))
        variant = str(self.variant).upper().replace("PFML-", "")
        object.__setattr__(self, "variant", variant)
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not self.lam >= 0.0:
            raise ConfigError(f"lambda must be non-negative, got {self.lam}")
        if not self.eta > 0.0:
            raise ConfigError(f"eta must be positive, got {self.eta}")
        if isinstance(self.gamma, str):
            if self.gamma.lower() != "auto":
                raise ConfigError(f"gamma must be 'auto' or a positive number, got {self.gamma!r}")
            object.__setattr__(self, "gamma", "auto")
        elif not float(self.gamma) > 0.0:
            raise ConfigError(f"gamma must be positive, got {self.gamma}")
        if variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if int(self.pretrain_iters) < 1:
            raise ConfigError("pretrain_iters must be a positive integer")
        if not 0.0 <= self.flip_fraction <= 1.0:
            raise ConfigError(f"flip_fraction must lie in [0, 1], got {self.flip_fraction}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")

    def replace(self, **changes) -> "AttackConfig":
        from dataclasses import replace
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "epsilon": self.epsilon, "lambda": self.lam,
                "eta": self.eta, "gamma": self.gamma, "notion": self.notion.value,
                "variant": self.variant, "pretrain_iters": self.pretrain_iters,
                "flip_fraction": self.flip_fraction, "seed": self.seed}
