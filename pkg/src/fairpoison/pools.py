"""Feasible poisoning pools for each attack variant, and the naive baselines."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._rng import stage_rng
from .domain import Dataset
from .errors import EmptyDataset, InsufficientCandidates, NoBinaryFeatures, PoolError

NONE, LABEL_FLIPPED, FEATURE_FLIPPED = "none", "label_flipped", "feature_flipped"


@dataclass(frozen=True)
class Provenance:
    origin: int
    mutation: str = NONE
    feature: int | None = None


@dataclass(frozen=True, eq=False)
class PoisonPool:
    candidates: Dataset
    provenance: tuple

    def __len__(self):
        return len(self.candidates)

    def __eq__(self, other):
        if not isinstance(other, PoisonPool):
            return NotImplemented
        return self.candidates == other.candidates and self.provenance == other.provenance

    __hash__ = None

    def restore(self) -> Dataset:
        """Undo every mutation, giving back the source candidate set."""
        X = np.array(self.candidates.X)
        y = np.array(self.candidates.y)
        for i, p in enumerate(self.provenance):
            if p.mutation == LABEL_FLIPPED:
                y[i] = 1 - y[i]
            elif p.mutation == FEATURE_FLIPPED:
                X[i, p.feature] = 1.0 - X[i, p.feature]
        order = np.argsort([p.origin for p in self.provenance], kind="stable")
        restored = Dataset(X, self.candidates.s, y, self.candidates.feature_names,
                           self.candidates.binary_features)
        return restored.subset(order)


def _nonempty(dk: Dataset):
    if len(dk) == 0:
        raise EmptyDataset("attack candidate set is empty")


def round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def build_as(dk: Dataset) -> PoisonPool:
    _nonempty(dk)
    return PoisonPool(dk, tuple(Provenance(i) for i in range(len(dk))))


def build_af(dk: Dataset, flip_fraction: float = 0.15, seed: int = 0) -> PoisonPool:
    _nonempty(dk)
    if not 0.0 <= flip_fraction <= 1.0:
        raise PoolError(f"flip_fraction must lie in [0, 1], got {flip_fraction}")
    k = round_half_up(flip_fraction * len(dk))
    chosen = stage_rng(seed, "pool-af").choice(len(dk), size=k, replace=False)
    flip = np.zeros(len(dk), dtype=bool)
    flip[chosen] = True
    y = np.where(flip, 1 - dk.y, dk.y)
    prov = tuple(Provenance(i, LABEL_FLIPPED if flip[i] else NONE) for i in range(len(dk)))
    return PoisonPool(dk.with_labels(y), prov)


def build_am(dk: Dataset, seed: int = 0, exclude=()) -> PoisonPool:
    """Complement one randomly chosen binary feature of every candidate.

    Columns in ``exclude`` (e.g. a copy of the sensitive attribute kept as a
    feature) are never touched.
    """
    _nonempty(dk)
    allowed = sorted(set(dk.binary_features) - set(exclude))
    if not allowed:
        raise NoBinaryFeatures("adversarial feature modification needs a binary feature")
    picks = stage_rng(seed, "pool-am").integers(0, len(allowed), size=len(dk))
    cols = np.asarray(allowed)[picks]
    X = np.array(dk.X)
    rows = np.arange(len(dk))
    X[rows, cols] = 1.0 - X[rows, cols]
    prov = tuple(Provenance(i, FEATURE_FLIPPED, int(cols[i])) for i in range(len(dk)))
    return PoisonPool(Dataset(X, dk.s, dk.y, dk.feature_names, dk.binary_features), prov)


def build_pool(dk: Dataset, variant: str, seed: int = 0, flip_fraction: float = 0.15,
               exclude=()) -> PoisonPool:
    variant = variant.upper().replace("PFML-", "")
    if variant == "AS":
        return build_as(dk)
    if variant == "AF":
        return build_af(dk, flip_fraction, seed)
    if variant == "AM":
        return build_am(dk, seed, exclude)
    raise PoolError(f"unknown attack variant {variant!r}")


BASELINES = ("RS", "LF", "HE")


def baseline_select(dk: Dataset, kind: str, count: int, hard_flags=None, seed: int = 0) -> Dataset:
    """Random sampling, random sampling with flipped labels, or random hard examples."""
    kind = kind.upper()
    if kind not in BASELINES:
        raise PoolError(f"unknown baseline {kind!r}")
    if count > len(dk):
        raise InsufficientCandidates(f"asked for {count} of {len(dk)} candidates")
    rng = stage_rng(seed, "baseline", kind)
    if kind == "HE":
        flags = np.zeros(len(dk), bool) if hard_flags is None else np.asarray(hard_flags, bool)
        eligible = np.flatnonzero(flags)
        if count > len(eligible):
            raise InsufficientCandidates(f"asked for {count} hard examples, {len(eligible)} flagged")
        return dk.subset(rng.choice(eligible, size=count, replace=False))
    picked = dk.subset(rng.choice(len(dk), size=count, replace=False))
    if kind == "LF":
        picked = picked.with_labels(1 - picked.y)
    return picked
