"""Labelled sub-seed derivation.

Every stage draws from ``stage_rng(seed, "label", ...)`` so reordering stages
never reshuffles another stage's randomness.
"""
import hashlib

import numpy as np


def _label_key(label) -> int:
    return int.from_bytes(hashlib.sha256(str(label).encode()).digest()[:8], "little")


def stage_rng(seed: int, *labels) -> np.random.Generator:
    entropy = [int(seed) & (2**64 - 1)] + [_label_key(lab) for lab in labels]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def derive_seed(seed: int, *labels) -> int:
    return int(stage_rng(seed, *labels).integers(0, 2**63 - 1))
