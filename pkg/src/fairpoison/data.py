"""CSV ingestion, standardisation, and the loss-ranked clean/attack/test split."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._rng import stage_rng
from .domain import Dataset, validate_dataset
from .errors import (ConfigError, GroupCoverageUnsatisfiable, MissingColumn, NonBinaryColumn,
                     ParseError, TooSmall)
from .linear import fit_svm, hinge_losses

ROLES = ("clean", "attack", "attack_hard", "test")


def _parse_float(text: str, row: int, column: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ParseError(row, column, f"cannot parse {text!r} as a number") from None
    if not math.isfinite(v):
        raise ParseError(row, column, f"non-finite value {text!r}")
    return v


def read_table(path, sensitive_column: str = "sensitive", label_column: str = "label",
               extra_columns=()) -> tuple[Dataset, dict]:
    """Parse a CSV into a Dataset; columns named in ``extra_columns`` are returned as text."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(1, "", "file is empty") from None
        rows = list(reader)
    for col in (sensitive_column, label_column):
        if col not in header:
            raise MissingColumn(f"column {col!r} not found in {path}")
    extra = [c for c in extra_columns if c in header]
    feature_cols = [c for c in header if c not in (sensitive_column, label_column, *extra)]
    idx = {c: i for i, c in enumerate(header)}
    X = np.zeros((len(rows), len(feature_cols)))
    s = np.zeros(len(rows), dtype=np.int64)
    y = np.zeros(len(rows), dtype=np.int64)
    extras = {c: [] for c in extra}
    for r, row in enumerate(rows):
        line = r + 2
        if len(row) != len(header):
            raise ParseError(line, "", f"expected {len(header)} fields, found {len(row)}")
        for j, c in enumerate(feature_cols):
            X[r, j] = _parse_float(row[idx[c]], line, c)
        for c, out in ((sensitive_column, s), (label_column, y)):
            v = _parse_float(row[idx[c]], line, c)
            if v not in (0.0, 1.0):
                raise NonBinaryColumn(f"column {c!r} row {line}: value {row[idx[c]]!r} is not 0/1")
            out[r] = int(v)
        for c in extra:
            extras[c].append(row[idx[c]].strip())
    binary = {j for j in range(len(feature_cols)) if np.isin(X[:, j], (0.0, 1.0)).all()}
    return Dataset(X, s, y, tuple(feature_cols), frozenset(binary)), extras


def load_csv(path, sensitive_column: str = "sensitive", label_column: str = "label") -> Dataset:
    return read_table(path, sensitive_column, label_column)[0]


def write_csv(path, d: Dataset, sensitive_column: str = "sensitive", label_column: str = "label",
              roles=None):
    header = [*d.feature_names, sensitive_column, label_column]
    if roles is not None:
        header.append("role")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(len(d)):
            row = [repr(float(v)) for v in d.X[i]] + [int(d.s[i]), int(d.y[i])]
            if roles is not None:
                row.append(roles[i])
            w.writerow(row)


def preprocess(d: Dataset, standardize: bool = True) -> Dataset:
    """Zero-mean, unit-variance scaling of the non-binary feature columns."""
    if not standardize or len(d) == 0:
        return d
    X = np.array(d.X)
    for j in range(d.dim):
        if j in d.binary_features:
            continue
        sd = X[:, j].std()
        if sd > 0:
            X[:, j] = (X[:, j] - X[:, j].mean()) / sd
    return Dataset(X, d.s, d.y, d.feature_names, d.binary_features)


@dataclass(frozen=True)
class SplitSpec:
    clean_ratio: int = 4
    attack_ratio: int = 1
    test_ratio: int = 1
    easy_fraction: float = 0.6
    seed: int = 0
    max_attempts: int = 100

    def __post_init__(self):
        if min(self.clean_ratio, self.attack_ratio, self.test_ratio) <= 0:
            raise ConfigError("split ratios must be positive")
        if not 0.0 < self.easy_fraction < 1.0:
            raise ConfigError("easy_fraction must lie in (0, 1)")


@dataclass(frozen=True, eq=False)
class SplitResult:
    d_c: Dataset
    d_k: Dataset
    d_test: Dataset
    hard_flags: np.ndarray
    ranking_model: object = None
    attempt: int = 0

    def __post_init__(self):
        flags = np.array(self.hard_flags, dtype=bool)
        flags.flags.writeable = False
        object.__setattr__(self, "hard_flags", flags)

    def __eq__(self, other):
        # the ranking model and retry count are bookkeeping, not part of the split
        if not isinstance(other, SplitResult):
            return NotImplemented
        return (self.d_c == other.d_c and self.d_k == other.d_k and self.d_test == other.d_test
                and np.array_equal(self.hard_flags, other.hard_flags))

    __hash__ = None


def largest_remainder(total: int, weights, tie_order=None) -> list:
    """Integer apportionment of ``total`` proportional to ``weights``."""
    weights = np.asarray(weights, dtype=float)
    exact = total * weights / weights.sum()
    base = np.floor(exact).astype(int)
    rem = exact - base
    order = list(tie_order) if tie_order is not None else list(range(len(weights)))
    # larger remainder first; ties resolved by position in tie_order
    ranked = sorted(range(len(weights)), key=lambda i: (-round(rem[i], 12), order.index(i)))
    for i in ranked[: total - base.sum()]:
        base[i] += 1
    return [int(b) for b in base]


def loss_ranked_split(d: Dataset, spec: SplitSpec = SplitSpec(), eta: float = 0.001,
                      iters: int = 2000) -> SplitResult:
    """Rank by hinge loss of an SVM fit on everything; split the easy part, pool the hard part."""
    validate_dataset(d)
    if len(d) < 12:
        raise TooSmall(f"need at least 12 samples, got {len(d)}")
    model = fit_svm(d, eta, iters)
    losses = hinge_losses(model, d.X, d.y)
    order = np.argsort(losses, kind="stable")
    n_easy = int(math.floor(spec.easy_fraction * len(d)))
    easy, hard = order[:n_easy], order[n_easy:]
    # clean, attack, test; leftover units go to clean, then test, then attack
    n_c, n_k, n_t = largest_remainder(n_easy, [spec.clean_ratio, spec.attack_ratio, spec.test_ratio],
                                      tie_order=[0, 2, 1])
    for attempt in range(spec.max_attempts):
        perm = stage_rng(spec.seed, "split", attempt).permutation(easy)
        c_idx, k_idx, t_idx = perm[:n_c], perm[n_c:n_c + n_k], perm[n_c + n_k:]
        d_c = d.subset(c_idx)
        if (d_c.group_counts() > 0).all():
            d_k = d.subset(np.concatenate([k_idx, hard]))
            flags = np.r_[np.zeros(len(k_idx), bool), np.ones(len(hard), bool)]
            return SplitResult(d_c, d_k, d.subset(t_idx), flags, model, attempt)
    raise GroupCoverageUnsatisfiable(
        f"no split in {spec.max_attempts} attempts left every (label, sensitive) cell in D_c nonempty")


def write_splits(out_dir, split: SplitResult, sensitive_column="sensitive", label_column="label"):
    out = Path(out_dir)
    write_csv(out / "clean.csv", split.d_c, sensitive_column, label_column, ["clean"] * len(split.d_c))
    write_csv(out / "attack.csv", split.d_k, sensitive_column, label_column,
              ["attack_hard" if h else "attack" for h in split.hard_flags])
    write_csv(out / "test.csv", split.d_test, sensitive_column, label_column, ["test"] * len(split.d_test))


def read_splits(split_dir, sensitive_column="sensitive", label_column="label",
                binary_features=None) -> SplitResult:
    """Inverse of :func:`write_splits`; hard flags come back from the role column.

    ``binary_features`` (column names, e.g. from a manifest) overrides the
    auto-detection, which would otherwise only keep columns that happen to be
    0/1 in all three files.
    """
    split_dir = Path(split_dir)
    parts, roles = {}, {}
    for name in ("clean", "attack", "test"):
        d, extra = read_table(split_dir / f"{name}.csv", sensitive_column, label_column, ("role",))
        parts[name], roles[name] = d, extra.get("role", [])
    if binary_features is None:
        bin_cols = parts["clean"].binary_features & parts["attack"].binary_features \
            & parts["test"].binary_features
    else:
        names = parts["clean"].feature_names
        missing = set(binary_features) - set(names)
        if missing:
            raise MissingColumn(f"binary feature columns not found: {sorted(missing)}")
        bin_cols = frozenset(names.index(c) for c in binary_features)
    fix = {k: Dataset(v.X, v.s, v.y, v.feature_names, bin_cols) for k, v in parts.items()}
    for d in fix.values():
        validate_dataset(d)
    flags = np.array([r == "attack_hard" for r in roles["attack"]], dtype=bool)
    return SplitResult(fix["clean"], fix["attack"], fix["test"], flags)
