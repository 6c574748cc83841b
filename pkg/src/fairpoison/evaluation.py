"""Victim retraining, test metrics, and the experiment grid runner.

The victim is the same fairness-penalised SVM the attacker models; a stricter
fairness threshold corresponds to a larger ``victim_lambda``. Every row is a
deterministic function of the splits, the grid and its base seed.
"""
from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from itertools import product
from pathlib import Path

import numpy as np

from ._rng import derive_seed
from .attack import AttackResult, poison_count, run_pfml
from .domain import AttackConfig, Dataset, FairnessNotion, ModelParams
from .errors import ConfigError
from .fairness import dp_gap, eo_gap
from .linear import accuracy, train_penalized
from .pools import BASELINES, baseline_select, build_pool


@dataclass(frozen=True)
class VictimHyper:
    eta: float = 0.001
    iters: int = 2000


def train_victim(train: Dataset, notion, lam: float, hyper: VictimHyper = VictimHyper()) -> ModelParams:
    return train_penalized(train, FairnessNotion.parse(notion), lam, hyper.eta, hyper.iters).final_params


def evaluate(theta: ModelParams, test: Dataset) -> dict:
    return {"accuracy": accuracy(theta, test), "dp_gap": dp_gap(theta, test),
            "eo_gap": eo_gap(theta, test)}


@dataclass(frozen=True)
class EvalReport:
    attack_id: str
    notion: str
    alpha: float | None
    epsilon: float | None
    victim_lambda: float
    seed: int
    accuracy: float
    dp_gap: float
    eo_gap: float
    runtime_seconds: float = field(default=0.0, compare=False)


REPORT_COLUMNS = [f.name for f in fields(EvalReport) if f.name != "runtime_seconds"]
METRICS = ("accuracy", "dp_gap", "eo_gap")


def _seq(value, name):
    if isinstance(value, (str, int, float)):
        value = [value]
    value = list(value)
    if not value:
        raise ConfigError(f"grid field {name!r} must be a nonempty sequence")
    return tuple(value)


@dataclass(frozen=True)
class ExperimentGrid:
    alphas: tuple = (0.0, 0.2, 0.5, 0.8, 1.0)
    epsilons: tuple = (0.1,)
    lambdas: tuple = (5.0,)
    notions: tuple = ("eo",)
    variants: tuple = ("AS", "AF", "AM")
    repeats: int = 5
    base_seed: int = 0
    attack_lambda: float = 5.0
    eta: float = 0.001
    pretrain_iters: int = 2000
    flip_fraction: float = 0.15
    gamma: object = "auto"
    victim_eta: float = 0.001
    victim_iters: int = 2000
    baselines: bool = True

    def __post_init__(self):
        for name in ("alphas", "epsilons", "lambdas", "notions", "variants"):
            object.__setattr__(self, name, _seq(getattr(self, name), name))
        object.__setattr__(self, "notions",
                           tuple(FairnessNotion.parse(v).value for v in self.notions))
        object.__setattr__(self, "variants",
                           tuple(str(v).upper().replace("PFML-", "") for v in self.variants))
        if int(self.repeats) < 1:
            raise ConfigError("repeats must be at least 1")
        for a, e in product(self.alphas, self.epsilons):
            self.attack_config(a, e, self.notions[0], self.variants[0], 0)  # validates ranges

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentGrid":
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown grid fields: {sorted(unknown)}")
        return cls(**raw)

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self).items()}

    def attack_config(self, alpha, epsilon, notion, variant, seed) -> AttackConfig:
        return AttackConfig(alpha=float(alpha), epsilon=float(epsilon), lam=float(self.attack_lambda),
                            eta=float(self.eta), gamma=self.gamma, notion=notion, variant=variant,
                            pretrain_iters=int(self.pretrain_iters),
                            flip_fraction=float(self.flip_fraction), seed=int(seed))

    @property
    def victim(self) -> VictimHyper:
        return VictimHyper(float(self.victim_eta), int(self.victim_iters))


@dataclass
class ExperimentResult:
    rows: list
    summary: list
    traces: dict = field(default_factory=dict)  # (variant, notion, alpha, epsilon, seed) -> trace


def _victim_rows(train, test, notion, lambdas, hyper, **meta) -> list:
    out = []
    for lam in lambdas:
        theta = train_victim(train, notion, float(lam), hyper)
        out.append(EvalReport(notion=notion, victim_lambda=float(lam), **meta, **evaluate(theta, test)))
    return out


def _attack_task(args):
    dc, dk, dtest, grid, variant, notion, alpha, epsilon, seed = args
    config = grid.attack_config(alpha, epsilon, notion, variant, seed)
    start = time.perf_counter()
    pool = build_pool(dk, variant, derive_seed(seed, "pool", variant), grid.flip_fraction)
    result = run_pfml(dc, pool, config)
    elapsed = time.perf_counter() - start
    rows = _victim_rows(dc.concat(result.poison_set), dtest, notion, grid.lambdas, grid.victim,
                        attack_id=f"PFML-{variant}", alpha=float(alpha), epsilon=float(epsilon),
                        seed=seed, runtime_seconds=elapsed)
    return rows, result


def run_experiment(dc: Dataset, dk: Dataset, dtest: Dataset, hard_flags, grid: ExperimentGrid,
                   jobs: int = 1) -> ExperimentResult:
    seeds = [grid.base_seed + r for r in range(grid.repeats)]
    rows: list[EvalReport] = []

    for notion in grid.notions:
        benign = _victim_rows(dc, dtest, notion, grid.lambdas, grid.victim, attack_id="benign",
                              alpha=None, epsilon=None, seed=grid.base_seed)
        for seed in seeds:
            rows.extend(EvalReport(**{**asdict(b), "seed": seed}) for b in benign)

    if grid.baselines:
        for notion, epsilon, seed in product(grid.notions, grid.epsilons, seeds):
            count = poison_count(len(dc), float(epsilon))
            for kind in BASELINES:
                start = time.perf_counter()
                picked = baseline_select(dk, kind, count, hard_flags, derive_seed(seed, "baseline"))
                elapsed = time.perf_counter() - start
                rows.extend(_victim_rows(dc.concat(picked), dtest, notion, grid.lambdas, grid.victim,
                                         attack_id=kind, alpha=None, epsilon=float(epsilon),
                                         seed=seed, runtime_seconds=elapsed))

    tasks = [(dc, dk, dtest, grid, variant, notion, alpha, epsilon, seed)
             for variant, notion, alpha, epsilon, seed
             in product(grid.variants, grid.notions, grid.alphas, grid.epsilons, seeds)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            outputs = list(ex.map(_attack_task, tasks))
    else:
        outputs = [_attack_task(t) for t in tasks]
    traces = {}
    for task, (task_rows, result) in zip(tasks, outputs):
        rows.extend(task_rows)
        traces[tuple(task[4:])] = result.trace
    return ExperimentResult(rows, summarize(rows), traces)


def summarize(rows) -> list:
    """Mean and standard deviation of each metric per configuration, over seeds."""
    groups: dict = {}
    for r in rows:
        key = (r.attack_id, r.notion, r.alpha, r.epsilon, r.victim_lambda)
        groups.setdefault(key, []).append(r)
    out = []
    for (attack_id, notion, alpha, epsilon, lam), members in groups.items():
        rec = {"attack_id": attack_id, "notion": notion, "alpha": alpha, "epsilon": epsilon,
               "victim_lambda": lam, "runs": len(members)}
        for m in METRICS:
            vals = np.array([getattr(r, m) for r in members])
            rec[f"{m}_mean"] = float(vals.mean())
            rec[f"{m}_std"] = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
        out.append(rec)
    return out


def _cell(v):
    if v is None:
        return ""
    return repr(float(v)) if isinstance(v, float) else str(v)


def _write_rows(path, header, records):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for rec in records:
            w.writerow([_cell(rec[h]) for h in header])


def write_reports(out_dir, result: ExperimentResult):
    """report.csv / report.json are timing-free so identical runs give identical bytes."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    raw = [{k: v for k, v in asdict(r).items() if k != "runtime_seconds"} for r in result.rows]
    _write_rows(out / "report.csv", REPORT_COLUMNS, raw)
    if result.summary:
        _write_rows(out / "summary.csv", list(result.summary[0]), result.summary)
    with open(out / "report.json", "w", encoding="utf-8") as fh:
        json.dump({"rows": raw, "summary": result.summary}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    timing = [{"attack_id": r.attack_id, "notion": r.notion, "alpha": r.alpha, "epsilon": r.epsilon,
               "seed": r.seed, "runtime_seconds": r.runtime_seconds}
              for r in result.rows if r.attack_id != "benign"]
    _write_rows(out / "timings.csv", ["attack_id", "notion", "alpha", "epsilon", "seed",
                                      "runtime_seconds"], _dedupe(timing))


def _dedupe(records):
    seen, out = set(), []
    for rec in records:
        key = tuple(rec.values())
        if key not in seen:
            seen.add(key)
            out.append(rec)
    return out


TRACE_COLUMNS = ["t", "accuracy_loss", "fairness_empirical", "fairness_relaxed", "combined_score"]


def write_trace(path, trace):
    _write_rows(path, TRACE_COLUMNS + ["candidate", "objective"], [asdict(r) for r in trace])


def write_poison(path, result: AttackResult, sensitive_column="sensitive", label_column="label"):
    from .data import write_csv
    write_csv(path, result.poison_set, sensitive_column, label_column)
