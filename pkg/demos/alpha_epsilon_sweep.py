"""Sweep the balance ratio and the poisoning budget on the synthetic fixture.

Larger alpha trades fairness damage for accuracy damage; a larger budget
lowers accuracy further. Means over five seeds.
"""
import argparse
from pathlib import Path

import numpy as np

from fairpoison.data import read_splits
from fairpoison.evaluation import ExperimentGrid, run_experiment

FIXTURE = Path(__file__).resolve().parents[1] / "tests" / "data" / "fixture"
VICTIM = dict(lambdas=(0.2,), victim_eta=0.01, victim_iters=5000, notions=("eo",))


def table(rows, key, by):
    out = {}
    for r in rows:
        if r.attack_id == "PFML-AS":
            out.setdefault(getattr(r, by), []).append(getattr(r, key))
    return {k: np.mean(v) for k, v in sorted(out.items())}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    split = read_splits(FIXTURE, binary_features=["b"])
    data = (split.d_c, split.d_k, split.d_test, split.hard_flags)

    grid = ExperimentGrid(alphas=(0.0, 0.5, 0.8, 1.0), variants=("AS",), repeats=args.repeats,
                          **VICTIM)
    rows = run_experiment(*data, grid).rows
    base = [r for r in rows if r.attack_id == "benign"][0]
    print(f"benign      accuracy {base.accuracy:.3f}  eo_gap {base.eo_gap:.3f}")
    for r in ("RS", "HE", "LF"):
        acc = np.mean([x.accuracy for x in rows if x.attack_id == r])
        print(f"{r:11s} accuracy {acc:.3f}")
    acc, gap = table(rows, "accuracy", "alpha"), table(rows, "eo_gap", "alpha")
    for a in acc:
        print(f"alpha {a:.1f}   accuracy {acc[a]:.3f}  eo_gap {gap[a]:.3f}")

    grid = ExperimentGrid(alphas=(0.8,), epsilons=(0.025, 0.05, 0.1, 0.15), variants=("AS",),
                          repeats=args.repeats, baselines=False, **VICTIM)
    acc = table(run_experiment(*data, grid).rows, "accuracy", "epsilon")
    for e, v in acc.items():
        print(f"eps {e:<6}  accuracy {v:.3f}")


if __name__ == "__main__":
    main()
