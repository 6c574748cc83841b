"""Poison the synthetic fixture once and watch the victim move.

Run from the repository root:  python3 demos/attack_walkthrough.py
"""
import argparse
from pathlib import Path

from fairpoison import AttackConfig
from fairpoison.attack import run_pfml
from fairpoison.data import read_splits
from fairpoison.evaluation import VictimHyper, evaluate, train_victim
from fairpoison.pools import build_pool

FIXTURE = Path(__file__).resolve().parents[1] / "tests" / "data" / "fixture"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha", type=float, default=0.8)
    ap.add_argument("--epsilon", type=float, default=0.1)
    ap.add_argument("--variant", default="AS", choices=["AS", "AF", "AM"])
    ap.add_argument("--victim-lambda", type=float, default=0.2)
    args = ap.parse_args()

    split = read_splits(FIXTURE, binary_features=["b"])
    print(f"clean {len(split.d_c)}, pool {len(split.d_k)} ({split.hard_flags.sum()} hard), "
          f"test {len(split.d_test)}")

    cfg = AttackConfig(alpha=args.alpha, epsilon=args.epsilon, variant=args.variant)
    pool = build_pool(split.d_k, args.variant, seed=cfg.seed)
    res = run_pfml(split.d_c, pool, cfg)
    print(f"gamma {res.gamma.value:.3f} ({res.gamma.mode}), {len(res.trace)} points chosen")
    print(" t  cand  hinge   gap    score")
    for r in res.trace[:5] + res.trace[-2:]:
        print(f"{r.t:2d} {r.candidate:5d} {r.accuracy_loss:6.3f} {r.fairness_empirical:6.3f} "
              f"{r.combined_score:7.3f}")

    # the victim retrains from scratch on clean + poison
    hyper = VictimHyper(0.01, 5000)
    for name, train in (("benign", split.d_c), ("poisoned", split.d_c.concat(res.poison_set))):
        theta = train_victim(train, "eo", args.victim_lambda, hyper)
        m = evaluate(theta, split.d_test)
        print(f"{name:9s} accuracy {m['accuracy']:.3f}  eo_gap {m['eo_gap']:.3f}  "
              f"dp_gap {m['dp_gap']:.3f}")


if __name__ == "__main__":
    main()
