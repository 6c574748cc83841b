"""Command-line front end: prepare splits, run one attack, run a grid, evaluate a victim.

Settings resolve as command-line flag, then config/grid file, then the
built-in defaults. Every command echoes its effective settings to
``<out>/config.json``.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .attack import run_pfml
from .data import SplitSpec, load_csv, loss_ranked_split, preprocess, read_splits, write_splits
from .domain import AttackConfig, Dataset
from .errors import ConfigError, FairPoisonError
from .evaluation import (ExperimentGrid, VictimHyper, evaluate, run_experiment, train_victim,
                         write_poison, write_reports, write_trace)
from .pools import build_pool

IO_EXIT = 9

ATTACK_DEFAULTS = {"alpha": 0.5, "epsilon": 0.1, "lam": 5.0, "eta": 0.001, "gamma": "auto",
                   "notion": "eo", "variant": "AS", "pretrain_iters": 2000,
                   "flip_fraction": 0.15, "seed": 0}


def _dump(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return raw


def _merge(defaults: dict, file_values: dict, flags: dict) -> dict:
    unknown = set(file_values) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    out = dict(defaults)
    out.update(file_values)
    out.update({k: v for k, v in flags.items() if v is not None})
    return out


def _gamma(text):
    return "auto" if str(text).lower() == "auto" else float(text)


def _locate_splits(path):
    """Accept either a ``prepare`` output directory or the splits directory itself."""
    path = Path(path)
    split_dir = path / "splits" if (path / "splits").is_dir() else path
    manifest = {}
    for candidate in (path / "manifest.json", split_dir.parent / "manifest.json"):
        if candidate.exists():
            manifest = _load_json(candidate)
            break
    return split_dir, manifest


def _load_splits(path):
    split_dir, manifest = _locate_splits(path)
    split = read_splits(split_dir, manifest.get("sensitive_column", "sensitive"),
                        manifest.get("label_column", "label"), manifest.get("binary_features"))
    return split, manifest


def cmd_prepare(args) -> int:
    spec = SplitSpec(*args.ratios, easy_fraction=args.easy_fraction, seed=args.seed)
    config = {"command": "prepare", "input": str(args.input), "sensitive": args.sensitive,
              "label": args.label, "seed": args.seed, "ratios": list(args.ratios),
              "easy_fraction": args.easy_fraction, "eta": args.eta, "iters": args.iters,
              "standardize": not args.no_standardize}
    d = preprocess(load_csv(args.input, args.sensitive, args.label), not args.no_standardize)
    split = loss_ranked_split(d, spec, args.eta, args.iters)
    out = Path(args.out)
    write_splits(out / "splits", split, args.sensitive, args.label)
    manifest = {
        "counts": {"clean": len(split.d_c), "attack": len(split.d_k), "test": len(split.d_test),
                   "attack_hard": int(split.hard_flags.sum())},
        "seed": args.seed, "attempt": split.attempt,
        "ranking_model": split.ranking_model.to_dict(),
        "feature_names": list(d.feature_names),
        "binary_features": [d.feature_names[j] for j in sorted(d.binary_features)],
        "sensitive_column": args.sensitive, "label_column": args.label,
    }
    _dump(out / "manifest.json", manifest)
    _dump(out / "config.json", config)
    print(f"wrote {out / 'splits'}: clean={len(split.d_c)} attack={len(split.d_k)} "
          f"(hard {manifest['counts']['attack_hard']}) test={len(split.d_test)}")
    return 0


def cmd_attack(args) -> int:
    file_values = _load_json(args.config) if args.config else {}
    if "lambda" in file_values:
        file_values["lam"] = file_values.pop("lambda")
    flags = {"alpha": args.alpha, "epsilon": args.epsilon, "lam": args.lam, "eta": args.eta,
             "gamma": args.gamma, "notion": args.notion, "variant": args.variant,
             "pretrain_iters": args.iters, "flip_fraction": args.flip_fraction, "seed": args.seed}
    config = AttackConfig(**_merge(ATTACK_DEFAULTS, file_values, flags))  # validate before work
    split, manifest = _load_splits(args.splits)
    sensitive = manifest.get("sensitive_column", "sensitive")
    label = manifest.get("label_column", "label")
    pool = build_pool(split.d_k, config.variant, config.seed, config.flip_fraction)
    result = run_pfml(split.d_c, pool, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_poison(out / "poison.csv", result, sensitive, label)
    write_trace(out / "trace.csv", result.trace)
    _dump(out / "theta.json", {"final": result.final_theta.to_dict(),
                               "pretrained": result.pretrained_theta.to_dict(),
                               "gamma": {"value": result.gamma.value, "mode": result.gamma.mode},
                               "chosen": result.chosen})
    _dump(out / "config.json", {"command": "attack", "splits": str(args.splits), **config.to_dict()})
    print(f"selected {len(result.poison_set)} poisoning points -> {out / 'poison.csv'}")
    return 0


GRID_FLAGS = ("alphas", "epsilons", "lambdas", "notions", "variants", "repeats", "base_seed",
              "attack_lambda", "eta", "pretrain_iters", "flip_fraction", "victim_eta", "victim_iters")


def cmd_experiment(args) -> int:
    file_values = _load_json(args.grid) if args.grid else {}
    defaults = ExperimentGrid().to_dict()
    flags = {k: getattr(args, k) for k in GRID_FLAGS}
    grid = ExperimentGrid.from_dict(_merge(defaults, file_values, flags))
    split, _ = _load_splits(args.splits)
    result = run_experiment(split.d_c, split.d_k, split.d_test, split.hard_flags, grid, jobs=args.jobs)
    out = Path(args.out)
    write_reports(out, result)
    for (variant, notion, alpha, epsilon, seed), trace in result.traces.items():
        write_trace(out / "traces" / f"{variant}_{notion}_a{alpha}_e{epsilon}_s{seed}.csv", trace)
    _dump(out / "config.json", {"command": "experiment", "splits": str(args.splits), **grid.to_dict()})
    print(f"{len(result.rows)} report rows -> {out / 'report.csv'}")
    return 0


def cmd_evaluate(args) -> int:
    config = {"command": "evaluate", "splits": str(args.splits), "poison": args.poison,
              "notion": args.notion, "lambda": args.lam, "eta": args.eta, "iters": args.iters}
    AttackConfig(notion=args.notion, lam=args.lam, eta=args.eta)  # same range checks
    split, manifest = _load_splits(args.splits)
    train = split.d_c
    if args.poison:
        poison = load_csv(args.poison, manifest.get("sensitive_column", "sensitive"),
                          manifest.get("label_column", "label"))
        train = train.concat(Dataset(poison.X, poison.s, poison.y, train.feature_names,
                                     train.binary_features))
    theta = train_victim(train, args.notion, args.lam, VictimHyper(args.eta, args.iters))
    metrics = evaluate(theta, split.d_test)
    out = Path(args.out)
    _dump(out / "evaluation.json", {**metrics, "theta": theta.to_dict(), "train_size": len(train)})
    _dump(out / "config.json", config)
    print(" ".join(f"{k}={v:.4f}" for k, v in metrics.items()))
    return 0


def _attack_flags(p):
    p.add_argument("--alpha", type=float, help="accuracy/fairness balance in [0, 1] (default: 0.5)")
    p.add_argument("--epsilon", type=float, help="poisoning ratio (default: 0.1)")
    p.add_argument("--lambda", dest="lam", type=float,
                   help="fairness penalty weight of the modelled learner (default: 5)")
    p.add_argument("--eta", type=float, help="learning rate (default: 0.001)")
    p.add_argument("--iters", type=int, help="pretraining iterations I (default: 2000)")
    p.add_argument("--gamma", type=_gamma, help="fairness term scale, or 'auto' (default: auto)")
    p.add_argument("--notion", choices=["dp", "eo"], help="fairness notion (default: eo)")
    p.add_argument("--variant", type=str.upper, choices=["AS", "AF", "AM"],
                   help="feasible-set variant (default: AS)")
    p.add_argument("--flip-fraction", type=float, help="AF label flip share (default: 0.15)")
    p.add_argument("--seed", type=int, help="64-bit seed (default: 0)")


def _floats(text):
    return [float(v) for v in text.split(",")]


def _words(text):
    return [v.strip() for v in text.split(",")]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairpoison", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("prepare", help="standardise a CSV and write the loss-ranked splits",
                       formatter_class=fmt)
    p.add_argument("--input", required=True, help="input CSV with a header row")
    p.add_argument("--sensitive", default="sensitive", help="binary sensitive-attribute column")
    p.add_argument("--label", default="label", help="binary label column")
    p.add_argument("--seed", type=int, default=0, help="64-bit seed")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--ratios", type=int, nargs=3, default=[4, 1, 1], metavar=("C", "K", "T"),
                   help="clean:attack:test ratio of the easy part")
    p.add_argument("--easy-fraction", type=float, default=0.6, help="share of lowest-loss rows")
    p.add_argument("--eta", type=float, default=0.001, help="ranking SVM learning rate")
    p.add_argument("--iters", type=int, default=2000, help="ranking SVM iterations")
    p.add_argument("--no-standardize", action="store_true", help="keep raw feature scales")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("attack", help="run one online poisoning attack")
    p.add_argument("--splits", required=True, help="prepare output (or splits) directory")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="JSON file of attack settings; flags take precedence")
    _attack_flags(p)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("experiment", help="run an attack grid with baselines and benign rows")
    p.add_argument("--splits", required=True, help="prepare output (or splits) directory")
    p.add_argument("--grid", help="JSON grid file; flags take precedence")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--jobs", type=int, default=1, help="parallel attack workers (default: 1)")
    p.add_argument("--alphas", type=_floats, help="comma list (default: 0,0.2,0.5,0.8,1)")
    p.add_argument("--epsilons", type=_floats, help="comma list (default: 0.1)")
    p.add_argument("--lambdas", type=_floats, help="victim penalty weights (default: 5)")
    p.add_argument("--notions", type=_words, help="comma list of dp/eo (default: eo)")
    p.add_argument("--variants", type=_words, help="comma list of AS/AF/AM (default: AS,AF,AM)")
    p.add_argument("--repeats", type=int, help="seeds per cell (default: 5)")
    p.add_argument("--seed", dest="base_seed", type=int, help="base seed (default: 0)")
    p.add_argument("--attack-lambda", type=float, help="attacker's penalty weight (default: 5)")
    p.add_argument("--eta", type=float, help="attack learning rate (default: 0.001)")
    p.add_argument("--iters", dest="pretrain_iters", type=int,
                   help="attack pretraining iterations (default: 2000)")
    p.add_argument("--flip-fraction", type=float, help="AF label flip share (default: 0.15)")
    p.add_argument("--victim-eta", type=float, help="victim learning rate (default: 0.001)")
    p.add_argument("--victim-iters", type=int, help="victim iterations (default: 2000)")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("evaluate", help="train the victim on clean (+ poison) data and score it",
                       formatter_class=fmt)
    p.add_argument("--splits", required=True, help="prepare output (or splits) directory")
    p.add_argument("--poison", help="poison CSV from the attack command")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--notion", choices=["dp", "eo"], default="eo", help="victim fairness notion")
    p.add_argument("--lambda", dest="lam", type=float, default=5.0, help="victim penalty weight")
    p.add_argument("--eta", type=float, default=0.001, help="victim learning rate")
    p.add_argument("--iters", type=int, default=2000, help="victim iterations")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FairPoisonError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return IO_EXIT


if __name__ == "__main__":
    sys.exit(main())
