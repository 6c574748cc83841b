"""Online data-poisoning attacks on fairness-penalised linear classifiers."""
from .attack import AttackResult, TraceRecord, run_online_accuracy, run_pfml, score_candidate
from .data import SplitSpec, load_csv, loss_ranked_split, preprocess
from .domain import (AttackConfig, Dataset, FairnessNotion, ModelParams, Sample,
                     validate_dataset)
from .fairness import (GapTracker, dp_gap, dp_relaxed, eo_gap, eo_relaxed, grad_relaxed)
from .linear import train_penalized
from .pools import baseline_select, build_af, build_am, build_as, build_pool

__version__ = "0.1.0"
