"""Run one configured experiment end to end and write its report bundle.

Regimes
    br               alternating best-response training, then evaluation
    joint            simultaneous training of both nets, then evaluation
    random-baseline  no training, score prior-sampled teaching episodes
    oracle           recursive Bayesian fixed point on a discrete task

Every run leaves behind the same bundle shape: ``summary.json`` with one
entry per evaluated policy, a per-episode CSV per policy, and a
``metric_by_policy.csv`` ready for plotting. Training regimes add the
checkpoint directory.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .. import oracle
from ..autodiff.optim import ParamStore
from ..metrics import evaluate_policy, write_report
from ..nets import init_student
from ..training import load_pair, train_pair
from ..training import save_pair as _save_pair
from .config import ExperimentConfig, HarnessError

TAUGHT_POLICY = {"br": "teacher", "joint": "joint"}
TRAIN_MODE = {"br": "best-response", "joint": "joint"}


def build_domain(task) -> oracle.DiscreteDomain:
    """Map a discrete task onto the oracle's concept/example table."""
    kind = task.spec.kind
    if kind == "boolean":
        return oracle.boolean_domain(task)
    if kind == "hierarchy":
        h = task.hierarchy
        consistency = np.array(
            [h.consistent_mask(node) for node in range(h.n_nodes)],
            dtype=np.float64,
        )
        cand_names = [
            f"{h.names[h.candidate_leaf(i)]}#{i % 10}"
            for i in range(consistency.shape[1])
        ]
        prior = np.full(h.n_nodes, 1.0 / h.n_nodes)
        return oracle.DiscreteDomain(
            consistency=consistency,
            prior=prior,
            concept_names=list(h.names),
            example_names=cand_names,
        )
    raise HarnessError(f"no oracle domain for task kind {kind!r}")


def _fresh_student(task, config: ExperimentConfig):
    rng = np.random.default_rng(config.train.seed)
    return init_student(task, ParamStore(), rng, hidden=config.train.hidden)


def _run_oracle(config: ExperimentConfig, task, out: Path) -> dict:
    domain = build_domain(task)
    state = oracle.fixed_point(domain, alpha=config.oracle_alpha)
    one_pass = oracle.single_pass(domain, alpha=config.oracle_alpha)
    teacher_csv, student_csv = oracle.write_state_csv(state, domain, out)
    return {
        "alpha": config.oracle_alpha,
        "converged": state.converged,
        "iterations": state.iterations,
        "residual": state.residual,
        "single_pass_residual": one_pass.residual,
        "n_concepts": domain.n_concepts,
        "n_examples": domain.n_examples,
        "teacher_csv": teacher_csv.name,
        "student_csv": student_csv.name,
    }


def _write_plot_csv(out: Path, reports: dict) -> Path:
    path = out / "metric_by_policy.csv"
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["policy", "metric", "mean", "std", "n"])
        for name in sorted(reports):
            r = reports[name]
            w.writerow([name, r.metric_name, repr(r.mean), repr(r.std), r.n_episodes])
    return path


def run_experiment(config: ExperimentConfig) -> dict:
    """Train per the regime, evaluate, and write the report bundle.

    Returns the summary dict that is also written to ``summary.json``.
    A rerun with an identical config writes an identical summary.
    """
    out = Path(config.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise HarnessError(f"cannot create output directory {out}: {exc}") from exc
    task = config.train.build_task()
    config_dict = config.to_dict()
    # The destination directory is not an experimental parameter; leaving
    # it out keeps the summary independent of where the run landed.
    config_dict.pop("out_dir", None)
    summary = {
        "regime": config.regime,
        "task": config.task_kind,
        "config": config_dict,
    }
    reports = {}
    if config.regime == "oracle":
        summary["oracle"] = _run_oracle(config, task, out)
    elif config.regime == "random-baseline":
        student = _fresh_student(task, config)
        reports["random"] = evaluate_policy(
            "random",
            task,
            config.eval_episodes,
            np.random.default_rng([config.seed, 1]),
            student=student,
        )
    else:
        if config.checkpoint_dir is not None:
            pair = load_pair(config.checkpoint_dir, task)
            if pair.mode != TRAIN_MODE[config.regime]:
                raise HarnessError(
                    f"checkpoint at {config.checkpoint_dir} was trained with "
                    f"mode {pair.mode!r}, config regime {config.regime!r} "
                    f"expects {TRAIN_MODE[config.regime]!r}"
                )
        else:
            pair = train_pair(config.train, TRAIN_MODE[config.regime])
            _save_pair(out / "checkpoint", pair, config.train)
            summary["checkpoint"] = "checkpoint"
        taught = TAUGHT_POLICY[config.regime]
        reports[taught] = evaluate_policy(
            taught,
            task,
            config.eval_episodes,
            np.random.default_rng([config.seed, 0]),
            student=pair.student,
            teacher=pair.teacher,
        )
        reports["random"] = evaluate_policy(
            "random",
            task,
            config.eval_episodes,
            np.random.default_rng([config.seed, 1]),
            student=pair.student,
        )
        summary["ratio_taught_over_random"] = (
            reports[taught].mean / reports["random"].mean
        )
    if reports:
        summary["policies"] = {}
        for name, report in reports.items():
            write_report(report, out, f"episodes_{name}")
            summary["policies"][name] = report.summary()
        _write_plot_csv(out, reports)
    with open(out / "summary.json", "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    return summary
