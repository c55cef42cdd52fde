"""Command line front door.

    teachkit train  --config exp.json [--seed N] [--out DIR]
    teachkit eval   --config exp.json [--seed N] [--out DIR]
    teachkit oracle --config exp.json [--out DIR]
    teachkit serve  --config service.json [--out DIR]
    teachkit score  PATH [--out DIR]

``--seed`` overrides both the training and evaluation seeds so a single
flag pins a whole run; ``--out`` overrides the configured output
directory. ``score`` takes a session log file or a directory of them.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .config import ExperimentConfig, HarnessError
from .experiment import run_experiment
from .service import score_log, serve
from .study import StudyError, aggregate_reports


def _load_config(args) -> ExperimentConfig:
    if args.config is None:
        raise HarnessError("this subcommand needs --config")
    config = ExperimentConfig.from_json(args.config)
    if args.seed is not None:
        config = replace(
            config, seed=args.seed, train=replace(config.train, seed=args.seed)
        )
    if args.out is not None:
        config = replace(config, out_dir=args.out)
    return config


def _cmd_train(args) -> int:
    config = _load_config(args)
    if config.regime == "oracle":
        raise HarnessError("use the 'oracle' subcommand for oracle configs")
    summary = run_experiment(config)
    _print_summary(summary, config)
    return 0


def _cmd_eval(args) -> int:
    config = _load_config(args)
    if config.regime in ("br", "joint") and config.checkpoint_dir is None:
        raise HarnessError(
            "eval needs 'checkpoint_dir' in the config to skip training"
        )
    summary = run_experiment(config)
    _print_summary(summary, config)
    return 0


def _cmd_oracle(args) -> int:
    config = _load_config(args)
    if config.regime != "oracle":
        raise HarnessError("the oracle subcommand needs regime 'oracle'")
    summary = run_experiment(config)
    info = summary["oracle"]
    print(
        f"oracle fixed point on {summary['task']}: "
        f"converged={info['converged']} after {info['iterations']} "
        f"iterations, residual={info['residual']:.3e}"
    )
    print(f"wrote {config.out_dir}/{info['teacher_csv']} and _student.csv")
    return 0


def _print_summary(summary: dict, config: ExperimentConfig):
    print(f"regime={summary['regime']} task={summary['task']}")
    for name, row in sorted(summary.get("policies", {}).items()):
        line = f"  {name}: {row['metric']} mean={row['mean']:.4f}"
        if row.get("match_rate") is not None:
            line += f" match_rate={row['match_rate']:.4f}"
        print(line)
    ratio = summary.get("ratio_taught_over_random")
    if ratio is not None:
        print(f"  taught/random ratio: {ratio:.4f}")
    print(f"bundle written to {config.out_dir}/summary.json")


def _cmd_serve(args) -> int:
    if args.config is None:
        raise HarnessError("serve needs --config")
    with open(args.config) as f:
        raw = json.load(f)
    checkpoints = raw.get("checkpoints")
    if not isinstance(checkpoints, dict) or not checkpoints:
        raise HarnessError(
            "service config needs a nonempty 'checkpoints' table "
            "{task kind: checkpoint dir or null}"
        )
    storage = args.out or raw.get("storage", "sessions")
    address = raw.get("address", "127.0.0.1:8000")
    serve(address, checkpoints, storage)
    return 0


def _cmd_score(args) -> int:
    path = Path(args.path)
    if path.is_dir():
        logs = sorted(path.glob("*.jsonl"))
    elif path.exists():
        logs = [path]
    else:
        raise HarnessError(f"no session log at {path}")
    if not logs:
        raise HarnessError(f"no session logs under {path}")
    reports = []
    for log in logs:
        try:
            report = score_log(log)
        except StudyError as exc:
            print(f"{log.name}: skipped ({exc})", file=sys.stderr)
            continue
        reports.append(report)
        print(
            f"{report['session_id']}: task={report['task']} "
            f"condition={report['condition']} accuracy={report['accuracy']:.3f}"
        )
    if not reports:
        raise HarnessError("no scorable sessions found")
    aggregate = aggregate_reports(reports)
    for condition, row in aggregate.items():
        print(
            f"condition={condition}: mean={row['mean_accuracy']:.3f} "
            f"over {row['n_sessions']} sessions"
        )
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "study_scores.json", "w") as f:
            json.dump(
                {"sessions": reports, "by_condition": aggregate},
                f,
                indent=2,
                sort_keys=True,
            )
            f.write("\n")
        print(f"wrote {out / 'study_scores.json'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="teachkit", description="teaching-experiment toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, needs_path in (
        ("train", _cmd_train, False),
        ("eval", _cmd_eval, False),
        ("oracle", _cmd_oracle, False),
        ("serve", _cmd_serve, False),
        ("score", _cmd_score, True),
    ):
        p = sub.add_parser(name)
        if needs_path:
            p.add_argument("path", help="session log file or directory")
        p.add_argument("--config", help="experiment or service config JSON")
        p.add_argument("--seed", type=int, help="override all seeds")
        p.add_argument("--out", help="override the output directory")
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except HarnessError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
