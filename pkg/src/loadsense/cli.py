"""Command-line entry point.

Subcommands: synth | validate | features | stats | train | evaluate | report.
Exit codes: 0 success, 1 data error, 2 usage error.  Every run writes a
run.json provenance record (command, seed, config hash) into --out.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import DEFAULT_SEED, FORMAT_VERSION
from .core import DatasetError, TaskKind, load_dataset, validate_dataset, validate_segment, write_dataset
from .evaluate import (
    FEATURE_SUBSETS,
    FeatureRow,
    featurize_dataset,
    make_split_plan,
    render_report,
    run_nested_cv,
)
from .learn import grid_search, greedy_ensemble, model_to_json, fit_scaler, apply_scaler
from .stats import (
    CONDITIONS,
    DIMENSIONS,
    build_condition_matrix,
    correlation_matrices,
    descriptive_table,
    paired_t,
    reliability_screen,
    render_correlation_matrix,
    render_descriptive_table,
)
from .core import FEATURE_NAMES, LoadLevel
from .synth import GeneratorConfig, generate_dataset, generate_null_dataset, load_config, save_config

TASK_NAMES = {"nback": TaskKind.NBACK, "visual_search": TaskKind.VISUAL_SEARCH}


def _default_seed() -> int:
    env = os.environ.get("LOADSENSE_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise SystemExit(2)
    return DEFAULT_SEED


def _write_run_record(out_dir: Path, argv: list[str], seed: int, config: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    config_blob = json.dumps(config, sort_keys=True)
    record = {
        "command": argv,
        "seed": seed,
        "format_version": FORMAT_VERSION,
        "config": config,
        "config_hash": hashlib.sha256(config_blob.encode()).hexdigest(),
    }
    (out_dir / "run.json").write_text(json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load(args) -> "Dataset":
    return load_dataset(args.dataset, strict=args.strict, report=lambda msg: print(msg, file=sys.stderr))


def _features_csv(rows: list[FeatureRow], seed: int) -> str:
    lines = [
        f"# format_version={FORMAT_VERSION}",
        f"# seed={seed}",
        "participant,task,level," + ",".join(FEATURE_NAMES),
    ]
    for row in rows:
        cells = [row.participant, row.task.value, row.level.name.lower()]
        for name in FEATURE_NAMES:
            v = row.features.value(name)
            cells.append("" if v is None else repr(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def cmd_synth(args, argv) -> int:
    config = load_config(args.config) if args.config else GeneratorConfig()
    if args.participants is not None:
        config = dataclasses.replace(config, n_participants=args.participants)
    config = dataclasses.replace(config, seed=args.seed)
    dataset = generate_null_dataset(config) if args.null else generate_dataset(config)
    out = Path(args.out)
    write_dataset(dataset, out / "dataset")
    save_config(config, out / "generator_config.txt")
    _write_run_record(out, argv, args.seed, {"subcommand": "synth", "null": args.null,
                                             "n_participants": config.n_participants})
    print(f"wrote {len(dataset.segments)} segments to {out / 'dataset'}")
    return 0


def cmd_validate(args, argv) -> int:
    dataset = _load(args)
    n_issues = 0
    for seg in dataset.segments:
        for issue in validate_segment(seg):
            n_issues += 1
            print(f"{seg.participant_id}/{seg.task.value}_{seg.level.name.lower()}: "
                  f"{issue.severity}: {issue.message}")
    for issue in validate_dataset(dataset):
        n_issues += 1
        print(f"dataset: {issue.severity}: {issue.message}")
    print(f"{len(dataset.segments)} segments, {n_issues} issues")
    return 0


def cmd_features(args, argv) -> int:
    dataset = _load(args)
    rows = featurize_dataset(dataset)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "features.csv").write_text(_features_csv(rows, args.seed), encoding="utf-8")
    _write_run_record(out, argv, args.seed, {"subcommand": "features", "dataset": str(args.dataset)})
    print(f"wrote {len(rows)} feature rows to {out / 'features.csv'}")
    return 0


def cmd_stats(args, argv) -> int:
    dataset = _load(args)
    rows = featurize_dataset(dataset)
    tuples = [(r.participant, r.task, r.level, r.features) for r in rows]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    table = descriptive_table(tuples)
    (out / "descriptives.csv").write_text(
        f"# format_version={FORMAT_VERSION}\n# seed={args.seed}\n" + render_descriptive_table(table),
        encoding="utf-8",
    )

    matrices = {dim: build_condition_matrix(tuples, dim) for dim in DIMENSIONS}
    alphas, retained, excluded = reliability_screen(matrices)
    reliability_lines = [f"# format_version={FORMAT_VERSION}", f"# seed={args.seed}",
                         "dimension,alpha,retained"]
    for dim in DIMENSIONS:
        a = alphas[dim]
        reliability_lines.append(f"{dim},{'' if math.isnan(a) else f'{a:.4f}'},{dim in retained}")
    (out / "reliability.csv").write_text("\n".join(reliability_lines) + "\n", encoding="utf-8")

    # per-condition correlation matrix across all (dimension, condition) columns
    columns = {}
    for dim in DIMENSIONS:
        matrix = matrices[dim]
        for j, (task, level) in enumerate(CONDITIONS):
            columns[f"{dim}.{task.value}.{level.name.lower()}"] = matrix.values[:, j]
    corr = correlation_matrices(columns)
    (out / "correlations.txt").write_text(render_correlation_matrix(corr), encoding="utf-8")

    # manipulation-check paired t-tests on the retained dimensions, per task
    t_lines = [f"# format_version={FORMAT_VERSION}", f"# seed={args.seed}",
               "dimension,task,comparison,t,df,p,n"]
    for dim in sorted(retained):
        matrix = matrices[dim]
        for task in TaskKind:
            cols = {level: matrix.values[:, CONDITIONS.index((task, level))] for level in LoadLevel}
            for lo, hi in ((LoadLevel.EASY, LoadLevel.MEDIUM), (LoadLevel.MEDIUM, LoadLevel.HARD)):
                mask = ~np.isnan(cols[lo]) & ~np.isnan(cols[hi])
                if mask.sum() < 2:
                    continue
                res = paired_t(cols[lo][mask], cols[hi][mask])
                t_lines.append(
                    f"{dim},{task.value},{lo.name.lower()}-vs-{hi.name.lower()},"
                    f"{res.statistic:.4f},{res.df},{res.p_value:.6f},{res.n}"
                )
    (out / "paired_tests.csv").write_text("\n".join(t_lines) + "\n", encoding="utf-8")

    _write_run_record(out, argv, args.seed, {"subcommand": "stats", "dataset": str(args.dataset)})
    print(f"retained: {sorted(retained)}; excluded: {sorted(excluded)}")
    return 0


def cmd_train(args, argv) -> int:
    from .evaluate import _matrix, _labels, _rows_for_task

    dataset = _load(args)
    rows = featurize_dataset(dataset)
    task = TASK_NAMES[args.task]
    task_rows = _rows_for_task(rows, task, args.scheme)
    participants = sorted({r.participant for r in task_rows})
    if len(participants) < 3:
        raise DatasetError("need at least 3 participants to train")
    rng = np.random.default_rng(args.seed)
    shuffled = [participants[i] for i in rng.permutation(len(participants))]
    n_val = max(1, math.ceil(len(shuffled) / 3))
    val_ids, train_ids = set(shuffled[:n_val]), set(shuffled[n_val:])
    train_rows = [r for r in task_rows if r.participant in train_ids]
    val_rows = [r for r in task_rows if r.participant in val_ids]

    subset = FEATURE_SUBSETS[args.subset[0]] if args.subset else FEATURE_SUBSETS["all"]
    scaler = fit_scaler(_matrix(train_rows, subset))
    X_train = apply_scaler(scaler, _matrix(train_rows, subset))
    X_val = apply_scaler(scaler, _matrix(val_rows, subset))
    candidates = grid_search(X_train, _labels(train_rows), X_val, _labels(val_rows))
    ensemble = greedy_ensemble(candidates, X_val, _labels(val_rows))
    ensemble = dataclasses.replace(ensemble, scaler=scaler)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "model.json").write_text(model_to_json(ensemble, seed=args.seed), encoding="utf-8")
    _write_run_record(out, argv, args.seed, {"subcommand": "train", "task": args.task,
                                             "scheme": args.scheme})
    print(f"wrote ensemble model to {out / 'model.json'}")
    return 0


def cmd_evaluate(args, argv) -> int:
    dataset = _load(args)
    rows = featurize_dataset(dataset)
    task = TASK_NAMES[args.task]
    participants = sorted({r.participant for r in rows})
    plan = make_split_plan(participants, k=5, seed=args.seed)
    subsets = args.subset if args.subset else None
    report = run_nested_cv(rows, task, args.scheme, plan, subsets=subsets, threads=args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"report_{args.task}_{args.scheme}"
    (out / f"{stem}.csv").write_text(render_report(report, "csv"), encoding="utf-8")
    (out / f"{stem}.txt").write_text(render_report(report, "txt"), encoding="utf-8")
    _write_run_record(out, argv, args.seed, {"subcommand": "evaluate", "task": args.task,
                                             "scheme": args.scheme, "threads": args.threads,
                                             "subsets": list(subsets) if subsets else "all"})
    print((out / f"{stem}.txt").read_text(), end="")
    return 0


def cmd_report(args, argv) -> int:
    text = Path(args.report_csv).read_text(encoding="utf-8")
    print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="loadsense")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, dataset=True):
        if dataset:
            p.add_argument("--dataset", required=True)
            p.add_argument("--strict", action="store_true")
        p.add_argument("--out", default="out")
        p.add_argument("--seed", type=int, default=_default_seed())

    p = sub.add_parser("synth", help="generate a synthetic dataset tree")
    common(p, dataset=False)
    p.add_argument("--participants", type=int, default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--null", action="store_true", help="zero all level effects")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("validate", help="report segment and dataset issues")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("features", help="extract the 8-feature table")
    common(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("stats", help="descriptives, correlations, reliability, paired t-tests")
    common(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("train", help="fit and save an ensemble model")
    common(p)
    p.add_argument("--task", required=True, choices=sorted(TASK_NAMES))
    p.add_argument("--scheme", choices=["multi", "binary"], default="multi")
    p.add_argument("--subset", action="append", choices=sorted(FEATURE_SUBSETS))
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="nested cross-validation report")
    common(p)
    p.add_argument("--task", required=True, choices=sorted(TASK_NAMES))
    p.add_argument("--scheme", choices=["multi", "binary"], default="multi")
    p.add_argument("--subset", action="append", choices=sorted(FEATURE_SUBSETS))
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="print a saved report file")
    p.add_argument("report_csv")
    p.set_defaults(func=cmd_report)

    return parser


def run_cli(argv: list[str]) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, argv)
    except (DatasetError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
