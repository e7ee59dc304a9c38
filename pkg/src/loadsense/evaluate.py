"""Participant-level nested cross-validation and Table-style reporting.

All splits are by participant, never by segment: for every outer fold the
test, validation, and training participant sets are pairwise disjoint, so
no participant contributes data to more than one role for the same model.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import FORMAT_VERSION
from .cardiac import compute_cardiac_features
from .core import Dataset, FEATURE_NAMES, FeatureVector, LoadLevel, SessionSegment, TaskKind
from .driving import build_ideal_path, deviation_series, deviation_stats, DEFAULT_SPEED_MPS
from .learn import DEFAULT_GRIDS, MODEL_KINDS, accuracy, apply_scaler, fit_scaler, grid_search, greedy_ensemble
from .pupil import compute_lhipa

HEART_FEATURES = ("hr_mean", "hr_min", "hr_max", "hr_std", "hrv_rmssd")
EYE_FEATURES = ("lhipa_left", "lhipa_right")
DRIVE_FEATURES = ("drive_avg_dev",)

FEATURE_SUBSETS: dict[str, tuple[str, ...]] = {
    "all": HEART_FEATURES + EYE_FEATURES + DRIVE_FEATURES,
    "eye_drive": EYE_FEATURES + DRIVE_FEATURES,
    "heart_eye": HEART_FEATURES + EYE_FEATURES,
    "heart_drive": HEART_FEATURES + DRIVE_FEATURES,
    "heart": HEART_FEATURES,
}

SUBSET_TITLES = {
    "all": "All Features",
    "eye_drive": "Eye & Drive",
    "heart_eye": "Heart & Eye",
    "heart_drive": "Heart & Drive",
    "heart": "Heart alone",
}

REPORT_ROWS = ("LDA", "KNN", "AdaBoost", "Ensemble")

SCHEMES = ("multi", "binary")


@dataclass(frozen=True)
class Fold:
    test: tuple[str, ...]
    validation: tuple[str, ...]
    train: tuple[str, ...]


@dataclass(frozen=True)
class SplitPlan:
    folds: tuple[Fold, ...]
    seed: int


def make_split_plan(participant_ids: Sequence[str], k: int = 5, seed: int = 0) -> SplitPlan:
    """Shuffle participants by seed; fold i tests participants i mod k, and a
    third (rounded up) of the remainder is held out for inner validation."""
    ids = sorted(set(participant_ids))
    if len(ids) < k:
        raise ValueError(f"need at least {k} participants, got {len(ids)}")
    rng = np.random.default_rng(seed)
    shuffled = [ids[i] for i in rng.permutation(len(ids))]
    folds = []
    for i in range(k):
        test = tuple(shuffled[i::k])
        rest = [p for p in shuffled if p not in test]
        n_val = math.ceil(len(rest) / 3)
        folds.append(Fold(test=test, validation=tuple(rest[:n_val]), train=tuple(rest[n_val:])))
    return SplitPlan(folds=tuple(folds), seed=seed)


@dataclass(frozen=True)
class FeatureRow:
    participant: str
    task: TaskKind
    level: LoadLevel
    features: FeatureVector


def _change_points_from_trace(driving: Sequence[tuple[float, float, int]], speed_mps: float):
    """Recover lane-change points (s, from, to) from the target_lane column."""
    points = []
    t0 = driving[0][0]
    prev_lane = driving[0][2]
    for t, _, lane in driving:
        if lane != prev_lane:
            points.append((speed_mps * (t - t0), prev_lane, lane))
            prev_lane = lane
    return points


def featurize_segment(seg: SessionSegment, speed_mps: float = DEFAULT_SPEED_MPS) -> FeatureVector:
    missing: set[str] = set()
    values: dict[str, float | None] = {name: None for name in FEATURE_NAMES}

    cardiac = compute_cardiac_features(seg)
    if cardiac is None:
        missing.update(HEART_FEATURES)
    else:
        values["hr_mean"] = cardiac.hr_mean
        values["hr_min"] = cardiac.hr_min
        values["hr_max"] = cardiac.hr_max
        values["hr_std"] = cardiac.hr_std
        values["hrv_rmssd"] = cardiac.rmssd

    for name, samples in (("lhipa_left", seg.pupil_left), ("lhipa_right", seg.pupil_right)):
        value = compute_lhipa(samples)
        if value is None:
            missing.add(name)
        else:
            values[name] = value

    if len(seg.driving) >= 2 and seg.driving[-1][0] - seg.driving[0][0] >= 1.0:
        try:
            path = build_ideal_path(_change_points_from_trace(seg.driving, speed_mps))
            dev = deviation_series(seg.driving, path, speed_mps=speed_mps)
            values["drive_avg_dev"] = deviation_stats(dev)[0]
        except ValueError:
            missing.add("drive_avg_dev")
    else:
        missing.add("drive_avg_dev")

    return FeatureVector(**values, missing=frozenset(missing))


def featurize_dataset(dataset: Dataset, speed_mps: float = DEFAULT_SPEED_MPS) -> list[FeatureRow]:
    """One feature row per segment, ordered by (participant, task, level)."""
    rows = [
        FeatureRow(seg.participant_id, seg.task, seg.level, featurize_segment(seg, speed_mps))
        for seg in dataset.segments
    ]
    rows.sort(key=lambda r: (r.participant, r.task.value, int(r.level)))
    return rows


@dataclass(frozen=True)
class EvaluationReport:
    task: TaskKind
    scheme: str  # "multi" | "binary"
    cells: dict[tuple[str, str], tuple[float, float]]  # (model, subset) -> (mean%, std%)
    chance_percent: float
    seed: int
    n_folds: int


def _rows_for_task(rows: Sequence[FeatureRow], task: TaskKind, scheme: str) -> list[FeatureRow]:
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    selected = [r for r in rows if r.task is task]
    if scheme == "binary":
        selected = [r for r in selected if r.level in (LoadLevel.EASY, LoadLevel.MEDIUM)]
    return selected


def _matrix(rows: Sequence[FeatureRow], subset: tuple[str, ...]) -> np.ndarray:
    X = np.full((len(rows), len(subset)), np.nan)
    for i, row in enumerate(rows):
        for j, name in enumerate(subset):
            v = row.features.value(name)
            if v is not None:
                X[i, j] = v
    return X


def _labels(rows: Sequence[FeatureRow]) -> np.ndarray:
    return np.asarray([int(r.level) for r in rows], dtype=int)


def _evaluate_fold(rows, fold, subsets, grids):
    """Accuracy of each (model row, subset) on one outer fold's test rows."""
    result: dict[tuple[str, str], float] = {}
    train_rows = [r for r in rows if r.participant in set(fold.train)]
    val_rows = [r for r in rows if r.participant in set(fold.validation)]
    test_rows = [r for r in rows if r.participant in set(fold.test)]
    if not test_rows:
        raise ValueError("fold has no test rows for the requested task")
    y_train, y_val, y_test = _labels(train_rows), _labels(val_rows), _labels(test_rows)
    for subset_name in subsets:
        subset = FEATURE_SUBSETS[subset_name]
        scaler = fit_scaler(_matrix(train_rows, subset))
        X_train = apply_scaler(scaler, _matrix(train_rows, subset))
        X_val = apply_scaler(scaler, _matrix(val_rows, subset))
        X_test = apply_scaler(scaler, _matrix(test_rows, subset))
        candidates = grid_search(X_train, y_train, X_val, y_val, grids)
        for kind in MODEL_KINDS:
            best = next(c for c in candidates if c.kind == kind)
            result[(kind, subset_name)] = accuracy(best.model, X_test, y_test)
        ensemble = greedy_ensemble(candidates, X_val, y_val)
        result[("Ensemble", subset_name)] = accuracy(ensemble, X_test, y_test)
    return result


def run_nested_cv(
    rows: Sequence[FeatureRow],
    task: TaskKind,
    scheme: str,
    plan: SplitPlan,
    subsets: Sequence[str] | None = None,
    grids: dict | None = None,
    threads: int = 1,
) -> EvaluationReport:
    """Nested cross-validation over the split plan; cells are mean% +- std%
    test accuracy over the outer folds."""
    subsets = tuple(subsets) if subsets else tuple(FEATURE_SUBSETS)
    for name in subsets:
        if name not in FEATURE_SUBSETS:
            raise ValueError(f"unknown feature subset {name!r}")
    grids = grids if grids is not None else DEFAULT_GRIDS
    task_rows = _rows_for_task(rows, task, scheme)
    present = {r.participant for r in task_rows}
    planned = {p for fold in plan.folds for p in fold.test}
    if not present <= planned:
        raise ValueError("split plan does not cover all participants present in the features")

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            fold_results = list(pool.map(lambda f: _evaluate_fold(task_rows, f, subsets, grids), plan.folds))
    else:
        fold_results = [_evaluate_fold(task_rows, fold, subsets, grids) for fold in plan.folds]

    cells: dict[tuple[str, str], tuple[float, float]] = {}
    for kind in REPORT_ROWS:
        for subset_name in subsets:
            accs = np.asarray([fr[(kind, subset_name)] for fr in fold_results])
            mean = float(accs.mean()) * 100.0
            std = float(accs.std(ddof=1)) * 100.0 if len(accs) > 1 else 0.0
            cells[(kind, subset_name)] = (mean, std)

    chance = 100.0 / 3.0 if scheme == "multi" else 50.0
    return EvaluationReport(
        task=task,
        scheme=scheme,
        cells=cells,
        chance_percent=chance,
        seed=plan.seed,
        n_folds=len(plan.folds),
    )


def _report_subsets(report: EvaluationReport) -> list[str]:
    seen = []
    for _, subset in report.cells:
        if subset not in seen:
            seen.append(subset)
    return [s for s in FEATURE_SUBSETS if s in seen]


def render_report(report: EvaluationReport, fmt: str = "txt") -> str:
    """Tables in the 4-model x 5-subset layout with the chance-level caption."""
    subsets = _report_subsets(report)
    chance = "33.33" if report.scheme == "multi" else "50"
    caption = (
        f"{report.task.value} {report.scheme}-class mean%+-std% test accuracy over "
        f"{report.n_folds} folds. The random chance level is {chance}%."
    )
    if fmt == "csv":
        lines = [
            f"# format_version={FORMAT_VERSION}",
            f"# seed={report.seed}",
            f"# caption={caption}",
            "model," + ",".join(subsets),
        ]
        for kind in REPORT_ROWS:
            cells = [f"{report.cells[(kind, s)][0]:.1f}+-{report.cells[(kind, s)][1]:.1f}" for s in subsets]
            lines.append(kind + "," + ",".join(cells))
        return "\n".join(lines) + "\n"
    if fmt == "txt":
        width = 16
        lines = [caption, f"seed={report.seed} format_version={FORMAT_VERSION}", ""]
        lines.append("".ljust(12) + "".join(SUBSET_TITLES[s].ljust(width) for s in subsets))
        for kind in REPORT_ROWS:
            cells = [
                f"{report.cells[(kind, s)][0]:.1f}+-{report.cells[(kind, s)][1]:.1f}".ljust(width)
                for s in subsets
            ]
            lines.append(kind.ljust(12) + "".join(cells))
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


def parse_report_csv(text: str) -> dict[tuple[str, str], tuple[float, float]]:
    """Round-trip reader for the CSV rendering."""
    lines = [l for l in text.splitlines() if l and not l.startswith("#")]
    header = lines[0].split(",")[1:]
    cells = {}
    for line in lines[1:]:
        parts = line.split(",")
        kind = parts[0]
        for subset, cell in zip(header, parts[1:]):
            mean, std = cell.split("+-")
            cells[(kind, subset)] = (float(mean), float(std))
    return cells
