"""Deterministic synthetic-session generator.

Per-condition feature targets default to the study's descriptive table;
within-participant level effects are additive shifts on a per-participant
baseline.  Baseline spreads are a modeling assumption (they are NOT the
pooled per-condition standard deviations, which mix between-participant
spread, level effects, and measurement noise); they are part of the config
so the decomposition is explicit.

Per-participant RNG streams are derived from (seed, participant index), so
output is independent of generation order and byte-identical per seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .core import (
    Dataset,
    EventKind,
    LoadLevel,
    SessionSegment,
    TaskEvent,
    TaskKind,
)
from .driving import DEFAULT_SPEED_MPS, build_ideal_path


@dataclass(frozen=True)
class LevelTargets:
    """Per (task, level) population means the generator aims for."""

    hr_mean_bpm: float
    hr_sd: float  # pooled sd from the descriptive table; kept for reference
    rmssd_ms: float
    rmssd_sd: float
    lhipa_left: float
    lhipa_left_sd: float
    lhipa_right: float
    lhipa_right_sd: float
    drive_dev_m: float
    drive_sd: float
    # secondary-task behavior
    hit_prob: float
    false_positive_prob: float
    rt_mean_s: float


# Defaults follow the study's per-condition descriptive means; behavior
# probabilities are set so n-back performance rates land near 0.96/0.85/0.36
# and visual-search accuracy near 0.99/0.99/0.95.
DEFAULT_TARGETS: dict[tuple[TaskKind, LoadLevel], LevelTargets] = {
    (TaskKind.NBACK, LoadLevel.EASY): LevelTargets(77.49, 12.60, 37.79, 19.50, 2.37, 0.51, 2.38, 0.50, 0.15, 0.08, 0.97, 0.003, 0.9),
    (TaskKind.NBACK, LoadLevel.MEDIUM): LevelTargets(82.54, 14.17, 31.86, 15.99, 2.34, 0.34, 2.28, 0.31, 0.21, 0.13, 0.88, 0.010, 1.1),
    (TaskKind.NBACK, LoadLevel.HARD): LevelTargets(82.97, 14.78, 30.34, 14.42, 2.29, 0.30, 2.29, 0.43, 0.23, 0.16, 0.48, 0.040, 1.3),
    (TaskKind.VISUAL_SEARCH, LoadLevel.EASY): LevelTargets(77.29, 11.81, 38.37, 18.53, 2.30, 0.22, 2.46, 0.58, 0.24, 0.11, 0.99, 0.010, 1.29),
    (TaskKind.VISUAL_SEARCH, LoadLevel.MEDIUM): LevelTargets(78.58, 12.00, 36.52, 17.20, 2.30, 0.24, 2.39, 0.56, 0.24, 0.12, 0.99, 0.010, 1.44),
    (TaskKind.VISUAL_SEARCH, LoadLevel.HARD): LevelTargets(78.63, 12.70, 37.70, 19.36, 2.30, 0.24, 2.44, 0.58, 0.27, 0.12, 0.95, 0.010, 1.75),
}


@dataclass(frozen=True)
class GeneratorConfig:
    n_participants: int = 45
    seed: int = 7
    targets: dict[tuple[TaskKind, LoadLevel], LevelTargets] = field(
        default_factory=lambda: dict(DEFAULT_TARGETS)
    )
    # between-participant baseline spreads (additive offsets on the targets)
    hr_baseline_sd: float = 5.0
    rmssd_baseline_sd: float = 6.0
    drive_baseline_sd: float = 0.015
    # driving deviation varies session to session much more than its stable
    # per-driver component, which keeps its cross-condition consistency low
    drive_session_sd: float = 0.09
    # baseline HR and HRV are anticorrelated across participants
    hr_rmssd_baseline_corr: float = -0.5
    # segment timing
    duration_min_s: float = 125.0
    duration_max_s: float = 160.0
    # task schedules
    n_stimuli: int = 40
    stimulus_interval_s: float = 3.0  # 2000 ms presentation + 1000 ms pause
    nback_target_fraction: float = 0.25
    visual_search_target_fraction: float = 0.5
    # sensor parameters
    pupil_rate_hz: float = 120.0
    pupil_base_mm: float = 4.0
    pupil_noise_mm: float = 0.02  # white-noise amplitude at the reference index value
    lhipa_reference: float = 2.38  # index produced by pupil_noise_mm at defaults
    driving_rate_hz: float = 33.0
    speed_mps: float = DEFAULT_SPEED_MPS
    rt_sd_s: float = 0.18


def null_config(config: GeneratorConfig) -> GeneratorConfig:
    """Zero all level effects: every level of a task gets that task's mean targets."""
    targets = {}
    for task in TaskKind:
        per_level = [config.targets[(task, level)] for level in LoadLevel]
        mean_t = LevelTargets(
            *[float(np.mean([getattr(t, f) for t in per_level])) for f in LevelTargets.__dataclass_fields__]
        )
        for level in LoadLevel:
            targets[(task, level)] = mean_t
    return replace(config, targets=targets)


def _rng_for(config: GeneratorConfig, participant_index: int) -> np.random.Generator:
    return np.random.default_rng([config.seed, participant_index])


def _synth_rr(rng, duration_s: float, hr_bpm: float, rmssd_ms: float):
    mean_rr = 60000.0 / hr_bpm
    if rmssd_ms >= mean_rr:
        raise ValueError(f"infeasible targets: RMSSD {rmssd_ms} >= mean RR {mean_rr:.0f}")
    jitter_sd = rmssd_ms / math.sqrt(2.0)
    if mean_rr - 3.2 * jitter_sd <= 300.0:
        raise ValueError("infeasible targets: RR jitter reaches the artifact-rejection floor")
    n_max = int(duration_s * 1000.0 / (mean_rr - 3.2 * jitter_sd)) + 2
    # truncate jitter at 3.2 sd so successive jumps stay inside cleaning bounds
    jitter = np.clip(rng.normal(0.0, jitter_sd, size=n_max), -3.2 * jitter_sd, 3.2 * jitter_sd)
    rr = mean_rr + jitter
    onsets = np.cumsum(rr) / 1000.0
    keep = onsets <= duration_s
    return tuple(zip(onsets[keep].tolist(), rr[keep].tolist()))


def _synth_pupil(rng, config: GeneratorConfig, duration_s: float, base_mm: float, lhipa_target: float):
    n = int(duration_s * config.pupil_rate_hz)
    t = np.arange(n) / config.pupil_rate_hz
    signal = np.full(n, base_mm)
    for _ in range(3):
        freq = rng.uniform(0.1, 0.5)
        amp = rng.uniform(0.05, 0.15)
        phase = rng.uniform(0.0, 2.0 * math.pi)
        signal += amp * np.sin(2.0 * math.pi * freq * t + phase)
    noise_sd = config.pupil_noise_mm * lhipa_target / config.lhipa_reference
    signal += rng.normal(0.0, noise_sd, size=n)
    signal = np.maximum(signal, 0.5)
    confidence = np.ones(n)
    # a few sub-500 ms tracking dropouts
    for _ in range(rng.poisson(3.0)):
        start = rng.integers(0, max(1, n - 60))
        width = int(rng.uniform(0.1, 0.4) * config.pupil_rate_hz)
        confidence[start : start + width] = 0.0
    return tuple(zip(t.tolist(), signal.tolist(), confidence.tolist()))


def _synth_driving(rng, config: GeneratorConfig, duration_s: float, dev_target_m: float):
    route_m = config.speed_mps * duration_s
    change_points = []
    lane = 1
    s = 80.0 + rng.uniform(0.0, 40.0)
    while s < route_m - 50.0:
        options = [l for l in (lane - 1, lane + 1) if 0 <= l <= 2]
        to_lane = int(rng.choice(options))
        change_points.append((s, lane, to_lane))
        lane = to_lane
        s += rng.uniform(120.0, 200.0)
    path = build_ideal_path(change_points)
    n = int(duration_s * config.driving_rate_hz)
    t = np.arange(n) / config.driving_rate_hz
    s_grid = config.speed_mps * t
    noise_sd = dev_target_m * math.sqrt(math.pi / 2.0)
    lateral = path.offset(s_grid) + rng.normal(0.0, noise_sd, size=n)
    lanes = np.zeros(n, dtype=int)
    lanes[:] = change_points[0][1] if change_points else 1
    for cp_s, _, to_lane in change_points:
        lanes[s_grid >= cp_s] = to_lane
    return tuple(zip(t.tolist(), lateral.tolist(), lanes.tolist()))


def _synth_events(rng, config: GeneratorConfig, task: TaskKind, targets: LevelTargets):
    n = config.n_stimuli
    frac = config.nback_target_fraction if task is TaskKind.NBACK else config.visual_search_target_fraction
    n_targets = round(n * frac)
    is_target = np.zeros(n, dtype=bool)
    is_target[rng.permutation(n)[:n_targets]] = True
    events: list[TaskEvent] = []
    for i in range(n):
        onset = 1.0 + i * config.stimulus_interval_s
        kind = EventKind.TARGET_PRESENT if is_target[i] else EventKind.TARGET_ABSENT
        events.append(TaskEvent(onset, kind, payload=f"s{i}"))
        respond = rng.random() < (targets.hit_prob if is_target[i] else targets.false_positive_prob)
        if respond:
            if task is TaskKind.NBACK:
                rt = rng.uniform(0.4, 1.8)
            else:
                rt = float(np.clip(rng.normal(targets.rt_mean_s, config.rt_sd_s), 0.25, 2.9))
            events.append(TaskEvent(onset + rt, EventKind.RESPONSE, payload=f"s{i}"))
    events.sort(key=lambda e: e.t_s)
    return tuple(events)


def _generate_participant(config: GeneratorConfig, index: int) -> list[SessionSegment]:
    rng = _rng_for(config, index)
    pid = f"p{index:03d}"

    # anticorrelated HR / HRV baselines
    rho = config.hr_rmssd_baseline_corr
    a, b = rng.normal(size=2)
    hr_base = config.hr_baseline_sd * a
    rmssd_base = config.rmssd_baseline_sd * (rho * a + math.sqrt(1.0 - rho**2) * b)
    drive_base = config.drive_baseline_sd * rng.normal()
    pupil_base = config.pupil_base_mm + rng.normal(0.0, 0.35)

    segments = []
    for task in TaskKind:
        for level in LoadLevel:
            targets = config.targets[(task, level)]
            duration = rng.uniform(config.duration_min_s, config.duration_max_s)
            hr = targets.hr_mean_bpm + hr_base
            rmssd_t = max(8.0, targets.rmssd_ms + rmssd_base)
            dev_t = max(0.03, targets.drive_dev_m + drive_base + rng.normal(0.0, config.drive_session_sd))
            segments.append(
                SessionSegment(
                    participant_id=pid,
                    task=task,
                    level=level,
                    rr_intervals=_synth_rr(rng, duration, hr, rmssd_t),
                    pupil_left=_synth_pupil(rng, config, duration, pupil_base, targets.lhipa_left),
                    pupil_right=_synth_pupil(rng, config, duration, pupil_base, targets.lhipa_right),
                    driving=_synth_driving(rng, config, duration, dev_t),
                    events=_synth_events(rng, config, task, targets),
                    duration_s=duration,
                )
            )
    return segments


def generate_dataset(config: GeneratorConfig = GeneratorConfig()) -> Dataset:
    """Synthesize n_participants x 6 segments; deterministic per seed."""
    if config.n_participants < 1:
        raise ValueError("n_participants must be >= 1")
    segments = []
    for index in range(config.n_participants):
        segments.extend(_generate_participant(config, index))
    return Dataset(segments=tuple(segments))


def generate_null_dataset(config: GeneratorConfig = GeneratorConfig()) -> Dataset:
    """Same generator with all level effects zeroed; labels carry no signal."""
    return generate_dataset(null_config(config))


# ---------------------------------------------------------------------------
# Flat key-value config files


def save_config(config: GeneratorConfig, path: str | Path) -> None:
    lines = [
        f"n_participants={config.n_participants}",
        f"seed={config.seed}",
        f"hr_baseline_sd={config.hr_baseline_sd!r}",
        f"rmssd_baseline_sd={config.rmssd_baseline_sd!r}",
        f"drive_baseline_sd={config.drive_baseline_sd!r}",
        f"drive_session_sd={config.drive_session_sd!r}",
        f"hr_rmssd_baseline_corr={config.hr_rmssd_baseline_corr!r}",
        f"duration_min_s={config.duration_min_s!r}",
        f"duration_max_s={config.duration_max_s!r}",
        f"pupil_noise_mm={config.pupil_noise_mm!r}",
    ]
    for (task, level), t in sorted(config.targets.items(), key=lambda kv: (kv[0][0].value, int(kv[0][1]))):
        prefix = f"{task.value}.{level.name.lower()}"
        for fname in LevelTargets.__dataclass_fields__:
            lines.append(f"{prefix}.{fname}={getattr(t, fname)!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_config(path: str | Path) -> GeneratorConfig:
    base = GeneratorConfig()
    scalars: dict[str, float] = {}
    target_fields: dict[tuple[TaskKind, LoadLevel], dict[str, float]] = {}
    level_names = {level.name.lower(): level for level in LoadLevel}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        parts = key.split(".")
        if len(parts) == 1:
            scalars[key] = float(value)
        elif len(parts) == 3:
            task = TaskKind(parts[0])
            level = level_names[parts[1]]
            target_fields.setdefault((task, level), {})[parts[2]] = float(value)
        else:
            raise ValueError(f"{path}:{lineno}: bad key {key!r}")
    targets = dict(base.targets)
    for cond, fields in target_fields.items():
        targets[cond] = replace(targets[cond], **fields)
    kwargs = dict(scalars)
    for int_key in ("n_participants", "seed"):
        if int_key in kwargs:
            kwargs[int_key] = int(kwargs[int_key])
    return replace(base, targets=targets, **kwargs)
