"""Ideal-path construction, lateral-deviation metrics, and secondary-task scores."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import EventKind, STIMULUS_KINDS, TaskEvent

DEFAULT_LANE_WIDTH_M = 3.5
DEFAULT_TRANSITION_M = 36.0
DEVIATION_RATE_HZ = 33.0
DEFAULT_SPEED_MPS = 60.0 / 3.6  # undisturbed lane-change speed, 60 km/h
# stimulus presentation (2 s) plus inter-stimulus pause (1 s)
STIMULUS_WINDOW_S = 3.0


@dataclass(frozen=True)
class IdealPath:
    """Piecewise-linear lane-center reference: longitudinal s -> lateral offset.

    Lane k's center sits at k * lane_width.  Each lane change is a linear
    ramp of exactly transition_length meters starting at the change point.
    """

    change_points: tuple[tuple[float, int, int], ...]  # (s, from_lane, to_lane)
    lane_width: float = DEFAULT_LANE_WIDTH_M
    transition_length: float = DEFAULT_TRANSITION_M

    def _knots(self) -> tuple[np.ndarray, np.ndarray]:
        start_lane = self.change_points[0][1] if self.change_points else 0
        xs = [0.0]
        ys = [start_lane * self.lane_width]
        for s, from_lane, to_lane in self.change_points:
            xs.append(s)
            ys.append(from_lane * self.lane_width)
            xs.append(s + self.transition_length)
            ys.append(to_lane * self.lane_width)
        return np.asarray(xs), np.asarray(ys)

    def offset(self, s) -> np.ndarray:
        """Lateral center offset in meters at longitudinal position(s) s."""
        xs, ys = self._knots()
        return np.interp(np.asarray(s, dtype=float), xs, ys)


def build_ideal_path(
    change_points: Sequence[tuple[float, int, int]],
    lane_width: float = DEFAULT_LANE_WIDTH_M,
    transition_length: float = DEFAULT_TRANSITION_M,
) -> IdealPath:
    points = tuple(change_points)
    for (s0, _, prev_to), (s1, from_lane, _) in zip(points, points[1:]):
        if s1 <= s0:
            raise ValueError("change points must be strictly ordered")
        if s1 - s0 <= transition_length:
            raise ValueError("overlapping transitions")
        if from_lane != prev_to:
            raise ValueError("discontinuous lane sequence in change points")
    return IdealPath(change_points=points, lane_width=lane_width, transition_length=transition_length)


@dataclass(frozen=True)
class DeviationSeries:
    rate_hz: float
    values: np.ndarray


def deviation_series(
    trace: Sequence[tuple[float, float]],
    path: IdealPath,
    speed_mps: float = DEFAULT_SPEED_MPS,
    rate_hz: float = DEVIATION_RATE_HZ,
) -> DeviationSeries:
    """|actual - ideal| lateral distance resampled to 33 Hz.

    The trace is (t_s, lateral_position_m); longitudinal position is
    speed_mps * (t - t0).  The output grid is half-open: samples at
    t0 + k/rate for k = 0 .. floor(span * rate) - 1, so a 10 s trace
    yields exactly 330 values.
    """
    if len(trace) == 0:
        raise ValueError("deviation_series: empty trace")
    arr = np.asarray([(t, lat) for t, lat, *_ in trace], dtype=float)
    t = arr[:, 0]
    lat = arr[:, 1]
    span = t[-1] - t[0]
    if span < 1.0:
        raise ValueError("deviation_series: trace must cover at least 1 s")
    n = int(math.floor(span * rate_hz))
    grid = t[0] + np.arange(n) / rate_hz
    lat_u = np.interp(grid, t, lat)
    s = speed_mps * (grid - t[0])
    values = np.abs(lat_u - path.offset(s))
    return DeviationSeries(rate_hz=rate_hz, values=values)


def deviation_stats(dev: DeviationSeries) -> tuple[float, float, float, float, float]:
    """(mean, median, min, max, sample std) of the deviation values."""
    v = dev.values
    if len(v) == 0:
        raise ValueError("deviation_stats: empty series")
    std = float(np.std(v, ddof=1)) if len(v) > 1 else 0.0
    return float(np.mean(v)), float(np.median(v)), float(np.min(v)), float(np.max(v)), std


def _stimulus_windows(events: Sequence[TaskEvent]) -> list[tuple[TaskEvent, float]]:
    """Stimulus markers paired with their window end (next onset, or +3 s for the last)."""
    stimuli = [e for e in events if e.kind in STIMULUS_KINDS]
    windows = []
    for i, stim in enumerate(stimuli):
        end = stimuli[i + 1].t_s if i + 1 < len(stimuli) else stim.t_s + STIMULUS_WINDOW_S
        windows.append((stim, end))
    return windows


def nback_rate(events: Sequence[TaskEvent]) -> float:
    """(hits - false positives) / number of targets.

    A hit is a Response inside a TargetPresent stimulus window; a Response
    inside a TargetAbsent window counts as a false positive.  Windows run
    from each stimulus onset to the next.
    """
    windows = _stimulus_windows(events)
    responses = [e.t_s for e in events if e.kind is EventKind.RESPONSE]
    n_targets = sum(1 for stim, _ in windows if stim.kind is EventKind.TARGET_PRESENT)
    if n_targets == 0:
        raise ValueError("nback_rate: no targets in event log")
    hits = 0
    false_positives = 0
    for stim, end in windows:
        responded = any(stim.t_s < r <= end for r in responses)
        if stim.kind is EventKind.TARGET_PRESENT and responded:
            hits += 1
        elif stim.kind is EventKind.TARGET_ABSENT and responded:
            false_positives += 1
    return (hits - false_positives) / n_targets


def visual_search_perf(events: Sequence[TaskEvent]) -> tuple[float | None, float]:
    """(mean reaction time, accuracy) for the visual-search event log.

    Reaction time is response minus onset for stimuli answered inside the
    3 s presentation+pause window, averaged over answered stimuli (None if
    no stimulus was answered).  A stimulus is scored correct when the
    presence of a response matches the presence of a target.
    """
    windows = _stimulus_windows(events)
    if not windows:
        raise ValueError("visual_search_perf: no stimuli in event log")
    responses = [e.t_s for e in events if e.kind is EventKind.RESPONSE]
    rts = []
    correct = 0
    for stim, end in windows:
        end = min(end, stim.t_s + STIMULUS_WINDOW_S)
        in_window = [r for r in responses if stim.t_s < r <= end]
        responded = bool(in_window)
        if responded:
            rts.append(in_window[0] - stim.t_s)
        if stim.kind is EventKind.TARGET_PRESENT:
            correct += responded
        elif stim.kind is EventKind.TARGET_ABSENT:
            correct += not responded
        else:  # bare StimulusOnset: any response counts as correct
            correct += responded
    mean_rt = float(np.mean(rts)) if rts else None
    return mean_rt, correct / len(windows)
