"""ECG-derived features: heart-rate statistics and HRV-RMSSD."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import SessionSegment


@dataclass(frozen=True)
class RrPolicy:
    """Artifact-rejection bounds for raw RR intervals."""

    min_rr_ms: float = 300.0
    max_rr_ms: float = 2000.0
    max_successive_change: float = 0.25

    def __post_init__(self):
        if not 0 < self.min_rr_ms < self.max_rr_ms:
            raise ValueError("require 0 < min_rr_ms < max_rr_ms")
        if not 0 < self.max_successive_change < 1:
            raise ValueError("max_successive_change must be in (0, 1)")


@dataclass(frozen=True)
class CardiacFeatures:
    hr_mean: float
    hr_min: float
    hr_max: float
    hr_std: float
    rmssd: float
    n_beats_used: int


def clean_rr(rr: Sequence[float], policy: RrPolicy = RrPolicy()) -> list[float]:
    """Drop out-of-range beats and jumps larger than the policy fraction.

    The change check compares each candidate against the last *surviving*
    beat, so a single ectopic does not reject its successors.
    """
    if len(rr) == 0:
        raise ValueError("clean_rr: empty RR sequence")
    kept: list[float] = []
    for value in rr:
        if not policy.min_rr_ms <= value <= policy.max_rr_ms:
            continue
        if kept and abs(value - kept[-1]) / kept[-1] > policy.max_successive_change:
            continue
        kept.append(value)
    if not kept:
        raise ValueError("no valid RR intervals")
    return kept


def hr_stats(rr: Sequence[float]) -> tuple[float, float, float, float]:
    """(mean, min, max, sample std) of instantaneous heart rate, 60000/rr_ms per beat."""
    if len(rr) == 0:
        raise ValueError("hr_stats: empty RR sequence")
    hr = 60000.0 / np.asarray(rr, dtype=float)
    std = float(np.std(hr, ddof=1)) if len(hr) > 1 else 0.0
    return float(np.mean(hr)), float(np.min(hr)), float(np.max(hr)), std


def rmssd(rr: Sequence[float]) -> float:
    """Root mean square of successive RR differences, in milliseconds."""
    if len(rr) < 2:
        raise ValueError("RMSSD undefined for fewer than 2 intervals")
    diffs = np.diff(np.asarray(rr, dtype=float))
    return math.sqrt(float(np.mean(diffs**2)))


def compute_cardiac_features(seg: SessionSegment, policy: RrPolicy = RrPolicy()) -> CardiacFeatures | None:
    """All five ECG features for one segment, or None when the channel is unusable."""
    raw = [rr_ms for _, rr_ms in seg.rr_intervals]
    if not raw:
        return None
    try:
        kept = clean_rr(raw, policy)
    except ValueError:
        return None
    if len(kept) < 2:
        return None
    mean, lo, hi, std = hr_stats(kept)
    return CardiacFeatures(mean, lo, hi, std, rmssd(kept), len(kept))
