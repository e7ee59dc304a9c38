#!/usr/bin/env python3
"""Regenerate tests/fixtures/lhipa_reference.csv.

The expected values come from a deliberately naive, self-contained
transcription of the pupillary-activity index pipeline: the wavelet
transform is computed level by level with an explicit per-coefficient
index sum (no convolution tricks shared with the package code), and each
pipeline step below mirrors the published step list one statement at a
time.  The package implementation must agree with these frozen values to
within 1e-6; if this script and the package ever drift apart, one of the
two transcriptions has a bug.

Run from the repository root:

    python3 scripts/make_lhipa_fixtures.py
"""

from __future__ import annotations

import csv
import math
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from loadsense.pupil import SYM16  # shared constants only, no shared code path

N_FIXTURES = 50
RATE_HZ = 120.0
DURATION_S = 120.0
OUT_PATH = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "lhipa_reference.csv"


def naive_dwt_level(x: list[float], lo: list[float]) -> tuple[list[float], list[float]]:
    """One periodized analysis step, straight from the definition.

    If the input length is odd the last sample is repeated once.  Each
    output coefficient k is the explicit sum over filter taps i of
    filt[i] * x[(2k + 1 - i) mod n].
    """
    if len(x) % 2 == 1:
        x = list(x) + [x[-1]]
    n = len(x)
    taps = len(lo)
    hi = [((-1) ** i) * lo[taps - 1 - i] for i in range(taps)]
    approx, detail = [], []
    for k in range(n // 2):
        a = 0.0
        d = 0.0
        for i in range(taps):
            sample = x[(2 * k + 1 - i) % n]
            a += lo[i] * sample
            d += hi[i] * sample
        approx.append(a)
        detail.append(d)
    return approx, detail


def naive_detail(x: list[float], level: int, lo: list[float]) -> list[float]:
    approx = list(x)
    detail = []
    for _ in range(level):
        approx, detail = naive_dwt_level(approx, lo)
    return detail


def naive_lhipa(values: list[float], rate_hz: float, lo: list[float]) -> float:
    n = len(values)
    duration_s = n / rate_hz
    maxlevel = int(math.floor(math.log2(n / (len(lo) - 1))))

    # step 1: band choice
    hif = 1
    lof = maxlevel // 2

    # step 2: detail coefficients
    cd_h = naive_detail(values, hif, lo)
    cd_l = naive_detail(values, lof, lo)

    # step 3: per-level 1/sqrt(2^j) normalization
    cd_h = [c / math.sqrt(2.0 ** hif) for c in cd_h]
    cd_l = [c / math.sqrt(2.0 ** lof) for c in cd_l]

    # step 4: low/high ratio with index mapping i -> i * 2^(lof - hif)
    stride = 2 ** (lof - hif)
    ratio = []
    for i in range(len(cd_l)):
        den = cd_h[i * stride]
        ratio.append(0.0 if abs(den) < 1e-12 else cd_l[i] / den)

    # step 5: modulus maxima (strictly above the left neighbor, at least
    # the right neighbor; endpoints are never maxima)
    m = [0.0] * len(ratio)
    for i in range(1, len(ratio) - 1):
        if abs(ratio[i]) > abs(ratio[i - 1]) and abs(ratio[i]) >= abs(ratio[i + 1]):
            m[i] = ratio[i]

    # step 6: universal threshold, keep-small
    lam = float(np.std(m)) * math.sqrt(2.0 * math.log2(len(m)))
    kept = [v for v in m if v != 0.0 and abs(v) <= lam]

    # step 7: count per second
    return len(kept) / duration_s


def make_signal(seed: int) -> list[float]:
    rng = np.random.default_rng(1000 + seed)
    n = int(DURATION_S * RATE_HZ)
    t = np.arange(n) / RATE_HZ
    signal = np.full(n, 4.0 + rng.normal(0.0, 0.3))
    for _ in range(3):
        freq = rng.uniform(0.1, 0.5)
        amp = rng.uniform(0.05, 0.15)
        phase = rng.uniform(0.0, 2.0 * math.pi)
        signal = signal + amp * np.sin(2.0 * math.pi * freq * t + phase)
    signal = signal + rng.normal(0.0, 0.02, size=n)
    return signal.tolist()


def main() -> None:
    lo = list(SYM16.dec_lo)
    OUT_PATH.parent.mkdir(parents=True, exist_ok=True)
    with OUT_PATH.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seed", "rate_hz", "duration_s", "expected_lhipa"])
        for seed in range(N_FIXTURES):
            value = naive_lhipa(make_signal(seed), RATE_HZ, lo)
            writer.writerow([seed, RATE_HZ, DURATION_S, repr(value)])
    print(f"wrote {N_FIXTURES} fixtures to {OUT_PATH}")


if __name__ == "__main__":
    main()
