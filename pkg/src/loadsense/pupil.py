"""Pupillary activity index from the low/high-frequency wavelet detail ratio.

The index counts thresholded modulus maxima of the ratio between a
low-frequency and a high-frequency detail band of the pupil diameter
signal, normalized by segment duration (units: 1/second).  The wavelet
machinery (a 32-tap least-asymmetric orthonormal filter bank with
periodized extension) is self-contained; the filter coefficients are
embedded as constants below.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)

# Decomposition low-pass filter: 32-tap orthonormal least-asymmetric filter
# with 16 vanishing moments, generated by spectral factorization of the
# degree-15 Daubechies polynomial (root subset chosen to minimize impulse
# response asymmetry).  sum == sqrt(2), shifts by 2 are orthonormal.
_SYM16_DEC_LO = (
    7.681055321580372e-06,
    2.1884746082762307e-06,
    -0.00012571947066341882,
    -6.867177495769291e-05,
    0.0008278878337619905,
    0.0004739582164680316,
    -0.002829015110854247,
    0.00027894521822966297,
    0.009068176115021837,
    -0.008896898240355958,
    -0.037832884428177754,
    0.0018288836548515813,
    0.05593153234187481,
    0.014878476138344018,
    0.09354335053640268,
    0.48961122195009915,
    0.7302317048616664,
    0.3430049861902869,
    -0.18908481775394087,
    -0.21335773210182848,
    0.04794252996031356,
    0.10496536620780125,
    0.0011683676555562733,
    -0.0320553214132558,
    -0.002317790908133712,
    0.00759862665051159,
    0.0006523872206013787,
    -0.0012946563598614225,
    -7.910406860844333e-05,
    0.0001461664821495393,
    2.4953464053690486e-06,
    -8.758106543097312e-06,
)


@dataclass(frozen=True)
class WaveletSpec:
    name: str
    dec_lo: tuple[float, ...]
    mode: str = "periodization"

    @property
    def dec_hi(self) -> tuple[float, ...]:
        # quadrature mirror of the low-pass; annihilates constants
        lo = self.dec_lo
        n = len(lo)
        return tuple((-1.0) ** i * lo[n - 1 - i] for i in range(n))

    @property
    def filter_len(self) -> int:
        return len(self.dec_lo)


SYM16 = WaveletSpec(name="sym16", dec_lo=_SYM16_DEC_LO)


@dataclass(frozen=True)
class UniformPupilSignal:
    start_s: float
    rate_hz: float
    samples: np.ndarray

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.rate_hz


GAP_CONFIDENCE = 0.6
MAX_INTERP_GAP_S = 0.5
MAX_GAP_FRACTION = 0.25
MIN_USABLE_S = 2.0


def preprocess_pupil(
    raw: Sequence[tuple[float, float, float]], target_rate_hz: float = 120.0
) -> UniformPupilSignal | None:
    """Gap-fill and resample raw (t, diameter, confidence) samples to a uniform grid.

    Samples below the confidence threshold are gaps.  Leading/trailing gaps
    are trimmed; interior gaps are bridged by linear interpolation (gaps
    longer than 500 ms are still bridged but count toward the gap budget).
    Returns None when more than 25% of the segment is gap or fewer than 2 s
    of usable signal remain.
    """
    if len(raw) == 0:
        raise ValueError("preprocess_pupil: empty input")
    arr = np.asarray(raw, dtype=float)
    good = arr[:, 2] >= GAP_CONFIDENCE
    if good.sum() < 2:
        return None
    if (~good).mean() > MAX_GAP_FRACTION:
        return None

    t = arr[good, 0]
    d = arr[good, 1]
    t0, t1 = t[0], t[-1]
    if t1 - t0 < MIN_USABLE_S:
        return None

    n = int(math.floor((t1 - t0) * target_rate_hz)) + 1
    grid = t0 + np.arange(n) / target_rate_hz
    samples = np.interp(grid, t, d)
    return UniformPupilSignal(start_s=float(t0), rate_hz=float(target_rate_hz), samples=samples)


def _dwt_step(x: np.ndarray, filt: np.ndarray) -> np.ndarray:
    """One analysis step with periodized extension and downsampling by 2.

    Odd-length input is first extended by repeating its last sample.
    Output length is ceil(len(x) / 2).
    """
    if len(x) % 2:
        x = np.concatenate([x, x[-1:]])
    n = len(x)
    L = len(filt)
    # left periodic pad so index 2k+1-i never wraps negative
    xe = np.concatenate([x[-(L - 1):], x]) if n >= L - 1 else np.concatenate(
        [np.tile(x, (L - 1) // n + 1)[-(L - 1):], x]
    )
    conv = np.convolve(xe, filt)
    return conv[L : L + n : 2].copy()


def dwt_detail(signal: Sequence[float], level: int, spec: WaveletSpec = SYM16) -> np.ndarray:
    """Detail coefficients at `level`: level-1 low-pass cascades then one high-pass."""
    if level < 1:
        raise ValueError("level must be >= 1")
    x = np.asarray(signal, dtype=float)
    if len(x) < 2**level:
        raise ValueError(f"signal of length {len(x)} too short for level {level}")
    lo = np.asarray(spec.dec_lo)
    hi = np.asarray(spec.dec_hi)
    for _ in range(level - 1):
        x = _dwt_step(x, lo)
    return _dwt_step(x, hi)


def dwt_approx(signal: Sequence[float], level: int, spec: WaveletSpec = SYM16) -> np.ndarray:
    """Approximation coefficients at `level` (low-pass cascade)."""
    x = np.asarray(signal, dtype=float)
    lo = np.asarray(spec.dec_lo)
    for _ in range(level):
        x = _dwt_step(x, lo)
    return x


def max_decomposition_level(n: int, spec: WaveletSpec = SYM16) -> int:
    return int(math.floor(math.log2(n / (spec.filter_len - 1))))


def modulus_maxima(x: Sequence[float]) -> np.ndarray:
    """Keep x[i] where |x[i]| strictly exceeds its left neighbor and is >= its
    right neighbor; everything else (including endpoints) becomes 0."""
    x = np.asarray(x, dtype=float)
    if len(x) < 3:
        raise ValueError("modulus_maxima: need at least 3 samples")
    m = np.abs(x)
    out = np.zeros_like(x)
    keep = (m[1:-1] > m[:-2]) & (m[1:-1] >= m[2:])
    out[1:-1][keep] = x[1:-1][keep]
    return out


def lhipa(signal: UniformPupilSignal, spec: WaveletSpec = SYM16) -> float:
    """Low/high pupillary activity index, in events per second.

    Pipeline: detail bands at levels 1 (high) and maxlevel//2 (low), each
    normalized by 1/sqrt(2^level); pointwise low/high ratio with index
    mapping i -> i * 2^(lof-1) and zero where the denominator vanishes;
    modulus maxima; universal threshold sigma * sqrt(2 * log2(n)) zeroing
    large-magnitude maxima; surviving count divided by signal duration.
    """
    x = np.asarray(signal.samples, dtype=float)
    n = len(x)
    maxlevel = max_decomposition_level(n, spec)
    if maxlevel < 2:
        raise ValueError("signal too short for the two-band decomposition")
    hif, lof = 1, maxlevel // 2

    cd_h = dwt_detail(x, hif, spec) / math.sqrt(2.0**hif)
    cd_l = dwt_detail(x, lof, spec) / math.sqrt(2.0**lof)

    stride = 2 ** (lof - hif)
    ratio = np.zeros(len(cd_l))
    for i in range(len(cd_l)):
        j = i * stride
        if j >= len(cd_h):
            break
        den = cd_h[j]
        ratio[i] = cd_l[i] / den if abs(den) >= 1e-12 else 0.0

    if not np.any(ratio) and np.any(np.abs(cd_l) >= 1e-12):
        log.warning("lhipa: high-frequency band is zero while low band is not; returning 0")
        return 0.0

    maxima = modulus_maxima(ratio)
    lam = float(np.std(maxima)) * math.sqrt(2.0 * math.log2(len(maxima)))
    kept = maxima.copy()
    kept[np.abs(kept) > lam] = 0.0
    count = int(np.count_nonzero(kept))
    return count / signal.duration_s


def compute_lhipa(
    raw: Sequence[tuple[float, float, float]],
    target_rate_hz: float = 120.0,
    spec: WaveletSpec = SYM16,
) -> float | None:
    """Preprocess one eye's raw samples and compute the index; None when unusable."""
    if len(raw) == 0:
        return None
    signal = preprocess_pupil(raw, target_rate_hz)
    if signal is None:
        return None
    try:
        return lhipa(signal, spec)
    except ValueError:
        return None
