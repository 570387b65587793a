"""Morlet scalograms and lagged cross-correlation similarity matrices."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .core import RdwtError, Signal

DEFAULT_CYCLES = 7.0


@dataclass(frozen=True)
class Scalogram:
    magnitudes: np.ndarray   # frequencies x times
    freqs_hz: np.ndarray
    fs: float

    def __post_init__(self):
        f = np.asarray(self.freqs_hz, dtype=np.float64)
        m = np.asarray(self.magnitudes, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != f.size:
            raise RdwtError("magnitudes must be frequencies x times")
        if f.size > 1 and np.any(np.diff(f) <= 0):
            raise RdwtError("frequencies must be strictly ascending")
        if np.any(f <= 0) or np.any(f > self.fs / 2):
            raise RdwtError("frequencies must lie in (0, fs/2]")
        if not np.all(np.isfinite(m)) or np.any(m < 0):
            raise RdwtError("magnitudes must be finite and non-negative")
        object.__setattr__(self, "freqs_hz", f)
        object.__setattr__(self, "magnitudes", m)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.magnitudes.shape[1]) / self.fs

    def mean_spectrum(self) -> np.ndarray:
        return self.magnitudes.mean(axis=1)

    def peak_frequency(self) -> float:
        return float(self.freqs_hz[np.argmax(self.mean_spectrum())])

    def to_csv(self) -> str:
        """Header row holds times in seconds; each row starts with its frequency in Hz."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["freq_hz"] + [repr(float(t)) for t in self.times])
        for f, row in zip(self.freqs_hz, self.magnitudes):
            w.writerow([repr(float(f))] + [repr(float(v)) for v in row])
        return buf.getvalue()


def default_freqs(fs: float, n: int = 64, fmin: float = 2.0, fmax: float = 150.0) -> np.ndarray:
    """Log-spaced grid from ``fmin`` to ``min(fmax, 0.98 * fs / 2)``."""
    top = min(fmax, 0.98 * fs / 2)
    if top <= fmin:
        raise RdwtError(f"sampling rate {fs} Hz too low for a grid starting at {fmin} Hz")
    return np.geomspace(fmin, top, n)


def morlet_atom(freq: float, fs: float, cycles: float = DEFAULT_CYCLES) -> np.ndarray:
    """Complex Morlet wavelet at ``freq`` with unit L2 norm, truncated at 4 sigma."""
    sigma_t = cycles / (2.0 * np.pi * freq)
    half = int(np.ceil(4.0 * sigma_t * fs))
    t = np.arange(-half, half + 1) / fs
    atom = np.exp(2j * np.pi * freq * t) * np.exp(-0.5 * (t / sigma_t) ** 2)
    return atom / np.linalg.norm(atom)


def cwt_scalogram(x: Signal, freqs_hz=None, cycles: float = DEFAULT_CYCLES) -> Scalogram:
    """Magnitude of the complex-Morlet continuous wavelet transform of ``x``."""
    if freqs_hz is None:
        freqs_hz = default_freqs(x.fs)
    freqs = np.asarray(freqs_hz, dtype=np.float64)
    if freqs.ndim != 1 or freqs.size == 0:
        raise RdwtError("need at least one frequency")
    if np.any(freqs > x.fs / 2):
        raise RdwtError(f"frequency {freqs.max()} Hz above Nyquist ({x.fs / 2} Hz)")
    if np.any(freqs <= 0):
        raise RdwtError("frequencies must be positive")
    if not cycles > 0:
        raise RdwtError("cycles must be positive")
    out = np.empty((freqs.size, len(x)))
    for i, f in enumerate(freqs):
        atom = morlet_atom(f, x.fs, cycles)
        # correlate with the atom: convolve with its time-reversed conjugate
        out[i] = np.abs(fftconvolve(x.samples, np.conj(atom[::-1]), mode="same"))
    return Scalogram(out, freqs, x.fs)


def max_normalized_xcorr(x: Signal, y: Signal, max_lag: int) -> float:
    """Largest Pearson correlation between ``x[t]`` and ``y[t + k]`` over ``|k| <= max_lag``.

    Each lag uses only the overlapping samples, with means and standard
    deviations taken over that overlap. Lags whose overlap is constant
    are skipped.
    """
    if x.fs != y.fs:
        raise RdwtError("signals have different sampling rates")
    a, b = x.samples, y.samples
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        raise RdwtError("constant input: correlation undefined for zero variance")
    max_lag = int(max_lag)
    if max_lag < 0 or max_lag >= min(a.size, b.size):
        raise RdwtError(f"max_lag must be in [0, {min(a.size, b.size) - 1}]")
    best = -np.inf
    for k in range(-max_lag, max_lag + 1):
        if k >= 0:
            u, v = a[:b.size - k], b[k:]
        else:
            u, v = a[-k:], b[:a.size + k]
        n = min(u.size, v.size)
        u, v = u[:n], v[:n]
        if n < 2:
            continue
        u = u - u.mean()
        v = v - v.mean()
        den = np.sqrt(np.dot(u, u) * np.dot(v, v))
        if den == 0:
            continue
        best = max(best, np.dot(u, v) / den)
    if not np.isfinite(best):
        raise RdwtError("no lag has a non-constant overlap")
    return float(min(1.0, max(-1.0, best)))


@dataclass(frozen=True)
class CorrelationMatrix:
    values: np.ndarray
    subject_ids: tuple

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] != len(self.subject_ids):
            raise RdwtError("correlation matrix must be square with one id per row")
        if np.any(np.abs(np.diag(v) - 1.0) > 1e-12) or np.any(np.abs(v - v.T) > 1e-12):
            raise RdwtError("correlation matrix must be symmetric with unit diagonal")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "subject_ids", tuple(str(s) for s in self.subject_ids))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["subject"] + list(self.subject_ids))
        for sid, row in zip(self.subject_ids, self.values):
            w.writerow([sid] + [repr(float(v)) for v in row])
        return buf.getvalue()


def correlation_matrix(signals, max_lag: int, subject_ids=None) -> CorrelationMatrix:
    """Pairwise :func:`max_normalized_xcorr`, one evaluation per unordered pair."""
    signals = list(signals)
    if len(signals) < 2:
        raise RdwtError("need at least two signals")
    if len({s.fs for s in signals}) != 1:
        raise RdwtError("signals must share one sampling rate")
    if subject_ids is None:
        subject_ids = [f"S{i + 1}" for i in range(len(signals))]
    n = len(signals)
    v = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            v[i, j] = v[j, i] = max_normalized_xcorr(signals[i], signals[j], max_lag)
    return CorrelationMatrix(v, tuple(subject_ids))
