"""Domain types shared across the package.

Every type is an immutable dataclass holding float64 numpy arrays that are
flagged read-only after construction, so instances can be shared freely.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Optional, Sequence, Union

import numpy as np

BOUNDARY_MODES = ("periodic", "reflect", "zero")


class RdwtError(ValueError):
    """Base class for domain errors raised by this package."""


class InvalidDatasetError(RdwtError):
    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations)
        super().__init__(f"invalid dataset: {lines}")


def _frozen_array(values, ndim=None, dtype=np.float64) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    if ndim is not None and arr.ndim != ndim:
        raise RdwtError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Signal:
    """One uniformly sampled channel."""

    samples: np.ndarray
    fs: float

    def __post_init__(self):
        samples = _frozen_array(self.samples, ndim=1)
        if samples.size == 0:
            raise RdwtError("signal is empty")
        if not np.all(np.isfinite(samples)):
            bad = int(np.flatnonzero(~np.isfinite(samples))[0])
            raise RdwtError(f"signal has a non-finite sample at index {bad}")
        if not (np.isfinite(self.fs) and self.fs > 0):
            raise RdwtError(f"sampling rate must be positive, got {self.fs}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "fs", float(self.fs))

    def __len__(self):
        return self.samples.size

    def with_samples(self, samples) -> "Signal":
        return Signal(samples, self.fs)


@dataclass(frozen=True)
class Violation:
    """One failed dataset invariant. ``kind`` is a stable identifier."""

    kind: str
    message: str
    index: Optional[tuple] = None

    def __str__(self):
        return self.message


def validate_dataset(data, labels, fs, channel_names=None, class_names=None,
                     n_classes=None) -> list:
    """Check every EpochedDataset invariant on raw inputs.

    Returns a list of :class:`Violation`; an empty list means the inputs
    would be accepted by :class:`EpochedDataset`. Each violation kind is
    one of ``"shape mismatch"``, ``"label count mismatch"``,
    ``"non-finite sample"``, ``"label out of range"``, ``"bad sampling rate"``
    or ``"metadata mismatch"``.
    """
    out = []
    data = np.asarray(data)
    labels = np.asarray(labels)

    if data.ndim != 3:
        out.append(Violation("shape mismatch",
                             f"shape mismatch: data must be epochs x channels x samples, got shape {data.shape}"))
        return out
    E, C, T = data.shape
    if E < 1 or C < 1:
        out.append(Violation("shape mismatch",
                             f"shape mismatch: need at least one epoch and channel, got {data.shape}"))
    if T < 2:
        out.append(Violation("shape mismatch",
                             f"shape mismatch: need at least 2 samples per epoch, got {T}"))

    if not (np.issubdtype(data.dtype, np.number) and not np.iscomplexobj(data)):
        out.append(Violation("shape mismatch", f"shape mismatch: data must be real, got {data.dtype}"))
    else:
        bad = np.argwhere(~np.isfinite(data.astype(np.float64)))
        for idx in bad[:20]:
            idx = tuple(int(i) for i in idx)
            out.append(Violation("non-finite sample", f"non-finite sample at {idx}", idx))
        if len(bad) > 20:
            out.append(Violation("non-finite sample", f"... {len(bad) - 20} more non-finite samples"))

    if labels.ndim != 1:
        out.append(Violation("label count mismatch",
                             f"label count mismatch: labels must be 1-d, got shape {labels.shape}"))
    elif labels.size != E:
        out.append(Violation("label count mismatch",
                             f"label count mismatch: {labels.size} labels for {E} epochs"))
    if labels.ndim == 1 and labels.size:
        if not np.issubdtype(labels.dtype, np.integer):
            as_float = labels.astype(np.float64) if np.issubdtype(labels.dtype, np.number) else None
            if as_float is None or not np.all(as_float == np.round(as_float)):
                out.append(Violation("label out of range", "label out of range: labels must be integers"))
                labels = None
        if labels is not None:
            labels = labels.astype(np.int64)
            limit = n_classes
            if limit is None and class_names is not None:
                limit = len(class_names)
            for i in np.flatnonzero(labels < 0):
                out.append(Violation("label out of range",
                                     f"label out of range at epoch {int(i)}: {int(labels[i])}", (int(i),)))
            if limit is not None:
                for i in np.flatnonzero(labels >= limit):
                    out.append(Violation("label out of range",
                                         f"label out of range at epoch {int(i)}: {int(labels[i])} >= {limit}",
                                         (int(i),)))

    if not (np.isfinite(fs) and fs > 0):
        out.append(Violation("bad sampling rate", f"bad sampling rate: {fs}"))
    if channel_names is not None and len(channel_names) != C:
        out.append(Violation("metadata mismatch",
                             f"metadata mismatch: {len(channel_names)} channel names for {C} channels"))
    if class_names is not None and n_classes is not None and len(class_names) != n_classes:
        out.append(Violation("metadata mismatch",
                             f"metadata mismatch: {len(class_names)} class names for {n_classes} classes"))
    return out


@dataclass(frozen=True)
class EpochedDataset:
    """Epochs x channels x samples tensor with one integer label per epoch.

    ``n_classes`` defaults to ``len(class_names)`` or ``max(labels) + 1``.
    """

    data: np.ndarray
    labels: np.ndarray
    fs: float
    channel_names: Optional[tuple] = None
    class_names: Optional[tuple] = None
    n_classes: Optional[int] = None

    def __post_init__(self):
        violations = validate_dataset(self.data, self.labels, self.fs, self.channel_names,
                                      self.class_names, self.n_classes)
        if violations:
            raise InvalidDatasetError(violations)
        labels = _frozen_array(self.labels, ndim=1, dtype=np.int64)
        n = self.n_classes
        if n is None:
            n = len(self.class_names) if self.class_names is not None else int(labels.max()) + 1
        object.__setattr__(self, "data", _frozen_array(self.data, ndim=3))
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "fs", float(self.fs))
        object.__setattr__(self, "n_classes", int(n))
        if self.channel_names is not None:
            object.__setattr__(self, "channel_names", tuple(str(c) for c in self.channel_names))
        if self.class_names is not None:
            object.__setattr__(self, "class_names", tuple(str(c) for c in self.class_names))

    @property
    def shape(self):
        return self.data.shape

    def signal(self, epoch: int, channel: int) -> Signal:
        return Signal(self.data[epoch, channel], self.fs)

    def replace_data(self, data) -> "EpochedDataset":
        return EpochedDataset(data, self.labels, self.fs, self.channel_names,
                              self.class_names, self.n_classes)


@dataclass(frozen=True, order=True)
class RationalFactor:
    """Dilation factor p/q in lowest terms with p > q >= 1."""

    p: int
    q: int

    def __post_init__(self):
        if not (isinstance(self.p, (int, np.integer)) and isinstance(self.q, (int, np.integer))):
            raise RdwtError(f"dilation terms must be integers, got {self.p!r}/{self.q!r}")
        if self.q < 1 or self.p <= self.q:
            raise RdwtError(f"dilation factor must satisfy p > q >= 1, got {self.p}/{self.q}")
        if gcd(int(self.p), int(self.q)) != 1:
            raise RdwtError(f"dilation factor {self.p}/{self.q} is not in lowest terms")

    @classmethod
    def parse(cls, text: str) -> "RationalFactor":
        try:
            num, den = str(text).strip().split("/")
            return cls(int(num), int(den))
        except ValueError as exc:
            if isinstance(exc, RdwtError):
                raise
            raise RdwtError(f"cannot parse dilation {text!r}; expected p/q") from None

    def __float__(self):
        return self.p / self.q

    def __str__(self):
        return f"{self.p}/{self.q}"

    def as_fraction(self) -> Fraction:
        return Fraction(self.p, self.q)


DEFAULT_DILATIONS = (RationalFactor(3, 2), RationalFactor(5, 3), RationalFactor(7, 4), RationalFactor(9, 5))


def default_dilations(levels: int) -> tuple:
    """The four standard factors in ascending order, last one repeated past level 4."""
    if levels < 1:
        raise RdwtError(f"levels must be >= 1, got {levels}")
    return tuple(DEFAULT_DILATIONS[min(i, len(DEFAULT_DILATIONS) - 1)] for i in range(levels))


@dataclass(frozen=True)
class FilterPair:
    """Complementary analysis kernels sharing one center tap."""

    low: np.ndarray
    high: np.ndarray
    center: int

    def __post_init__(self):
        low = _frozen_array(self.low, ndim=1)
        high = _frozen_array(self.high, ndim=1)
        if low.size == 0 or low.shape != high.shape:
            raise RdwtError("filter kernels must be non-empty and of equal length")
        if not (np.all(np.isfinite(low)) and np.all(np.isfinite(high))):
            raise RdwtError("filter kernels must be finite")
        if not 0 <= self.center < low.size:
            raise RdwtError(f"center {self.center} outside kernel of length {low.size}")
        if abs(low.sum() - 1.0) > 1e-12:
            raise RdwtError(f"lowpass kernel sums to {low.sum()!r}, not 1")
        delta = np.zeros_like(low)
        delta[self.center] = 1.0
        if np.max(np.abs(low + high - delta)) > 1e-12:
            raise RdwtError("lowpass + highpass is not the unit impulse")
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)
        object.__setattr__(self, "center", int(self.center))


Threshold = Union[float, str]


@dataclass(frozen=True)
class RdwtConfig:
    """Transform settings.

    ``threshold`` is either a number (applied verbatim) or ``"auto"``, which
    resolves per signal to ``threshold_k * median(|d1|) / 0.6745``.
    ``level_thresholds`` optionally overrides the threshold per level.
    """

    levels: int = 4
    dilations: tuple = field(default=None)
    threshold: Threshold = 0.0
    base_filter: str = "binomial5"
    boundary: str = "periodic"
    threshold_k: float = 3.0
    level_thresholds: Optional[tuple] = None

    def __post_init__(self):
        if not isinstance(self.levels, (int, np.integer)) or self.levels < 1:
            raise RdwtError(f"levels must be an integer >= 1, got {self.levels!r}")
        dil = self.dilations
        if dil is None:
            dil = default_dilations(self.levels)
        dil = tuple(d if isinstance(d, RationalFactor) else RationalFactor.parse(d) for d in dil)
        if len(dil) != self.levels:
            raise RdwtError(f"{len(dil)} dilations given for {self.levels} levels")
        object.__setattr__(self, "dilations", dil)
        if isinstance(self.threshold, str):
            if self.threshold != "auto":
                raise RdwtError(f"threshold must be a number or 'auto', got {self.threshold!r}")
        elif not (np.isfinite(self.threshold) and self.threshold >= 0):
            raise RdwtError(f"threshold must be >= 0, got {self.threshold}")
        else:
            object.__setattr__(self, "threshold", float(self.threshold))
        if self.boundary not in BOUNDARY_MODES:
            raise RdwtError(f"boundary must be one of {BOUNDARY_MODES}, got {self.boundary!r}")
        if not self.threshold_k >= 0:
            raise RdwtError("threshold_k must be >= 0")
        if self.level_thresholds is not None:
            lt = tuple(float(t) for t in self.level_thresholds)
            if len(lt) != self.levels or any(not (np.isfinite(t) and t >= 0) for t in lt):
                raise RdwtError("level_thresholds needs one finite value >= 0 per level")
            object.__setattr__(self, "level_thresholds", lt)


@dataclass(frozen=True)
class SubbandPyramid:
    """Per-level approximation and detail sequences of one signal.

    Arrays are ``levels x T`` for a single signal; batched pyramids carry
    leading axes (``levels x ... x T``).
    """

    approximations: np.ndarray
    details: np.ndarray
    config: RdwtConfig
    original_length: int
    fs: float = 1.0

    def __post_init__(self):
        a = _frozen_array(self.approximations)
        d = _frozen_array(self.details)
        if a.shape != d.shape or a.ndim < 2:
            raise RdwtError(f"approximation/detail shapes differ: {a.shape} vs {d.shape}")
        if a.shape[0] != self.config.levels:
            raise RdwtError(f"pyramid has {a.shape[0]} levels, config says {self.config.levels}")
        if a.shape[-1] != self.original_length:
            raise RdwtError("subband length differs from the original length")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(d))):
            raise RdwtError("pyramid contains non-finite values")
        object.__setattr__(self, "approximations", a)
        object.__setattr__(self, "details", d)

    @property
    def levels(self) -> int:
        return self.config.levels


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with rows = true class, columns = predicted class."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1] or counts.shape[0] < 1:
            raise RdwtError(f"confusion matrix must be square, got shape {counts.shape}")
        if np.issubdtype(counts.dtype, np.floating) and not np.all(counts == np.round(counts)):
            raise RdwtError("confusion counts must be integers")
        counts = _frozen_array(counts, dtype=np.int64)
        if np.any(counts < 0):
            raise RdwtError("confusion counts must be non-negative")
        if counts.sum() <= 0:
            raise RdwtError("confusion matrix is empty")
        object.__setattr__(self, "counts", counts)

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def as_factor(factor) -> tuple:
    """Return (p, q) for a RationalFactor, Fraction, (p, q) pair or 'p/q' string.

    Unlike :class:`RationalFactor` this also admits the identity 1/1.
    """
    if isinstance(factor, RationalFactor):
        return factor.p, factor.q
    if isinstance(factor, Fraction):
        p, q = factor.numerator, factor.denominator
    elif isinstance(factor, str):
        frac = Fraction(factor)
        p, q = frac.numerator, frac.denominator
    elif isinstance(factor, Sequence) and len(factor) == 2:
        frac = Fraction(int(factor[0]), int(factor[1]))
        p, q = frac.numerator, frac.denominator
    else:
        raise RdwtError(f"cannot interpret {factor!r} as a rational factor")
    if p < 1 or q < 1:
        raise RdwtError(f"rational factor must be positive, got {p}/{q}")
    return p, q
