"""Rational-factor resampling of wavelet kernels and per-level filter design."""

from __future__ import annotations

from math import ceil, floor

import numpy as np

from .core import FilterPair, RdwtConfig, RdwtError, as_factor

# Taps per polyphase branch on each side of the interpolation kernel center.
HALF_WIDTH = 8

BASE_KERNELS = {
    "binomial5": np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0,
    "binomial3": np.array([1.0, 2.0, 1.0]) / 4.0,
    "binomial7": np.array([1.0, 6.0, 15.0, 20.0, 15.0, 6.0, 1.0]) / 64.0,
    "haar": np.array([0.5, 0.5]),
}


def base_kernel(name: str) -> np.ndarray:
    """Look up a unit-sum mother lowpass kernel by name."""
    try:
        return BASE_KERNELS[name].copy()
    except KeyError:
        raise RdwtError(f"unknown base filter {name!r}; choose from {sorted(BASE_KERNELS)}") from None


def interpolation_kernel(p: int, q: int, half_width: int = HALF_WIDTH) -> np.ndarray:
    """Hann-windowed sinc anti-aliasing kernel for upsampling by p then taking every q-th.

    The kernel lives on the upsampled grid, has ``2 * half_width * M - 1`` taps
    (``M = max(p, q)``), is symmetric about its center, and is scaled so it
    sums to ``p``.
    """
    m = max(p, q)
    n = np.arange(-half_width * m + 1, half_width * m)
    t = n / m
    g = np.sinc(t) * 0.5 * (1.0 + np.cos(np.pi * t / half_width))
    # exact zero crossings keep the p == q == 1 case an exact identity
    g[(n % m == 0) & (n != 0)] = 0.0
    g *= p / g.sum()
    return g


class PolyphaseResampler:
    """Resample finite sequences by a rational factor p/q.

    Zero-insert by ``p``, filter with :func:`interpolation_kernel`, keep every
    ``q``-th sample. Output sample ``m`` lands at input position ``m * q / p``.
    """

    def __init__(self, factor, half_width: int = HALF_WIDTH):
        self.p, self.q = as_factor(factor)
        self.half_width = half_width
        self.interp_kernel = interpolation_kernel(self.p, self.q, half_width)
        self.interp_kernel.setflags(write=False)

    @property
    def branches(self) -> list:
        """The p polyphase components of the interpolation kernel."""
        h = (self.interp_kernel.size - 1) // 2
        return [self.interp_kernel[(r + h) % self.p::self.p] for r in range(self.p)]

    def output_length(self, n: int) -> int:
        return ceil(n * self.p / self.q)

    def __call__(self, h) -> np.ndarray:
        h = np.asarray(h, dtype=np.float64)
        n = h.size
        up = np.zeros((n - 1) * self.p + 1)
        up[::self.p] = h
        full = np.convolve(up, self.interp_kernel)
        offset = (self.interp_kernel.size - 1) // 2
        idx = offset + self.q * np.arange(self.output_length(n))
        return full[idx]


def resample_kernel(h, factor) -> np.ndarray:
    """Resample kernel ``h`` by the rational factor p/q.

    Output length is ``ceil(len(h) * p / q)``. A unit-sum input yields a
    unit-sum output; kernels with zero sum are instead scaled by ``q / p``.

    Raises:
        RdwtError: if ``h`` is empty, non-finite or identically zero.
    """
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 1 or h.size == 0:
        raise RdwtError("kernel must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(h)):
        raise RdwtError("kernel contains non-finite values")
    if not np.any(h):
        raise RdwtError("degenerate kernel: all taps are zero")
    rs = PolyphaseResampler(factor)
    y = rs(h)
    target = h.sum()
    if abs(target) > 1e-12 * np.abs(h).sum():
        got = y.sum()
        if got == 0:
            raise RdwtError("resampled kernel sums to zero; cannot renormalize")
        y = y * (target / got)
    else:
        y = y * (rs.q / rs.p)
    return y


def resampled_center(center: int, factor) -> int:
    """Output tap nearest to input position ``center``."""
    p, q = as_factor(factor)
    return int(floor(center * p / q + 0.5))


def build_level_filters(base_low, cfg: RdwtConfig, center=None) -> list:
    """One complementary FilterPair per level.

    ``low`` is the base kernel resampled by that level's dilation and
    renormalized to unit sum; ``high = delta - low`` at the kernel center,
    so ``low + high`` is the unit impulse.

    Raises:
        RdwtError: ``"unnormalized base kernel"`` if ``base_low`` does not sum to 1.
    """
    base_low = np.asarray(base_low, dtype=np.float64)
    if base_low.ndim != 1 or base_low.size == 0:
        raise RdwtError("base kernel must be a non-empty 1-d sequence")
    if abs(base_low.sum() - 1.0) > 1e-12:
        raise RdwtError(f"unnormalized base kernel: taps sum to {base_low.sum()!r}")
    if center is None:
        center = base_low.size // 2
    pairs = []
    for factor in cfg.dilations:
        low = resample_kernel(base_low, factor)
        low = low / low.sum()
        # absorb rounding so the sum is 1 to the last bit we can manage
        c = min(resampled_center(center, factor), low.size - 1)
        low[c] += 1.0 - low.sum()
        high = -low
        high[c] += 1.0
        pairs.append(FilterPair(low, high, c))
    return pairs


def filters_for(cfg: RdwtConfig) -> list:
    return build_level_filters(base_kernel(cfg.base_filter), cfg)
