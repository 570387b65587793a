"""Undecimated rational-dilation decomposition, hard thresholding and reconstruction.

Level ``l`` filters the previous approximation with a complementary pair,
``a = x * low`` and ``d = x * high``, and feeds ``a`` into the next level.
No subband is decimated, so all of them keep the input length and a
circular shift of the input shifts every subband by the same amount
(with periodic boundaries). Because ``low + high`` is the unit impulse,
``a(l-1) = a(l) + d(l)`` and the plain sum ``a(L) + sum(d)`` returns the input.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .core import EpochedDataset, RdwtConfig, RdwtError, Signal, SubbandPyramid
from .resample import filters_for

_PAD_MODES = {"periodic": "wrap", "reflect": "reflect", "zero": "constant"}

# median(|N(0, 1)|); turns a median absolute detail into a noise scale
MAD_SCALE = 0.6745


def convolve_same(x, kernel, center: int, boundary: str = "periodic") -> np.ndarray:
    """Same-length convolution along the last axis, kernel tap ``center`` at lag 0.

    ``y[t] = sum_j kernel[j] * x[t + center - j]`` with samples outside
    ``[0, T)`` supplied by the boundary mode.
    """
    x = np.asarray(x, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    k = kernel.size
    T = x.shape[-1]
    pad = [(0, 0)] * (x.ndim - 1) + [(k - 1 - center, center)]
    try:
        xp = np.pad(x, pad, mode=_PAD_MODES[boundary])
    except KeyError:
        raise RdwtError(f"unknown boundary mode {boundary!r}") from None
    y = np.zeros_like(x)
    for j in range(k):
        start = k - 1 - j
        y += kernel[j] * xp[..., start:start + T]
    return y


def decompose_array(x, filters, boundary: str = "periodic"):
    """Cascade analysis on raw arrays; returns ``(approximations, details)``.

    Both outputs have shape ``(levels,) + x.shape``.
    """
    x = np.asarray(x, dtype=np.float64)
    approx, detail = [], []
    current = x
    for fp in filters:
        a = convolve_same(current, fp.low, fp.center, boundary)
        d = convolve_same(current, fp.high, fp.center, boundary)
        approx.append(a)
        detail.append(d)
        current = a
    return np.stack(approx), np.stack(detail)


def decompose(x: Signal, filters, cfg: RdwtConfig) -> SubbandPyramid:
    if len(filters) != cfg.levels:
        raise RdwtError(f"filter/level count mismatch: {len(filters)} filters for {cfg.levels} levels")
    a, d = decompose_array(x.samples, filters, cfg.boundary)
    return SubbandPyramid(a, d, cfg, len(x), x.fs)


def auto_threshold(first_detail, k: float = 3.0) -> np.ndarray:
    """Robust noise-scale threshold ``k * median(|d1|) / 0.6745`` along the last axis."""
    first_detail = np.asarray(first_detail)
    return k * np.median(np.abs(first_detail), axis=-1, keepdims=True) / MAD_SCALE


def resolve_thresholds(details, cfg: RdwtConfig) -> np.ndarray:
    """Per-level thresholds broadcastable against ``details``."""
    details = np.asarray(details)
    shape = (details.shape[0],) + (1,) * (details.ndim - 1)
    if cfg.level_thresholds is not None:
        return np.asarray(cfg.level_thresholds, dtype=np.float64).reshape(shape)
    if cfg.threshold == "auto":
        tau = auto_threshold(details[0], cfg.threshold_k)
        return np.repeat(tau[None], details.shape[0], axis=0)
    return np.full(shape, float(cfg.threshold))


def hard_threshold(d, tau) -> np.ndarray:
    """Keep coefficients with ``|d| >= tau``; zero the rest."""
    d = np.asarray(d, dtype=np.float64)
    return np.where(np.abs(d) >= tau, d, 0.0)


def threshold_details(pyr: SubbandPyramid, tau) -> SubbandPyramid:
    """Hard-threshold every detail level; approximations are left alone.

    ``tau`` is a scalar or one value per level.
    """
    tau = np.asarray(tau, dtype=np.float64)
    if np.any(~np.isfinite(tau) & ~np.isposinf(tau)) or np.any(tau < 0):
        raise RdwtError(f"threshold must be >= 0, got {tau}")
    if tau.ndim == 1:
        if tau.size != pyr.levels:
            raise RdwtError(f"{tau.size} thresholds for {pyr.levels} levels")
        tau = tau.reshape((-1,) + (1,) * (pyr.details.ndim - 1))
    return replace(pyr, details=hard_threshold(pyr.details, tau))


def reconstruct_array(approximations, details) -> np.ndarray:
    out = np.array(approximations[-1], dtype=np.float64)
    for d in details:
        out = out + d
    return out


def reconstruct(pyr: SubbandPyramid) -> Signal:
    """Final approximation plus every (thresholded) detail level."""
    return Signal(reconstruct_array(pyr.approximations, pyr.details), pyr.fs)


def denoise(x: Signal, cfg: RdwtConfig) -> Signal:
    pyr = decompose(x, filters_for(cfg), cfg)
    tau = resolve_thresholds(pyr.details, cfg)[:, 0]
    return reconstruct(threshold_details(pyr, tau))


def denoise_array(x, cfg: RdwtConfig, filters=None):
    """Denoise every row of ``x`` (time on the last axis) independently.

    Returns ``(denoised, approximations, details, thresholded_details, thresholds)``.
    """
    if filters is None:
        filters = filters_for(cfg)
    a, d = decompose_array(x, filters, cfg.boundary)
    tau = resolve_thresholds(d, cfg)
    dt = hard_threshold(d, tau)
    return reconstruct_array(a, dt), a, d, dt, tau


def denoise_dataset(ds: EpochedDataset, cfg: RdwtConfig) -> EpochedDataset:
    """Apply :func:`denoise` to every (epoch, channel) slice; labels and fs are kept."""
    out = denoise_array(ds.data, cfg)[0]
    return ds.replace_data(out)


def zeroed_fractions(details, thresholded) -> np.ndarray:
    """Per-level fraction of detail coefficients set to zero by thresholding."""
    details = np.asarray(details)
    thresholded = np.asarray(thresholded)
    killed = (thresholded == 0) & (details != 0)
    return killed.reshape(killed.shape[0], -1).mean(axis=1)
