"""Independent reference implementations used only by the tests.

Nothing here imports the package's numerical code.
"""

import numpy as np


def sinc_resample(h, p, q, half_width=8):
    """Evaluate the windowed-sinc interpolant of ``h`` at positions ``m * q / p``.

    Output is scaled to the input sum (or by q/p when the input sums to 0).
    """
    h = np.asarray(h, dtype=float)
    n_out = -(-len(h) * p // q)
    m = max(p, q)
    out = np.zeros(n_out)
    for i in range(n_out):
        pos = i * q / p
        acc = 0.0
        for k, hk in enumerate(h):
            # argument in units of the anti-aliasing cutoff
            u = (pos - k) * p / m
            if abs(u) >= half_width:
                continue
            w = 0.5 * (1 + np.cos(np.pi * u / half_width))
            acc += hk * np.sinc(u) * w
        out[i] = acc
    if abs(h.sum()) > 1e-12:
        return out * h.sum() / out.sum()
    return out


def _index(i, T, boundary):
    if boundary == "periodic":
        return i % T
    if boundary == "zero":
        return i if 0 <= i < T else None
    # mirror about the end samples without repeating them
    period = 2 * (T - 1)
    i = i % period
    return i if i < T else period - i


def direct_convolve(x, kernel, center, boundary="periodic"):
    T = len(x)
    y = np.zeros(T)
    for t in range(T):
        acc = 0.0
        for j, kj in enumerate(kernel):
            idx = _index(t + center - j, T, boundary)
            if idx is not None:
                acc += kj * x[idx]
        y[t] = acc
    return y


def direct_decompose(x, lows, centers, boundary="periodic"):
    """Cascade with explicit loops; highpass built here as delta - low."""
    approx, detail = [], []
    cur = np.asarray(x, dtype=float)
    for low, c in zip(lows, centers):
        high = -np.asarray(low, dtype=float)
        high[c] += 1.0
        a = direct_convolve(cur, low, c, boundary)
        d = direct_convolve(cur, high, c, boundary)
        approx.append(a)
        detail.append(d)
        cur = a
    return np.array(approx), np.array(detail)


def hard_threshold(d, tau):
    return np.array([v if abs(v) >= tau else 0.0 for v in np.ravel(d)]).reshape(np.shape(d))


def brute_xcorr(x, y, max_lag):
    best = -np.inf
    for k in range(-max_lag, max_lag + 1):
        if k >= 0:
            u, v = x[:len(y) - k], y[k:]
        else:
            u, v = x[-k:], y[:len(x) + k]
        n = min(len(u), len(v))
        r = np.corrcoef(u[:n], v[:n])[0, 1]
        if np.isfinite(r):
            best = max(best, r)
    return best


def kappa_by_hand(cm):
    cm = np.asarray(cm, dtype=float)
    n = cm.sum()
    pa = sum(cm[i, i] for i in range(len(cm))) / n
    pe = sum(cm[i, :].sum() * cm[:, i].sum() for i in range(len(cm))) / n ** 2
    return (pa - pe) / (1 - pe)
