"""Band-power features and a multinomial logistic-regression classifier.

This is the lightweight model used to run the with/without-denoising
comparison end to end; it is not meant to be competitive.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .core import EpochedDataset, RdwtConfig, RdwtError
from .metrics import SubjectResult, accuracy, cohens_kappa, confusion
from .transform import denoise_dataset

LOG_FLOOR = 1e-12
MODEL_MAGIC = b"LMD1"

DEFAULT_BANDS = ((8.0, 13.0), (18.0, 26.0))


@dataclass(frozen=True)
class BandPowerExtractor:
    bands: tuple = DEFAULT_BANDS
    window: str = "hann"

    def __post_init__(self):
        bands = tuple((float(lo), float(hi)) for lo, hi in self.bands)
        if not bands:
            raise RdwtError("at least one band is required")
        for lo, hi in bands:
            if not 0 < lo < hi:
                raise RdwtError(f"invalid band ({lo}, {hi})")
        if self.window not in ("boxcar", "hann"):
            raise RdwtError(f"window must be 'boxcar' or 'hann', got {self.window!r}")
        object.__setattr__(self, "bands", bands)

    def check(self, fs: float):
        for lo, hi in self.bands:
            if hi >= fs / 2:
                raise RdwtError(f"band ({lo}, {hi}) Hz reaches Nyquist ({fs / 2} Hz)")


def band_power(x, fs: float, bands, window: str = "hann") -> np.ndarray:
    """Mean squared amplitude of ``x`` inside each band, along the last axis.

    Each band is isolated by zeroing FFT bins outside ``[lo, hi]`` and
    transforming back. Output has shape ``x.shape[:-1] + (len(bands),)``.
    """
    x = np.asarray(x, dtype=np.float64)
    T = x.shape[-1]
    if window == "hann":
        x = x * np.hanning(T)
    spec = np.fft.rfft(x, axis=-1)
    freqs = np.fft.rfftfreq(T, 1.0 / fs)
    out = []
    for lo, hi in bands:
        mask = (freqs >= lo) & (freqs <= hi)
        filtered = np.fft.irfft(spec * mask, n=T, axis=-1)
        out.append(np.mean(filtered ** 2, axis=-1))
    return np.stack(out, axis=-1)


def extract_features(ds: EpochedDataset, ex: BandPowerExtractor) -> np.ndarray:
    """Log band power per (channel, band), flattened channel-major: ``E x (C * bands)``."""
    ex.check(ds.fs)
    p = band_power(ds.data, ds.fs, ex.bands, ex.window)
    return np.log(np.maximum(p, LOG_FLOOR)).reshape(ds.data.shape[0], -1)


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def loss_and_grad(weights, bias, X, Y, l2):
    """Mean cross-entropy plus ``l2 / 2 * ||W||^2`` and its gradient.

    ``Y`` is one-hot ``N x K``; ``weights`` is ``K x F``.
    """
    n = X.shape[0]
    P = _softmax(X @ weights.T + bias)
    loss = -np.sum(Y * np.log(np.maximum(P, 1e-300))) / n + 0.5 * l2 * np.sum(weights ** 2)
    R = (P - Y) / n
    return loss, R.T @ X + l2 * weights, R.sum(axis=0)


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: np.ndarray
    l2: float
    mean: np.ndarray
    scale: np.ndarray
    iterations: int = 0
    final_loss: float = float("nan")
    seed: int = 0

    @property
    def n_classes(self):
        return self.weights.shape[0]

    def decision_function(self, features) -> np.ndarray:
        Z = (np.asarray(features, dtype=np.float64) - self.mean) / self.scale
        return Z @ self.weights.T + self.bias

    def predict(self, features) -> np.ndarray:
        return np.argmax(self.decision_function(features), axis=1)

    def to_bytes(self) -> bytes:
        K, F = self.weights.shape
        head = struct.pack("<4sIIIdd", MODEL_MAGIC, K, F, self.iterations, self.l2, self.final_loss)
        body = np.concatenate([self.weights.ravel(), self.bias, self.mean, self.scale])
        return head + struct.pack("<q", self.seed) + body.astype("<f8").tobytes()

    @classmethod
    def from_bytes(cls, buf: bytes) -> "LinearModel":
        head = struct.Struct("<4sIIIdd")
        if buf[:4] != MODEL_MAGIC:
            raise RdwtError(f"bad magic: {buf[:4]!r}")
        _, K, F, iters, l2, loss = head.unpack_from(buf, 0)
        (seed,) = struct.unpack_from("<q", buf, head.size)
        start = head.size + 8
        need = K * F + K + 2 * F
        if len(buf) != start + 8 * need:
            raise RdwtError("model blob has the wrong size")
        v = np.frombuffer(buf, dtype="<f8", offset=start).astype(np.float64)
        return cls(v[:K * F].reshape(K, F), v[K * F:K * F + K], l2,
                   v[K * F + K:K * F + K + F], v[K * F + K + F:], iters, loss, seed)

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> "LinearModel":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


@dataclass(frozen=True)
class TrainSettings:
    step: float = 0.1
    max_iter: int = 5000
    patience: int = 100
    tol: float = 1e-9


def train(features, labels, l2: float = 1e-3, seed: int = 0, n_classes=None,
          settings: TrainSettings = TrainSettings()) -> LinearModel:
    """Fit multinomial logistic regression by full-batch gradient descent.

    Features are standardized with training statistics. Plain gradient
    descent is only stable for ``step * l2 < 2``. Training stops after
    ``max_iter`` steps or once the loss has failed to improve by more than
    ``tol`` for ``patience`` consecutive steps.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise RdwtError("features must be N x F with one label per row")
    if np.unique(y).size < 2:
        raise RdwtError("training data contains a single class")
    if l2 < 0:
        raise RdwtError("l2 must be >= 0")
    K = int(n_classes if n_classes is not None else y.max() + 1)
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    Z = (X - mean) / scale
    Y = np.eye(K)[y]

    rng = np.random.default_rng(seed)
    W = 0.01 * rng.standard_normal((K, X.shape[1]))
    b = np.zeros(K)
    best = np.inf
    stale = 0
    it = 0
    loss = np.inf
    with np.errstate(over="ignore", invalid="ignore"):
        for it in range(1, settings.max_iter + 1):
            loss, gW, gb = loss_and_grad(W, b, Z, Y, l2)
            if not np.isfinite(loss):
                raise RdwtError(f"training diverged at iteration {it}; lower the step or l2")
            if loss < best - settings.tol:
                best = loss
                stale = 0
            else:
                stale += 1
                if stale >= settings.patience:
                    break
            W = W - settings.step * gW
            b = b - settings.step * gb
    return LinearModel(W, b, float(l2), mean, scale, it, float(loss), int(seed))


def run_condition(train_ds, test_ds, ex, l2, seed, subject_id, condition, settings=TrainSettings()):
    model = train(extract_features(train_ds, ex), train_ds.labels, l2, seed,
                  n_classes=train_ds.n_classes, settings=settings)
    pred = model.predict(extract_features(test_ds, ex))
    cm = confusion(test_ds.labels, pred, test_ds.n_classes)
    return SubjectResult(subject_id, condition, accuracy(cm), cohens_kappa(cm), cm), model


def evaluate_paired(train_ds: EpochedDataset, test_ds: EpochedDataset, cfg: RdwtConfig,
                    ex: BandPowerExtractor = BandPowerExtractor(), l2: float = 1e-3, seed: int = 0,
                    subject_id="S01", settings: TrainSettings = TrainSettings(), return_models=False):
    """Run the same train/predict/score chain on raw and on denoised data.

    Returns ``(none_result, rdwt_result)``, plus the two models when
    ``return_models`` is set.
    """
    if train_ds.fs != test_ds.fs or train_ds.shape[1] != test_ds.shape[1]:
        raise RdwtError("train and test datasets differ in fs or channel count")
    if train_ds.n_classes != test_ds.n_classes:
        raise RdwtError("train and test datasets differ in class count")
    raw, m_raw = run_condition(train_ds, test_ds, ex, l2, seed, subject_id, "none", settings)
    den, m_den = run_condition(denoise_dataset(train_ds, cfg), denoise_dataset(test_ds, cfg),
                               ex, l2, seed, subject_id, "rdwt", settings)
    if return_models:
        return raw, den, m_raw, m_den
    return raw, den
