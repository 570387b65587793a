"""Epoch container files, CSV import, dense matrix files and synthetic datasets.

EPC1 container layout (all little-endian)::

    offset  type        field
    0       4 bytes     magic b"EPC1"
    4       u32         version (1)
    8       u32         E  epochs
    12      u32         C  channels
    16      u32         T  samples per epoch
    20      u32         n_classes
    24      f64         fs in Hz
    32      u16 * E     labels
    ...     u32         channel-name count (0 when unnamed, else C)
            per name:   u32 byte length, UTF-8 bytes
    ...     f64 * E*C*T samples, epoch-major then channel-major

MAT1 dense matrix layout::

    b"MAT1", u32 rows, u32 cols, f64 * rows (row axis), f64 * cols (column
    axis), f64 * rows*cols values in row-major order.

Synthetic datasets draw from numpy's PCG64 bit generator seeded through
``numpy.random.SeedSequence(seed)``. Uniforms are ``(next_uint64 >> 11) * 2**-53``
(``Generator.random``); normals are produced from consecutive uniform pairs
by the Box-Muller transform, ``sqrt(-2 ln(1 - u1)) * (cos, sin)(2 pi u2)``.
"""

from __future__ import annotations

import csv
import os
import struct
import tempfile
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .core import EpochedDataset, InvalidDatasetError, RdwtError

MAGIC = b"EPC1"
VERSION = 1
_HEADER = struct.Struct("<4sIIIIId")
MATRIX_MAGIC = b"MAT1"
_MATRIX_HEADER = struct.Struct("<4sII")


class ContainerError(RdwtError):
    pass


class BadMagicError(ContainerError):
    pass


class TruncatedPayloadError(ContainerError):
    pass


class PayloadSizeError(ContainerError):
    pass


class CsvImportError(RdwtError):
    pass


def _atomic_write(path, payload: bytes):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def encode_container(ds: EpochedDataset) -> bytes:
    E, C, T = ds.data.shape
    if ds.n_classes > 0xFFFF + 1:
        raise ContainerError(f"{ds.n_classes} classes do not fit u16 labels")
    parts = [_HEADER.pack(MAGIC, VERSION, E, C, T, ds.n_classes, ds.fs),
             ds.labels.astype("<u2").tobytes()]
    if ds.channel_names is None:
        parts.append(struct.pack("<I", 0))
    else:
        parts.append(struct.pack("<I", C))
        for name in ds.channel_names:
            raw = name.encode("utf-8")
            parts.append(struct.pack("<I", len(raw)))
            parts.append(raw)
    parts.append(np.ascontiguousarray(ds.data, dtype="<f8").tobytes())
    return b"".join(parts)


def write_container(ds: EpochedDataset, path) -> None:
    """Atomically write ``ds`` as an EPC1 file. Class names are not stored."""
    if not isinstance(ds, EpochedDataset):
        raise ContainerError("write_container needs a validated EpochedDataset")
    try:
        _atomic_write(path, encode_container(ds))
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write container {path}: {exc.strerror}") from exc


def decode_container(buf: bytes, source="<bytes>") -> EpochedDataset:
    if len(buf) < 4 or buf[:4] != MAGIC:
        raise BadMagicError(f"bad magic in {source}: {bytes(buf[:4])!r}")
    if len(buf) < _HEADER.size:
        raise TruncatedPayloadError(f"truncated payload in {source}: header needs {_HEADER.size} bytes")
    _, version, E, C, T, n_classes, fs = _HEADER.unpack_from(buf, 0)
    if version != VERSION:
        raise ContainerError(f"unsupported container version {version} in {source}")
    pos = _HEADER.size

    def take(n):
        nonlocal pos
        if pos + n > len(buf):
            raise TruncatedPayloadError(
                f"truncated payload in {source}: need {pos + n} bytes, file has {len(buf)}")
        chunk = buf[pos:pos + n]
        pos += n
        return chunk

    labels = np.frombuffer(take(2 * E), dtype="<u2").astype(np.int64)
    (n_names,) = struct.unpack("<I", take(4))
    if n_names not in (0, C):
        raise ContainerError(f"{source}: {n_names} channel names for {C} channels")
    names = None
    if n_names:
        names = []
        for _ in range(n_names):
            (length,) = struct.unpack("<I", take(4))
            names.append(take(length).decode("utf-8"))
    samples = np.frombuffer(take(8 * E * C * T), dtype="<f8")
    if pos != len(buf):
        raise PayloadSizeError(f"payload size mismatch in {source}: {len(buf) - pos} trailing bytes")
    data = samples.astype(np.float64).reshape(E, C, T)
    return EpochedDataset(data, labels, fs, channel_names=names, n_classes=n_classes)


def read_container(path) -> EpochedDataset:
    """Read and validate an EPC1 file.

    Raises:
        BadMagicError, TruncatedPayloadError, PayloadSizeError: malformed file.
        InvalidDatasetError: the decoded contents break a dataset invariant.
    """
    with open(path, "rb") as fh:
        buf = fh.read()
    return decode_container(buf, source=str(path))


def write_matrix(path, values, row_axis=None, col_axis=None) -> None:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise RdwtError(f"matrix must be 2-d, got shape {values.shape}")
    rows, cols = values.shape
    row_axis = np.arange(rows, dtype=np.float64) if row_axis is None else np.asarray(row_axis, np.float64)
    col_axis = np.arange(cols, dtype=np.float64) if col_axis is None else np.asarray(col_axis, np.float64)
    if row_axis.shape != (rows,) or col_axis.shape != (cols,):
        raise RdwtError("axis lengths do not match the matrix shape")
    payload = b"".join([
        _MATRIX_HEADER.pack(MATRIX_MAGIC, rows, cols),
        row_axis.astype("<f8").tobytes(),
        col_axis.astype("<f8").tobytes(),
        np.ascontiguousarray(values, dtype="<f8").tobytes(),
    ])
    _atomic_write(path, payload)


def read_matrix(path):
    """Return ``(values, row_axis, col_axis)`` from a MAT1 file."""
    buf = Path(path).read_bytes()
    if buf[:4] != MATRIX_MAGIC:
        raise BadMagicError(f"bad magic in {path}: {buf[:4]!r}")
    if len(buf) < _MATRIX_HEADER.size:
        raise TruncatedPayloadError(f"truncated payload in {path}")
    _, rows, cols = _MATRIX_HEADER.unpack_from(buf, 0)
    need = _MATRIX_HEADER.size + 8 * (rows + cols + rows * cols)
    if len(buf) < need:
        raise TruncatedPayloadError(f"truncated payload in {path}: need {need} bytes, file has {len(buf)}")
    if len(buf) > need:
        raise PayloadSizeError(f"payload size mismatch in {path}")
    arr = np.frombuffer(buf, dtype="<f8", offset=_MATRIX_HEADER.size).astype(np.float64)
    return arr[rows + cols:].reshape(rows, cols), arr[:rows], arr[rows:rows + cols]


@dataclass(frozen=True)
class CsvLayout:
    """Column naming for :func:`import_csv`.

    Every column that is not the epoch, channel or label column is a sample
    column, read left to right.
    """

    epoch_column: str = "epoch"
    channel_column: str = "channel"
    label_column: str = "label"


def import_csv(path, fs: float, layout: CsvLayout = CsvLayout()) -> EpochedDataset:
    """Build a dataset from a CSV with one row per (epoch, channel).

    Epoch and channel identifiers are taken in order of first appearance;
    non-numeric channel identifiers become channel names. Labels are
    integers, or strings mapped to class ids in order of first appearance.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CsvImportError(f"{path}: empty file") from None
        for col in (layout.epoch_column, layout.channel_column, layout.label_column):
            if col not in header:
                raise CsvImportError(f"{path}: missing column {col!r}")
        ei, ci, li = (header.index(layout.epoch_column), header.index(layout.channel_column),
                      header.index(layout.label_column))
        sample_cols = [i for i in range(len(header)) if i not in (ei, ci, li)]
        rows = [r for r in reader if any(cell.strip() for cell in r)]

    epochs, channels, cells, labels = {}, {}, {}, {}
    class_ids = {}
    n_samples = None
    for rowno, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise CsvImportError(f"ragged row {rowno}: {len(row)} fields, header has {len(header)}")
        values = [row[i].strip() for i in sample_cols]
        while values and values[-1] == "":
            values.pop()
        if n_samples is None:
            n_samples = len(values)
        elif len(values) != n_samples:
            raise CsvImportError(f"ragged row {rowno}: {len(values)} samples, expected {n_samples}")
        try:
            samples = [float(v) for v in values]
        except ValueError as exc:
            raise CsvImportError(f"row {rowno}: unparsable number ({exc})") from None
        lab = row[li].strip()
        if lab == "":
            raise CsvImportError(f"row {rowno}: missing label")
        if lab not in class_ids:
            class_ids[lab] = len(class_ids)
        e = epochs.setdefault(row[ei].strip(), len(epochs))
        c = channels.setdefault(row[ci].strip(), len(channels))
        if (e, c) in cells:
            raise CsvImportError(f"row {rowno}: duplicate epoch/channel pair")
        cells[(e, c)] = samples
        if labels.setdefault(e, lab) != lab:
            raise CsvImportError(f"row {rowno}: conflicting label for epoch {row[ei].strip()!r}")

    if not cells:
        raise CsvImportError(f"{path}: no data rows")
    E, C = len(epochs), len(channels)
    data = np.empty((E, C, n_samples))
    for e in range(E):
        for c in range(C):
            if (e, c) not in cells:
                raise CsvImportError(f"{path}: epoch {e} lacks channel {c}")
            data[e, c] = cells[(e, c)]
    if all(_is_int(k) for k in class_ids):
        label_arr = np.array([int(labels[e]) for e in range(E)])
        class_names = None
    else:
        label_arr = np.array([class_ids[labels[e]] for e in range(E)])
        class_names = list(class_ids)
    names = list(channels)
    channel_names = None if all(_is_int(n) for n in names) else names
    try:
        return EpochedDataset(data, label_arr, fs, channel_names=channel_names, class_names=class_names)
    except InvalidDatasetError as exc:
        raise CsvImportError(f"{path}: {exc}") from None


def _is_int(text: str) -> bool:
    try:
        int(text)
        return True
    except ValueError:
        return False


@dataclass(frozen=True)
class Rhythm:
    """Sinusoidal rhythm present in every epoch of one class.

    With ``burst`` (seconds) set, the sinusoid is gated by a Hann window of
    that length at a random onset, rescaled to unit RMS over the epoch so
    the rhythm's average power does not depend on the burst length.
    """

    class_id: int
    freq: float
    amplitude: float
    weights: tuple
    burst: Optional[float] = None


@dataclass(frozen=True)
class SynthSpec:
    n_classes: int
    epochs_per_class: int
    channels: int
    samples: int
    fs: float
    rhythms: tuple = ()
    noise_sigma: float = 1.0
    seed: int = 0
    class_names: Optional[tuple] = None
    channel_names: Optional[tuple] = None

    def __post_init__(self):
        if self.n_classes < 1:
            raise RdwtError("n_classes must be >= 1")
        if self.epochs_per_class < 1:
            raise RdwtError("epochs_per_class must be >= 1")
        if self.channels < 1 or self.samples < 2:
            raise RdwtError("need at least 1 channel and 2 samples")
        if not self.fs > 0:
            raise RdwtError("fs must be positive")
        if not self.noise_sigma >= 0:
            raise RdwtError("noise_sigma must be >= 0")
        for r in self.rhythms:
            if not 0 <= r.class_id < self.n_classes:
                raise RdwtError(f"rhythm class {r.class_id} out of range")
            if not 0 < r.freq < self.fs / 2:
                raise RdwtError(f"rhythm frequency {r.freq} Hz outside (0, fs/2)")
            if len(r.weights) != self.channels:
                raise RdwtError(f"rhythm at {r.freq} Hz has {len(r.weights)} weights for {self.channels} channels")
            if r.burst is not None and not 3 <= round(r.burst * self.fs) <= self.samples:
                raise RdwtError(f"burst of {r.burst} s does not fit in an epoch")

    def signal_power(self) -> float:
        """Mean per-sample power of the rhythms, averaged over classes and channels."""
        total = 0.0
        for r in self.rhythms:
            total += 0.5 * r.amplitude ** 2 * float(np.mean(np.square(r.weights)))
        return total / self.n_classes

    def with_snr(self, snr_db: float) -> "SynthSpec":
        """Copy with ``noise_sigma`` set so rhythm power / noise power equals ``snr_db``."""
        power = self.signal_power()
        if power <= 0:
            raise RdwtError("cannot set an SNR without rhythms")
        sigma = float(np.sqrt(power / 10 ** (snr_db / 10)))
        return replace(self, noise_sigma=sigma)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def standard_normals(rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` standard normal draws via Box-Muller on consecutive uniform pairs."""
    m = (n + 1) // 2
    u = rng.random(2 * m).reshape(m, 2)
    r = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
    theta = 2.0 * np.pi * u[:, 1]
    z = np.empty((m, 2))
    z[:, 0] = r * np.cos(theta)
    z[:, 1] = r * np.sin(theta)
    return z.ravel()[:n]


def _burst_envelope(rng, n: int, width: int) -> np.ndarray:
    onset = min(int(rng.random() * (n - width + 1)), n - width)
    env = np.zeros(n)
    env[onset:onset + width] = np.hanning(width)
    return env / np.sqrt(np.mean(env ** 2))


def synthesize(spec: SynthSpec) -> EpochedDataset:
    """Generate a labelled dataset of rhythms in white Gaussian noise.

    Epochs are class-interleaved (0, 1, ..., n-1, 0, 1, ...). For each
    epoch the generator draws, per rhythm of that class, one uniform phase
    (and for bursts one uniform onset), then ``C * T`` noise values in
    channel-major order.
    """
    rng = make_rng(spec.seed)
    E = spec.n_classes * spec.epochs_per_class
    t = np.arange(spec.samples) / spec.fs
    labels = np.tile(np.arange(spec.n_classes), spec.epochs_per_class)
    by_class = [[r for r in spec.rhythms if r.class_id == k] for k in range(spec.n_classes)]
    data = np.zeros((E, spec.channels, spec.samples))
    for e, k in enumerate(labels):
        for r in by_class[k]:
            phase = 2.0 * np.pi * rng.random()
            wave = r.amplitude * np.sin(2.0 * np.pi * r.freq * t + phase)
            if r.burst is not None:
                wave *= _burst_envelope(rng, spec.samples, int(round(r.burst * spec.fs)))
            data[e] += np.outer(np.asarray(r.weights, dtype=np.float64), wave)
        noise = standard_normals(rng, spec.channels * spec.samples)
        data[e] += spec.noise_sigma * noise.reshape(spec.channels, spec.samples)
    return EpochedDataset(data, labels, spec.fs, channel_names=spec.channel_names,
                          class_names=spec.class_names, n_classes=spec.n_classes)
