"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import time

import numpy as np
import pytest

from oracles import direct_decompose, hard_threshold as oracle_threshold
from rdwtprep.classifier import evaluate_paired
from rdwtprep.core import ConfusionMatrix, EpochedDataset, RationalFactor, RdwtConfig, Signal
from rdwtprep.dataset_io import (BadMagicError, PayloadSizeError, Rhythm, SynthSpec, TruncatedPayloadError,
                                 decode_container, read_container, synthesize, write_container)
from rdwtprep.metrics import SubjectResult, accuracy, cohens_kappa, paired_report
from rdwtprep.resample import filters_for
from rdwtprep.tfa import correlation_matrix, cwt_scalogram
from rdwtprep.transform import decompose, hard_threshold, reconstruct

pytestmark = pytest.mark.acceptance

NOISE_P99 = 0.127112  # tests/oracle_scripts/xcorr_noise_bound.py, T=1000, max_lag=100


@pytest.fixture
def report(capsys):
    def _report(number, name, ok, detail=""):
        with capsys.disabled():
            print(f"\nACCEPTANCE {number:2d} {name}: {'PASS' if ok else 'FAIL'} {detail}".rstrip())
        assert ok, f"criterion {number} ({name}) failed: {detail}"
    return _report


def test_01_perfect_reconstruction(report):
    rng = np.random.default_rng(101)
    lengths = (64, 250, 1000)
    start = time.perf_counter()
    worst = 0.0
    for levels in (1, 2, 3, 4):
        cfg = RdwtConfig(levels=levels, dilations=RdwtConfig().dilations[:levels], threshold=0.0)
        filters = filters_for(cfg)
        for i in range(200):
            x = Signal(rng.standard_normal(lengths[i % 3]) * rng.uniform(0.1, 100), 250.0)
            err = np.max(np.abs(reconstruct(decompose(x, filters, cfg)).samples - x.samples))
            worst = max(worst, err)
    elapsed = time.perf_counter() - start
    report(1, "perfect reconstruction", worst <= 1e-9 and elapsed < 10,
           f"max err {worst:.3e}, {elapsed:.2f} s")


def test_02_shift_equivariance(report):
    rng = np.random.default_rng(202)
    cfg = RdwtConfig()
    filters = filters_for(cfg)
    worst = 0.0
    for _ in range(100):
        T = int(rng.integers(8, 400))
        k = int(rng.integers(-T, T))
        x = rng.standard_normal(T)
        p = decompose(Signal(x, 1.0), filters, cfg)
        ps = decompose(Signal(np.roll(x, k), 1.0), filters, cfg)
        worst = max(worst,
                    np.max(np.abs(ps.approximations - np.roll(p.approximations, k, axis=-1))),
                    np.max(np.abs(ps.details - np.roll(p.details, k, axis=-1))))
    report(2, "shift equivariance", worst <= 1e-12, f"max err {worst:.3e}")


def test_03_threshold_semantics(report):
    rng = np.random.default_rng(303)
    cfg = RdwtConfig()
    filters = filters_for(cfg)
    failures = []
    for trial in range(50):
        x = rng.standard_normal(int(rng.integers(16, 300))) * rng.uniform(0.1, 10)
        d = decompose(Signal(x, 1.0), filters, cfg).details
        grid = np.sort(rng.uniform(0, 3 * np.abs(d).max(), 12))
        prev_zero = np.zeros(d.shape, dtype=bool)
        for tau in grid:
            dt = hard_threshold(d, tau)
            zero = (dt == 0) & (d != 0)
            if not np.all(zero >= prev_zero):
                failures.append(f"trial {trial}: zeroed set shrank at tau={tau}")
            if not np.all((dt == 0) | (dt == d)):
                failures.append(f"trial {trial}: coefficient changed value")
            if np.any(np.sum(dt ** 2, axis=-1) > np.sum(d ** 2, axis=-1)):
                failures.append(f"trial {trial}: detail energy grew")
            prev_zero = zero
    # every vector of length 3 over a small alphabet, every threshold on the same grid
    alphabet = np.array([-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0])
    vectors = np.array(np.meshgrid(alphabet, alphabet, alphabet)).reshape(3, -1).T
    checked = 0
    for tau in (0.0, 0.5, 1.0, 1.5, 2.0, 2.5):
        for v in vectors:
            checked += 1
            if not np.array_equal(hard_threshold(v, tau), oracle_threshold(v, tau)):
                failures.append(f"exhaustive case {v} tau={tau}")
    report(3, "threshold semantics", not failures,
           f"{checked} exhaustive cases; " + (failures[0] if failures else "no violations"))


def test_04_oracle_equivalence(report):
    rng = np.random.default_rng(404)
    schedule = [RationalFactor(p, q) for p, q in ((3, 2), (5, 3), (7, 4), (9, 5), (4, 3), (5, 2), (2, 1))]
    worst = 0.0
    for _ in range(500):
        T = int(rng.integers(2, 65))
        levels = int(rng.integers(1, 5))
        cfg = RdwtConfig(levels=levels,
                         dilations=tuple(schedule[i] for i in rng.integers(0, len(schedule), levels)),
                         base_filter=str(rng.choice(["binomial3", "binomial5", "binomial7", "haar"])),
                         boundary=str(rng.choice(["periodic", "reflect", "zero"])))
        filters = filters_for(cfg)
        x = rng.standard_normal(T)
        pyr = decompose(Signal(x, 1.0), filters, cfg)
        a, d = direct_decompose(x, [f.low for f in filters], [f.center for f in filters], cfg.boundary)
        worst = max(worst, np.max(np.abs(pyr.approximations - a)), np.max(np.abs(pyr.details - d)))
    report(4, "oracle equivalence", worst <= 1e-12, f"max err {worst:.3e}")


def test_05_metrics_oracle(report):
    cm = ConfusionMatrix([[45, 5], [15, 35]])
    k, acc = cohens_kappa(cm), accuracy(cm)
    diag = cohens_kappa(ConfusionMatrix([[20, 0, 0], [0, 13, 0], [0, 0, 7]]))
    indep = cohens_kappa(ConfusionMatrix(np.outer([2, 3, 5], [4, 1, 5])))
    ok = abs(k - 0.6) <= 1e-12 and abs(acc - 0.8) <= 1e-12 and diag == 1.0 and abs(indep) <= 1e-12
    report(5, "metrics oracle", ok, f"kappa {k!r}, accuracy {acc!r}, diagonal {diag!r}, independent {indep!r}")


def test_06_table_aggregation(report):
    eegnet_rdwt = [79.86, 51.74, 92.71, 57.64, 61.11, 49.65, 86.11, 75.00, 77.08]
    tcnet_none = [63.19, 49.65, 81.25, 50.69, 62.50, 46.18, 80.90, 68.75, 76.04]
    tcnet_rdwt = [75.35, 52.78, 85.76, 60.76, 67.36, 49.65, 80.56, 70.14, 76.74]

    def results(none, rdwt):
        out = []
        for i, (a, b) in enumerate(zip(none, rdwt), start=1):
            out += [SubjectResult.from_percent(f"S{i:02d}", "none", a),
                    SubjectResult.from_percent(f"S{i:02d}", "rdwt", b)]
        return out

    avg = 100 * paired_report(results(eegnet_rdwt, eegnet_rdwt), "EEGNet").mean_accuracy["rdwt"]
    delta = paired_report(results(tcnet_none, tcnet_rdwt), "EEGTCNet").mean_delta_pp
    ok = abs(avg - 70.10) <= 0.005 and abs(delta - 4.44) <= 0.005
    report(6, "table aggregation", ok, f"EEGNet RDWT avg {avg:.4f}, EEGTCNet delta {delta:+.4f} pp")


def _burst_spec(seed, epochs_per_class):
    # rhythms arrive as short bursts at a random time in each epoch
    rhythms = (Rhythm(0, 10.0, 1.0, (1.0, 0.7, 0.4), burst=0.075),
               Rhythm(1, 22.0, 1.0, (0.4, 0.7, 1.0), burst=0.075))
    return SynthSpec(2, epochs_per_class, 3, 1000, 250.0, rhythms, 1.0, seed).with_snr(-3)


def test_07_denoising_benefit(report):
    cfg = RdwtConfig(threshold="auto")
    start = time.perf_counter()
    margins = []
    for s in range(20):
        none, rdwt = evaluate_paired(synthesize(_burst_spec(2 * s, 60)), synthesize(_burst_spec(2 * s + 1, 40)),
                                     cfg, seed=s)
        margins.append(100 * (rdwt.accuracy - none.accuracy))
    elapsed = time.perf_counter() - start
    mean = float(np.mean(margins))
    ok = margins[0] >= 0 and mean > 0 and elapsed < 60
    report(7, "denoising benefit", ok,
           f"seed 0 margin {margins[0]:+.2f} pp, mean over 20 seeds {mean:+.3f} pp "
           f"({sum(m > 0 for m in margins)} up, {sum(m < 0 for m in margins)} down), {elapsed:.1f} s")


def test_08_scalogram_peak(report):
    fs = 250.0
    x = Signal(np.sin(2 * np.pi * 10.0 * np.arange(1000) / fs), fs)
    peak = cwt_scalogram(x).peak_frequency()
    report(8, "scalogram peak", abs(peak - 10.0) <= 1.0, f"peak {peak:.3f} Hz")


def test_09_cross_correlation(report):
    rng = np.random.default_rng(909)
    noise = [Signal(rng.standard_normal(1000), 250.0) for _ in range(6)]
    base = noise[0].samples
    sigs = noise + [Signal(base.copy(), 250.0), Signal(np.roll(base, 5), 250.0)]
    cm = correlation_matrix(sigs, 100).values
    off = cm[:6, :6][~np.eye(6, dtype=bool)]
    ok = (np.all(np.diag(cm) == 1.0) and np.array_equal(cm, cm.T) and cm[0, 6] == 1.0
          and np.all(off < NOISE_P99))
    report(9, "cross-correlation", ok, f"max noise off-diagonal {off.max():.4f} < {NOISE_P99}")


def test_10_format_round_trip(report, tmp_path):
    rng = np.random.default_rng(1010)
    failures = []
    for i in range(100):
        E, C, T = (int(v) for v in rng.integers(1, [6, 5, 80]))
        T = max(T, 2)
        n_classes = int(rng.integers(1, 5))
        names = tuple(f"ch{j}é" for j in range(C)) if rng.random() < 0.5 else None
        data = rng.standard_normal((E, C, T)) * 10.0 ** rng.uniform(-6, 6)
        ds = EpochedDataset(data, rng.integers(0, n_classes, E), float(rng.uniform(1, 5000)),
                            channel_names=names, n_classes=n_classes)
        path = tmp_path / f"{i}.epc"
        write_container(ds, path)
        back = read_container(path)
        if not (back.data.tobytes() == ds.data.tobytes() and np.array_equal(back.labels, ds.labels)
                and back.fs == ds.fs and back.channel_names == ds.channel_names
                and back.n_classes == ds.n_classes):
            failures.append(f"dataset {i} changed")
    buf = path.read_bytes()
    cases = [(b"XXXX" + buf[4:], BadMagicError), (buf[:20], TruncatedPayloadError),
             (buf[:-3], TruncatedPayloadError), (buf + b"\0\0", PayloadSizeError)]
    for blob, err in cases:
        try:
            decode_container(blob)
            failures.append(f"{err.__name__} not raised")
        except err:
            pass
    report(10, "format round trip", not failures, failures[0] if failures else "100 datasets, 4 corruptions")
