"""Command-line entry point: ``rdwtprep <command> ...``.

Exit codes: 0 success, 1 domain error, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import dataset_io
from .classifier import LinearModel, evaluate_paired, extract_features
from .config import ConfigError, load_pipeline_config, override_rdwt, parse_synth_spec
from .core import RdwtError
from .metrics import accuracy, cohens_kappa, confusion, macro_recall, paired_report
from .tfa import correlation_matrix, cwt_scalogram, default_freqs
from .transform import denoise_array, zeroed_fractions

log = logging.getLogger("rdwtprep")


class UsageError(Exception):
    """Bad arguments or unreadable input; exits with code 2."""


def _write_text(path, text: str):
    dataset_io._atomic_write(path, text.encode("utf-8"))


def _read_dataset(path):
    try:
        return dataset_io.read_container(path)
    except FileNotFoundError:
        raise UsageError(f"input file not found: {path}") from None
    except (OSError, dataset_io.ContainerError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None


def _resolve_config(args):
    cfg = load_pipeline_config(args.config)
    cfg.rdwt = override_rdwt(cfg.rdwt, levels=args.levels, tau=args.tau,
                             dilations=args.dilations, boundary=args.boundary)
    if args.seed is not None:
        cfg.seed = args.seed
    log.info("resolved config:\n%s", cfg.describe())
    return cfg


def _path(arg, cfg, key, what):
    value = arg if arg is not None else cfg.paths.get(key)
    if value is None:
        raise UsageError(f"no {what} given (argument or [paths] {key})")
    return value


def cmd_synth(args):
    try:
        text = Path(args.spec).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read spec {args.spec}: {exc.strerror}") from None
    spec = parse_synth_spec(text, args.spec)
    if args.seed is not None:
        from dataclasses import replace
        spec = replace(spec, seed=args.seed)
    ds = dataset_io.synthesize(spec)
    dataset_io.write_container(ds, args.out)
    E, C, T = ds.shape
    print(f"wrote {args.out}: {E} epochs x {C} channels x {T} samples, "
          f"{ds.n_classes} classes, fs={ds.fs:g} Hz, noise_sigma={spec.noise_sigma:.6g}, seed={spec.seed}")
    return 0


def cmd_denoise(args):
    cfg = _resolve_config(args)
    src = _path(args.input, cfg, "input", "input container")
    dst = _path(args.output, cfg, "output", "output path")
    ds = _read_dataset(src)
    out, a, d, dt, tau = denoise_array(ds.data, cfg.rdwt)
    for level, frac in enumerate(zeroed_fractions(d, dt), start=1):
        log.info("level %d: zeroed fraction %.6f of detail coefficients", level, frac)
    if args.dump_subbands:
        dump = Path(args.dump_subbands)
        dump.mkdir(parents=True, exist_ok=True)
        E, C, T = ds.shape
        times = np.arange(T) / ds.fs
        for level in range(cfg.rdwt.levels):
            for name, arr in (("approx", a), ("detail", d), ("detail_thr", dt)):
                dataset_io.write_matrix(dump / f"{name}_L{level + 1}.mat",
                                        arr[level].reshape(E * C, T), col_axis=times)
        log.info("wrote subbands for %d levels to %s", cfg.rdwt.levels, dump)
    dataset_io.write_container(ds.replace_data(out), dst)
    print(f"wrote {dst}")
    return 0


def cmd_scalogram(args):
    ds = _read_dataset(args.input)
    E, C, _ = ds.shape
    if not (0 <= args.epoch < E and 0 <= args.channel < C):
        raise UsageError(f"epoch/channel ({args.epoch}, {args.channel}) outside {E} x {C}")
    x = ds.signal(args.epoch, args.channel)
    fmax = args.fmax if args.fmax is not None else min(150.0, 0.98 * ds.fs / 2)
    if fmax > ds.fs / 2:
        raise RdwtError(f"frequency {fmax} Hz above Nyquist ({ds.fs / 2} Hz)")
    freqs = default_freqs(ds.fs, args.n_freqs, args.fmin, fmax)
    sc = cwt_scalogram(x, freqs, args.cycles)
    _write_text(args.out, sc.to_csv())
    if args.binary:
        dataset_io.write_matrix(args.binary, sc.magnitudes, sc.freqs_hz, sc.times)
    print(f"wrote {args.out}: {len(freqs)} frequencies x {len(x)} samples, peak {sc.peak_frequency():.3f} Hz")
    return 0


def cmd_xcorr(args):
    signals, ids = [], []
    for path in args.inputs:
        ds = _read_dataset(path)
        E, C, _ = ds.shape
        if not (0 <= args.epoch < E and 0 <= args.channel < C):
            raise UsageError(f"{path}: epoch/channel ({args.epoch}, {args.channel}) outside {E} x {C}")
        signals.append(ds.signal(args.epoch, args.channel))
        ids.append(Path(path).stem)
    cm = correlation_matrix(signals, args.max_lag, ids)
    _write_text(args.out, cm.to_csv())
    print(cm.to_csv(), end="")
    return 0


def cmd_eval(args):
    cfg = _resolve_config(args)
    train_ds = _read_dataset(_path(args.train, cfg, "train", "training container"))
    test_ds = _read_dataset(_path(args.test, cfg, "test", "test container"))
    out = _path(args.out, cfg, "output", "report prefix")
    raw, den, m_raw, m_den = evaluate_paired(train_ds, test_ds, cfg.rdwt, cfg.features, cfg.l2, cfg.seed,
                                             cfg.subject, cfg.training, return_models=True)
    report = paired_report([raw, den], model=cfg.model)
    _write_text(f"{out}.csv", report.to_csv())
    _write_text(f"{out}.txt", report.to_text())
    if args.save_models:
        m_raw.save(f"{args.save_models}.none.lmd")
        m_den.save(f"{args.save_models}.rdwt.lmd")
    print(report.to_text(), end="")
    return 0


def cmd_predict(args):
    cfg = load_pipeline_config(args.config)
    try:
        model = LinearModel.load(args.model)
    except OSError as exc:
        raise UsageError(f"cannot read model {args.model}: {exc.strerror}") from None
    ds = _read_dataset(args.input)
    pred = model.predict(extract_features(ds, cfg.features))
    lines = ["true,pred"] + [f"{t},{p}" for t, p in zip(ds.labels, pred)]
    _write_text(args.out, "\n".join(lines) + "\n")
    print(f"wrote {len(pred)} predictions to {args.out}")
    return 0


def read_predictions(path):
    """Read a ``true,pred`` CSV into two integer arrays."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    with fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["true", "pred"]:
        raise UsageError(f"{path}: header must be 'true,pred'")
    t, p = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            a, b = row
            t.append(int(a))
            p.append(int(b))
        except ValueError:
            raise UsageError(f"{path}:{lineno}: malformed row {row!r}") from None
    if not t:
        raise UsageError(f"{path}: no predictions")
    return np.array(t), np.array(p)


def cmd_metrics(args):
    t, p = read_predictions(args.predictions)
    n = args.n_classes if args.n_classes is not None else int(max(t.max(), p.max())) + 1
    cm = confusion(t, p, n)
    print(f"accuracy {accuracy(cm):.6f}")
    print(f"kappa {cohens_kappa(cm):.6f}")
    print(f"macro_recall {macro_recall(cm):.6f}")
    return 0


def _add_rdwt_flags(p):
    p.add_argument("--config", help="pipeline config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--levels", type=int)
    p.add_argument("--tau", help="threshold: a number or 'auto'")
    p.add_argument("--dilations", help="comma-separated p/q factors, one per level")
    p.add_argument("--boundary", choices=["periodic", "reflect", "zero"])


def build_parser():
    parser = argparse.ArgumentParser(prog="rdwtprep", description=__doc__.splitlines()[0])
    parser.add_argument("-q", "--quiet", action="store_true", help="only log warnings")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic epoch container")
    p.add_argument("spec")
    p.add_argument("out")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("denoise", help="denoise every epoch and channel")
    p.add_argument("input", nargs="?")
    p.add_argument("output", nargs="?")
    _add_rdwt_flags(p)
    p.add_argument("--dump-subbands", metavar="DIR")
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("scalogram", help="Morlet scalogram of one epoch/channel")
    p.add_argument("input")
    p.add_argument("out")
    p.add_argument("--epoch", type=int, default=0)
    p.add_argument("--channel", type=int, default=0)
    p.add_argument("--fmin", type=float, default=2.0)
    p.add_argument("--fmax", type=float)
    p.add_argument("--n-freqs", type=int, default=64)
    p.add_argument("--cycles", type=float, default=7.0)
    p.add_argument("--binary", metavar="PATH", help="also write a MAT1 matrix file")
    p.set_defaults(func=cmd_scalogram)

    p = sub.add_parser("xcorr", help="max normalized cross-correlation matrix across files")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--epoch", type=int, default=0)
    p.add_argument("--channel", type=int, default=0)
    p.add_argument("--max-lag", type=int, default=100)
    p.set_defaults(func=cmd_xcorr)

    p = sub.add_parser("eval", help="paired evaluation without/with denoising")
    p.add_argument("train", nargs="?")
    p.add_argument("test", nargs="?")
    p.add_argument("out", nargs="?", help="report prefix; writes PREFIX.csv and PREFIX.txt")
    _add_rdwt_flags(p)
    p.add_argument("--save-models", metavar="PREFIX")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="apply a saved model")
    p.add_argument("model")
    p.add_argument("input")
    p.add_argument("out")
    p.add_argument("--config")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("metrics", help="accuracy and kappa from a true,pred CSV")
    p.add_argument("predictions")
    p.add_argument("--n-classes", type=int)
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr, force=True)
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RdwtError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
