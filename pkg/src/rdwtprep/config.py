"""Plain-text ``[section] key = value`` configuration files.

Pipeline config (every key optional, shown with defaults)::

    [rdwt]
    levels = 4
    dilations = 3/2, 5/3, 7/4, 9/5
    threshold = 0            # number, or auto
    threshold_k = 3
    level_thresholds =       # optional, one number per level
    base_filter = binomial5
    boundary = periodic      # periodic | reflect | zero

    [features]
    bands = 8-13, 18-26
    window = hann            # hann | boxcar

    [classifier]
    l2 = 0.001
    step = 0.1
    max_iter = 5000
    patience = 100
    tol = 1e-9

    [run]
    seed = 0
    subject = S01
    model = BandPowerLR

    [paths]
    train =
    test =
    input =
    output =

Synthetic dataset spec::

    [synth]
    n_classes = 2
    epochs_per_class = 60
    channels = 3
    samples = 1000
    fs = 250
    noise_sigma = 1.0        # or: snr_db = -3
    seed = 7

    [rhythm.mu]
    class = 0
    freq = 10
    amplitude = 1.0
    weights = 1.0, 0.7, 0.4
    burst = 0.075            # optional, seconds

``#`` and ``;`` start comments. Unknown sections and keys are rejected.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from .classifier import BandPowerExtractor, TrainSettings
from .core import RationalFactor, RdwtConfig, RdwtError, default_dilations
from .dataset_io import Rhythm, SynthSpec


class ConfigError(RdwtError):
    pass


@dataclass
class Entry:
    value: str
    line: int


_SECTION = re.compile(r"^\[([A-Za-z0-9_.\-]+)\]$")
_KEY = re.compile(r"^([A-Za-z0-9_.\-]+)\s*=\s*(.*)$")


def parse_ini(text: str, source: str = "<config>") -> dict:
    """Parse into ``{section: {key: Entry}}`` keeping line numbers."""
    out = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = re.split(r"\s[#;]|^[#;]", raw, maxsplit=1)[0].strip()
        if not line:
            continue
        m = _SECTION.match(line)
        if m:
            section = m.group(1)
            if section in out:
                raise ConfigError(f"{source}:{lineno}: duplicate section [{section}]")
            out[section] = {}
            continue
        m = _KEY.match(line)
        if not m:
            raise ConfigError(f"{source}:{lineno}: cannot parse {raw.strip()!r}")
        if section is None:
            raise ConfigError(f"{source}:{lineno}: key outside of a section")
        key, value = m.group(1), m.group(2).strip()
        if key in out[section]:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[section][key] = Entry(value, lineno)
    return out


class _Reader:
    """Typed access to one section; records which keys were consumed."""

    def __init__(self, entries: dict, section: str, source: str):
        self.entries = entries
        self.section = section
        self.source = source
        self.seen = set()

    def where(self, key):
        e = self.entries.get(key)
        return f"{self.source}:{e.line}" if e else self.source

    def raw(self, key):
        self.seen.add(key)
        e = self.entries.get(key)
        if e is None or e.value == "":
            return None
        return e.value

    def get(self, key, conv, default=None):
        v = self.raw(key)
        if v is None:
            return default
        try:
            return conv(v)
        except (ValueError, RdwtError) as exc:
            raise ConfigError(f"{self.where(key)}: bad value for [{self.section}] {key}: {exc}") from None

    def finish(self):
        extra = set(self.entries) - self.seen
        if extra:
            key = min(extra, key=lambda k: self.entries[k].line)
            raise ConfigError(f"{self.where(key)}: unknown key {key!r} in [{self.section}]")


def _floats(text):
    return tuple(float(v) for v in re.split(r"[,\s]+", text.strip()) if v)


def _bands(text):
    out = []
    for part in text.split(","):
        lo, hi = part.strip().split("-")
        out.append((float(lo), float(hi)))
    return tuple(out)


def _dilations(text):
    return tuple(RationalFactor.parse(p) for p in text.split(","))


def _threshold(text):
    return "auto" if text.strip().lower() == "auto" else float(text)


@dataclass
class PipelineConfig:
    rdwt: RdwtConfig = field(default_factory=RdwtConfig)
    features: BandPowerExtractor = field(default_factory=BandPowerExtractor)
    l2: float = 1e-3
    training: TrainSettings = field(default_factory=TrainSettings)
    seed: int = 0
    subject: str = "S01"
    model: str = "BandPowerLR"
    paths: dict = field(default_factory=dict)

    def describe(self) -> str:
        """Fully resolved settings, one ``section.key = value`` per line."""
        r = self.rdwt
        lines = [
            f"rdwt.levels = {r.levels}",
            f"rdwt.dilations = {', '.join(str(d) for d in r.dilations)}",
            f"rdwt.threshold = {r.threshold}",
            f"rdwt.threshold_k = {r.threshold_k}",
            f"rdwt.level_thresholds = {'' if r.level_thresholds is None else ', '.join(map(str, r.level_thresholds))}",
            f"rdwt.base_filter = {r.base_filter}",
            f"rdwt.boundary = {r.boundary}",
            f"features.bands = {', '.join(f'{lo:g}-{hi:g}' for lo, hi in self.features.bands)}",
            f"features.window = {self.features.window}",
            f"classifier.l2 = {self.l2}",
        ]
        lines += [f"classifier.{f.name} = {getattr(self.training, f.name)}" for f in fields(self.training)]
        lines += [f"run.seed = {self.seed}", f"run.subject = {self.subject}", f"run.model = {self.model}"]
        lines += [f"paths.{k} = {v}" for k, v in sorted(self.paths.items())]
        return "\n".join(lines)


PIPELINE_SECTIONS = ("rdwt", "features", "classifier", "run", "paths")


def parse_pipeline_config(text: str, source: str = "<config>") -> PipelineConfig:
    ini = parse_ini(text, source)
    for sec, entries in ini.items():
        if sec not in PIPELINE_SECTIONS:
            line = min((e.line for e in entries.values()), default=0)
            raise ConfigError(f"{source}: unknown section [{sec}]" + (f" (near line {line})" if line else ""))
    rd = _Reader(ini.get("rdwt", {}), "rdwt", source)
    kw = dict(
        levels=rd.get("levels", int, 4),
        dilations=rd.get("dilations", _dilations),
        threshold=rd.get("threshold", _threshold, 0.0),
        threshold_k=rd.get("threshold_k", float, 3.0),
        level_thresholds=rd.get("level_thresholds", _floats),
        base_filter=rd.get("base_filter", str, "binomial5"),
        boundary=rd.get("boundary", str, "periodic"),
    )
    rd.finish()
    try:
        rdwt = RdwtConfig(**kw)
    except RdwtError as exc:
        raise ConfigError(f"{source}: [rdwt] {exc}") from None

    fe = _Reader(ini.get("features", {}), "features", source)
    bands = fe.get("bands", _bands, BandPowerExtractor().bands)
    window = fe.get("window", str, "hann")
    fe.finish()
    try:
        features = BandPowerExtractor(bands, window)
    except RdwtError as exc:
        raise ConfigError(f"{source}: [features] {exc}") from None

    cl = _Reader(ini.get("classifier", {}), "classifier", source)
    l2 = cl.get("l2", float, 1e-3)
    training = TrainSettings(
        step=cl.get("step", float, 0.1),
        max_iter=cl.get("max_iter", int, 5000),
        patience=cl.get("patience", int, 100),
        tol=cl.get("tol", float, 1e-9),
    )
    cl.finish()

    run = _Reader(ini.get("run", {}), "run", source)
    seed = run.get("seed", int, 0)
    subject = run.get("subject", str, "S01")
    model = run.get("model", str, "BandPowerLR")
    run.finish()

    pa = _Reader(ini.get("paths", {}), "paths", source)
    paths = {k: pa.get(k, str) for k in ("train", "test", "input", "output")}
    pa.finish()
    paths = {k: v for k, v in paths.items() if v}
    return PipelineConfig(rdwt, features, l2, training, seed, subject, model, paths)


def load_pipeline_config(path: Optional[str]) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    return parse_pipeline_config(Path(path).read_text(), str(path))


def override_rdwt(cfg: RdwtConfig, levels=None, tau=None, dilations=None, boundary=None) -> RdwtConfig:
    """Apply command-line overrides; changing ``levels`` alone resets dilations to the default schedule."""
    kw = {}
    if levels is not None:
        kw["levels"] = levels
        if dilations is None and levels != cfg.levels:
            kw["dilations"] = default_dilations(levels)
        if cfg.level_thresholds is not None and levels != cfg.levels:
            kw["level_thresholds"] = None
    if tau is not None:
        kw["threshold"] = _threshold(tau) if isinstance(tau, str) else tau
        kw["level_thresholds"] = None
    if dilations is not None:
        kw["dilations"] = _dilations(dilations) if isinstance(dilations, str) else tuple(dilations)
    if boundary is not None:
        kw["boundary"] = boundary
    return replace(cfg, **kw)


def parse_synth_spec(text: str, source: str = "<spec>") -> SynthSpec:
    ini = parse_ini(text, source)
    if "synth" not in ini:
        raise ConfigError(f"{source}: missing [synth] section")
    sy = _Reader(ini["synth"], "synth", source)

    def required(key, conv):
        v = sy.get(key, conv)
        if v is None:
            raise ConfigError(f"{source}: [synth] {key} is required")
        return v

    n_classes = required("n_classes", int)
    epc = required("epochs_per_class", int)
    channels = required("channels", int)
    samples = required("samples", int)
    fs = required("fs", float)
    sigma = sy.get("noise_sigma", float)
    snr_db = sy.get("snr_db", float)
    seed = sy.get("seed", int, 0)
    if n_classes < 1:
        raise ConfigError(f"{sy.where('n_classes')}: n_classes must be >= 1")
    if epc < 1:
        raise ConfigError(f"{sy.where('epochs_per_class')}: epochs_per_class must be >= 1")
    if sigma is not None and snr_db is not None:
        raise ConfigError(f"{sy.where('snr_db')}: give noise_sigma or snr_db, not both")
    sy.finish()

    rhythms = []
    for sec, entries in ini.items():
        if sec == "synth":
            continue
        if not sec.startswith("rhythm."):
            raise ConfigError(f"{source}: unknown section [{sec}]")
        rr = _Reader(entries, sec, source)
        try:
            rhythm = Rhythm(
                class_id=rr.get("class", int, 0),
                freq=rr.get("freq", float),
                amplitude=rr.get("amplitude", float, 1.0),
                weights=rr.get("weights", _floats, (1.0,) * channels),
                burst=rr.get("burst", float),
            )
        except TypeError:
            raise ConfigError(f"{source}: [{sec}] needs freq") from None
        if rhythm.freq is None:
            raise ConfigError(f"{source}: [{sec}] needs freq")
        rr.finish()
        rhythms.append((rhythm, rr))

    try:
        spec = SynthSpec(n_classes, epc, channels, samples, fs, tuple(r for r, _ in rhythms),
                         1.0 if sigma is None else sigma, seed)
    except RdwtError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    if snr_db is not None:
        try:
            spec = spec.with_snr(snr_db)
        except RdwtError as exc:
            raise ConfigError(f"{sy.where('snr_db')}: {exc}") from None
    return spec
