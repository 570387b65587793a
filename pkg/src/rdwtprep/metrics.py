"""Confusion matrices, accuracy, Cohen's kappa and paired with/without reports."""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Optional

import numpy as np

from .core import ConfusionMatrix, RdwtError

CONDITIONS = ("none", "rdwt")
CONDITION_LABELS = {"none": "None", "rdwt": "RDWT"}


def confusion(true_labels, predicted_labels, n_classes: int) -> ConfusionMatrix:
    t = np.asarray(true_labels)
    p = np.asarray(predicted_labels)
    if t.ndim != 1 or t.shape != p.shape or t.size == 0:
        raise RdwtError(f"length mismatch: {t.size} true labels vs {p.size} predictions")
    for name, arr in (("true", t), ("predicted", p)):
        if np.any(arr < 0) or np.any(arr >= n_classes):
            raise RdwtError(f"{name} label out of range for {n_classes} classes")
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(counts, (t.astype(np.int64), p.astype(np.int64)), 1)
    return ConfusionMatrix(counts)


def accuracy(cm: ConfusionMatrix) -> float:
    """Overall accuracy: trace / total."""
    return float(np.trace(cm.counts) / cm.total)


def macro_recall(cm: ConfusionMatrix) -> float:
    """Mean per-class recall over classes that occur in the true labels."""
    rows = cm.counts.sum(axis=1)
    present = rows > 0
    return float(np.mean(np.diag(cm.counts)[present] / rows[present]))


def _kappa_from_counts(counts) -> float:
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    pa = np.trace(counts) / total
    pe = float(np.dot(counts.sum(axis=1), counts.sum(axis=0)) / total ** 2)
    if pe == 1.0:
        warnings.warn("chance agreement is 1; kappa is undefined and reported as 0", RuntimeWarning)
        return 0.0
    return float((pa - pe) / (1.0 - pe))


def cohens_kappa(cm: ConfusionMatrix) -> float:
    """(P_a - P_e) / (1 - P_e) with P_e from the row and column marginals.

    Returns 0 with a RuntimeWarning when P_e == 1.
    """
    return _kappa_from_counts(cm.counts)


def kappa_per_class_mean(cm: ConfusionMatrix) -> float:
    """Mean of one-vs-rest kappas, one per class."""
    c = cm.counts
    total = c.sum()
    vals = []
    for i in range(cm.n_classes):
        tp = c[i, i]
        fn = c[i].sum() - tp
        fp = c[:, i].sum() - tp
        tn = total - tp - fn - fp
        vals.append(_kappa_from_counts([[tp, fn], [fp, tn]]))
    return float(np.mean(vals))


@dataclass(frozen=True)
class SubjectResult:
    """Scores of one subject under one condition.

    ``accuracy`` is a fraction. ``confusion`` may be omitted for externally
    reported results, in which case ``kappa`` may be missing too.
    """

    subject_id: str
    condition: str
    accuracy: float
    kappa: Optional[float] = None
    confusion: Optional[ConfusionMatrix] = None

    def __post_init__(self):
        if self.condition not in CONDITIONS:
            raise RdwtError(f"condition must be one of {CONDITIONS}, got {self.condition!r}")
        if not 0.0 <= self.accuracy <= 1.0:
            raise RdwtError(f"accuracy {self.accuracy} outside [0, 1]")
        if self.kappa is not None and not -1.0 <= self.kappa <= 1.0:
            raise RdwtError(f"kappa {self.kappa} outside [-1, 1]")
        if self.confusion is not None and abs(accuracy(self.confusion) - self.accuracy) > 1e-12:
            raise RdwtError("accuracy disagrees with the confusion matrix")

    @classmethod
    def from_percent(cls, subject_id, condition, percent, kappa=None):
        return cls(str(subject_id), condition, percent / 100.0, kappa)


@dataclass(frozen=True)
class PairedReport:
    subjects: tuple
    results: dict          # (subject_id, condition) -> SubjectResult
    mean_accuracy: dict    # condition -> fraction
    mean_kappa: dict       # condition -> float or None
    model: str = "model"

    def accuracy_of(self, subject, condition) -> float:
        return self.results[(subject, condition)].accuracy

    def delta(self, subject) -> float:
        """Per-subject accuracy change in percentage points."""
        return 100.0 * (self.accuracy_of(subject, "rdwt") - self.accuracy_of(subject, "none"))

    @property
    def mean_delta_pp(self) -> float:
        return 100.0 * (self.mean_accuracy["rdwt"] - self.mean_accuracy["none"])

    @property
    def mean_delta_kappa(self) -> Optional[float]:
        if self.mean_kappa["rdwt"] is None or self.mean_kappa["none"] is None:
            return None
        return self.mean_kappa["rdwt"] - self.mean_kappa["none"]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["model", "subject", "condition", "accuracy_pct", "kappa", "macro_recall_pct",
                    "delta_pp"])
        for s in self.subjects:
            for cond in CONDITIONS:
                r = self.results[(s, cond)]
                mr = "" if r.confusion is None else repr(100.0 * macro_recall(r.confusion))
                delta = repr(self.delta(s)) if cond == "rdwt" else ""
                w.writerow([self.model, s, cond, repr(100.0 * r.accuracy),
                            "" if r.kappa is None else repr(r.kappa), mr, delta])
        return buf.getvalue()

    def to_text(self) -> str:
        """Fixed-width table: Model, Preproc., one column per subject, Avg., Kappa."""
        head = ["Model", "Preproc."] + list(self.subjects) + ["Avg.", "Kappa"]
        rows = []
        for i, cond in enumerate(CONDITIONS):
            cells = [self.model if i == 0 else "", CONDITION_LABELS[cond]]
            cells += [round_half_away(100.0 * self.accuracy_of(s, cond), 2) for s in self.subjects]
            cells.append(round_half_away(100.0 * self.mean_accuracy[cond], 2))
            k = self.mean_kappa[cond]
            cells.append("-" if k is None else round_half_away(k, 4))
            rows.append(cells)
        delta_k = self.mean_delta_kappa
        rows.append(["", "Delta"] + [round_half_away(self.delta(s), 2) for s in self.subjects]
                    + [round_half_away(self.mean_delta_pp, 2),
                       "-" if delta_k is None else round_half_away(delta_k, 4)])
        widths = [max(len(str(r[j])) for r in [head] + rows) for j in range(len(head))]
        lines = []
        for r in [head] + rows:
            lines.append("  ".join(str(c).ljust(wd) if j < 2 else str(c).rjust(wd)
                                   for j, (c, wd) in enumerate(zip(r, widths))).rstrip())
        return "\n".join(lines) + "\n"


def round_half_away(value: float, digits: int) -> str:
    """Format with ``digits`` decimals, rounding halves away from zero."""
    q = Decimal(1).scaleb(-digits)
    return str(Decimal(repr(float(value))).quantize(q, rounding=ROUND_HALF_UP))


def paired_report(results, model: str = "model") -> PairedReport:
    """Group per-subject results into a with/without comparison.

    Raises:
        RdwtError: a subject lacks one of the two conditions or appears twice.
    """
    table = {}
    subjects = []
    for r in results:
        key = (r.subject_id, r.condition)
        if key in table:
            raise RdwtError(f"duplicate result for subject {r.subject_id!r}, condition {r.condition!r}")
        table[key] = r
        if r.subject_id not in subjects:
            subjects.append(r.subject_id)
    if not subjects:
        raise RdwtError("no results to report")
    for s in subjects:
        for cond in CONDITIONS:
            if (s, cond) not in table:
                raise RdwtError(f"missing condition {cond!r} for subject {s!r}")
    mean_acc, mean_k = {}, {}
    for cond in CONDITIONS:
        mean_acc[cond] = float(np.mean([table[(s, cond)].accuracy for s in subjects]))
        ks = [table[(s, cond)].kappa for s in subjects]
        mean_k[cond] = None if any(k is None for k in ks) else float(np.mean(ks))
    return PairedReport(tuple(subjects), table, mean_acc, mean_k, model)
