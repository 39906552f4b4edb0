"""Evaluation criteria: CCC for VA, total accuracy and F1 scores for
AUs/expressions, and a consolidated per-task report.

Conventions (the tables report both F1 variants explicitly named):

* AU decisions threshold sigmoid outputs at 0.5; a frame counts as
  correct under total accuracy only if all 8 bits match (exact-match),
  with per-bit accuracy available behind a flag.
* Per-class F1 is 0 when precision + recall is 0. Macro F1 is the plain
  unweighted mean over classes; weighted F1 weights by true-class
  support, which drops zero-support classes.
* Metrics for tasks a model does not predict are reported as None,
  never 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Sequence

import numpy as np
import torch

from affmt.data.types import AU_IDS, ConsolidatedFrame, EXPRESSION_NAMES, Expression
from affmt.errors import UndefinedMetricError, ValidationError
from affmt.losses import ccc as _ccc

AU_CLASS_NAMES = tuple(f"au{a}" for a in AU_IDS)
_EXPR_INDEX = {e: i for i, e in enumerate(Expression)}


def ccc_metric(pred, target) -> float:
    """Concordance correlation coefficient (same implementation as the loss)."""
    return float(
        _ccc(
            torch.as_tensor(np.asarray(pred), dtype=torch.float64),
            torch.as_tensor(np.asarray(target), dtype=torch.float64),
        )
    )


def au_probs_to_bits(probs, threshold: float = 0.5) -> np.ndarray:
    return (np.asarray(probs) >= threshold).astype(np.int64)


def total_accuracy(pred_labels, true_labels, per_bit: bool = False) -> float:
    """Fraction of correct predictions.

    2-D inputs are AU bit matrices: a row is correct only when all bits
    match, unless per_bit=True, which scores each bit independently.
    """
    pred = np.asarray(pred_labels)
    true = np.asarray(true_labels)
    if pred.shape != true.shape:
        raise ValidationError(f"shape mismatch {pred.shape} vs {true.shape}")
    if pred.size == 0:
        raise UndefinedMetricError("accuracy undefined for empty input")
    if pred.ndim == 2:
        if per_bit:
            return float((pred == true).mean())
        return float((pred == true).all(axis=1).mean())
    return float((pred == true).mean())


@dataclass
class F1Scores:
    macro: float
    weighted: float
    per_class: Dict[str, float]
    support: Dict[str, int]


def _f1_from_counts(tp: int, fp: int, fn: int) -> float:
    precision = tp / (tp + fp) if (tp + fp) else 0.0
    recall = tp / (tp + fn) if (tp + fn) else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def f1_scores(pred_labels, true_labels, classes: Sequence[str]) -> F1Scores:
    """Per-class, macro (unweighted mean) and support-weighted F1.

    2-D inputs are multi-label bit matrices with one column per class;
    1-D inputs are multi-class integer labels indexing ``classes``.
    """
    pred = np.asarray(pred_labels)
    true = np.asarray(true_labels)
    if pred.shape != true.shape:
        raise ValidationError(f"shape mismatch {pred.shape} vs {true.shape}")
    per_class: Dict[str, float] = {}
    support: Dict[str, int] = {}
    if pred.ndim == 2:
        if pred.shape[1] != len(classes):
            raise ValidationError("column count does not match class names")
        for j, name in enumerate(classes):
            p, t = pred[:, j] != 0, true[:, j] != 0
            tp = int(np.sum(p & t))
            fp = int(np.sum(p & ~t))
            fn = int(np.sum(~p & t))
            per_class[name] = _f1_from_counts(tp, fp, fn)
            support[name] = int(t.sum())
    else:
        for j, name in enumerate(classes):
            p, t = pred == j, true == j
            tp = int(np.sum(p & t))
            fp = int(np.sum(p & ~t))
            fn = int(np.sum(~p & t))
            per_class[name] = _f1_from_counts(tp, fp, fn)
            support[name] = int(t.sum())

    macro = float(np.mean(list(per_class.values()))) if per_class else 0.0
    total_support = sum(support.values())
    if total_support:
        weighted = (
            sum(per_class[c] * support[c] for c in per_class) / total_support
        )
    else:
        weighted = 0.0
    return F1Scores(
        macro=macro, weighted=float(weighted), per_class=per_class, support=support
    )


@dataclass
class MetricReport:
    """CCC-V/A plus classification metrics; absent tasks stay None."""

    ccc_v: Optional[float] = None
    ccc_a: Optional[float] = None
    total_accuracy: Optional[float] = None
    f1_weighted: Optional[float] = None
    f1_macro: Optional[float] = None
    per_class_f1: Dict[str, float] = field(default_factory=dict)
    n_frames: int = 0

    def to_dict(self) -> dict:
        return {
            "ccc_v": self.ccc_v,
            "ccc_a": self.ccc_a,
            "total_accuracy": self.total_accuracy,
            "f1_weighted": self.f1_weighted,
            "f1_macro": self.f1_macro,
            "per_class_f1": dict(self.per_class_f1),
            "n_frames": self.n_frames,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "MetricReport":
        return cls(
            ccc_v=d.get("ccc_v"),
            ccc_a=d.get("ccc_a"),
            total_accuracy=d.get("total_accuracy"),
            f1_weighted=d.get("f1_weighted"),
            f1_macro=d.get("f1_macro"),
            per_class_f1=dict(d.get("per_class_f1", {})),
            n_frames=int(d.get("n_frames", 0)),
        )

    def to_text(self) -> str:
        def fmt(v):
            return "-" if v is None else f"{v:.3f}"

        headers = ["CCC-V", "CCC-A", "Total Accuracy", "F1 weighted", "F1 macro"]
        values = [
            fmt(self.ccc_v),
            fmt(self.ccc_a),
            fmt(self.total_accuracy),
            fmt(self.f1_weighted),
            fmt(self.f1_macro),
        ]
        widths = [max(len(h), len(v)) for h, v in zip(headers, values)]
        head = "  ".join(h.ljust(w) for h, w in zip(headers, widths))
        row = "  ".join(v.ljust(w) for v, w in zip(values, widths))
        return head + "\n" + row


def evaluate(
    predictions: dict,
    frames: Sequence[ConsolidatedFrame],
    task: str = "joint",
    au_threshold: float = 0.5,
    per_bit_accuracy: bool = False,
) -> MetricReport:
    """Score aligned per-frame predictions against consolidated labels.

    ``predictions`` holds any of: "va" (N,2), "aus" (N,8 probabilities),
    "expr" (N,7 probabilities or N integer labels). Arrays must align
    with frames one-to-one. ``task`` selects the scored heads: va, au,
    expr, or joint (VA plus whichever classification head is present).
    """
    frames = list(frames)
    n = len(frames)
    for key, arr in predictions.items():
        if np.asarray(arr).shape[0] != n:
            raise ValidationError(
                f"prediction {key!r} has {np.asarray(arr).shape[0]} rows "
                f"for {n} frames"
            )
    if task not in ("va", "au", "expr", "joint"):
        raise ValidationError(f"unknown task {task!r}")

    report = MetricReport(n_frames=n)

    want_va = task in ("va", "joint") and "va" in predictions
    want_au = task in ("au", "joint") and "aus" in predictions
    want_expr = task in ("expr", "joint") and "expr" in predictions
    if task == "joint" and want_au and want_expr:
        raise ValidationError("joint task is VA plus exactly one classifier head")

    if want_va:
        va_pred = np.asarray(predictions["va"], dtype=np.float64)
        va_true = np.array([[f.va.valence, f.va.arousal] for f in frames])
        report.ccc_v = ccc_metric(va_pred[:, 0], va_true[:, 0])
        report.ccc_a = ccc_metric(va_pred[:, 1], va_true[:, 1])

    if want_au:
        keep = [i for i, f in enumerate(frames) if f.aus is not None]
        if keep:
            probs = np.asarray(predictions["aus"])[keep]
            bits = au_probs_to_bits(probs, au_threshold)
            true = np.array([frames[i].aus.bits for i in keep], dtype=np.int64)
            report.total_accuracy = total_accuracy(bits, true, per_bit=per_bit_accuracy)
            f1 = f1_scores(bits, true, AU_CLASS_NAMES)
            report.f1_weighted = f1.weighted
            report.f1_macro = f1.macro
            report.per_class_f1 = f1.per_class

    if want_expr:
        keep = [i for i, f in enumerate(frames) if f.expression is not None]
        if keep:
            raw = np.asarray(predictions["expr"])
            labels = raw.argmax(axis=1) if raw.ndim == 2 else raw.astype(np.int64)
            labels = labels[keep]
            true = np.array(
                [_EXPR_INDEX[frames[i].expression] for i in keep], dtype=np.int64
            )
            report.total_accuracy = total_accuracy(labels, true)
            f1 = f1_scores(labels, true, EXPRESSION_NAMES)
            report.f1_weighted = f1.weighted
            report.f1_macro = f1.macro
            report.per_class_f1 = f1.per_class

    return report


def median_report(reports: Iterable[MetricReport]) -> MetricReport:
    """Fieldwise median across per-seed reports (None stays None)."""
    reports = list(reports)
    if not reports:
        raise UndefinedMetricError("no reports to aggregate")

    def med(values):
        vals = [v for v in values if v is not None]
        return float(np.median(vals)) if vals else None

    per_class: Dict[str, float] = {}
    keys = set()
    for r in reports:
        keys.update(r.per_class_f1)
    for k in sorted(keys):
        vals = [r.per_class_f1[k] for r in reports if k in r.per_class_f1]
        per_class[k] = float(np.median(vals))

    return MetricReport(
        ccc_v=med(r.ccc_v for r in reports),
        ccc_a=med(r.ccc_a for r in reports),
        total_accuracy=med(r.total_accuracy for r in reports),
        f1_weighted=med(r.f1_weighted for r in reports),
        f1_macro=med(r.f1_macro for r in reports),
        per_class_f1=per_class,
        n_frames=reports[0].n_frames,
    )
