"""Evaluation reports, expert-effort accounting and domain-generalization protocols."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .data import LabeledDataset, concat
from .errors import ConfigError, DataError

PredictFn = Callable[[np.ndarray], Sequence[str]]
TrainFn = Callable[[LabeledDataset], PredictFn]


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class EvalReport:
    accuracy: float
    per_class: dict
    macro_f1: float
    confusion: np.ndarray
    labels: list
    effort: int | None = None

    def sensitivity(self, cls: str) -> float:
        return self.per_class[cls].recall

    def f1_over(self, classes: Sequence[str]) -> float:
        return float(np.mean([self.per_class[c].f1 for c in classes]))

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "per_class": {c: {"precision": m.precision, "recall": m.recall, "f1": m.f1, "support": m.support}
                          for c, m in self.per_class.items()},
            "labels": list(self.labels),
            "confusion": self.confusion.tolist(),
            "effort": self.effort,
        }


def report_from_pairs(y_true: Sequence[str], y_pred: Sequence[str], class_set: Sequence[str],
                      flag_class: str | None = None) -> EvalReport:
    """Confusion matrix and derived metrics.

    Rows are true labels, columns predictions.  Predicted labels outside
    ``class_set`` (e.g. a one-vs-rest ``not-c``) get extra columns and rows
    and always count as errors.
    """
    y_true = [str(v) for v in y_true]
    y_pred = [str(v) for v in y_pred]
    if len(y_true) != len(y_pred):
        raise DataError("label and prediction counts differ")
    if not y_true:
        raise DataError("cannot evaluate on an empty dataset")
    labels = list(class_set)
    for v in y_true + y_pred:
        if v not in labels:
            labels.append(v)
    index = {c: i for i, c in enumerate(labels)}
    confusion = np.zeros((len(labels), len(labels)), dtype=int)
    for t, p in zip(y_true, y_pred):
        confusion[index[t], index[p]] += 1
    total = confusion.sum()
    per_class = {}
    for c in class_set:
        i = index[c]
        tp = confusion[i, i]
        support = int(confusion[i].sum())
        predicted = confusion[:, i].sum()
        precision = tp / predicted if predicted else 0.0
        recall = tp / support if support else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        per_class[c] = ClassMetrics(float(precision), float(recall), float(f1), support)
    effort = sum(1 for p in y_pred if p == flag_class) if flag_class is not None else None
    return EvalReport(
        accuracy=float(np.trace(confusion) / total),
        per_class=per_class,
        macro_f1=float(np.mean([m.f1 for m in per_class.values()])),
        confusion=confusion,
        labels=labels,
        effort=effort,
    )


def evaluate(predict_fn: PredictFn, data: LabeledDataset, flag_class: str | None = None) -> EvalReport:
    """Score ``predict_fn`` on the real (non-synthetic) rows of ``data``.

    Synthetic SMOTE rows are a training device only; passing them here is a
    data error rather than something silently dropped.
    """
    if len(data) == 0:
        raise DataError("cannot evaluate on an empty dataset")
    if np.any(data.synthetic):
        raise DataError("evaluation data contains synthetic instances")
    preds = list(predict_fn(data.X))
    return report_from_pairs(data.y, preds, data.class_set, flag_class)


def expert_effort(traces, flag_class: str) -> int:
    """Number of predictions a clinician would still have to review."""
    return sum(1 for t in traces if t.final_label == flag_class)


@dataclass
class SdgResult:
    source: str
    reports: dict
    average: float


def sdg_protocol(domain_datasets: Mapping[str, LabeledDataset], source: str, train_fn: TrainFn) -> SdgResult:
    """Train on ``source`` only and evaluate on every other domain."""
    if source not in domain_datasets:
        raise ConfigError(f"unknown source domain {source!r}")
    targets = [d for d in domain_datasets if d != source]
    if not targets:
        raise ConfigError("single-domain generalization needs at least one target domain")
    predict_fn = train_fn(domain_datasets[source])
    reports = {d: evaluate(predict_fn, domain_datasets[d]) for d in targets}
    return SdgResult(source, reports, float(np.mean([r.accuracy for r in reports.values()])))


def mdg_protocol(domain_datasets: Mapping[str, LabeledDataset], held_out: str, train_fn: TrainFn) -> EvalReport:
    """Train on the union of all domains except ``held_out`` and evaluate there."""
    if len(domain_datasets) < 2:
        raise ConfigError("multi-domain generalization needs at least two domains")
    if held_out not in domain_datasets:
        raise ConfigError(f"unknown held-out domain {held_out!r}")
    train = concat([ds for d, ds in domain_datasets.items() if d != held_out])
    return evaluate(train_fn(train), domain_datasets[held_out])


def mdg_leave_one_out(domain_datasets: Mapping[str, LabeledDataset], train_fn: TrainFn):
    """One MDG report per domain plus the unweighted mean accuracy."""
    reports = {d: mdg_protocol(domain_datasets, d, train_fn) for d in domain_datasets}
    return reports, float(np.mean([r.accuracy for r in reports.values()]))
