"""Confusion-matrix accounting and the averaged positive/negative F1 score."""

import numpy as np

CLASS_NAMES = ("negative", "neutral", "positive")
NEGATIVE, NEUTRAL, POSITIVE = 0, 1, 2


class ConfusionMatrix:
    """3x3 counts; rows are gold classes, columns predicted classes."""

    def __init__(self, counts=None):
        if counts is None:
            self.counts = np.zeros((3, 3), dtype=np.int64)
        else:
            self.counts = np.asarray(counts, dtype=np.int64).copy()
            if self.counts.shape != (3, 3) or np.any(self.counts < 0):
                raise ValueError("counts must be a non-negative 3x3 matrix")

    def add(self, gold, predicted):
        if not (0 <= gold < 3 and 0 <= predicted < 3):
            raise ValueError("class out of range")
        self.counts[gold, predicted] += 1

    def merge(self, other):
        self.counts += other.counts

    def total(self):
        return int(self.counts.sum())


def accumulate(pairs):
    cm = ConfusionMatrix()
    for gold, predicted in pairs:
        cm.add(gold, predicted)
    return cm


def precision_recall_f1(cm, cls):
    """(P, R, F1) for one class; 0/0 counts as 0."""
    counts = cm.counts
    tp = counts[cls, cls]
    col = counts[:, cls].sum()
    row = counts[cls, :].sum()
    p = tp / col if col > 0 else 0.0
    r = tp / row if row > 0 else 0.0
    f1 = 2 * p * r / (p + r) if (p + r) > 0 else 0.0
    return float(p), float(r), float(f1)


def f1_pn(cm):
    """Mean of the positive-class and negative-class F1.

    Neutral predictions influence the score only through the positive and
    negative precision denominators."""
    _, _, f1_neg = precision_recall_f1(cm, NEGATIVE)
    _, _, f1_pos = precision_recall_f1(cm, POSITIVE)
    return (f1_neg + f1_pos) / 2.0


def report(cm):
    """Human-readable evaluation report ending with the score line."""
    lines = []
    for cls, name in enumerate(CLASS_NAMES):
        p, r, f1 = precision_recall_f1(cm, cls)
        lines.append(f"{name}\tP={p:.4f}\tR={r:.4f}\tF1={f1:.4f}")
    lines.append("confusion matrix (rows=gold, cols=predicted):")
    for row in cm.counts:
        lines.append("\t".join(str(int(x)) for x in row))
    lines.append(f"f1_pn={f1_pn(cm):.4f}")
    return "\n".join(lines) + "\n"
