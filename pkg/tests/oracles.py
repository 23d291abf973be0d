"""Brute-force reference implementations shared by the test modules."""

import numpy as np


def pairwise_auc(scores, labels):
    """Fraction of (positive, negative) pairs ranked correctly, ties counting one half."""
    s = np.asarray(scores, dtype=float)
    pos = np.asarray(labels) > 0
    wins = 0.0
    for p in s[pos]:
        for q in s[~pos]:
            wins += 1.0 if p > q else 0.5 if p == q else 0.0
    return wins / (pos.sum() * (~pos).sum())


def sweep_average_precision(scores, labels):
    """Average precision by sweeping every distinct score as a ``>=`` threshold."""
    s = np.asarray(scores, dtype=float)
    pos = np.asarray(labels) > 0
    total = pos.sum()
    ap, prev_recall = 0.0, 0.0
    for t in sorted(set(s.tolist()), reverse=True):
        pred = s >= t
        tp = np.count_nonzero(pred & pos)
        precision = tp / np.count_nonzero(pred)
        recall = tp / total
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap


def counted_f1(scores, labels, threshold):
    tp = fp = fn = 0
    for s, y in zip(scores, labels):
        if s > threshold and y > 0:
            tp += 1
        elif s > threshold:
            fp += 1
        elif y > 0:
            fn += 1
    return 2 * tp / (2 * tp + fp + fn) if tp else 0.0


def exhaustive_best_f1(scores, labels):
    """Best F1 over every midpoint and both infinities; higher threshold wins ties."""
    u = np.unique(scores)
    candidates = [np.inf, *((u[:-1] + u[1:]) / 2)[::-1], -np.inf]
    best_t, best_f = None, -1.0
    for t in candidates:
        f = counted_f1(scores, labels, t)
        if f > best_f:
            best_t, best_f = t, f
    return best_t, best_f
