"""Classification metrics, F1-optimal thresholds and cross-validation plans.

Labels may be given as ±1 or 0/1; anything > 0 counts as positive.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .basis import FeatureMapConfig
from .dataset import LabeledDataset
from .exceptions import ModelFormatError
from .solver import TrainConfig, fit, predict_scores

log = logging.getLogger(__name__)

LEAVE_ONE_GROUP_OUT = "leave_one_group_out"
LEAVE_ONE_SEIZURE_IN = "leave_one_seizure_in"
K_FOLD = "k_fold"


def _prepare(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=float).ravel()
    pos = np.asarray(labels).ravel() > 0
    if s.shape != pos.shape:
        raise ValueError("scores and labels differ in length")
    return s, pos


def _ranked_counts(s: np.ndarray, pos: np.ndarray):
    """Cumulative (tp, fp) after each group of tied scores, scanning from the top."""
    order = np.argsort(-s, kind="mergesort")
    s_sorted = s[order]
    ends = np.r_[np.nonzero(np.diff(s_sorted))[0], s.size - 1]
    tps = np.cumsum(pos[order])[ends].astype(float)
    fps = (ends + 1) - tps
    return s_sorted[ends], tps, fps


def roc_auc(scores, labels) -> float:
    """Trapezoidal ROC area; tied scores contribute half, as in the Mann-Whitney statistic."""
    s, pos = _prepare(scores, labels)
    n_pos = pos.sum()
    n_neg = pos.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("roc_auc needs both classes")
    _, tps, fps = _ranked_counts(s, pos)
    tpr = np.r_[0.0, tps / n_pos]
    fpr = np.r_[0.0, fps / n_neg]
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))


def pr_auc(scores, labels) -> float:
    """Average precision: sum of precision weighted by recall increments over descending thresholds."""
    s, pos = _prepare(scores, labels)
    n_pos = pos.sum()
    if n_pos == 0:
        raise ValueError("pr_auc needs at least one positive")
    _, tps, fps = _ranked_counts(s, pos)
    precision = tps / (tps + fps)
    recall = np.r_[0.0, tps / n_pos]
    return float(np.sum(np.diff(recall) * precision))


def _f1(tp, fp, fn):
    denom = 2 * tp + fp + fn
    return np.where(denom > 0, 2 * tp / np.where(denom > 0, denom, 1), 0.0)


def best_f1_threshold(scores, labels) -> tuple[float, float]:
    """Threshold maximizing F1 for the rule ``score > threshold``.

    Candidates are midpoints between consecutive distinct scores plus ±inf.
    Among equal F1 values the highest threshold wins.
    """
    s, pos = _prepare(scores, labels)
    n_pos = pos.sum()
    if n_pos == 0 or n_pos == pos.size:
        raise ValueError("best_f1_threshold needs both classes")
    values, tps, fps = _ranked_counts(s, pos)
    # candidate k keeps the top k tie groups positive, k = 0..G
    tp = np.r_[0.0, tps]
    fp = np.r_[0.0, fps]
    f1 = _f1(tp, fp, n_pos - tp)
    mids = (values[:-1] + values[1:]) / 2.0
    thresholds = np.r_[np.inf, mids, -np.inf]
    k = int(np.argmax(f1))
    return float(thresholds[k]), float(f1[k])


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion_metrics(scores, labels, threshold: float) -> tuple[float, float, float, Confusion]:
    """F1, sensitivity and precision at ``threshold``; undefined ratios are 0."""
    s, pos = _prepare(scores, labels)
    pred = s > threshold
    tp = int(np.count_nonzero(pred & pos))
    fp = int(np.count_nonzero(pred & ~pos))
    fn = int(np.count_nonzero(~pred & pos))
    tn = int(np.count_nonzero(~pred & ~pos))
    sens = tp / (tp + fn) if tp + fn else 0.0
    prec = tp / (tp + fp) if tp + fp else 0.0
    f1 = float(_f1(tp, fp, fn))
    return f1, sens, prec, Confusion(tp, fp, tn, fn)


@dataclass
class EvaluationReport:
    auroc: float
    auprc: float
    f1: float
    sensitivity: float
    precision: float
    threshold: float
    confusion: Confusion
    per_fold: list["EvaluationReport"] = field(default_factory=list)

    METRICS = ("auroc", "auprc", "f1", "sensitivity", "precision")

    @property
    def n_samples(self) -> int:
        return self.confusion.total


def evaluate_scores(scores, labels, threshold: float) -> EvaluationReport:
    """All metrics at a fixed threshold; ranking metrics are NaN when undefined."""
    s, pos = _prepare(scores, labels)
    both = 0 < pos.sum() < pos.size
    auroc = roc_auc(s, pos) if both else math.nan
    auprc = pr_auc(s, pos) if pos.any() else math.nan
    f1, sens, prec, conf = confusion_metrics(s, pos, threshold)
    return EvaluationReport(auroc, auprc, f1, sens, prec, float(threshold), conf)


def aggregate_reports(folds: Sequence[EvaluationReport]) -> EvaluationReport:
    """Fold-mean of each metric (NaN folds ignored) with pooled confusion counts."""
    def mean(name):
        vals = [getattr(f, name) for f in folds if not math.isnan(getattr(f, name))]
        return float(np.mean(vals)) if vals else math.nan

    conf = Confusion(*(sum(getattr(f.confusion, k) for f in folds)
                       for k in ("tp", "fp", "tn", "fn")))
    return EvaluationReport(mean("auroc"), mean("auprc"), mean("f1"), mean("sensitivity"),
                            mean("precision"), mean("threshold"), conf, list(folds))


def _fmt(x: float) -> str:
    return "undefined" if isinstance(x, float) and math.isnan(x) else format(float(x), ".17g")


def write_report(report: EvaluationReport, path: str | Path) -> None:
    """Flat ``key = value`` summary plus ``<path>.folds.csv`` with one row per fold."""
    path = Path(path)
    lines = [f"{name} = {_fmt(getattr(report, name))}" for name in EvaluationReport.METRICS]
    lines += [f"threshold = {_fmt(report.threshold)}",
              f"tp = {report.confusion.tp}", f"fp = {report.confusion.fp}",
              f"tn = {report.confusion.tn}", f"fn = {report.confusion.fn}",
              f"n_samples = {report.n_samples}", f"n_folds = {len(report.per_fold)}"]
    path.write_text("\n".join(lines) + "\n")
    folds = report.per_fold or [report]
    with open(path.with_name(path.name + ".folds.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["fold", *EvaluationReport.METRICS, "threshold", "tp", "fp", "tn", "fn"])
        for i, f in enumerate(folds):
            c = f.confusion
            w.writerow([i, *(_fmt(getattr(f, m)) for m in EvaluationReport.METRICS),
                        _fmt(f.threshold), c.tp, c.fp, c.tn, c.fn])


def read_report(path: str | Path) -> dict[str, float]:
    out = {}
    for line in Path(path).read_text().splitlines():
        key, sep, value = line.partition("=")
        if not sep:
            raise ModelFormatError(f"{path}: malformed line {line!r}")
        value = value.strip()
        out[key.strip()] = math.nan if value == "undefined" else float(value)
    return out


# -- cross-validation ---------------------------------------------------------

@dataclass(frozen=True)
class Fold:
    train: np.ndarray
    test: np.ndarray
    group: object = None
    seizure: int | None = None


@dataclass(frozen=True)
class CvPlan:
    scheme: str
    folds: tuple[Fold, ...]


def _group_rows(data: LabeledDataset, group) -> np.ndarray:
    return np.flatnonzero(data.group_ids == group)


def _unique_groups(data: LabeledDataset) -> list:
    return sorted(set(data.group_ids.tolist()), key=str)


def _nearest_background(data: LabeledDataset, rows: np.ndarray, seizure_rows: np.ndarray,
                        count: int) -> np.ndarray:
    bg = rows[data.labels[rows] < 0]
    lo, hi = seizure_rows.min(), seizure_rows.max()
    dist = np.maximum(lo - bg, 0) + np.maximum(bg - hi, 0)
    order = np.lexsort((bg, dist))
    return np.sort(bg[order[:count]])


def leave_one_seizure_in_fold(data: LabeledDataset, group, seizure: int) -> Fold:
    """Train on one seizure's windows plus as many temporally nearest background windows.

    The test set is the rest of that group's rows with overlap-flagged windows removed.
    """
    rows = _group_rows(data, group)
    seizure_rows = rows[(data.seizure_ids[rows] == seizure) & (data.labels[rows] > 0)]
    if seizure_rows.size == 0:
        raise ValueError(f"seizure {seizure} not found for group {group!r}")
    background = _nearest_background(data, rows, seizure_rows, seizure_rows.size)
    train = np.union1d(seizure_rows, background)
    rest = np.setdiff1d(rows, train)
    test = rest[~data.overlap_flags[rest]]
    return Fold(train, test, group, int(seizure))


def make_cv_plan(data: LabeledDataset, scheme: str, k: int = 5, seed: int = 0,
                 groups: Sequence | None = None) -> CvPlan:
    """Build folds for one of the supported schemes.

    ``leave_one_group_out`` holds out each group in turn; ``leave_one_seizure_in``
    yields one fold per seizure of each group in ``groups`` (default: all);
    ``k_fold`` shuffles rows with ``seed`` into ``k`` folds. The first two drop
    overlap-flagged rows from every test set.
    """
    n = len(data)
    if scheme == LEAVE_ONE_GROUP_OUT:
        all_groups = _unique_groups(data)
        if len(all_groups) < 2:
            raise ValueError("leave-one-group-out needs at least two groups")
        folds = []
        for g in all_groups if groups is None else groups:
            test = _group_rows(data, g)
            if test.size == 0:
                raise ValueError(f"unknown group {g!r}")
            train = np.setdiff1d(np.arange(n), test)
            folds.append(Fold(train, test[~data.overlap_flags[test]], g))
        return CvPlan(scheme, tuple(folds))
    if scheme == LEAVE_ONE_SEIZURE_IN:
        folds = []
        for g in _unique_groups(data) if groups is None else groups:
            rows = _group_rows(data, g)
            ids = sorted(set(data.seizure_ids[rows][data.labels[rows] > 0].tolist()) - {0})
            if len(ids) < 2:
                raise ValueError(f"group {g!r} has {len(ids)} seizures; need at least 2")
            folds.extend(leave_one_seizure_in_fold(data, g, s) for s in ids)
        return CvPlan(scheme, tuple(folds))
    if scheme == K_FOLD:
        if not 2 <= k <= n:
            raise ValueError(f"k={k} invalid for {n} rows")
        perm = np.random.default_rng(seed).permutation(n)
        folds = []
        for part in np.array_split(perm, k):
            test = np.sort(part)
            folds.append(Fold(np.setdiff1d(np.arange(n), test), test))
        return CvPlan(scheme, tuple(folds))
    raise ValueError(f"unknown scheme {scheme!r}")


@dataclass
class GridSearchResult:
    ridge: float
    lengthscale: float
    mean_auroc: float
    table: dict[tuple[float, float], float]
    skipped_folds: list[int]


def grid_search(data: LabeledDataset, ridges: Sequence[float], lengthscales: Sequence[float],
                rank: int, fmap: FeatureMapConfig, sweeps: int = 1, k: int = 5,
                seed: int = 0) -> GridSearchResult:
    """Pick (ridge, lengthscale) maximizing mean k-fold AUROC on rows already in the hyperbox.

    Folds whose train or test part holds a single class are skipped. Ties go
    to the larger ridge, then the larger lengthscale.
    """
    if not ridges or not lengthscales:
        raise ValueError("empty hyperparameter grid")
    plan = make_cv_plan(data, K_FOLD, k=k, seed=seed)
    usable, skipped = [], []
    for i, fold in enumerate(plan.folds):
        y_tr, y_te = data.labels[fold.train], data.labels[fold.test]
        if len(set(y_tr.tolist())) < 2 or len(set(y_te.tolist())) < 2:
            skipped.append(i)
            log.warning("grid search: fold %d has a single class, skipped", i)
        else:
            usable.append(fold)
    if not usable:
        raise ValueError("every fold has a single class")
    table = {}
    best = None
    for lam in sorted(ridges):
        for ell in sorted(lengthscales):
            fm = fmap.with_lengthscale(ell)
            cfg = TrainConfig(rank=rank, ridge=lam, sweeps=sweeps, seed=seed)
            aucs = []
            for fold in usable:
                model = fit(data.subset(fold.train), cfg, fm)
                aucs.append(roc_auc(predict_scores(model, data.features[fold.test]),
                                    data.labels[fold.test]))
            score = float(np.mean(aucs))
            table[(lam, ell)] = score
            if best is None or score >= best[0]:
                best = (score, lam, ell)
    return GridSearchResult(best[1], best[2], best[0], table, skipped)
