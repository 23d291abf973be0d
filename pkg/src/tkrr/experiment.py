"""Patient-independent training, fine-tuning curves and the warm-vs-random comparison.

A PI model is trained on every patient except the target. For each of the
target's seizures, a leave-one-seizure-in fold supplies a small training set
(that seizure plus nearby background) and a held-out test set. Starting from
the PI factors (PF) or from random factors (PS), ALS runs one factor update
at a time and the held-out AUROC/AUPRC is recorded after each update.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .basis import FeatureMapConfig
from .dataset import LabeledDataset
from .evaluation import (LEAVE_ONE_SEIZURE_IN, Fold, best_f1_threshold, make_cv_plan,
                         pr_auc, roc_auc)
from .signal.scaling import apply_scaler, fit_scaler
from .solver import TkrrModel, TrainConfig, als_path, fit, init_factors, predict_scores

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Hyperparameters:
    rank: int = 30
    basis: int = 20
    lengthscale: float = 0.6
    ridge: float = 1e-4
    half_width: float = 1.25
    sweeps: int = 1
    seed: int = 0

    def feature_map(self, dims: int) -> FeatureMapConfig:
        return FeatureMapConfig.uniform(dims, self.basis, self.half_width, self.lengthscale)


def train_model(data: LabeledDataset, hp: Hyperparameters) -> TkrrModel:
    """Fit the scaler and the model on raw feature rows; threshold maximizes training F1."""
    scaler = fit_scaler(data.features)
    scaled, _ = apply_scaler(scaler, data.features)
    cfg = TrainConfig(rank=hp.rank, ridge=hp.ridge, sweeps=hp.sweeps, seed=hp.seed)
    model = fit(data.with_features(scaled), cfg, hp.feature_map(data.dims), scaler=scaler)
    return with_f1_threshold(model, data)


def with_f1_threshold(model: TkrrModel, data: LabeledDataset) -> TkrrModel:
    if len(set(data.labels.tolist())) < 2:
        return model
    thr, _ = best_f1_threshold(predict_scores(model, data.features), data.labels)
    finite = float(np.clip(thr, -np.finfo(float).max, np.finfo(float).max))
    return replace(model, threshold=finite)


@dataclass(frozen=True)
class CurvePoint:
    update: int
    dim: int
    objective: float
    auroc: float
    auprc: float


def _metrics(model: TkrrModel, scaled_X: np.ndarray, test: LabeledDataset) -> tuple[float, float]:
    scores = predict_scores(model, scaled_X)
    if len(set(test.labels.tolist())) < 2:
        return float("nan"), float("nan")
    return roc_auc(scores, test.labels), pr_auc(scores, test.labels)


def run_curve(source: TkrrModel, train: LabeledDataset, test: LabeledDataset,
              max_updates: int, warm: bool = True, seed: int = 0,
              update_dims: Sequence[int] | None = None) -> tuple[TkrrModel, list[CurvePoint]]:
    """Train on ``train`` one factor update at a time, scoring ``test`` after each.

    ``warm`` starts from ``source``'s factors (fine-tuning); otherwise from
    seeded standard-normal factors of the same shape. The source's feature
    map, ridge and scaler are reused either way. Row 0 of the curve is the
    starting point. Returns the final model (threshold unchanged) and the curve.
    """
    scaled_train = train.with_features(apply_scaler(source.scaler, train.features)[0]) \
        if source.scaler is not None else train
    scaled_test = apply_scaler(source.scaler, test.features)[0] \
        if source.scaler is not None else test.features
    n_dims = len(set(update_dims)) if update_dims is not None else source.dims
    cfg = TrainConfig(rank=source.rank, ridge=source.ridge,
                      sweeps=-(-max_updates // n_dims) if max_updates else 0,
                      seed=seed, warm_start=source.weights if warm else None,
                      update_dims=None if update_dims is None else tuple(update_dims),
                      max_updates=max_updates)
    weights = source.weights if warm else _random_like(cfg, source.feature_map)
    probe = TkrrModel(source.feature_map, weights, source.ridge)
    points = [CurvePoint(0, -1, float("nan"), *_metrics(probe, scaled_test, test))]
    history, singular = [], 0
    for step in als_path(scaled_train, cfg, source.feature_map):
        weights = step.weights
        history.append(step.objective)
        singular += step.singular
        probe = TkrrModel(source.feature_map, weights, source.ridge)
        points.append(CurvePoint(step.update, step.dim, step.objective,
                                 *_metrics(probe, scaled_test, test)))
    final = replace(source, weights=weights, history=history, singular_updates=singular)
    return final, points


def training_curve(source: TkrrModel, train: LabeledDataset, test: LabeledDataset,
                   max_updates: int, warm: bool = True, seed: int = 0,
                   update_dims: Sequence[int] | None = None) -> list[CurvePoint]:
    """Held-out metrics after each factor update; see :func:`run_curve`."""
    return run_curve(source, train, test, max_updates, warm, seed, update_dims)[1]


def _random_like(cfg: TrainConfig, fmap: FeatureMapConfig):
    return init_factors(replace(cfg, warm_start=None), fmap)


@dataclass
class PatientResult:
    patient: object
    folds: list[Fold]
    pi_auroc: float
    pf: np.ndarray  # (folds, updates + 1, 2) auroc/auprc
    ps: np.ndarray

    @property
    def pf_auroc(self) -> np.ndarray:
        return self.pf[:, :, 0].mean(axis=0)

    @property
    def ps_auroc(self) -> np.ndarray:
        return self.ps[:, :, 0].mean(axis=0)

    @property
    def pf_auprc(self) -> np.ndarray:
        return self.pf[:, :, 1].mean(axis=0)

    @property
    def ps_auprc(self) -> np.ndarray:
        return self.ps[:, :, 1].mean(axis=0)


@dataclass
class TransferResult:
    dims: int
    patients: list[PatientResult] = field(default_factory=list)

    def mean_curve(self, which: str) -> np.ndarray:
        return np.mean([getattr(p, which) for p in self.patients], axis=0)

    def improved_patients(self) -> int:
        """Patients whose fold-mean AUROC after one PF update beats the PI model's."""
        return sum(int(p.pf_auroc[1] > p.pf_auroc[0]) for p in self.patients)

    def ps_updates_to_reach_pf(self, pf_update: int = 1) -> int | None:
        """First update count at which the patient-mean PS AUROC reaches PF's after ``pf_update``."""
        target = self.mean_curve("pf_auroc")[pf_update]
        ps = self.mean_curve("ps_auroc")
        hits = np.flatnonzero(ps[1:] >= target)
        return int(hits[0]) + 1 if hits.size else None


def run_transfer_experiment(data: LabeledDataset, hp: Hyperparameters,
                            pf_updates: int = 1, ps_updates: int | None = None,
                            patients: Sequence | None = None,
                            max_folds: int | None = None) -> TransferResult:
    """PI -> PF/PS curves for each patient, averaged over its leave-one-seizure-in folds."""
    dims = data.dims
    ps_updates = 2 * dims if ps_updates is None else ps_updates
    result = TransferResult(dims)
    groups = sorted(set(data.group_ids.tolist()), key=str) if patients is None else patients
    for g in groups:
        target = data.group_ids == g
        pi = train_model(data.subset(np.flatnonzero(~target)), hp)
        plan = make_cv_plan(data, LEAVE_ONE_SEIZURE_IN, groups=[g])
        folds = list(plan.folds)[:max_folds]
        pf_rows, ps_rows = [], []
        for fold in folds:
            train, test = data.subset(fold.train), data.subset(fold.test)
            pf = training_curve(pi, train, test, pf_updates, warm=True)
            ps = training_curve(pi, train, test, ps_updates, warm=False, seed=hp.seed)
            pf_rows.append([(p.auroc, p.auprc) for p in pf])
            ps_rows.append([(p.auroc, p.auprc) for p in ps])
        whole = data.subset(np.flatnonzero(target & ~data.overlap_flags))
        pi_auroc = roc_auc(predict_scores(pi, whole.features), whole.labels)
        res = PatientResult(g, folds, pi_auroc, np.array(pf_rows), np.array(ps_rows))
        log.info("patient %s: PI %.3f, PF(0) %.3f, PF(1) %.3f", g, pi_auroc,
                 res.pf_auroc[0], res.pf_auroc[1])
        result.patients.append(res)
    return result
