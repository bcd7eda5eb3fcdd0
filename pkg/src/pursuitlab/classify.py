"""Linear SVM evaluation of baseline-vs-impaired runs, raw and baseline-normalized."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import DegenerateSplit, MissingBaseline, SingleClass, ZeroVarianceFeature

log = logging.getLogger(__name__)

SVM_FEATURES = ("mean_radius_deg", "skew_radial", "skew_phase", "kurt_phase", "blink_loss_pct")
MODES = ("raw", "normalized")
LABELS = {"baseline": 0, "impaired": 1}

DEFAULT_C = 1.0
DEFAULT_SPLITS = 200
TOL = 1e-6
MAX_EPOCHS = 1000
MAX_REDRAWS = 1000


@dataclass(frozen=True, eq=False)
class Observation:
    subject_id: str
    label: int
    features: np.ndarray

    def __post_init__(self) -> None:
        f = np.asarray(self.features, dtype=float)
        if f.shape != (len(SVM_FEATURES),) or not np.all(np.isfinite(f)):
            raise ValueError("an observation needs exactly 5 finite features")
        object.__setattr__(self, "features", f)


@dataclass
class SvmModel:
    weights: np.ndarray
    bias: float
    c_param: float
    feature_means: np.ndarray
    feature_sds: np.ndarray
    seed: int
    dual_coef: np.ndarray = field(default=None, repr=False)
    epochs: int = 0
    converged: bool = True
    final_violation: float = 0.0


@dataclass
class EvalReport:
    mode: str
    n_splits: int
    per_split: list[tuple[float, float]]
    median_auc: float
    best_auc: float
    median_accuracy: float

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "n_splits": self.n_splits,
            "median_auc": self.median_auc,
            "best_auc": self.best_auc,
            "median_accuracy": self.median_accuracy,
            "per_split": [{"accuracy": a, "auc": u} for a, u in self.per_split],
        }


# --------------------------------------------------------------------------
# dataset

def build_dataset(features: Iterable, mode: str) -> list[Observation]:
    """One observation per run from (subject_id, session, MetricVector) triples.

    ``normalized`` subtracts each subject's mean baseline row from all of that
    subject's rows.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    items = [(sid, LABELS[session], np.array([getattr(mv, k) for k in SVM_FEATURES]))
             for sid, session, mv in features]
    if mode == "normalized":
        base: dict[str, list] = {}
        for sid, label, row in items:
            base.setdefault(sid, [])
            if label == 0:
                base[sid].append(row)
        for sid, rows in base.items():
            if not rows:
                raise MissingBaseline(sid)
        offsets = {sid: np.mean(rows, axis=0) for sid, rows in base.items()}
        items = [(sid, label, row - offsets[sid]) for sid, label, row in items]
    return [Observation(sid, label, row) for sid, label, row in items]


def _matrix(observations: Sequence[Observation]) -> tuple[np.ndarray, np.ndarray]:
    X = np.array([o.features for o in observations], dtype=float).reshape(len(observations), len(SVM_FEATURES))
    y = np.array([o.label for o in observations], dtype=int)
    return X, y


def _side_counts(sizes: Sequence[int], fraction: float, rng: np.random.Generator) -> list[int]:
    """Per-label train counts that sum to round(fraction * total); leftovers go by seeded draw."""
    total = int(math.floor(fraction * sum(sizes) + 0.5))
    base = [int(math.floor(fraction * n)) for n in sizes]
    extra = total - sum(base)
    frac = np.array([fraction * n - b for n, b in zip(sizes, base)])
    # largest fractional part first, random among ties
    order = np.lexsort((rng.random(len(sizes)), -frac))
    for k in order[:extra]:
        base[k] += 1
    return base


def split(dataset: Sequence[Observation], fraction: float, seed) -> tuple[list[Observation], list[Observation]]:
    """Label-stratified random split; one subject may land on both sides."""
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    groups = []
    for label in (0, 1):
        idx = np.array([i for i, o in enumerate(dataset) if o.label == label], dtype=int)
        if idx.size == 0:
            raise DegenerateSplit(f"dataset has no label-{label} observations")
        groups.append(rng.permutation(idx))
    counts = _side_counts([g.size for g in groups], fraction, rng)
    train_idx, test_idx = [], []
    for label, (idx, k) in enumerate(zip(groups, counts)):
        if k == 0 or k == idx.size:
            raise DegenerateSplit(f"label {label} cannot populate both sides")
        train_idx.extend(idx[:k].tolist())
        test_idx.extend(idx[k:].tolist())
    train_idx.sort()
    test_idx.sort()
    return [dataset[i] for i in train_idx], [dataset[i] for i in test_idx]


def standardize_fit_apply(train: np.ndarray, test: np.ndarray):
    """Z-score both arrays with statistics from ``train`` (n - 1 SD)."""
    train = np.asarray(train, dtype=float)
    test = np.asarray(test, dtype=float)
    if train.shape[0] == 0:
        raise ValueError("empty training set")
    means = train.mean(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        sds = train.std(axis=0, ddof=1) if train.shape[0] > 1 else np.zeros(train.shape[1])
    for j, sd in enumerate(sds):
        if not sd > 0.0:
            raise ZeroVarianceFeature(j)
    return (train - means) / sds, (test - means) / sds, means, sds


# --------------------------------------------------------------------------
# linear SVM, dual coordinate descent

def _augment(X: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(np.hstack([X, np.ones((X.shape[0], 1))]))


def dual_objective(alpha: np.ndarray, Xa: np.ndarray, ys: np.ndarray) -> float:
    """Maximization form: sum(alpha) - 0.5 * ||sum alpha_i y_i x_i||^2."""
    v = (alpha * ys) @ Xa
    return float(alpha.sum() - 0.5 * v @ v)


def primal_objective(w: np.ndarray, b: float, X: np.ndarray, ys: np.ndarray, C: float) -> float:
    """0.5 * (||w||^2 + b^2) + C * sum hinge; the bias is regularized."""
    margins = ys * (X @ w + b)
    return float(0.5 * (w @ w + b * b) + C * np.maximum(0.0, 1.0 - margins).sum())


def fit_svm_arrays(X: np.ndarray, y01: np.ndarray, C: float = DEFAULT_C, seed=0,
                   tol: float = TOL, max_epochs: int = MAX_EPOCHS):
    """Solve the hinge-loss SVM on already-scaled features.

    Returns (w, b, alpha, epochs, converged, violation).  The bias rides
    along as a constant feature, so it is regularized like the weights.
    """
    if C <= 0:
        raise ValueError("C must be > 0")
    y01 = np.asarray(y01)
    if np.unique(y01).size < 2:
        raise SingleClass("training data contains a single class")
    Xa = _augment(np.asarray(X, dtype=float))
    ys = np.where(y01 == 1, 1.0, -1.0)
    n, p = Xa.shape
    alpha = np.zeros(n)
    w = np.zeros(p)
    qdiag = np.einsum("ij,ij->i", Xa, Xa)
    rng = np.random.default_rng(seed)
    viol = math.inf
    epoch = 0
    for epoch in range(1, max_epochs + 1):
        order = rng.permutation(n).astype(np.int64)
        viol = kernels.dcd_epoch(Xa, ys, alpha, w, qdiag, order, float(C))
        if viol < tol:
            break
    converged = viol < tol
    if not converged:
        log.debug("SVM did not converge in %d epochs (violation %.3g)", max_epochs, viol)
    return w[:-1].copy(), float(w[-1]), alpha, epoch, converged, float(viol)


def train_linear_svm(train: Sequence[Observation], c_param: float = DEFAULT_C, seed=0,
                     standardize: bool = True) -> SvmModel:
    X, y = _matrix(train)
    if np.unique(y).size < 2:
        raise SingleClass("training data contains a single class")
    if standardize:
        Xs, _, means, sds = standardize_fit_apply(X, X[:0])
    else:
        Xs, means, sds = X, np.zeros(X.shape[1]), np.ones(X.shape[1])
    w, b, alpha, epochs, ok, viol = fit_svm_arrays(Xs, y, c_param, seed)
    seed_val = seed if isinstance(seed, int) else 0
    return SvmModel(w, b, float(c_param), means, sds, seed_val, alpha, epochs, ok, viol)


def decision_values(model: SvmModel, observations) -> np.ndarray:
    """w . standardized(x) + b; accepts Observations or a raw feature array."""
    if isinstance(observations, np.ndarray):
        X = np.atleast_2d(observations)
    else:
        X, _ = _matrix(observations)
    return ((X - model.feature_means) / model.feature_sds) @ model.weights + model.bias


def predict(model: SvmModel, observations) -> np.ndarray:
    """Label 1 iff the decision value is strictly positive."""
    return (decision_values(model, observations) > 0.0).astype(int)


# --------------------------------------------------------------------------
# evaluation

def roc_auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Mann-Whitney AUC with midranks for ties."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    n_pos = int(np.count_nonzero(y == 1))
    n_neg = int(np.count_nonzero(y == 0))
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("AUC needs both labels")
    order = np.argsort(s, kind="mergesort")
    ranks = np.empty(s.size)
    sorted_s = s[order]
    i = 0
    while i < s.size:
        j = i
        while j + 1 < s.size and sorted_s[j + 1] == sorted_s[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    rank_sum = float(ranks[y == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def roc_curve(scores: Sequence[float], labels: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """(false positive rate, true positive rate) over descending thresholds."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    thresholds = np.unique(s)[::-1]
    n_pos = max(int(np.count_nonzero(y == 1)), 1)
    n_neg = max(int(np.count_nonzero(y == 0)), 1)
    fpr, tpr = [0.0], [0.0]
    for th in thresholds:
        hit = s >= th
        tpr.append(np.count_nonzero(hit & (y == 1)) / n_pos)
        fpr.append(np.count_nonzero(hit & (y == 0)) / n_neg)
    return np.array(fpr), np.array(tpr)


def _evaluate_split(dataset, c_param, split_seed, fit_seed):
    train, test = split(dataset, 0.5, split_seed)
    Xtr, ytr = _matrix(train)
    Xte, yte = _matrix(test)
    Xtr_s, Xte_s, means, sds = standardize_fit_apply(Xtr, Xte)
    w, b, *_ = fit_svm_arrays(Xtr_s, ytr, c_param, fit_seed)
    scores = Xte_s @ w + b
    accuracy = float(np.mean((scores > 0.0).astype(int) == yte))
    return accuracy, roc_auc(scores, yte), scores, yte


def split_seeds(seed: int, n_splits: int):
    """Yield (split_seed, fit_seed) pairs; spares beyond n_splits serve redraws."""
    for child in np.random.SeedSequence(seed).spawn(n_splits + MAX_REDRAWS):
        a, b = child.spawn(2)
        yield a, b


def evaluate_mode(features: Sequence, mode: str, n_splits: int = DEFAULT_SPLITS,
                  c_param: float = DEFAULT_C, seed: int = 0, keep_scores: bool = False):
    dataset = build_dataset(features, mode)
    per_split = []
    kept = []
    seeds = split_seeds(seed, n_splits)
    while len(per_split) < n_splits:
        try:
            split_seed, fit_seed = next(seeds)
        except StopIteration:
            raise DegenerateSplit(f"could not draw {n_splits} valid splits") from None
        try:
            acc, auc, scores, yte = _evaluate_split(dataset, c_param, split_seed, fit_seed)
        except (DegenerateSplit, ZeroVarianceFeature) as exc:
            log.info("redrawing split %d (%s)", len(per_split), exc)
            continue
        per_split.append((acc, auc))
        if keep_scores:
            kept.append((scores, yte))
    aucs = np.array([u for _, u in per_split])
    accs = np.array([a for a, _ in per_split])
    report = EvalReport(mode, n_splits, per_split, float(np.median(aucs)), float(aucs.max()),
                        float(np.median(accs)))
    return (report, kept) if keep_scores else report


def evaluate_modes(features: Sequence, n_splits: int = DEFAULT_SPLITS, c_param: float = DEFAULT_C,
                   seed: int = 0) -> dict[str, EvalReport]:
    features = list(features)
    return {mode: evaluate_mode(features, mode, n_splits, c_param, seed) for mode in MODES}
