"""NBSVM: logistic regression heads on naive-Bayes-scaled features.

Each class (multi-class) or label (multi-label) gets a one-vs-rest binary
head with its own log-count ratio.  Heads minimize the mean log-loss plus
``||w||^2 / (2C)`` (``l2``) or ``||w||_1 / C`` (``l1``); the bias is not
penalized.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.special import expit, log_expit

from thaiseq.errors import ConfigError, FitError, ShapeError
from thaiseq.features import NbRatio, nb_ratio, scale_by_ratio
from thaiseq.optim import minimize_owlqn

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
THRESHOLD_GRID = np.round(np.arange(1, 100) / 100.0, 2)


@dataclass(frozen=True)
class ClassifierConfig:
    penalty: str = "l2"
    C: float = 1.0
    max_iter: int = 1000
    tol: float = 1e-6

    def __post_init__(self):
        if self.penalty not in ("l1", "l2"):
            raise ConfigError(f"penalty must be 'l1' or 'l2', got {self.penalty!r}")
        if not self.C > 0:
            raise ConfigError("C must be positive")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")


@dataclass
class LinearModel:
    classes: list[str]
    weights: np.ndarray  # (n_heads, n_features)
    bias: np.ndarray  # (n_heads,)
    multilabel: bool = False
    nb_ratios: list[NbRatio] = field(default_factory=list)
    converged: list[bool] = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return self.weights.shape[1]

    def to_dict(self) -> dict:
        return {
            "version": FORMAT_VERSION,
            "classes": list(self.classes),
            "multilabel": self.multilabel,
            "weights": self.weights.tolist(),
            "bias": self.bias.tolist(),
            "nb_ratios": [{"alpha": nb.alpha, "r": nb.r.tolist()} for nb in self.nb_ratios],
            "converged": list(self.converged),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LinearModel":
        if d.get("version") != FORMAT_VERSION:
            raise ConfigError(f"unsupported linear model version {d.get('version')!r}")
        return cls(
            classes=list(d["classes"]),
            weights=np.asarray(d["weights"], dtype=float),
            bias=np.asarray(d["bias"], dtype=float),
            multilabel=bool(d["multilabel"]),
            nb_ratios=[NbRatio(np.asarray(nb["r"], dtype=float), float(nb["alpha"])) for nb in d["nb_ratios"]],
            converged=list(d.get("converged", [])),
        )


def logistic_objective(X, y: np.ndarray, penalty: str, C: float):
    """Return ``(smooth_fn, l1_weight)`` for one binary head over ``[w, b]``."""
    X = sp.csr_matrix(X)
    n = X.shape[0]
    sign = 2.0 * y - 1.0
    l2 = 1.0 / C if penalty == "l2" else 0.0

    def fn(theta):
        w, b = theta[:-1], theta[-1]
        z = X @ w + b
        m = sign * z
        loss = -float(np.sum(log_expit(m))) / n
        # d/dz of -log sigmoid(sign*z) = -sign * sigmoid(-sign*z)
        dz = -sign * expit(-m) / n
        grad = np.empty_like(theta)
        grad[:-1] = X.T @ dz
        grad[-1] = dz.sum()
        if l2:
            loss += 0.5 * l2 * float(np.dot(w, w))
            grad[:-1] += l2 * w
        return loss, grad

    return fn, (1.0 / C if penalty == "l1" else 0.0)


def fit_binary(X, y, cfg: ClassifierConfig):
    """Train one head; returns ``(w, b, OptimResult)``."""
    y = np.asarray(y, dtype=float)
    if X.shape[0] != y.shape[0]:
        raise ShapeError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    if y.min() == y.max():
        raise FitError("a binary head needs both positive and negative examples")
    fn, l1 = logistic_objective(X, y, cfg.penalty, cfg.C)
    theta0 = np.zeros(X.shape[1] + 1)
    mask = np.ones_like(theta0)
    mask[-1] = 0.0
    res = minimize_owlqn(fn, theta0, l1=l1, l1_mask=mask, max_iter=cfg.max_iter, tol=cfg.tol)
    if not res.converged:
        logger.warning("logistic head stopped by %s (|pg|=%.2e)", res.stop_reason, res.pg_norm)
    return res.x[:-1].copy(), float(res.x[-1]), res


def _targets(y, classes: Sequence[str] | None, multilabel: bool):
    if multilabel:
        Y = np.asarray(y, dtype=float)
        if Y.ndim != 2:
            raise ShapeError("multi-label targets must be a 2-d indicator matrix")
        names = list(classes) if classes is not None else [str(k) for k in range(Y.shape[1])]
        return names, Y
    y = list(y)
    names = list(classes) if classes is not None else sorted(set(y))
    if len(set(y)) < 2:
        raise FitError("training data contains a single class")
    index = {c: k for k, c in enumerate(names)}
    Y = np.zeros((len(y), len(names)))
    for i, lab in enumerate(y):
        Y[i, index[lab]] = 1.0
    return names, Y


def _train(X, y, cfg, classes, multilabel, nb_alpha):
    names, Y = _targets(y, classes, multilabel)
    if X.shape[0] != Y.shape[0]:
        raise ShapeError(f"X has {X.shape[0]} rows but y has {Y.shape[0]}")
    W = np.zeros((len(names), X.shape[1]))
    b = np.zeros(len(names))
    ratios, conv = [], []
    for k in range(len(names)):
        yk = Y[:, k]
        Xk = X
        if nb_alpha is not None:
            nb = nb_ratio(X, yk, nb_alpha)
            ratios.append(nb)
            Xk = scale_by_ratio(X, nb)
        W[k], b[k], res = fit_binary(Xk, yk, cfg)
        conv.append(bool(res.converged))
    return LinearModel(names, W, b, multilabel, ratios, conv)


def train_logistic(X_scaled, y, cfg: ClassifierConfig, classes=None, multilabel: bool = False) -> LinearModel:
    """One-vs-rest logistic heads on already-scaled features."""
    return _train(X_scaled, y, cfg, classes, multilabel, None)


def train_nbsvm(X, y, cfg: ClassifierConfig, alpha: float = 1.0, classes=None, multilabel: bool = False) -> LinearModel:
    """One-vs-rest heads, each on ``X`` scaled by its own log-count ratio."""
    return _train(X, y, cfg, classes, multilabel, alpha)


def decision_function(model: LinearModel, X) -> np.ndarray:
    if X.shape[1] != model.n_features:
        raise ShapeError(f"model expects {model.n_features} features, got {X.shape[1]}")
    X = sp.csr_matrix(X)
    cols = []
    for k in range(len(model.classes)):
        Xk = scale_by_ratio(X, model.nb_ratios[k]) if model.nb_ratios else X
        cols.append(Xk @ model.weights[k] + model.bias[k])
    return np.column_stack(cols) if cols else np.zeros((X.shape[0], 0))


def predict_proba(model: LinearModel, X) -> np.ndarray:
    """Softmax over head scores (multi-class) or independent sigmoids (multi-label)."""
    z = decision_function(model, X)
    if model.multilabel:
        return expit(z)
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def predict(model: LinearModel, X, thresholds: "ThresholdSet | None" = None):
    proba = predict_proba(model, X)
    if model.multilabel:
        t = thresholds.values if thresholds is not None else np.full(len(model.classes), 0.5)
        return (proba >= t).astype(int)
    return [model.classes[k] for k in np.argmax(proba, axis=1)]


# --- metrics used for model selection ---------------------------------------------------------

def _f1(tp, fp, fn):
    denom = 2 * tp + fp + fn
    return np.where(denom > 0, 2 * tp / np.maximum(denom, 1), 0.0)


def micro_f1(y_true: Sequence, y_pred: Sequence) -> float:
    """Single-label micro-F1 over all classes, which equals accuracy."""
    if len(y_true) == 0:
        return 0.0
    return float(np.mean([a == b for a, b in zip(y_true, y_pred)]))


def macro_f1_multilabel(Y_true, Y_pred) -> float:
    Y_true = np.asarray(Y_true, dtype=bool)
    Y_pred = np.asarray(Y_pred, dtype=bool)
    tp = (Y_true & Y_pred).sum(axis=0)
    fp = (~Y_true & Y_pred).sum(axis=0)
    fn = (Y_true & ~Y_pred).sum(axis=0)
    return float(np.mean(_f1(tp, fp, fn)))


# --- grid search ----------------------------------------------------------------------------

@dataclass
class GridCell:
    config: ClassifierConfig
    score: float
    model: LinearModel | None = None
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


def _rank_key(cell: GridCell):
    score = -cell.score if not cell.failed else math.inf
    return (cell.failed, score, cell.config.penalty, cell.config.C)


def grid_search(
    train: tuple,
    valid: tuple,
    penalties: Sequence[str] = ("l1", "l2"),
    Cs: Sequence[float] = (1.0, 2.0, 3.0, 4.0),
    metric: Callable | None = None,
    multilabel: bool = False,
    alpha: float = 1.0,
    classes=None,
    base: ClassifierConfig | None = None,
) -> list[GridCell]:
    """Train one NBSVM per (penalty, C) cell and rank cells by validation score.

    ``train``/``valid`` are ``(X, y)`` pairs.  The default metric is micro-F1
    for multi-class and macro-F1 at threshold 0.5 for multi-label.  A cell
    whose fit raises is kept with ``error`` set and ranked last.
    """
    X_tr, y_tr = train
    X_va, y_va = valid
    base = base or ClassifierConfig()
    if metric is None:
        metric = macro_f1_multilabel if multilabel else micro_f1
    cells = []
    for penalty in penalties:
        for C in Cs:
            cfg = ClassifierConfig(penalty, float(C), base.max_iter, base.tol)
            try:
                model = train_nbsvm(X_tr, y_tr, cfg, alpha, classes, multilabel)
                score = float(metric(y_va, predict(model, X_va)))
                cells.append(GridCell(cfg, score, model))
            except (FitError, ShapeError) as exc:
                logger.warning("grid cell %s C=%g failed: %s", penalty, C, exc)
                cells.append(GridCell(cfg, math.nan, None, str(exc)))
    return sorted(cells, key=_rank_key)


# --- threshold search ----------------------------------------------------------------------

@dataclass
class ThresholdSet:
    values: np.ndarray
    flagged: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"values": [float(v) for v in self.values], "flagged": list(self.flagged)}

    @classmethod
    def from_dict(cls, d: dict) -> "ThresholdSet":
        return cls(np.asarray(d["values"], dtype=float), list(d.get("flagged", [])))


def label_f1_curve(proba: np.ndarray, y: np.ndarray) -> np.ndarray:
    """F1 of one label at every grid threshold (predict positive iff ``p >= t``)."""
    y = np.asarray(y, dtype=bool)
    pred = proba[None, :] >= THRESHOLD_GRID[:, None]
    tp = (pred & y).sum(axis=1)
    fp = (pred & ~y).sum(axis=1)
    fn = (~pred & y).sum(axis=1)
    return _f1(tp, fp, fn)


def search_thresholds(proba_valid, y_valid) -> ThresholdSet:
    """Per-label grid threshold maximizing that label's F1, lowest on ties.

    Macro-F1 is the mean of independent per-label F1 scores, so the
    per-label optimum is also the joint optimum.  Labels without any
    positive validation example get 0.5 and are listed in ``flagged``.
    """
    P = np.asarray(proba_valid, dtype=float)
    Y = np.asarray(y_valid)
    if P.shape != Y.shape or P.ndim != 2:
        raise ShapeError("proba and targets must be matching 2-d arrays")
    values = np.empty(P.shape[1])
    flagged = []
    for k in range(P.shape[1]):
        if not Y[:, k].any():
            values[k] = 0.5
            flagged.append(k)
            continue
        values[k] = THRESHOLD_GRID[int(np.argmax(label_f1_curve(P[:, k], Y[:, k])))]
    return ThresholdSet(values, flagged)
