"""Penalised affine model selection and its cross-validation.

A feature ``x`` is assigned to

    argmin_i  min_{k <= K}  ||x - P_{A_{k,i}} x||^2 + beta * k

Ties are broken towards the smaller class position, then the smaller ``k``.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .datasets import stratified_split
from .exceptions import ConfigurationError, DataError
from .models import fit_class_models, projection_errors

__all__ = [
    "ClassifierConfig",
    "Prediction",
    "inner_k_selection",
    "classify",
    "error_tables",
    "predict_from_tables",
    "predict",
    "EvaluationResult",
    "evaluate",
    "CVResult",
    "cross_validate",
    "default_beta_grid",
    "median_centered_energy",
]

log = logging.getLogger(__name__)

DEFAULT_RELATIVE_BETAS = tuple(np.logspace(-4, 0, 17))


@dataclass(frozen=True)
class ClassifierConfig:
    beta: float = 0.0
    K: int = 140
    J: int = 3

    def __post_init__(self):
        if not self.beta >= 0:
            raise ConfigurationError(f"beta must be >= 0, got {self.beta}")
        if self.K < 0:
            raise ConfigurationError(f"K must be >= 0, got {self.K}")


@dataclass(frozen=True)
class Prediction:
    class_id: int
    chosen_k: int
    score: float


def _penalized(errors, beta):
    return errors + beta * np.arange(errors.shape[-1])


def inner_k_selection(feature, model, config):
    """Best dimension for one class and the resulting penalised error.

    Going from ``k - 1`` to ``k`` lowers the error by ``<x - mu, e_k>^2``
    and costs ``beta``, so the dimension grows while the accumulated gain
    of the leading coordinates beats the accumulated penalty.  The scan
    runs over eigenvectors in eigenvalue order and returns the first ``k``
    reaching the minimum, which equals ``min_k error_k + beta * k``.

    Returns
    -------
    k : int
    score : float
    """
    kk = min(config.K, model.n_components)
    scores = _penalized(projection_errors(model, np.asarray(feature)[None], kk)[0], config.beta)
    k = int(np.argmin(scores))
    return k, float(scores[k])


def classify(feature, models, config):
    """Penalised model selection for a single feature vector."""
    if not models:
        raise ConfigurationError("no class models given")
    best = None
    for i, model in enumerate(models):
        k, score = inner_k_selection(feature, model, config)
        if best is None or score < best[2]:
            best = (i, k, score)
    i, k, score = best
    return Prediction(models[i].class_id, k, score)


def error_tables(features, models, K):
    """Projection errors of every feature on every model, up to dimension ``K``.

    Returns an array of shape ``(n, n_models, K_eff + 1)`` where ``K_eff`` is
    the largest usable dimension; models with fewer eigenvectors are padded
    with ``inf`` so that the padded dimensions are never selected.
    """
    if not models:
        raise ConfigurationError("no class models given")
    features = np.atleast_2d(np.asarray(features, dtype=float))
    K_eff = max(min(K, m.n_components) for m in models)
    out = np.full((len(features), len(models), K_eff + 1), np.inf)
    for i, model in enumerate(models):
        kk = min(K, model.n_components)
        out[:, i, :kk + 1] = projection_errors(model, features, kk)
    return out


def predict_from_tables(tables, beta, class_ids=None):
    """Apply the selection rule to precomputed :func:`error_tables`.

    Returns ``(class_ids, chosen_k, scores)`` arrays.
    """
    scores = _penalized(tables, beta)
    k = np.argmin(scores, axis=2)
    per_class = np.take_along_axis(scores, k[..., None], axis=2)[..., 0]
    idx = np.argmin(per_class, axis=1)
    rows = np.arange(len(idx))
    classes = idx if class_ids is None else np.asarray(class_ids)[idx]
    return classes, k[rows, idx], per_class[rows, idx]


def predict(features, models, config):
    """Vectorised :func:`classify` over the rows of ``features``."""
    tables = error_tables(features, models, config.K)
    return predict_from_tables(tables, config.beta, [m.class_id for m in models])


@dataclass
class EvaluationResult:
    error_rate: float
    confusion: np.ndarray
    predictions: np.ndarray
    chosen_k: np.ndarray

    @property
    def mean_k(self):
        return float(np.mean(self.chosen_k)) if len(self.chosen_k) else 0.0


def evaluate(features, labels, models, config, class_count=None):
    """Error rate and confusion matrix (rows: true class, columns: predicted)."""
    labels = np.asarray(labels)
    if len(labels) == 0:
        raise DataError("empty test set")
    pred, k, _ = predict(features, models, config)
    if class_count is None:
        class_count = int(max(labels.max(), pred.max(), max(m.class_id for m in models))) + 1
    confusion = np.zeros((class_count, class_count), dtype=np.int64)
    np.add.at(confusion, (labels, pred), 1)
    error = 1.0 - np.trace(confusion) / len(labels)
    return EvaluationResult(float(error), confusion, pred, k)


def median_centered_energy(features, labels, models):
    """Median of ``||x - mu_class(x)||^2`` over the given samples."""
    by_id = {m.class_id: m for m in models}
    energies = np.empty(len(labels))
    for c in np.unique(labels):
        mask = labels == c
        R = by_id[int(c)].residual(features[mask])
        energies[mask] = np.einsum("ij,ij->i", R, R)
    return float(np.median(energies))


def default_beta_grid(reference, relative=DEFAULT_RELATIVE_BETAS):
    """Absolute penalties ``relative * reference`` on a logarithmic grid."""
    return [float(r) * reference for r in relative]


@dataclass
class CVResult:
    """Outcome of :func:`cross_validate`.

    ``table`` lists one dict per grid point with keys ``J``, ``beta_rel``,
    ``beta`` (mean absolute penalty over folds) and ``error``.
    """

    best_J: int
    best_beta_rel: float
    best_beta: float
    best_error: float
    table: list = field(default_factory=list)


def _folds(labels, class_count, seed, val_fraction, folds):
    if folds is None:
        fit, val = stratified_split(labels, val_fraction, seed=seed, class_count=class_count)
        return [(fit, val)]
    rng = np.random.default_rng(seed)
    assignment = np.empty(len(labels), dtype=np.int64)
    for c in range(class_count):
        idx = rng.permutation(np.flatnonzero(labels == c))
        assignment[idx] = np.arange(len(idx)) % folds
    return [(np.flatnonzero(assignment != f), np.flatnonzero(assignment == f))
            for f in range(folds)]


def cross_validate(features_by_J, labels, K=140, beta_rel_grid=DEFAULT_RELATIVE_BETAS,
                   val_fraction=0.2, folds=None, seed=0, class_count=None,
                   standardize=False):
    """Select the scattering scale ``J`` and penalty ``beta`` on held-out data.

    Parameters
    ----------
    features_by_J : dict
        ``J -> (n, D_J)`` feature matrix of the training set, computed once
        per scale.  Iteration order defines the grid order.
    labels : array_like
    K : int
        Model dimension cap.
    beta_rel_grid : sequence of float
        Penalties relative to the median centred energy of the fit split, so
        a single grid transfers across scales.
    val_fraction : float
        Held-out fraction per class for the default single holdout.
    folds : int, optional
        Use stratified ``folds``-fold validation instead of one holdout.
    seed : int

    Returns
    -------
    CVResult
        The grid point of smallest validation error; ties resolve to the
        first point in grid order (``J`` as given, then increasing beta).
    """
    labels = np.asarray(labels)
    if class_count is None:
        class_count = int(labels.max()) + 1
    counts = np.bincount(labels, minlength=class_count)
    if np.any(counts < 2):
        raise DataError(f"every class needs at least 2 training samples, got {counts.tolist()}")
    splits = _folds(labels, class_count, seed, val_fraction, folds)

    table = []
    for J, feats in features_by_J.items():
        feats = np.asarray(feats, dtype=float)
        wrong = np.zeros(len(beta_rel_grid))
        betas = np.zeros(len(beta_rel_grid))
        total = 0
        for fit, val in splits:
            if np.any(np.bincount(labels[fit], minlength=class_count) == 0):
                raise DataError("a class is absent from the fit split")
            models = fit_class_models(feats[fit], labels[fit], K, class_count,
                                      standardize=standardize)
            ref = median_centered_energy(feats[fit], labels[fit], models)
            tables = error_tables(feats[val], models, K)
            for b, rel in enumerate(beta_rel_grid):
                beta = rel * ref
                pred, _, _ = predict_from_tables(tables, beta)
                wrong[b] += np.sum(pred != labels[val])
                betas[b] += beta / len(splits)
            total += len(val)
        for b, rel in enumerate(beta_rel_grid):
            table.append({"J": J, "beta_rel": float(rel), "beta": float(betas[b]),
                          "error": float(wrong[b] / total)})
        log.info("J=%d best validation error %.4f", J, wrong.min() / total)

    best = min(range(len(table)), key=lambda r: (table[r]["error"], r))
    row = table[best]
    return CVResult(best_J=row["J"], best_beta_rel=row["beta_rel"], best_beta=row["beta"],
                    best_error=row["error"], table=table)
