"""End-to-end protocols: features, cross-validation, refit, test error."""

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .classifier import (DEFAULT_RELATIVE_BETAS, ClassifierConfig, CVResult,
                         cross_validate, evaluate, median_centered_energy)
from .datasets import subsample_train
from .exceptions import DataError
from .models import fit_class_models
from .scattering import Scattering

__all__ = [
    "compute_features",
    "cross_validate_dataset",
    "ProtocolResult",
    "run_protocol",
]

log = logging.getLogger(__name__)


def compute_features(images, J, m0=2, params=None, batch_size=256, workers=None,
                     subsample_intermediate=False):
    """Scattering feature matrix of an ``(n, h, w)`` image stack."""
    images = np.asarray(images)
    op = Scattering(images.shape[1:], J=J, m0=m0, params=params,
                    subsample_intermediate=subsample_intermediate, workers=workers)
    return op.transform(images, batch_size=batch_size)


def cross_validate_dataset(train, J_grid=(1, 2, 3, 4), beta_rel_grid=DEFAULT_RELATIVE_BETAS,
                           K=140, val_fraction=0.2, folds=None, seed=0, m0=2,
                           workers=None, return_features=False):
    """Cross-validate ``(J, beta)`` on a :class:`LabeledDataset`.

    Features are computed once per ``J`` and shared by every grid point.
    """
    features = {}
    for J in J_grid:
        t0 = time.perf_counter()
        features[J] = compute_features(train.images, J, m0=m0, workers=workers)
        log.info("J=%d features %s in %.1fs", J, features[J].shape, time.perf_counter() - t0)
    cv = cross_validate(features, train.labels, K=K, beta_rel_grid=beta_rel_grid,
                        val_fraction=val_fraction, folds=folds, seed=seed,
                        class_count=train.class_count)
    if return_features:
        return cv, features
    return cv


@dataclass
class ProtocolResult:
    train_size: int
    J: int
    beta: float
    beta_rel: float
    mean_k: float
    test_error: float
    validation_error: float
    confusion: np.ndarray = field(repr=False)
    cv: CVResult = field(repr=False)

    def row(self):
        return {"train_size": self.train_size, "J": self.J, "beta": self.beta,
                "beta_rel": self.beta_rel, "mean_k": self.mean_k,
                "test_error_percent": 100.0 * self.test_error}


def run_protocol(train, test, train_size=None, J_grid=(1, 2, 3, 4),
                 beta_rel_grid=DEFAULT_RELATIVE_BETAS, K=140, folds=5, val_fraction=0.2,
                 seed=0, m0=2, workers=None, test_features=None):
    """Train on a seeded stratified subset, select ``(J, beta)``, report test error.

    After selection the class models are refitted on the whole training
    subset, and ``beta`` is rescaled to its median centred energy.

    Parameters
    ----------
    test_features : dict, optional
        Cache ``J -> features of test.images``; filled in place.
    """
    if train_size is not None:
        if train_size <= 0:
            raise DataError(f"training size must be positive, got {train_size}")
        train = subsample_train(train, train_size, seed=seed)
    if len(test) == 0:
        raise DataError("empty test set")
    cv, features = cross_validate_dataset(
        train, J_grid=J_grid, beta_rel_grid=beta_rel_grid, K=K, folds=folds,
        val_fraction=val_fraction, seed=seed, m0=m0, workers=workers, return_features=True)
    J = cv.best_J
    models = fit_class_models(features[J], train.labels, K, train.class_count)
    beta = cv.best_beta_rel * median_centered_energy(features[J], train.labels, models)

    if test_features is None:
        test_features = {}
    if J not in test_features:
        test_features[J] = compute_features(test.images, J, m0=m0, workers=workers)
    result = evaluate(test_features[J], test.labels, models,
                      ClassifierConfig(beta=beta, K=K, J=J),
                      class_count=max(train.class_count, test.class_count))
    log.info("n=%d J*=%d beta_rel=%.3g error=%.2f%%", len(train), J, cv.best_beta_rel,
             100 * result.error_rate)
    return ProtocolResult(train_size=len(train), J=J, beta=beta, beta_rel=cv.best_beta_rel,
                          mean_k=result.mean_k, test_error=result.error_rate,
                          validation_error=cv.best_error, confusion=result.confusion, cv=cv)
