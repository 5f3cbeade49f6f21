"""Per-class affine models ``mean + span(top-k covariance eigenvectors)``.

Eigenvectors come from a thin SVD of the centred ``T x D`` data matrix, so
the ``D x D`` covariance is never formed.  Eigenvalues use the ``1 / T``
empirical covariance normalisation.
"""

from dataclasses import dataclass

import numpy as np

from .container import KIND_MODELS, read_container, write_container
from .exceptions import DataError

__all__ = [
    "AffineModel",
    "fit_affine_model",
    "fit_class_models",
    "projection_error",
    "projection_errors",
    "InOutCurves",
    "in_out_curves",
    "save_models",
    "load_models",
]

# singular values below this fraction of the largest are treated as zero
RANK_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class AffineModel:
    """Affine approximation space of one class.

    Attributes
    ----------
    class_id : int
    mean : ndarray, shape (D,)
    eigenvectors : ndarray, shape (k, D)
        Orthonormal rows, ordered by decreasing eigenvalue.
    eigenvalues : ndarray, shape (k,)
    K : int
        Dimension cap requested at fit time.
    train_count : int
    scale : ndarray or None
        Per-feature divisor applied before centring when the model was fitted
        with standardisation.
    """

    class_id: int
    mean: np.ndarray
    eigenvectors: np.ndarray
    eigenvalues: np.ndarray
    K: int
    train_count: int
    scale: np.ndarray = None

    @property
    def dim(self):
        return self.mean.shape[0]

    @property
    def n_components(self):
        return self.eigenvectors.shape[0]

    def residual(self, X):
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.dim:
            raise DataError(f"feature dimension {X.shape[-1]} != model dimension {self.dim}")
        if self.scale is not None:
            X = X / self.scale
        return X - self.mean


def fit_affine_model(features, K, class_id=0, standardize=False):
    """Fit the affine model of one class.

    Parameters
    ----------
    features : array_like, shape (T, D)
    K : int
        Maximum number of eigenvectors kept.  Fewer are stored when the data
        has rank below ``K`` (at most ``T - 1`` after centring).
    standardize : bool, optional
        Divide every feature by its standard deviation first.  Off by
        default: it changes the metric in which projection errors are
        measured.

    Notes
    -----
    Eigenvector signs are fixed by making the largest-magnitude entry of each
    one positive.
    """
    X = np.asarray(features, dtype=float)
    if X.ndim != 2:
        raise DataError(f"features must be a (T, D) matrix, got shape {X.shape}")
    T, D = X.shape
    if T == 0:
        raise DataError("cannot fit an affine model on an empty training set")
    if K < 0:
        raise ValueError(f"K must be >= 0, got {K}")
    scale = None
    if standardize:
        scale = X.std(axis=0)
        scale[scale == 0] = 1.0
        X = X / scale
    mean = X.mean(axis=0)
    limit = min(int(K), T - 1, D)
    if limit <= 0:
        return AffineModel(class_id, mean, np.zeros((0, D)), np.zeros(0), int(K), T, scale)

    _, s, Vt = np.linalg.svd(X - mean, full_matrices=False)
    keep = int(np.sum(s > RANK_TOL * s[0])) if s[0] > 0 else 0
    keep = min(keep, limit)
    V = Vt[:keep].copy()
    pivots = np.argmax(np.abs(V), axis=1)
    signs = np.sign(V[np.arange(keep), pivots])
    V *= signs[:, None]
    eigenvalues = np.maximum(s[:keep] ** 2 / T, 0.0)
    return AffineModel(class_id, mean, V, eigenvalues, int(K), T, scale)


def fit_class_models(features, labels, K, class_count=None, standardize=False):
    """Fit one :class:`AffineModel` per class, ordered by class id."""
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels)
    if class_count is None:
        class_count = int(labels.max()) + 1
    models = []
    for c in range(class_count):
        members = features[labels == c]
        if len(members) == 0:
            raise DataError(f"class {c} has no training samples")
        models.append(fit_affine_model(members, K, class_id=c, standardize=standardize))
    return models


def projection_errors(model, X, k_max=None):
    """Squared distances of the rows of ``X`` to the nested spaces ``A_0..A_kmax``.

    Returns an array of shape ``(n, k_max + 1)`` whose column ``k`` is
    ``||x - mu||^2 - sum_{l <= k} <x - mu, e_l>^2``.
    """
    X = np.atleast_2d(X)
    k_max = model.n_components if k_max is None else int(k_max)
    if not 0 <= k_max <= model.n_components:
        raise ValueError(f"k_max={k_max} outside [0, {model.n_components}]")
    R = model.residual(X)
    total = np.einsum("ij,ij->i", R, R)
    coords = R @ model.eigenvectors[:k_max].T
    explained = np.cumsum(coords ** 2, axis=1)
    errors = np.empty((len(R), k_max + 1))
    errors[:, 0] = total
    errors[:, 1:] = total[:, None] - explained
    return np.maximum(errors, 0.0)


def projection_error(model, feature, k):
    """Squared distance from ``feature`` to the ``k``-dimensional affine space."""
    if not 0 <= k <= model.n_components:
        raise ValueError(f"k={k} outside [0, {model.n_components}]")
    return float(projection_errors(model, np.asarray(feature)[None], k)[0, k])


@dataclass(frozen=True)
class InOutCurves:
    """Relative intra-class and outer-class approximation errors.

    ``intra[i, k]`` and ``outer[i, k]`` are indexed by position in the model
    list and by dimension ``k = 0 .. k_max``.
    """

    class_ids: tuple
    intra: np.ndarray
    outer: np.ndarray

    def ratio(self, k):
        return self.intra[:, k] / self.outer[:, k]

    def rows(self):
        for i, c in enumerate(self.class_ids):
            for k in range(self.intra.shape[1]):
                yield c, k, float(self.intra[i, k]), float(self.outer[i, k])


def in_out_curves(models, features, labels, k_max):
    """Intra-class ``In(i, k)`` and outer-class ``Out(i, k)`` error curves.

    ``In(i, k)`` is the mean projection error of class ``i`` samples on
    ``A_{k,i}`` divided by their mean squared norm; ``Out(i, k)`` is the same
    ratio over the samples of every other class.  Models holding fewer than
    ``k_max`` eigenvectors keep their last value.
    """
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels)
    n_models = len(models)
    intra = np.empty((n_models, k_max + 1))
    outer = np.empty((n_models, k_max + 1))
    energy = np.einsum("ij,ij->i", features, features)
    for i, model in enumerate(models):
        own = labels == model.class_id
        if not own.any():
            raise DataError(f"no samples of class {model.class_id}")
        if own.all():
            raise DataError(f"no samples outside class {model.class_id}")
        kk = min(k_max, model.n_components)
        for dest, mask in ((intra, own), (outer, ~own)):
            err = projection_errors(model, features[mask], kk).mean(axis=0)
            dest[i, :kk + 1] = err / energy[mask].mean()
            dest[i, kk + 1:] = dest[i, kk]
    return InOutCurves(tuple(m.class_id for m in models), intra, outer)


def save_models(path, models, header=None):
    """Write a model set to the binary container (float64 arrays)."""
    header = dict(header or {})
    header["type"] = "models"
    header["models"] = [
        {"class_id": int(m.class_id), "K": int(m.K), "train_count": int(m.train_count),
         "n_components": int(m.n_components), "standardized": m.scale is not None}
        for m in models]
    arrays = {}
    for i, m in enumerate(models):
        arrays[f"mean_{i}"] = m.mean
        arrays[f"eigenvalues_{i}"] = m.eigenvalues
        arrays[f"eigenvectors_{i}"] = m.eigenvectors
        if m.scale is not None:
            arrays[f"scale_{i}"] = m.scale
    write_container(path, KIND_MODELS, header, arrays)


def load_models(path):
    """Read models written by :func:`save_models`; returns ``(models, header)``."""
    _, header, arrays = read_container(path, KIND_MODELS)
    models = []
    for i, meta in enumerate(header["models"]):
        models.append(AffineModel(
            class_id=meta["class_id"],
            mean=arrays[f"mean_{i}"],
            eigenvectors=arrays[f"eigenvectors_{i}"],
            eigenvalues=arrays[f"eigenvalues_{i}"],
            K=meta["K"],
            train_count=meta["train_count"],
            scale=arrays.get(f"scale_{i}")))
    return models, header
