"""Scattering transform: cascade of wavelet-modulus propagators.

A path is a tuple of ``(j, g)`` pairs with strictly increasing scales
``j_1 < j_2 < ...``; since larger ``j`` is a coarser scale this keeps only the
frequency-decreasing paths, the ones carrying non-negligible energy.  The
coefficient attached to a path ``p`` is

    S_J(p) f = | ... | f * psi_{j1,g1} | * psi_{j2,g2} | ... | * phi_J

sampled every ``2**J`` pixels.  The empty path gives ``f * phi_J``.

Norms follow the pixel-cell discretisation ``||f||^2 = sum_x |f(x)|^2``; a
coefficient subsampled at interval ``2**J`` therefore stands for ``4**J``
pixels and is weighted accordingly in :func:`scattering_distance`.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .container import KIND_FEATURES, read_container, write_container
from .engine import fft2, ifft2, mirror_pad, padded_shape
from .exceptions import ConfigurationError, DimensionError, FormatError, IncompatibleError
from .filterbank import FilterBank, GaborParams, build_filterbank

__all__ = [
    "ScatteringConfig",
    "ScatteringVector",
    "enumerate_paths",
    "num_paths",
    "propagate",
    "scatter",
    "scatter_batch",
    "scattering_distance",
    "scattering_norm",
    "Scattering",
    "energy_accounting",
    "frequency_decreasing_diagnostic",
    "save_features",
    "load_features",
]


@dataclass(frozen=True)
class ScatteringConfig:
    """Scattering depth, scale and wavelet parameters.

    ``params`` defaults to :class:`GaborParams` with ``max_scale = J``; an
    explicit ``params`` must agree with ``J``.  ``subsample_intermediate``
    enables subsampling of every ``|... * psi_j|`` output at interval
    ``2**(j-1)``, which speeds up the cascade at the cost of slight aliasing.
    """

    J: int = 3
    m0: int = 2
    params: GaborParams = None
    subsample_intermediate: bool = False

    def __post_init__(self):
        if int(self.J) != self.J or self.J < 0:
            raise ConfigurationError(f"J must be an integer >= 0, got {self.J}")
        if int(self.m0) != self.m0 or not 0 <= self.m0 <= 3:
            raise ConfigurationError(f"m0 must be in [0, 3], got {self.m0}")
        if self.params is None:
            object.__setattr__(self, "params", GaborParams(max_scale=self.J))
        elif self.params.max_scale != self.J:
            raise ConfigurationError(
                f"params.max_scale={self.params.max_scale} differs from J={self.J}")

    @property
    def num_orientations(self):
        return self.params.num_orientations

    def to_dict(self):
        return {"J": self.J, "m0": self.m0, "params": self.params.to_dict(),
                "subsample_intermediate": bool(self.subsample_intermediate)}

    @classmethod
    def from_dict(cls, d):
        return cls(J=d["J"], m0=d["m0"], params=GaborParams(**d["params"]),
                   subsample_intermediate=d.get("subsample_intermediate", False))


def enumerate_paths(config):
    """All admissible paths in canonical order.

    Paths are sorted by length, then lexicographically on their ``(j, g)``
    pairs; the empty path comes first.
    """
    J, L = config.J, config.num_orientations
    paths = [()]
    for n in range(1, config.m0 + 1):
        layer = []
        for scales in itertools.combinations(range(J), n):
            for angles in itertools.product(range(L), repeat=n):
                layer.append(tuple(zip(scales, angles)))
        paths.extend(sorted(layer))
    return paths


def num_paths(J, L, m0):
    """Closed form ``sum_{n <= m0} L**n * C(J, n)``."""
    return sum(L ** n * math.comb(J, n) for n in range(m0 + 1))


def _check_bank(config, bank):
    if bank.params != config.params:
        raise IncompatibleError("filter bank and scattering config use different parameters")


@dataclass(frozen=True)
class ScatteringVector:
    """Scattering coefficients of one image.

    Attributes
    ----------
    coeffs : dict
        Path -> real 2-D array sampled at interval ``2**J`` (or the full
        resolution ``U(p) f`` signals when produced with ``average=False``).
    config : ScatteringConfig
    source_shape : tuple of int
        Shape of the image before padding.
    averaged : bool
    """

    coeffs: dict
    config: ScatteringConfig
    source_shape: tuple
    averaged: bool = True

    @property
    def paths(self):
        return list(self.coeffs)

    def to_array(self):
        """Concatenate coefficients path-major, spatial-minor."""
        return np.concatenate([np.ravel(self.coeffs[p]) for p in self.coeffs])

    def layer_energy(self):
        """Squared norm per path length, with the ``4**J`` sample weight."""
        w = 4.0 ** self.config.J if self.averaged else 1.0
        out = [0.0] * (self.config.m0 + 1)
        for p, c in self.coeffs.items():
            out[len(p)] += w * float(np.sum(c ** 2))
        return out


def _prepare(images, bank):
    images = np.asarray(images, dtype=float)
    if images.ndim < 2:
        raise DimensionError(f"expected a 2-D image, got shape {images.shape}")
    if not np.all(np.isfinite(images)):
        raise DimensionError("image contains non-finite values")
    n0, n1 = images.shape[-2:]
    N0, N1 = bank.grid_shape
    if n0 > N0 or n1 > N1:
        raise DimensionError(f"image {(n0, n1)} does not fit filter grid {bank.grid_shape}")
    return mirror_pad(images, bank.grid_shape), (n0, n1)


def propagate(signal, bank, workers=None):
    """One wavelet-modulus layer ``{f * phi_J, |f * psi_{j,g}|}`` at full resolution.

    Returns
    -------
    lowpass : ndarray
    children : dict
        ``(j, g) -> |f * psi_{j,g}|``.
    """
    signal = np.asarray(signal)
    if np.iscomplexobj(signal):
        raise DimensionError("propagate expects a real signal")
    if signal.shape[-2:] != tuple(bank.grid_shape):
        raise DimensionError(
            f"signal grid {signal.shape[-2:]} does not match bank grid {bank.grid_shape}")
    F = fft2(signal, workers)
    lowpass = ifft2(F * bank.lowpass, workers).real
    children = {}
    for j in range(bank.J):
        U = np.abs(ifft2(F[..., None, :, :] * bank.bandpass[j], workers))
        for g in range(bank.num_orientations):
            children[(j, g)] = U[..., g, :, :]
    return lowpass, children


def _cascade(x, config, bank, average=True, workers=None):
    """Run the cascade on a padded batch ``x`` of shape (B, N0, N1).

    Yields ``(path, coefficients)`` with coefficients of shape (B, n0, n1).
    """
    J, m0 = config.J, config.m0
    L = config.num_orientations
    intermediate = config.subsample_intermediate and average

    def lowpass_out(Uf, res):
        _, phi = bank.filters_at(res)
        out = ifft2(Uf * phi, workers).real
        step = 2 ** (J - res)
        return out[..., ::step, ::step]

    # frontier entries: path -> (fft of U(p) f, resolution exponent)
    Xf = fft2(x, workers)
    if average:
        yield (), lowpass_out(Xf, 0)
    else:
        yield (), x
    frontier = {(): (Xf, 0)}
    for n in range(1, m0 + 1):
        nxt = {}
        for p, (Uf, res) in frontier.items():
            psi, _ = bank.filters_at(res)
            jmin = p[-1][0] + 1 if p else 0
            for j in range(jmin, J):
                U = np.abs(ifft2(Uf[:, None] * psi[j], workers))
                new_res = max(res, j - 1) if intermediate else res
                if new_res > res:
                    step = 2 ** (new_res - res)
                    U = U[..., ::step, ::step]
                if average or n < m0:
                    Ufs = fft2(U, workers)
                for g in range(L):
                    q = p + ((j, g),)
                    if average:
                        yield q, lowpass_out(Ufs[:, g], new_res)
                    else:
                        yield q, U[:, g]
                    if n < m0:
                        nxt[q] = (Ufs[:, g], new_res)
        frontier = nxt


def _crop(coeffs, source_shape, J):
    c0 = -(-source_shape[0] // 2 ** J)
    c1 = -(-source_shape[1] // 2 ** J)
    return coeffs[..., :c0, :c1]


def scatter(image, config, bank, average=True, workers=None):
    """Scattering coefficients of one real image.

    Parameters
    ----------
    image : array_like, shape (n0, n1)
        Mirror padded up to ``bank.grid_shape`` when smaller.
    config : ScatteringConfig
    bank : FilterBank
        Built from ``config.params``.
    average : bool, optional
        If False return the unaveraged propagator outputs ``U(p) f`` at full
        (padded) resolution instead of ``S_J(p) f``; used to check
        translation covariance and energy conservation.

    Returns
    -------
    ScatteringVector
    """
    _check_bank(config, bank)
    image = np.asarray(image)
    if image.ndim != 2:
        raise DimensionError(f"expected a 2-D image, got shape {image.shape}")
    x, source_shape = _prepare(image, bank)
    coeffs = {}
    for p, c in _cascade(x[None], config, bank, average=average, workers=workers):
        c = c[0]
        coeffs[p] = _crop(c, source_shape, config.J) if average else c
    order = enumerate_paths(config)
    coeffs = {p: coeffs[p] for p in order}
    return ScatteringVector(coeffs=coeffs, config=config,
                            source_shape=source_shape, averaged=average)


def scatter_batch(images, config, bank, batch_size=256, dtype=np.float64, workers=None):
    """Feature matrix for a stack of images.

    Returns an array of shape ``(n_images, n_paths * n0 * n1)`` laid out
    path-major in canonical path order, ready for the affine models.
    """
    _check_bank(config, bank)
    images = np.asarray(images)
    if images.ndim != 3:
        raise DimensionError(f"expected an (n, h, w) stack, got shape {images.shape}")
    order = {p: i for i, p in enumerate(enumerate_paths(config))}
    source_shape = images.shape[1:]
    c0 = -(-source_shape[0] // 2 ** config.J)
    c1 = -(-source_shape[1] // 2 ** config.J)
    out = np.empty((len(images), len(order), c0, c1), dtype=dtype)
    for start in range(0, len(images), batch_size):
        x, _ = _prepare(images[start:start + batch_size], bank)
        for p, c in _cascade(x, config, bank, workers=workers):
            out[start:start + len(x), order[p]] = _crop(c, source_shape, config.J)
    return out.reshape(len(images), -1)


def _check_compatible(a, b):
    if a.config != b.config or a.averaged != b.averaged:
        raise IncompatibleError("scattering vectors come from different configurations")
    if a.coeffs.keys() != b.coeffs.keys():
        raise IncompatibleError("scattering vectors have different path sets")
    for p in a.coeffs:
        if np.shape(a.coeffs[p]) != np.shape(b.coeffs[p]):
            raise IncompatibleError(f"coefficient shapes differ on path {p}")


def scattering_norm(a):
    """``||S_J f||`` with the ``4**J`` weight per averaged sample."""
    w = 4.0 ** a.config.J if a.averaged else 1.0
    return math.sqrt(w * sum(float(np.sum(c ** 2)) for c in a.coeffs.values()))


def scattering_distance(a, b):
    """Scattering metric ``sqrt(sum_p ||S_J(p) f - S_J(p) g||^2)``."""
    _check_compatible(a, b)
    w = 4.0 ** a.config.J if a.averaged else 1.0
    total = sum(float(np.sum((a.coeffs[p] - b.coeffs[p]) ** 2)) for p in a.coeffs)
    return math.sqrt(w * total)


class Scattering:
    """Scattering operator bound to an image size.

    Builds the filter bank once for the padded grid of ``shape`` and reuses
    it for every call.

    Examples
    --------
    >>> S = Scattering((28, 28), J=3)
    >>> S.transform(images).shape          # doctest: +SKIP
    (n, 2032)
    """

    def __init__(self, shape, J=3, m0=2, params=None, subsample_intermediate=False,
                 workers=None):
        self.config = ScatteringConfig(J=J, m0=m0, params=params,
                                       subsample_intermediate=subsample_intermediate)
        self.shape = tuple(shape)
        self.bank = build_filterbank(self.config.params, padded_shape(self.shape, J))
        self.workers = workers
        self.paths = enumerate_paths(self.config)

    def __call__(self, image, average=True):
        return scatter(image, self.config, self.bank, average=average,
                       workers=self.workers)

    def transform(self, images, batch_size=256, dtype=np.float64):
        return scatter_batch(images, self.config, self.bank, batch_size=batch_size,
                             dtype=dtype, workers=self.workers)

    @property
    def output_shape(self):
        c0 = -(-self.shape[0] // 2 ** self.config.J)
        c1 = -(-self.shape[1] // 2 ** self.config.J)
        return (len(self.paths), c0, c1)


def energy_accounting(image, config, bank):
    """Energy bookkeeping of the cascade for one image.

    Returns a dict with the image energy, the averaged energy of every layer
    ``n < m0``, and the unaveraged energy ``sum_{|p| = m0} ||U(p) f||^2`` of
    the deepest layer, all at full resolution.  Their ratio to the image
    energy measures how far the transform is from preserving the norm.
    """
    _check_bank(config, bank)
    x, _ = _prepare(np.asarray(image), bank)
    phi = bank.lowpass
    averaged = [0.0] * config.m0
    deepest = 0.0
    for p, U in _cascade(x[None], config, bank, average=False):
        U = U[0]
        if len(p) < config.m0:
            averaged[len(p)] += float(np.sum(ifft2(fft2(U) * phi).real ** 2))
        else:
            deepest += float(np.sum(U ** 2))
    total = float(np.sum(x ** 2))
    return {"input": total, "averaged_layers": averaged, "deepest_unaveraged": deepest,
            "ratio": (sum(averaged) + deepest) / total if total > 0 else 1.0}


def frequency_decreasing_diagnostic(image, bank):
    """Energy of second-layer branches split by scale ordering.

    For every first-layer signal ``|f * psi_{j1,g1}|`` computes the energy of
    ``|f * psi_{j1,g1}| * psi_{j2,g2}`` for ``j2 > j1`` (kept by the cascade)
    and ``j2 <= j1`` (discarded).  Returns ``(kept, discarded)``.
    """
    x, _ = _prepare(np.asarray(image), bank)
    _, children = propagate(x, bank)
    kept = discarded = 0.0
    for (j1, _), U in children.items():
        Uf = fft2(U)
        for j2 in range(bank.J):
            e = float(np.sum(np.abs(ifft2(Uf * bank.bandpass[j2])) ** 2))
            if j2 > j1:
                kept += e
            else:
                discarded += e
    return kept, discarded


def save_features(path, features, config, source_shape, labels=None, header=None):
    """Write a batch of scattering vectors to the binary container.

    Parameters
    ----------
    features : ndarray, shape (n, P * c0 * c1)
        Rows as returned by :func:`scatter_batch`, stored as float32.
    config : ScatteringConfig
    source_shape : tuple of int
        Image size the features were computed from.
    labels : array_like, optional
        Stored next to the coefficients as int64.
    header : dict, optional
        Extra JSON-serialisable entries.

    The header records the configuration, the path table (one list of
    ``[j, g]`` pairs per path) and the per-path coefficient shape.
    """
    features = np.asarray(features, dtype=np.float32)
    paths = enumerate_paths(config)
    c0 = -(-source_shape[0] // 2 ** config.J)
    c1 = -(-source_shape[1] // 2 ** config.J)
    if features.ndim != 2 or features.shape[1] != len(paths) * c0 * c1:
        raise DimensionError(
            f"features of shape {features.shape} do not match {len(paths)} paths of {c0}x{c1}")
    meta = dict(header or {})
    meta.update({"type": "features", "config": config.to_dict(),
                 "paths": [[list(step) for step in p] for p in paths],
                 "source_shape": list(source_shape), "coeff_shape": [c0, c1]})
    arrays = {"coefficients": features.reshape(len(features), len(paths), c0, c1)}
    if labels is not None:
        arrays["labels"] = np.asarray(labels, dtype=np.int64)
    write_container(path, KIND_FEATURES, meta, arrays)


def load_features(path):
    """Read a file written by :func:`save_features`.

    Returns
    -------
    features : ndarray, shape (n, P * c0 * c1), float32
    labels : ndarray or None
    config : ScatteringConfig
    header : dict
    """
    _, header, arrays = read_container(path, KIND_FEATURES)
    config = ScatteringConfig.from_dict(header["config"])
    stored = [tuple(tuple(step) for step in p) for p in header["paths"]]
    if stored != enumerate_paths(config):
        raise FormatError("path table does not match the stored configuration", path)
    coeffs = arrays["coefficients"]
    return coeffs.reshape(len(coeffs), -1), arrays.get("labels"), config, header
