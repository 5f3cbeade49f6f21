"""Gabor wavelet filter banks built directly in the Fourier domain.

Conventions
-----------
* Frequencies are sampled on ``2 * pi * fftfreq(N)`` along each axis; axis 0
  is the vertical (row) coordinate and axis 1 the horizontal one.
* The mother wavelet is the modulated Gaussian
  ``psi(x) = exp(i xi . x) exp(-|x|^2 / (2 sigma^2))`` whose Fourier transform
  is a Gaussian of width ``1 / sigma`` centred on ``xi``.  Orientation ``g``
  places the centre at angle ``pi * g / L`` from the horizontal axis, so the
  ``L`` orientations cover the half plane ``[0, pi)``.
* Scale ``j`` dilates the wavelet by ``2**j`` with L1 normalisation:
  ``psi_j(x) = 2**(-2j) psi(2**(-j) x)``, i.e. ``psi_j_hat(w) = psi_hat(2**j w)``.
  Larger ``j`` is coarser.  The lowpass ``phi_J_hat(w) = phi_hat(2**J w)``
  with ``phi`` a Gaussian whose scale-0 standard deviation is
  ``lowpass_sigma`` (default 2/3); the dilation is applied on top of it.
* Filters are periodised by summing the analytic transform over the 3 x 3
  nearest aliases, which is the exact DFT of the periodised spatial filter up
  to the (negligible) contribution of farther aliases.
"""

from dataclasses import dataclass, field

import numpy as np

from .container import KIND_FILTERBANK, read_container, write_container
from .exceptions import ConfigurationError

__all__ = [
    "GaborParams",
    "FilterBank",
    "frequency_grid",
    "gabor_hat",
    "build_filterbank",
    "littlewood_paley_profile",
    "resolved_annulus",
    "save_filterbank",
    "load_filterbank",
]


@dataclass(frozen=True)
class GaborParams:
    """Parameters of the Gabor family.

    Defaults are the values used for digits and textures: ``xi = 3 pi / 4``,
    ``sigma = 1``, six orientations and a lowpass of standard deviation 2/3.
    """

    xi: float = 3 * np.pi / 4
    sigma: float = 1.0
    num_orientations: int = 6
    max_scale: int = 3
    lowpass_sigma: float = 2.0 / 3.0
    dc_correction: bool = True

    def __post_init__(self):
        if not self.xi > 0:
            raise ConfigurationError(f"xi must be positive, got {self.xi}")
        if not self.sigma > 0:
            raise ConfigurationError(f"sigma must be positive, got {self.sigma}")
        if not self.lowpass_sigma > 0:
            raise ConfigurationError(
                f"lowpass_sigma must be positive, got {self.lowpass_sigma}")
        if int(self.num_orientations) != self.num_orientations or self.num_orientations < 1:
            raise ConfigurationError(
                f"num_orientations must be an integer >= 1, got {self.num_orientations}")
        if int(self.max_scale) != self.max_scale or self.max_scale < 0:
            raise ConfigurationError(
                f"max_scale must be an integer >= 0, got {self.max_scale}")

    def orientation_angles(self):
        L = self.num_orientations
        return np.pi * np.arange(L) / L

    def to_dict(self):
        return {
            "xi": float(self.xi),
            "sigma": float(self.sigma),
            "num_orientations": int(self.num_orientations),
            "max_scale": int(self.max_scale),
            "lowpass_sigma": float(self.lowpass_sigma),
            "dc_correction": bool(self.dc_correction),
        }


def frequency_grid(shape):
    """Return the two angular-frequency coordinate arrays of an ``N0 x N1`` grid."""
    w0 = 2 * np.pi * np.fft.fftfreq(shape[0])
    w1 = 2 * np.pi * np.fft.fftfreq(shape[1])
    return np.meshgrid(w0, w1, indexing="ij")


def _center(params, theta):
    # (vertical, horizontal) components of the carrier frequency
    return params.xi * np.sin(theta), params.xi * np.cos(theta)


def gabor_hat(w0, w1, params, theta, scale=0, dc_correction=None):
    """Analytic (non periodised) Fourier transform of one dilated Gabor wavelet.

    Evaluates ``psi_hat(2**scale * w)`` for the wavelet at angle ``theta``.
    With DC correction the Morlet term ``beta * envelope_hat`` is removed so
    that the value at ``w = 0`` vanishes.  Used as a reference for the
    sampled filters; :func:`build_filterbank` periodises the same expression.
    """
    if dc_correction is None:
        dc_correction = params.dc_correction
    c0, c1 = _center(params, theta)
    a, b = 2.0 ** scale * w0, 2.0 ** scale * w1
    s2 = params.sigma ** 2
    out = np.exp(-s2 * ((a - c0) ** 2 + (b - c1) ** 2) / 2)
    if dc_correction:
        beta = np.exp(-s2 * (c0 ** 2 + c1 ** 2) / 2)
        out = out - beta * np.exp(-s2 * (a ** 2 + b ** 2) / 2)
    return out


def _periodized(shape, scale, fn):
    w0, w1 = frequency_grid(shape)
    out = np.zeros(shape)
    for m0 in (-1, 0, 1):
        for m1 in (-1, 0, 1):
            out += fn(2.0 ** scale * (w0 + 2 * np.pi * m0),
                      2.0 ** scale * (w1 + 2 * np.pi * m1))
    return out


def _raw_bandpass(shape, params, scale, theta):
    c0, c1 = _center(params, theta)
    s2 = params.sigma ** 2
    gabor = _periodized(
        shape, scale, lambda a, b: np.exp(-s2 * ((a - c0) ** 2 + (b - c1) ** 2) / 2))
    if not params.dc_correction:
        return gabor
    envelope = _periodized(shape, scale, lambda a, b: np.exp(-s2 * (a ** 2 + b ** 2) / 2))
    return gabor - (gabor[0, 0] / envelope[0, 0]) * envelope


def _raw_lowpass(shape, params, scale):
    s2 = params.lowpass_sigma ** 2
    phi = _periodized(shape, scale, lambda a, b: np.exp(-s2 * (a ** 2 + b ** 2) / 2))
    return phi / phi[0, 0]


def _mirror_freq(a):
    """Return ``a(-w)`` for an array sampled on the DFT grid."""
    return np.roll(np.flip(a, axis=(-2, -1)), 1, axis=(-2, -1))


def _bandpass_energy(bandpass):
    # 1/2 sum_{j, g} |psi(w)|^2 + |psi(-w)|^2
    if bandpass.shape[0] == 0:
        return np.zeros(bandpass.shape[2:])
    sq = np.abs(bandpass) ** 2
    total = sq.sum(axis=(0, 1))
    return 0.5 * (total + _mirror_freq(total))


@dataclass(frozen=True, eq=False)
class FilterBank:
    """Sampled wavelet family and lowpass filter.

    Attributes
    ----------
    params : GaborParams
    grid_shape : tuple of int
    bandpass : ndarray, shape (J, L, N0, N1), complex
        ``bandpass[j, g]`` is the Fourier transform of ``psi_{j, g}``.
    lowpass : ndarray, shape (N0, N1), real
        Fourier transform of ``phi_J``, with ``lowpass[0, 0] == 1``.
    amplitude : float
        Common factor applied to the bandpass filters (to every filter when
        DC correction is off) so that the Littlewood-Paley profile peaks at 1.
    frame_defect : float
        ``1 - min`` of the profile over :func:`resolved_annulus`.
    """

    params: GaborParams
    grid_shape: tuple
    bandpass: np.ndarray
    lowpass: np.ndarray
    amplitude: float
    frame_defect: float
    _coarse: dict = field(default_factory=dict, repr=False)

    @property
    def J(self):
        return self.params.max_scale

    @property
    def num_orientations(self):
        return self.params.num_orientations

    def filters_at(self, resolution):
        """Filters for signals subsampled by ``2**resolution``.

        On a grid ``2**resolution`` times coarser, convolving with the scale
        ``j`` wavelet means using the analytic filter at scale
        ``j - resolution``.  Returns ``(bandpass, lowpass)`` where
        ``bandpass[j]`` is defined for ``j >= resolution`` (``None`` below).
        The amplitude constant of the full resolution bank is reused.
        """
        if resolution == 0:
            return list(self.bandpass), self.lowpass
        if resolution in self._coarse:
            return self._coarse[resolution]
        step = 2 ** resolution
        shape = (self.grid_shape[0] // step, self.grid_shape[1] // step)
        if shape[0] * step != self.grid_shape[0] or shape[1] * step != self.grid_shape[1]:
            raise ConfigurationError(
                f"grid {self.grid_shape} cannot be subsampled by {step}")
        params = self.params
        bandpass = []
        for j in range(self.J):
            if j < resolution:
                bandpass.append(None)
                continue
            bandpass.append(np.stack([
                self.amplitude * _raw_bandpass(shape, params, j - resolution, theta)
                for theta in params.orientation_angles()]).astype(complex))
        lowpass = _raw_lowpass(shape, params, self.J - resolution)
        if not params.dc_correction:
            lowpass = self.amplitude * lowpass
        self._coarse[resolution] = (bandpass, lowpass)
        return bandpass, lowpass


def littlewood_paley_profile(bank):
    """Energy profile ``|phi_hat|^2 + 1/2 sum |psi_hat(w)|^2 + |psi_hat(-w)|^2``.

    Evaluated at every sampled frequency of ``bank.grid_shape``.  Contraction
    of the wavelet transform on real signals holds whenever its maximum is at
    most 1.
    """
    return np.abs(bank.lowpass) ** 2 + _bandpass_energy(bank.bandpass)


def resolved_annulus(grid_shape, params):
    """Boolean mask of the frequencies tiled by the bandpass family.

    The annulus runs from the centre frequency of the coarsest wavelet,
    ``xi / 2**(J-1)``, to that of the finest, ``xi``, clipped to ``|w| <= pi``
    so that the corners of the DFT square are excluded.  The Gaussian lowpass
    and the coarsest wavelet do not overlap enough to cover the band below
    the annulus, and nothing covers the corners, so the frame bound is only
    meaningful on this range.  For ``J = 0`` the mask is the single
    frequency 0.
    """
    w0, w1 = frequency_grid(grid_shape)
    radius = np.hypot(w0, w1)
    J = params.max_scale
    if J == 0:
        return radius == 0
    inner = params.xi / 2.0 ** (J - 1)
    outer = min(params.xi, np.pi)
    return (radius >= inner) & (radius <= outer)


def _frame_defect(profile, mask):
    return float(max(0.0, 1.0 - profile[mask].min()))


def build_filterbank(params, grid_shape):
    """Sample the Gabor family of ``params`` on a ``grid_shape`` DFT grid.

    Parameters
    ----------
    params : GaborParams
    grid_shape : pair of int
        Must be at least ``2**J`` along both axes.

    Returns
    -------
    FilterBank
        ``J * L`` bandpass filters and one lowpass filter.

    Notes
    -----
    With DC correction (default) the bandpass filters alone are rescaled by
    the largest constant that keeps the Littlewood-Paley profile at or below
    1, which leaves ``lowpass[0, 0] == 1``.  Without it, the wavelets do not
    vanish at the origin and every filter, lowpass included, is divided by
    the square root of the unnormalised profile maximum.
    """
    if not isinstance(params, GaborParams):
        raise ConfigurationError("params must be a GaborParams instance")
    try:
        shape = tuple(int(n) for n in grid_shape)
    except TypeError:
        raise ConfigurationError(f"bad grid shape {grid_shape!r}") from None
    if len(shape) != 2:
        raise ConfigurationError(f"grid shape must have two entries, got {shape}")
    J = params.max_scale
    if min(shape) < 2 ** J:
        raise ConfigurationError(
            f"grid {shape} is smaller than the coarsest scale 2**{J} = {2 ** J}")

    angles = params.orientation_angles()
    bandpass = np.zeros((J, len(angles)) + shape, dtype=complex)
    for j in range(J):
        for g, theta in enumerate(angles):
            bandpass[j, g] = _raw_bandpass(shape, params, j, theta)
    lowpass = _raw_lowpass(shape, params, J)

    energy = _bandpass_energy(bandpass)
    if J == 0:
        amplitude = 1.0
    elif params.dc_correction:
        keep = energy > 1e-14 * energy.max()
        amplitude = float(np.sqrt(np.min((1.0 - lowpass[keep] ** 2) / energy[keep])))
        bandpass *= amplitude
    else:
        amplitude = float(1.0 / np.sqrt(np.max(lowpass ** 2 + energy)))
        bandpass *= amplitude
        lowpass = lowpass * amplitude

    bandpass.setflags(write=False)
    lowpass.setflags(write=False)
    bank = FilterBank(params=params, grid_shape=shape, bandpass=bandpass,
                      lowpass=lowpass, amplitude=amplitude, frame_defect=0.0)
    delta = _frame_defect(littlewood_paley_profile(bank),
                          resolved_annulus(shape, params))
    object.__setattr__(bank, "frame_defect", delta)
    return bank


def save_filterbank(bank, path):
    """Cache a filter bank in the binary container (complex64 filters)."""
    header = {
        "type": "filterbank",
        "grid_shape": list(bank.grid_shape),
        "J": bank.J,
        "num_orientations": bank.num_orientations,
        "params": bank.params.to_dict(),
        "amplitude": bank.amplitude,
        "frame_defect": bank.frame_defect,
    }
    arrays = {}
    for j in range(bank.J):
        for g in range(bank.num_orientations):
            arrays[f"psi_{j}_{g}"] = bank.bandpass[j, g].astype(np.complex64)
    arrays["phi"] = bank.lowpass.astype(np.complex64)
    write_container(path, KIND_FILTERBANK, header, arrays)


def load_filterbank(path):
    """Read a bank written by :func:`save_filterbank` (single precision)."""
    _, header, arrays = read_container(path, KIND_FILTERBANK)
    params = GaborParams(**header["params"])
    shape = tuple(header["grid_shape"])
    J, L = header["J"], header["num_orientations"]
    bandpass = np.zeros((J, L) + shape, dtype=complex)
    for j in range(J):
        for g in range(L):
            bandpass[j, g] = arrays[f"psi_{j}_{g}"]
    lowpass = arrays["phi"].real.astype(float)
    bandpass.setflags(write=False)
    lowpass.setflags(write=False)
    return FilterBank(params=params, grid_shape=shape, bandpass=bandpass,
                      lowpass=lowpass, amplitude=header["amplitude"],
                      frame_defect=header["frame_defect"])
