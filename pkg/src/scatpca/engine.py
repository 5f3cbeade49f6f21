"""FFT convolution, modulus and subsampling primitives.

FFT normalisation: the forward transform is unnormalised and the inverse is
scaled by ``1 / N`` (numpy/scipy ``norm="backward"``), so that
``sum |fft2(f)|**2 == N * sum |f|**2``.

All functions act on the last two axes and broadcast over leading ones, which
lets the scattering cascade process a whole batch of images per call.
"""

import numpy as np
import scipy.fft

from .exceptions import DimensionError

__all__ = [
    "fft2",
    "ifft2",
    "fft_convolve",
    "modulus",
    "subsample",
    "padded_shape",
    "mirror_pad",
    "periodic_shift",
]


def fft2(x, workers=None):
    return scipy.fft.fft2(x, axes=(-2, -1), workers=workers)


def ifft2(x, workers=None):
    return scipy.fft.ifft2(x, axes=(-2, -1), workers=workers)


def _check_grid(signal_shape, filter_shape):
    if tuple(signal_shape[-2:]) != tuple(filter_shape[-2:]):
        raise DimensionError(
            f"signal grid {tuple(signal_shape[-2:])} does not match filter "
            f"grid {tuple(filter_shape[-2:])}")


def fft_convolve(signal, filter_freq, workers=None):
    """Circular convolution of ``signal`` with a filter given in frequency.

    Computes ``ifft2(fft2(signal) * filter_freq)``.  The result is complex;
    take ``.real`` when both factors are known to give a real output.
    """
    signal = np.asarray(signal)
    filter_freq = np.asarray(filter_freq)
    _check_grid(signal.shape, filter_freq.shape)
    return ifft2(fft2(signal, workers) * filter_freq, workers)


def modulus(signal):
    """Pointwise complex modulus."""
    return np.abs(signal)


def subsample(signal, step):
    """Keep every ``step``-th sample along the last two axes.

    ``step`` must be a power of two dividing both grid dimensions.
    """
    step = int(step)
    if step < 1 or step & (step - 1):
        raise DimensionError(f"subsampling step must be a power of two, got {step}")
    n0, n1 = np.shape(signal)[-2:]
    if n0 % step or n1 % step:
        raise DimensionError(f"step {step} does not divide grid {(n0, n1)}")
    return signal[..., ::step, ::step]


def padded_shape(shape, J=0):
    """Smallest power-of-two square holding ``shape`` and the scale ``2**J``."""
    n = max(int(shape[0]), int(shape[1]), 2 ** int(J), 1)
    size = 1 << (n - 1).bit_length()
    return (size, size)


def mirror_pad(image, shape):
    """Symmetrically extend ``image`` at its trailing edges up to ``shape``."""
    image = np.asarray(image)
    n0, n1 = image.shape[-2:]
    p0, p1 = shape[0] - n0, shape[1] - n1
    if p0 < 0 or p1 < 0:
        raise DimensionError(f"image {(n0, n1)} is larger than target {tuple(shape)}")
    if p0 == 0 and p1 == 0:
        return image
    # reflect repeatedly for pads wider than the image itself
    out = image
    while out.shape[-2] < shape[0] or out.shape[-1] < shape[1]:
        q0 = min(shape[0] - out.shape[-2], out.shape[-2])
        q1 = min(shape[1] - out.shape[-1], out.shape[-1])
        widths = [(0, 0)] * (out.ndim - 2) + [(0, q0), (0, q1)]
        out = np.pad(out, widths, mode="symmetric")
    return out


def periodic_shift(image, tau):
    """Translate by the integer vector ``tau`` on the periodic grid."""
    return np.roll(image, shift=tuple(int(t) for t in tau), axis=(-2, -1))
