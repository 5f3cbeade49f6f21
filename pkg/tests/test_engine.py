import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scatpca.engine import (fft2, fft_convolve, mirror_pad, modulus, padded_shape,
                            periodic_shift, subsample)
from scatpca.exceptions import DimensionError


def direct_circular_convolution(f, h):
    """O(N^2) reference: (f * h)[x] = sum_y f[y] h[x - y mod N]."""
    n0, n1 = f.shape
    out = np.zeros((n0, n1), dtype=np.result_type(f, h, complex))
    for x0 in range(n0):
        for x1 in range(n1):
            acc = 0j
            for y0 in range(n0):
                for y1 in range(n1):
                    acc += f[y0, y1] * h[(x0 - y0) % n0, (x1 - y1) % n1]
            out[x0, x1] = acc
    return out


def test_identity_filter():
    rng = np.random.default_rng(0)
    f = rng.standard_normal((16, 12))
    out = fft_convolve(f, np.ones((16, 12)))
    assert np.max(np.abs(out - f)) < 1e-12


def test_matches_direct_convolution():
    rng = np.random.default_rng(1)
    f = rng.standard_normal((16, 16))
    h = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
    out = fft_convolve(f, fft2(h))
    assert np.max(np.abs(out - direct_circular_convolution(f, h))) < 1e-10


def test_dirac_returns_kernel():
    rng = np.random.default_rng(2)
    H = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    dirac = np.zeros((8, 8))
    dirac[0, 0] = 1.0
    np.testing.assert_allclose(fft_convolve(dirac, H), np.fft.ifft2(H), atol=1e-14)


def test_shape_mismatch():
    with pytest.raises(DimensionError):
        fft_convolve(np.zeros((8, 8)), np.ones((8, 4)))


def test_batched_convolution_broadcasts():
    rng = np.random.default_rng(3)
    f = rng.standard_normal((3, 8, 8))
    H = rng.standard_normal((8, 8))
    out = fft_convolve(f, H)
    for b in range(3):
        np.testing.assert_allclose(out[b], fft_convolve(f[b], H), atol=1e-13)


def test_parseval():
    rng = np.random.default_rng(4)
    f = rng.standard_normal((32, 16))
    lhs = np.sum(np.abs(fft2(f)) ** 2)
    rhs = f.size * np.sum(f ** 2)
    assert abs(lhs - rhs) / rhs < 1e-10


def test_linearity():
    rng = np.random.default_rng(5)
    f, g = rng.standard_normal((2, 16, 16))
    H = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
    alpha = 2.7
    lhs = fft_convolve(alpha * f + g, H)
    rhs = alpha * fft_convolve(f, H) + fft_convolve(g, H)
    assert np.max(np.abs(lhs - rhs)) < 1e-10


@settings(max_examples=30, deadline=None)
@given(t0=st.integers(-20, 20), t1=st.integers(-20, 20), seed=st.integers(0, 2 ** 16))
def test_translation_covariance(t0, t1, seed):
    rng = np.random.default_rng(seed)
    f = rng.standard_normal((16, 16))
    H = np.fft.fft2(rng.standard_normal((16, 16)))
    lhs = fft_convolve(periodic_shift(f, (t0, t1)), H)
    rhs = periodic_shift(fft_convolve(f, H), (t0, t1))
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_modulus_real_and_phase():
    x = np.array([-2.0, 0.0, 3.5])
    np.testing.assert_array_equal(modulus(x), np.abs(x))
    rng = np.random.default_rng(6)
    z = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    for theta in (0.3, 1.0, np.pi):
        np.testing.assert_allclose(modulus(z * np.exp(1j * theta)), modulus(z), rtol=1e-14)


def test_modulus_is_contractive():
    rng = np.random.default_rng(7)
    for _ in range(100):
        a = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        b = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        assert np.linalg.norm(modulus(a) - modulus(b)) <= np.linalg.norm(a - b)


def test_subsample():
    rng = np.random.default_rng(8)
    f = rng.standard_normal((32, 32))
    np.testing.assert_array_equal(subsample(f, 1), f)
    assert subsample(f, 8).shape == (4, 4)
    c = np.full((16, 16), 2.5)
    np.testing.assert_array_equal(subsample(c, 4), np.full((4, 4), 2.5))
    with pytest.raises(DimensionError):
        subsample(np.zeros((12, 12)), 8)
    with pytest.raises(DimensionError):
        subsample(f, 3)


def test_padded_shape_and_mirror_pad():
    assert padded_shape((28, 28), 3) == (32, 32)
    assert padded_shape((16, 16), 3) == (16, 16)
    assert padded_shape((5, 3), 3) == (8, 8)
    assert padded_shape((200, 200), 7) == (256, 256)
    img = np.arange(12.0).reshape(3, 4)
    out = mirror_pad(img, (8, 8))
    assert out.shape == (8, 8)
    np.testing.assert_array_equal(out[:3, :4], img)
    np.testing.assert_array_equal(out[3, :4], img[2])
    np.testing.assert_array_equal(out[:3, 4], img[:, 3])
    with pytest.raises(DimensionError):
        mirror_pad(np.zeros((9, 9)), (8, 8))
