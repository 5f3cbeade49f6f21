import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scatpca.engine import periodic_shift
from scatpca.exceptions import ConfigurationError, DimensionError, IncompatibleError
from scatpca.filterbank import GaborParams, build_filterbank, gabor_hat
from scatpca.scattering import (Scattering, ScatteringConfig, energy_accounting,
                                enumerate_paths, frequency_decreasing_diagnostic,
                                num_paths, propagate, scatter, scatter_batch,
                                scattering_distance, scattering_norm)


def brute_force_paths(J, L, m0):
    """Every sequence of (j, g) pairs up to length m0, filtered afterwards."""
    out = []
    pairs = [(j, g) for j in range(J) for g in range(L)]
    for n in range(m0 + 1):
        for seq in itertools.product(pairs, repeat=n):
            if all(seq[i][0] < seq[i + 1][0] for i in range(n - 1)):
                out.append(seq)
    return out


def setup(J, shape, **kw):
    config = ScatteringConfig(J=J, params=GaborParams(max_scale=J, **kw))
    return config, build_filterbank(config.params, shape)


def test_path_count_default_setting():
    paths = enumerate_paths(ScatteringConfig(J=3, m0=2))
    assert len(paths) == 127 == 1 + 6 * 3 + 36 * 3
    assert paths[0] == ()
    assert len(set(paths)) == 127


def test_path_count_edge_cases():
    assert enumerate_paths(ScatteringConfig(J=3, m0=0)) == [()]
    params = GaborParams(max_scale=1, num_orientations=2)
    assert len(enumerate_paths(ScatteringConfig(J=1, m0=3, params=params))) == 3


def test_canonical_order():
    paths = enumerate_paths(ScatteringConfig(J=3, m0=2))
    keys = [(len(p), p) for p in paths]
    assert keys == sorted(keys)
    for p in paths:
        js = [j for j, _ in p]
        assert js == sorted(set(js))


def test_config_validation():
    with pytest.raises(ConfigurationError):
        ScatteringConfig(J=3, m0=4)
    with pytest.raises(ConfigurationError):
        ScatteringConfig(J=3, params=GaborParams(max_scale=2))


@settings(max_examples=40, deadline=None)
@given(J=st.integers(0, 4), L=st.integers(1, 4), m0=st.integers(0, 3))
def test_paths_match_brute_force(J, L, m0):
    config = ScatteringConfig(J=J, m0=m0, params=GaborParams(max_scale=J, num_orientations=L))
    paths = enumerate_paths(config)
    assert sorted(paths) == sorted(brute_force_paths(J, L, m0))
    assert len(paths) == num_paths(J, L, m0)


def test_zero_image():
    config, bank = setup(3, (32, 32))
    sv = scatter(np.zeros((32, 32)), config, bank)
    assert all(np.all(c == 0) for c in sv.coeffs.values())
    low, children = propagate(np.zeros((32, 32)), bank)
    assert np.all(low == 0) and all(np.all(c == 0) for c in children.values())


def test_coefficient_layout_and_count():
    config, bank = setup(3, (32, 32))
    rng = np.random.default_rng(0)
    sv = scatter(rng.random((32, 32)), config, bank)
    assert len(sv.coeffs) == 127
    assert all(c.shape == (4, 4) for c in sv.coeffs.values())
    N = 32 * 32
    assert sv.to_array().size == N // 4 ** 3 * num_paths(3, 6, 2)
    assert all(np.isrealobj(c) and np.all(np.isfinite(c)) for c in sv.coeffs.values())


def test_padding_for_digit_size():
    op = Scattering((28, 28), J=3)
    assert op.bank.grid_shape == (32, 32)
    sv = op(np.random.default_rng(1).random((28, 28)))
    assert sv.source_shape == (28, 28)
    assert all(c.shape == (4, 4) for c in sv.coeffs.values())
    assert op.output_shape == (127, 4, 4)


def test_constant_image_propagation():
    _, bank = setup(3, (32, 32))
    low, children = propagate(np.full((32, 32), 0.7), bank)
    np.testing.assert_allclose(low, 0.7, atol=1e-12)
    assert max(np.max(c) for c in children.values()) < 1e-10


def test_propagator_contraction():
    _, bank = setup(3, (32, 32))
    rng = np.random.default_rng(2)
    for _ in range(50):
        f, g = rng.standard_normal((2, 32, 32))
        lf, cf = propagate(f, bank)
        lg, cg = propagate(g, bank)
        lhs = np.sum((lf - lg) ** 2) + sum(np.sum((cf[k] - cg[k]) ** 2) for k in cf)
        assert math.sqrt(lhs) <= np.linalg.norm(f - g)


def test_single_cosine_first_order():
    # |f * psi| for f = cos(w0 . x) is |psi(w0) e^{i w0 x} + psi(-w0) e^{-i w0 x}| / 2,
    # ~ |psi(w0)| / 2 when psi(-w0) is negligible; phi_J(0) = 1 keeps it after averaging
    N, J = 64, 3
    config, bank = setup(J, (N, N))
    k = 12
    w0 = 2 * np.pi * k / N  # horizontal frequency near the j=1, g=0 centre 3pi/8
    x = np.arange(N)
    f = np.cos(w0 * x)[None, :].repeat(N, axis=0)
    sv = scatter(f, config, bank)
    expected = 0.5 * bank.amplitude * abs(gabor_hat(0.0, w0, bank.params, 0.0, scale=1))
    measured = sv.coeffs[((1, 0),)].mean()
    assert abs(measured - expected) / expected < 0.05


def test_distance_axioms():
    config, bank = setup(2, (16, 16))
    rng = np.random.default_rng(3)
    vecs = [scatter(rng.random((16, 16)), config, bank) for _ in range(6)]
    for a in vecs:
        assert scattering_distance(a, a) == 0
    for a, b, c in itertools.permutations(vecs[:4], 3):
        assert scattering_distance(a, b) == scattering_distance(b, a)
        assert scattering_distance(a, c) <= scattering_distance(a, b) + scattering_distance(b, c) + 1e-12


def test_distance_incompatible():
    c2, b2 = setup(2, (16, 16))
    c1, b1 = setup(1, (16, 16))
    img = np.random.default_rng(4).random((16, 16))
    with pytest.raises(IncompatibleError):
        scattering_distance(scatter(img, c2, b2), scatter(img, c1, b1))
    with pytest.raises(IncompatibleError):
        scatter(img, c2, b1)


def test_scattering_contraction():
    config, bank = setup(3, (32, 32))
    rng = np.random.default_rng(5)
    for _ in range(50):
        f, g = rng.standard_normal((2, 32, 32))
        d = scattering_distance(scatter(f, config, bank), scatter(g, config, bank))
        assert d <= np.linalg.norm(f - g) * (1 + 1e-6)


def test_scattering_norm_bounded_by_image_norm():
    config, bank = setup(3, (32, 32))
    f = np.random.default_rng(6).random((32, 32))
    assert scattering_norm(scatter(f, config, bank)) <= np.linalg.norm(f)


@settings(max_examples=10, deadline=None)
@given(t0=st.integers(-8, 8), t1=st.integers(-8, 8))
def test_unaveraged_translation_covariance(t0, t1):
    config, bank = setup(2, (16, 16))
    f = np.random.default_rng(7).random((16, 16))
    a = scatter(periodic_shift(f, (t0, t1)), config, bank, average=False)
    b = scatter(f, config, bank, average=False)
    for p in a.coeffs:
        np.testing.assert_allclose(a.coeffs[p], periodic_shift(b.coeffs[p], (t0, t1)), atol=1e-10)


def test_translation_sensitivity_decreases_with_J():
    f = np.random.default_rng(8).random((64, 64))
    ratios = []
    for J in range(1, 5):
        config, bank = setup(J, (64, 64))
        d = scattering_distance(scatter(f, config, bank),
                                scatter(periodic_shift(f, (4, 0)), config, bank))
        ratios.append(d / np.linalg.norm(f))
    assert all(a > b for a, b in zip(ratios, ratios[1:]))


def test_deterministic():
    config, bank = setup(3, (32, 32))
    f = np.random.default_rng(9).random((32, 32))
    a = scatter(f, config, bank).to_array()
    b = scatter(f, config, bank).to_array()
    assert np.array_equal(a, b)


def test_batch_matches_single():
    op = Scattering((28, 28), J=2)
    imgs = np.random.default_rng(10).random((5, 28, 28))
    batch = op.transform(imgs, batch_size=2)
    for i in range(5):
        np.testing.assert_allclose(batch[i], op(imgs[i]).to_array(), atol=1e-13)


def test_batch_shape_errors():
    config, bank = setup(2, (16, 16))
    with pytest.raises(DimensionError):
        scatter_batch(np.zeros((16, 16)), config, bank)
    with pytest.raises(DimensionError):
        scatter(np.zeros((32, 32)), config, bank)
    with pytest.raises(DimensionError):
        propagate(np.zeros((8, 8)), bank)


def test_intermediate_subsampling_close_to_exact():
    rng = np.random.default_rng(11)
    imgs = rng.random((4, 32, 32))
    exact = Scattering((32, 32), J=3).transform(imgs)
    fast = Scattering((32, 32), J=3, subsample_intermediate=True).transform(imgs)
    assert np.linalg.norm(fast - exact) / np.linalg.norm(exact) < 1e-2


def test_first_layer_energy_identity():
    # m0 = 1: ||f*phi||^2 + sum ||f*psi||^2 equals the profile-weighted spectrum
    from scatpca.filterbank import littlewood_paley_profile

    config = ScatteringConfig(J=2, m0=1)
    bank = build_filterbank(config.params, (32, 32))
    f = np.random.default_rng(12).standard_normal((32, 32))
    acc = energy_accounting(f, config, bank)
    F = np.abs(np.fft.fft2(f)) ** 2
    expected = np.sum(F * littlewood_paley_profile(bank)) / f.size
    got = acc["averaged_layers"][0] + acc["deepest_unaveraged"]
    assert got == pytest.approx(expected, rel=1e-10)


@pytest.mark.xfail(strict=True, reason=(
    "the default Gabor/Gaussian family leaves a frequency gap between phi_J and the "
    "coarsest wavelet (profile ~0.34), so at most ~80% of the energy is retained"))
def test_approximate_norm_preservation():
    from scipy.ndimage import gaussian_filter

    rng = np.random.default_rng(13)
    for J in (1, 2, 3):
        config = ScatteringConfig(J=J, m0=2)
        bank = build_filterbank(config.params, (64, 64))
        f = gaussian_filter(rng.standard_normal((64, 64)), 2.0, mode="wrap")
        assert energy_accounting(f, config, bank)["ratio"] >= 0.95


def test_energy_ratio_bounded():
    from scipy.ndimage import gaussian_filter

    rng = np.random.default_rng(13)
    config = ScatteringConfig(J=2, m0=2)
    bank = build_filterbank(config.params, (64, 64))
    f = gaussian_filter(rng.standard_normal((64, 64)), 2.0, mode="wrap")
    acc = energy_accounting(f, config, bank)
    assert 0 < acc["ratio"] <= 1


def test_frequency_decreasing_diagnostic(capsys):
    _, bank = setup(3, (64, 64))
    f = np.random.default_rng(14).random((64, 64))
    kept, discarded = frequency_decreasing_diagnostic(f, bank)
    assert kept > 0 and discarded >= 0
    with capsys.disabled():
        print(f"\n  second layer energy: j2 > j1 {kept:.4g}, j2 <= j1 {discarded:.4g}")
