import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gcnnvc.errors import InvalidArgument
from gcnnvc.groups import build_cyclic, build_dihedral, build_grid_translation, build_product
from gcnnvc.kernels import (
    KernelBasis,
    KernelWeights,
    Signal,
    apply_left_action,
    cnn_window_basis,
    g_correlate,
    identity_indicator_basis,
    indicator_basis,
)


def correlate_by_loops(g, kernel_on_group, f):
    """sum_j K(g_i^{-1} g_j) f(g_j) with K given as a function on group indices."""
    out = np.zeros(g.r)
    for i in range(g.r):
        for j in range(g.r):
            out[i] += kernel_on_group[g.compose(g.inverse(i), j)] * f[j]
    return out


@pytest.mark.parametrize("g", [build_cyclic(6), build_dihedral(4), build_product(build_cyclic(2), build_cyclic(3))])
def test_correlation_matches_loops(g):
    rng = np.random.default_rng(0)
    basis = KernelBasis(rng.normal(size=(3, g.r)))
    w = KernelWeights(rng.normal(size=3))
    f = rng.normal(size=g.r)
    expected = correlate_by_loops(g, w.w @ basis.basis_values, f)
    np.testing.assert_allclose(g_correlate(g, basis, w, f), expected, rtol=0, atol=1e-12)


@pytest.mark.parametrize("g", [build_cyclic(7), build_dihedral(5), build_grid_translation(3, 4)])
def test_identity_kernel_is_exact(g):
    f = np.arange(g.r, dtype=float) * 3 - 11
    assert np.array_equal(g_correlate(g, identity_indicator_basis(g), [1.0], f), f)


def test_z4_shift_example():
    g = build_cyclic(4)
    assert apply_left_action(g, 1, Signal([1.0, 2.0, 3.0, 4.0])).values[0].tolist() == [4.0, 1.0, 2.0, 3.0]


def test_grid_window_is_zero_padded_correlation():
    h, w, s = 4, 5, 3
    g = build_grid_translation(h, w)
    rng = np.random.default_rng(1)
    weights = rng.normal(size=s * s)
    img = rng.normal(size=(h, w))
    padded = np.pad(img, 1)
    expected = np.array([[np.sum(weights.reshape(s, s) * padded[r:r + s, c:c + s]) for c in range(w)]
                         for r in range(h)])
    got = g_correlate(g, cnn_window_basis(g, s), weights, img.ravel())
    np.testing.assert_allclose(got.reshape(h, w), expected, atol=1e-12)


@settings(max_examples=80, deadline=None)
@given(st.integers(3, 8), st.integers(1, 4), st.data())
def test_equivariance_dihedral(n, k, data):
    g = build_dihedral(n)
    seed = data.draw(st.integers(0, 2 ** 32 - 1))
    a = data.draw(st.integers(0, g.r - 1))
    rng = np.random.default_rng(seed)
    basis = KernelBasis(rng.uniform(-1, 1, size=(k, g.r)))
    w = KernelWeights(rng.uniform(-1, 1, size=k))
    f = Signal(rng.uniform(-10, 10, size=g.r))
    lhs = g_correlate(g, basis, w, apply_left_action(g, a, f))
    rhs = apply_left_action(g, a, Signal(g_correlate(g, basis, w, f))).values[0]
    assert np.max(np.abs(lhs - rhs)) <= 1e-12


def test_shape_errors():
    g = build_cyclic(4)
    with pytest.raises(InvalidArgument):
        g_correlate(g, KernelBasis(np.ones((1, 3))), [1.0], np.ones(4))
    with pytest.raises(InvalidArgument):
        g_correlate(g, identity_indicator_basis(g), [1.0, 2.0], np.ones(4))
    with pytest.raises(InvalidArgument):
        g_correlate(g, identity_indicator_basis(g), [1.0], np.ones(5))
    with pytest.raises(InvalidArgument):
        indicator_basis(g, [4])
    with pytest.raises(InvalidArgument):
        Signal([1.0, np.nan])
    with pytest.raises(InvalidArgument):
        cnn_window_basis(build_grid_translation(3, 3), 2)


def test_signal_round_trip():
    f = Signal(np.arange(6.0).reshape(2, 3))
    assert np.array_equal(Signal.from_dict(f.to_dict()).values, f.values)
    assert f.channels == 2 and f.r == 3
