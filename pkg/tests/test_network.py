import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gcnnvc.errors import InvalidArgument
from gcnnvc.groups import build_cyclic, build_dihedral
from gcnnvc.kernels import KernelBasis, Signal, apply_left_action
from gcnnvc.network import (
    Dnn,
    DnnParams,
    DnnSpec,
    Gcnn,
    GcnnParams,
    GcnnSpec,
    count_dnn_weights,
    count_gcnn_weights,
    dnn_forward,
    gcnn_forward,
    gcnn_forward_batch,
    random_dnn_params,
    random_gcnn_params,
)


def gcnn_by_loops(spec, params, basis, g, values):
    """Unit by unit, element by element: relu(sum_i sum_s w_ijs sum_b K_s(g_a^-1 g_b) h_i(g_b) - b_j)."""
    h = np.asarray(values, dtype=float)
    for w, bias in zip(params.weights, params.biases):
        m_in, m_out, k = w.shape
        nxt = np.zeros((m_out, g.r))
        for j in range(m_out):
            for a in range(g.r):
                acc = 0.0
                for i in range(m_in):
                    for s in range(k):
                        for b in range(g.r):
                            acc += w[i, j, s] * basis.basis_values[s, g.diff_table[a, b]] * h[i, b]
                nxt[j, a] = max(acc - bias[j], 0.0)
        h = nxt
    return h.sum()


@pytest.mark.parametrize("g", [build_cyclic(5), build_dihedral(3)])
def test_forward_matches_loops(g):
    rng = np.random.default_rng(3)
    spec = GcnnSpec(2, (2, 3, 2), g.r)
    basis = KernelBasis(rng.normal(size=(2, g.r)))
    params = random_gcnn_params(spec, rng, 0.5)
    f = rng.normal(size=(2, g.r))
    assert gcnn_forward(spec, params, basis, g, Signal(f)) == pytest.approx(
        gcnn_by_loops(spec, params, basis, g, f), rel=1e-12, abs=1e-12
    )
    batch = np.stack([f, 2 * f, -f])
    expected = [gcnn_by_loops(spec, params, basis, g, x) for x in batch]
    np.testing.assert_allclose(gcnn_forward_batch(spec, params, basis, g, batch), expected, rtol=1e-12, atol=1e-12)


def test_dnn_forward_by_hand():
    # layer 1: relu([x - 1, -x]) ; layer 2: relu(2 z0 + z1 - 0.5)
    params = DnnParams((np.array([[1.0], [-1.0]]), np.array([[2.0, 1.0]])), (np.array([1.0, 0.0]), np.array([0.5])))
    net = Dnn(DnnSpec((1, 2, 1)), params)
    assert net([3.0]).tolist() == [3.5]
    assert net([-2.0]).tolist() == [1.5]
    assert net([0.5]).tolist() == [0.0]


@pytest.mark.parametrize(
    "k, widths, expected",
    [(1, (1, 1), [2]), (1, (1, 4, 1), [8, 13]), (3, (2, 2, 2), [14, 28])],
)
def test_gcnn_weight_counts(k, widths, expected):
    assert count_gcnn_weights(GcnnSpec(k, widths, 4)) == expected


def test_dnn_weight_counts():
    assert count_dnn_weights(DnnSpec((3, 4, 1))) == [16, 21]


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 3), st.lists(st.integers(1, 3), min_size=2, max_size=4), st.integers(0, 2 ** 32 - 1))
def test_output_is_invariant(k, widths, seed):
    rng = np.random.default_rng(seed)
    g = build_dihedral(4)
    spec = GcnnSpec(k, tuple(widths), g.r)
    basis = KernelBasis(rng.uniform(-1, 1, size=(k, g.r)))
    net = Gcnn(spec, random_gcnn_params(spec, rng), basis)
    f = Signal(rng.uniform(-1, 1, size=(widths[0], g.r)))
    a = int(rng.integers(g.r))
    base = net(g, f)
    assert abs(net(g, apply_left_action(g, a, f)) - base) <= 1e-9 * (1 + abs(base))


def test_parameter_validation():
    spec = GcnnSpec(1, (1, 2), 3)
    with pytest.raises(InvalidArgument):
        GcnnParams((np.ones((2, 1, 1)),), (np.zeros(2),)).check(spec)
    with pytest.raises(InvalidArgument):
        GcnnParams((np.full((1, 2, 1), np.inf),), (np.zeros(2),))
    with pytest.raises(InvalidArgument):
        GcnnSpec(0, (1, 1), 2)
    with pytest.raises(InvalidArgument):
        GcnnSpec(1, (1,), 2)
    with pytest.raises(InvalidArgument):
        DnnSpec((2, 0, 1))
    g = build_cyclic(4)
    params = GcnnParams((np.ones((1, 2, 1)),), (np.zeros(2),))
    with pytest.raises(InvalidArgument):
        gcnn_forward(spec, params, KernelBasis(np.ones((1, 4))), g, Signal(np.ones(4)))
    net = Dnn(DnnSpec((2, 1)), random_dnn_params(DnnSpec((2, 1)), np.random.default_rng(0)))
    with pytest.raises(InvalidArgument):
        dnn_forward(net.spec, net.params, [1.0, 2.0, 3.0])


def test_params_round_trip():
    rng = np.random.default_rng(0)
    spec = GcnnSpec(2, (1, 3, 1), 4)
    net = Gcnn(spec, random_gcnn_params(spec, rng), KernelBasis(rng.normal(size=(2, 4))))
    again = Gcnn.from_dict(net.to_dict())
    f = Signal(rng.normal(size=4))
    assert again(build_cyclic(4), f) == net(build_cyclic(4), f)
