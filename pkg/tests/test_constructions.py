import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gcnnvc.constructions import (
    ShatterInstance,
    box_indicator_net,
    build_composite_instance,
    build_hypercube_lift,
    build_shatter_instance,
    bump_family,
    composite_intervals,
    indicator_net,
    interval_upper_bound,
    lift_dnn_to_gcnn,
    subset_index,
    varying_parameter_count,
)
from gcnnvc.errors import InvalidArgument
from gcnnvc.groups import build_cyclic, build_dihedral
from gcnnvc.kernels import Signal
from gcnnvc.network import DnnSpec, Dnn, random_dnn_params
from gcnnvc.verify import lift_oracle


def trapezoid(x, a, b, eps):
    """Piecewise-linear reference: 0 outside [a-eps, b+eps], 1 on [a, b], linear ramps."""
    if x <= a - eps or x >= b + eps:
        return 0.0
    if a <= x <= b:
        return 1.0
    return (x - (a - eps)) / eps if x < a else ((b + eps) - x) / eps


def test_indicator_values():
    net = indicator_net(0.0, 1.0, 0.5)
    xs = [0.5, -1.0, -0.25, 1.25, 2.0, 1.5]
    assert [float(net([x])[0]) for x in xs] == [1.0, 0.0, 0.5, 0.5, 0.0, 0.0]


@settings(max_examples=200, deadline=None)
@given(st.floats(-5, 5), st.floats(0.1, 3), st.floats(0.05, 2), st.floats(-10, 10))
def test_indicator_is_trapezoid(a, width, eps, x):
    b = a + width
    assert float(indicator_net(a, b, eps)([x])[0]) == pytest.approx(trapezoid(x, a, b, eps), abs=1e-9)


def test_subset_index_is_a_bijection():
    m = 4
    subsets = [subset_index(i, m) for i in range(1, 2 ** m + 1)]
    assert len(set(subsets)) == 16
    assert subsets[0] == frozenset() and subsets[-1] == frozenset({1, 2, 3, 4})
    with pytest.raises(InvalidArgument):
        subset_index(0, m)


def test_single_interval_layout_r8():
    inst = build_shatter_instance(build_cyclic(8), 0.0, 1.0)
    p = inst.params
    assert inst.m == 3 and p["d"] == 8 and len(inst.classifiers) == 8
    assert p["delta"] == pytest.approx(1 / 20)
    assert p["points"] == pytest.approx([i / 20 for i in range(1, 9)])
    assert varying_parameter_count(inst.classifiers) == 4
    assert p["total_weights"] == 13
    # every function value lies in [A, B]
    assert all(0.0 <= f.values.min() and f.values.max() <= 1.0 for f in inst.functions)


def test_single_interval_non_power_of_two():
    inst = build_shatter_instance(build_cyclic(12), -1.0, 3.0)
    assert inst.m == 3
    # positions past d = 8 carry the filler
    for f in inst.functions:
        assert np.all(f.values[0, 8:] == inst.params["filler"])


def test_single_interval_labels_by_hand_r4():
    inst = build_shatter_instance(build_cyclic(4), 0.0, 1.0)
    outputs = np.array([[c.net(inst.group, f) for f in inst.functions] for c in inst.classifiers])
    # classifier c fires on function t iff bit t of c is set
    assert np.array_equal(outputs > 0.5, [[False, False], [True, False], [False, True], [True, True]])


def test_composite_intervals_are_disjoint():
    iv = composite_intervals(3, 4)
    assert iv[0] == (11, 16)
    assert all(a[1] < b[0] for a, b in zip(iv, iv[1:]))


def test_composite_family():
    inst = build_composite_instance(build_cyclic(4), 2)
    assert inst.m == 4 and len(inst.classifiers) == 16
    assert varying_parameter_count(inst.classifiers) <= 8
    assert inst.classifiers[0].net.spec.widths == (1, 8, 1)


@pytest.mark.parametrize("g", [build_cyclic(5), build_dihedral(3)])
def test_lift_equals_pointwise_sum(g):
    rng = np.random.default_rng(4)
    spec = DnnSpec((2, 3, 2))
    dnn = Dnn(spec, random_dnn_params(spec, rng))
    f = Signal(rng.normal(size=(2, g.r)))
    assert lift_dnn_to_gcnn(dnn, g)(g, f) == pytest.approx(lift_oracle(dnn, f), rel=1e-12, abs=1e-12)


def test_interval_bound_dominates_samples():
    rng = np.random.default_rng(5)
    spec = DnnSpec((2, 5, 3, 1))
    dnn = Dnn(spec, random_dnn_params(spec, rng))
    lo, hi = np.array([-1.0, 2.0]), np.array([1.0, 3.0])
    bound = interval_upper_bound(dnn, lo, hi)[0]
    xs = rng.uniform(lo, hi, size=(5000, 2))
    assert dnn(xs).max() <= bound


def test_box_indicator():
    net = box_indicator_net(2, 3.0, 5.0, depth=3)
    assert net.spec.L == 3
    assert float(net([4.0, 3.5])[0]) == 1.0
    assert float(net([0.0, 0.0])[0]) == 0.0
    assert float(net([4.0, 0.0])[0]) == 0.5


def test_bump_family_shatters_points():
    pts = [[0.0, 1.0], [1.0, 0.0], [-1.0, -1.0]]
    fam = bump_family(pts)
    assert len(fam) == 8
    for code, bc in enumerate(fam):
        out = bc.net(np.array(pts))[:, 0]
        assert [bool(v > bc.threshold) for v in out] == [bool(code >> t & 1) for t in range(3)]


def test_hypercube_lift_zero_on_box():
    pts = [[0.5], [-0.5]]
    inst = build_hypercube_lift(pts, bump_family(pts), build_cyclic(4), 2.0, 3.0)
    rng = np.random.default_rng(6)
    for _ in range(20):
        f = Signal(rng.uniform(2.0, 3.0, size=(1, 4)))
        for c in inst.classifiers:
            assert c.net(inst.group, f) == 0.0
    assert all(t > 0 for t in inst.params["T_hat"])


def test_hypercube_lift_preconditions():
    pts = [[0.5], [-0.5]]
    fam = bump_family(pts)
    with pytest.raises(InvalidArgument):
        build_hypercube_lift(pts, fam, build_cyclic(4), 1.0, 3.0)   # A not beyond the points
    with pytest.raises(InvalidArgument):
        build_hypercube_lift(pts, fam, build_cyclic(4), 3.0, 3.0)
    with pytest.raises(InvalidArgument):
        build_hypercube_lift(pts, fam[:2], build_cyclic(4), 2.0, 3.0)  # family does not shatter


def test_construction_preconditions():
    with pytest.raises(InvalidArgument):
        build_shatter_instance(build_cyclic(1), 0.0, 1.0)
    with pytest.raises(InvalidArgument):
        build_shatter_instance(build_cyclic(4), 1.0, 1.0)
    with pytest.raises(InvalidArgument):
        build_composite_instance(build_cyclic(4), 0)
    with pytest.raises(InvalidArgument):
        indicator_net(1.0, 0.0, 0.1)


def test_instance_round_trip():
    inst = build_shatter_instance(build_dihedral(3), 0.0, 1.0)
    again = ShatterInstance.from_dict(inst.to_dict())
    assert again.m == inst.m
    f = inst.functions[1]
    assert again.classifiers[1].net(again.group, f) == inst.classifiers[1].net(inst.group, f)


def test_instance_rejects_duplicates_and_wrong_family_size():
    inst = build_shatter_instance(build_cyclic(4), 0.0, 1.0)
    with pytest.raises(InvalidArgument):
        ShatterInstance(inst.group, (inst.functions[0], inst.functions[0]), inst.classifiers, "x")
    with pytest.raises(InvalidArgument):
        ShatterInstance(inst.group, inst.functions, inst.classifiers[:3], "x")


def cross_block_values(inst):
    out = []
    for i, part in enumerate(inst.parts):
        for j, other in enumerate(inst.parts):
            if i != j:
                out += [c.net(inst.group, f) for c in part.classifiers for f in other.functions]
    return np.abs(out)


@pytest.mark.parametrize("r, exact", [(2, True), (8, True), (4, False), (16, False)])
def test_composite_block_isolation(r, exact):
    vals = cross_block_values(build_composite_instance(build_cyclic(r), 2))
    if exact:
        assert np.all(vals == 0.0)
    else:
        assert vals.max() <= 1e-9
