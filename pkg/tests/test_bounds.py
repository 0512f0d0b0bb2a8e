import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gcnnvc.bounds import (
    bartlett_lemma16_check,
    bartlett_lemma16_sweep,
    bound_report,
    comparison_rhs,
    log2_growth_bound,
    log2_region_counts,
    search_start,
    ub_dnn,
    ub_gcnn,
    vc_upper_by_search,
)
from gcnnvc.errors import InvalidArgument
from gcnnvc.network import DnnSpec, GcnnSpec

MINIMAL = GcnnSpec(1, (1, 1), 2)
LOG2E = math.log2(math.e)


def test_minimal_upper_bound():
    # W = 2, L = 1, sum m = 1: 2 + 8 log2(16 e) = 2 + 8 (4 + log2 e)
    expected = 2 + 8 * (4 + LOG2E)
    ub = ub_gcnn(MINIMAL)
    assert ub.theorem == pytest.approx(expected, rel=1e-12)
    assert ub.theorem == pytest.approx(45.5416, abs=1e-4)
    assert ub.proof_variant == ub.theorem


def test_two_layer_variants_differ():
    spec = GcnnSpec(1, (1, 1, 1), 2)
    ub = ub_gcnn(spec)
    # W_1 = 2, W_2 = 4, summed 6: 3 + 24 log2(8e*2*2) vs 3 + 24 log2(8e*2*3)
    assert ub.theorem == pytest.approx(3 + 24 * (5 + LOG2E), rel=1e-12)
    assert ub.proof_variant == pytest.approx(3 + 24 * (math.log2(48) + LOG2E), rel=1e-12)


def test_dnn_bound_by_hand():
    # widths (2, 3, 1): W_1 = 9, W_2 = 13, summed 22; sum l m_l = 3 + 2 = 5
    assert ub_dnn(DnnSpec((2, 3, 1))) == pytest.approx(2 + 44 * math.log2(20 * math.e), rel=1e-12)


def test_minimal_regions_and_growth_at_one():
    # S(1) = 2 (2e * 1 * 1 * 2 * 1 / 2)^2 = 2 (2e)^2
    assert log2_region_counts(MINIMAL, 1)[0] == pytest.approx(1 + 2 * (1 + LOG2E), rel=1e-12)
    # growth: log2 S(1) + 1 + 3 log2(2e/3)
    expected = 1 + 2 * (1 + LOG2E) + 1 + 3 * math.log2(2 * math.e / 3)
    assert log2_growth_bound(MINIMAL, 1) == pytest.approx(expected, rel=1e-12)


def test_minimal_search():
    m = vc_upper_by_search(MINIMAL)
    assert m == 36 and m <= 46
    assert log2_growth_bound(MINIMAL, m) < m
    assert log2_growth_bound(MINIMAL, m - 1) >= m - 1


def brute_search(spec):
    m = search_start(spec)
    while log2_growth_bound(spec, m) >= m:
        m += 1
    return m


@pytest.mark.parametrize(
    "spec",
    [GcnnSpec(1, (1, 1), 4), GcnnSpec(1, (1, 4, 1), 16), GcnnSpec(3, (2, 2, 2), 8), GcnnSpec(2, (3, 1, 2, 1), 5)],
)
def test_search_matches_linear_scan(spec):
    assert vc_upper_by_search(spec) == brute_search(spec)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 5), st.lists(st.integers(1, 6), min_size=2, max_size=5), st.integers(2, 64))
def test_bound_chain(k, widths, r):
    spec = GcnnSpec(k, tuple(widths), r)
    ub = ub_gcnn(spec)
    assert ub.theorem <= ub.proof_variant
    assert ub.theorem <= comparison_rhs(spec) * (1 + 1e-9)
    assert vc_upper_by_search(spec) <= ub.proof_variant + 1


def test_comparison_equality_case():
    # k = 1, widths (1, 1): both sides reduce to the same expression
    assert comparison_rhs(MINIMAL) == pytest.approx(ub_gcnn(MINIMAL).theorem, rel=1e-12)


def test_resolution_one_rejected():
    with pytest.raises(InvalidArgument):
        ub_gcnn(GcnnSpec(1, (1, 1), 1))
    with pytest.raises(InvalidArgument):
        vc_upper_by_search(GcnnSpec(1, (1, 1), 1))


def test_lemma16_points():
    assert bartlett_lemma16_check(5, 1, 10, 16) is None      # m < w
    assert bartlett_lemma16_check(20, 2, 4, 8) is None       # r < 16
    assert bartlett_lemma16_check(20, 2, 4, 16) is True
    assert bartlett_lemma16_check(10 ** 6, 2, 4, 16) is None  # hypothesis fails


def test_lemma16_sweep_small_grid():
    applicable, bad, examples = bartlett_lemma16_sweep(4, (16,), 500)
    assert applicable > 0 and bad == 0 and examples == []


def test_report_and_constants():
    rep = bound_report(MINIMAL, constants={"c": 0.5, "C": 2.0})
    dnn = ub_dnn(DnnSpec((1, 1)))
    assert rep.sandwich_lower == pytest.approx(0.5 * (dnn + 2 * 1.0))
    assert rep.sandwich_upper == pytest.approx(2.0 * (dnn + 1 * 2 * 1.0))
    assert rep.m == math.ceil(rep.ub_gcnn_proof_variant)
    assert len(rep.csv_row()) == 16
    with pytest.raises(InvalidArgument):
        bound_report(MINIMAL, constants={"K": 1.0})
