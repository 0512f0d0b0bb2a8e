"""The acceptance corpus run by ``gcnnvc selftest`` and tests/test_acceptance.py.

Every criterion is a function ``(seed) -> Criterion``; randomness for
criterion i comes from ``numpy.random.default_rng([seed, i])`` (PCG64), so a
fixed seed reproduces the whole corpus bit for bit.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from gcnnvc.bounds import (
    bartlett_lemma16_sweep,
    comparison_rhs,
    ub_gcnn,
    vc_upper_by_search,
)
from gcnnvc.constructions import (
    BaseClassifier,
    build_composite_instance,
    build_hypercube_lift,
    build_shatter_instance,
    bump_family,
    lift_dnn_to_gcnn,
)
from gcnnvc.groups import (
    DiscretizedGroup,
    build_cyclic,
    build_dihedral,
    build_grid_translation,
    build_product,
    validate_group_axioms,
)
from gcnnvc.kernels import (
    KernelBasis,
    KernelWeights,
    Signal,
    apply_left_action,
    g_correlate,
    identity_indicator_basis,
)
from gcnnvc.network import (
    Dnn,
    DnnParams,
    DnnSpec,
    GcnnSpec,
    random_dnn_params,
    random_gcnn_params,
)
from gcnnvc.verify import (
    containing_spec,
    verify_bound_consistency,
    verify_invariance,
    verify_lift_equality,
    verify_shattering,
)

RNG_NAME = "numpy.random.PCG64"
DEFAULT_SEED = 20240601


@dataclass
class Criterion:
    number: int
    name: str
    passed: bool
    detail: dict[str, Any] = field(default_factory=dict)
    wall_time: float | None = None

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.name}"

    def to_dict(self, timestamps: bool = True) -> dict[str, Any]:
        d = {"number": self.number, "name": self.name, "passed": self.passed, "detail": self.detail}
        if timestamps:
            d["wall_time"] = self.wall_time
        return d


def _rng(seed: int, number: int) -> np.random.Generator:
    return np.random.default_rng([seed, number])


def _group_families(rng: np.random.Generator) -> dict[str, Callable[[], DiscretizedGroup]]:
    return {
        "cyclic": lambda: build_cyclic(int(rng.integers(1, 17))),
        "dihedral": lambda: build_dihedral(int(rng.integers(3, 9))),
        "product": lambda: build_product(build_cyclic(int(rng.integers(1, 5))), build_dihedral(3)),
        "grid": lambda: build_grid_translation(int(rng.integers(1, 6)), int(rng.integers(1, 6))),
    }


def criterion_group_axioms(seed: int) -> Criterion:
    groups = [build_cyclic(n) for n in range(1, 65)]
    groups += [build_dihedral(n) for n in range(3, 17)]
    z2, z3 = build_cyclic(2), build_cyclic(3)
    groups += [
        build_product(z2, z2),
        build_product(z2, z3),
        build_product(z3, build_dihedral(3)),
        build_product(build_dihedral(4), z2),
        build_product(build_cyclic(4), build_cyclic(6)),
    ]
    violations = {g.label: validate_group_axioms(g) for g in groups}
    bad = {k: v for k, v in violations.items() if v}
    return Criterion(1, "group axioms (Z_n n<=64, D_n n<=16, products)", not bad,
                     {"groups_checked": len(groups), "violations": bad})


def criterion_identity_kernel(seed: int) -> Criterion:
    rng = _rng(seed, 2)
    failures = {}
    for name, make in _group_families(rng).items():
        bad = 0
        for _ in range(100):
            g = make()
            f = rng.integers(-50, 51, size=g.r).astype(np.float64)
            out = g_correlate(g, identity_indicator_basis(g), KernelWeights([1.0]), f)
            bad += not np.array_equal(out, f)
        failures[name] = bad
    return Criterion(2, "identity kernel reproduces f bitwise", not any(failures.values()),
                     {"cases_per_family": 100, "failures": failures})


def criterion_equivariance(seed: int) -> Criterion:
    rng = _rng(seed, 3)
    worst = {}
    draws = {"cyclic": 0, "dihedral": 0}
    for family in draws:
        dev = 0.0
        for _ in range(100):
            g = build_cyclic(int(rng.integers(1, 17))) if family == "cyclic" else build_dihedral(int(rng.integers(3, 9)))
            k = int(rng.integers(1, 5))
            basis = KernelBasis(rng.uniform(-1, 1, size=(k, g.diff_count)))
            w = KernelWeights(rng.uniform(-1, 1, size=k))
            f = Signal(rng.uniform(-10, 10, size=g.r))
            a = int(rng.integers(g.r))
            lhs = g_correlate(g, basis, w, apply_left_action(g, a, f))
            rhs = apply_left_action(g, a, Signal(g_correlate(g, basis, w, f))).values[0]
            dev = max(dev, float(np.abs(lhs - rhs).max()))
            draws[family] += 1
        worst[family] = dev
    passed = all(v <= 1e-12 for v in worst.values())
    return Criterion(3, "G-correlation equivariance <= 1e-12 abs", passed,
                     {"draws": draws, "max_abs_deviation": worst})


def _closed_group(rng: np.random.Generator) -> DiscretizedGroup:
    kind = int(rng.integers(3))
    if kind == 0:
        return build_cyclic(int(rng.integers(2, 17)))
    if kind == 1:
        return build_dihedral(int(rng.integers(3, 9)))
    return build_product(build_cyclic(int(rng.integers(2, 4))), build_cyclic(int(rng.integers(2, 5))))


def criterion_invariance(seed: int) -> Criterion:
    rng = _rng(seed, 4)
    worst_rel = 0.0
    for _ in range(100):
        g = _closed_group(rng)
        L = int(rng.integers(1, 4))
        k = int(rng.integers(1, 4))
        spec = GcnnSpec(k, tuple(int(x) for x in rng.integers(1, 4, size=L + 1)), g.r)
        basis = KernelBasis(rng.uniform(-1, 1, size=(k, g.diff_count)))
        params = random_gcnn_params(spec, rng, 0.5)
        res = verify_invariance(spec, params, basis, g, trials=1, rng=rng)
        worst_rel = max(worst_rel, res.max_rel)
    return Criterion(4, "GCNN output invariance <= 1e-9 rel", worst_rel <= 1e-9,
                     {"triples": 100, "max_rel_deviation": worst_rel})


def criterion_lift_equality(seed: int) -> Criterion:
    rng = _rng(seed, 5)
    worst = {}
    for name, make in _group_families(rng).items():
        dev = 0.0
        for _ in range(100):
            g = make()
            L = int(rng.integers(1, 4))
            spec = DnnSpec(tuple(int(x) for x in rng.integers(1, 4, size=L + 1)))
            dnn = Dnn(spec, random_dnn_params(spec, rng))
            res = verify_lift_equality(dnn, lift_dnn_to_gcnn(dnn, g), g, trials=1, rng=rng)
            dev = max(dev, res.max_rel)
        worst[name] = dev
    return Criterion(5, "DNN->GCNN lift equality <= 1e-9 rel", all(v <= 1e-9 for v in worst.values()),
                     {"pairs_per_family": 100, "max_rel_residual": worst})


def single_interval_corpus():
    return {r: build_shatter_instance(build_cyclic(r), 0.0, 1.0) for r in (2, 4, 8, 16, 32, 64)}


def criterion_single_interval(seed: int, corpus=None) -> Criterion:
    corpus = corpus or single_interval_corpus()
    detail = {}
    passed = True
    for r, inst in corpus.items():
        t0 = time.perf_counter()
        rep = verify_shattering(inst)
        elapsed = time.perf_counter() - t0
        ok = (
            rep.success
            and inst.m == int(math.floor(math.log2(r)))
            and rep.labelings_realized == 2 ** inst.m
            and rep.max_margin_violation == 0.0
            and rep.min_margin >= 0.5 - 1e-9
        )
        if r == 64:
            ok = ok and elapsed < 1.0
        passed &= ok
        detail[str(r)] = {"m": inst.m, "realized": rep.labelings_realized, "min_margin": rep.min_margin,
                          "ok": bool(ok)}
    return Criterion(6, "single-interval shattering, r in {2..64}", bool(passed), detail)


def criterion_composite(seed: int, inst=None) -> Criterion:
    inst = inst or build_composite_instance(build_cyclic(8), 3)
    rep = verify_shattering(inst)
    cross = []
    for i, part in enumerate(inst.parts):
        stack = [q.functions for j, q in enumerate(inst.parts) if j != i]
        for clf in part.classifiers:
            for fs in stack:
                cross.extend(clf.net(inst.group, f) for f in fs)
    exact_zero = all(v == 0.0 for v in cross)
    passed = rep.success and inst.m == 9 and rep.labelings_realized == 512 and exact_zero
    return Criterion(7, "composite W=3, r=8 shatters 9 functions", bool(passed), {
        "m": inst.m, "realized": rep.labelings_realized, "cross_block_evaluations": len(cross),
        "cross_block_exact_zero": exact_zero,
    })


def threshold_family_1d() -> list[BaseClassifier]:
    """Four one-neuron nets with thresholds realizing all labelings of {-0.5, 0.5}."""
    def net(w, c):
        return Dnn(DnnSpec((1, 1)), DnnParams((np.array([[w]]),), (np.array([c]),)))

    return [
        BaseClassifier(net(0.0, 0.0), 0.5),    # (-, -)
        BaseClassifier(net(-1.0, 0.0), 0.25),  # (+, -)
        BaseClassifier(net(1.0, 0.0), 0.25),   # (-, +)
        BaseClassifier(net(0.0, -1.0), 0.5),   # (+, +)
    ]


def hypercube_corpus():
    return {
        "m0=1,threshold-nets,Z4": build_hypercube_lift([[-0.5], [0.5]], threshold_family_1d(), build_cyclic(4), 2.0, 4.0),
        "m0=1,bumps,Z8": build_hypercube_lift([[-1.0], [0.25], [1.0]], bump_family([[-1.0], [0.25], [1.0]]),
                                              build_cyclic(8), 3.0, 5.0),
        "m0=2,bumps,D3": build_hypercube_lift([[0.5, -0.5], [-1.0, 1.0]], bump_family([[0.5, -0.5], [-1.0, 1.0]]),
                                              build_dihedral(3), 3.0, 4.0),
        "m0=2,bumps,Z2xZ3": build_hypercube_lift(
            [[0.0, 1.0], [1.0, 0.0], [-1.0, -1.0]], bump_family([[0.0, 1.0], [1.0, 0.0], [-1.0, -1.0]]),
            build_product(build_cyclic(2), build_cyclic(3)), 3.0, 6.0),
    }


def criterion_hypercube(seed: int, corpus=None) -> Criterion:
    rng = _rng(seed, 8)
    corpus = corpus or hypercube_corpus()
    passed = True
    detail = {}
    for name, inst in corpus.items():
        rep = verify_shattering(inst)
        A, B, m0 = inst.params["A"], inst.params["B"], inst.params["m0"]
        worst = 0.0
        for _ in range(50):
            f = Signal(rng.uniform(A, B, size=(m0, inst.group.r)))
            for clf in inst.classifiers:
                worst = max(worst, abs(clf.net(inst.group, f)))
        ok = rep.success and worst <= 1e-12
        passed &= ok
        detail[name] = {"m": inst.m, "realized": rep.labelings_realized, "max_output_on_box": worst, "ok": bool(ok)}
    return Criterion(8, "hypercube lift shatters and vanishes on the box", bool(passed), detail)


def random_spec(rng: np.random.Generator) -> GcnnSpec:
    L = int(rng.integers(1, 5))
    return GcnnSpec(int(rng.integers(1, 6)), tuple(int(x) for x in rng.integers(1, 7, size=L + 1)),
                    int(rng.integers(2, 65)))


def criterion_bound_chain(seed: int) -> Criterion:
    rng = _rng(seed, 9)
    counts = {"comparison": 0, "variants": 0, "search": 0}
    for _ in range(1000):
        spec = random_spec(rng)
        ub = ub_gcnn(spec)
        rhs = comparison_rhs(spec)
        counts["comparison"] += ub.theorem > rhs * (1 + 1e-9)
        counts["variants"] += ub.theorem > ub.proof_variant
        counts["search"] += vc_upper_by_search(spec) > ub.proof_variant + 1
    return Criterion(9, "bound chain on 1000 random specs", not any(counts.values()),
                     {"specs": 1000, "violations": counts})


def criterion_lower_le_upper(seed: int, instances=None) -> Criterion:
    if instances is None:
        instances = dict(single_interval_corpus())
        instances["composite"] = build_composite_instance(build_cyclic(8), 3)
        instances.update(hypercube_corpus())
    detail = {}
    for name, inst in instances.items():
        spec = containing_spec(inst)
        detail[str(name)] = {"m": inst.m, "class": spec.to_dict(), "vc_upper": vc_upper_by_search(spec),
                             "holds": verify_bound_consistency(inst, spec)}
    return Criterion(10, "lower constructions <= search upper bound", all(d["holds"] for d in detail.values()),
                     detail)


def criterion_lemma16_sweep(seed: int) -> Criterion:
    applicable, n_bad, examples = bartlett_lemma16_sweep(16, (16, 32, 64), 10_000)
    return Criterion(11, "log-inequality lemma sweep", n_bad == 0 and applicable > 0,
                     {"applicable_points": applicable, "counterexamples": n_bad, "examples": examples})


CRITERIA: list[Callable[[int], Criterion]] = [
    criterion_group_axioms,
    criterion_identity_kernel,
    criterion_equivariance,
    criterion_invariance,
    criterion_lift_equality,
    criterion_single_interval,
    criterion_composite,
    criterion_hypercube,
    criterion_bound_chain,
    criterion_lower_le_upper,
    criterion_lemma16_sweep,
]


def run_criteria(seed: int = DEFAULT_SEED) -> list[Criterion]:
    out = []
    for fn in CRITERIA:
        t0 = time.perf_counter()
        crit = fn(seed)
        crit.wall_time = time.perf_counter() - t0
        out.append(crit)
    return out


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def criterion_determinism(seed: int, first: list[Criterion] | None = None) -> Criterion:
    first = first if first is not None else run_criteria(seed)
    second = run_criteria(seed)
    a = canonical_json([c.to_dict(timestamps=False) for c in first])
    b = canonical_json([c.to_dict(timestamps=False) for c in second])
    return Criterion(12, "repeated runs are byte-identical", a == b, {"bytes": len(a)})


def selftest(seed: int = DEFAULT_SEED, timestamps: bool = True) -> dict[str, Any]:
    t0 = time.perf_counter()
    results = run_criteria(seed)
    t1 = time.perf_counter()
    det = criterion_determinism(seed, results)
    det.wall_time = time.perf_counter() - t1
    results.append(det)
    report = {
        "command": "selftest",
        "seed": seed,
        "rng": RNG_NAME,
        "passed": all(c.passed for c in results),
        "criteria": [c.to_dict(timestamps) for c in results],
    }
    if timestamps:
        report["wall_time"] = time.perf_counter() - t0
    return report
