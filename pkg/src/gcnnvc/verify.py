"""Exhaustive certification of shattering, invariance, lift equality and bound consistency."""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from gcnnvc.bounds import vc_upper_by_search
from gcnnvc.constructions import ShatterInstance
from gcnnvc.errors import InvalidArgument, ResourceLimit, UnsupportedOperation
from gcnnvc.groups import DiscretizedGroup
from gcnnvc.kernels import KernelBasis, Signal, apply_left_action
from gcnnvc.network import (
    Dnn,
    Gcnn,
    GcnnParams,
    GcnnSpec,
    dnn_forward,
    gcnn_forward,
    gcnn_forward_batch,
)

__all__ = [
    "ShatterReport",
    "CheckResult",
    "ContainmentError",
    "verify_shattering",
    "verify_invariance",
    "verify_lift_equality",
    "verify_bound_consistency",
    "containing_spec",
    "lift_oracle",
    "sign",
    "SHATTER_CSV_COLUMNS",
]

ENUMERATION_BUDGET = 20
_MAX_REPORTED_FAILURES = 16


class ContainmentError(InvalidArgument):
    """The given class spec does not contain the instance networks."""


def sign(x) -> np.ndarray:
    """+1 for x > 0, -1 otherwise."""
    return np.where(np.asarray(x) > 0, 1, -1)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("GCNNVC_THREADS", "1")))
    except ValueError:
        return 1


SHATTER_CSV_COLUMNS = (
    "provenance",
    "m",
    "labelings_total",
    "labelings_checked",
    "labelings_matched",
    "labelings_realized",
    "success",
    "certified",
    "max_margin_violation",
    "min_margin",
    "failed_labelings",
    "wall_time",
)


@dataclass
class ShatterReport:
    m: int
    labelings_total: int
    labelings_checked: int
    labelings_matched: int
    labelings_realized: int
    success: bool
    certified: bool
    max_margin_violation: float
    min_margin: float | None
    failed_labelings: list[int] = field(default_factory=list)
    provenance: str = ""
    wall_time: float | None = None

    def to_dict(self, timestamps: bool = True) -> dict:
        d = asdict(self)
        if not timestamps:
            d.pop("wall_time")
        return d

    def csv_row(self) -> list:
        d = asdict(self)
        out = []
        for col in SHATTER_CSV_COLUMNS:
            v = d[col]
            if isinstance(v, list):
                v = ";".join(str(x) for x in v)
            elif isinstance(v, float):
                v = repr(v)
            out.append("" if v is None else v)
        return out


def _evaluate(inst: ShatterInstance, stack: np.ndarray, codes: Sequence[int]) -> list[np.ndarray]:
    g = inst.group
    out = []
    for c in codes:
        clf = inst.classifiers[c]
        net = clf.net
        out.append(gcnn_forward_batch(net.spec, net.params, net.basis, g, stack) - clf.threshold)
    return out


def verify_shattering(
    inst: ShatterInstance,
    budget: int = ENUMERATION_BUDGET,
    sample: int | None = None,
    rng: np.random.Generator | None = None,
) -> ShatterReport:
    """Evaluate every labeling's classifier on every function.

    Success requires that (a) each classifier reproduces the labeling it is
    mapped to, and (b) the set of distinct sign vectors produced by the whole
    family, counted without reference to the mapping, has 2^m elements.
    Above ``budget`` functions, a random subset of ``sample`` labelings is
    checked instead and the report is flagged as not certified.
    """
    start = time.perf_counter()
    m = inst.m
    total = 2 ** m
    if m == 0:
        return ShatterReport(0, 1, 1, 1, 1, True, True, 0.0, None, [], inst.provenance,
                             time.perf_counter() - start)

    certified = m <= budget
    if certified:
        codes = range(total)
    elif sample is None:
        raise ResourceLimit(f"{m} functions means {total} labelings, over the 2^{budget} budget; pass sample=")
    else:
        rng = rng or np.random.default_rng(0)
        codes = sorted(set(int(c) for c in rng.integers(0, total, size=sample)))

    stack = np.stack([f.values for f in inst.functions])
    codes = list(codes)
    nthreads = _threads()
    if nthreads > 1 and len(codes) > nthreads:
        chunks = [codes[i::nthreads] for i in range(nthreads)]
        with ThreadPoolExecutor(nthreads) as pool:
            parts = list(pool.map(lambda ch: _evaluate(inst, stack, ch), chunks))
        by_code = {}
        for ch, res in zip(chunks, parts):
            by_code.update(zip(ch, res))
        margins = [by_code[c] for c in codes]
    else:
        margins = _evaluate(inst, stack, codes)

    bits = np.arange(m)
    matched = 0
    failed = []
    realized = set()
    worst_violation = 0.0
    min_margin = np.inf
    for code, z in zip(codes, margins):
        want_pos = (code >> bits) & 1 == 1
        got_pos = z > 0
        realized.add(int(np.sum(got_pos.astype(np.int64) << bits)))
        if np.array_equal(want_pos, got_pos):
            matched += 1
        elif len(failed) < _MAX_REPORTED_FAILURES:
            failed.append(code)
        violation = np.where(want_pos, np.maximum(-z, 0.0), np.maximum(z, 0.0))
        # a positive label needs z > 0 strictly
        violation = np.where(want_pos & (z == 0), np.finfo(float).tiny, violation)
        worst_violation = max(worst_violation, float(violation.max()))
        ok = want_pos == got_pos
        if ok.any():
            min_margin = min(min_margin, float(np.abs(z[ok]).min()))

    checked = len(codes)
    if certified:
        success = matched == total and len(realized) == total
    else:
        success = matched == checked
    return ShatterReport(
        m=m,
        labelings_total=total,
        labelings_checked=checked,
        labelings_matched=matched,
        labelings_realized=len(realized),
        success=bool(success),
        certified=certified,
        max_margin_violation=worst_violation,
        min_margin=None if min_margin == np.inf else min_margin,
        failed_labelings=failed,
        provenance=inst.provenance,
        wall_time=time.perf_counter() - start,
    )


@dataclass(frozen=True)
class CheckResult:
    max_abs: float
    max_rel: float
    passed: bool
    trials: int

    def to_dict(self) -> dict:
        return asdict(self)


def verify_invariance(
    spec: GcnnSpec,
    params: GcnnParams,
    basis: KernelBasis,
    g: DiscretizedGroup,
    trials: int,
    rng: np.random.Generator | None = None,
    elements: Sequence[int] | None = None,
    scale: float = 1.0,
    tol: float = 1e-9,
) -> CheckResult:
    """Max |h(a.f) - h(f)| over random signals f and group elements a.

    A trial passes when the deviation is at most tol * (1 + |h(f)|).
    """
    if not g.closed:
        raise UnsupportedOperation("invariance is only defined for closed groups")
    rng = rng or np.random.default_rng(0)
    pool = list(range(g.r)) if elements is None else list(elements)
    worst_abs = worst_rel = 0.0
    for _ in range(trials):
        f = Signal(rng.uniform(-scale, scale, size=(spec.widths[0], g.r)))
        a = pool[int(rng.integers(len(pool)))]
        base = gcnn_forward(spec, params, basis, g, f)
        moved = gcnn_forward(spec, params, basis, g, apply_left_action(g, a, f))
        dev = abs(moved - base)
        worst_abs = max(worst_abs, dev)
        worst_rel = max(worst_rel, dev / (1 + abs(base)))
    return CheckResult(worst_abs, worst_rel, worst_rel <= tol, trials)


def lift_oracle(dnn: Dnn, f: Signal) -> float:
    """sum_i sum_j dnn(f(g_j))_i by explicit loops over group elements and output units."""
    total = 0.0
    for j in range(f.r):
        out = dnn_forward(dnn.spec, dnn.params, f.values[:, j])
        for i in range(out.shape[0]):
            total += float(out[i])
    return total


def verify_lift_equality(
    dnn: Dnn,
    lifted: Gcnn,
    g: DiscretizedGroup,
    trials: int,
    rng: np.random.Generator | None = None,
    scale: float = 1.0,
    tol: float = 1e-9,
) -> CheckResult:
    """Residual between the lifted GCNN and the double-loop DNN oracle on random signals.

    Only reports; a non-identity basis is expected to give large residuals.
    """
    rng = rng or np.random.default_rng(0)
    worst_abs = worst_rel = 0.0
    for _ in range(trials):
        f = Signal(rng.uniform(-scale, scale, size=(dnn.spec.widths[0], g.r)))
        expected = lift_oracle(dnn, f)
        got = lifted(g, f)
        dev = abs(got - expected)
        worst_abs = max(worst_abs, dev)
        worst_rel = max(worst_rel, dev / max(1.0, abs(expected)))
    return CheckResult(worst_abs, worst_rel, worst_rel <= tol, trials)


def _contains(spec_of_class: GcnnSpec, net_spec: GcnnSpec) -> str | None:
    if net_spec.r != spec_of_class.r:
        return f"resolution {net_spec.r} != {spec_of_class.r}"
    if net_spec.L != spec_of_class.L:
        return f"depth {net_spec.L} != {spec_of_class.L}"
    if net_spec.k > spec_of_class.k:
        return f"kernel dimension {net_spec.k} > {spec_of_class.k}"
    if net_spec.widths[0] != spec_of_class.widths[0]:
        return f"input channels {net_spec.widths[0]} != {spec_of_class.widths[0]}"
    for layer, (a, b) in enumerate(zip(net_spec.widths, spec_of_class.widths)):
        if a > b:
            return f"layer {layer} width {a} > {b}"
    return None


def verify_bound_consistency(inst: ShatterInstance, spec_of_class: GcnnSpec) -> bool:
    """inst.m <= vc_upper_by_search(spec_of_class), after checking the class contains every network.

    Containment is architectural: same resolution, depth and input channels,
    kernel dimension and every layer width no larger than the class's (extra
    channels and basis functions can carry zero weights).
    """
    for code, clf in enumerate(inst.classifiers):
        why = _contains(spec_of_class, clf.net.spec)
        if why:
            raise ContainmentError(f"classifier {code} is outside the class: {why}")
    return inst.m <= vc_upper_by_search(spec_of_class)


def containing_spec(inst: ShatterInstance) -> GcnnSpec:
    """Smallest architecture (layer-wise max widths and k) containing every classifier network."""
    specs = {c.net.spec for c in inst.classifiers}
    depths = {s.L for s in specs}
    if len(depths) != 1:
        raise InvalidArgument(f"classifiers have mixed depths {sorted(depths)}")
    widths = tuple(max(s.widths[i] for s in specs) for i in range(depths.pop() + 1))
    return GcnnSpec(max(s.k for s in specs), widths, inst.group.r)
