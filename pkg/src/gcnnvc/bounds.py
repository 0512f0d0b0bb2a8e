"""Closed-form VC-dimension upper bounds and growth-function bounds for GCNNs.

Growth-function quantities are astronomically large, so everything that is a
count is returned as a base-2 logarithm.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from gcnnvc.errors import GcnnvcError, InvalidArgument
from gcnnvc.network import DnnSpec, GcnnSpec, count_dnn_weights, count_gcnn_weights

__all__ = [
    "GcnnUpperBound",
    "BoundReport",
    "BoundViolation",
    "ub_gcnn",
    "ub_dnn",
    "comparison_rhs",
    "log2_region_counts",
    "log2_growth_bound",
    "vc_upper_by_search",
    "search_start",
    "bartlett_lemma16_check",
    "bartlett_lemma16_sweep",
    "bound_report",
    "BOUND_CSV_COLUMNS",
]

E = math.e
_REL = 1e-9


class BoundViolation(GcnnvcError):
    """An ordering between bounds that must hold does not."""


class GcnnUpperBound(NamedTuple):
    theorem: float        # uses sum_l m_l inside the logarithm
    proof_variant: float  # uses sum_l l*m_l, as the derivation actually concludes


def _require_r(spec: GcnnSpec) -> None:
    if spec.r <= 1:
        raise InvalidArgument(f"upper bounds need resolution r > 1, got r={spec.r}")


def ub_gcnn(spec: GcnnSpec) -> GcnnUpperBound:
    _require_r(spec)
    L, r = spec.L, spec.r
    total_w = sum(count_gcnn_weights(spec))
    m = spec.widths[1:]
    sum_m = sum(m)
    sum_lm = sum(l * ml for l, ml in enumerate(m, start=1))
    theorem = L + 1 + 4 * total_w * math.log2(8 * E * r * sum_m)
    proof = L + 1 + 4 * total_w * math.log2(8 * E * r * sum_lm)
    if theorem > proof * (1 + _REL):
        raise BoundViolation(f"theorem variant {theorem} exceeds proof variant {proof}")
    return GcnnUpperBound(theorem, proof)


def ub_dnn(spec: DnnSpec) -> float:
    """L + 2 (sum_l W_l(F)) log2(4e sum_l l m_l)."""
    total_w = sum(count_dnn_weights(spec))
    sum_lm = sum(l * ml for l, ml in enumerate(spec.widths[1:], start=1))
    return spec.L + 2 * total_w * math.log2(4 * E * sum_lm)


def comparison_rhs(gspec: GcnnSpec) -> float:
    """2k UB(F) + 4 (sum_l W_l(H)) log2(2r) for the width-matched DNN class F.

    Raises BoundViolation if UB(H) (theorem variant) exceeds it.
    """
    _require_r(gspec)
    rhs = 2 * gspec.k * ub_dnn(DnnSpec(gspec.widths)) + 4 * sum(count_gcnn_weights(gspec)) * math.log2(2 * gspec.r)
    lhs = ub_gcnn(gspec).theorem
    if lhs > rhs * (1 + _REL):
        raise BoundViolation(f"UB(H)={lhs} exceeds comparison right-hand side {rhs}")
    return rhs


def log2_region_counts(spec: GcnnSpec, m: int) -> np.ndarray:
    """log2 S(1..L) from S(l+1) <= 2 (2e m_{l+1} m r (l+1) / W_{l+1})^{W_{l+1}} S(l), S(0) = 1."""
    if m < 1:
        raise InvalidArgument(f"m must be a positive integer, got {m}")
    counts = count_gcnn_weights(spec)
    out = np.empty(spec.L)
    acc = 0.0
    for l, (ml, wl) in enumerate(zip(spec.widths[1:], counts), start=1):
        acc += 1 + wl * math.log2(2 * E * ml * m * spec.r * l / wl)
        out[l - 1] = acc
    return out


def log2_growth_bound(spec: GcnnSpec, m: int) -> float:
    """log2 of the growth-function bound: log2 S(L) + 1 + (W_L+1) log2(2emL/(W_L+1))."""
    regions = log2_region_counts(spec, m)
    wl1 = count_gcnn_weights(spec)[-1] + 1
    return float(regions[-1]) + 1 + wl1 * math.log2(2 * E * m * spec.L / wl1)


def search_start(spec: GcnnSpec) -> int:
    """Smallest m at which the sign-pattern lemma behind the growth bound applies.

    That lemma needs at least as many polynomials as variables, which the
    derivation guarantees only for m >= sum_l W_l + W_L + 1.
    """
    counts = count_gcnn_weights(spec)
    return sum(counts) + counts[-1] + 1


def vc_upper_by_search(spec: GcnnSpec) -> int:
    """Smallest m >= search_start with log2 growth bound < m (so no m-set is shattered).

    Above search_start, m -> bound(m) - m is concave, so once it turns
    negative it stays negative; doubling then bisection finds the crossing.
    """
    _require_r(spec)

    def fails(m: int) -> bool:
        return log2_growth_bound(spec, m) < m

    lo = search_start(spec)
    if fails(lo):
        return lo
    hi = lo
    while not fails(hi):
        lo, hi = hi, hi * 2
    # invariant: not fails(lo), fails(hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if fails(mid):
            hi = mid
        else:
            lo = mid
    return hi


def bartlett_lemma16_check(m_t: float, kappa: float, w_t: float, r_t: float) -> bool | None:
    """Numerically confirm the log-inequality lemma on one point.

    If 2^m <= 2^kappa (m r / w)^w with r >= 16 and m >= w >= kappa >= 0, then
    m <= kappa + w log2(2 r log2 r). Returns None when the hypothesis or the
    side conditions fail (not applicable), otherwise whether the conclusion holds.
    """
    if not (r_t >= 16 and m_t >= w_t >= kappa >= 0) or w_t == 0:
        return None
    if m_t > kappa + w_t * math.log2(m_t * r_t / w_t):
        return None
    return bool(m_t <= kappa + w_t * math.log2(2 * r_t * math.log2(r_t)))


def bartlett_lemma16_sweep(
    w_max: int = 16, r_values=(16, 32, 64), m_max: int = 10_000
) -> tuple[int, int, list[tuple[int, int, int, int]]]:
    """Check the lemma on every integer point kappa <= w <= w_max, w <= m <= m_max, r in r_values.

    Returns (applicable points, counterexamples, first few counterexamples).
    """
    applicable = 0
    bad: list[tuple[int, int, int, int]] = []
    n_bad = 0
    m = np.arange(1, m_max + 1, dtype=np.float64)
    for r_t in r_values:
        rhs_const = math.log2(2 * r_t * math.log2(r_t))
        for w_t in range(1, w_max + 1):
            mm = m[m >= w_t]
            log_term = w_t * np.log2(mm * r_t / w_t)
            for kappa in range(0, w_t + 1):
                hyp = mm <= kappa + log_term
                concl = mm <= kappa + w_t * rhs_const
                applicable += int(hyp.sum())
                viol = hyp & ~concl
                if viol.any():
                    n_bad += int(viol.sum())
                    for x in mm[viol][:3]:
                        bad.append((int(x), kappa, w_t, int(r_t)))
    return applicable, n_bad, bad[:10]


BOUND_CSV_COLUMNS = (
    "k",
    "widths",
    "r",
    "L",
    "W_total",
    "ub_gcnn_theorem",
    "ub_gcnn_proof_variant",
    "ub_dnn",
    "comparison_rhs",
    "comparison_holds",
    "m",
    "log2_growth_at_m",
    "log2_region_counts",
    "vc_upper_by_search",
    "sandwich_lower",
    "sandwich_upper",
)


@dataclass(frozen=True)
class BoundReport:
    k: int
    widths: tuple[int, ...]
    r: int
    L: int
    W_total: int
    ub_gcnn_theorem: float
    ub_gcnn_proof_variant: float
    ub_dnn: float
    comparison_rhs: float
    comparison_holds: bool
    m: int
    log2_growth_at_m: float
    log2_region_counts: tuple[float, ...]
    vc_upper_by_search: int
    constants: dict[str, float] | None = None
    sandwich_lower: float | None = None
    sandwich_upper: float | None = None
    weight_counts: tuple[int, ...] = field(default=())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["widths"] = list(self.widths)
        d["log2_region_counts"] = list(self.log2_region_counts)
        d["weight_counts"] = list(self.weight_counts)
        return d

    def csv_row(self) -> list:
        d = self.to_dict()
        row = []
        for col in BOUND_CSV_COLUMNS:
            v = d[col]
            if isinstance(v, list):
                v = ";".join(repr(x) if isinstance(x, float) else str(x) for x in v)
            elif isinstance(v, float):
                v = repr(v)
            row.append("" if v is None else v)
        return row


def bound_report(
    spec: GcnnSpec,
    m: int | None = None,
    constants: dict[str, float] | None = None,
    vc_dnn: float | None = None,
) -> BoundReport:
    """Evaluate every bound for one architecture.

    ``m`` defaults to ceil of the proof-variant bound. ``constants`` may hold
    the unspecified universal constants {"c": ..., "C": ...}; the sandwich
    c (VC(F) + W log2 r) <= VC(H) <= C (VC(F) + L W log2 r) is then reported
    with VC(F) taken from ``vc_dnn`` or, by default, UB(F). Nothing about the
    sandwich is asserted.
    """
    ub = ub_gcnn(spec)
    dnn = ub_dnn(DnnSpec(spec.widths))
    rhs = 2 * spec.k * dnn + 4 * sum(count_gcnn_weights(spec)) * math.log2(2 * spec.r)
    holds = ub.theorem <= rhs * (1 + _REL)
    if m is None:
        m = math.ceil(ub.proof_variant)
    counts = count_gcnn_weights(spec)
    search = vc_upper_by_search(spec)
    if search > ub.proof_variant + 1:
        raise BoundViolation(f"search bound {search} exceeds proof variant + 1 = {ub.proof_variant + 1}")
    lower = upper = None
    if constants:
        unknown = set(constants) - {"c", "C"}
        if unknown:
            raise InvalidArgument(f"unknown constants {sorted(unknown)}; only c and C are used")
        vcf = dnn if vc_dnn is None else vc_dnn
        wlog = counts[-1] * math.log2(spec.r)
        if "c" in constants:
            lower = constants["c"] * (vcf + wlog)
        if "C" in constants:
            upper = constants["C"] * (vcf + spec.L * wlog)
    return BoundReport(
        k=spec.k,
        widths=spec.widths,
        r=spec.r,
        L=spec.L,
        W_total=counts[-1],
        ub_gcnn_theorem=ub.theorem,
        ub_gcnn_proof_variant=ub.proof_variant,
        ub_dnn=dnn,
        comparison_rhs=rhs,
        comparison_holds=bool(holds),
        m=int(m),
        log2_growth_at_m=log2_growth_bound(spec, int(m)),
        log2_region_counts=tuple(float(x) for x in log2_region_counts(spec, int(m))),
        vc_upper_by_search=search,
        constants=dict(constants) if constants else None,
        sandwich_lower=lower,
        sandwich_upper=upper,
        weight_counts=tuple(counts),
    )
