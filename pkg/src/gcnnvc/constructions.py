"""Explicit network constructions behind the VC lower bounds.

* indicator networks (four ReLUs approximating the indicator of [a, b]),
* the DNN -> GCNN lift with a one-dimensional identity-indicator kernel,
* three families of shattering instances: the floor(log2 r) construction on a
  single interval, its W-fold disjoint-interval composite, and the hypercube
  lift of an arbitrary shattering DNN family.

Labelings are encoded as integers: bit t of code c is set iff function t is
labeled +1. ``ShatterInstance.classifiers[c]`` realizes labeling c.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from gcnnvc.errors import InvalidArgument
from gcnnvc.groups import DiscretizedGroup, group_from_dict
from gcnnvc.kernels import Signal, identity_indicator_basis
from gcnnvc.network import (
    Dnn,
    DnnParams,
    DnnSpec,
    Gcnn,
    GcnnParams,
    GcnnSpec,
    count_gcnn_weights,
    dnn_forward,
)

__all__ = [
    "Classifier",
    "BaseClassifier",
    "ShatterInstance",
    "indicator_net",
    "window_sum_net",
    "box_indicator_net",
    "lift_dnn_to_gcnn",
    "subset_index",
    "build_shatter_instance",
    "build_composite_instance",
    "composite_intervals",
    "build_hypercube_lift",
    "interval_upper_bound",
    "bump_family",
    "varying_parameter_count",
]


@dataclass(frozen=True, eq=False)
class Classifier:
    """sign(net(f) - threshold)."""

    net: Gcnn
    threshold: float

    def to_dict(self) -> dict[str, Any]:
        return {"threshold": self.threshold, "net": self.net.to_dict()}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Classifier:
        return cls(Gcnn.from_dict(d["net"]), float(d["threshold"]))


@dataclass(frozen=True, eq=False)
class BaseClassifier:
    """A scalar-output DNN with its decision threshold, used as input to the hypercube lift."""

    net: Dnn
    threshold: float


@dataclass(frozen=True, eq=False)
class ShatterInstance:
    group: DiscretizedGroup
    functions: tuple[Signal, ...]
    classifiers: tuple[Classifier, ...]
    provenance: str
    params: dict[str, Any] = field(default_factory=dict)
    parts: tuple[ShatterInstance, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "functions", tuple(self.functions))
        object.__setattr__(self, "classifiers", tuple(self.classifiers))
        if len(self.classifiers) != 2 ** self.m:
            raise InvalidArgument(
                f"{len(self.classifiers)} classifiers cannot cover the {2 ** self.m} labelings of {self.m} functions"
            )
        seen = set()
        for f in self.functions:
            if f.r != self.group.r:
                raise InvalidArgument("function resolution does not match the group")
            key = f.values.tobytes()
            if key in seen:
                raise InvalidArgument("functions of a shattering instance must be distinct")
            seen.add(key)

    @property
    def m(self) -> int:
        return len(self.functions)

    def to_dict(self) -> dict[str, Any]:
        return {
            "provenance": self.provenance,
            "group": self.group.to_dict(),
            "m": self.m,
            "params": self.params,
            "functions": [f.to_dict() for f in self.functions],
            "classifiers": [c.to_dict() for c in self.classifiers],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> ShatterInstance:
        return cls(
            group=group_from_dict(d["group"]),
            functions=tuple(Signal.from_dict(f) for f in d["functions"]),
            classifiers=tuple(Classifier.from_dict(c) for c in d["classifiers"]),
            provenance=d["provenance"],
            params=dict(d.get("params", {})),
        )


def window_sum_net(windows: Sequence[tuple[float, float, float]]) -> Dnn:
    """Sum of indicator networks 1_(a,b,eps), one block of four hidden units per window."""
    if not windows:
        raise InvalidArgument("need at least one window")
    hidden_bias, out_w = [], []
    for a, b, eps in windows:
        if not a < b:
            raise InvalidArgument(f"indicator window needs a < b, got a={a}, b={b}")
        if not eps > 0:
            raise InvalidArgument(f"indicator ramp eps must be positive, got {eps}")
        hidden_bias += [a - eps, a, b, b + eps]
        out_w += [1 / eps, -1 / eps, -1 / eps, 1 / eps]
    n = len(hidden_bias)
    params = DnnParams(
        (np.ones((n, 1)), np.array([out_w])),
        (np.array(hidden_bias), np.zeros(1)),
    )
    return Dnn(DnnSpec((1, n, 1)), params)


def indicator_net(a: float, b: float, eps: float) -> Dnn:
    """(1/eps)[(x-(a-eps))+ - (x-a)+ - (x-b)+ + (x-(b+eps))+]: 1 on [a, b], 0 outside [a-eps, b+eps]."""
    return window_sum_net([(a, b, eps)])


def box_indicator_net(m0: int, A: float, B: float, depth: int = 2, eps: float = 0.5) -> Dnn:
    """I(y) = (1/m0) sum_q 1_(A,B,eps)(y_q), padded with identity ReLU layers to ``depth``.

    I >= 0 everywhere, so the padding layers relu(1 * z - 0) leave it unchanged.
    """
    if depth < 2:
        raise InvalidArgument("the box indicator needs at least two layers")
    if m0 < 1 or not A < B:
        raise InvalidArgument("box indicator needs m0 >= 1 and A < B")
    w1 = np.repeat(np.eye(m0), 4, axis=0)
    b1 = np.tile([A - eps, A, B, B + eps], m0)
    w2 = np.tile([1.0, -1.0, -1.0, 1.0], m0)[None, :] / (eps * m0)
    weights = [w1, w2] + [np.ones((1, 1))] * (depth - 2)
    biases = [b1, np.zeros(1)] + [np.zeros(1)] * (depth - 2)
    return Dnn(DnnSpec((m0, 4 * m0) + (1,) * (depth - 1)), DnnParams(tuple(weights), tuple(biases)))


def lift_dnn_to_gcnn(dnn: Dnn, g: DiscretizedGroup) -> Gcnn:
    """GCNN with the same widths, k = 1, identity-indicator basis and copied parameters.

    For every input f its output equals sum_i sum_j dnn(f(g_j))_i.
    """
    spec = GcnnSpec(1, dnn.spec.widths, g.r)
    weights = tuple(w.T[:, :, None] for w in dnn.params.weights)
    return Gcnn(spec, GcnnParams(weights, dnn.params.biases), identity_indicator_basis(g))


def subset_index(i: int, m: int) -> frozenset[int]:
    """Canonical bijection [1, 2^m] -> subsets of {1..m}: t+1 is in S_i iff bit t of i-1 is set."""
    if m < 0 or not 1 <= i <= 2 ** m:
        raise InvalidArgument(f"subset index {i} outside [1, 2^{m}]")
    code = i - 1
    return frozenset(t + 1 for t in range(m) if code >> t & 1)


def varying_parameter_count(classifiers: Sequence[Classifier]) -> int:
    """Number of parameter slots that are not constant across a family sharing one architecture."""
    nets = [c.net for c in classifiers]
    if not nets:
        return 0
    spec = nets[0].spec
    if any(n.spec != spec for n in nets):
        raise InvalidArgument("family members have different architectures")

    def flat(n: Gcnn) -> np.ndarray:
        return np.concatenate([a.ravel() for a in n.params.weights + n.params.biases])

    stack = np.stack([flat(n) for n in nets])
    return int(np.count_nonzero(np.any(stack != stack[0], axis=0)))


def _floor_log2(r: int) -> int:
    return r.bit_length() - 1


def _interval_layout(r: int, A: float, B: float):
    m = _floor_log2(r)
    d = 2 ** m
    delta = (B - A) / (2 * (d + 2))
    ys = [A + i * delta for i in range(1, d + 1)]
    return m, d, delta, ys


def build_shatter_instance(g: DiscretizedGroup, A: float, B: float) -> ShatterInstance:
    """floor(log2 r) functions G^r -> [A, B] shattered by lifted 4-parameter indicator networks.

    With d = 2^m points y_i = A + i*delta, delta = (B-A)/(2(d+2)):
    f_j(g_i) = y_i if j in S_i else B - delta (and B - delta for i > d);
    network i sums 1_(y_i - delta/2, y_i + delta/2, delta/2) over the group
    and is 1 on f_j exactly when j in S_i; the threshold is 0.5.
    """
    if not g.closed:
        raise InvalidArgument("the single-interval construction expects a closed group")
    if g.r < 2:
        raise InvalidArgument(f"need r >= 2 to shatter anything, got r={g.r}")
    if not A < B:
        raise InvalidArgument(f"need A < B, got A={A}, B={B}")
    m, d, delta, ys = _interval_layout(g.r, A, B)
    filler = B - delta
    subsets = [subset_index(i, m) for i in range(1, d + 1)]

    functions = []
    for j in range(1, m + 1):
        v = np.full(g.r, filler)
        for i in range(1, d + 1):
            if j in subsets[i - 1]:
                v[i - 1] = ys[i - 1]
        functions.append(Signal(v))

    # labeling code c has positive set S_{c+1}, realized by network i* = c+1
    classifiers = tuple(
        Classifier(lift_dnn_to_gcnn(indicator_net(y - delta / 2, y + delta / 2, delta / 2), g), 0.5)
        for y in ys
    )
    varying = varying_parameter_count(classifiers) if d > 1 else 4
    if varying > 4:
        raise AssertionError(f"single-interval family varies {varying} parameters, budget is 4")
    return ShatterInstance(
        group=g,
        functions=tuple(functions),
        classifiers=classifiers,
        provenance="single-interval",
        params={
            "A": A,
            "B": B,
            "m": m,
            "d": d,
            "delta": delta,
            "points": ys,
            "filler": filler,
            "free_parameters": 4,
            "total_weights": count_gcnn_weights(classifiers[0].net.spec)[-1],
        },
    )


def composite_intervals(m: int, W: int) -> list[tuple[int, int]]:
    """Disjoint intervals [(2m+5) i, (2m+5) i + m + 2], i = 1..W."""
    return [((2 * m + 5) * i, (2 * m + 5) * i + m + 2) for i in range(1, W + 1)]


def build_composite_instance(g: DiscretizedGroup, W: int) -> ShatterInstance:
    """W * floor(log2 r) functions shattered by sums of W single-interval networks.

    Each labeling's network juxtaposes the W chosen indicator windows as
    channels of one GCNN (hidden width 4W), so the family varies 4W parameters.
    """
    if W < 1:
        raise InvalidArgument(f"need W >= 1 blocks, got {W}")
    if g.r < 2:
        raise InvalidArgument(f"need r >= 2 to shatter anything, got r={g.r}")
    m = _floor_log2(g.r)
    intervals = composite_intervals(m, W)
    parts = tuple(build_shatter_instance(g, float(a), float(b)) for a, b in intervals)
    functions = tuple(f for part in parts for f in part.functions)

    mask = 2 ** m - 1
    classifiers = []
    for code in range(2 ** (W * m)):
        windows = []
        for blk, part in enumerate(parts):
            y = part.params["points"][(code >> (blk * m)) & mask]
            delta = part.params["delta"]
            windows.append((y - delta / 2, y + delta / 2, delta / 2))
        classifiers.append(Classifier(lift_dnn_to_gcnn(window_sum_net(windows), g), 0.5))
    classifiers = tuple(classifiers)
    if len(classifiers) > 1 and varying_parameter_count(classifiers) > 4 * W:
        raise AssertionError("composite family exceeds its 4W parameter budget")
    return ShatterInstance(
        group=g,
        functions=functions,
        classifiers=classifiers,
        provenance="composite",
        params={
            "W": W,
            "m_per_block": m,
            "intervals": [list(iv) for iv in intervals],
            "free_parameters": 4 * W,
            "total_weights": count_gcnn_weights(classifiers[0].net.spec)[-1],
        },
        parts=parts,
    )


def interval_upper_bound(dnn: Dnn, lo, hi) -> np.ndarray:
    """Interval propagation of the box [lo, hi] through the network; returns output upper bounds."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    for w, b in zip(dnn.params.weights, dnn.params.biases):
        mid, rad = (lo + hi) / 2, (hi - lo) / 2
        c = w @ mid - b
        s = np.abs(w) @ rad
        lo, hi = np.maximum(c - s, 0.0), np.maximum(c + s, 0.0)
    return hi


def _stack_parallel(first: Dnn, second: Dnn) -> tuple[list[np.ndarray], list[np.ndarray], list[int]]:
    """Run two equal-depth nets on the same input side by side (block-diagonal after layer 1)."""
    weights, biases, widths = [], [], [first.spec.widths[0]]
    for layer, (wa, ba, wb, bb) in enumerate(
        zip(first.params.weights, first.params.biases, second.params.weights, second.params.biases)
    ):
        if layer == 0:
            w = np.vstack([wa, wb])
        else:
            w = np.zeros((wa.shape[0] + wb.shape[0], wa.shape[1] + wb.shape[1]))
            w[: wa.shape[0], : wa.shape[1]] = wa
            w[wa.shape[0]:, wa.shape[1]:] = wb
        weights.append(w)
        biases.append(np.concatenate([ba, bb]))
        widths.append(w.shape[0])
    return weights, biases, widths


def _pad_depth(dnn: Dnn, depth: int) -> Dnn:
    """Append identity ReLU layers on a scalar-output net (its output is already >= 0)."""
    extra = depth - dnn.spec.L
    if extra <= 0:
        return dnn
    weights = dnn.params.weights + (np.ones((1, 1)),) * extra
    biases = dnn.params.biases + (np.zeros(1),) * extra
    return Dnn(DnnSpec(dnn.spec.widths + (1,) * extra), DnnParams(weights, biases))


def build_hypercube_lift(
    base_points,
    base_family: Sequence[BaseClassifier],
    g: DiscretizedGroup,
    A: float,
    B: float,
) -> ShatterInstance:
    """Lift a DNN family shattering points in R^m0 to GCNNs shattering functions on G^r.

    f_i(e) = y_i and f_i(g) = centre of the hypercube [A, B]^m0 elsewhere.
    For each labeling a base net h with threshold b is picked and combined into
    relu(h - (T - b) I - b), where I is the hypercube indicator and T an
    interval-propagation upper bound of h over the hypercube. The combined
    net vanishes on the hypercube and equals relu(h - b) on the base points;
    its GCNN lift is thresholded at 0.
    """
    Y = np.atleast_2d(np.asarray(base_points, dtype=np.float64))
    m, m0 = Y.shape
    if m < 1:
        raise InvalidArgument("need at least one base point")
    if not np.all(np.isfinite(Y)):
        raise InvalidArgument("base points must be finite")
    if not A > np.abs(Y).max() + 1:
        raise InvalidArgument(f"need A > max |y|_inf + 1 = {np.abs(Y).max() + 1}, got A={A}")
    if not B > A:
        raise InvalidArgument(f"need B > A, got A={A}, B={B}")
    for bc in base_family:
        if bc.net.spec.widths[0] != m0 or bc.net.spec.widths[-1] != 1:
            raise InvalidArgument(f"base nets must map R^{m0} to a scalar")

    outputs = [dnn_forward(bc.net.spec, bc.net.params, Y)[:, 0] for bc in base_family]
    pattern_of = {}
    for idx, (bc, out) in enumerate(zip(base_family, outputs)):
        code = sum(1 << t for t in range(m) if out[t] > bc.threshold)
        pattern_of.setdefault(code, idx)
    missing = [c for c in range(2 ** m) if c not in pattern_of]
    if missing:
        raise InvalidArgument(f"base family does not shatter the base points; missing labelings {missing[:8]}")

    lo, hi = np.full(m0, float(A)), np.full(m0, float(B))
    centre = (lo + hi) / 2
    e = g.identity
    functions = []
    for y in Y:
        v = np.repeat(centre[:, None], g.r, axis=1)
        v[:, e] = y
        functions.append(Signal(v))

    classifiers = []
    t_hats = []
    for code in range(2 ** m):
        bc = base_family[pattern_of[code]]
        depth = max(bc.net.spec.L, 2)
        base = _pad_depth(bc.net, depth)
        box = box_indicator_net(m0, A, B, depth)
        t_hat = float(interval_upper_bound(bc.net, lo, hi)[0])
        t_hat = t_hat * (1 + 1e-9) + 1e-12
        t_hats.append(t_hat)
        weights, biases, widths = _stack_parallel(base, box)
        b = bc.threshold
        weights.append(np.array([[1.0, -(t_hat - b)]]))
        biases.append(np.array([b]))
        widths.append(1)
        combined = Dnn(DnnSpec(tuple(widths)), DnnParams(tuple(weights), tuple(biases)))
        classifiers.append(Classifier(lift_dnn_to_gcnn(combined, g), 0.0))

    return ShatterInstance(
        group=g,
        functions=tuple(functions),
        classifiers=tuple(classifiers),
        provenance="hypercube-lift",
        params={
            "A": A,
            "B": B,
            "m0": m0,
            "base_points": Y.tolist(),
            "base_index": [pattern_of[c] for c in range(2 ** m)],
            "T_hat": t_hats,
        },
    )


def bump_family(points) -> list[BaseClassifier]:
    """A DNN family shattering any finite set of distinct points in R^m0.

    Points are projected onto a coordinate direction (or a fixed generic
    direction) on which they are distinct; labeling S is realized by a sum of
    1D indicator bumps around the projections of the points in S, thresholded
    at 0.5. Every member has widths (m0, 4m, 1).
    """
    Y = np.atleast_2d(np.asarray(points, dtype=np.float64))
    m, m0 = Y.shape
    direction = None
    for q in range(m0):
        if len(set(Y[:, q].tolist())) == m:
            direction = np.eye(m0)[q]
            break
    if direction is None:
        direction = np.array([1.0 / (q + 1.5) for q in range(m0)])
        if len(set((Y @ direction).tolist())) != m:
            raise InvalidArgument("points are not separable by the fixed projection")
    proj = Y @ direction
    gap = np.min(np.diff(np.sort(proj))) if m > 1 else 1.0
    eta = gap / 3
    family = []
    for code in range(2 ** m):
        w1 = np.repeat(direction[None, :], 4 * m, axis=0)
        b1 = np.concatenate([[p - 2 * eta, p - eta, p + eta, p + 2 * eta] for p in proj])
        on = np.array([code >> t & 1 for t in range(m)], dtype=np.float64)
        w2 = (np.repeat(on, 4) * np.tile([1.0, -1.0, -1.0, 1.0], m) / eta)[None, :]
        net = Dnn(DnnSpec((m0, 4 * m, 1)), DnnParams((w1, w2), (b1, np.zeros(1))))
        family.append(BaseClassifier(net, 0.5))
    return family
