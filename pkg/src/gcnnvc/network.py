"""GCNN and ReLU DNN forward passes and parameter counting."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from gcnnvc.errors import InvalidArgument
from gcnnvc.groups import DiscretizedGroup
from gcnnvc.kernels import KernelBasis, Signal, correlation_matrices

__all__ = [
    "GcnnSpec",
    "GcnnParams",
    "DnnSpec",
    "DnnParams",
    "Gcnn",
    "Dnn",
    "relu",
    "gcnn_feature_maps",
    "gcnn_forward",
    "gcnn_forward_batch",
    "dnn_forward",
    "count_gcnn_weights",
    "count_dnn_weights",
    "random_gcnn_params",
    "random_dnn_params",
]


def relu(x):
    return np.maximum(x, 0.0)


def _widths(widths: Sequence[int]) -> tuple[int, ...]:
    widths = tuple(int(m) for m in widths)
    if len(widths) < 2:
        raise InvalidArgument("need at least an input and one layer width")
    if min(widths) < 1:
        raise InvalidArgument(f"all widths must be >= 1, got {widths}")
    return widths


@dataclass(frozen=True)
class GcnnSpec:
    """Architecture of the class H(k, m_0, ..., m_L, r)."""

    k: int
    widths: tuple[int, ...]
    r: int

    def __post_init__(self):
        object.__setattr__(self, "widths", _widths(self.widths))
        if self.k < 1:
            raise InvalidArgument(f"kernel dimension k must be >= 1, got {self.k}")
        if self.r < 1:
            raise InvalidArgument(f"resolution r must be >= 1, got {self.r}")

    @property
    def L(self) -> int:
        return len(self.widths) - 1

    def to_dict(self) -> dict[str, Any]:
        return {"k": self.k, "widths": list(self.widths), "r": self.r}


@dataclass(frozen=True)
class DnnSpec:
    """Architecture of the class F(m_0, ..., m_L); every layer applies ReLU."""

    widths: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "widths", _widths(self.widths))

    @property
    def L(self) -> int:
        return len(self.widths) - 1

    def to_dict(self) -> dict[str, Any]:
        return {"widths": list(self.widths)}


def _as_layers(arrays, what: str) -> tuple[np.ndarray, ...]:
    out = []
    for a in arrays:
        a = np.array(a, dtype=np.float64)
        if not np.all(np.isfinite(a)):
            raise InvalidArgument(f"{what} contain non-finite entries")
        a.setflags(write=False)
        out.append(a)
    return tuple(out)


@dataclass(frozen=True, eq=False)
class GcnnParams:
    """weights[l] has shape (m_l, m_{l+1}, k): kernel coefficients w_ij; biases[l] has shape (m_{l+1},)."""

    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", _as_layers(self.weights, "GCNN weights"))
        object.__setattr__(self, "biases", _as_layers(self.biases, "GCNN biases"))

    def check(self, spec: GcnnSpec) -> None:
        if len(self.weights) != spec.L or len(self.biases) != spec.L:
            raise InvalidArgument(f"expected {spec.L} layers of parameters")
        for layer, (w, b) in enumerate(zip(self.weights, self.biases)):
            m_in, m_out = spec.widths[layer], spec.widths[layer + 1]
            if w.shape != (m_in, m_out, spec.k) or b.shape != (m_out,):
                raise InvalidArgument(
                    f"layer {layer}: expected weights {(m_in, m_out, spec.k)} and biases {(m_out,)}, "
                    f"got {w.shape} and {b.shape}"
                )

    def to_dict(self) -> dict[str, Any]:
        return {"weights": [w.tolist() for w in self.weights], "biases": [b.tolist() for b in self.biases]}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> GcnnParams:
        return cls(tuple(d["weights"]), tuple(d["biases"]))


@dataclass(frozen=True, eq=False)
class DnnParams:
    """weights[l] has shape (m_{l+1}, m_l); unit j of layer l+1 computes relu(W[j] . z - b[j])."""

    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", _as_layers(self.weights, "DNN weights"))
        object.__setattr__(self, "biases", _as_layers(self.biases, "DNN biases"))

    def check(self, spec: DnnSpec) -> None:
        if len(self.weights) != spec.L or len(self.biases) != spec.L:
            raise InvalidArgument(f"expected {spec.L} layers of parameters")
        for layer, (w, b) in enumerate(zip(self.weights, self.biases)):
            m_in, m_out = spec.widths[layer], spec.widths[layer + 1]
            if w.shape != (m_out, m_in) or b.shape != (m_out,):
                raise InvalidArgument(
                    f"layer {layer}: expected weights {(m_out, m_in)} and biases {(m_out,)}, "
                    f"got {w.shape} and {b.shape}"
                )

    def to_dict(self) -> dict[str, Any]:
        return {"weights": [w.tolist() for w in self.weights], "biases": [b.tolist() for b in self.biases]}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> DnnParams:
        return cls(tuple(d["weights"]), tuple(d["biases"]))


@dataclass(frozen=True, eq=False)
class Gcnn:
    """A concrete GCNN: architecture, parameters and the fixed kernel basis."""

    spec: GcnnSpec
    params: GcnnParams
    basis: KernelBasis

    def __post_init__(self):
        self.params.check(self.spec)
        if self.basis.k != self.spec.k:
            raise InvalidArgument(f"basis has k={self.basis.k}, spec has k={self.spec.k}")

    def __call__(self, g: DiscretizedGroup, f: Signal) -> float:
        return gcnn_forward(self.spec, self.params, self.basis, g, f)

    def to_dict(self) -> dict[str, Any]:
        return {"spec": self.spec.to_dict(), "params": self.params.to_dict(), "basis": self.basis.to_dict()}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Gcnn:
        s = d["spec"]
        return cls(
            GcnnSpec(int(s["k"]), tuple(s["widths"]), int(s["r"])),
            GcnnParams.from_dict(d["params"]),
            KernelBasis.from_dict(d["basis"]),
        )


@dataclass(frozen=True, eq=False)
class Dnn:
    spec: DnnSpec
    params: DnnParams

    def __post_init__(self):
        self.params.check(self.spec)

    def __call__(self, x) -> np.ndarray:
        return dnn_forward(self.spec, self.params, x)

    def to_dict(self) -> dict[str, Any]:
        return {"spec": self.spec.to_dict(), "params": self.params.to_dict()}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Dnn:
        return cls(DnnSpec(tuple(d["spec"]["widths"])), DnnParams.from_dict(d["params"]))


def _check_gcnn_inputs(spec, params, basis, g, values) -> None:
    params.check(spec)
    if basis.k != spec.k:
        raise InvalidArgument(f"basis has k={basis.k}, spec has k={spec.k}")
    if g.r != spec.r:
        raise InvalidArgument(f"group resolution {g.r} does not match spec r={spec.r}")
    if values.shape[-2:] != (spec.widths[0], spec.r):
        raise InvalidArgument(
            f"input must have shape (..., {spec.widths[0]}, {spec.r}), got {values.shape}"
        )


def _layers(spec, params, mats, h):
    maps = [h]
    for w, b in zip(params.weights, params.biases):
        # corr[..., s, i, a] = (K_s * h_i)(g_a)
        corr = np.einsum("sab,...ib->...sia", mats, h)
        pre = np.einsum("ijs,...sia->...ja", w, corr) - b[:, None]
        h = relu(pre)
        maps.append(h)
    return maps


def gcnn_feature_maps(
    spec: GcnnSpec, params: GcnnParams, basis: KernelBasis, g: DiscretizedGroup, f: Signal
) -> list[np.ndarray]:
    """Per-layer feature maps h_l as (m_l, r) arrays; entry 0 is the input itself."""
    values = f.values if isinstance(f, Signal) else np.asarray(f, dtype=np.float64)
    _check_gcnn_inputs(spec, params, basis, g, values)
    return _layers(spec, params, correlation_matrices(g, basis), values)


def gcnn_forward_batch(
    spec: GcnnSpec, params: GcnnParams, basis: KernelBasis, g: DiscretizedGroup, values: np.ndarray
) -> np.ndarray:
    """Pooled outputs for a stack of inputs of shape (batch, m_0, r)."""
    values = np.asarray(values, dtype=np.float64)
    _check_gcnn_inputs(spec, params, basis, g, values)
    last = _layers(spec, params, correlation_matrices(g, basis), values)[-1]
    return last.sum(axis=(-2, -1))


def gcnn_forward(
    spec: GcnnSpec, params: GcnnParams, basis: KernelBasis, g: DiscretizedGroup, f: Signal
) -> float:
    """Global sum pooling of the last layer: sum_i sum_g h_{L,i}(g)."""
    return float(gcnn_feature_maps(spec, params, basis, g, f)[-1].sum())


def dnn_forward(spec: DnnSpec, params: DnnParams, x) -> np.ndarray:
    params.check(spec)
    z = np.asarray(x, dtype=np.float64)
    if z.shape[-1:] != (spec.widths[0],):
        raise InvalidArgument(f"DNN input must have trailing dimension {spec.widths[0]}, got {z.shape}")
    for w, b in zip(params.weights, params.biases):
        z = relu(z @ w.T - b)
    return z


def count_gcnn_weights(spec: GcnnSpec) -> list[int]:
    """Cumulative parameter counts W_l = sum_{j<=l} m_j (k m_{j-1} + 1)."""
    counts, total = [], 0
    for prev, cur in zip(spec.widths[:-1], spec.widths[1:]):
        total += cur * (spec.k * prev + 1)
        counts.append(total)
    return counts


def count_dnn_weights(spec: DnnSpec) -> list[int]:
    """Cumulative parameter counts W_l(F) = sum_{j<=l} m_j (m_{j-1} + 1)."""
    counts, total = [], 0
    for prev, cur in zip(spec.widths[:-1], spec.widths[1:]):
        total += cur * (prev + 1)
        counts.append(total)
    return counts


def random_gcnn_params(spec: GcnnSpec, rng: np.random.Generator, scale: float = 1.0) -> GcnnParams:
    weights, biases = [], []
    for prev, cur in zip(spec.widths[:-1], spec.widths[1:]):
        weights.append(rng.normal(0.0, scale, size=(prev, cur, spec.k)))
        biases.append(rng.normal(0.0, scale, size=cur))
    return GcnnParams(tuple(weights), tuple(biases))


def random_dnn_params(spec: DnnSpec, rng: np.random.Generator, scale: float = 1.0) -> DnnParams:
    weights, biases = [], []
    for prev, cur in zip(spec.widths[:-1], spec.widths[1:]):
        weights.append(rng.normal(0.0, scale, size=(cur, prev)))
        biases.append(rng.normal(0.0, scale, size=cur))
    return DnnParams(tuple(weights), tuple(biases))
