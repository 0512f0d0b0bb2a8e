"""Signals on a discretized group, kernel bases, and G-correlation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from gcnnvc.errors import InvalidArgument
from gcnnvc.groups import DiscretizedGroup, grid_shape, left_action_permutation

__all__ = [
    "Signal",
    "KernelBasis",
    "KernelWeights",
    "g_correlate",
    "correlation_matrices",
    "apply_left_action",
    "identity_indicator_basis",
    "indicator_basis",
    "cnn_window_basis",
]


def _finite_readonly(values, ndim: int, what: str) -> np.ndarray:
    a = np.array(values, dtype=np.float64)
    if a.ndim != ndim:
        raise InvalidArgument(f"{what} must be {ndim}-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidArgument(f"{what} contains non-finite entries")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Signal:
    """A function G^r -> R^channels stored as a (channels, r) table."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim == 1:
            v = v[None, :]
        object.__setattr__(self, "values", _finite_readonly(v, 2, "signal values"))
        if self.values.shape[0] < 1 or self.values.shape[1] < 1:
            raise InvalidArgument("signal needs at least one channel and one element")

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def r(self) -> int:
        return self.values.shape[1]

    def to_dict(self) -> dict[str, Any]:
        return {"channels": self.channels, "r": self.r, "values": self.values.tolist()}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Signal:
        sig = cls(np.asarray(d["values"], dtype=np.float64).reshape(d["channels"], d["r"]))
        return sig


@dataclass(frozen=True, eq=False)
class KernelBasis:
    """k basis functions tabulated on the difference domain: shape (k, diff_count)."""

    basis_values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.basis_values, dtype=np.float64)
        if v.ndim == 1:
            v = v[None, :]
        object.__setattr__(self, "basis_values", _finite_readonly(v, 2, "basis values"))
        if self.k < 1:
            raise InvalidArgument("kernel basis needs k >= 1")

    @property
    def k(self) -> int:
        return self.basis_values.shape[0]

    @property
    def diff_count(self) -> int:
        return self.basis_values.shape[1]

    def to_dict(self) -> dict[str, Any]:
        return {"k": self.k, "diff_count": self.diff_count, "values": self.basis_values.tolist()}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> KernelBasis:
        return cls(np.asarray(d["values"], dtype=np.float64).reshape(d["k"], d["diff_count"]))


@dataclass(frozen=True, eq=False)
class KernelWeights:
    w: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "w", _finite_readonly(np.atleast_1d(self.w), 1, "kernel weights"))


def _check_basis(g: DiscretizedGroup, basis: KernelBasis) -> None:
    if basis.diff_count != g.diff_count:
        raise InvalidArgument(
            f"basis is tabulated on {basis.diff_count} differences, group has {g.diff_count}"
        )


def correlation_matrices(g: DiscretizedGroup, basis: KernelBasis) -> np.ndarray:
    """Stack of (k, r, r) matrices M_s[i, j] = K_s(g_i^{-1} g_j)."""
    _check_basis(g, basis)
    return basis.basis_values[:, g.diff_table]


def g_correlate(g: DiscretizedGroup, basis: KernelBasis, w: KernelWeights, f) -> np.ndarray:
    """(K_w * f)(g_i) = sum_j K_w(g_i^{-1} g_j) f(g_j), without 1/|G| normalization."""
    _check_basis(g, basis)
    weights = w.w if isinstance(w, KernelWeights) else np.atleast_1d(np.asarray(w, dtype=np.float64))
    if weights.shape != (basis.k,):
        raise InvalidArgument(f"expected {basis.k} kernel weights, got shape {weights.shape}")
    if isinstance(f, Signal):
        if f.channels != 1:
            raise InvalidArgument("g_correlate takes a single-channel signal")
        f = f.values[0]
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (g.r,):
        raise InvalidArgument(f"signal has shape {f.shape}, group resolution is {g.r}")
    kernel = weights @ basis.basis_values
    return kernel[g.diff_table] @ f


def apply_left_action(g: DiscretizedGroup, elem: int, f: Signal) -> Signal:
    """(elem . f)(g') = f(elem^{-1} g'), applied channel-wise."""
    if f.r != g.r:
        raise InvalidArgument(f"signal resolution {f.r} does not match group resolution {g.r}")
    perm = left_action_permutation(g, elem)
    return Signal(f.values[:, perm])


def indicator_basis(g: DiscretizedGroup, diffs) -> KernelBasis:
    """One basis function per listed difference index, each the indicator of that difference."""
    diffs = list(diffs)
    values = np.zeros((len(diffs), g.diff_count))
    for s, d in enumerate(diffs):
        if not 0 <= d < g.diff_count:
            raise InvalidArgument(f"difference index {d} out of range")
        values[s, d] = 1.0
    return KernelBasis(values)


def identity_indicator_basis(g: DiscretizedGroup) -> KernelBasis:
    return indicator_basis(g, [g.identity_diff])


def cnn_window_basis(grid: DiscretizedGroup, s: int) -> KernelBasis:
    """s*s indicator basis on the offsets of a centered s x s window.

    Basis functions are ordered row-major over (d_row, d_col) from
    (-(s-1)/2, -(s-1)/2) to ((s-1)/2, (s-1)/2), so weight w[a*s + b]
    multiplies f(row + a - (s-1)/2, col + b - (s-1)/2).
    """
    height, width = grid_shape(grid)
    if s < 1 or s % 2 == 0:
        raise InvalidArgument(f"window size must be odd and positive, got {s}")
    if s > 2 * min(height, width) - 1:
        raise InvalidArgument(f"window {s} exceeds the offset range of a {height}x{width} grid")
    half = (s - 1) // 2
    diffs = [
        (dr + height - 1) * (2 * width - 1) + (dc + width - 1)
        for dr in range(-half, half + 1)
        for dc in range(-half, half + 1)
    ]
    return indicator_basis(grid, diffs)
