"""Finite (discretized) groups stored as index tables.

Elements are integers ``0..r-1``. Every group carries a *difference table*
``diff_table[i, j]`` holding the index of ``g_i^{-1} g_j`` inside a difference
domain ``D``. For closed groups ``D`` is the group itself; for the grid
translation discretization ``D`` is the set of all offset vectors, which lets
kernels be zero-extended outside the image exactly as with zero padding.

Canonical enumeration orders
----------------------------
cyclic:n      element i is the rotation by i (compose = addition mod n)
dihedral:n    index s*n + k is r^k s^s (rotation k after optional reflection)
grid:HxW      index row*W + col (row-major); offsets (dr, dc) are indexed
              (dr + H - 1) * (2W - 1) + (dc + W - 1)
product:(a,b) index i*|b| + j is the pair (a_i, b_j)
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from gcnnvc.errors import InvalidArgument, UnsupportedOperation

__all__ = [
    "DiscretizedGroup",
    "build_cyclic",
    "build_dihedral",
    "build_grid_translation",
    "build_product",
    "from_tables",
    "validate_group_axioms",
    "left_action_permutation",
    "parse_group",
    "group_from_dict",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DiscretizedGroup:
    r: int
    identity: int
    diff_count: int
    diff_table: np.ndarray
    closed: bool
    compose_table: np.ndarray | None = None
    inverse_table: np.ndarray | None = None
    label: str = ""
    descriptor: dict[str, Any] | None = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "diff_table", _frozen(np.asarray(self.diff_table, dtype=np.int64)))
        if self.compose_table is not None:
            object.__setattr__(self, "compose_table", _frozen(np.asarray(self.compose_table, dtype=np.int64)))
        if self.inverse_table is not None:
            object.__setattr__(self, "inverse_table", _frozen(np.asarray(self.inverse_table, dtype=np.int64)))
        if self.diff_table.shape != (self.r, self.r):
            raise InvalidArgument(f"diff_table must be {self.r}x{self.r}, got {self.diff_table.shape}")

    @property
    def identity_diff(self) -> int:
        """Index in the difference domain of ``e`` (the difference of an element with itself)."""
        return int(self.diff_table[self.identity, self.identity])

    def compose(self, i: int, j: int) -> int:
        self._require_closed("compose")
        return int(self.compose_table[i, j])

    def inverse(self, i: int) -> int:
        self._require_closed("inverse")
        return int(self.inverse_table[i])

    def _require_closed(self, what: str) -> None:
        if not self.closed:
            raise UnsupportedOperation(f"{what} requires a closed group; {self.label or 'group'} is not closed")

    def to_dict(self) -> dict[str, Any]:
        if self.descriptor is not None:
            return dict(self.descriptor)
        if not self.closed:
            raise UnsupportedOperation("only closed groups without a builder descriptor serialize as tables")
        return {
            "kind": "tables",
            "identity": self.identity,
            "compose": self.compose_table.tolist(),
            "label": self.label,
        }


def _closed_group(compose: np.ndarray, identity: int, label: str, descriptor) -> DiscretizedGroup:
    compose = np.asarray(compose, dtype=np.int64)
    r = compose.shape[0]
    inverse = np.full(r, -1, dtype=np.int64)
    for i in range(r):
        hits = np.flatnonzero(compose[i] == identity)
        if hits.size:
            inverse[i] = hits[0]
    # Rows without an inverse keep -1; validate_group_axioms reports them.
    safe_inv = np.where(inverse >= 0, inverse, 0)
    diff = compose[safe_inv, :]
    return DiscretizedGroup(
        r=r,
        identity=identity,
        diff_count=r,
        diff_table=diff,
        closed=True,
        compose_table=compose,
        inverse_table=inverse,
        label=label,
        descriptor=descriptor,
    )


def from_tables(compose, identity: int = 0, label: str = "tables") -> DiscretizedGroup:
    """Wrap an arbitrary r x r composition table as a closed group (no axiom check)."""
    compose = np.asarray(compose, dtype=np.int64)
    if compose.ndim != 2 or compose.shape[0] != compose.shape[1] or compose.shape[0] == 0:
        raise InvalidArgument("composition table must be a non-empty square array")
    r = compose.shape[0]
    if compose.min() < 0 or compose.max() >= r:
        raise InvalidArgument("composition table entries must lie in [0, r)")
    if not 0 <= identity < r:
        raise InvalidArgument(f"identity {identity} out of range")
    return _closed_group(compose, identity, label, None)


def build_cyclic(n: int) -> DiscretizedGroup:
    if n < 1:
        raise InvalidArgument(f"cyclic group needs n >= 1, got {n}")
    idx = np.arange(n)
    compose = (idx[:, None] + idx[None, :]) % n
    return _closed_group(compose, 0, f"cyclic:{n}", {"kind": "cyclic", "n": n})


def build_dihedral(n: int) -> DiscretizedGroup:
    if n < 3:
        raise InvalidArgument(f"dihedral group needs n >= 3, got {n}")
    r = 2 * n
    compose = np.empty((r, r), dtype=np.int64)
    # (r^a s^p)(r^b s^q) = r^(a + (-1)^p b) s^(p+q)
    for x in range(r):
        p, a = divmod(x, n)
        for y in range(r):
            q, b = divmod(y, n)
            k = (a + (b if p == 0 else -b)) % n
            compose[x, y] = ((p + q) % 2) * n + k
    return _closed_group(compose, 0, f"dihedral:{n}", {"kind": "dihedral", "n": n})


def build_grid_translation(height: int, width: int) -> DiscretizedGroup:
    if height < 1 or width < 1:
        raise InvalidArgument(f"grid dimensions must be positive, got {height}x{width}")
    rows, cols = np.divmod(np.arange(height * width), width)
    d_row = rows[None, :] - rows[:, None]
    d_col = cols[None, :] - cols[:, None]
    diff = (d_row + height - 1) * (2 * width - 1) + (d_col + width - 1)
    return DiscretizedGroup(
        r=height * width,
        identity=0,
        diff_count=(2 * height - 1) * (2 * width - 1),
        diff_table=diff,
        closed=False,
        label=f"grid:{height}x{width}",
        descriptor={"kind": "grid", "height": height, "width": width},
    )


def grid_shape(g: DiscretizedGroup) -> tuple[int, int]:
    if not g.descriptor or g.descriptor.get("kind") != "grid":
        raise InvalidArgument(f"{g.label or 'group'} is not a grid translation group")
    return g.descriptor["height"], g.descriptor["width"]


def build_product(a: DiscretizedGroup, b: DiscretizedGroup) -> DiscretizedGroup:
    if not (a.closed and b.closed):
        raise UnsupportedOperation("direct product needs two closed groups")
    ia, ib = np.divmod(np.arange(a.r * b.r), b.r)
    compose = a.compose_table[ia[:, None], ia[None, :]] * b.r + b.compose_table[ib[:, None], ib[None, :]]
    descriptor = None
    if a.descriptor is not None and b.descriptor is not None:
        descriptor = {"kind": "product", "factors": [a.to_dict(), b.to_dict()]}
    return _closed_group(
        compose, a.identity * b.r + b.identity, f"product:({a.label},{b.label})", descriptor
    )


def validate_group_axioms(g: DiscretizedGroup) -> list[str]:
    """Exhaustively check closure, identity, inverses and associativity.

    Returns a list of human-readable violations; an empty list means the
    table is a group.
    """
    g._require_closed("validate_group_axioms")
    c = g.compose_table
    r, e = g.r, g.identity
    problems: list[str] = []

    if c.shape != (r, r) or c.min() < 0 or c.max() >= r:
        problems.append("closure: composition table has entries outside [0, r)")
        return problems

    idx = np.arange(r)
    for i in np.flatnonzero(c[e, :] != idx):
        problems.append(f"identity: e*g{i} = g{c[e, i]}")
    for i in np.flatnonzero(c[:, e] != idx):
        problems.append(f"identity: g{i}*e = g{c[i, e]}")

    inv = g.inverse_table
    for i in range(r):
        j = inv[i]
        if j < 0:
            problems.append(f"inverse: g{i} has no right inverse")
        elif c[j, i] != e or c[i, j] != e:
            problems.append(f"inverse: g{i} and g{j} are not two-sided inverses")

    # (x*y)*z vs x*(y*z) for all triples, one x-slice at a time
    for x in range(r):
        left = c[c[x, :], :]           # left[y, z] = (x*y)*z
        right = c[x, c]                # right[y, z] = x*(y*z)
        bad = np.argwhere(left != right)
        if bad.size:
            y, z = bad[0]
            problems.append(
                f"associativity: {bad.shape[0]} failures with x=g{x}, e.g. (g{x}*g{y})*g{z} != g{x}*(g{y}*g{z})"
            )
    return problems


def left_action_permutation(g: DiscretizedGroup, elem: int) -> np.ndarray:
    """Permutation pi with (elem . f)(g_j) = f(g_pi(j)), i.e. pi(j) = index of elem^{-1} g_j."""
    g._require_closed("left_action_permutation")
    if not 0 <= elem < g.r:
        raise InvalidArgument(f"element {elem} out of range for r={g.r}")
    return np.array(g.compose_table[g.inverse_table[elem], :])


_ATOM = re.compile(r"^\s*(cyclic|dihedral|grid)\s*:\s*([0-9x]+)\s*$")


def _split_product(body: str) -> tuple[str, str]:
    depth = 0
    for pos, ch in enumerate(body):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "," and depth == 0:
            return body[:pos], body[pos + 1:]
    raise InvalidArgument(f"product descriptor needs two factors: {body!r}")


def parse_group(text: str) -> DiscretizedGroup:
    """Build a group from a descriptor string: cyclic:N, dihedral:N, grid:HxW, product:(a,b)."""
    text = text.strip()
    if text.startswith("product:"):
        body = text[len("product:"):].strip()
        if not (body.startswith("(") and body.endswith(")")):
            raise InvalidArgument(f"bad product descriptor {text!r}")
        left, right = _split_product(body[1:-1])
        return build_product(parse_group(left), parse_group(right))
    m = _ATOM.match(text)
    if not m:
        raise InvalidArgument(f"unrecognized group descriptor {text!r}")
    kind, arg = m.groups()
    try:
        if kind == "grid":
            h, w = arg.split("x")
            return build_grid_translation(int(h), int(w))
        return build_cyclic(int(arg)) if kind == "cyclic" else build_dihedral(int(arg))
    except ValueError as exc:
        if isinstance(exc, InvalidArgument):
            raise
        raise InvalidArgument(f"bad group descriptor {text!r}") from exc


def group_from_dict(d: dict[str, Any] | str) -> DiscretizedGroup:
    """Inverse of :meth:`DiscretizedGroup.to_dict`; also accepts descriptor strings."""
    if isinstance(d, str):
        return parse_group(d)
    kind = d.get("kind")
    if kind == "cyclic":
        return build_cyclic(int(d["n"]))
    if kind == "dihedral":
        return build_dihedral(int(d["n"]))
    if kind == "grid":
        return build_grid_translation(int(d["height"]), int(d["width"]))
    if kind == "product":
        a, b = d["factors"]
        return build_product(group_from_dict(a), group_from_dict(b))
    if kind == "tables":
        return from_tables(d["compose"], int(d.get("identity", 0)), d.get("label", "tables"))
    raise InvalidArgument(f"unknown group kind {kind!r}")
