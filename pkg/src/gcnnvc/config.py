"""Run configuration and architecture spec files for the command-line front-end.

A spec file is a JSON object::

    {
      "gcnn":   {"k": 1, "widths": [1, 1, 1], "group": "cyclic:2", "basis": "random"},
      "dnn":    {"widths": [2, 3, 1], "group": "dihedral:3"},
      "params": {"seed": 7, "scale": 1.0},
      "constants": {"c": 0.1, "C": 10.0}
    }

Only the sections a command needs must be present. ``gcnn.group`` may be
replaced by ``gcnn.r`` when only bounds are wanted. ``gcnn.basis`` is
``"random"`` (default, drawn from the run seed), ``"identity"`` (k = 1), or an
explicit ``k x |D|`` array. ``params`` is either explicit nested
``{"weights": ..., "biases": ...}`` or ``{"seed": ..., "scale": ...}``; when
absent, parameters are drawn from the run seed.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any

import numpy as np

from gcnnvc.errors import InvalidArgument
from gcnnvc.groups import DiscretizedGroup, parse_group
from gcnnvc.kernels import KernelBasis, identity_indicator_basis
from gcnnvc.network import (
    DnnParams,
    DnnSpec,
    GcnnParams,
    GcnnSpec,
    random_dnn_params,
    random_gcnn_params,
)

COMMANDS = ("bounds", "shatter", "lift-check", "invariance", "selftest")
SEED_MAX = 2 ** 64 - 1


class SpecError(InvalidArgument):
    """A spec or config file is malformed; the message names the line or field."""

    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where


@dataclass(frozen=True)
class RunConfig:
    command: str
    spec_path: str | None = None
    seed: int = 0
    output_format: str = "json"
    output_path: str | None = None
    trials: int = 100
    constants: dict[str, float] | None = None
    options: dict[str, Any] | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise SpecError("command", f"unknown command {self.command!r}; expected one of {COMMANDS}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or not 0 <= self.seed <= SEED_MAX:
            raise SpecError("seed", f"must be an integer in [0, 2^64), got {self.seed!r}")
        if self.output_format not in ("json", "csv"):
            raise SpecError("output_format", f"must be json or csv, got {self.output_format!r}")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise SpecError("trials", f"must be a positive integer, got {self.trials!r}")
        if self.constants is not None:
            unknown = set(self.constants) - {"c", "C"}
            if unknown:
                raise SpecError("constants", f"unknown keys {sorted(unknown)}; only c and C")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> RunConfig:
        if not isinstance(d, dict):
            raise SpecError("config", "must be a JSON object")
        allowed = {f.name for f in fields(cls)}
        unknown = set(d) - allowed
        if unknown:
            raise SpecError("config", f"unknown fields {sorted(unknown)}")
        if "command" not in d:
            raise SpecError("config.command", "missing")
        return cls(**d)

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


def read_json(path: str | Path) -> Any:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: line {exc.lineno}, column {exc.colno}", exc.msg) from None


def _field(d: dict, key: str, where: str, required: bool = True):
    if not isinstance(d, dict):
        raise SpecError(where, "must be a JSON object")
    if key not in d:
        if required:
            raise SpecError(f"{where}.{key}", "missing")
        return None
    return d[key]


def _int(value, where: str, minimum: int = 1) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
        raise SpecError(where, f"must be an integer >= {minimum}, got {value!r}")
    return value


def _widths(value, where: str) -> tuple[int, ...]:
    if not isinstance(value, list) or len(value) < 2:
        raise SpecError(where, f"must be a list of at least two widths, got {value!r}")
    return tuple(_int(v, f"{where}[{i}]") for i, v in enumerate(value))


def _group(value, where: str) -> DiscretizedGroup:
    if not isinstance(value, str):
        raise SpecError(where, f"must be a group descriptor string, got {value!r}")
    try:
        return parse_group(value)
    except InvalidArgument as exc:
        raise SpecError(where, str(exc)) from None


@dataclass
class LoadedGcnn:
    spec: GcnnSpec
    group: DiscretizedGroup | None
    basis_field: Any


def load_gcnn(doc: dict) -> LoadedGcnn:
    sec = _field(doc, "gcnn", "spec")
    k = _int(_field(sec, "k", "gcnn"), "gcnn.k")
    widths = _widths(_field(sec, "widths", "gcnn"), "gcnn.widths")
    group = None
    if "group" in sec:
        group = _group(sec["group"], "gcnn.group")
        r = group.r
        if "r" in sec and sec["r"] != r:
            raise SpecError("gcnn.r", f"{sec['r']!r} disagrees with group resolution {r}")
    elif "r" in sec:
        r = _int(sec["r"], "gcnn.r")
    else:
        raise SpecError("gcnn", "needs either group or r")
    unknown = set(sec) - {"k", "widths", "group", "r", "basis"}
    if unknown:
        raise SpecError("gcnn", f"unknown fields {sorted(unknown)}")
    return LoadedGcnn(GcnnSpec(k, widths, r), group, sec.get("basis", "random"))


def make_basis(loaded: LoadedGcnn, rng: np.random.Generator) -> KernelBasis:
    g, b = loaded.group, loaded.basis_field
    if g is None:
        raise SpecError("gcnn.group", "required for this command")
    if b == "identity":
        if loaded.spec.k != 1:
            raise SpecError("gcnn.basis", "identity basis needs k = 1")
        return identity_indicator_basis(g)
    if b == "random":
        return KernelBasis(rng.uniform(-1.0, 1.0, size=(loaded.spec.k, g.diff_count)))
    try:
        basis = KernelBasis(np.asarray(b, dtype=np.float64))
    except (ValueError, TypeError) as exc:
        raise SpecError("gcnn.basis", str(exc)) from None
    if basis.basis_values.shape != (loaded.spec.k, g.diff_count):
        raise SpecError("gcnn.basis", f"expected shape ({loaded.spec.k}, {g.diff_count})")
    return basis


def _param_source(doc: dict, rng: np.random.Generator):
    sec = doc.get("params")
    if sec is None:
        return None, rng, 1.0
    if not isinstance(sec, dict):
        raise SpecError("params", "must be a JSON object")
    if "weights" in sec or "biases" in sec:
        return sec, None, None
    unknown = set(sec) - {"seed", "scale"}
    if unknown:
        raise SpecError("params", f"unknown fields {sorted(unknown)}")
    scale = sec.get("scale", 1.0)
    if not isinstance(scale, (int, float)) or isinstance(scale, bool) or not scale > 0:
        raise SpecError("params.scale", f"must be a positive number, got {scale!r}")
    if "seed" in sec:
        seed = _int(sec["seed"], "params.seed", minimum=0)
        rng = np.random.default_rng(seed)
    return None, rng, float(scale)


def make_gcnn_params(doc: dict, spec: GcnnSpec, rng: np.random.Generator) -> GcnnParams:
    explicit, prng, scale = _param_source(doc, rng)
    if explicit is None:
        return random_gcnn_params(spec, prng, scale)
    try:
        params = GcnnParams.from_dict(explicit)
        params.check(spec)
    except (KeyError, ValueError, TypeError) as exc:
        raise SpecError("params", str(exc)) from None
    return params


def load_dnn(doc: dict) -> tuple[DnnSpec, DiscretizedGroup]:
    if "dnn" in doc:
        sec = doc["dnn"]
        widths = _widths(_field(sec, "widths", "dnn"), "dnn.widths")
        g_field = sec.get("group", (doc.get("gcnn") or {}).get("group"))
        if g_field is None:
            raise SpecError("dnn.group", "missing")
        return DnnSpec(widths), _group(g_field, "dnn.group")
    loaded = load_gcnn(doc)
    if loaded.group is None:
        raise SpecError("gcnn.group", "required for this command")
    return DnnSpec(loaded.spec.widths), loaded.group


def make_dnn_params(doc: dict, spec: DnnSpec, rng: np.random.Generator) -> DnnParams:
    explicit, prng, scale = _param_source(doc, rng)
    if explicit is None:
        return random_dnn_params(spec, prng, scale)
    try:
        params = DnnParams.from_dict(explicit)
        params.check(spec)
    except (KeyError, ValueError, TypeError) as exc:
        raise SpecError("params", str(exc)) from None
    return params


def load_constants(doc: dict) -> dict[str, float] | None:
    c = doc.get("constants")
    if c is None:
        return None
    if not isinstance(c, dict):
        raise SpecError("constants", "must be a JSON object")
    out = {}
    for key, value in c.items():
        if key not in ("c", "C"):
            raise SpecError(f"constants.{key}", "unknown; only c and C")
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise SpecError(f"constants.{key}", f"must be a number, got {value!r}")
        out[key] = float(value)
    return out
