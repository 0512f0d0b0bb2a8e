"""Command-line front-end: ``gcnnvc bounds|shatter|lift-check|invariance|selftest|run|replay``.

Exit status is 0 on success, 1 when a verification fails and 2 on malformed
input. Reports are JSON by default; ``--format csv`` emits a flat projection
with a fixed column order. Every JSON report embeds its run config and spec,
so ``gcnnvc replay REPORT`` can recompute it and compare.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import sys
from pathlib import Path
from typing import Any

import click
import numpy as np

from gcnnvc import __version__
from gcnnvc.acceptance import DEFAULT_SEED, RNG_NAME, canonical_json, selftest
from gcnnvc.bounds import BOUND_CSV_COLUMNS, BoundViolation, bound_report
from gcnnvc.config import (
    RunConfig,
    SpecError,
    load_constants,
    load_dnn,
    load_gcnn,
    make_basis,
    make_dnn_params,
    make_gcnn_params,
    read_json,
)
from gcnnvc.constructions import (
    ShatterInstance,
    build_composite_instance,
    build_hypercube_lift,
    build_shatter_instance,
    bump_family,
    lift_dnn_to_gcnn,
)
from gcnnvc.errors import GcnnvcError, ResourceLimit, UnsupportedOperation
from gcnnvc.groups import parse_group
from gcnnvc.network import Dnn
from gcnnvc.verify import SHATTER_CSV_COLUMNS, verify_invariance, verify_lift_equality, verify_shattering

CHECK_CSV_COLUMNS = ("max_abs", "max_rel", "passed", "trials")
SELFTEST_CSV_COLUMNS = ("number", "name", "passed", "wall_time")


# -- command bodies -------------------------------------------------------------------------


def _spec_doc(cfg: RunConfig) -> dict | None:
    if cfg.spec_path is None:
        return None
    doc = read_json(cfg.spec_path)
    if not isinstance(doc, dict):
        raise SpecError(cfg.spec_path, "top level must be a JSON object")
    return doc


def _need(doc: dict | None, cmd: str) -> dict:
    if doc is None:
        raise SpecError("--spec", f"{cmd} needs a spec file")
    return doc


def _bounds(cfg: RunConfig, doc: dict | None):
    doc = _need(doc, "bounds")
    loaded = load_gcnn(doc)
    constants = cfg.constants if cfg.constants is not None else load_constants(doc)
    opts = cfg.options or {}
    try:
        rep = bound_report(loaded.spec, m=opts.get("m"), constants=constants)
    except BoundViolation as exc:
        return {"error": str(exc)}, False, None
    return rep.to_dict(), rep.comparison_holds, (BOUND_CSV_COLUMNS, [rep.csv_row()])


def _build_instance(opts: dict) -> ShatterInstance:
    if opts.get("load_instance"):
        return ShatterInstance.from_dict(read_json(opts["load_instance"]))
    g = parse_group(opts.get("group", "cyclic:8"))
    kind = opts.get("construction", "single")
    if kind == "single":
        return build_shatter_instance(g, opts.get("A", 0.0), opts.get("B", 1.0))
    if kind == "composite":
        return build_composite_instance(g, opts.get("blocks", 1))
    if kind == "hypercube":
        points = opts.get("points")
        if points is None:
            raise SpecError("--points", "hypercube construction needs base points")
        A = opts.get("A", float(np.abs(np.asarray(points)).max()) + 2.0)
        B = opts.get("B", A + 1.0)
        return build_hypercube_lift(points, bump_family(points), g, A, B)
    raise SpecError("--construction", f"unknown construction {kind!r}")


def _shatter(cfg: RunConfig, doc: dict | None):
    opts = dict(cfg.options or {})
    inst = _build_instance(opts)
    if opts.get("save_instance"):
        Path(opts["save_instance"]).write_text(canonical_json(inst.to_dict()))
    rng = cfg.rng()
    rep = verify_shattering(inst, budget=opts.get("budget", 20), sample=opts.get("sample"), rng=rng)
    result = rep.to_dict()
    result["instance_params"] = inst.params
    return result, rep.success, (SHATTER_CSV_COLUMNS, [rep.csv_row()])


def _check_rows(res):
    d = res.to_dict()
    return CHECK_CSV_COLUMNS, [[repr(d[c]) if isinstance(d[c], float) else d[c] for c in CHECK_CSV_COLUMNS]]


def _lift_check(cfg: RunConfig, doc: dict | None):
    doc = _need(doc, "lift-check")
    spec, g = load_dnn(doc)
    rng = cfg.rng()
    dnn = Dnn(spec, make_dnn_params(doc, spec, rng))
    res = verify_lift_equality(dnn, lift_dnn_to_gcnn(dnn, g), g, cfg.trials, rng)
    return {**res.to_dict(), "group": g.label, "widths": list(spec.widths)}, res.passed, _check_rows(res)


def _invariance(cfg: RunConfig, doc: dict | None):
    doc = _need(doc, "invariance")
    loaded = load_gcnn(doc)
    rng = cfg.rng()
    basis = make_basis(loaded, rng)
    params = make_gcnn_params(doc, loaded.spec, rng)
    res = verify_invariance(loaded.spec, params, basis, loaded.group, cfg.trials, rng)
    return {**res.to_dict(), "group": loaded.group.label}, res.passed, _check_rows(res)


def _selftest(cfg: RunConfig, doc: dict | None):
    rep = selftest(cfg.seed)
    rows = [[c["number"], c["name"], c["passed"], repr(c["wall_time"])] for c in rep["criteria"]]
    return rep, rep["passed"], (SELFTEST_CSV_COLUMNS, rows)


_COMMANDS = {
    "bounds": _bounds,
    "shatter": _shatter,
    "lift-check": _lift_check,
    "invariance": _invariance,
    "selftest": _selftest,
}


def _strip_times(obj):
    if isinstance(obj, dict):
        return {k: _strip_times(v) for k, v in obj.items() if k not in ("wall_time", "timestamp")}
    if isinstance(obj, list):
        return [_strip_times(v) for v in obj]
    return obj


def execute(cfg: RunConfig, timestamps: bool = True, doc: dict | None = None) -> tuple[dict, bool, Any]:
    """Run one config; returns (report, passed, csv projection)."""
    if doc is None:
        doc = _spec_doc(cfg)
    result, passed, table = _COMMANDS[cfg.command](cfg, doc)
    report = {
        "tool": "gcnnvc",
        "version": __version__,
        "command": cfg.command,
        "rng": RNG_NAME,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "spec": doc,
        "passed": bool(passed),
        "result": result,
    }
    if timestamps:
        report["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    else:
        report = _strip_times(report)
    return report, bool(passed), table


def render(cfg: RunConfig, report: dict, table) -> str:
    if cfg.output_format == "json" or table is None:
        return canonical_json(report) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table[0])
    writer.writerows(table[1])
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out is None:
        click.echo(text, nl=False)
    else:
        Path(out).write_text(text)


def _run_and_exit(cfg: RunConfig, timestamps: bool) -> None:
    try:
        report, passed, table = execute(cfg, timestamps)
        text = render(cfg, report, table)
    except (SpecError, ResourceLimit, UnsupportedOperation, GcnnvcError, ValueError, KeyError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    _emit(text, cfg.output_path)
    sys.exit(0 if passed else 1)


# -- click wiring ---------------------------------------------------------------------------


def _common(f):
    f = click.option("--no-timestamp", is_flag=True, help="Omit timestamps and wall times (byte-stable output).")(f)
    f = click.option("--out", "output_path", type=click.Path(dir_okay=False), default=None, help="Write the report here.")(f)
    f = click.option("--format", "output_format", type=click.Choice(["json", "csv"]), default="json", show_default=True)(f)
    f = click.option("--trials", type=click.IntRange(min=1), default=100, show_default=True)(f)
    f = click.option("--seed", type=click.IntRange(0, 2 ** 64 - 1), default=DEFAULT_SEED, show_default=True)(f)
    return f


def _spec_option(required: bool):
    return click.option(
        "--spec", "spec_path", type=click.Path(exists=True, dir_okay=False), required=required,
        help="Architecture spec (JSON).",
    )


def _parse_constants(values) -> dict[str, float] | None:
    if not values:
        return None
    out = {}
    for item in values:
        key, sep, val = item.partition("=")
        if not sep or key not in ("c", "C"):
            raise click.BadParameter(f"expected c=<num> or C=<num>, got {item!r}", param_hint="--constant")
        try:
            out[key] = float(val)
        except ValueError:
            raise click.BadParameter(f"not a number: {val!r}", param_hint="--constant") from None
    return out


@click.group()
@click.version_option(__version__, prog_name="gcnnvc")
def main():
    """VC-dimension bounds and shattering certificates for group-equivariant CNNs."""


@main.command()
@_spec_option(required=True)
@_common
@click.option("--constant", "constants", multiple=True, help="Sandwich constant, e.g. c=0.1 or C=10.")
@click.option("--m", type=click.IntRange(min=1), default=None, help="Sample size for growth-function values.")
def bounds(spec_path, seed, trials, output_format, output_path, no_timestamp, constants, m):
    """Evaluate every closed-form bound for one architecture."""
    cfg = RunConfig("bounds", spec_path, seed, output_format, output_path, trials,
                    _parse_constants(constants), {"m": m} if m else None)
    _run_and_exit(cfg, not no_timestamp)


@main.command()
@_spec_option(required=False)
@_common
@click.option("--group", default="cyclic:8", show_default=True, help="Group descriptor.")
@click.option("--construction", type=click.Choice(["single", "composite", "hypercube"]), default="single",
              show_default=True)
@click.option("-A", "A", type=float, default=None, help="Interval / hypercube lower end.")
@click.option("-B", "B", type=float, default=None, help="Interval / hypercube upper end.")
@click.option("--blocks", type=click.IntRange(min=1), default=1, show_default=True, help="Composite block count W.")
@click.option("--points", default=None, help='Hypercube base points as JSON, e.g. "[[0.5],[-0.5]]".')
@click.option("--budget", type=click.IntRange(min=0), default=20, show_default=True,
              help="Largest m verified exhaustively.")
@click.option("--sample", type=click.IntRange(min=1), default=None, help="Labelings to sample above the budget.")
@click.option("--save-instance", type=click.Path(dir_okay=False), default=None)
@click.option("--load-instance", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Verify a saved instance instead of building one.")
def shatter(spec_path, seed, trials, output_format, output_path, no_timestamp, group, construction, A, B, blocks,
            points, budget, sample, save_instance, load_instance):
    """Build a shattering construction and verify it by enumeration."""
    opts: dict[str, Any] = {"group": group, "construction": construction, "blocks": blocks, "budget": budget}
    if A is not None:
        opts["A"] = A
    if B is not None:
        opts["B"] = B
    if points is not None:
        try:
            opts["points"] = json.loads(points)
        except json.JSONDecodeError as exc:
            raise click.BadParameter(str(exc), param_hint="--points") from None
    for key, val in (("sample", sample), ("save_instance", save_instance), ("load_instance", load_instance)):
        if val is not None:
            opts[key] = val
    cfg = RunConfig("shatter", spec_path, seed, output_format, output_path, trials, None, opts)
    _run_and_exit(cfg, not no_timestamp)


@main.command("lift-check")
@_spec_option(required=True)
@_common
def lift_check(spec_path, seed, trials, output_format, output_path, no_timestamp):
    """Compare a DNN's lifted GCNN against the pointwise double-loop sum."""
    cfg = RunConfig("lift-check", spec_path, seed, output_format, output_path, trials)
    _run_and_exit(cfg, not no_timestamp)


@main.command()
@_spec_option(required=True)
@_common
def invariance(spec_path, seed, trials, output_format, output_path, no_timestamp):
    """Check that a GCNN's pooled output ignores the input's group action."""
    cfg = RunConfig("invariance", spec_path, seed, output_format, output_path, trials)
    _run_and_exit(cfg, not no_timestamp)


@main.command("selftest")
@_common
def selftest_cmd(seed, trials, output_format, output_path, no_timestamp):
    """Run the full acceptance corpus; one PASS/FAIL line per criterion goes to stderr."""
    cfg = RunConfig("selftest", None, seed, output_format, output_path, trials)
    try:
        report, passed, table = execute(cfg, not no_timestamp)
    except GcnnvcError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    for c in report["result"]["criteria"]:
        click.echo(f"[{'PASS' if c['passed'] else 'FAIL'}] {c['number']:2d} {c['name']}", err=True)
    _emit(render(cfg, report, table), output_path)
    sys.exit(0 if passed else 1)


@main.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--no-timestamp", is_flag=True)
def run(config_path, no_timestamp):
    """Run a RunConfig JSON file (fields: command, spec_path, seed, output_format, ...)."""
    try:
        cfg = RunConfig.from_dict(read_json(config_path))
    except (SpecError, TypeError) as exc:
        click.echo(f"error: {config_path}: {exc}", err=True)
        sys.exit(2)
    _run_and_exit(cfg, not no_timestamp)


@main.command()
@click.argument("report_path", type=click.Path(exists=True, dir_okay=False))
def replay(report_path):
    """Recompute a JSON report from its embedded config and spec; exit 1 if it differs."""
    try:
        old = read_json(report_path)
        if not isinstance(old, dict) or "config" not in old:
            raise SpecError(report_path, "not a gcnnvc JSON report (no config field)")
        cfg = RunConfig.from_dict(old["config"])
        if old.get("rng", RNG_NAME) != RNG_NAME:
            click.echo(f"warning: report used rng {old['rng']}, replaying with {RNG_NAME}", err=True)
        new, _, _ = execute(cfg, timestamps=False, doc=old.get("spec"))
    except (GcnnvcError, TypeError, ValueError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    same = canonical_json(_strip_times(old)) == canonical_json(new)
    click.echo(json.dumps({"report": report_path, "identical": same}))
    sys.exit(0 if same else 1)


if __name__ == "__main__":
    main()
