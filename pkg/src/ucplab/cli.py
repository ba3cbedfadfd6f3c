"""Command-line scenario runner.

    ucplab run <scenario|config.ini> [--out DIR] [--grid N] [--seed S] [--tol T] [--fields]
    ucplab list
    ucplab verify-all [--out DIR]

Exit codes: 0 when every check passes, 1 on a check failure, 2 on a
configuration error. Config files are INI with a ``[scenario]`` section
holding ``name``, an optional ``[params]`` section whose keys must be
parameters of that scenario, and an optional ``[output]`` section with
``dir`` and ``fields``.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .errors import CheckFailure, ConfigError, UcplabError
from .field import GridField
from .scenarios import ALIASES, SCENARIOS, _jsonable

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
OUTPUT_KEYS = {"dir", "fields"}


# -- configuration -----------------------------------------------------------------------

def resolve_name(name: str) -> str:
    name = ALIASES.get(name, name)
    if name not in SCENARIOS:
        raise ConfigError(f"unknown scenario {name!r}; see `ucplab list`")
    return name


def _coerce(key: str, raw: str, default):
    """Parse a config string to the type of the scenario default."""
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            low = raw.lower()
            if low not in ("true", "false", "yes", "no", "1", "0", "on", "off"):
                raise ValueError(raw)
            return low in ("true", "yes", "1", "on")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            kind = type(default[0]) if default else float
            return tuple(kind(v) for v in raw.replace(",", " ").split())
        return raw
    except ValueError:
        raise ConfigError(f"parameter {key!r}: cannot parse {raw!r} as "
                          f"{type(default).__name__}") from None


def resolve_params(name: str, overrides: dict | None = None) -> dict:
    """Scenario defaults updated by ``overrides`` (strings are parsed; others type-checked)."""
    defaults = SCENARIOS[name].defaults
    params = dict(defaults)
    for key, val in (overrides or {}).items():
        if key not in defaults:
            raise ConfigError(f"scenario {name!r} has no parameter {key!r}; "
                              f"known: {', '.join(sorted(defaults))}")
        params[key] = _coerce(key, val, defaults[key]) if isinstance(val, str) else val
    return params


def parse_config(path) -> tuple[str, dict, dict]:
    """(scenario name, params, output options) from an INI file."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    extra = set(cp.sections()) - {"scenario", "params", "output"}
    if extra:
        raise ConfigError(f"{path}: unknown sections {sorted(extra)}")
    if not cp.has_option("scenario", "name"):
        raise ConfigError(f"{path}: missing [scenario] name")
    if set(cp["scenario"]) - {"name"}:
        raise ConfigError(f"{path}: [scenario] accepts only 'name'")
    name = resolve_name(cp["scenario"]["name"].strip())
    params = resolve_params(name, dict(cp["params"]) if cp.has_section("params") else {})
    output = dict(cp["output"]) if cp.has_section("output") else {}
    bad = set(output) - OUTPUT_KEYS
    if bad:
        raise ConfigError(f"{path}: unknown [output] keys {sorted(bad)}")
    if "fields" in output:
        output["fields"] = _coerce("fields", output["fields"], False)
    return name, params, output


# -- running and reporting -------------------------------------------------------------------

def run_scenario(name: str, params: dict) -> tuple[dict, dict]:
    """Execute a resolved scenario; returns (report, fields)."""
    sc = SCENARIOS[name]
    t0 = time.perf_counter()
    error = None
    try:
        out = sc.run(params)
    except UcplabError as exc:
        out, error = None, f"{type(exc).__name__}: {exc}"
    wall = time.perf_counter() - t0
    report = {
        "tool": "ucplab",
        "version": __version__,
        "scenario": {"name": name, "params": _jsonable(params)},
        "metrics": _jsonable(out.metrics) if out else {},
        "checks": [c.as_dict() for c in out.checks] if out else [],
        "error": error,
        "passed": bool(out is not None and out.passed),
        "timing": {"wall_clock_s": wall,
                   "checks": [c.as_dict() for c in out.timing] if out else []},
    }
    return report, (out.fields if out else {})


def dumps_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


def load_report(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_field_csv(path, f: GridField) -> int:
    """Rows (coords..., value) with a header; complex fields get re/im columns.

    Returns the number of data rows.
    """
    mesh = [g.ravel() for g in f.mesh()]
    vals = np.asarray(f.values).ravel()
    coords = ["x", "y", "z", "t"][:len(mesh)] if len(mesh) <= 4 else \
        [f"x{i}" for i in range(len(mesh))]
    cplx = np.iscomplexobj(vals)
    header = coords + (["value_re", "value_im"] if cplx else ["value"])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for k in range(vals.size):
            row = [repr(float(m[k])) for m in mesh]
            v = vals[k]
            row += [repr(float(v.real)), repr(float(v.imag))] if cplx else [repr(float(v))]
            w.writerow(row)
    return int(vals.size)


def emit_report(report: dict, out_dir, fields: dict | None = None) -> Path:
    """Write report.json and fields/<name>.csv under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "report.json"
    path.write_text(dumps_report(report), encoding="utf-8")
    if fields:
        (out / "fields").mkdir(exist_ok=True)
        for name, f in sorted(fields.items()):
            write_field_csv(out / "fields" / f"{name}.csv", f)
    return path


def thread_cap() -> int:
    """Worker cap from UCPLAB_THREADS (default 1, sequential)."""
    raw = os.environ.get("UCPLAB_THREADS", "1").strip() or "1"
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"UCPLAB_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError("UCPLAB_THREADS must be at least 1")
    return min(n, len(SCENARIOS))


def _summary(report: dict) -> str:
    status = "PASS" if report["passed"] else "FAIL"
    failed = [c["name"] for c in report["checks"] + report["timing"]["checks"]
              if not c["passed"]]
    tail = f"  failed: {', '.join(failed)}" if failed else ""
    if report["error"]:
        tail += f"  error: {report['error']}"
    return f"{status}  {report['scenario']['name']}  ({report['timing']['wall_clock_s']:.1f} s)" + tail


def _run_one(args: tuple) -> dict:
    name, out_dir = args
    report, fields = run_scenario(name, resolve_params(name))
    if out_dir:
        emit_report(report, Path(out_dir) / name, fields)
    return report


# -- entry point -------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ucplab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"ucplab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one scenario by name or config file")
    r.add_argument("target")
    r.add_argument("--out", help="output directory (default: none, print only)")
    r.add_argument("--grid", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--tol", type=float)
    r.add_argument("--fields", action="store_true", help="also dump grid fields as CSV")
    sub.add_parser("list", help="list built-in scenarios")
    v = sub.add_parser("verify-all", help="run every built-in scenario")
    v.add_argument("--out")
    return p


def _cmd_run(args) -> int:
    target = args.target
    if target.endswith(".ini") or os.path.sep in target or os.path.isfile(target):
        name, params, output = parse_config(target)
    else:
        name = resolve_name(target)
        params, output = resolve_params(name), {}
    cli = {k: getattr(args, k) for k in ("grid", "seed", "tol") if getattr(args, k) is not None}
    if args.fields:
        cli["fields"] = True
    elif "fields" in output:
        cli["fields"] = output["fields"]
    params = resolve_params(name, {**params, **cli})
    out_dir = args.out or output.get("dir")
    report, fields = run_scenario(name, params)
    if out_dir:
        emit_report(report, out_dir, fields if params.get("fields") else None)
    print(_summary(report))
    if not report["passed"]:
        raise CheckFailure(f"scenario {name} failed")
    return EXIT_PASS


def _cmd_verify_all(args) -> int:
    jobs = [(n, args.out) for n in SCENARIOS]
    workers = thread_cap()
    if workers == 1:
        reports = [_run_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            reports = list(ex.map(_run_one, jobs))
    for rep in reports:
        print(_summary(rep))
    if not all(r["passed"] for r in reports):
        raise CheckFailure("some scenarios failed")
    return EXIT_PASS


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list":
            for name, sc in SCENARIOS.items():
                print(f"{name:20s} {sc.description}")
            return EXIT_PASS
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_verify_all(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CheckFailure as exc:
        print(f"check failure: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
