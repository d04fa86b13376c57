"""Command line entry point: ``run``, ``verify`` and ``export``.

Exit codes: 0 ok, 1 acceptance failure, 2 validation, 3 numerical failure,
64 usage, 66 missing input. Errors are reported as one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import jsonschema
import numpy as np

from . import acceptance
from .asymptotics import build_report, gnuplot_blocks, widom_csv
from .errors import FiniteGapError, NumericalError, ValidationError
from .intervals import set_from_json
from .jacobi import coefficients_csv, coefficients_from_json, jacobi_coefficients
from .measures import density_csv, measure_from_json
from .potential import equilibrium

log = logging.getLogger("finitegap")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_USAGE = 64
EXIT_NOINPUT = 66

SCHEMA_VERSION = 1
DIAGNOSTICS = ("widom", "almost_periods", "szego", "density")

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["schema", "set", "measure"],
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "set": {"type": "object"},
        "measure": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "weight": {"type": "object"},
                "masses": {
                    "type": "array",
                    "items": {"type": "array", "minItems": 2, "maxItems": 2, "items": {"type": "number"}},
                },
            },
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "N": {"type": "integer", "minimum": 4},
                "quadrature_order": {"type": "integer", "minimum": 8},
                "nodes_per_band": {"type": "integer", "minimum": 8},
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "burn_in": {"type": "integer", "minimum": 0},
                "T_max": {"type": "integer", "minimum": 1},
                "szego_n": {"type": "integer", "minimum": 1},
            },
        },
        "diagnostics": {"type": "array", "items": {"enum": list(DIAGNOSTICS)}, "uniqueItems": True},
        "output": {"type": "string"},
    },
}


class UsageError(Exception):
    pass


class MissingInputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def validate_config(config) -> dict:
    try:
        jsonschema.validate(config, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path)
        raise ValidationError(f"config {path or '<root>'}: {exc.message}") from None
    return config


def load_config(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise MissingInputError(f"config file {path} not found")
    try:
        config = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config is not valid JSON: {exc}") from None
    return validate_config(config)


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _finite(x):
    x = float(x)
    return x if np.isfinite(x) else None


def render_run(config: dict) -> dict:
    """Run the pipeline and return ``{file name: text}`` for every artifact."""
    validate_config(config)
    solver = config.get("solver", {})
    wanted = set(config.get("diagnostics", DIAGNOSTICS))
    E = set_from_json(config["set"])
    measure = measure_from_json({"bands": [list(b) for b in E.bands], **config["measure"]})
    eq = equilibrium(E, solver.get("quadrature_order"))
    N = solver.get("N", 100)
    c = jacobi_coefficients(measure, N, solver.get("nodes_per_band"), solver.get("tol", 1e-8))
    rep = build_report(
        measure,
        c,
        eq,
        burn_in=solver.get("burn_in"),
        T_max=solver.get("T_max", 12),
        szego_n=solver.get("szego_n"),
    )
    body = rep.to_json()
    report = {
        "schema": SCHEMA_VERSION,
        "config": config,
        "set": E.to_json(),
        "equilibrium": {
            "capacity": eq.capacity,
            "band_measures": list(eq.band_measures),
            "gap_zeros": list(eq.gap_zeros),
            "quadrature_order": eq.quadrature_order,
        },
        "measure": {"total_mass": measure.total_mass(), "masses": [list(m) for m in measure.masses]},
        "frequency": body["frequency"],
        "coefficients": c.to_json(),
        "notes": {k: (_finite(v) if isinstance(v, float) else v) for k, v in body["notes"].items()},
    }
    if "widom" in wanted:
        report["widom_factors"] = body["widom_factors"]
    if "almost_periods" in wanted:
        report["almost_periods"] = body["diagnostics"]
    if "szego" in wanted:
        report["szego_checks"] = body["szego_checks"]
    files = {
        "report.json": _dumps(report),
        "coefficients.csv": coefficients_csv(c),
        "widom.csv": widom_csv(rep.widom_factors),
    }
    if "density" in wanted and measure.bands is not None:
        files["density.csv"] = density_csv(measure)
    return files


def write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def cmd_run(args) -> int:
    config = load_config(args.config)
    out = Path(args.out or config.get("output") or "results")
    files = render_run(config)
    for name, text in sorted(files.items()):
        write_atomic(out / name, text)
        log.info("wrote %s", out / name)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.suite not in acceptance.SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; expected one of {', '.join(acceptance.SUITES)}")
    rows = acceptance.run_suite(args.suite, threads=args.threads)
    print(acceptance.format_table(rows))
    report = acceptance.suite_json(args.suite, rows)
    if args.out:
        write_atomic(Path(args.out) / f"acceptance_{args.suite}.json", _dumps(report))
    return EXIT_OK if all(r.passed for r in rows) else EXIT_FAILED


def _load_report(out: Path) -> dict:
    path = out / "report.json"
    if not path.is_file():
        raise MissingInputError(f"no run artifacts in {out}: report.json missing")
    return json.loads(path.read_text())


def cmd_export(args) -> int:
    out = Path(args.out or "results")
    report = _load_report(out)
    what, fmt = args.what, args.format
    if what == "widom":
        W = report.get("widom_factors")
        if W is None:
            raise MissingInputError("report has no widom factors")
        if fmt == "gnuplot":
            text = gnuplot_blocks({"widom": (["n", "W_n"], [(n, w) for n, w in enumerate(W)])})
            write_atomic(out / "widom.dat", text)
        else:
            write_atomic(out / "widom.csv", widom_csv(W))
    elif what == "coefficients":
        c = coefficients_from_json(report["coefficients"])
        if fmt == "gnuplot":
            rows = [(n, float(c.p[n]), float(c.q[n]) if n < c.q.size else float("nan")) for n in range(c.p.size)]
            write_atomic(out / "coefficients.dat", gnuplot_blocks({"coefficients": (["n", "p_n", "q_n"], rows)}))
        else:
            write_atomic(out / "coefficients.csv", coefficients_csv(c))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="finitegap", description="Orthogonal polynomial asymptotics on finite-gap sets.")
    p.add_argument("--out", help="output directory for artifacts")
    p.add_argument("--threads", type=int, default=1, help="worker threads for independent diagnostics")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized sampling (never changes reported numbers)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    r = sub.add_parser("run", help="run the pipeline on a config file")
    r.add_argument("config")
    v = sub.add_parser("verify", help="run an acceptance suite")
    v.add_argument("suite")
    e = sub.add_parser("export", help="convert run artifacts")
    e.add_argument("format", choices=["gnuplot", "csv"])
    e.add_argument("what", choices=["widom", "coefficients"])
    return p


def _fail(code, kind, message) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}, sort_keys=True) + "\n")
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.threads < 1:
            raise UsageError("--threads must be at least 1")
        if not 0 <= args.seed < 2**64:
            raise UsageError("--seed must be an unsigned 64-bit integer")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
        handler = {"run": cmd_run, "verify": cmd_verify, "export": cmd_export}[args.command]
        return handler(args)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "usage", str(exc))
    except MissingInputError as exc:
        return _fail(EXIT_NOINPUT, "missing_input", str(exc))
    except ValidationError as exc:
        return _fail(EXIT_VALIDATION, type(exc).__name__, str(exc))
    except NumericalError as exc:
        return _fail(EXIT_NUMERICAL, type(exc).__name__, str(exc))
    except FiniteGapError as exc:
        return _fail(EXIT_NUMERICAL, type(exc).__name__, str(exc))


if __name__ == "__main__":
    sys.exit(main())
