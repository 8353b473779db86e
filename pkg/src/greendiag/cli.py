"""Command-line front end.

Exit codes: 0 ok, 1 malformed input, 2 no solution found, 3 inadmissible
potential, 4 a verification tolerance failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import oracle
from .classify import PRESETS, Inadmissible, PotentialSpec, preset
from .exactalg import parse_rational
from .solver import (
    NotFound,
    SolutionForm,
    dumps_solution,
    latex_solution,
    parse_solution,
    solve,
)

log = logging.getLogger("greendiag")

EXIT_OK, EXIT_INPUT, EXIT_NOT_FOUND, EXIT_INADMISSIBLE, EXIT_TOLERANCE = 0, 1, 2, 3, 4
COMMANDS = ("presets", "solve", "verify", "bands", "eval", "latex")


class InputError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    preset: str | None = None
    spec_path: str | None = None
    solution_path: str | None = None
    overrides: dict = field(default_factory=dict)
    output: str | None = None
    tolerances: dict = field(default_factory=dict)
    n_max: int | None = None
    m0_max: int = 12
    grid_x: int = 32
    p_list: list[float] | None = None
    x_list: list[float] | None = None
    x_range: tuple[float, float] | None = None
    csv_path: str | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")
        unknown = set(self.tolerances) - set(oracle.DEFAULT_TOLS)
        if unknown:
            raise InputError(f"unknown tolerance names: {sorted(unknown)}")


class _Parser(argparse.ArgumentParser):
    # usage errors share the malformed-input exit code
    def error(self, message):
        self.print_usage(sys.stderr)
        raise InputError(message)


def _key_value(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    key, value = text.split("=", 1)
    return key.strip(), value.strip()


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected START:STOP, got {text!r}") from None
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="greendiag",
        description="Closed-form heat-kernel Green function diagonals for polynomial-reducible potentials.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("presets", help="list shipped potentials")
    for name, help_ in [
        ("solve", "solve for P and Q, write the solution document"),
        ("verify", "run the numeric oracles against a solution"),
        ("bands", "roots of Q and monodromy traces at them"),
        ("eval", "CSV samples of G(p, x)"),
        ("latex", "LaTeX rendering of a solution"),
    ]:
        p = sub.add_parser(name, help=help_)
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--preset", choices=sorted(PRESETS))
        src.add_argument("--spec", dest="spec_path", metavar="PATH")
        p.add_argument("--param", action="append", type=_key_value, default=[], metavar="KEY=RATIONAL")
        p.add_argument("--n-max", type=int)
        p.add_argument("--m0-max", type=int, default=12)
        p.add_argument("--out", dest="output", metavar="PATH")
        if name != "solve":
            p.add_argument("--solution", dest="solution_path", metavar="PATH",
                           help="solution document; solved on the fly when omitted")
        if name in ("verify", "eval"):
            p.add_argument("--grid-x", type=int, default=32 if name == "verify" else 8)
            p.add_argument("--p", dest="p_list", type=_float_list, metavar="LIST")
        if name == "verify":
            p.add_argument("--tol", action="append", type=_key_value, default=[], metavar="NAME=FLOAT")
            p.add_argument("--csv", dest="csv_path", metavar="PATH", help="also write the grid as CSV")
        if name == "eval":
            p.add_argument("--x", dest="x_list", type=_float_list, metavar="LIST")
            p.add_argument("--x-range", type=_range, metavar="START:STOP")
    return parser


def parse_config(argv: list[str] | None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    args = vars(ns)
    tols = {}
    for k, v in args.pop("tol", []):
        try:
            tols[k] = float(v)
        except ValueError:
            raise InputError(f"tolerance {k} needs a float, got {v!r}") from None
    return RunConfig(
        command=args.pop("command"),
        preset=args.pop("preset", None),
        spec_path=args.pop("spec_path", None),
        solution_path=args.pop("solution_path", None),
        overrides=dict(args.pop("param", [])),
        output=args.pop("output", None),
        tolerances=tols,
        n_max=args.pop("n_max", None),
        m0_max=args.pop("m0_max", 12),
        grid_x=args.pop("grid_x", 32),
        p_list=args.pop("p_list", None),
        x_list=args.pop("x_list", None),
        x_range=args.pop("x_range", None),
        csv_path=args.pop("csv_path", None),
    )


def load_spec(cfg: RunConfig) -> PotentialSpec:
    try:
        if cfg.preset:
            return preset(cfg.preset, **{k: parse_rational(v) for k, v in cfg.overrides.items()})
        if cfg.overrides:
            raise InputError("--param only applies to presets; edit the spec file instead")
        return PotentialSpec.from_dict(json.loads(Path(cfg.spec_path).read_text()))
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        raise InputError(f"cannot load potential: {exc}") from None


def load_solution(cfg: RunConfig, spec: PotentialSpec) -> SolutionForm:
    if cfg.solution_path is None:
        return solve(spec, cfg.n_max, cfg.m0_max)
    try:
        sol = parse_solution(json.loads(Path(cfg.solution_path).read_text()))
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        raise InputError(f"cannot load solution: {exc}") from None
    if sol.spec_hash and sol.spec_hash != spec.spec_hash():
        raise InputError(f"solution was computed for spec {sol.spec_hash}, not {spec.spec_hash()}")
    return sol


def _write(cfg: RunConfig, text: str) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_presets(cfg: RunConfig) -> int:
    _write(cfg, "\n".join(f"{name:12s} {desc}" for name, desc in PRESETS.items()))
    return EXIT_OK


def cmd_solve(cfg: RunConfig) -> int:
    spec = load_spec(cfg)
    sol = solve(spec, cfg.n_max, cfg.m0_max)
    log.info("solved %s: N = %d, M = %s", spec.name or spec.spec_hash(), sol.N, list(sol.M))
    _write(cfg, dumps_solution(sol))
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    spec = load_spec(cfg)
    sol = load_solution(cfg, spec)
    report = oracle.verify(sol, spec, cfg.grid_x, cfg.p_list, cfg.tolerances)
    _write(cfg, json.dumps(report, indent=2, allow_nan=False))
    if cfg.csv_path:
        Path(cfg.csv_path).write_text(oracle.report_csv(report))
    summary = report["summary"]
    for name, ok in summary["checks"].items():
        log.info("%-15s %s", name, "pass" if ok else "FAIL")
    return EXIT_OK if summary["ok"] else EXIT_TOLERANCE


def cmd_bands(cfg: RunConfig) -> int:
    spec = load_spec(cfg)
    sol = load_solution(cfg, spec)
    try:
        report = oracle.band_edges_check(sol, spec)
    except oracle.RootCountMismatch as exc:
        log.error("%s", exc)
        return EXIT_TOLERANCE
    _write(cfg, json.dumps(report, indent=2))
    return EXIT_OK if report["ok"] else EXIT_TOLERANCE


def cmd_eval(cfg: RunConfig) -> int:
    spec = load_spec(cfg)
    sol = load_solution(cfg, spec)
    if cfg.x_list is not None:
        xs = np.array(cfg.x_list)
    else:
        lo, hi = cfg.x_range if cfg.x_range else (0.0, spec.period or 1.0)
        xs = np.linspace(lo, hi, cfg.grid_x)
    ps = cfg.p_list if cfg.p_list is not None else [min(-1.0, float(min(spec.potential(xs))) - 5.0)]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x", "p", "G", "flag"])
    for p in ps:
        try:
            G = oracle.eval_G(sol, spec, xs, p)
            rows = [(x, p, repr(float(g)), "") for x, g in zip(xs, G)]
        except oracle.BranchError:
            rows = [(x, p, "", "branch") for x in xs]
        writer.writerows((repr(float(x)), repr(float(p)), g, f) for x, p, g, f in rows)
    _write(cfg, buf.getvalue())
    return EXIT_OK


def cmd_latex(cfg: RunConfig) -> int:
    spec = load_spec(cfg)
    _write(cfg, latex_solution(load_solution(cfg, spec)))
    return EXIT_OK


HANDLERS = {
    "presets": cmd_presets,
    "solve": cmd_solve,
    "verify": cmd_verify,
    "bands": cmd_bands,
    "eval": cmd_eval,
    "latex": cmd_latex,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        cfg = parse_config(argv)
        return HANDLERS[cfg.command](cfg)
    except InputError as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except Inadmissible as exc:
        log.error("inadmissible potential: %s", exc.reason)
        for line in exc.trace:
            log.error("  %s", line)
        return EXIT_INADMISSIBLE
    except NotFound as exc:
        log.error("%s", exc)
        return EXIT_NOT_FOUND


if __name__ == "__main__":
    sys.exit(main())
