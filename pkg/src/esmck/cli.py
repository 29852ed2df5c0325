"""Command-line entry point.

Exit codes: 0 verified or valid, 1 violation or invalid, 2 unknown,
3 usage or input error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from importlib import resources
from pathlib import Path

from esmck.grid import GridError, check_topology, load_grid_spec
from esmck.ir import HslError, lower_evolve, parse_program
from esmck.ir.printer import format_rational
from esmck.runseq import (
    CycleReport, RunseqError, generate_sequence, parse_components, parse_run_sequence,
    print_run_sequence, validate_sequence,
)
from esmck.solve import HOLDS, SOLVER_ENV, UNKNOWN, VIOLATED, check_all, emit_smt, replay
from esmck.symexec import Bounds, ExplorationError, explore

EXIT_OK, EXIT_VIOLATION, EXIT_UNKNOWN, EXIT_ERROR = 0, 1, 2, 3

log = logging.getLogger("esmck")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def resolve_input(name: str) -> Path:
    """A path on disk, or failing that a file of the same name in the bundled corpus."""
    p = Path(name)
    if p.exists():
        return p
    bundled = resources.files("esmck.corpus").joinpath(p.name)
    if p.parent == Path(".") and bundled.is_file():
        return Path(str(bundled))
    raise UsageError(f"{name}: no such file")


def _read(name: str) -> str:
    try:
        return resolve_input(name).read_text()
    except OSError as e:
        raise UsageError(f"{name}: {e.strerror}") from None


# program checking --------------------------------------------------------------

def _load_program(args):
    try:
        program = parse_program(_read(args.program))
    except HslError as e:
        raise UsageError(f"{args.program}: {e}") from None
    lowered = lower_evolve(program)
    try:
        bounds = Bounds.parse(args.bound or [])
    except ValueError as e:
        raise UsageError(str(e)) from None
    ints = [d.name for d in program.inputs if d.sort == "int"]
    unknown = sorted(set(bounds.values) - set(ints))
    if unknown:
        raise UsageError(f"--bound {unknown[0]}: not an integer input of the program")
    missing = [n for n in ints if n not in bounds.values]
    if missing:
        raise UsageError(f"missing --bound for integer input {missing[0]}")
    return lowered, bounds


def _obligations(program, bounds, only=None):
    exploration = explore(program, bounds)
    try:
        obs = list(exploration)
    except ExplorationError as e:
        raise UsageError(str(e)) from None
    if only is not None:
        obs = [o for o in obs if o.index == only]
        if not obs:
            raise UsageError(f"no obligation with index {only}")
    return obs, exploration.summary


def _bounds_text(bounds) -> str:
    return " ".join(f"{k}={v}" for k, v in bounds.values.items())


def _witness_lines(program, witness) -> list[str]:
    lines = ["witness:"]
    for name, v in witness.assignment.items():
        lines.append(f"  {name} = {format_rational(v)}")
    if witness.choices:
        lines.append(f"  choices = {list(witness.choices)}")
    trace = replay(program, witness, stop_after=witness.assert_index)
    out = trace.asserts[witness.assert_index]
    lines.append(f"replayed state at {out.location}:")
    declared = [d.name for d in program.inputs] + [d.name for d in program.globals]
    for name in declared:
        if name in out.store:
            lines.append(f"  {name} = {format_rational(out.store[name])}")
    return lines


def _replay_dict(program, witness) -> dict:
    return replay(program, witness, stop_after=witness.assert_index).to_dict()


def _run_checks(args, backend: str, stop: bool):
    program, bounds = _load_program(args)
    obs, summary = _obligations(program, bounds, getattr(args, "obligation", None))
    solver = args.solver or os.environ.get(SOLVER_ENV) or None
    results = list(check_all(
        obs, jobs=args.jobs, stop_on_violation=stop, backend=backend, budget=args.budget,
        program=program, bounds=bounds.values, solver=solver, seed=args.seed, timeout=args.timeout,
    ))
    return program, bounds, summary, results


def _verdict_exit(results, summary) -> int:
    statuses = [v.status for _, v in results]
    if VIOLATED in statuses:
        return EXIT_VIOLATION
    if UNKNOWN in statuses or not summary.complete:
        return EXIT_UNKNOWN
    return EXIT_OK


def _report_checks(args, program, bounds, summary, results, backend, code) -> str:
    violation = next(((ob, v) for ob, v in results if v.status == VIOLATED), None)
    result = {EXIT_OK: "verified", EXIT_VIOLATION: "violated", EXIT_UNKNOWN: "unknown"}[code]
    if args.format == "structured":
        doc = {
            "command": args.command,
            "program": args.program,
            "bounds": dict(bounds.values),
            "backend": backend,
            "budget": args.budget,
            "seed": args.seed,
            "exploration": summary.to_dict(),
            "obligations": [
                {"index": ob.index, "label": ob.label, "location": ob.location, "verdict": v.to_dict()}
                for ob, v in results
            ],
            "result": result,
        }
        if violation:
            ob, v = violation
            doc["violation"] = {"index": ob.index, "label": ob.label, "location": ob.location,
                                "witness": v.witness.to_dict(), "trace": _replay_dict(program, v.witness)}
        return json.dumps(doc, indent=2) + "\n"
    lines = [
        f"program {args.program}  bounds {_bounds_text(bounds)}  backend {backend}  "
        f"budget {args.budget}  seed {args.seed}",
        f"explored {summary.paths} path(s), {summary.obligations} obligation(s)"
        + ("" if summary.complete else f" (incomplete: {summary.reason})"),
    ]
    for ob, v in results:
        detail = f" ({v.detail})" if v.detail and v.status != HOLDS else ""
        lines.append(f"  [{ob.index}] assert \"{ob.label}\" at {ob.location}: {v.status}{detail}")
    counts = {s: sum(v.status == s for _, v in results) for s in (VIOLATED, HOLDS, UNKNOWN)}
    lines.append(f"checked {len(results)}: {counts[VIOLATED]} violated, {counts[HOLDS]} hold, "
                 f"{counts[UNKNOWN]} unknown")
    if violation:
        ob, v = violation
        lines.append(f"VIOLATION of assert \"{ob.label}\" at {ob.location} (obligation {ob.index})")
        lines.extend(_witness_lines(program, v.witness))
    elif code == EXIT_UNKNOWN:
        lines.append("no violation found")
    lines.append(f"result: {result}")
    return "\n".join(lines) + "\n"


def cmd_check(args) -> tuple[int, str]:
    program, bounds, summary, results = _run_checks(args, args.backend, stop=True)
    code = _verdict_exit(results, summary)
    return code, _report_checks(args, program, bounds, summary, results, args.backend, code)


def cmd_falsify(args) -> tuple[int, str]:
    program, bounds, summary, results = _run_checks(args, "builtin", stop=False)
    code = _verdict_exit(results, summary)
    return code, _report_checks(args, program, bounds, summary, results, "builtin", code)


def cmd_emit_smt(args) -> tuple[int, str]:
    program, bounds = _load_program(args)
    obs, _ = _obligations(program, bounds, args.obligation)
    if args.output_dir:
        out = Path(args.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        names = []
        for ob in obs:
            name = f"obligation_{ob.index:03d}.smt2"
            (out / name).write_text(emit_smt(ob))
            names.append(name)
        if args.format == "structured":
            return EXIT_OK, json.dumps({"directory": str(out), "files": names}, indent=2) + "\n"
        return EXIT_OK, "".join(f"{out / n}\n" for n in names)
    return EXIT_OK, "\n".join(emit_smt(ob) for ob in obs)


# grid and run sequences --------------------------------------------------------

def cmd_grid_check(args) -> tuple[int, str]:
    try:
        spec = load_grid_spec(resolve_input(args.spec))
    except (GridError, OSError) as e:
        raise UsageError(f"{args.spec}: {e}") from None
    report = check_topology(spec)
    text = json.dumps(report.to_dict(), indent=2) + "\n" if args.format == "structured" else report.to_text() + "\n"
    return (EXIT_OK if report.ok else EXIT_VIOLATION), text


def _load_decls(name):
    try:
        return parse_components(_read(name))
    except RunseqError as e:
        raise UsageError(f"{name}: {e}") from None


def cmd_runseq_validate(args) -> tuple[int, str]:
    decls = _load_decls(args.components)
    try:
        seq = parse_run_sequence(_read(args.sequence), decls)
    except RunseqError as e:
        raise UsageError(f"{args.sequence}: {e}") from None
    report = validate_sequence(seq, decls)
    text = json.dumps(report.to_dict(), indent=2) + "\n" if args.format == "structured" else report.to_text() + "\n"
    return (EXIT_OK if report.ok else EXIT_VIOLATION), text


def cmd_runseq_generate(args) -> tuple[int, str]:
    decls = _load_decls(args.components)
    try:
        result = generate_sequence(decls, interval=args.interval)
    except RunseqError as e:
        raise UsageError(f"{args.components}: {e}") from None
    if isinstance(result, CycleReport):
        if args.format == "structured":
            return EXIT_VIOLATION, json.dumps(result.to_dict(), indent=2) + "\n"
        return EXIT_VIOLATION, result.to_text() + "\n"
    if args.format == "structured":
        doc = {"interval": result.interval, "entries": [
            {"run": e.component} if hasattr(e, "component")
            else {"from": e.src, "to": e.dst, "fields": list(e.fields)}
            for e in result.entries
        ]}
        return EXIT_OK, json.dumps(doc, indent=2) + "\n"
    return EXIT_OK, print_run_sequence(result)


# argument parsing --------------------------------------------------------------

def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "structured"), default="text",
                        help="report format (default: text)")
    common.add_argument("-o", "--output", help="write the report to this file instead of stdout")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    prog = argparse.ArgumentParser(add_help=False)
    prog.add_argument("program", help="HSL source file (bundled corpus names also work)")
    prog.add_argument("--bound", action="append", metavar="NAME=VALUE",
                      help="value of an integer input; repeat for each")

    solving = argparse.ArgumentParser(add_help=False)
    solving.add_argument("--budget", type=_positive, default=100_000,
                         help="falsifier sample budget per obligation (default: 100000)")
    solving.add_argument("--seed", type=int, default=0, help="falsifier seed (default: 0)")
    solving.add_argument("--solver", help=f"external solver command; {{}} is replaced by the script path "
                                          f"(default: ${SOLVER_ENV})")
    solving.add_argument("--jobs", type=_positive, default=1, help="obligations checked in parallel")
    solving.add_argument("--timeout", type=float, default=60.0, help="solver timeout in seconds")

    parser = _Parser(prog="esmck", description="Bounded checking of hybrid numerical programs and "
                                               "structural checks for coupled model grids and run sequences.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check", parents=[common, prog, solving],
                       help="check every assert; stop at the first violation")
    p.add_argument("--backend", choices=("builtin", "smt"), default="builtin")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("falsify", parents=[common, prog, solving],
                       help="run the builtin falsifier on every obligation")
    p.add_argument("--obligation", type=int, help="only this obligation index")
    p.set_defaults(func=cmd_falsify)

    p = sub.add_parser("emit-smt", parents=[common, prog], help="print SMT-LIB2 scripts for the obligations")
    p.add_argument("--obligation", type=int, help="only this obligation index")
    p.add_argument("--output-dir", help="write one .smt2 file per obligation here")
    p.set_defaults(func=cmd_emit_smt)

    grid = sub.add_parser("grid", help="grid topology tools")
    gsub = grid.add_subparsers(dest="grid_command", required=True, parser_class=_Parser)
    p = gsub.add_parser("check", parents=[common], help="check topology laws for a JSON grid spec")
    p.add_argument("spec")
    p.set_defaults(func=cmd_grid_check)

    rs = sub.add_parser("runseq", help="run sequence tools")
    rsub = rs.add_subparsers(dest="runseq_command", required=True, parser_class=_Parser)
    p = rsub.add_parser("validate", parents=[common], help="validate a run sequence against declarations")
    p.add_argument("components")
    p.add_argument("sequence")
    p.set_defaults(func=cmd_runseq_validate)
    p = rsub.add_parser("generate", parents=[common], help="generate a run sequence from declarations")
    p.add_argument("components")
    p.add_argument("--interval", type=_positive, default=3600, help="coupling interval in seconds")
    p.set_defaults(func=cmd_runseq_generate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        code, text = args.func(args)
    except UsageError as e:
        print(f"esmck: error: {e}", file=sys.stderr)
        return EXIT_ERROR
    if args.output:
        try:
            Path(args.output).write_text(text)
        except OSError as e:
            print(f"esmck: error: {args.output}: {e.strerror}", file=sys.stderr)
            return EXIT_ERROR
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
