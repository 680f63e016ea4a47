"""Command-line front end.

Exit codes: 0 success, 1 domain error (a partial report is still printed),
2 usage or parse error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from pathlib import Path
from typing import Sequence

from .fock import TooFewModes, fock_encode
from .literal import StateSyntaxError, format_coefficient, format_state, parse_state_literal
from .machine import MachineError, MachineSpec, UnitarityReport, default_seeds, validate_unitarity
from .machines import BUILDERS, binary_numeral, shipped_machine_path
from .qstring import QString, ZeroState, average_length
from .runner import (DEFAULT_I_MAX, DEFAULT_SCHEDULE_BASE, BudgetExhausted, NotHalted, RunResult,
                     run)
from .sqkc import (BoundReport, Infeasible, ProgramCatalog, SearchBudget, classical_only_bound,
                   estimate_conditional_sqkc, estimate_sqkc)
from .symcodec import RATE_COLUMNS, rate_report

VALIDATION_DEPTH = 32
SQKC_COLUMNS = ("n_or_label", "bound", "classical_bound", "fidelity", "programs_examined",
                "wall_time_ms")


class UsageError(Exception):
    pass


class InvalidMachine(MachineError):
    def __init__(self, message: str, report: UnitarityReport):
        super().__init__(message)
        self.report = report


def num(x) -> str:
    if isinstance(x, int):
        return str(x)
    s = f"{x:.10g}"
    return "0" if s == "-0" else s


def parse_n_list(text: str) -> list[int]:
    """Comma list of positive ints; ``a,b,...,z`` expands a geometric or arithmetic run."""
    parts = [p.strip() for p in text.split(",")]
    try:
        if "..." in parts:
            if len(parts) != 4 or parts[2] != "...":
                raise UsageError(f"range must look like a,b,...,z: {text!r}")
            a, b, z = int(parts[0]), int(parts[1]), int(parts[3])
            if a < 1 or b <= a or z < b:
                raise UsageError(f"range must be increasing and positive: {text!r}")
            if b % a == 0:
                out, r = [a], b // a
                while out[-1] < z:
                    out.append(out[-1] * r)
                if out[-1] == z:
                    return out
            if (z - a) % (b - a) == 0:
                return list(range(a, z + 1, b - a))
            raise UsageError(f"{z} is not reached from {a}, {b}: {text!r}")
        values = [int(p) for p in parts]
    except ValueError:
        raise UsageError(f"bad integer list {text!r}") from None
    if not values or min(values) < 1:
        raise UsageError("n values must be positive")
    return values


def parse_machine_spec(path: str | Path, depth: int = VALIDATION_DEPTH) -> tuple[MachineSpec, UnitarityReport]:
    """Load a machine file and run the unitarity check on short inputs.

    A path that does not exist but names a shipped machine (``unary_expander``
    or ``unary_expander.json``) loads the shipped copy.
    """
    p = Path(path)
    if not p.exists():
        name = p.name.removesuffix(".json")
        if p.parent != Path(".") or name not in BUILDERS:
            raise FileNotFoundError(f"no machine file {str(path)!r}")
        p = shipped_machine_path(name)
    spec = MachineSpec.load(p)
    report = validate_unitarity(spec, default_seeds(spec), depth)
    if not report.ok:
        raise InvalidMachine(f"{spec.name}: not unitary (deviation {report.max_deviation:.3g})", report)
    return spec, report


def _writer(out: io.TextIOBase):
    return csv.writer(out, lineterminator="\n")


def _cmd_avg_len(args, out) -> int:
    q = parse_state_literal(args.state)
    value = average_length(q)
    if args.emit == "csv":
        w = _writer(out)
        w.writerow(["average_length"])
        w.writerow([num(value)])
    else:
        print(num(value), file=out)
    return 0


def _cmd_fock(args, out) -> int:
    q = parse_state_literal(args.state)
    modes = args.modes if args.modes is not None else max(1, q.max_length)
    f = fock_encode(q, modes)
    if args.emit == "csv":
        w = _writer(out)
        w.writerow(["modes", "re", "im"])
        for word, amp in f.terms:
            w.writerow([word, num(amp.real), num(amp.imag)])
    else:
        for word, amp in f.terms:
            print(f"{format_coefficient(amp)} {word}", file=out)
    return 0


def _run_rows(r: RunResult) -> list[list[str]]:
    rows = [["halted", "", "1" if r.halted else "0", ""], ["steps", "", num(r.steps_executed), ""]]
    if r.output is not None:
        rows += [["output", bits or "e", num(a.real), num(a.imag)] for bits, a in r.output.terms]
    else:
        for k, (lam, vec) in enumerate(r.spectrum):
            rows.append(["eigenvalue", str(k), num(lam), ""])
            rows += [[f"eigenvector{k}", bits or "e", num(a.real), num(a.imag)] for bits, a in vec.terms]
    rows += [["halting", str(t), num(m), ""] for t, m in sorted(r.halting_times.items())]
    rows += [["trace", str(t), num(d), ""] for t, d in r.convergence_trace]
    return rows


def _print_run(r: RunResult, out) -> None:
    print(f"halted: {'yes' if r.halted else 'no'}", file=out)
    print(f"steps: {r.steps_executed}", file=out)
    if r.output is not None:
        print(f"output: {format_state(r.output)}", file=out)
    elif r.spectrum:
        print(f"output: mixed, rank {len(r.spectrum)}", file=out)
        for lam, vec in r.spectrum:
            print(f"  {num(lam)}  {format_state(vec)}", file=out)
    dist = ", ".join(f"{t}: {num(m)}" for t, m in sorted(r.halting_times.items()))
    print(f"halting distribution: {{{dist}}}", file=out)
    print("convergence trace:", file=out)
    for t, d in r.convergence_trace:
        print(f"  {t}  {num(d)}", file=out)


def _cmd_run(args, out) -> int:
    spec, _ = parse_machine_spec(args.machine)
    q = parse_state_literal(args.input)
    code = 0
    try:
        result = run(spec, q, args.max_steps, args.schedule_base, args.i_max)
    except BudgetExhausted as exc:
        print(f"sqtm: {exc}", file=sys.stderr)
        result, code = exc.result, 1
    if args.emit == "csv":
        w = _writer(out)
        w.writerow(["record", "key", "value", "imag"])
        w.writerows(_run_rows(result))
    else:
        _print_run(result, out)
    return code


def psi_family(n: int) -> QString:
    """sqrt(2/3)|0> + sqrt(1/3)|1^n>."""
    return QString.from_terms({"0": math.sqrt(2 / 3), "1" * n: math.sqrt(1 / 3)}, normalized=True)


def _sqkc_row(spec, label, target, given, budget, catalog, timing) -> tuple[list[str], BoundReport | None, int]:
    start = time.perf_counter()
    code = 0
    try:
        if given is None:
            rep = estimate_sqkc(spec, target, budget, catalog)
        else:
            rep = estimate_conditional_sqkc(spec, target, given, budget, catalog)
    except Infeasible as exc:
        print(f"sqtm: {label}: {exc}", file=sys.stderr)
        rep, code = exc.report, 1
    try:
        classical = num(classical_only_bound(spec, target, budget, catalog, given).bound)
    except Infeasible:
        classical = "inf"
    elapsed = (time.perf_counter() - start) * 1000
    row = [str(label),
           num(rep.bound) if rep and rep.feasible else "inf",
           classical,
           num(rep.achieved_fidelity) if rep else "0",
           str(rep.programs_examined if rep else catalog.outcomes(budget.max_program_length)[1]),
           f"{elapsed:.0f}" if timing else ""]
    return row, rep, code


def _cmd_sqkc(args, out) -> int:
    if (args.target is None) == (args.family is None):
        raise UsageError("give exactly one of --target or --family")
    if args.family is not None and args.n_list is None:
        raise UsageError("--family needs --n-list")
    spec, _ = parse_machine_spec(args.machine)
    given = parse_state_literal(args.given) if args.given is not None else None
    if args.target is not None:
        jobs = [(args.label, parse_state_literal(args.target), args.max_len)]
    else:
        ns = parse_n_list(args.n_list)
        # enough program length to name the largest numeral unless capped
        max_len = args.max_len if args.max_len is not None else max(len(binary_numeral(n)) for n in ns)
        jobs = [(n, psi_family(n), max_len) for n in ns]
    catalog = None
    code = 0
    rows = []
    for label, target, max_len in jobs:
        budget = SearchBudget(max_len if max_len is not None else 4, args.max_steps,
                              args.fidelity_threshold, args.subset_size)
        if catalog is None:
            catalog = ProgramCatalog(spec, budget.max_steps_per_program, given)
        row, rep, c = _sqkc_row(spec, label, target, given, budget, catalog, args.timing)
        code = max(code, c)
        rows.append((row, rep))
    if args.emit == "csv":
        w = _writer(out)
        w.writerow(SQKC_COLUMNS)
        w.writerows(row for row, _ in rows)
    else:
        for row, rep in rows:
            print(f"{row[0]}: bound {row[1]}, classical bound {row[2]}, fidelity {row[3]}, "
                  f"programs examined {row[4]}" + (f", {row[5]} ms" if row[5] else ""), file=out)
            if rep is not None:
                tag = "witness" if rep.feasible else "best attempt"
                print(f"  {tag}: {format_state(rep.witness)}", file=out)
    return code


def _cmd_ncopy(args, out) -> int:
    if not 0 <= args.alpha2 <= 1:
        raise UsageError("--alpha2 must lie in [0, 1]")
    rows = rate_report(math.sqrt(args.alpha2), parse_n_list(args.n_list))
    if args.emit == "csv":
        w = _writer(out)
        w.writerow(RATE_COLUMNS)
        for r in rows:
            w.writerow([num(r[c]) for c in RATE_COLUMNS])
    else:
        width = 12
        print("".join(c.rjust(width) for c in RATE_COLUMNS), file=out)
        for r in rows:
            print("".join(num(r[c]).rjust(width) for c in RATE_COLUMNS), file=out)
    return 0


def _cmd_validate(args, out) -> int:
    try:
        spec, report = parse_machine_spec(args.machine, args.depth)
    except InvalidMachine as exc:
        spec, report = None, exc.report
    fields = {"machine": spec.name if spec else str(args.machine), "depth": args.depth,
              "max_deviation": report.max_deviation, "configurations": report.configurations,
              "checked": report.checked, "excluded": report.excluded, "ok": report.ok}
    if args.emit == "csv":
        w = _writer(out)
        w.writerow(fields)
        w.writerow([num(v) if isinstance(v, float) else str(v) for v in fields.values()])
    else:
        for k, v in fields.items():
            print(f"{k}: {num(v) if isinstance(v, float) else v}", file=out)
    return 0 if report.ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sqtm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--emit", choices=("text", "csv"), default="text")
        return p

    p = add("avg-len", "average length of a string state")
    p.add_argument("--state", required=True)
    p.set_defaults(func=_cmd_avg_len)

    p = add("fock", "photon-mode encoding of a string state")
    p.add_argument("--state", required=True)
    p.add_argument("--modes", type=int, help="number of modes (default: longest string)")
    p.set_defaults(func=_cmd_fock)

    p = add("run", "run a machine on an input state")
    p.add_argument("--machine", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--max-steps", type=int, default=1_000_000)
    p.add_argument("--schedule-base", type=int, default=DEFAULT_SCHEDULE_BASE)
    p.add_argument("--i-max", type=int, default=DEFAULT_I_MAX)
    p.set_defaults(func=_cmd_run)

    p = add("sqkc", "upper bound on the complexity of a target state")
    p.add_argument("--machine", required=True)
    p.add_argument("--target")
    p.add_argument("--family", choices=("psi",), help="psi: sqrt(2/3)|0> + sqrt(1/3)|1^n>")
    p.add_argument("--n-list")
    p.add_argument("--label", default="target")
    p.add_argument("--given")
    p.add_argument("--max-len", type=int)
    p.add_argument("--max-steps", type=int, default=100_000)
    p.add_argument("--subset-size", type=int, default=3)
    p.add_argument("--fidelity-threshold", type=float, default=1 - 1e-6)
    p.add_argument("--timing", action="store_true", help="fill wall_time_ms (output no longer reproducible)")
    p.set_defaults(func=_cmd_sqkc)

    p = add("ncopy", "expected codeword lengths for n copies of a qubit")
    p.add_argument("--alpha2", type=float, required=True)
    p.add_argument("--n-list", required=True)
    p.set_defaults(func=_cmd_ncopy)

    p = add("validate", "unitarity check of a machine file")
    p.add_argument("--machine", required=True)
    p.add_argument("--depth", type=int, default=VALIDATION_DEPTH)
    p.set_defaults(func=_cmd_validate)
    return parser


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except (Infeasible, NotHalted, BudgetExhausted) as exc:
        print(f"sqtm: {exc}", file=sys.stderr)
        return 1
    except InvalidMachine as exc:
        print(f"sqtm: invalid machine: {exc}", file=sys.stderr)
        return 2
    except (UsageError, StateSyntaxError, ZeroState, TooFewModes, MachineError, OSError,
            json.JSONDecodeError, ValueError) as exc:
        print(f"sqtm: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
