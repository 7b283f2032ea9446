"""Command-line front end: ``simulate``, ``maxstep`` and ``check``.

Exit codes: 0 success, 1 netlist/input error, 2 numerical failure (or
usage error), 3 ``check`` found the matrix not diagonally dominant.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from .assembly import StateVector, assembler_for, system_matrix
from .netlist import CircuitError, NetlistError, StepMode, parse_netlist
from .solvers import Method, SolverConfig, SolverError
from .stepcontrol import (DominantStep, FixedStep, TechnologyParams, check_dominance,
                          max_dominant_step, max_step_technology, max_step_technology_derived)
from .transient import (FullNewton, NonConvergence, SingleLinearization, StepLimitExceeded,
                        TransientConfig, dc_initial_state, run_transient)

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_NOT_DOMINANT = 0, 1, 2, 3

_PREFIXES = [(1e-18, "a"), (1e-15, "f"), (1e-12, "p"), (1e-9, "n"), (1e-6, "u"),
             (1e-3, "m"), (1.0, ""), (1e3, "k"), (1e6, "M"), (1e9, "G")]


def si_format(value: float, unit: str) -> str:
    """'5.000 fs' style rendering for human-readable summary lines."""
    if value == 0 or not math.isfinite(value):
        return f"{value} {unit}"
    scale, prefix = _PREFIXES[0]
    for s, p in _PREFIXES:
        if abs(value) >= s * (1 - 1e-12):
            scale, prefix = s, p
    return f"{value / scale:.3f} {prefix}{unit}"


@dataclass
class RunReport:
    steps_taken: int
    fallbacks: int
    min_dominance_margin: float
    wall_time: float
    solver: str

    def lines(self) -> list[str]:
        return [
            f"steps_taken: {self.steps_taken}",
            f"fallbacks: {self.fallbacks}",
            f"min_dominance_margin: {self.min_dominance_margin:.6e}",
            f"wall_time: {self.wall_time:.3f} s",
            f"solver: {self.solver}",
        ]


def _positive(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def _count(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1: {text!r}")
    return v


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("netlist", type=Path)
    p.add_argument("--solver", choices=[m.value for m in Method], default="lu")
    p.add_argument("--blocks", type=_count, default=1, help="block count for block-jacobi")
    p.add_argument("--workers", type=_count, default=1,
                   help="threads for block-jacobi block solves (1 = serial)")
    p.add_argument("--step-mode", choices=["fixed", "dominant"])
    p.add_argument("--dt", type=_positive)
    p.add_argument("--tstop", type=_positive)
    p.add_argument("--newton", choices=["single", "full"], default="single")
    p.add_argument("--tol", type=_positive, default=1e-10)
    p.add_argument("--max-iters", type=_count, default=10000)
    p.add_argument("--gmin", type=float, default=0.0)
    p.add_argument("--at-state", type=Path,
                   help="CSV with header 'node,volts' giving initial node voltages")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ministep", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a transient analysis")
    _add_common(sim)
    sim.add_argument("--out", type=Path, help="waveform CSV (default <netlist>.csv)")
    sim.add_argument("--steplog", type=Path, help="step log CSV (default <netlist>.steps.csv)")

    ms = sub.add_parser("maxstep", help="technology-level maximum step estimate")
    ms.add_argument("--L", dest="l_min", type=_positive, required=True, help="channel length [m]")
    ms.add_argument("--mu0", type=_positive, required=True, help="carrier mobility [m^2/(V s)]")
    ms.add_argument("--vdd", type=_positive, required=True, help="supply voltage [V]")

    chk = sub.add_parser("check", help="dominance audit of C/dt + G at the initial state")
    _add_common(chk)
    return parser


def _read_state(path: Path, circuit, asm) -> StateVector:
    x = dc_initial_state(circuit).values.copy()
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip().lower() for c in rows[0]] != ["node", "volts"]:
        raise CircuitError(f"{path}: expected header 'node,volts'")
    for k, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 2:
            raise CircuitError(f"{path}:{k}: expected two fields")
        try:
            name = circuit.canonical_node(row[0].strip())
            idx = asm.node_index[name]
            x[idx] = float(row[1])
        except KeyError:
            raise CircuitError(f"{path}:{k}: {row[0]!r} is not an unknown node") from None
        except ValueError:
            raise CircuitError(f"{path}:{k}: bad voltage {row[1]!r}") from None
    return StateVector(x)


def _load(args):
    text = args.netlist.read_text(encoding="utf-8")
    circuit = parse_netlist(text)
    asm = assembler_for(circuit, args.gmin)
    x0 = _read_state(args.at_state, circuit, asm) if args.at_state else dc_initial_state(circuit)
    return circuit, asm, x0


def _solver_config(args) -> SolverConfig:
    return SolverConfig(args.solver, tol=args.tol, max_iters=args.max_iters,
                        blocks=args.blocks, workers=args.workers)


def _notice(msg: str) -> None:
    print(f"notice: {msg}", file=sys.stderr)


def _transient_config(args, circuit) -> TransientConfig:
    tran = circuit.tran
    if tran is not None and (args.dt or args.tstop):
        _notice("command-line times override the netlist .TRAN directive")
    dt = args.dt or (tran.dt_request if tran else None)
    t_stop = args.tstop or (tran.t_stop if tran else None)
    if dt is None or t_stop is None:
        circuit.require_tran()
    mode = circuit.step_mode
    if args.step_mode is not None:
        if mode is not None and mode.value.lower() != args.step_mode:
            _notice("--step-mode overrides the netlist .STEPMODE directive")
        mode = StepMode(args.step_mode.upper())
    policy = DominantStep(dt) if mode is StepMode.DOMINANT else FixedStep(dt)
    newton = FullNewton() if args.newton == "full" else SingleLinearization()
    return TransientConfig(dt, t_stop, policy, newton, _solver_config(args), gmin=args.gmin)


def cmd_simulate(args) -> int:
    circuit, _, x0 = _load(args)
    cfg = _transient_config(args, circuit)
    start = time.perf_counter()
    wf = run_transient(circuit, x0, cfg)
    wall = time.perf_counter() - start
    out = args.out or args.netlist.with_suffix(".csv")
    steplog = args.steplog or args.netlist.with_suffix(".steps.csv")
    out.write_text(wf.to_csv(), encoding="utf-8", newline="\n")
    steplog.write_text(wf.step_log_csv(), encoding="utf-8", newline="\n")
    margins = [r.dominance_margin for r in wf.step_log]
    report = RunReport(wf.steps_taken, wf.fallbacks, min(margins) if margins else math.nan,
                       wall, cfg.solver.method.value)
    print("\n".join(report.lines()))
    print(f"waveform: {out}")
    print(f"step log: {steplog}")
    return EXIT_OK


def cmd_maxstep(args) -> int:
    tech = TechnologyParams(args.l_min, args.mu0, args.vdd)
    est = max_step_technology(tech)
    derived = max_step_technology_derived(tech)
    print(f"technology estimate L^2*Vdd/(2*mu0): {est:.3e} s  ({si_format(est, 's')})")
    print(f"dominance-derived 2*L^2/(mu0*Vdd): {derived:.3e} s  ({si_format(derived, 's')})")
    return EXIT_OK


def cmd_check(args) -> int:
    circuit, asm, x0 = _load(args)
    dt = args.dt or (circuit.tran.dt_request if circuit.tran else None)
    if dt is None:
        circuit.require_tran()
    sys_ = asm.assemble(x0)
    names = asm.unknowns
    report = check_dominance(system_matrix(sys_.c_matrix, sys_.g_matrix, dt))
    bound = max_dominant_step(sys_.c_matrix, sys_.g_matrix)
    print(f"dt: {dt:.16e} s")
    print(f"dominant: {'yes' if report.is_dominant else 'no'}")
    print(f"worst_row: {names[report.worst_row]} (row {report.worst_row})")
    print(f"margin: {report.margin:.16e}")
    if bound.never_dominant:
        print(f"max_dominant_step: NeverDominant (row {names[bound.row]})")
    elif bound.unbounded:
        print("max_dominant_step: unbounded")
    else:
        print(f"max_dominant_step: {bound.dt:.16e} s  ({si_format(bound.dt, 's')}, "
              f"limited by {names[bound.row]})")
    return EXIT_OK if report.is_dominant else EXIT_NOT_DOMINANT


_COMMANDS = {"simulate": cmd_simulate, "maxstep": cmd_maxstep, "check": cmd_check}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (NetlistError, OSError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SolverError, NonConvergence, StepLimitExceeded, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
