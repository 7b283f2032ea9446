"""Backward-Euler transient analysis with mini-step control.

Each step linearises f around the previous time point and solves
(C/dt + G) dx = i_s - F once (``SingleLinearization``), or repeats the
linearisation until the backward-Euler balance holds (``FullNewton``).
Failure handling is a fixed ladder: iterative solve -> direct solve ->
one retry at dt/2 -> error.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .assembly import AssembledSystem, StateVector, assembler_for, kcl_residual, system_matrix
from .netlist import Circuit
from .solvers import (LinearSystem, Method, Singular, SolverConfig, ZeroDiagonal, solve,
                      solve_direct)
from .stepcontrol import DominantStep, FixedStep, StepPolicy, check_dominance, choose_step


class SingularNode(Singular):
    """A node has no self-conductance or capacitance at all."""


class NonConvergence(ArithmeticError):
    pass


class StepLimitExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class SingleLinearization:
    pass


@dataclass(frozen=True)
class FullNewton:
    tol_v: float = 1e-9
    max_newton: int = 50
    kcl_tol: float = 1e-9


NewtonMode = Union[SingleLinearization, FullNewton]


@dataclass(frozen=True)
class TransientConfig:
    dt_request: float
    t_stop: float
    step_policy: StepPolicy | None = None
    newton_mode: NewtonMode = SingleLinearization()
    solver: SolverConfig = SolverConfig()
    gmin: float = 0.0
    max_steps: int = 1_000_000

    def __post_init__(self):
        if not (self.dt_request > 0 and self.t_stop > 0):
            raise ValueError("dt_request and t_stop must be positive")
        if self.step_policy is None:
            object.__setattr__(self, "step_policy", FixedStep(self.dt_request))


@dataclass(frozen=True)
class StepRecord:
    time: float
    dt: float
    dominance_margin: float
    solver_iterations: int
    fallback: bool


def _fmt(v: float) -> str:
    return f"{v:.16e}" if math.isfinite(v) else ("-inf" if v < 0 else ("inf" if v > 0 else "nan"))


@dataclass
class Waveform:
    """Node voltages at t = 0 and after every accepted step."""

    node_names: list[str]
    times: list[float] = field(default_factory=list)
    voltages: list[np.ndarray] = field(default_factory=list)
    step_log: list[StepRecord] = field(default_factory=list)

    def append(self, t: float, v: np.ndarray) -> None:
        if self.times and not t > self.times[-1]:
            raise ValueError("sample times must be strictly increasing")
        if v.shape != (len(self.node_names),):
            raise ValueError("voltage vector does not match the node list")
        self.times.append(float(t))
        self.voltages.append(v)

    @property
    def samples(self) -> list[tuple[float, np.ndarray]]:
        return list(zip(self.times, self.voltages))

    def as_array(self) -> np.ndarray:
        """Samples x nodes array of voltages."""
        return np.vstack(self.voltages)

    def node(self, name: str) -> np.ndarray:
        return self.as_array()[:, self.node_names.index(name)]

    @property
    def steps_taken(self) -> int:
        return len(self.step_log)

    @property
    def fallbacks(self) -> int:
        return sum(r.fallback for r in self.step_log)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(",".join(["time", *self.node_names]) + "\n")
        for t, v in zip(self.times, self.voltages):
            out.write(",".join([_fmt(t), *map(_fmt, v)]) + "\n")
        return out.getvalue()

    def step_log_csv(self) -> str:
        out = io.StringIO()
        out.write("time,dt,dominance_margin,solver_iterations,fallback\n")
        for r in self.step_log:
            out.write(f"{_fmt(r.time)},{_fmt(r.dt)},{_fmt(r.dominance_margin)},"
                      f"{r.solver_iterations},{int(r.fallback)}\n")
        return out.getvalue()


def read_waveform_csv(text: str) -> Waveform:
    lines = text.strip("\n").split("\n")
    header = lines[0].split(",")
    if header[0] != "time":
        raise ValueError("waveform CSV must start with a 'time' column")
    wf = Waveform(header[1:])
    for line in lines[1:]:
        vals = [float(v) for v in line.split(",")]
        wf.append(vals[0], np.array(vals[1:]))
    return wf


def _node_name(sys: AssembledSystem, row: int) -> str:
    return sys.node_names[row]


def linearized_step(sys: AssembledSystem, is_vec=None, dt: float = 0.0,
                    solver: SolverConfig = SolverConfig(), force_direct: bool = False,
                    rhs=None):
    """Solve (C/dt + G) dx = i_s - F and return ``(x_ref + dx, result)``.

    ``rhs`` replaces i_s - F when given (used by the Newton loop).  An
    iterative solve that does not converge is redone by LU and the result
    carries ``fallback=True``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    is_vec = sys.is_vector if is_vec is None else np.asarray(is_vec, dtype=np.float64)
    a = system_matrix(sys.c_matrix, sys.g_matrix, dt)
    zero = np.flatnonzero(a.diagonal() == 0)
    if zero.size:
        raise SingularNode(f"node {_node_name(sys, int(zero[0]))!r} has no capacitance or "
                           "conductance on its diagonal")
    b = is_vec - sys.f_vector if rhs is None else rhs
    lin = LinearSystem(a, b, dt)
    tried = 0
    if force_direct or solver.method is Method.LU:
        fallback = force_direct and solver.method is not Method.LU
    else:
        try:
            attempt = solve(lin, solver)
        except ZeroDiagonal:
            attempt = None
        if attempt is not None and attempt.converged:
            return StateVector(sys.x_ref + attempt.x), attempt
        tried = attempt.iterations if attempt is not None else 0
        fallback = True
    result = solve_direct(lin)
    result.fallback = fallback
    result.iterations = tried
    return StateVector(sys.x_ref + result.x), result


def dc_initial_state(circuit: Circuit) -> StateVector:
    """Zero volts on every unknown node, overridden by any .IC values.

    Source-pinned nodes are not unknowns; they sit at their source value.
    No operating-point solve is attempted.
    """
    asm = assembler_for(circuit)
    x = np.zeros(asm.n)
    for node, volts in circuit.initial_conditions.items():
        x[asm.node_index[node]] = volts
    return StateVector(x)


def _newton_step(asm, sys0, x_prev, dt, mode: FullNewton, solver, force_direct):
    x_it = x_prev.copy()
    sys_k = sys0
    iters, fallback = 0, False
    delta = math.inf
    scale = 1.0 + float(np.max(np.abs(sys0.is_vector), initial=0.0))
    for k in range(mode.max_newton + 1):
        if k:
            sys_k = asm.assemble(x_it)
        r = kcl_residual(sys_k, x_it, x_prev, dt)
        if k and delta <= mode.tol_v and np.max(np.abs(r)) <= mode.kcl_tol * scale:
            return x_it, iters, fallback
        if k == mode.max_newton:
            break
        new, res = linearized_step(sys_k, dt=dt, solver=solver, force_direct=force_direct, rhs=-r)
        iters += res.iterations
        fallback |= res.fallback
        delta = float(np.max(np.abs(new.values - x_it)))
        x_it = new.values.copy()
    raise NonConvergence(f"Newton did not converge in {mode.max_newton} iterations at dt={dt:.3e}")


def run_transient(circuit: Circuit, x0=None, cfg: TransientConfig | None = None) -> Waveform:
    """Integrate from ``x0`` (default :func:`dc_initial_state`) to ``cfg.t_stop``."""
    if cfg is None:
        tran = circuit.require_tran()
        policy = None
        if circuit.step_mode is not None and circuit.step_mode.value == "DOMINANT":
            policy = DominantStep(tran.dt_request)
        cfg = TransientConfig(tran.dt_request, tran.t_stop, policy)
    asm = assembler_for(circuit, cfg.gmin)
    x = (dc_initial_state(circuit) if x0 is None else x0)
    x = x.values if isinstance(x, StateVector) else np.asarray(x, dtype=np.float64)
    x = asm.full_vector(x)[:asm.n]

    wf = Waveform(list(circuit.nodes))
    wf.append(0.0, asm.node_voltages(x))
    t, t_stop = 0.0, cfg.t_stop
    while t < t_stop:
        if len(wf.step_log) >= cfg.max_steps:
            raise StepLimitExceeded(f"more than {cfg.max_steps} steps before t_stop")
        sys = asm.assemble(x)
        choice = choose_step(cfg.step_policy, sys)
        dt = min(choice.dt, t_stop - t)
        for attempt in range(2):
            try:
                if isinstance(cfg.newton_mode, FullNewton):
                    x_new, iters, fallback = _newton_step(asm, sys, x, dt, cfg.newton_mode,
                                                          cfg.solver, choice.flagged)
                else:
                    new, res = linearized_step(sys, dt=dt, solver=cfg.solver,
                                               force_direct=choice.flagged)
                    x_new, iters, fallback = new.values, res.iterations, res.fallback
                break
            except (Singular, NonConvergence):
                if attempt:
                    raise
                dt *= 0.5
        margin = check_dominance(system_matrix(sys.c_matrix, sys.g_matrix, dt)).margin
        t_new = t + dt
        if t_stop - t_new <= 1e-9 * dt:
            t_new = t_stop
        x = np.array(x_new)
        wf.append(t_new, asm.node_voltages(x))
        wf.step_log.append(StepRecord(t_new, dt, margin, iters, fallback))
        t = t_new
    return wf
