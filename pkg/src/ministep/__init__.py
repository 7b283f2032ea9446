"""Mini-step transient circuit simulation.

Time steps are chosen small enough that C/dt + G is strictly diagonally
dominant, so Jacobi, Gauss-Seidel and block-Jacobi solves of every step
are guaranteed to converge.
"""
from .assembly import AssembledSystem, StateVector, assemble, kcl_residual
from .devices import MosOperatingPoint, Region, gate_capacitance, mos1_evaluate
from .netlist import (Capacitor, Circuit, CurrentSource, Mos1, Mos1Params, ParseError,
                      Polarity, Resistor, VoltageSource, parse_netlist, serialize_netlist)
from .solvers import (LinearSystem, Method, SolverConfig, SolveResult, solve_block_jacobi,
                      solve_direct, solve_gauss_seidel, solve_jacobi)
from .sparse import SparseMatrix
from .stepcontrol import (DominantStep, FixedStep, TechnologyParams, check_dominance, choose_step,
                          max_dominant_step, max_step_technology)
from .transient import (FullNewton, SingleLinearization, TransientConfig, Waveform,
                        dc_initial_state, linearized_step, run_transient)

__version__ = "0.1.0"
