"""Mini-step control: maximum time steps that keep C/dt + G diagonally dominant."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .assembly import AssembledSystem
from .sparse import SparseMatrix

ROW_RTOL = 64 * np.finfo(float).eps


@dataclass(frozen=True)
class TechnologyParams:
    """Process corner for the technology-level estimate.

    ``vdd`` is the supply; the gate overdrive is taken as vdd / 2.
    """

    l_min: float
    mu0: float
    vdd: float

    def __post_init__(self):
        for name in ("l_min", "mu0", "vdd"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")


def max_step_technology(tech: TechnologyParams) -> float:
    """Technology estimate L^2 * Vdd / (2 * mu0).

    For L = 100 nm, mu0 = 1 m^2/(V s), Vdd = 1 V this gives 5 fs.
    """
    return tech.l_min ** 2 * tech.vdd / (2.0 * tech.mu0)


def max_step_technology_derived(tech: TechnologyParams) -> float:
    """Bound Cg/gm = L^2 / (mu0 * (Vgs - Vth)) with Vgs - Vth = Vdd / 2.

    This follows from requiring 2Cg/dt > 2gm directly, and is 4x
    :func:`max_step_technology` at Vdd = 1 V.
    """
    return 2.0 * tech.l_min ** 2 / (tech.mu0 * tech.vdd)


@dataclass(frozen=True)
class DominanceReport:
    """Strict row-dominance summary.

    ``margin`` is the minimum over rows of (|a_ii| - sum_j!=i |a_ij|) / |a_ii|,
    or -inf when some diagonal entry is zero.
    """

    is_dominant: bool
    worst_row: int
    margin: float


def check_dominance(a: SparseMatrix) -> DominanceReport:
    diag = np.abs(a.diagonal())
    off = a.offdiag_abs_sum()
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(diag > 0, (diag - off) / np.where(diag > 0, diag, 1.0), -np.inf)
    worst = int(np.argmin(rel))
    margin = float(rel[worst])
    return DominanceReport(margin > 0, worst, margin)


@dataclass(frozen=True)
class StepBound:
    """Result of :func:`max_dominant_step`.

    ``dt`` is the supremum of admissible steps: ``math.inf`` when no row
    constrains it, ``0.0`` when some row can never be made dominant (then
    ``never_dominant`` is True and ``row`` names that row).
    """

    dt: float
    row: int
    never_dominant: bool = False

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.dt)


def max_dominant_step(c: SparseMatrix, g: SparseMatrix) -> StepBound:
    """Largest dt for which C/dt + G is strictly row diagonally dominant.

    Per row, |g_ij + c_ij/dt| is bounded by |g_ij| + |c_ij|/dt, which gives
    the closed form dt < (c_ii - sum|c_ij|) / (sum|g_ij| - g_ii); the bound
    is exact when C is diagonal and g_ii >= 0.
    """
    if c.n != g.n:
        raise ValueError("C and G dimensions differ")
    num = c.diagonal() - c.offdiag_abs_sum()
    g_off, g_diag = g.offdiag_abs_sum(), g.diagonal()
    den = g_off - g_diag
    # a weakly dominant G row leaves rounding residue in den; treat it as zero
    den[np.abs(den) <= ROW_RTOL * (g_off + np.abs(g_diag))] = 0.0
    never = ((den > 0) & (num <= 0)) | ((den == 0) & (num <= 0)) | ((den < 0) & (num < 0))
    if never.any():
        return StepBound(0.0, int(np.argmax(never)), True)
    constraining = den > 0
    if not constraining.any():
        return StepBound(math.inf, -1)
    bounds = np.where(constraining, num / np.where(constraining, den, 1.0), np.inf)
    row = int(np.argmin(bounds))
    return StepBound(float(bounds[row]), row)


@dataclass(frozen=True)
class FixedStep:
    dt: float

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError("dt must be positive")


@dataclass(frozen=True)
class DominantStep:
    dt_request: float
    safety: float = 0.9
    dt_floor: float = 1e-18

    def __post_init__(self):
        if not 0 < self.safety < 1:
            raise ValueError("safety must lie in (0, 1)")
        if not (self.dt_request > self.dt_floor > 0):
            raise ValueError("need dt_request > dt_floor > 0")


StepPolicy = Union[FixedStep, DominantStep]


@dataclass(frozen=True)
class StepChoice:
    dt: float
    bound: StepBound | None = None
    flagged: bool = False


def choose_step(policy: StepPolicy, sys: AssembledSystem) -> StepChoice:
    """Pick the step for the system assembled at the current state.

    ``flagged`` marks steps where no dt makes the matrix dominant; the
    engine then solves them directly.
    """
    if isinstance(policy, FixedStep):
        return StepChoice(policy.dt)
    bound = max_dominant_step(sys.c_matrix, sys.g_matrix)
    if bound.never_dominant:
        return StepChoice(policy.dt_floor, bound, True)
    dt = min(policy.dt_request, policy.safety * bound.dt)
    return StepChoice(max(dt, policy.dt_floor), bound)
