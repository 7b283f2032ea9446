"""Shichman-Hodges (level 1) MOSFET and gate-capacitance models.

Channel-length modulation and body effect are not modelled.  PMOS
devices are evaluated on the NMOS equations after negating the
controlling voltages and the threshold; the current is then negated.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .netlist import Mos1Params, Polarity


class Region(str, Enum):
    CUTOFF = "cutoff"
    LINEAR = "linear"
    SATURATION = "saturation"


@dataclass(frozen=True)
class MosOperatingPoint:
    """Drain current and its partial derivatives at one bias point.

    ``ids`` is the current entering the drain terminal; ``gm`` and ``gds``
    are d(ids)/d(vgs) and d(ids)/d(vds).
    """

    region: Region
    ids: float
    gm: float
    gds: float


@dataclass(frozen=True)
class GateCapacitance:
    cg: float


def _forward(beta, vov, vds):
    """NMOS equations for vds >= 0; returns (ids, gm, gds, code)."""
    on = vov > 0
    sat = on & (vds >= vov)
    lin = on & ~sat
    ids = np.where(sat, 0.5 * beta * vov * vov,
                   np.where(lin, beta * (vov * vds - 0.5 * vds * vds), 0.0))
    gm = np.where(sat, beta * vov, np.where(lin, beta * vds, 0.0))
    gds = np.where(lin, beta * (vov - vds), 0.0)
    code = np.where(sat, 2, np.where(lin, 1, 0))
    return ids, gm, gds, code


def mos1_arrays(polarity_sign, beta, vth, vgs, vds):
    """Vectorised level-1 evaluation.

    ``polarity_sign`` is +1 for NMOS and -1 for PMOS; ``vth`` is the SPICE
    threshold (negative for enhancement PMOS).  For vds < 0 the drain and
    source roles swap.  Returns ``(ids, gm, gds, region_code)`` with codes
    0 cutoff, 1 linear, 2 saturation.
    """
    sign = np.asarray(polarity_sign, dtype=float)
    vgs_n = sign * np.asarray(vgs, dtype=float)
    vds_n = sign * np.asarray(vds, dtype=float)
    vt = sign * np.asarray(vth, dtype=float)
    beta = np.asarray(beta, dtype=float)

    rev = vds_n < 0
    # reversed operation: the source terminal acts as drain
    vc = np.where(rev, vgs_n - vds_n, vgs_n)
    vd = np.abs(vds_n)
    ids, hg, hd, code = _forward(beta, vc - vt, vd)
    ids_n = np.where(rev, -ids, ids)
    gm = np.where(rev, -hg, hg)
    gds = np.where(rev, hg + hd, hd)
    return sign * ids_n, gm, gds, code


def mos1_evaluate(params: Mos1Params, vgs: float, vds: float) -> MosOperatingPoint:
    """Evaluate a level-1 MOSFET at terminal voltages ``vgs`` and ``vds``."""
    sign = 1.0 if params.polarity is Polarity.NMOS else -1.0
    ids, gm, gds, code = mos1_arrays(sign, params.beta, params.vth, vgs, vds)
    region = (Region.CUTOFF, Region.LINEAR, Region.SATURATION)[int(code)]
    return MosOperatingPoint(region, float(ids), float(gm), float(gds))


def gate_capacitance(params: Mos1Params) -> GateCapacitance:
    """Lumped, bias-independent gate load W * L * Cox."""
    return GateCapacitance(params.w * params.l * params.cox)
