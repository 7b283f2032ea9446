"""Nodal stamping of a circuit at a given state.

The unknown vector holds the voltages of every non-ground node that is
not pinned by a voltage source.  Pinned nodes keep their source value and
enter the conductive current ``F = f(x)`` through the full node vector;
since sources are DC, capacitive coupling to them carries no current.

A circuit's sparsity pattern is built once (``Assembler``) and reused for
every evaluation; only the numeric values change between calls.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .devices import gate_capacitance, mos1_arrays
from .netlist import (GROUND, Capacitor, Circuit, CircuitError, CurrentSource, Mos1,
                      Polarity, Resistor, VoltageSource)
from .sparse import SparseMatrix


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class StateVector:
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 1 or not np.all(np.isfinite(v)):
            raise ValueError("state must be a finite 1-D vector")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size


def _values(x) -> np.ndarray:
    return x.values if isinstance(x, StateVector) else np.asarray(x, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class AssembledSystem:
    """The linearisation of the nodal equations at ``x_ref``.

    ``g_matrix`` is df/dx, ``f_vector`` the conductive current f(x_ref)
    leaving each node, ``is_vector`` the injected source current.
    """

    c_matrix: SparseMatrix
    g_matrix: SparseMatrix
    f_vector: np.ndarray
    is_vector: np.ndarray
    x_ref: np.ndarray
    node_index: dict

    @property
    def n(self) -> int:
        return self.c_matrix.n

    @property
    def node_names(self) -> list[str]:
        return list(self.node_index)


class Assembler:
    """Precomputed stamping plan for one circuit."""

    def __init__(self, circuit: Circuit, gmin: float = 0.0):
        if gmin < 0:
            raise ValueError("gmin must be nonnegative")
        self.circuit = circuit
        self.gmin = float(gmin)
        pinned = {d.n_plus: d.volts for d in circuit.devices if isinstance(d, VoltageSource)}
        self.unknowns = [n for n in circuit.nodes if n not in pinned]
        self.known = [n for n in circuit.nodes if n in pinned]
        if not self.unknowns:
            raise CircuitError("circuit has no unknown node voltages to simulate")
        n = self.n = len(self.unknowns)
        full = {name: i for i, name in enumerate(self.unknowns + self.known)}
        full[GROUND] = len(full)
        self.full_index = full
        self.node_index = {name: i for i, name in enumerate(self.unknowns)}
        self.fixed = np.array([pinned[k] for k in self.known] + [0.0])

        c_trip, g_trip = [], []
        self._is = np.zeros(len(full))
        for dev in circuit.devices:
            if isinstance(dev, (Resistor, Capacitor)):
                a, b = full[dev.n1], full[dev.n2]
                v = 1.0 / dev.ohms if isinstance(dev, Resistor) else dev.farads
                target = g_trip if isinstance(dev, Resistor) else c_trip
                target += [(a, a, v), (b, b, v), (a, b, -v), (b, a, -v)]
            elif isinstance(dev, CurrentSource):
                self._is[full[dev.n_plus]] -= dev.amps
                self._is[full[dev.n_minus]] += dev.amps
            elif isinstance(dev, Mos1):
                g = full[dev.ng]
                c_trip.append((g, g, gate_capacitance(dev.params).cg))
        self.is_vector = self._is[:n].copy()

        mos = [d for d in circuit.devices if isinstance(d, Mos1)]
        self._mos_d = np.array([full[d.nd] for d in mos], dtype=np.int64)
        self._mos_g = np.array([full[d.ng] for d in mos], dtype=np.int64)
        self._mos_s = np.array([full[d.ns] for d in mos], dtype=np.int64)
        self._mos_sign = np.array([1.0 if d.params.polarity is Polarity.NMOS else -1.0 for d in mos])
        self._mos_beta = np.array([d.params.beta for d in mos])
        self._mos_vth = np.array([d.params.vth for d in mos])
        # small-signal stencil: (row, col, quantity, sign); quantity 0=gds, 1=gm, 2=gm+gds
        stencil = []
        for k, d in enumerate(mos):
            dd, gg, ss = full[d.nd], full[d.ng], full[d.ns]
            stencil += [(dd, dd, 0, 1.0, k), (dd, gg, 1, 1.0, k), (dd, ss, 2, -1.0, k),
                        (ss, dd, 0, -1.0, k), (ss, gg, 1, -1.0, k), (ss, ss, 2, 1.0, k)]

        # symbolic pass: one shared pattern for C and G over unknown rows/cols
        pairs = {(i, i) for i in range(n)}
        for r, c, _ in c_trip + g_trip:
            if r < n and c < n:
                pairs.add((r, c))
        for r, c, *_ in stencil:
            if r < n and c < n:
                pairs.add((r, c))
        ordered = sorted(pairs)
        rows = np.array([p[0] for p in ordered], dtype=np.int64)
        self._indices = np.array([p[1] for p in ordered], dtype=np.int64)
        counts = np.bincount(rows, minlength=n)
        self._indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        slot = {p: k for k, p in enumerate(ordered)}
        nnz = len(ordered)

        def fill(trip):
            data = np.zeros(nnz)
            for r, c, v in trip:
                if r < n and c < n:
                    data[slot[(r, c)]] += v
            return data

        self._c_data = fill(c_trip)
        self._g_lin = fill(g_trip)
        diag = np.array([slot[(i, i)] for i in range(n)], dtype=np.int64)
        self._g_lin[diag] += self.gmin
        # linear conductive current: rows restricted to unknowns, all columns
        lin = [(r, c, v) for r, c, v in g_trip if r < n]
        lin += [(i, i, self.gmin) for i in range(n) if self.gmin]
        self._lin_r = np.array([t[0] for t in lin], dtype=np.int64)
        self._lin_c = np.array([t[1] for t in lin], dtype=np.int64)
        self._lin_v = np.array([t[2] for t in lin])

        keep = [t for t in stencil if t[0] < n and t[1] < n]
        self._st_pos = np.array([slot[(t[0], t[1])] for t in keep], dtype=np.int64)
        self._st_kind = np.array([t[2] for t in keep], dtype=np.int64)
        self._st_sign = np.array([t[3] for t in keep])
        self._st_dev = np.array([t[4] for t in keep], dtype=np.int64)

        self.c_matrix = SparseMatrix(n, self._indptr, self._indices, self._c_data)

    def full_vector(self, x) -> np.ndarray:
        """Unknown voltages followed by pinned voltages and ground."""
        x = _values(x)
        if x.shape != (self.n,):
            raise DimensionMismatch(f"state has {x.size} entries, circuit has {self.n} unknowns")
        return np.concatenate([x, self.fixed])

    def node_voltages(self, x) -> np.ndarray:
        """All non-ground node voltages in the circuit's node-table order."""
        full = self.full_vector(x)
        return np.array([full[self.full_index[name]] for name in self.circuit.nodes])

    def assemble(self, x) -> AssembledSystem:
        xf = self.full_vector(x)
        n = self.n
        f_full = np.zeros(xf.size)
        f_full[:n] = np.bincount(self._lin_r, weights=self._lin_v * xf[self._lin_c], minlength=n)
        g_data = self._g_lin.copy()
        if self._mos_d.size:
            vgs = xf[self._mos_g] - xf[self._mos_s]
            vds = xf[self._mos_d] - xf[self._mos_s]
            ids, gm, gds, _ = mos1_arrays(self._mos_sign, self._mos_beta, self._mos_vth, vgs, vds)
            np.add.at(f_full, self._mos_d, ids)
            np.add.at(f_full, self._mos_s, -ids)
            if self._st_pos.size:
                qty = np.stack([gds, gm, gm + gds])
                np.add.at(g_data, self._st_pos, self._st_sign * qty[self._st_kind, self._st_dev])
        g = SparseMatrix(n, self._indptr, self._indices, g_data)
        return AssembledSystem(self.c_matrix, g, f_full[:n], self.is_vector.copy(),
                               xf[:n].copy(), dict(self.node_index))


@functools.lru_cache(maxsize=64)
def assembler_for(circuit: Circuit, gmin: float = 0.0) -> Assembler:
    return Assembler(circuit, gmin)


def assemble(circuit: Circuit, x, gmin: float = 0.0) -> AssembledSystem:
    """Stamp ``circuit`` at state ``x`` (unknown node voltages)."""
    return assembler_for(circuit, gmin).assemble(x)


def system_matrix(c: SparseMatrix, g: SparseMatrix, dt: float) -> SparseMatrix:
    """C / dt + G."""
    if c.same_pattern(g):
        return c.with_data(c.data / dt + g.data)
    return SparseMatrix.from_dense(c.to_dense() / dt + g.to_dense())


def kcl_residual(sys: AssembledSystem, x_new, x_old, dt: float) -> np.ndarray:
    """Backward-Euler balance C (x_new - x_old)/dt + f(x_new) - i_s.

    ``sys`` must be assembled at ``x_new`` so that its ``f_vector`` is
    f(x_new).
    """
    xn, xo = _values(x_new), _values(x_old)
    if xn.shape != (sys.n,) or xo.shape != (sys.n,):
        raise DimensionMismatch("state dimension does not match the assembled system")
    if not np.array_equal(sys.x_ref, xn):
        raise ValueError("system must be assembled at x_new")
    if dt <= 0:
        raise ValueError("dt must be positive")
    return sys.c_matrix.matvec(xn - xo) / dt + sys.f_vector - sys.is_vector
