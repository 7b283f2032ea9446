"""Restricted SPICE netlist: circuit data model, parser and serializer.

Grammar, one card per line, case-insensitive::

    R<name> n1 n2 <ohms>
    C<name> n1 n2 <farads>
    I<name> n+ n- <amps>
    V<name> n+ 0 <volts>
    M<name> nd ng ns <NMOS|PMOS> W=<m> L=<m> KP=<A/V^2> VTO=<V> COX=<F/m^2>
    .TRAN <dt> <tstop>
    .STEPMODE <FIXED|DOMINANT>
    .IC V(<node>)=<volts> ...
    .END

Lines starting with ``*`` are comments, ``;`` starts an inline comment.
Numbers accept engineering suffixes (t g meg k m u n p f); trailing unit
letters after the suffix are ignored, as in SPICE.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum
from typing import Union

GROUND = "0"


class NetlistError(Exception):
    """Base class for netlist problems."""


class CircuitError(NetlistError, ValueError):
    """A Circuit or device was constructed with invalid contents."""


class ParseError(NetlistError):
    """A netlist line could not be parsed.  Carries 1-based line and column."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.message = message
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(where + message)


class UnknownCard(ParseError):
    pass


class BadValue(ParseError):
    pass


class DuplicateName(ParseError):
    pass


class FloatingVoltageSource(ParseError):
    pass


class EmptyCircuit(ParseError):
    pass


class MissingTran(NetlistError):
    """Simulation was requested but no .TRAN times were given."""


class Polarity(str, Enum):
    NMOS = "NMOS"
    PMOS = "PMOS"


class StepMode(str, Enum):
    FIXED = "FIXED"
    DOMINANT = "DOMINANT"


def _finite(value: float, what: str) -> None:
    if not math.isfinite(value):
        raise CircuitError(f"{what} must be finite, got {value!r}")


def _positive(value: float, what: str) -> None:
    _finite(value, what)
    if value <= 0:
        raise CircuitError(f"{what} must be positive, got {value!r}")


@dataclass(frozen=True)
class Mos1Params:
    """Level-1 MOSFET parameters.

    ``vth`` follows the SPICE sign convention: positive for enhancement
    NMOS, negative for enhancement PMOS.
    """

    polarity: Polarity
    w: float
    l: float
    kp: float
    vth: float
    cox: float

    def __post_init__(self):
        object.__setattr__(self, "polarity", Polarity(self.polarity))
        for name in ("w", "l", "kp", "cox"):
            _positive(getattr(self, name), name.upper())
        _finite(self.vth, "VTO")

    @property
    def beta(self) -> float:
        """Kp * (W / L)."""
        return self.kp * (self.w / self.l)


@dataclass(frozen=True)
class Resistor:
    name: str
    n1: str
    n2: str
    ohms: float

    def __post_init__(self):
        _positive(self.ohms, f"{self.name} resistance")

    @property
    def terminals(self) -> tuple[str, ...]:
        return (self.n1, self.n2)


@dataclass(frozen=True)
class Capacitor:
    name: str
    n1: str
    n2: str
    farads: float

    def __post_init__(self):
        _positive(self.farads, f"{self.name} capacitance")

    @property
    def terminals(self) -> tuple[str, ...]:
        return (self.n1, self.n2)


@dataclass(frozen=True)
class CurrentSource:
    """DC current flowing from ``n_plus`` through the source to ``n_minus``."""

    name: str
    n_plus: str
    n_minus: str
    amps: float

    def __post_init__(self):
        _finite(self.amps, f"{self.name} current")

    @property
    def terminals(self) -> tuple[str, ...]:
        return (self.n_plus, self.n_minus)


@dataclass(frozen=True)
class VoltageSource:
    name: str
    n_plus: str
    n_minus: str
    volts: float

    def __post_init__(self):
        _finite(self.volts, f"{self.name} voltage")
        if self.n_minus != GROUND:
            raise CircuitError(f"{self.name}: negative terminal must be ground")
        if self.n_plus == GROUND:
            raise CircuitError(f"{self.name}: positive terminal cannot be ground")

    @property
    def terminals(self) -> tuple[str, ...]:
        return (self.n_plus, self.n_minus)


@dataclass(frozen=True)
class Mos1:
    name: str
    nd: str
    ng: str
    ns: str
    params: Mos1Params

    @property
    def terminals(self) -> tuple[str, ...]:
        return (self.nd, self.ng, self.ns)


Device = Union[Resistor, Capacitor, CurrentSource, VoltageSource, Mos1]


@dataclass(frozen=True)
class Tran:
    dt_request: float
    t_stop: float

    def __post_init__(self):
        _positive(self.dt_request, ".TRAN step")
        _positive(self.t_stop, ".TRAN stop time")
        if self.t_stop <= self.dt_request:
            raise CircuitError(".TRAN stop time must exceed the step")


@dataclass(frozen=True)
class MaxStepMode:
    mode: StepMode

    def __post_init__(self):
        object.__setattr__(self, "mode", StepMode(self.mode))


@dataclass(frozen=True)
class InitialCondition:
    node: str
    volts: float

    def __post_init__(self):
        _finite(self.volts, f"initial condition on {self.node}")


AnalysisDirective = Union[Tran, MaxStepMode, InitialCondition]


@dataclass(frozen=True)
class Circuit:
    """A validated, immutable circuit.

    ``nodes`` lists the non-ground node names in first-appearance order;
    ground ("0") is implicit.
    """

    nodes: tuple[str, ...]
    devices: tuple[Device, ...]
    analyses: tuple[AnalysisDirective, ...] = ()
    _lookup: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "devices", tuple(self.devices))
        object.__setattr__(self, "analyses", tuple(self.analyses))
        if not self.devices:
            raise CircuitError("circuit has no devices")
        keys = [n.casefold() for n in self.nodes]
        if GROUND in keys:
            raise CircuitError("ground is implicit and cannot be listed in nodes")
        if len(set(keys)) != len(keys):
            raise CircuitError("node names must be unique (case-insensitive)")
        names = [d.name.casefold() for d in self.devices]
        if len(set(names)) != len(names):
            raise CircuitError("device names must be unique (case-insensitive)")
        known = set(self.nodes) | {GROUND}
        driven = {}
        for dev in self.devices:
            for t in dev.terminals:
                if t not in known:
                    raise CircuitError(f"{dev.name} references undeclared node {t!r}")
            if isinstance(dev, VoltageSource):
                if dev.n_plus in driven:
                    raise CircuitError(
                        f"node {dev.n_plus!r} driven by both {driven[dev.n_plus]} and {dev.name}")
                driven[dev.n_plus] = dev.name
        for a in self.analyses:
            if isinstance(a, InitialCondition) and a.node not in self.nodes:
                raise CircuitError(f"initial condition on unknown node {a.node!r}")
        object.__setattr__(self, "_lookup", {k: n for k, n in zip(keys, self.nodes)})

    @classmethod
    def from_devices(cls, devices, analyses=()) -> "Circuit":
        """Build a circuit whose node table is the first-appearance order of terminals."""
        seen: dict[str, None] = {}
        for dev in devices:
            for t in dev.terminals:
                if t != GROUND:
                    seen.setdefault(t, None)
        return cls(tuple(seen), tuple(devices), tuple(analyses))

    def canonical_node(self, name: str) -> str:
        """Map a node name, compared case-insensitively, to its stored spelling."""
        if name == GROUND:
            return GROUND
        return self._lookup[name.casefold()]

    @property
    def tran(self) -> Tran | None:
        found = [a for a in self.analyses if isinstance(a, Tran)]
        return found[-1] if found else None

    @property
    def step_mode(self) -> StepMode | None:
        found = [a for a in self.analyses if isinstance(a, MaxStepMode)]
        return found[-1].mode if found else None

    @property
    def initial_conditions(self) -> dict[str, float]:
        return {a.node: a.volts for a in self.analyses if isinstance(a, InitialCondition)}

    def require_tran(self) -> Tran:
        tran = self.tran
        if tran is None:
            raise MissingTran("netlist has no .TRAN directive and no times were supplied")
        return tran


# ---------------------------------------------------------------- parsing

_SUFFIX = {
    "t": 1e12, "g": 1e9, "meg": 1e6, "k": 1e3, "m": 1e-3,
    "u": 1e-6, "n": 1e-9, "p": 1e-12, "f": 1e-15,
}
_NUMBER = re.compile(
    r"([+-]?(?:\d+\.?\d*|\.\d+)(?:e[+-]?\d+)?)(meg|[tgkmunpf])?[a-z]*",
    re.IGNORECASE,
)
_IC_ITEM = re.compile(r"v\(([^()\s=]+)\)=(\S+)", re.IGNORECASE)


def parse_value(token: str) -> float:
    """Parse a SPICE number such as ``1k``, ``2.5e-3`` or ``10fF``.

    Raises ValueError for anything else.
    """
    m = _NUMBER.fullmatch(token)
    if m is None:
        raise ValueError(f"not a number: {token!r}")
    value = float(m.group(1))
    if m.group(2):
        value *= _SUFFIX[m.group(2).lower()]
    if not math.isfinite(value):
        raise ValueError(f"not a finite number: {token!r}")
    return value


class _Line:
    def __init__(self, text: str, lineno: int):
        self.lineno = lineno
        self.tokens = []
        self.cols = []
        for m in re.finditer(r"\S+", text):
            self.tokens.append(m.group())
            self.cols.append(m.start() + 1)

    def error(self, cls, msg, tok=0):
        col = self.cols[tok] if tok < len(self.cols) else (self.cols[-1] if self.cols else 1)
        return cls(msg, self.lineno, col)

    def number(self, tok: int, positive: bool = False) -> float:
        try:
            value = parse_value(self.tokens[tok])
        except ValueError:
            raise self.error(BadValue, f"bad numeric value {self.tokens[tok]!r}", tok) from None
        if positive and value <= 0:
            raise self.error(BadValue, f"value must be positive, got {self.tokens[tok]!r}", tok)
        return value


def _strip_comment(raw: str) -> str:
    if raw.lstrip().startswith("*"):
        return ""
    return raw.split(";", 1)[0]


def parse_netlist(text: str) -> Circuit:
    """Parse netlist text into a :class:`Circuit`.

    Every failure raises a :class:`ParseError` subclass carrying the line
    and column of the offending token.
    """
    nodes: dict[str, str] = {}
    order: list[str] = []
    devices: list = []
    analyses: list = []
    names: dict[str, int] = {}
    driven: dict[str, int] = {}
    pending_ic: list[tuple[_Line, int, str, float]] = []

    def node(line: _Line, tok: int) -> str:
        name = line.tokens[tok]
        if name == GROUND:
            return GROUND
        key = name.casefold()
        if key not in nodes:
            nodes[key] = name
            order.append(name)
        return nodes[key]

    def arity(line: _Line, n: int, form: str):
        if len(line.tokens) != n:
            raise line.error(BadValue, f"expected {n} fields: {form}", min(len(line.tokens), n) - 1)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _Line(_strip_comment(raw), lineno)
        if not line.tokens:
            continue
        head = line.tokens[0]
        kind = head[0].upper()
        if kind == ".":
            card = head.upper()
            if card == ".TRAN":
                arity(line, 3, ".TRAN <dt> <tstop>")
                dt = line.number(1, positive=True)
                stop = line.number(2, positive=True)
                if stop <= dt:
                    raise line.error(BadValue, ".TRAN stop time must exceed the step", 2)
                analyses.append(Tran(dt, stop))
            elif card == ".STEPMODE":
                arity(line, 2, ".STEPMODE <FIXED|DOMINANT>")
                try:
                    analyses.append(MaxStepMode(StepMode(line.tokens[1].upper())))
                except ValueError:
                    raise line.error(BadValue, f"unknown step mode {line.tokens[1]!r}", 1) from None
            elif card == ".IC":
                if len(line.tokens) < 2:
                    raise line.error(BadValue, "expected .IC V(<node>)=<volts> ...", 0)
                for tok in range(1, len(line.tokens)):
                    m = _IC_ITEM.fullmatch(line.tokens[tok])
                    if m is None:
                        raise line.error(BadValue, f"bad .IC item {line.tokens[tok]!r}", tok)
                    try:
                        volts = parse_value(m.group(2))
                    except ValueError:
                        raise line.error(BadValue, f"bad numeric value {m.group(2)!r}", tok) from None
                    pending_ic.append((line, tok, m.group(1), volts))
            elif card == ".END":
                break
            else:
                raise line.error(UnknownCard, f"unknown directive {head!r}")
            continue

        if kind not in "RCIVM":
            raise line.error(UnknownCard, f"unknown card {head!r}")
        key = head.casefold()
        if key in names:
            raise line.error(DuplicateName, f"duplicate device name {head!r} (first on line {names[key]})")
        names[key] = lineno

        if kind in "RC":
            arity(line, 4, f"{kind}<name> n1 n2 <value>")
            n1, n2 = node(line, 1), node(line, 2)
            value = line.number(3, positive=True)
            cls = Resistor if kind == "R" else Capacitor
            devices.append(cls(head, n1, n2, value))
        elif kind == "I":
            arity(line, 4, "I<name> n+ n- <amps>")
            devices.append(CurrentSource(head, node(line, 1), node(line, 2), line.number(3)))
        elif kind == "V":
            arity(line, 4, "V<name> n+ 0 <volts>")
            if line.tokens[2] != GROUND:
                raise line.error(FloatingVoltageSource,
                                 f"{head}: negative terminal must be ground (0)", 2)
            if line.tokens[1] == GROUND:
                raise line.error(BadValue, f"{head}: both terminals are ground", 1)
            n_plus = node(line, 1)
            if n_plus in driven:
                raise line.error(BadValue,
                                 f"node {n_plus!r} already driven by a source on line {driven[n_plus]}", 1)
            driven[n_plus] = lineno
            devices.append(VoltageSource(head, n_plus, GROUND, line.number(3)))
        else:
            devices.append(_parse_mos(line, node))

    for line, tok, name, volts in pending_ic:
        key = name.casefold()
        if key not in nodes:
            raise line.error(BadValue, f".IC references unknown node {name!r}", tok)
        if nodes[key] in driven:
            raise line.error(BadValue, f".IC on source-driven node {name!r}", tok)
        analyses.append(InitialCondition(nodes[key], volts))

    if not devices:
        raise EmptyCircuit("netlist contains no devices", 1, 1)
    try:
        return Circuit(tuple(order), tuple(devices), tuple(analyses))
    except CircuitError as exc:  # pragma: no cover - parser checks come first
        raise BadValue(str(exc), 1, 1) from exc


_MOS_KEYS = {"W": "w", "L": "l", "KP": "kp", "VTO": "vth", "COX": "cox"}


def _parse_mos(line: _Line, node) -> Mos1:
    toks = line.tokens
    if len(toks) < 5:
        raise line.error(BadValue, "expected M<name> nd ng ns <NMOS|PMOS> W= L= KP= VTO= COX=",
                         len(toks) - 1)
    nd, ng, ns = node(line, 1), node(line, 2), node(line, 3)
    try:
        polarity = Polarity(toks[4].upper())
    except ValueError:
        raise line.error(BadValue, f"expected NMOS or PMOS, got {toks[4]!r}", 4) from None
    values = {}
    for tok in range(5, len(toks)):
        key, sep, raw = toks[tok].partition("=")
        field_name = _MOS_KEYS.get(key.upper())
        if not sep or field_name is None:
            raise line.error(BadValue, f"unknown MOS parameter {toks[tok]!r}", tok)
        if field_name in values:
            raise line.error(BadValue, f"parameter {key.upper()} given twice", tok)
        try:
            values[field_name] = parse_value(raw)
        except ValueError:
            raise line.error(BadValue, f"bad numeric value {raw!r}", tok) from None
        if field_name != "vth" and values[field_name] <= 0:
            raise line.error(BadValue, f"{key.upper()} must be positive", tok)
    missing = [k for k, v in _MOS_KEYS.items() if v not in values]
    if missing:
        raise line.error(BadValue, f"missing MOS parameter(s): {', '.join(missing)}", len(toks) - 1)
    return Mos1(toks[0], nd, ng, ns, Mos1Params(polarity, **values))


# ---------------------------------------------------------- serialization

def format_value(value: float) -> str:
    """Shortest round-tripping scientific form, e.g. 1000.0 -> '1e3'."""
    if value == 0:
        return "0"
    sign, digits, exp = Decimal(repr(float(value))).normalize().as_tuple()
    mant = str(digits[0])
    if len(digits) > 1:
        mant += "." + "".join(map(str, digits[1:]))
    return ("-" if sign else "") + f"{mant}e{exp + len(digits) - 1}"


def _device_line(dev: Device) -> str:
    f = format_value
    if isinstance(dev, Resistor):
        return f"{dev.name} {dev.n1} {dev.n2} {f(dev.ohms)}"
    if isinstance(dev, Capacitor):
        return f"{dev.name} {dev.n1} {dev.n2} {f(dev.farads)}"
    if isinstance(dev, CurrentSource):
        return f"{dev.name} {dev.n_plus} {dev.n_minus} {f(dev.amps)}"
    if isinstance(dev, VoltageSource):
        return f"{dev.name} {dev.n_plus} {dev.n_minus} {f(dev.volts)}"
    p = dev.params
    return (f"{dev.name} {dev.nd} {dev.ng} {dev.ns} {p.polarity.value} W={f(p.w)} L={f(p.l)} "
            f"KP={f(p.kp)} VTO={f(p.vth)} COX={f(p.cox)}")


def serialize_netlist(circuit: Circuit) -> str:
    """Emit canonical netlist text that parses back to an equal Circuit."""
    lines = [_device_line(d) for d in circuit.devices]
    for a in circuit.analyses:
        if isinstance(a, Tran):
            lines.append(f".TRAN {format_value(a.dt_request)} {format_value(a.t_stop)}")
        elif isinstance(a, MaxStepMode):
            lines.append(f".STEPMODE {a.mode.value}")
        else:
            lines.append(f".IC V({a.node})={format_value(a.volts)}")
    return "\n".join(lines) + "\n"
