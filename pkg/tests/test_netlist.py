import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circuits import circuits, cross_coupled_netlist
from ministep.netlist import (BadValue, Capacitor, Circuit, CircuitError, DuplicateName,
                              EmptyCircuit, FloatingVoltageSource, InitialCondition, MaxStepMode,
                              Mos1, MissingTran, ParseError, Polarity, Resistor, StepMode, Tran,
                              UnknownCard, format_value, parse_netlist, parse_value,
                              serialize_netlist)


def test_minimal_resistor_and_tran():
    c = parse_netlist("R1 1 0 1000\n.TRAN 1e-6 1e-3")
    assert c.nodes == ("1",)
    assert c.devices == (Resistor("R1", "1", "0", 1000.0),)
    assert c.analyses == (Tran(1e-6, 1e-3),)


def test_mos_card_maps_fields():
    c = parse_netlist("M1 2 1 0 NMOS W=1e-6 L=1e-7 KP=1e-4 VTO=0.5 COX=0.01")
    (m,) = c.devices
    assert isinstance(m, Mos1)
    assert (m.nd, m.ng, m.ns) == ("2", "1", "0")
    p = m.params
    assert (p.polarity, p.w, p.l, p.kp, p.vth, p.cox) == (Polarity.NMOS, 1e-6, 1e-7, 1e-4, 0.5, 0.01)
    assert c.nodes == ("2", "1")


def test_negative_resistance_is_bad_value_on_line_1():
    with pytest.raises(BadValue) as err:
        parse_netlist("R1 1 0 -5")
    assert err.value.line == 1
    assert err.value.column == 8


@pytest.mark.parametrize("token, value", [
    ("1k", 1e3), ("1f", 1e-15), ("1meg", 1e6), ("1MEG", 1e6), ("2.5e-3", 2.5e-3),
    ("10pF", 10e-12), ("3u", 3e-6), ("4n", 4e-9), ("1M", 1e-3), (".5", 0.5), ("-2", -2.0),
    ("1e3", 1e3), ("1kohm", 1e3),
])
def test_engineering_suffixes(token, value):
    assert parse_value(token) == pytest.approx(value, rel=1e-15)


@pytest.mark.parametrize("token", ["abc", "", "1..2", "nan", "inf", "1e400", "--1"])
def test_bad_numbers(token):
    with pytest.raises(ValueError):
        parse_value(token)


@pytest.mark.parametrize("text, exc, line", [
    ("X1 1 0 5", UnknownCard, 1),
    ("R1 1 0 1k\n.AC dec 10 1 1k", UnknownCard, 2),
    ("R1 1 0 1k\nr1 2 0 1k", DuplicateName, 2),
    ("V1 1 2 1.0", FloatingVoltageSource, 1),
    ("R1 1 0 abc", BadValue, 1),
    ("C1 1 0 0", BadValue, 1),
    ("R1 1 0", BadValue, 1),
    ("M1 2 1 0 NMOS W=1e-6 L=1e-7 KP=1e-4 VTO=0.5", BadValue, 1),
    ("M1 2 1 0 NMOS W=1e-6 L=1e-7 KP=1e-4 VTO=0.5 COX=0.01 LAMBDA=0.1", BadValue, 1),
    ("M1 2 1 0 XMOS W=1e-6 L=1e-7 KP=1e-4 VTO=0.5 COX=0.01", BadValue, 1),
    ("M1 2 1 0 NMOS W=-1 L=1e-7 KP=1e-4 VTO=0.5 COX=0.01", BadValue, 1),
    ("R1 1 0 1k\n.TRAN 1e-3 1e-6", BadValue, 2),
    ("R1 1 0 1k\n.STEPMODE sometimes", BadValue, 2),
    ("R1 1 0 1k\n.IC V(7)=1", BadValue, 2),
    ("V1 1 0 1\nR1 1 0 1k\n.IC V(1)=0.5", BadValue, 3),
    ("V1 1 0 1\nV2 1 0 2", BadValue, 2),
    ("* only a comment\n\n", EmptyCircuit, 1),
])
def test_parse_errors_carry_line(text, exc, line):
    with pytest.raises(exc) as err:
        parse_netlist(text)
    assert err.value.line == line
    assert isinstance(err.value, ParseError)


def test_comments_blank_lines_and_end():
    c = parse_netlist("* title\n\nR1 a 0 1k ; load\n  * indented comment\n.end\nR2 b 0 1k\n")
    assert [d.name for d in c.devices] == ["R1"]


def test_directives_parsed():
    c = parse_netlist(cross_coupled_netlist())
    assert c.tran == Tran(1e-13, 1e-11)
    assert c.initial_conditions == {"a": 0.5, "b": 0.5}
    assert c.step_mode is None
    c2 = parse_netlist("R1 1 0 1\n.stepmode dominant")
    assert c2.step_mode is StepMode.DOMINANT
    assert c2.analyses == (MaxStepMode(StepMode.DOMINANT),)


def test_missing_tran_is_raised_on_demand():
    c = parse_netlist("R1 1 0 1k")
    with pytest.raises(MissingTran):
        c.require_tran()


def test_node_names_case_insensitive_first_spelling_kept():
    c = parse_netlist("R1 Out 0 1k\nR2 OUT in 1k")
    assert c.nodes == ("Out", "in")
    assert c.devices[1].n1 == "Out"
    assert c.canonical_node("oUt") == "Out"


def test_serialize_canonical_scientific():
    text = serialize_netlist(parse_netlist("R1 1 0 1000"))
    assert "R1 1 0 1e3" in text.splitlines()


@pytest.mark.parametrize("v, s", [(1000.0, "1e3"), (1e-15, "1e-15"), (2.5e-5, "2.5e-5"),
                                  (0.1, "1e-1"), (-3.0, "-3e0"), (0.0, "0"),
                                  (123.456, "1.23456e2")])
def test_format_value(v, s):
    assert format_value(v) == s
    assert parse_value(s) == v


def test_round_trip_two_inverter_netlist():
    c = parse_netlist(cross_coupled_netlist())
    assert parse_netlist(serialize_netlist(c)) == c


def test_circuit_constructor_rejects_invalid():
    with pytest.raises(CircuitError):
        Circuit((), ())
    with pytest.raises(CircuitError):
        Circuit(("a",), (Resistor("R1", "a", "b", 1.0),))
    with pytest.raises(CircuitError):
        Circuit(("a",), (Resistor("R1", "a", "0", 1.0), Capacitor("r1", "a", "0", 1.0)))
    with pytest.raises(CircuitError):
        Resistor("R1", "a", "0", 0.0)
    with pytest.raises(CircuitError):
        Circuit(("a",), (Resistor("R1", "a", "0", 1.0),), (InitialCondition("b", 0.0),))


@settings(max_examples=200, deadline=None)
@given(circuits())
def test_round_trip_property(c):
    assert parse_netlist(serialize_netlist(c)) == c


@settings(max_examples=300, deadline=None)
@given(st.text(max_size=200))
def test_parsing_is_total(text):
    try:
        parse_netlist(text)
    except ParseError as exc:
        assert exc.line >= 1 and exc.column >= 1


_card_text = st.lists(st.sampled_from([
    "R1 1 0 1k", "C1 1 0 1p", "I1 0 1 1m", "V1 2 0 1", "M1 2 1 0 NMOS W=1u L=1u KP=1e-4 VTO=.5 COX=1m",
    "R2 2 1 -1", "X 1 2", ".TRAN 1 2", ".TRAN 2 1", ".STEPMODE fixed", ".IC V(1)=0.3", "* c",
    "R1 1 0", "v3 3 1 1", "M2 a b c PMOS W=1 L=1 KP=1 VTO=-1 COX=1", ";", ".end",
]), max_size=8).map("\n".join)


@settings(max_examples=300, deadline=None)
@given(_card_text)
def test_parsing_is_total_on_card_soup(text):
    try:
        parse_netlist(text)
    except ParseError as exc:
        assert exc.line >= 1


def _folded(c):
    return serialize_netlist(c).casefold()


@settings(max_examples=100, deadline=None)
@given(circuits())
def test_uppercasing_changes_only_spelling(c):
    text = serialize_netlist(c)
    upper = parse_netlist(text.upper())
    assert _folded(upper) == _folded(c)
    assert [n.casefold() for n in upper.nodes] == [n.casefold() for n in c.nodes]
