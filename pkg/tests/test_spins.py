"""Half-integer spin labels, parsing, and magnetic quantum numbers."""

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from spinzx import spin, magnetic, parse_half_integer
from spinzx.spins import check_magnetic, magnetic_index, magnetic_range
from spinzx.errors import InvalidSpinArgs, InvalidMagnetic


def test_spin_dim():
    assert spin(0).dim == 1
    assert spin("1/2").dim == 2
    assert spin(1).dim == 3
    assert spin("3/2").dim == 4
    assert spin(2).dim == 5


def test_spin_accepts_many_forms():
    assert spin("1/2") == spin(0.5) == spin(Fraction(1, 2))
    assert spin(1) == spin("1") == spin(1.0)
    assert spin("3/2").twice_j == 3


def test_negative_spin_rejected():
    with pytest.raises(InvalidSpinArgs):
        spin(-1)
    with pytest.raises(InvalidSpinArgs):
        spin("-1/2")


def test_non_half_integer_rejected():
    with pytest.raises(InvalidSpinArgs):
        spin(0.3)
    with pytest.raises(InvalidSpinArgs):
        spin("2/3")


def test_parse_half_integer():
    assert parse_half_integer("1/2") == Fraction(1, 2)
    assert parse_half_integer(".5") == Fraction(1, 2)
    assert parse_half_integer("-3/2") == Fraction(-3, 2)
    assert parse_half_integer("2") == 2
    with pytest.raises(InvalidSpinArgs):
        parse_half_integer("abc")


def test_magnetic_range_is_descending():
    j = spin("3/2")
    ms = [m.twice_m for m in magnetic_range(j)]
    assert ms == [3, 1, -1, -3]


def test_magnetic_index():
    j = spin(1)
    assert magnetic_index(j, magnetic(1)) == 0
    assert magnetic_index(j, magnetic(0)) == 1
    assert magnetic_index(j, magnetic(-1)) == 2


def test_check_magnetic_rejects_out_of_range_and_parity():
    with pytest.raises(InvalidMagnetic):
        check_magnetic(spin(1), magnetic(2))
    with pytest.raises(InvalidMagnetic):
        check_magnetic(spin(1), magnetic("1/2"))


def test_str_forms():
    assert str(spin("1/2")) == "1/2"
    assert str(spin(2)) == "2"
    assert str(magnetic("-1/2")) == "-1/2"


@given(st.integers(min_value=0, max_value=40))
def test_magnetic_range_length_matches_dim(twice_j):
    j = spin(Fraction(twice_j, 2))
    ms = list(magnetic_range(j))
    assert len(ms) == j.dim
    assert {magnetic_index(j, m) for m in ms} == set(range(j.dim))


@given(st.fractions(min_value=0, max_value=20).filter(
    lambda f: (2 * f).denominator == 1))
def test_parse_half_integer_round_trip(f):
    assert parse_half_integer(str(spin(f))) == f
