"""Exact half-integer spin labels stored as twice-integers.

A spin j is stored as the integer 2j so that all admissibility arithmetic
(triangle conditions, magnetic ranges, parities) stays exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import InvalidMagnetic, InvalidSpinArgs


@dataclass(frozen=True, order=True)
class Spin:
    """A spin label j >= 0, stored as twice_j = 2j."""

    twice_j: int

    def __post_init__(self):
        if not isinstance(self.twice_j, int) or self.twice_j < 0:
            raise InvalidSpinArgs(f"twice_j must be a non-negative integer, got {self.twice_j!r}")

    @property
    def dim(self) -> int:
        return self.twice_j + 1

    def as_fraction(self) -> Fraction:
        return Fraction(self.twice_j, 2)

    def __str__(self) -> str:
        if self.twice_j % 2 == 0:
            return str(self.twice_j // 2)
        return f"{self.twice_j}/2"


@dataclass(frozen=True, order=True)
class Magnetic:
    """A magnetic label m, stored as twice_m = 2m."""

    twice_m: int

    def __str__(self) -> str:
        if self.twice_m % 2 == 0:
            return str(self.twice_m // 2)
        return f"{self.twice_m}/2"


def spin(j) -> Spin:
    """Coerce j (Spin, int, Fraction, float or string) to a Spin."""
    if isinstance(j, Spin):
        return j
    return Spin(_twice(j, "spin"))


def magnetic(m) -> Magnetic:
    """Coerce m to a Magnetic label."""
    if isinstance(m, Magnetic):
        return m
    return Magnetic(_twice(m, "magnetic", allow_negative=True))


def _twice(x, what: str, allow_negative: bool = False) -> int:
    if isinstance(x, bool):
        raise InvalidSpinArgs(f"invalid {what} value {x!r}")
    if isinstance(x, int):
        doubled = 2 * x
    elif isinstance(x, Fraction):
        doubled = Fraction(2) * x
        if doubled.denominator != 1:
            raise InvalidSpinArgs(f"{what} must be a half-integer, got {x}")
        doubled = doubled.numerator
    elif isinstance(x, float):
        doubled = 2 * x
        if doubled != int(doubled):
            raise InvalidSpinArgs(f"{what} must be a half-integer, got {x}")
        doubled = int(doubled)
    elif isinstance(x, str):
        return _twice(parse_half_integer(x), what, allow_negative)
    else:
        raise InvalidSpinArgs(f"invalid {what} value {x!r}")
    if not allow_negative and doubled < 0:
        raise InvalidSpinArgs(f"{what} must be non-negative, got {x}")
    return doubled


def parse_half_integer(text: str) -> Fraction:
    """Parse '1/2', '3/2', '.5', '1.5', '2' to an exact Fraction."""
    text = text.strip()
    try:
        if "/" in text:
            num, den = text.split("/", 1)
            value = Fraction(int(num), int(den))
        elif "." in text:
            value = Fraction(text)
        else:
            value = Fraction(int(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidSpinArgs(f"cannot parse half-integer {text!r}") from exc
    if (2 * value).denominator != 1:
        raise InvalidSpinArgs(f"{text!r} is not a half-integer")
    return value


def check_magnetic(j: Spin, m: Magnetic) -> None:
    """Validate |m| <= j and m = j (mod 1)."""
    if abs(m.twice_m) > j.twice_j or (m.twice_m - j.twice_j) % 2 != 0:
        raise InvalidMagnetic(f"m={m} invalid for j={j}")


def magnetic_index(j: Spin, m: Magnetic) -> int:
    """Basis index of |j;m>: index 0 is m=+j, descending to m=-j."""
    check_magnetic(j, m)
    return (j.twice_j - m.twice_m) // 2


def magnetic_range(j: Spin):
    """Magnetic labels of spin j in basis order (m = +j down to -j)."""
    return [Magnetic(tm) for tm in range(j.twice_j, -j.twice_j - 2, -2)]
