"""Exact dyadic rationals for ghost abstract values."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering


@total_ordering
@dataclass(frozen=True, slots=False)
class DyadicRational:
    """``numerator / 2**exponent`` kept in lowest terms.

    Canonical form: ``exponent == 0`` or ``numerator`` is odd. Midpoints of
    two dyadics are dyadic, so repeated bisection never rounds.
    """

    numerator: int
    exponent: int = 0

    def __post_init__(self):
        if self.exponent < 0:
            raise ValueError("exponent must be nonnegative")
        n, e = self.numerator, self.exponent
        while e > 0 and n % 2 == 0:
            n //= 2
            e -= 1
        if n == 0:
            e = 0
        object.__setattr__(self, "numerator", n)
        object.__setattr__(self, "exponent", e)

    @classmethod
    def of(cls, n: int) -> "DyadicRational":
        return cls(n, 0)

    def _aligned(self, other: "DyadicRational") -> tuple[int, int, int]:
        e = max(self.exponent, other.exponent)
        return (
            self.numerator << (e - self.exponent),
            other.numerator << (e - other.exponent),
            e,
        )

    def __add__(self, other: "DyadicRational") -> "DyadicRational":
        a, b, e = self._aligned(other)
        return DyadicRational(a + b, e)

    def __sub__(self, other: "DyadicRational") -> "DyadicRational":
        a, b, e = self._aligned(other)
        return DyadicRational(a - b, e)

    def half(self) -> "DyadicRational":
        return DyadicRational(self.numerator, self.exponent + 1)

    def midpoint(self, other: "DyadicRational") -> "DyadicRational":
        return (self + other).half()

    def __lt__(self, other: "DyadicRational") -> bool:
        if not isinstance(other, DyadicRational):
            return NotImplemented
        a, b, _ = self._aligned(other)
        return a < b

    def to_fraction(self) -> Fraction:
        return Fraction(self.numerator, 1 << self.exponent)

    def __float__(self) -> float:
        return float(self.to_fraction())

    def __str__(self) -> str:
        if self.exponent == 0:
            return str(self.numerator)
        return f"{self.numerator}/2^{self.exponent}"

    def to_json(self) -> list[int]:
        return [self.numerator, self.exponent]

    @classmethod
    def from_json(cls, data) -> "DyadicRational":
        return cls(int(data[0]), int(data[1]))


ZERO = DyadicRational(0)
ONE = DyadicRational(1)
TWO = DyadicRational(2)
