"""Exact phase and cyclotomic arithmetic.

Two small number systems keep cocycle bookkeeping free of rounding:

* :class:`Phase` is a unit complex number ``exp(2*pi*i*turns + i*pi*theta*k)``
  with ``turns`` rational (mod 1) and ``k`` an integer multiple of an external
  real parameter ``theta``.
* :class:`Cyclotomic` is an element of the field Q(zeta_N), stored in the
  canonical power basis modulo the N-th cyclotomic polynomial.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import sympy


@dataclass(frozen=True)
class Phase:
    """Unit complex number with exactly tracked exponent."""

    turns: Fraction = Fraction(0)
    theta_units: int = 0

    def __post_init__(self):
        object.__setattr__(self, "turns", Fraction(self.turns) % 1)
        object.__setattr__(self, "theta_units", int(self.theta_units))

    def __mul__(self, other: "Phase") -> "Phase":
        return Phase(self.turns + other.turns, self.theta_units + other.theta_units)

    def conj(self) -> "Phase":
        return Phase(-self.turns, -self.theta_units)

    def is_one(self) -> bool:
        return self.turns == 0 and self.theta_units == 0

    def value(self, theta: float = 0.0) -> complex:
        # exp(2 pi i q) evaluated on the reduced fraction keeps +-1, +-i exact
        q = self.turns
        if q.denominator in (1, 2, 4):
            base = {Fraction(0): 1, Fraction(1, 4): 1j, Fraction(1, 2): -1, Fraction(3, 4): -1j}[q]
            base = complex(base)
        else:
            base = cmath.exp(2j * math.pi * q)
        if self.theta_units:
            # reduce the angle before exponentiating to limit rounding growth
            base *= cmath.exp(1j * math.pi * math.fmod(theta * self.theta_units, 2.0))
        return base


@lru_cache(maxsize=None)
def _cyclotomic_poly(n: int) -> tuple[int, ...]:
    # monic, coefficients from constant term upwards
    poly = sympy.Poly(sympy.cyclotomic_poly(n, sympy.Symbol("z")))
    return tuple(int(c) for c in reversed(poly.all_coeffs()))


class Cyclotomic:
    """Element of Q(zeta_N) in the power basis 1, z, ..., z^(phi(N)-1)."""

    __slots__ = ("order", "coeffs")

    def __init__(self, order: int, coeffs):
        self.order = order
        self.coeffs = tuple(_reduce([Fraction(x) for x in coeffs], order))

    @classmethod
    def root(cls, order: int, power: int = 1) -> "Cyclotomic":
        c = [Fraction(0)] * (power % order + 1)
        c[power % order] = Fraction(1)
        return cls(order, c)

    @classmethod
    def from_turns(cls, turns: Fraction, order: int) -> "Cyclotomic":
        turns = Fraction(turns) % 1
        if order % turns.denominator:
            raise ValueError(f"phase {turns} not in Q(zeta_{order})")
        return cls.root(order, turns.numerator * (order // turns.denominator))

    @classmethod
    def rational(cls, order: int, q) -> "Cyclotomic":
        return cls(order, [Fraction(q)])

    def _check(self, other: "Cyclotomic"):
        if self.order != other.order:
            raise ValueError("cyclotomic orders differ")

    def __add__(self, other: "Cyclotomic") -> "Cyclotomic":
        self._check(other)
        return Cyclotomic(self.order, [a + b for a, b in zip(self.coeffs, other.coeffs)])

    def __sub__(self, other: "Cyclotomic") -> "Cyclotomic":
        self._check(other)
        return Cyclotomic(self.order, [a - b for a, b in zip(self.coeffs, other.coeffs)])

    def __neg__(self) -> "Cyclotomic":
        return Cyclotomic(self.order, [-a for a in self.coeffs])

    def __mul__(self, other) -> "Cyclotomic":
        if not isinstance(other, Cyclotomic):
            return Cyclotomic(self.order, [a * Fraction(other) for a in self.coeffs])
        self._check(other)
        prod = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs))
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    if b:
                        prod[i + j] += a * b
        return Cyclotomic(self.order, prod)

    __rmul__ = __mul__

    def conj(self) -> "Cyclotomic":
        # z -> z^{-1} = z^{N-1}
        out = Cyclotomic(self.order, [0])
        for i, a in enumerate(self.coeffs):
            if a:
                out = out + Cyclotomic.root(self.order, -i) * a
        return out

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def __eq__(self, other) -> bool:
        return isinstance(other, Cyclotomic) and self.order == other.order and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.order, self.coeffs))

    def __complex__(self) -> complex:
        z = cmath.exp(2j * math.pi / self.order)
        return complex(sum(float(a) * z**i for i, a in enumerate(self.coeffs)))

    def __repr__(self) -> str:
        return f"Cyclotomic({self.order}, {[str(a) for a in self.coeffs]})"


def _reduce(c: list[Fraction], order: int) -> list[Fraction]:
    poly = _cyclotomic_poly(order)
    deg = len(poly) - 1
    c = list(c)
    for k in range(len(c) - 1, deg - 1, -1):
        lead = c[k]
        if lead:
            for i, p in enumerate(poly):
                c[k - deg + i] -= lead * p
    return (c[:deg] + [Fraction(0)] * deg)[:deg]
