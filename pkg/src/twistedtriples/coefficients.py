"""Coefficient algebras for twisted convolution.

A coefficient algebra is a small object providing the *-algebra operations on
its element type.  Three are shipped: dense matrices, exact scalars in a
cyclotomic field, and (in :mod:`twistedtriples.torus`) finitely supported
quantum-torus elements.
"""

from __future__ import annotations

from typing import Any, Sequence

import numpy as np

from fractions import Fraction

from .exact import Cyclotomic


class CoefficientAlgebra:
    exact = False
    dim = 1

    def one(self) -> Any: ...
    def zero(self) -> Any: ...
    def mul(self, a, b) -> Any: ...
    def add(self, a, b) -> Any: ...
    def scale(self, c, a) -> Any: ...
    def adjoint(self, a) -> Any: ...
    def distance(self, a, b) -> float: ...
    def norm(self, a) -> float: ...
    def test_elements(self) -> list: ...

    def is_zero(self, a, tol: float = 1e-14) -> bool:
        return self.norm(a) <= tol

    def sub(self, a, b):
        return self.add(a, self.scale(-1, b))

    def unitarity_residual(self, u) -> float:
        one = self.one()
        return max(self.distance(self.mul(u, self.adjoint(u)), one), self.distance(self.mul(self.adjoint(u), u), one))

    def conjugate(self, u, a):
        """Ad(u)(a) = u a u^*."""
        return self.mul(self.mul(u, a), self.adjoint(u))


class MatrixAlgebra(CoefficientAlgebra):
    """M_d(C), optionally restricted to the span of ``basis`` for test elements."""

    def __init__(self, dim: int, basis: Sequence[np.ndarray] | None = None):
        self.dim = dim
        self.basis = None if basis is None else [np.asarray(b, dtype=complex) for b in basis]

    def one(self):
        return np.eye(self.dim, dtype=complex)

    def zero(self):
        return np.zeros((self.dim, self.dim), dtype=complex)

    def mul(self, a, b):
        return a @ b

    def add(self, a, b):
        return a + b

    def scale(self, c, a):
        return complex(c) * a

    def adjoint(self, a):
        return a.conj().T

    def distance(self, a, b):
        return float(np.linalg.norm(a - b, 2)) if self.dim > 1 else float(abs(a[0, 0] - b[0, 0]))

    def norm(self, a):
        return float(np.linalg.norm(a))

    def test_elements(self):
        if self.basis is not None:
            return list(self.basis)
        out = []
        for i in range(self.dim):
            for j in range(self.dim):
                e = self.zero()
                e[i, j] = 1
                out.append(e)
        return out

    def random(self, rng: np.random.Generator):
        if self.basis is not None:
            c = rng.normal(size=len(self.basis)) + 1j * rng.normal(size=len(self.basis))
            return sum(ci * b for ci, b in zip(c, self.basis))
        return rng.normal(size=(self.dim, self.dim)) + 1j * rng.normal(size=(self.dim, self.dim))

    def matrix(self, a) -> np.ndarray:
        return np.asarray(a, dtype=complex)


class CyclotomicAlgebra(CoefficientAlgebra):
    """Exact scalars in Q(zeta_N)."""

    exact = True

    def __init__(self, order: int = 4):
        self.order = order

    def one(self):
        return Cyclotomic.rational(self.order, 1)

    def zero(self):
        return Cyclotomic.rational(self.order, 0)

    def mul(self, a, b):
        return a * b

    def add(self, a, b):
        return a + b

    def scale(self, c, a):
        if isinstance(c, Cyclotomic):
            return c * a
        if isinstance(c, complex):
            if c.imag:
                return (Cyclotomic.rational(self.order, c.real) + Cyclotomic.from_turns(Fraction(1, 4), self.order) * c.imag) * a
            c = c.real
        return a * c

    def adjoint(self, a):
        return a.conj()

    def distance(self, a, b):
        if a == b:
            return 0.0
        return max(abs(complex(a - b)), 5e-324)

    def norm(self, a):
        return 0.0 if a.is_zero() else max(abs(complex(a)), 5e-324)

    def is_zero(self, a, tol: float = 0.0) -> bool:
        return a.is_zero()

    def test_elements(self):
        return [self.one()]

    def matrix(self, a) -> np.ndarray:
        return np.array([[complex(a)]])

    def random(self, rng: np.random.Generator):
        re, im = (int(v) for v in rng.integers(-3, 4, size=2))
        return Cyclotomic.rational(self.order, re) + Cyclotomic.from_turns(Fraction(1, 4), self.order) * im

    def root(self, power: int = 1):
        return Cyclotomic.root(self.order, power)
