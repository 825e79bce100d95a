"""Discrete abelian groups with exact arithmetic.

Free abelian groups Z^n, finite groups given by invariant factors, the
quotients Z^2 / M Z^2 and their duals.  Characters of a finite group are
elements of the dual group (same invariant factors); their pairing with group
elements is kept as an exact rational exponent.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .exact import Phase


def smith_normal_form(A: Sequence[Sequence[int]]):
    """Smith normal form of an integer matrix.

    Returns ``(S, U, V)`` with ``U @ A @ V == S``, ``U`` and ``V`` unimodular,
    and ``S`` diagonal with ``S[i][i]`` dividing ``S[i+1][i+1]``.  All
    arithmetic is on Python integers, so there is no overflow.
    """
    S = [list(map(int, row)) for row in A]
    m, n = len(S), len(S[0])
    U = [[int(i == j) for j in range(m)] for i in range(m)]
    V = [[int(i == j) for j in range(n)] for i in range(n)]

    def swap_rows(M, i, j):
        M[i], M[j] = M[j], M[i]

    def swap_cols(M, i, j):
        for row in M:
            row[i], row[j] = row[j], row[i]

    def add_row(M, src, dst, c):
        M[dst] = [a + c * b for a, b in zip(M[dst], M[src])]

    def add_col(M, src, dst, c):
        for row in M:
            row[dst] += c * row[src]

    for t in range(min(m, n)):
        while True:
            nonzero = [(abs(S[i][j]), i, j) for i in range(t, m) for j in range(t, n) if S[i][j]]
            if not nonzero:
                return S, U, V
            _, i, j = min(nonzero)
            swap_rows(S, t, i)
            swap_rows(U, t, i)
            swap_cols(S, t, j)
            swap_cols(V, t, j)
            p = S[t][t]
            done = True
            for i in range(t + 1, m):
                q = S[i][t] // p
                add_row(S, t, i, -q)
                add_row(U, t, i, -q)
                done &= S[i][t] == 0
            for j in range(t + 1, n):
                q = S[t][j] // p
                add_col(S, t, j, -q)
                add_col(V, t, j, -q)
                done &= S[t][j] == 0
            if not done:
                continue
            # divisibility: fold an offending row into row t and retry
            bad = [(i, j) for i in range(t + 1, m) for j in range(t + 1, n) if S[i][j] % p]
            if bad:
                add_row(S, bad[0][0], t, 1)
                add_row(U, bad[0][0], t, 1)
                continue
            if p < 0:
                S[t] = [-a for a in S[t]]
                U[t] = [-a for a in U[t]]
            break
    return S, U, V


def _int_inverse(A: Sequence[Sequence[int]]) -> list[list[int]]:
    a, b = A[0]
    c, d = A[1]
    det = a * d - b * c
    if abs(det) != 1:
        raise ValueError("matrix is not unimodular")
    return [[d * det, -b * det], [-c * det, a * det]]


@dataclass(frozen=True, eq=False)
class GroupElement:
    """Element of a discrete abelian group, in reduced coordinates."""

    group: "AbelianGroup"
    coords: tuple[int, ...]

    @property
    def variant(self) -> str:
        return self.group.variant

    def __add__(self, other: "GroupElement") -> "GroupElement":
        return compose(self, other)

    def __neg__(self) -> "GroupElement":
        return self.group.element(tuple(-c for c in self.coords))

    def __sub__(self, other: "GroupElement") -> "GroupElement":
        return self + (-other)

    def is_identity(self) -> bool:
        return not any(self.coords)

    def __eq__(self, other) -> bool:
        return isinstance(other, GroupElement) and self.group == other.group and self.coords == other.coords

    def __hash__(self):
        return hash(self.coords)

    def __lt__(self, other: "GroupElement") -> bool:
        return self.coords < other.coords

    def __repr__(self) -> str:
        return f"{self.group.name}{self.coords}"


@dataclass(frozen=True)
class AbelianGroup:
    """Base class; ``moduli[i] == 0`` marks a free Z factor."""

    moduli: tuple[int, ...]

    variant = "free-abelian"

    @property
    def rank(self) -> int:
        return len(self.moduli)

    @property
    def name(self) -> str:
        return "Z^%d" % self.rank

    def reduce(self, coords: Iterable[int]) -> tuple[int, ...]:
        coords = tuple(int(c) for c in coords)
        if len(coords) != self.rank:
            raise ValueError(f"expected {self.rank} coordinates, got {len(coords)}")
        return tuple(c % m if m else c for c, m in zip(coords, self.moduli))

    def element(self, coords: Iterable[int]) -> GroupElement:
        return GroupElement(self, self.reduce(coords))

    def identity(self) -> GroupElement:
        return GroupElement(self, (0,) * self.rank)

    def generators(self) -> list[GroupElement]:
        return [self.element([int(i == j) for j in range(self.rank)]) for i in range(self.rank)]

    @property
    def is_finite(self) -> bool:
        return all(self.moduli)


@dataclass(frozen=True)
class FreeAbelianGroup(AbelianGroup):
    pass


def free_abelian(n: int) -> FreeAbelianGroup:
    return FreeAbelianGroup((0,) * n)


@dataclass(frozen=True)
class FiniteAbelianGroup(AbelianGroup):
    """Finite abelian group with invariant factors d_1 | d_2 | ... | d_k.

    When built as a quotient Z^2 / M Z^2 it remembers ``M`` and the
    unimodular transform ``U`` (from the Smith form ``U M V = diag``) that
    carries lattice vectors to coordinates.
    """

    provenance: tuple[tuple[int, ...], ...] | None = None
    transform: tuple[tuple[int, ...], ...] | None = None
    is_dual: bool = False
    # rows of transform kept as coordinates (factors > 1)
    kept: tuple[int, ...] | None = field(default=None)

    variant = "finite-abelian"

    def __post_init__(self):
        for d in self.moduli:
            if d < 1:
                raise ValueError("invariant factors must be positive")
        for a, b in zip(self.moduli, self.moduli[1:]):
            if b % a:
                raise ValueError(f"invariant factors must divide: {self.moduli}")

    @property
    def factors(self) -> tuple[int, ...]:
        return self.moduli

    @property
    def name(self) -> str:
        tag = "^" if self.is_dual else ""
        return "Z" + "x".join(map(str, self.moduli)) + tag if self.moduli else "1"

    @property
    def order(self) -> int:
        out = 1
        for d in self.moduli:
            out *= d
        return out

    @property
    def exponent(self) -> int:
        return self.moduli[-1] if self.moduli else 1

    def elements(self) -> list[GroupElement]:
        """All elements, lexicographic in coordinates."""
        return [GroupElement(self, c) for c in itertools.product(*(range(d) for d in self.moduli))]

    def dual(self) -> "FiniteAbelianGroup":
        return FiniteAbelianGroup(self.moduli, self.provenance, self.transform, not self.is_dual, self.kept)

    # lattice coordinates (quotient groups only)

    def _require_lattice(self):
        if self.provenance is None:
            raise ValueError("group was not built as a lattice quotient")

    def from_lattice(self, t: Sequence[int]) -> GroupElement:
        """Class of ``t`` in Z^2 / M Z^2."""
        self._require_lattice()
        u = [sum(a * b for a, b in zip(row, t)) for row in self.transform]
        return self.element([u[i] for i in self.kept])

    def lift(self, g: GroupElement) -> tuple[int, ...]:
        """A lattice representative of ``g``."""
        self._require_lattice()
        full = [0] * len(self.transform)
        for c, i in zip(g.coords, self.kept):
            full[i] = c
        inv = _int_inverse(self.transform)
        return tuple(sum(a * b for a, b in zip(row, full)) for row in inv)


def z2n(n: int) -> FiniteAbelianGroup:
    return FiniteAbelianGroup((2,) * n)


def cyclic(n: int) -> FiniteAbelianGroup:
    return FiniteAbelianGroup((n,))


def quotient_group(M: Sequence[Sequence[int]]) -> FiniteAbelianGroup:
    """The finite group Z^2 / M Z^2 with invariant factors from the Smith form."""
    M = tuple(tuple(int(x) for x in row) for row in M)
    if len(M) != 2 or any(len(r) != 2 for r in M):
        raise ValueError("M must be 2x2")
    det = M[0][0] * M[1][1] - M[0][1] * M[1][0]
    if det == 0:
        raise ValueError("M is singular")
    if abs(det) == 1:
        raise ValueError("|det M| must exceed 1")
    S, U, _ = smith_normal_form(M)
    diag = [abs(S[i][i]) for i in range(2)]
    kept = tuple(i for i in range(2) if diag[i] > 1)
    return FiniteAbelianGroup(
        tuple(diag[i] for i in kept), M, tuple(tuple(r) for r in U), False, kept
    )


def compose(a: GroupElement, b: GroupElement) -> GroupElement:
    if a.group != b.group:
        raise ValueError(f"elements of different groups: {a.group.name} vs {b.group.name}")
    return a.group.element(tuple(x + y for x, y in zip(a.coords, b.coords)))


def pairing_exponent(k: GroupElement, g: GroupElement) -> Fraction:
    """Exact q in Q/Z with <k, g> = exp(2 pi i q)."""
    G = g.group
    if not isinstance(G, FiniteAbelianGroup) or k.group != G.dual():
        raise ValueError("character and element are not from dual groups")
    return sum((Fraction(a * b, d) for a, b, d in zip(k.coords, g.coords, G.moduli)), Fraction(0)) % 1


def dual_pairing(k: GroupElement, g: GroupElement) -> complex:
    return Phase(pairing_exponent(k, g)).value()


def zeta(k: GroupElement) -> tuple[Fraction, Fraction]:
    """Representative of a character of Z^2/MZ^2 in [0,1)^2 (pairing via <t, zeta>)."""
    D = k.group
    if not D.is_dual:
        raise ValueError("zeta is defined on dual groups")
    D._require_lattice()
    w = [Fraction(0)] * 2
    for c, d, i in zip(k.coords, D.moduli, D.kept):
        w[i] = Fraction(c, d)
    U = D.transform
    return tuple((U[0][j] * w[0] + U[1][j] * w[1]) % 1 for j in range(2))


def character_from_zeta(D: FiniteAbelianGroup, z: Sequence[Fraction]) -> GroupElement:
    """Inverse of :func:`zeta` on the dual group ``D``."""
    D._require_lattice()
    UinvT = _int_inverse(D.transform)
    # w = U^{-T} z
    w = [sum(UinvT[j][i] * Fraction(z[j]) for j in range(2)) for i in range(2)]
    coords = []
    for i in range(2):
        if i in D.kept:
            d = D.moduli[D.kept.index(i)]
            v = w[i] * d
            if v.denominator != 1:
                raise ValueError(f"{z} is not a character of this group")
            coords.append(int(v))
        elif w[i].denominator != 1:
            raise ValueError(f"{z} is not a character of this group")
    return D.element(coords)


def section_s(k: GroupElement) -> tuple[int, int]:
    """s(k) = M^T zeta(k), an integer vector."""
    z = zeta(k)
    M = k.group.provenance
    s = [M[0][j] * z[0] + M[1][j] * z[1] for j in range(2)]
    if any(x.denominator != 1 for x in s):
        raise ArithmeticError(f"section not integral: {s}")
    return tuple(int(x) for x in s)


def enumerate_ball(
    group: AbelianGroup,
    length,
    radius: float,
    box: int | None = None,
) -> list[GroupElement]:
    """Elements g with min Sp|l(g)| <= radius, in lexicographic order.

    For infinite groups a coordinate box ``[-box, box]^n`` is searched; it
    defaults to ``length.search_box(radius)``.  The layer just outside the box
    is checked and a ``ValueError`` is raised if it meets the ball.
    """
    if group.is_finite:
        elems = group.elements()
        vals = length.min_abs_batch(np.array([g.coords for g in elems]).reshape(len(elems), -1))
        return [g for g, v in zip(elems, vals) if v <= radius]
    if box is None:
        box = length.search_box(radius)
        if box is None:
            raise ValueError("no search box supplied and none derivable from the length")
    n = group.rank
    grid = np.array(list(itertools.product(range(-box - 1, box + 2), repeat=n)), dtype=np.int64)
    vals = length.min_abs_batch(grid)
    inside = vals <= radius
    outer = np.abs(grid).max(axis=1) == box + 1
    if np.any(inside & outer):
        raise ValueError(f"search box {box} too small for radius {radius}")
    return [GroupElement(group, tuple(int(c) for c in row)) for row in grid[inside]]


def lattice_points(n: int, box: int) -> np.ndarray:
    return np.array(list(itertools.product(range(-box, box + 1), repeat=n)), dtype=np.int64)


ElementMap = Callable[[GroupElement], GroupElement]
