"""The twisted convolution *-algebra and its representations at truncation.

Elements are finitely supported maps G -> A.  On point masses

    (a d_x) * (b d_y) = a rho_x(b) sigma_{x,y} d_{x+y}
    (a d_x)^*         = sigma_{-x,x}^* rho_{-x}(a^*) d_{-x}

The regular representation on H (x) l^2(G) induced from a representation pi
of A is assembled over a finite ball, H index major.  Columns whose
translates leave the ball are recorded in a boundary mask.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .coefficients import MatrixAlgebra
from .groups import AbelianGroup, GroupElement
from .twist import TwistingPair, VerificationReport


class TwistedElement:
    """Finitely supported function G -> A over a twisting pair."""

    __slots__ = ("pair", "terms")

    def __init__(self, pair: TwistingPair, terms: dict[GroupElement, Any] | None = None):
        self.pair = pair
        alg = pair.algebra
        self.terms = {g: a for g, a in (terms or {}).items() if not alg.is_zero(a)}

    @property
    def support(self) -> list[GroupElement]:
        return sorted(self.terms)

    def __getitem__(self, g: GroupElement):
        return self.terms.get(g, self.pair.algebra.zero())

    def _check(self, other: "TwistedElement"):
        if other.pair is not self.pair:
            raise ValueError("elements belong to different twisting pairs")

    def __add__(self, other: "TwistedElement") -> "TwistedElement":
        self._check(other)
        alg = self.pair.algebra
        out = dict(self.terms)
        for g, a in other.terms.items():
            out[g] = alg.add(out[g], a) if g in out else a
        return TwistedElement(self.pair, out)

    def __sub__(self, other: "TwistedElement") -> "TwistedElement":
        return self + other.scale(-1)

    def scale(self, c) -> "TwistedElement":
        alg = self.pair.algebra
        return TwistedElement(self.pair, {g: alg.scale(c, a) for g, a in self.terms.items()})

    def __mul__(self, other: "TwistedElement") -> "TwistedElement":
        return star_product(self, other)

    def distance(self, other: "TwistedElement") -> float:
        self._check(other)
        alg = self.pair.algebra
        keys = set(self.terms) | set(other.terms)
        return max((alg.distance(self[g], other[g]) for g in keys), default=0.0)

    def __repr__(self) -> str:
        return f"TwistedElement({len(self.terms)} terms on {self.pair.group.name})"


def delta(pair: TwistingPair, x: GroupElement, a=None) -> TwistedElement:
    """a d_x (a defaults to the unit)."""
    return TwistedElement(pair, {x: pair.algebra.one() if a is None else a})


def unit(pair: TwistingPair) -> TwistedElement:
    return delta(pair, pair.group.identity())


def star_product(f: TwistedElement, g: TwistedElement) -> TwistedElement:
    """(f * g)(x) = sum_y f(y) rho_y(g(x - y)) sigma_{y, x-y}."""
    f._check(g)
    pair = f.pair
    alg = pair.algebra
    out: dict[GroupElement, Any] = {}
    for y, a in f.terms.items():
        for z, b in g.terms.items():
            term = alg.mul(alg.mul(a, pair.rho(y, b)), pair.sigma(y, z))
            x = y + z
            out[x] = alg.add(out[x], term) if x in out else term
    return TwistedElement(pair, out)


def involution(f: TwistedElement) -> TwistedElement:
    """f^*(x) = sigma_{x,-x}^* rho_x(f(-x)^*)."""
    pair = f.pair
    alg = pair.algebra
    out = {}
    for y, a in f.terms.items():
        x = -y
        out[x] = alg.mul(alg.adjoint(pair.sigma(x, y)), pair.rho(x, alg.adjoint(a)))
    return TwistedElement(pair, out)


def random_element(pair: TwistingPair, support: Sequence[GroupElement], rng: np.random.Generator) -> TwistedElement:
    alg = pair.algebra
    return TwistedElement(pair, {g: alg.random(rng) for g in support})


# serialization (matrix coefficients)


def to_json(f: TwistedElement) -> str:
    recs = []
    for g in f.support:
        a = np.asarray(f.pair.algebra.matrix(f.terms[g]))
        recs.append({"group_element": list(g.coords), "coefficient": [[[float(z.real), float(z.imag)] for z in row] for row in a]})
    return json.dumps(recs)


def from_json(pair: TwistingPair, text: str) -> TwistedElement:
    if not isinstance(pair.algebra, MatrixAlgebra):
        raise TypeError("JSON records carry matrix coefficients")
    terms = {}
    for rec in json.loads(text):
        a = np.array([[complex(re, im) for re, im in row] for row in rec["coefficient"]])
        terms[pair.group.element(rec["group_element"])] = a
    return TwistedElement(pair, terms)


# representations at truncation


@dataclass
class TruncatedOperator:
    """Matrix on H (x) l^2(ball) (x) V with a mask of interior ball indices."""

    matrix: np.ndarray
    interior: np.ndarray
    h_dim: int
    v_dim: int = 1

    def interior_mask(self) -> np.ndarray:
        """Boolean mask over the full basis (H major, then ball, then V)."""
        return np.tile(np.repeat(self.interior, self.v_dim), self.h_dim)


class Ball:
    """Indexed finite set of group elements."""

    def __init__(self, elements: Iterable[GroupElement]):
        self.elements = list(elements)
        if not self.elements:
            raise ValueError("empty ball")
        self.index = {g: i for i, g in enumerate(self.elements)}

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, g) -> bool:
        return g in self.index

    def interior(self, shifts: Iterable[GroupElement]) -> np.ndarray:
        shifts = list(shifts)
        return np.array([all((s + y) in self.index for s in shifts) for y in self.elements])


def as_ball(ball) -> Ball:
    return ball if isinstance(ball, Ball) else Ball(ball)


PiMap = Callable[[Any], np.ndarray]


def _assemble(h: int, nb: int, blocks: Iterable[tuple[int, int, np.ndarray]]) -> np.ndarray:
    T = np.zeros((h, nb, h, nb), dtype=complex)
    for r, c, B in blocks:
        T[:, r, :, c] += B
    return T.reshape(h * nb, h * nb)


def left_regular_matrix(pair: TwistingPair, pi: PiMap, f: TwistedElement, ball, h_dim: int | None = None) -> TruncatedOperator:
    """Pi(a d_x)(xi (x) d_y) = pi(rho_{-y-x}(a) sigma_{-y-x, x}) xi (x) d_{x+y}, compressed to the ball."""
    ball = as_ball(ball)
    alg = pair.algebra
    if h_dim is None:
        h_dim = pi(alg.one()).shape[0]
    blocks = []
    for x, a in f.terms.items():
        for j, y in enumerate(ball):
            t = x + y
            i = ball.index.get(t)
            if i is None:
                continue
            k = -t
            blocks.append((i, j, pi(alg.mul(pair.rho(k, a), pair.sigma(k, x)))))
    return TruncatedOperator(_assemble(h_dim, len(ball), blocks), ball.interior(f.terms), h_dim)


def induced_coefficient(pair: TwistingPair, pi: PiMap, a, ball, h_dim: int | None = None) -> TruncatedOperator:
    """pi~(a)(xi (x) d_x) = pi(rho_{-x}(a)) xi (x) d_x."""
    ball = as_ball(ball)
    if h_dim is None:
        h_dim = pi(pair.algebra.one()).shape[0]
    blocks = [(j, j, pi(pair.rho(-x, a))) for j, x in enumerate(ball)]
    return TruncatedOperator(_assemble(h_dim, len(ball), blocks), np.ones(len(ball), bool), h_dim)


def induced_translation(pair: TwistingPair, pi: PiMap, h: GroupElement, ball, h_dim: int | None = None) -> TruncatedOperator:
    """L~_h(xi (x) d_y) = pi(sigma_{-y-h, h}) xi (x) d_{h+y}."""
    ball = as_ball(ball)
    if h_dim is None:
        h_dim = pi(pair.algebra.one()).shape[0]
    blocks = []
    for j, y in enumerate(ball):
        i = ball.index.get(h + y)
        if i is not None:
            blocks.append((i, j, pi(pair.sigma(-y - h, h))))
    return TruncatedOperator(_assemble(h_dim, len(ball), blocks), ball.interior([h]), h_dim)


def amplify(op: TruncatedOperator, v_dim: int) -> TruncatedOperator:
    """op (x) 1_V."""
    if v_dim == 1:
        return op
    return TruncatedOperator(np.kron(op.matrix, np.eye(v_dim)), op.interior, op.h_dim, op.v_dim * v_dim)


class CovariantPair:
    """Representation pi of A with unitaries U_x on the same space.

    ``interior`` optionally masks the basis vectors on which identities are
    meaningful (compressions of unitaries fail to be unitary at the edge of
    a truncation box).  Matrices may be dense or scipy sparse.
    """

    def __init__(self, pi: PiMap, U: Callable[[GroupElement], np.ndarray], dim: int, interior: np.ndarray | None = None):
        self.pi = pi
        self.U = U
        self.dim = dim
        self.interior = np.ones(dim, bool) if interior is None else np.asarray(interior, bool)
        self._verified: set = set()


def restricted(X, mask: np.ndarray) -> np.ndarray:
    """Dense block of X on the rows and columns selected by ``mask``."""
    if sp.issparse(X):
        X = X.tocsr()[mask][:, mask]
        return X.toarray()
    return np.asarray(X)[np.ix_(mask, mask)]


def _gap(X, Y, mask: np.ndarray) -> float:
    return float(np.abs(restricted(X, mask) - restricted(Y, mask)).max(initial=0.0))


def verify_covariant(cov: CovariantPair, pair: TwistingPair, elements: Sequence[GroupElement] | None = None, tol: float = 1e-12) -> VerificationReport:
    """U_x U_y = pi(sigma_{x,y}) U_{x+y}, pi(rho_x(a)) = U_x pi(a) U_x^*, U_e = Id (on the interior)."""
    G: AbelianGroup = pair.group
    els = list(elements) if elements is not None else G.elements()
    report = VerificationReport(len(els) ** 2, tol)
    alg = pair.algebra
    e = G.identity()
    mask = cov.interior
    eye = sp.identity(cov.dim, dtype=complex, format="csr")
    report.record("unit", (e,), _gap(cov.U(e), eye, mask))
    for x in els:
        Ux = cov.U(x)
        Uxs = Ux.conj().T
        report.record("unitary", (x,), _gap(Ux @ Uxs, eye, mask))
        for a in alg.test_elements():
            report.record("covariance", (x,), _gap(cov.pi(pair.rho(x, a)), Ux @ cov.pi(a) @ Uxs, mask))
        for y in els:
            report.record("multiplier", (x, y), _gap(Ux @ cov.U(y), cov.pi(pair.sigma(x, y)) @ cov.U(x + y), mask))
    return report


def integrated_form(cov: CovariantPair, f: TwistedElement, tol: float = 1e-10) -> np.ndarray:
    """Sum of pi(a_x) U_x; covariance is checked once on the support."""
    supp = [g for g in f.support if g.coords not in cov._verified]
    if supp:
        rep = verify_covariant(cov, f.pair, supp, tol)
        if not rep.ok:
            raise ValueError(f"covariant pair violates its relations: {rep.worst_violation()}")
        cov._verified.update(g.coords for g in supp)
    out = np.zeros((cov.dim, cov.dim), dtype=complex)
    for x, a in f.terms.items():
        out = out + cov.pi(a) @ cov.U(x)
    return np.asarray(out.todense() if sp.issparse(out) else out)
