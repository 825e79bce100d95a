"""Truncated spectral triples and the crossed-product constructions.

Bases are Kronecker products ``H (x) l^2(ball) (x) V`` with the H index
major.  Even triples built from an odd coefficient triple live on two copies
of that space; odd triples built from an even one live on ``H+ (+) H-``
tensored with the same factors, which after rotating H into a grading
eigenbasis is again a single Kronecker product.

With that ordering the two crossed Dirac operators are

    odd -> even:  sx (x) D (x) 1 + sy (x) 1 (x) M_l
    even -> odd:  D (x) 1 + chi (x) M_l

where sx, sy are Pauli matrices.  Both square to D^2 (x) 1 + 1 (x) M_l^2 up
to the doubling, which is what the structured spectrum route uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .algebra import (
    Ball,
    CovariantPair,
    TruncatedOperator,
    TwistedElement,
    amplify,
    as_ball,
    left_regular_matrix,
    verify_covariant,
)
from .coefficients import MatrixAlgebra
from .groups import AbelianGroup, GroupElement, enumerate_ball
from .length import MatrixLengthFunction, growth_estimate, m_ell_matrix, properness_check
from .order import AbscissaSummary, counting_N, estimate_all, singular_sequence_from_spectrum
from .twist import TwistingPair, trivial_pair

MAX_DIM = 8192

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


class SizeError(ValueError):
    """Truncated Hilbert space exceeds :data:`MAX_DIM`."""


def _check_size(dim: int):
    if dim > MAX_DIM:
        raise SizeError(f"truncated dimension {dim} exceeds the cap {MAX_DIM}")


@dataclass(frozen=True)
class TruncationSpec:
    """Group ball radius R and coefficient mode cutoff (|eigenvalue| <= cutoff)."""

    radius: float
    cutoff: float = math.inf

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("radius must be non-negative")
        if not self.cutoff > 0:
            raise ValueError("cutoff must be positive")


class TruncatedTriple:
    """A finite section of a spectral triple.

    ``represent`` maps an algebra element to its matrix; ``represent_op``
    (optional) returns a :class:`TruncatedOperator` carrying the interior
    mask.  ``interior`` masks the basis vectors away from the truncation
    boundary.
    """

    def __init__(
        self,
        dirac: np.ndarray,
        represent: Callable[[Any], np.ndarray],
        parity: str,
        grading: np.ndarray | None = None,
        labels: Sequence | None = None,
        interior: np.ndarray | None = None,
        trunc: TruncationSpec | None = None,
        represent_op: Callable[[Any], TruncatedOperator] | None = None,
        meta: dict | None = None,
    ):
        if parity not in ("odd", "even"):
            raise ValueError("parity is 'odd' or 'even'")
        if parity == "even" and grading is None:
            raise ValueError("even triples need a grading")
        self.dirac = np.asarray(dirac, dtype=complex)
        _check_size(self.dirac.shape[0])
        self.represent = represent
        self.parity = parity
        self.grading = None if grading is None else np.asarray(grading, dtype=complex)
        self.labels = list(labels) if labels is not None else list(range(self.dim))
        self.interior = np.ones(self.dim, bool) if interior is None else np.asarray(interior, bool)
        self.trunc = trunc
        self.represent_op = represent_op
        self.meta = dict(meta or {})
        self._eig = None

    @property
    def dim(self) -> int:
        return self.dirac.shape[0]

    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        if self._eig is None:
            self._eig = np.linalg.eigh(self.dirac)
        return self._eig

    def eigenvalues(self) -> np.ndarray:
        return self.eigh()[0]

    def commutator(self, a) -> np.ndarray:
        P = self.represent(a)
        return self.dirac @ P - P @ self.dirac

    def invariants(self, elements: Sequence = ()) -> dict[str, float]:
        """Residuals of the structural identities (zero means exact)."""
        D = self.dirac
        out = {"hermitian": float(np.abs(D - D.conj().T).max(initial=0.0))}
        if self.parity == "even":
            chi = self.grading
            out["grading_square"] = float(np.abs(chi @ chi - np.eye(self.dim)).max(initial=0.0))
            out["anticommute"] = float(np.abs(chi @ D + D @ chi).max(initial=0.0))
            out["grading_commutes"] = max((float(np.abs(chi @ P - P @ chi).max(initial=0.0)) for P in map(self.represent, elements)), default=0.0)
        return out


def matrix_triple(dirac, grading=None, algebra: MatrixAlgebra | None = None) -> TruncatedTriple:
    """Triple (A, C^h, D) with A acting by its defining representation."""
    D = np.asarray(dirac, dtype=complex)
    alg = algebra or MatrixAlgebra(D.shape[0])
    return TruncatedTriple(D, alg.matrix, "odd" if grading is None else "even", grading, meta={"kind": "matrix"})


def _split_grading(chi: np.ndarray) -> np.ndarray:
    """Unitary Q with Q^* chi Q = diag(1, ..., -1, ...)."""
    d = np.real(np.diag(chi))
    if np.allclose(chi, np.diag(d), atol=1e-14) and np.allclose(np.abs(d), 1.0, atol=1e-14):
        order = np.concatenate([np.flatnonzero(d > 0), np.flatnonzero(d < 0)])
        return np.eye(len(d), dtype=complex)[:, order]
    w, Q = np.linalg.eigh(chi)
    if not np.allclose(np.abs(w), 1.0, atol=1e-10):
        raise ValueError("grading must square to the identity")
    return Q[:, np.argsort(-w, kind="stable")]


def mode_cutoff(coeff: TruncatedTriple, cutoff: float) -> TruncatedTriple:
    """Compress a coefficient triple to the spectral subspace |D| <= cutoff.

    Even triples keep the grading: the eigenbasis of D^2 is taken inside each
    grading eigenspace.
    """
    if not math.isfinite(cutoff):
        return coeff
    D = coeff.dirac
    if coeff.parity == "even":
        Q = _split_grading(coeff.grading)
        Dq = Q.conj().T @ D @ Q
        p = int(np.sum(np.real(np.diag(Q.conj().T @ coeff.grading @ Q)) > 0))
        cols = []
        signs = []
        for sl, s in ((slice(0, p), 1.0), (slice(p, None), -1.0)):
            blk = Dq[:, sl]
            w, V = np.linalg.eigh(blk.conj().T @ blk)
            keep = w <= cutoff**2 * (1 + 1e-12)
            full = np.zeros((D.shape[0], int(keep.sum())), dtype=complex)
            full[sl] = V[:, keep]
            cols.append(Q @ full)
            signs += [s] * int(keep.sum())
        P = np.hstack(cols)
        chi = np.diag(np.array(signs, dtype=complex))
    else:
        w, V = np.linalg.eigh(D)
        P = V[:, np.abs(w) <= cutoff * (1 + 1e-12)]
        chi = None
    Dc = P.conj().T @ D @ P
    rep = coeff.represent
    return TruncatedTriple(
        (Dc + Dc.conj().T) / 2,
        lambda a: P.conj().T @ rep(a) @ P,
        coeff.parity,
        chi,
        trunc=TruncationSpec(coeff.trunc.radius if coeff.trunc else 0.0, cutoff),
        meta={**coeff.meta, "mode_cutoff": cutoff},
    )


# group triples


def _group_ball(length: MatrixLengthFunction, group: AbelianGroup | None, ball) -> Ball:
    if isinstance(ball, (int, float)):
        if group is None:
            raise ValueError("a radius needs a group")
        return Ball(enumerate_ball(group, length, ball))
    return as_ball(ball)


def build_group_triple(length: MatrixLengthFunction, ball, group: AbelianGroup | None = None) -> TruncatedTriple:
    """(CG, l^2(G) (x) V, M_l) compressed to a ball.

    ``represent`` accepts a group element (giving lambda_g) or a
    :class:`TwistedElement` over a trivial scalar pair.
    """
    B = _group_ball(length, group, ball)
    group = group or B.elements[0].group
    rep = properness_check(length, B.elements)
    if rep.zero_violations:
        raise ValueError(f"length is not proper on the ball: zero set violations {rep.zero_violations[:3]}")
    d = length.dim
    _check_size(len(B) * d)
    pair = trivial_pair(group, MatrixAlgebra(1))
    pi = lambda a: np.asarray(a, dtype=complex).reshape(1, 1)  # noqa: E731

    def op(f) -> TruncatedOperator:
        if isinstance(f, GroupElement):
            f = TwistedElement(pair, {f: np.ones((1, 1))})
        elif not isinstance(f, TwistedElement):
            f = TwistedElement(pair, {g: np.array([[c]], dtype=complex) for g, c in dict(f).items()})
        return amplify(left_regular_matrix(pair, pi, f, B, 1), d)

    radius = ball if isinstance(ball, (int, float)) else float(np.max(length.min_abs_batch(np.array([g.coords for g in B]).reshape(len(B), -1))))
    return TruncatedTriple(
        m_ell_matrix(length, B.elements),
        lambda f: op(f).matrix,
        "odd",
        labels=[(g.coords, v) for g in B for v in range(d)],
        trunc=TruncationSpec(float(radius)),
        represent_op=op,
        meta={"kind": "group", "ball": B, "length": length, "pair": pair},
    )


def nondegeneracy_check(triple: TruncatedTriple, elements: Sequence, tol: float = 1e-10) -> dict:
    """Elements of a spanning set whose commutator with D vanishes on the interior.

    Such elements must act as scalars there; any that do not are reported.
    """
    commuting, violations = [], []
    for a in elements:
        if triple.represent_op is not None:
            op = triple.represent_op(a)
            mask = op.interior_mask()
            P = op.matrix
        else:
            P = triple.represent(a)
            mask = triple.interior
        C = triple.dirac @ P - P @ triple.dirac
        if np.abs(C[:, mask]).max(initial=0.0) <= tol:
            commuting.append(a)
            Pm = P[np.ix_(mask, mask)]
            c = np.trace(Pm) / max(Pm.shape[0], 1)
            if np.abs(Pm - c * np.eye(Pm.shape[0])).max(initial=0.0) > tol:
                violations.append(a)
    return {"commuting": commuting, "violations": violations, "ok": not violations}


# crossed products


def _shape_parts(coeff: TruncatedTriple, length: MatrixLengthFunction, B: Ball):
    h, n, d = coeff.dim, len(B), length.dim
    return h, n, d, np.eye(n * d), m_ell_matrix(length, B.elements)


def _pi_rotated(coeff: TruncatedTriple, Q: np.ndarray | None):
    if Q is None:
        return coeff.represent
    return lambda a: Q.conj().T @ coeff.represent(a) @ Q


def _crossed_op(pair: TwistingPair, pi, B: Ball, h: int, d: int):
    def op(f: TwistedElement) -> TruncatedOperator:
        if f.pair is not pair:
            raise ValueError("element belongs to a different twisting pair")
        return amplify(left_regular_matrix(pair, pi, f, B, h), d)

    return op


def _double(op: TruncatedOperator) -> TruncatedOperator:
    M = op.matrix
    Z = np.zeros_like(M)
    return TruncatedOperator(np.block([[M, Z], [Z, M]]), op.interior, op.h_dim * 2, op.v_dim)


def build_odd_to_even(coeff: TruncatedTriple, pair: TwistingPair, length: MatrixLengthFunction, ball, group: AbelianGroup | None = None) -> TruncatedTriple:
    """Even crossed-product triple from an odd coefficient triple.

    D~ = [[0, D(x)1 - i 1(x)M_l], [D(x)1 + i 1(x)M_l, 0]], representation Pi (+) Pi,
    grading diag(1, -1).
    """
    if coeff.parity != "odd":
        raise ValueError("coefficient triple must be odd")
    B = _group_ball(length, group or pair.group, ball)
    h, n, d, I, M = _shape_parts(coeff, length, B)
    _check_size(2 * h * n * d)
    A = np.kron(coeff.dirac, I)
    C = np.kron(np.eye(h), M)
    Dt = np.kron(SX, A) + np.kron(SY, C)
    N = h * n * d
    chi = np.kron(SZ, np.eye(N))
    single = _crossed_op(pair, coeff.represent, B, h, d)
    op = lambda f: _double(single(f))  # noqa: E731
    return TruncatedTriple(
        Dt,
        lambda f: op(f).matrix,
        "even",
        chi,
        labels=[(s, i, g.coords, v) for s in (0, 1) for i in range(h) for g in B for v in range(d)],
        trunc=TruncationSpec(_radius_of(length, B), coeff.trunc.cutoff if coeff.trunc else math.inf),
        represent_op=op,
        meta={"kind": "odd_to_even", "ball": B, "pair": pair, "single": single},
    )


def build_even_to_odd(coeff: TruncatedTriple, pair: TwistingPair, length: MatrixLengthFunction, ball, group: AbelianGroup | None = None) -> TruncatedTriple:
    """Odd crossed-product triple from an even coefficient triple.

    On (H+ (x) l^2 (x) V) (+) (H- (x) l^2 (x) V):
    D~ = [[1 (x) M_l, D- (x) 1], [D+ (x) 1, -1 (x) M_l]].
    H is rotated into a grading eigenbasis first (a permutation when the
    grading is diagonal); the representation is Pi on the rotated space.
    """
    if coeff.parity != "even":
        raise ValueError("coefficient triple must be even")
    B = _group_ball(length, group or pair.group, ball)
    h, n, d, I, M = _shape_parts(coeff, length, B)
    _check_size(h * n * d)
    Q = _split_grading(coeff.grading)
    Dq = Q.conj().T @ coeff.dirac @ Q
    chiq = np.real(np.diag(Q.conj().T @ coeff.grading @ Q))
    Dt = np.kron(Dq, I) + np.kron(np.diag(chiq).astype(complex), M)
    single = _crossed_op(pair, _pi_rotated(coeff, Q), B, h, d)
    p = int(np.sum(chiq > 0))
    return TruncatedTriple(
        Dt,
        lambda f: single(f).matrix,
        "odd",
        labels=[("+" if i < p else "-", i, g.coords, v) for i in range(h) for g in B for v in range(d)],
        trunc=TruncationSpec(_radius_of(length, B), coeff.trunc.cutoff if coeff.trunc else math.inf),
        represent_op=single,
        meta={"kind": "even_to_odd", "ball": B, "pair": pair, "rotation": Q, "plus_dim": p},
    )


def _radius_of(length: MatrixLengthFunction, B: Ball) -> float:
    return float(np.max(length.min_abs_batch(np.array([g.coords for g in B]).reshape(len(B), -1))))


def block_structure_ok(triple: TruncatedTriple, length_matrix: np.ndarray, tol: float = 1e-12) -> bool:
    """Even->odd output has the pattern [[1 (x) M, D- (x) 1], [D+ (x) 1, -1 (x) M]].

    Every H-block (i, j) must be a multiple of the identity on l^2 (x) V,
    except diagonal blocks which carry +-M_l; H+/H+ and H-/H- off-diagonal
    blocks vanish.
    """
    p = triple.meta["plus_dim"]
    h = triple.meta["rotation"].shape[0]
    nd = triple.dim // h
    T = triple.dirac.reshape(h, nd, h, nd)
    eye = np.eye(nd)
    for i in range(h):
        for j in range(h):
            blk = T[i, :, j, :]
            if i == j:
                sign = 1.0 if i < p else -1.0
                if np.abs(blk - sign * length_matrix).max() > tol:
                    return False
            elif (i < p) == (j < p):
                if np.abs(blk).max() > tol:
                    return False
            elif np.abs(blk - blk[0, 0] * eye).max() > tol:
                return False
    return True


def exterior_product(t1: TruncatedTriple, t2: TruncatedTriple) -> TruncatedTriple:
    """Even product of two odd triples on (H1 (x) H2) (+) (H1 (x) H2).

    D = [[0, D1(x)1 - i 1(x)D2], [D1(x)1 + i 1(x)D2, 0]]; the algebra acts by
    pi1(a) (x) pi2(b), doubled, on pairs (a, b).
    """
    if t1.parity != "odd" or t2.parity != "odd":
        raise ValueError("exterior product implemented for two odd triples only")
    n1, n2 = t1.dim, t2.dim
    _check_size(2 * n1 * n2)
    A = np.kron(t1.dirac, np.eye(n2))
    C = np.kron(np.eye(n1), t2.dirac)
    Dt = np.kron(SX, A) + np.kron(SY, C)

    def rep(ab):
        a, b = ab
        return np.kron(np.eye(2), np.kron(t1.represent(a), t2.represent(b)))

    return TruncatedTriple(Dt, rep, "even", np.kron(SZ, np.eye(n1 * n2)), meta={"kind": "exterior"})


# equivariant construction


def equivariant_build(
    coeff: TruncatedTriple,
    cov: CovariantPair,
    pair: TwistingPair,
    length: MatrixLengthFunction,
    ball,
    group: AbelianGroup | None = None,
    check: bool = True,
    tol: float = 1e-10,
) -> TruncatedTriple:
    """Crossed-product triple from a covariant pair on the coefficient space.

    The element a_h d_h acts by pi(a_h) U_h xi (x) d_{h+x} (x) v; the Dirac
    operator is that of :func:`build_odd_to_even` (odd coefficient) or of
    :func:`build_even_to_odd` (even coefficient, U commuting with the grading).
    """
    B = _group_ball(length, group or pair.group, ball)
    h, n, d, I, M = _shape_parts(coeff, length, B)
    if check:
        rep = verify_covariant(cov, pair, B.elements, tol)
        if not rep.ok:
            raise ValueError(f"covariance violated: {rep.worst_violation()}")
    Q = None
    if coeff.parity == "even":
        Q = _split_grading(coeff.grading)
    rot = (lambda X: X) if Q is None else (lambda X: Q.conj().T @ X @ Q)

    def single(f: TwistedElement) -> TruncatedOperator:
        T = np.zeros((h, n, h, n), dtype=complex)
        for x, a in f.terms.items():
            blk = rot(_dense(cov.pi(a) @ cov.U(x)))
            for j, y in enumerate(B):
                i = B.index.get(x + y)
                if i is not None:
                    T[:, i, :, j] += blk
        op = TruncatedOperator(T.reshape(h * n, h * n), B.interior(f.terms), h)
        return amplify(op, d)

    labels = None
    if coeff.parity == "odd":
        _check_size(2 * h * n * d)
        Dt = np.kron(SX, np.kron(coeff.dirac, I)) + np.kron(SY, np.kron(np.eye(h), M))
        op = lambda f: _double(single(f))  # noqa: E731
        return TruncatedTriple(Dt, lambda f: op(f).matrix, "even", np.kron(SZ, np.eye(h * n * d)), labels, represent_op=op,
                               trunc=TruncationSpec(_radius_of(length, B)), meta={"kind": "equivariant", "ball": B, "single": single})
    _check_size(h * n * d)
    chiq = np.real(np.diag(rot(coeff.grading)))
    Dt = np.kron(rot(coeff.dirac), I) + np.kron(np.diag(chiq).astype(complex), M)
    return TruncatedTriple(Dt, lambda f: single(f).matrix, "odd", labels=labels, represent_op=single,
                           trunc=TruncationSpec(_radius_of(length, B)), meta={"kind": "equivariant", "ball": B, "rotation": Q, "single": single})


def conjugator_W(cov: CovariantPair, pair: TwistingPair, ball, v_dim: int = 1, group: AbelianGroup | None = None) -> np.ndarray:
    """W(xi (x) d_g (x) v) = pi(sigma_{g,-g})^* U_g xi (x) d_g (x) v."""
    B = as_ball(ball)
    h, n = cov.dim, len(B)
    alg = pair.algebra
    T = np.zeros((h, n, h, n), dtype=complex)
    for j, g in enumerate(B):
        T[:, j, :, j] = _dense(cov.pi(alg.adjoint(pair.sigma(g, -g))) @ cov.U(g))
    W = T.reshape(h * n, h * n)
    return np.kron(W, np.eye(v_dim)) if v_dim > 1 else W


def hat_coefficient(cov: CovariantPair, a, ball) -> np.ndarray:
    """pi^(a) = pi(a) (x) 1."""
    return np.kron(_dense(cov.pi(a)), np.eye(len(as_ball(ball))))


def hat_translation(cov: CovariantPair, h: GroupElement, ball) -> np.ndarray:
    """L^_h(xi (x) d_g) = U_h xi (x) d_{h+g}, compressed."""
    B = as_ball(ball)
    n = len(B)
    S = np.zeros((n, n))
    for j, g in enumerate(B):
        i = B.index.get(h + g)
        if i is not None:
            S[i, j] = 1.0
    return np.kron(_dense(cov.U(h)), S)


@dataclass(frozen=True)
class IntertwiningReport:
    unitarity: float
    coefficient: float
    translation: float

    def ok(self, tol: float = 1e-11) -> bool:
        return max(self.unitarity, self.coefficient, self.translation) <= tol


def _dense(X) -> np.ndarray:
    return X.toarray() if hasattr(X, "toarray") else np.asarray(X)


def intertwining_check(cov: CovariantPair, pair: TwistingPair, ball, coefficients: Sequence, shifts: Sequence[GroupElement]) -> IntertwiningReport:
    """||W pi~(a) W^* - pi^(a)|| and ||W L~_h W^* - L^_h|| on interior blocks.

    W is block diagonal over the ball with blocks V_g = pi(sigma_{g,-g})^* U_g,
    so both identities are checked block by block:

        V_g pi(rho_{-g}(a)) V_g^*               = pi(a)
        V_{h+y} pi(sigma_{-y-h,h}) V_y^*        = U_h     (h + y in the ball)

    restricted to the interior of the coefficient space.
    """
    from .algebra import restricted

    B = as_ball(ball)
    alg = pair.algebra
    mask = cov.interior
    V = {g: cov.pi(alg.adjoint(pair.sigma(g, -g))) @ cov.U(g) for g in B}
    Vs = {g: v.conj().T for g, v in V.items()}
    m = int(mask.sum())

    def norm(X, Y) -> float:
        return float(np.linalg.norm(restricted(X, mask) - restricted(Y, mask), 2)) if m else 0.0

    eye = sp.identity(cov.dim, dtype=complex, format="csr")
    u = max(norm(V[g] @ Vs[g], eye) for g in B)
    c = 0.0
    for a in coefficients:
        pa = cov.pi(a)
        for g in B:
            c = max(c, norm(V[g] @ cov.pi(pair.rho(-g, a)) @ Vs[g], pa))
    t = 0.0
    for h in shifts:
        Uh = cov.U(h)
        for y in B:
            if h + y in B:
                t = max(t, norm(V[h + y] @ cov.pi(pair.sigma(-y - h, h)) @ Vs[y], Uh))
    return IntertwiningReport(u, c, t)


def intertwining_check_full(cov: CovariantPair, pair: TwistingPair, ball, coefficients: Sequence, shifts: Sequence[GroupElement]) -> IntertwiningReport:
    """Same identities with the assembled W, pi~, L~ (small dense models)."""
    from .algebra import induced_coefficient, induced_translation

    B = as_ball(ball)
    W = conjugator_W(cov, pair, B)
    Wc = W.conj().T
    h = cov.dim
    u = float(np.linalg.norm(W @ Wc - np.eye(W.shape[0]), 2))
    c = 0.0
    for a in coefficients:
        op = induced_coefficient(pair, lambda x: _dense(cov.pi(x)), a, B, h)
        diff = W @ op.matrix @ Wc - hat_coefficient(cov, a, B)
        c = max(c, float(np.linalg.norm(diff[:, op.interior_mask()], 2)))
    t = 0.0
    for s in shifts:
        op = induced_translation(pair, lambda x: _dense(cov.pi(x)), s, B, h)
        diff = W @ op.matrix @ Wc - hat_translation(cov, s, B)
        mask = op.interior_mask()
        if mask.any():
            t = max(t, float(np.linalg.norm(diff[:, mask], 2)))
    return IntertwiningReport(u, c, t)


@dataclass(frozen=True)
class PerturbationReport:
    gap: float
    sup_commutator_U: float
    sup_commutator_sigma: float
    bounded_evidence: bool


def perturbation_gap(cov: CovariantPair, pair: TwistingPair, coeff: TruncatedTriple, ball) -> PerturbationReport:
    """||W D~ W^* - D~|| together with sup_g ||[D, U_g]|| and sup_h ||[D, pi(sigma_{h,-h})]||.

    W commutes with 1 (x) M_l, so the gap reduces to max_g ||[D, pi(sigma_{g,-g})^* U_g]||.
    """
    B = as_ball(ball)
    D = coeff.dirac
    alg = pair.algebra
    gap = cu = cs = 0.0
    mask = cov.interior
    for g in B:
        U = _dense(cov.U(g))
        S = _dense(cov.pi(alg.adjoint(pair.sigma(g, -g))))
        V = S @ U
        gap = max(gap, float(np.linalg.norm((V @ D @ V.conj().T - D)[np.ix_(mask, mask)], 2)))
        cu = max(cu, float(np.linalg.norm((D @ U - U @ D)[np.ix_(mask, mask)], 2)))
        cs = max(cs, float(np.linalg.norm((D @ S - S @ D)[np.ix_(mask, mask)], 2)))
    return PerturbationReport(gap, cu, cs, gap <= cu + cs + 1e-9)


# equicontinuity


@dataclass(frozen=True)
class EquicontinuityReport:
    radii: tuple[float, ...]
    values: tuple[float, ...]
    plateau: bool
    exact: bool


def equicontinuity_sweep(
    coeff: TruncatedTriple,
    pair: TwistingPair,
    a,
    y: GroupElement,
    radii: Sequence[float],
    length: MatrixLengthFunction | None = None,
) -> EquicontinuityReport:
    """sup over x in B_R of ||[D, pi(rho_x(a) sigma_{x,y})]|| for each R.

    Finite groups use every element (the sup is then exact); infinite groups
    need ``length`` to define the balls.
    """
    G = pair.group
    alg = pair.algebra
    D = coeff.dirac

    def value(x):
        P = coeff.represent(alg.mul(pair.rho(x, a), pair.sigma(x, y)))
        return float(np.linalg.norm(D @ P - P @ D, 2))

    if G.is_finite:
        v = max(value(x) for x in G.elements())
        return EquicontinuityReport(tuple(radii), tuple(v for _ in radii), True, True)
    if length is None:
        raise ValueError("infinite groups need a length function")
    elems = enumerate_ball(G, length, max(radii))
    rad = length.min_abs_batch(np.array([g.coords for g in elems]).reshape(len(elems), -1))
    vals = np.array([value(x) for x in elems])
    out = tuple(float(vals[rad <= R].max(initial=0.0)) for R in radii)
    plateau = len(out) < 2 or abs(out[-1] - out[-2]) <= 0.01 * max(out[-1], 1e-300)
    return EquicontinuityReport(tuple(radii), out, plateau, False)


# summability


def structured_abs_spectrum(coeff_eigs, length_eigs, doubled: bool) -> np.ndarray:
    """|eigenvalues| of a crossed Dirac operator: sqrt(mu^2 + nu^2) per pair.

    The crossed operators square to D^2 (x) 1 + 1 (x) M_l^2 (doubled for the
    odd -> even case, where the eigenvalues come in +- pairs).
    """
    mu2 = np.asarray(coeff_eigs, dtype=float) ** 2
    nu2 = np.asarray(length_eigs, dtype=float) ** 2
    vals = np.sqrt(np.add.outer(mu2, nu2).ravel())
    return np.concatenate([vals, vals]) if doubled else vals


@dataclass(frozen=True)
class SandwichCheck:
    thresholds: tuple[float, ...]
    lower: tuple[int, ...]
    middle: tuple[int, ...]
    upper: tuple[int, ...]

    @property
    def holds(self) -> bool:
        return all(lo <= m <= up for lo, m, up in zip(self.lower, self.middle, self.upper))


def counting_sandwich(coeff_eigs, length_eigs, thresholds: Sequence[float]) -> SandwichCheck:
    """N_{t/sqrt2}(sqrt(1+M^2)) N_{t/sqrt2}(sqrt(1+D^2)) <= N_t(sqrt(1+M^2+D^2)) <= N_t(..) N_t(..).

    Counts are taken on squared values against t^2 so no square roots enter.
    """
    d2 = 1.0 + np.asarray(coeff_eigs, dtype=float) ** 2
    m2 = 1.0 + np.asarray(length_eigs, dtype=float) ** 2
    mid = np.add.outer(d2, m2 - 1.0).ravel()
    lo, md, up = [], [], []
    for t in thresholds:
        t2 = float(t) ** 2
        lo.append(counting_N(m2, t2 / 2) * counting_N(d2, t2 / 2))
        md.append(counting_N(mid, t2))
        up.append(counting_N(m2, t2) * counting_N(d2, t2))
    return SandwichCheck(tuple(float(t) for t in thresholds), tuple(lo), tuple(md), tuple(up))


@dataclass(frozen=True)
class Rung:
    radius: float
    complete_below: float
    kept: int
    estimate: AbscissaSummary
    coefficient_estimate: AbscissaSummary
    sandwich: SandwichCheck

    @property
    def abscissa(self) -> float:
        return _robust(self.estimate)

    @property
    def coefficient_abscissa(self) -> float:
        return _robust(self.coefficient_estimate)


@dataclass(frozen=True)
class SummabilityReport:
    rungs: tuple[Rung, ...]
    growth: float
    coefficient_abscissa: float
    product_abscissa: float
    bound: float
    bound_holds: bool
    route: str
    notes: tuple[str, ...] = field(default=())


def summability_report(
    build_rung: Callable[[float], tuple[np.ndarray, np.ndarray, float]],
    ladder: Sequence[float],
    doubled: bool = True,
    growth: float | None = None,
    slack: float = 0.25,
    s_grid=None,
) -> SummabilityReport:
    """Abscissa of the crossed Dirac operator along a truncation ladder.

    ``build_rung(R)`` returns (coefficient Dirac eigenvalues, M_l eigenvalues,
    completeness radius).  The product spectrum is assembled from the
    structured formula and only values at or below the completeness radius
    are kept, since larger ones are missing partners from the truncation.
    The bound row compares against abs(zeta_D) + d_G with ``slack``.
    """
    ladder = list(ladder)
    if len(ladder) < 3:
        raise ValueError("ladder needs at least 3 rungs")
    rungs = []
    for R in ladder:
        coeff_eigs, length_eigs, complete = build_rung(R)
        vals = structured_abs_spectrum(coeff_eigs, length_eigs, doubled)
        kept = vals[vals <= complete * (1 + 1e-12)]
        est = estimate_all(singular_sequence_from_spectrum(kept), s_grid)
        ce = np.asarray(coeff_eigs, dtype=float)
        cest = estimate_all(singular_sequence_from_spectrum(ce[np.abs(ce) <= complete * (1 + 1e-12)]), s_grid)
        ts = _sandwich_thresholds(complete)
        rungs.append(Rung(float(R), float(complete), int(kept.size), est, cest, counting_sandwich(coeff_eigs, length_eigs, ts)))
    last = rungs[-1]
    coeff_abs = _robust(last.coefficient_estimate)
    prod = _robust(last.estimate)
    g = 0.0 if growth is None else float(growth)
    return SummabilityReport(tuple(rungs), g, coeff_abs, prod, coeff_abs + g, prod <= coeff_abs + g + slack, "structured")


def _robust(s: AbscissaSummary) -> float:
    """Mean of the finite slope estimators; the trace scan only as a fallback.

    The scan's partial-sum ratio converges slowly near the abscissa and is
    biased upward on the few thousand modes of a desk-scale rung.
    """
    v = [x for x in (s.mu_slope.value, s.lambda_slope.value) if math.isfinite(x)]
    if v:
        return float(np.mean(v))
    return s.trace_scan.value


def _sandwich_thresholds(top: float, count: int = 40) -> np.ndarray:
    # irrational offsets keep t^2 and t^2/2 away from integer eigenvalue sums
    return np.sqrt(np.linspace(1.0, 1.0 + 2 * top**2, count) + math.sqrt(2) / 7)


def group_crossed_rung(coeff_length: MatrixLengthFunction, coeff_group: AbelianGroup, length: MatrixLengthFunction, group: AbelianGroup):
    """Rung builder: coefficient = group triple, crossed with another group.

    Both balls have radius R, so both spectra are complete below R.
    """

    def build(R: float):
        cb = enumerate_ball(coeff_group, coeff_length, R)
        gb = enumerate_ball(group, length, R)
        ce = np.linalg.eigvalsh(coeff_length.matrices_batch(np.array([g.coords for g in cb]).reshape(len(cb), -1))).ravel()
        le = np.linalg.eigvalsh(length.matrices_batch(np.array([g.coords for g in gb]).reshape(len(gb), -1))).ravel()
        return ce, le, float(R)

    return build


def growth_exponent(length: MatrixLengthFunction, group: AbelianGroup, radius: float) -> float:
    if group.is_finite:
        return 0.0
    radii = np.unique(np.round(np.geomspace(max(radius / 8, 1), radius, 8)))
    return growth_estimate(length, group, radii).slope
