"""Finite abelian actions on finite-dimensional C*-algebras.

B is a direct sum of full matrix blocks, stored as block-diagonal N x N
matrices.  A group element g acts by Ad(W_g), where W_g is a unitary that
may permute blocks of equal size.  Characters k of G cut B into spectral
subspaces B_k = {b : gamma_g(b) = <k, g> b}.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .algebra import TwistedElement, involution
from .coefficients import MatrixAlgebra
from .groups import FiniteAbelianGroup, GroupElement, dual_pairing
from .twist import Frame, TwistingPair, VerificationReport, act_by_p, frame_to_pair, verify_twisting_pair


def _null_space(A: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    if A.size == 0:
        return np.eye(A.shape[1], dtype=complex)
    _, s, vh = np.linalg.svd(A)
    tol = rtol * max(s.max(initial=0.0), 1.0)
    rank = int(np.sum(s > tol))
    return vh[rank:].conj().T


def _independent_rows(vectors: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    """Greedy maximal independent subset of the rows, in order.

    Projected matrix units stay sparse this way, which keeps frames simple
    and deterministic (e.g. the antidiagonal unitary for M_2).
    """
    kept: list[np.ndarray] = []
    ortho: list[np.ndarray] = []
    for v in vectors:
        r = v.astype(complex)
        for q in ortho:
            r = r - np.vdot(q, r) * q
        n = np.linalg.norm(r)
        if n > rtol * max(np.linalg.norm(v), 1.0):
            kept.append(v)
            ortho.append(r / n)
    return np.array(kept).reshape(len(kept), vectors.shape[1])


class CoveringAction:
    """Action of a finite abelian group on B = (+) M_{n_i}(C) by Ad(W_g).

    ``generators`` holds one unitary per cyclic factor of ``group``;
    W_g is the ordered product of their powers.
    """

    def __init__(self, block_sizes: Sequence[int], group: FiniteAbelianGroup, generators: Sequence[np.ndarray], name: str = ""):
        self.block_sizes = tuple(int(n) for n in block_sizes)
        self.group = group
        self.name = name
        self.N = sum(self.block_sizes)
        self.generators = [np.asarray(W, dtype=complex) for W in generators]
        if len(self.generators) != len(group.moduli):
            raise ValueError("one generator per cyclic factor")
        self.mask = np.zeros((self.N, self.N), bool)
        o = 0
        for n in self.block_sizes:
            self.mask[o:o + n, o:o + n] = True
            o += n
        self._basis = []
        for i, j in zip(*np.nonzero(self.mask)):
            e = np.zeros((self.N, self.N), dtype=complex)
            e[i, j] = 1
            self._basis.append(e)
        self.algebra = MatrixAlgebra(self.N, basis=self._basis)
        self._W = {g.coords: self._unitary(g) for g in group.elements()}

    def _unitary(self, g: GroupElement) -> np.ndarray:
        W = np.eye(self.N, dtype=complex)
        for G, c in zip(self.generators, g.coords):
            W = W @ np.linalg.matrix_power(G, c)
        return W

    @property
    def dim(self) -> int:
        return int(self.mask.sum())

    def basis(self) -> list[np.ndarray]:
        return list(self._basis)

    def W(self, g: GroupElement) -> np.ndarray:
        return self._W[g.coords]

    def gamma(self, g: GroupElement, b: np.ndarray) -> np.ndarray:
        W = self.W(g)
        return W @ b @ W.conj().T

    def vec(self, b: np.ndarray) -> np.ndarray:
        """Coordinates of b in the matrix-unit basis of B."""
        return np.asarray(b)[self.mask]

    def unvec(self, v: np.ndarray) -> np.ndarray:
        b = np.zeros((self.N, self.N), dtype=complex)
        b[self.mask] = v
        return b

    def outside(self, b: np.ndarray) -> float:
        """Size of the part of b lying off the block diagonal."""
        return float(np.abs(np.asarray(b)[~self.mask]).max(initial=0.0))

    def check(self) -> dict[str, float]:
        """Homomorphism and B-invariance residuals."""
        out = {"identity": 0.0, "homomorphism": 0.0, "invariance": 0.0}
        els = self.group.elements()
        for b in self._basis:
            out["identity"] = max(out["identity"], float(np.abs(self.gamma(self.group.identity(), b) - b).max()))
            for g in els:
                gb = self.gamma(g, b)
                out["invariance"] = max(out["invariance"], self.outside(gb))
                for h in els:
                    out["homomorphism"] = max(out["homomorphism"], float(np.abs(self.gamma(g, self.gamma(h, b)) - self.gamma(g + h, b)).max()))
        return out

    def projector(self, k: GroupElement, b: np.ndarray) -> np.ndarray:
        """(1/|G|) sum_g conj<k, g> gamma_g(b): the projection onto B_k."""
        out = np.zeros((self.N, self.N), dtype=complex)
        for g in self.group.elements():
            out += np.conj(dual_pairing(k, g)) * self.gamma(g, b)
        return out / self.group.order


@dataclass(frozen=True)
class SpectralSubspace:
    character: GroupElement
    basis: tuple[np.ndarray, ...]

    @property
    def dim(self) -> int:
        return len(self.basis)


def spectral_decompose(action: CoveringAction, tol: float = 1e-12) -> list[SpectralSubspace]:
    """B_k for every character k, with a basis of projected matrix units."""
    res = action.check()
    if max(res.values()) > tol:
        raise ValueError(f"action is not a homomorphism into Aut(B): {res}")
    out = []
    for k in action.group.dual().elements():
        rows = np.array([action.vec(action.projector(k, b)) for b in action.basis()])
        out.append(SpectralSubspace(k, tuple(action.unvec(v) for v in _independent_rows(rows))))
    total = sum(s.dim for s in out)
    if total != action.dim:
        raise ArithmeticError(f"spectral subspaces have total dimension {total}, expected {action.dim}")
    return out


def _by_character(subspaces: Sequence[SpectralSubspace]) -> dict:
    return {s.character.coords: s for s in subspaces}


def _residual_from(action: CoveringAction, k: GroupElement, x: np.ndarray) -> float:
    return float(np.linalg.norm(x - action.projector(k, x)))


@dataclass(frozen=True)
class ProductAudit:
    product: float
    adjoint: float
    projector: float

    def ok(self, tol: float = 1e-12) -> bool:
        return max(self.product, self.adjoint, self.projector) <= tol


def subspace_product_audit(action: CoveringAction, subspaces: Sequence[SpectralSubspace]) -> ProductAudit:
    """B_h B_k in B_{h+k}, B_k^* in B_{-k}, and the projector identities."""
    prod = adj = 0.0
    for s in subspaces:
        for b in s.basis:
            adj = max(adj, _residual_from(action, -s.character, b.conj().T))
        for t in subspaces:
            k = s.character + t.character
            for b, c in itertools.product(s.basis, t.basis):
                prod = max(prod, _residual_from(action, k, b @ c))
    # idempotent, orthogonal, summing to the identity
    proj = 0.0
    chars = action.group.dual().elements()
    for b in action.basis():
        parts = [action.projector(k, b) for k in chars]
        proj = max(proj, float(np.abs(sum(parts) - b).max()))
        for k, p in zip(chars, parts):
            for k2 in chars:
                q = action.projector(k2, p)
                proj = max(proj, float(np.abs(q - (p if k2 == k else 0)).max()))
    return ProductAudit(prod, adj, proj)


@dataclass(frozen=True)
class ElwoodReport:
    free: bool
    rank: int
    target: int


def elwood_freeness_check(action: CoveringAction, tol: float = 1e-10) -> ElwoodReport:
    """Surjectivity of can(x (x) y) = (x gamma_g(y))_g onto B^|G|, as a rank count."""
    basis = action.basis()
    els = action.group.elements()
    rows = []
    moved = {g.coords: [action.gamma(g, b) for b in basis] for g in els}
    for x in basis:
        for j in range(len(basis)):
            rows.append(np.concatenate([action.vec(x @ moved[g.coords][j]) for g in els]))
    A = np.array(rows)
    s = np.linalg.svd(A, compute_uv=False)
    rank = int(np.sum(s > tol * max(s.max(initial=0.0), 1.0)))
    target = action.dim * action.group.order
    return ElwoodReport(rank == target, rank, target)


@dataclass(frozen=True)
class PolarDecomposition:
    v: np.ndarray
    h: np.ndarray
    membership: float


def polar_decompose(c: np.ndarray, projector_v: Callable[[np.ndarray], np.ndarray] | None = None,
                    projector_h: Callable[[np.ndarray], np.ndarray] | None = None, tol: float = 1e-12) -> PolarDecomposition:
    """c = v h with h = (c^* c)^{1/2} positive invertible and v = c h^{-1}.

    The optional projectors report how far v and h sit from the subspaces
    they should belong to.
    """
    c = np.asarray(c, dtype=complex)
    w, V = np.linalg.eigh(c.conj().T @ c)
    if w.min() <= tol * max(w.max(), 1.0):
        raise ValueError("polar decomposition needs a left-invertible element")
    r = np.sqrt(w)
    h = (V * r) @ V.conj().T
    v = c @ ((V / r) @ V.conj().T)
    mem = 0.0
    if projector_v is not None:
        mem = max(mem, float(np.linalg.norm(projector_v(v) - v)))
    if projector_h is not None:
        mem = max(mem, float(np.linalg.norm(projector_h(h) - h)))
    return PolarDecomposition(v, h, mem)


@dataclass(frozen=True)
class CharacterVerdict:
    character: tuple[int, ...]
    dim: int
    invertible: bool
    common_kernel: bool


@dataclass(frozen=True)
class RankOneReport:
    regular: bool
    characters: tuple[CharacterVerdict, ...]
    frame: Frame | None = None


def _common_kernel(basis: Sequence[np.ndarray]) -> bool:
    """True when all basis elements annihilate a common vector."""
    if not basis:
        return True
    return _null_space(np.vstack(basis)).shape[1] > 0


def rank1_regular_check(action: CoveringAction, subspaces: Sequence[SpectralSubspace] | None = None,
                        trials: int = 64, seed: int = 0, tol: float = 1e-8) -> RankOneReport:
    """Look for an invertible element in every B_k and unitarize it.

    The determinant restricted to B_k is a polynomial, so if it is not
    identically zero a random combination of the basis is invertible with
    probability one.  Failures are cross-checked by the common kernel test.
    """
    subspaces = subspaces if subspaces is not None else spectral_decompose(action)
    rng = np.random.default_rng(seed)
    verdicts, unitaries = [], {}
    e = action.group.dual().identity()
    for s in subspaces:
        found = None
        if s.character == e:
            found = np.eye(action.N, dtype=complex)
        else:
            candidates = [sum(s.basis)] if s.basis else []
            for _ in range(trials if s.basis else 0):
                z = rng.normal(size=s.dim) + 1j * rng.normal(size=s.dim)
                candidates.append(sum(zi / abs(zi) * b for zi, b in zip(z, s.basis)))
            for c in candidates:
                sv = np.linalg.svd(c, compute_uv=False)
                if sv.min() > tol * sv.max():
                    k = s.character
                    found = polar_decompose(c).v
                    found = action.projector(k, found)
                    break
        ck = False if found is not None else _common_kernel(list(s.basis))
        verdicts.append(CharacterVerdict(s.character.coords, s.dim, found is not None, ck))
        if found is not None:
            unitaries[s.character.coords] = found
    regular = all(v.invertible for v in verdicts)
    frame = None
    if regular:
        frame = Frame(action.group.dual(), fixed_algebra(action, subspaces), unitaries, projector=action.projector)
    return RankOneReport(regular, tuple(verdicts), frame)


def fixed_algebra(action: CoveringAction, subspaces: Sequence[SpectralSubspace] | None = None) -> MatrixAlgebra:
    """A = B^G = B_0 as a matrix algebra whose test elements span A."""
    subspaces = subspaces if subspaces is not None else spectral_decompose(action)
    e = action.group.dual().identity()
    return MatrixAlgebra(action.N, basis=list(_by_character(subspaces)[e.coords].basis))


# the isomorphism with the twisted crossed product


@dataclass
class PhiReport:
    pair_report: VerificationReport
    multiplicativity: float
    involution: float
    equivariance: float
    dimension_ok: bool
    rank: int | None
    round_trip: dict = field(default_factory=dict)

    def ok(self, tol: float = 1e-11) -> bool:
        return (self.pair_report.ok and self.dimension_ok
                and max(self.multiplicativity, self.involution, self.equivariance) <= tol)


def phi(frame: Frame, f: TwistedElement):
    """Phi(sum a_j d_j) = sum a_j mu_j."""
    alg = f.pair.algebra
    out = alg.zero()
    for j, a in f.terms.items():
        out = alg.add(out, alg.mul(a, frame(j)))
    return out


def dual_action(g: GroupElement, f: TwistedElement) -> TwistedElement:
    """(g . f)(j) = <j, g> f(j)."""
    alg = f.pair.algebra
    return TwistedElement(f.pair, {j: alg.scale(dual_pairing(j, g), a) for j, a in f.terms.items()})


def crossed_iso_phi(
    frame: Frame,
    gamma: Callable[[GroupElement, Any], Any],
    fixed_basis: Sequence[Any],
    random_fixed: Callable[[np.random.Generator], Any],
    dim_B: int | None = None,
    vec: Callable[[Any], np.ndarray] | None = None,
    samples: int = 20,
    seed: int = 0,
    bijectivity: Callable[[], tuple[bool, int | None]] | None = None,
) -> PhiReport:
    """Check that Phi is a G-equivariant *-isomorphism from A x| G^ onto B.

    Works over any coefficient algebra: ``gamma`` is the action on B,
    ``fixed_basis`` spans A = B^G and ``random_fixed`` samples it.  In finite
    dimension bijectivity is dim A |G^| = dim B plus a rank count of Phi on
    the basis {a_i d_j}; other models pass their own ``bijectivity``.
    """
    pair = frame_to_pair(frame)
    G_hat = frame.group
    pr = verify_twisting_pair(pair, exhaustive_limit=G_hat.order ** 3)
    alg = pair.algebra
    rng = np.random.default_rng(seed)
    chars = G_hat.elements()
    G = G_hat.dual()
    mult = inv = eq = 0.0

    def rand():
        return TwistedElement(pair, {j: random_fixed(rng) for j in chars})

    for _ in range(samples):
        f, g = rand(), rand()
        mult = max(mult, alg.distance(phi(frame, f * g), alg.mul(phi(frame, f), phi(frame, g))))
        inv = max(inv, alg.distance(phi(frame, involution(f)), alg.adjoint(phi(frame, f))))
        for x in G.elements():
            eq = max(eq, alg.distance(phi(frame, dual_action(x, f)), gamma(x, phi(frame, f))))
    rank = None
    if bijectivity is not None:
        dim_ok, rank = bijectivity()
    else:
        dim_ok = dim_B is not None and len(fixed_basis) * G_hat.order == dim_B
        if vec is not None and dim_B is not None:
            cols = [vec(alg.mul(a, frame(j))) for a in fixed_basis for j in chars]
            rank = int(np.linalg.matrix_rank(np.array(cols)))
            dim_ok = dim_ok and rank == dim_B
    # round trip: the spectral subspace of A x| G^ for k under U_x(a d_j) = conj<j,x> a d_j is A d_{-k}
    rt = {}
    for k in chars:
        hits = [j for j in chars if all(abs(np.conj(dual_pairing(j, x)) - dual_pairing(k, x)) < 1e-12 for x in G.elements())]
        rt[k.coords] = [j.coords for j in hits]
    return PhiReport(pr, mult, inv, eq, dim_ok, rank, rt)


def phi_report_for_action(action: CoveringAction, frame: Frame, samples: int = 20, seed: int = 0) -> PhiReport:
    subspaces = spectral_decompose(action)
    A = list(_by_character(subspaces)[frame.group.identity().coords].basis)

    def random_fixed(rng):
        z = rng.normal(size=len(A)) + 1j * rng.normal(size=len(A))
        return sum(zi * a for zi, a in zip(z, A))

    return crossed_iso_phi(frame, action.gamma, A, random_fixed, action.dim, action.vec, samples, seed)


def frame_change(frame: Frame, other: Frame) -> tuple[Callable[[GroupElement], Any], TwistingPair]:
    """p(j) = mu'_j mu_j^*, and the pair obtained by acting with p on frame's pair."""
    alg = frame.algebra

    def p(j):
        return alg.mul(other(j), alg.adjoint(frame(j)))

    return p, act_by_p(frame_to_pair(frame), p)


# shipped examples


def m2_example() -> CoveringAction:
    """M_2(C) with Z_2 acting by Ad(diag(1, -1))."""
    return CoveringAction([2], FiniteAbelianGroup((2,)), [np.diag([1.0, -1.0])], "M2-Z2")


def c3_swap_example() -> CoveringAction:
    """C^3 with Z_2 swapping the first two coordinates."""
    P = np.eye(3)[[1, 0, 2]]
    return CoveringAction([1, 1, 1], FiniteAbelianGroup((2,)), [P], "C3-swap")


def c2_swap_example() -> CoveringAction:
    """C^2 with Z_2 swapping the coordinates."""
    return CoveringAction([1, 1], FiniteAbelianGroup((2,)), [np.eye(2)[[1, 0]]], "C2-swap")


def trivial_example(n: int = 2) -> CoveringAction:
    return CoveringAction([n], FiniteAbelianGroup((2,)), [np.eye(n)], "trivial")


def clock_shift_example(n: int = 3) -> CoveringAction:
    """M_n(C) with Z_n x Z_n acting by Ad of clock and shift matrices."""
    w = np.exp(2j * np.pi / n)
    C = np.diag(w ** np.arange(n))
    S = np.roll(np.eye(n), 1, axis=0)
    return CoveringAction([n], FiniteAbelianGroup((n, n)), [C, S], f"clock-shift-{n}")


EXAMPLES: dict[str, Callable[[], CoveringAction]] = {
    "m2": m2_example,
    "c3-swap": c3_swap_example,
    "c2-swap": c2_swap_example,
    "trivial": trivial_example,
    "clock-shift": clock_shift_example,
}


def covering_covariant_pair(action: CoveringAction, frame: Frame):
    """(pi, U) on C^N: A acts by inclusion, U_j = mu_j."""
    from .algebra import CovariantPair

    return CovariantPair(lambda a: np.asarray(a, dtype=complex), lambda j: frame(j), action.N)
