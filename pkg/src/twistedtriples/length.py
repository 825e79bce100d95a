"""Matrix-valued length functions and their diagnostics.

A length function assigns to each group element a Hermitian matrix on a
fixed finite-dimensional space V.  The multiplication operator M_l acts
blockwise on l^2(G) (x) V.  Balls are B_n = {g : min Sp|l(g)| <= n}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .groups import AbelianGroup, GroupElement, enumerate_ball
from .order import tail_fit

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _coords(g) -> tuple[int, ...]:
    return g.coords if isinstance(g, GroupElement) else tuple(int(c) for c in g)


class MatrixLengthFunction:
    """Base class.  Subclasses implement :meth:`matrix`."""

    kind = "abstract"

    def __init__(self, dim: int):
        self.dim = dim

    def matrix(self, coords: tuple[int, ...]) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, g) -> np.ndarray:
        return self.matrix(_coords(g))

    def matrices_batch(self, coords: np.ndarray) -> np.ndarray:
        return np.array([self.matrix(tuple(int(c) for c in row)) for row in coords]).reshape(len(coords), self.dim, self.dim)

    def singular_batch(self, coords: np.ndarray) -> np.ndarray:
        """Singular values s_k(g), ascending, shape (N, dim)."""
        if len(coords) == 0:
            return np.zeros((0, self.dim))
        return np.sort(np.abs(np.linalg.eigvalsh(self.matrices_batch(coords))), axis=1)

    def min_abs_batch(self, coords: np.ndarray) -> np.ndarray:
        return self.singular_batch(coords)[:, 0]

    def search_box(self, radius: float) -> int | None:
        return None

    def abs_matrix(self, g) -> np.ndarray:
        return matrix_abs(self(g))


def matrix_abs(X: np.ndarray) -> np.ndarray:
    """|X| = (X^* X)^{1/2} for Hermitian X.

    When X^2 is already diagonal the square root is taken entrywise, which is
    exact for Clifford-type values where X^2 = c Id.
    """
    X2 = X.conj().T @ X
    off = X2 - np.diag(np.diag(X2))
    if not np.any(off):
        return np.diag(np.sqrt(np.maximum(np.diag(X2).real, 0.0))).astype(complex)
    w, Q = np.linalg.eigh(X)
    return (Q * np.abs(w)) @ Q.conj().T


class WordLength(MatrixLengthFunction):
    """Scalar word length for the standard generators (l^1 norm on Z^n)."""

    kind = "word"

    def __init__(self, group: AbelianGroup):
        super().__init__(1)
        self.group = group

    def _scalar(self, coords: np.ndarray) -> np.ndarray:
        coords = np.asarray(coords, dtype=np.int64).reshape(-1, self.group.rank)
        parts = []
        for i, m in enumerate(self.group.moduli):
            c = coords[:, i]
            parts.append(np.abs(c) if m == 0 else np.minimum(c % m, (-c) % m))
        return np.sum(parts, axis=0).astype(float) if parts else np.zeros(len(coords))

    def matrix(self, coords):
        return np.array([[self._scalar(np.array([coords]))[0]]], dtype=complex)

    def matrices_batch(self, coords):
        return self._scalar(coords).reshape(-1, 1, 1).astype(complex)

    def singular_batch(self, coords):
        return self._scalar(coords).reshape(-1, 1)

    def search_box(self, radius):
        return int(math.floor(radius))


def clifford_generators(n: int) -> list[np.ndarray]:
    """n anticommuting Hermitian unitaries on C^(2^ceil(n/2)).

    Jordan-Wigner pattern on k = ceil(n/2) qubits:
    f_{2j+1} = Z^(x j) (x) X (x) I..., f_{2j+2} = Z^(x j) (x) Y (x) I...
    For n = 2 these are the Pauli matrices X and Y.
    """
    if n < 1:
        raise ValueError("n must be positive")
    k = (n + 1) // 2
    out = []
    for j in range(k):
        for P in (PAULI_X, PAULI_Y):
            factors = [PAULI_Z] * j + [P] + [np.eye(2)] * (k - j - 1)
            M = factors[0]
            for F in factors[1:]:
                M = np.kron(M, F)
            out.append(M.astype(complex))
    return out[:n]


def check_clifford_relations(gens: Sequence[np.ndarray], tol: float = 1e-13) -> float:
    """Largest violation of f_j = f_j^*, f_i f_j + f_j f_i = 2 delta_ij."""
    worst = 0.0
    d = gens[0].shape[0]
    for i, a in enumerate(gens):
        worst = max(worst, np.abs(a - a.conj().T).max())
        for j, b in enumerate(gens):
            worst = max(worst, np.abs(a @ b + b @ a - 2 * (i == j) * np.eye(d)).max())
    return float(worst)


class CliffordLength(MatrixLengthFunction):
    """l(z) = sum_j z_j f_j on Z^n."""

    kind = "clifford"

    def __init__(self, n: int, generators: Sequence[np.ndarray] | None = None):
        gens = clifford_generators(n) if generators is None else [np.asarray(g, dtype=complex) for g in generators]
        if len(gens) != n:
            raise ValueError("need exactly n generators")
        err = check_clifford_relations(gens)
        if err > 1e-13:
            raise ValueError(f"Clifford relations violated by {err:.3g}")
        super().__init__(gens[0].shape[0])
        self.n = n
        self.generators = gens
        self._stack = np.array(gens)

    def matrix(self, coords):
        return np.tensordot(np.asarray(coords, dtype=float), self._stack, axes=1)

    def matrices_batch(self, coords):
        return np.tensordot(np.asarray(coords, dtype=float), self._stack, axes=1)

    def singular_batch(self, coords):
        nrm = np.sqrt(np.sum(np.asarray(coords, dtype=float) ** 2, axis=1))
        return np.repeat(nrm[:, None], self.dim, axis=1)

    def search_box(self, radius):
        return int(math.floor(radius))


def clifford_length(n: int) -> CliffordLength:
    return CliffordLength(n)


def scalar_clifford_length() -> CliffordLength:
    """l(n) = n on Z, with the one-dimensional generator f_1 = 1."""
    return CliffordLength(1, [np.ones((1, 1))])


class PullbackLength(MatrixLengthFunction):
    """l o s for a map s between groups (given on coordinates)."""

    kind = "pullback"

    def __init__(self, base: MatrixLengthFunction, s: Callable[[tuple[int, ...]], tuple[int, ...]], window: Sequence[tuple[int, ...]] = (), box: Callable[[float], int] | None = None):
        super().__init__(base.dim)
        self.base = base
        self.s = s
        self._box = box
        for w in window[:1]:
            zero = tuple(0 for _ in w)
            if any(s(zero)):
                raise ValueError("s(0) must be 0")
        for w in window:
            if any(w) and not any(s(w)):
                raise ValueError(f"s vanishes at {w} != 0")

    def matrix(self, coords):
        return self.base.matrix(self.s(tuple(coords)))

    def singular_batch(self, coords):
        mapped = np.array([self.s(tuple(int(c) for c in row)) for row in coords])
        return self.base.singular_batch(mapped)

    def search_box(self, radius):
        return self._box(radius) if self._box else None


def pullback_length(base: MatrixLengthFunction, s, window=(), box=None) -> PullbackLength:
    return PullbackLength(base, s, window, box)


def parabola_pullback() -> PullbackLength:
    """Clifford length on Z^2 pulled back along n -> (n, n^2)."""
    window = [(n,) for n in range(-20, 21)]
    return PullbackLength(CliffordLength(2), lambda c: (c[0], c[0] * c[0]), window, lambda r: int(math.floor(r)))


class TableLength(MatrixLengthFunction):
    """Explicit table on a finite set of coordinates."""

    kind = "table"

    def __init__(self, table: dict[tuple[int, ...], np.ndarray], dim: int | None = None):
        items = {tuple(k): np.asarray(v, dtype=complex) for k, v in table.items()}
        d = dim if dim is not None else next(iter(items.values())).shape[0]
        for k, v in items.items():
            if v.shape != (d, d):
                raise ValueError(f"entry {k} has shape {v.shape}")
            if np.abs(v - v.conj().T).max() > 1e-12:
                raise ValueError(f"entry {k} is not Hermitian")
        super().__init__(d)
        self.table = items

    def matrix(self, coords):
        try:
            return self.table[tuple(coords)]
        except KeyError:
            raise KeyError(f"length table has no entry for {coords}") from None


class FunctionLength(MatrixLengthFunction):
    """Length given by an arbitrary evaluator on coordinates."""

    kind = "table"

    def __init__(self, fn: Callable[[tuple[int, ...]], np.ndarray], dim: int, box: Callable[[float], int] | None = None):
        super().__init__(dim)
        self.fn = fn
        self._box = box

    def matrix(self, coords):
        return np.asarray(self.fn(tuple(coords)), dtype=complex)

    def search_box(self, radius):
        return self._box(radius) if self._box else None


def rotated_frame_length() -> FunctionLength:
    """||z|| R diag(1, 2) R^T on Z^2 with R the rotation by the polar angle of z.

    Proper and translation bounded, but the eigenbasis turns with the
    direction of z, so l(g) and |l(h)| do not commute.
    """

    def fn(c):
        r = math.hypot(c[0], c[1])
        if r == 0:
            return np.zeros((2, 2))
        phi = math.atan2(c[1], c[0])
        R = np.array([[math.cos(phi), -math.sin(phi)], [math.sin(phi), math.cos(phi)]])
        return r * R @ np.diag([1.0, 2.0]) @ R.T

    return FunctionLength(fn, 2, lambda rad: int(math.floor(rad)))


# operators and diagnostics


def m_ell_matrix(length: MatrixLengthFunction, ball: Sequence[GroupElement], sparse: bool = False):
    """Block-diagonal M_l on l^2(ball) (x) V, ball index major."""
    coords = np.array([g.coords for g in ball]).reshape(len(ball), -1)
    blocks = length.matrices_batch(coords)
    if sparse:
        return sp.block_diag(list(blocks), format="csr")
    d = length.dim
    out = np.zeros((len(ball) * d, len(ball) * d), dtype=complex)
    for i, b in enumerate(blocks):
        out[i * d:(i + 1) * d, i * d:(i + 1) * d] = b
    return out


@dataclass(frozen=True)
class SweepReport:
    radii: tuple[float, ...]
    values: tuple[float, ...]
    plateau: bool


def _plateau(values: Sequence[float], rel: float = 0.01) -> bool:
    if len(values) < 2:
        return True
    a, b = values[-2], values[-1]
    return abs(b - a) <= rel * max(abs(a), abs(b), 1e-300)


def translation_bounded_sweep(length: MatrixLengthFunction, group: AbelianGroup, y, radii: Sequence[float]) -> SweepReport:
    """sup over B_R of ||l(x) - l(x - y)|| for each radius R."""
    yc = np.array(_coords(y))
    big = enumerate_ball(group, length, max(radii))
    coords = np.array([g.coords for g in big]).reshape(len(big), -1)
    radius_of = length.min_abs_batch(coords)
    shifted = coords - yc
    if group.is_finite:
        shifted = np.array([group.reduce(r) for r in shifted]).reshape(coords.shape)
    diff = length.matrices_batch(coords) - length.matrices_batch(shifted)
    norms = np.linalg.norm(diff, ord=2, axis=(1, 2))
    values = [float(norms[radius_of <= R].max(initial=0.0)) for R in radii]
    return SweepReport(tuple(radii), tuple(values), _plateau(values))


@dataclass(frozen=True)
class PropernessReport:
    zero_violations: tuple[tuple[int, ...], ...]
    clustered_pairs: int
    min_relative_gap: float
    max_fiber: int
    distinct_values: int

    @property
    def ok(self) -> bool:
        return not self.zero_violations and self.clustered_pairs == 0


def properness_check(length: MatrixLengthFunction, ball: Sequence[GroupElement], gap: float = 1e-6, zero_tol: float = 1e-12) -> PropernessReport:
    coords = np.array([g.coords for g in ball]).reshape(len(ball), -1)
    mats = length.matrices_batch(coords)
    norms = np.linalg.norm(mats, ord=2, axis=(1, 2))
    zero = []
    for g, nv in zip(ball, norms):
        if g.is_identity() != (nv <= zero_tol):
            zero.append(g.coords)
    spectra = np.linalg.eigvalsh(mats)
    vals = np.sort(spectra.ravel())
    scale = max(1.0, float(np.abs(vals).max(initial=0.0)))
    d = np.diff(vals)
    exact = d <= 1e-12 * scale
    close = (d > 1e-12 * scale) & (d < gap * scale)
    nontrivial = d[~exact]
    # fiber: group elements sharing a spectral value
    reps = vals[np.concatenate([[True], ~exact])]
    fiber = 0
    if reps.size:
        idx = np.clip(np.searchsorted(reps, spectra.ravel() - 1e-12 * scale), 0, reps.size - 1)
        per_elem = idx.reshape(spectra.shape)
        counts: dict[int, int] = {}
        for row in per_elem:
            for v in set(row.tolist()):
                counts[v] = counts.get(v, 0) + 1
        fiber = max(counts.values())
    return PropernessReport(
        tuple(zero),
        int(close.sum()),
        float(nontrivial.min() / scale) if nontrivial.size else math.inf,
        int(fiber),
        int(reps.size),
    )


@dataclass(frozen=True)
class GrowthReport:
    radii: tuple[float, ...]
    counts: tuple[int, ...]
    slope: float
    window: tuple[float, float]
    residual: float
    flags: tuple[str, ...] = ()


def ball_profile(length: MatrixLengthFunction, group: AbelianGroup, radius: float) -> np.ndarray:
    """Ascending singular values s_k(g) for every g in B_radius, shape (N, dim)."""
    ball = enumerate_ball(group, length, radius)
    coords = np.array([g.coords for g in ball]).reshape(len(ball), -1)
    return length.singular_batch(coords)


def growth_estimate(length: MatrixLengthFunction, group: AbelianGroup, radii: Sequence[float]) -> GrowthReport:
    """Tail least-squares slope of log #B_n against log n (top half of radii)."""
    radii = [float(r) for r in radii]
    if len(radii) < 4 or any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("need at least 4 increasing radii")
    mins = np.sort(ball_profile(length, group, radii[-1])[:, 0])
    counts = [int(np.searchsorted(mins, r, side="right")) for r in radii]
    tail = slice(len(radii) // 2, len(radii))
    window = (radii[tail][0], radii[-1])
    if counts[0] == counts[-1]:
        return GrowthReport(tuple(radii), tuple(counts), 0.0, window, 0.0, ("finite",))
    slope, _, res = tail_fit(np.log(radii[tail]), np.log(np.array(counts[tail], dtype=float)))
    return GrowthReport(tuple(radii), tuple(counts), slope, window, res)


@dataclass(frozen=True)
class SandwichReport:
    radii: tuple[int, ...]
    ball_counts: tuple[int, ...]
    sigma_counts: tuple[int, ...]
    holds: bool


def sigma_ball_sandwich(length: MatrixLengthFunction, group: AbelianGroup, radii: Sequence[int]) -> SandwichReport:
    """Check #Sigma_n <= #B_n dim V and #B_n <= #Sigma_{n+1} for integer radii.

    Sigma_n = {(g, k) : s_k(g) < n}.
    """
    prof = ball_profile(length, group, max(radii) + 1)
    mins = prof[:, 0]
    flat = prof.ravel()
    b = [int(np.sum(mins <= n)) for n in radii]
    s = [int(np.sum(flat < n)) for n in radii]
    s_next = [int(np.sum(flat < n + 1)) for n in radii]
    holds = all(si <= bi * length.dim and bi <= sn for bi, si, sn in zip(b, s, s_next))
    return SandwichReport(tuple(radii), tuple(b), tuple(s), holds)
