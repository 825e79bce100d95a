"""Regularity diagnostics: delta = [|D|, .], commutator sweeps, Sobolev order probes, GDO words.

Everything here is evidence read off finite sections.  Closed forms are
asserted exactly where the structure makes them exact (block-diagonal |D|);
elsewhere reports carry the truncation ladder and the ratios along it.

|D| at a truncation is the absolute value of the compressed operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .groups import AbelianGroup, GroupElement, enumerate_ball
from .length import MatrixLengthFunction, matrix_abs
from .triple import TruncatedTriple

KMAX_CAP = 3


# |D| and the derivation


@dataclass(frozen=True)
class AbsFactor:
    """|D| = Q diag(values) Q^*; ``basis`` is None when |D| is already diagonal."""

    values: np.ndarray
    basis: np.ndarray | None = None

    @classmethod
    def from_dirac(cls, D: np.ndarray) -> "AbsFactor":
        w, Q = np.linalg.eigh(D)
        return cls(np.abs(w), Q)

    @classmethod
    def from_blocks(cls, blocks: Sequence[np.ndarray]) -> "AbsFactor":
        """From the diagonal blocks of a block-diagonal D."""
        absb = [matrix_abs(np.asarray(b, dtype=complex)) for b in blocks]
        if all(not np.any(a - np.diag(np.diag(a))) for a in absb):
            return cls(np.concatenate([np.diag(a).real for a in absb]))
        n = sum(a.shape[0] for a in absb)
        Q = np.zeros((n, n), dtype=complex)
        vals, i = [], 0
        for a in absb:
            w, q = np.linalg.eigh(a)
            d = a.shape[0]
            Q[i:i + d, i:i + d] = q
            vals.append(w)
            i += d
        return cls(np.concatenate(vals), Q)

    @property
    def matrix(self) -> np.ndarray:
        if self.basis is None:
            return np.diag(self.values).astype(complex)
        return (self.basis * self.values) @ self.basis.conj().T


def group_abs_factor(triple: TruncatedTriple) -> AbsFactor:
    """|M_l| assembled blockwise from |l(h)| over the ball of a group triple."""
    length: MatrixLengthFunction = triple.meta["length"]
    return AbsFactor.from_blocks([length(g) for g in triple.meta["ball"]])


def delta_k(T: np.ndarray, factor: AbsFactor, k: int) -> np.ndarray:
    """k-fold commutator [|D|, [|D|, ..., T]] in the eigenbasis of |D|.

    In that basis the entry (p, q) is multiplied by (e_p - e_q) once per order.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    e = factor.values
    diff = e[:, None] - e[None, :]
    out = np.asarray(T, dtype=complex)
    if factor.basis is not None:
        out = factor.basis.conj().T @ out @ factor.basis
    for _ in range(k):
        out = diff * out
    if factor.basis is not None:
        out = factor.basis @ out @ factor.basis.conj().T
    return out


def abs_discrepancy(triple: TruncatedTriple) -> float:
    """max |(|D| from eigh of D) - (|D| assembled blockwise)| on a group triple."""
    return float(np.abs(AbsFactor.from_dirac(triple.dirac).matrix - group_abs_factor(triple).matrix).max())


# Lipschitz estimate for the absolute value


@dataclass(frozen=True)
class LipschitzReport:
    dim: int
    trials: int
    max_ratio: float
    per_log_dim: float | None
    seed: int

    @property
    def contractive(self) -> bool:
        return self.max_ratio <= 1.0


def _random_hermitian(rng: np.random.Generator, n: int) -> np.ndarray:
    X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (X + X.conj().T) / 2


def lipschitz_abs_check(dim: int, trials: int = 10_000, seed: int = 0) -> LipschitzReport:
    """max || |S| - |T| || / ||S - T|| over random Hermitian pairs.

    Half of the pairs are independent Gaussian matrices; the other half are
    nearby pairs T = S + eps E with eps log-uniform in [1e-3, 1], where the
    non-contractivity of the absolute value shows up.  Pairs with S = T are
    skipped.
    """
    if dim < 1:
        raise ValueError("dim must be at least 1")
    rng = np.random.default_rng(seed)
    best = 0.0
    for i in range(trials):
        S = _random_hermitian(rng, dim)
        if i % 2:
            T = S + 10 ** rng.uniform(-3, 0) * _random_hermitian(rng, dim)
        else:
            T = _random_hermitian(rng, dim)
        den = np.linalg.norm(S - T, 2)
        if den == 0:
            continue
        if dim == 1:
            num = abs(abs(S[0, 0].real) - abs(T[0, 0].real))
        else:
            num = np.linalg.norm(matrix_abs(S) - matrix_abs(T), 2)
        best = max(best, float(num / den))
    return LipschitzReport(dim, trials, best, best / math.log(dim) if dim >= 2 else None, seed)


# the commutation condition on a length function


@dataclass(frozen=True)
class TechReport:
    max_commutator: float
    worst: tuple | None
    pairs: int

    @property
    def holds(self) -> bool:
        return self.max_commutator <= 1e-12


def tech_condition_check(length: MatrixLengthFunction, ball: Sequence[GroupElement]) -> TechReport:
    """max over pairs of ||[l(g), |l(h)|]||."""
    ball = list(ball)
    coords = np.array([g.coords for g in ball]).reshape(len(ball), -1)
    L = length.matrices_batch(coords)
    A = np.array([matrix_abs(m) for m in L])
    best, worst = 0.0, None
    for i, Lg in enumerate(L):
        C = Lg[None] @ A - A @ Lg[None]
        norms = np.linalg.norm(C, 2, axis=(1, 2)) if length.dim > 1 else np.abs(C[:, 0, 0])
        j = int(np.argmax(norms))
        if norms[j] > best:
            best, worst = float(norms[j]), (ball[i].coords, ball[j].coords)
    return TechReport(best, worst, len(ball) ** 2)


# sweeps over group triples


def _block_recursion(length: MatrixLengthFunction, group: AbelianGroup, g: GroupElement, radius: float, k_max: int):
    """Blocks of delta^k(lambda_g) and delta^k([M_l, lambda_g]) over the ball, k = 0..k_max.

    lambda_g and [M_l, lambda_g] are block monomial (block (g+h, h)), so
    delta^k keeps that shape with blocks X_k = A X_{k-1} - X_{k-1} B,
    A = |l(g+h)|, B = |l(h)|.  Norms of block-monomial operators are the
    largest block norms.
    """
    ball = enumerate_ball(group, length, radius)
    index = set(ball)
    pairs = [(g + h, h) for h in ball if (g + h) in index]
    if not pairs:
        return [], []
    top = np.array([p[0].coords for p in pairs]).reshape(len(pairs), -1)
    bot = np.array([p[1].coords for p in pairs]).reshape(len(pairs), -1)
    Lt, Lb = length.matrices_batch(top), length.matrices_batch(bot)
    At = np.array([matrix_abs(m) for m in Lt])
    Ab = np.array([matrix_abs(m) for m in Lb])
    X = np.broadcast_to(np.eye(length.dim, dtype=complex), Lt.shape).copy()
    Y = Lt - Lb
    lam, com = [X], [Y]
    for _ in range(k_max):
        X = At @ X - X @ Ab
        Y = At @ Y - Y @ Ab
        lam.append(X)
        com.append(Y)
    return lam, com


def _sup(blocks: np.ndarray) -> float:
    if len(blocks) == 0:
        return 0.0
    return float(np.linalg.norm(blocks, 2, axis=(1, 2)).max())


@dataclass(frozen=True)
class SweepRow:
    generator: tuple[int, ...]
    k: int
    radius: float
    lam: float
    commutator: float


@dataclass
class RegularitySweep:
    radii: tuple[float, ...]
    k_max: int
    rows: list[SweepRow]
    tech: TechReport
    flags: tuple[str, ...] = ()

    def series(self, generator: tuple[int, ...], k: int, which: str = "lam") -> list[float]:
        return [getattr(r, which) for r in self.rows if r.generator == generator and r.k == k]

    def ratio(self, generator: tuple[int, ...], k: int, which: str = "lam") -> float:
        """Value at the largest radius over the value at the smallest one."""
        s = self.series(generator, k, which)
        return s[-1] / s[0] if s[0] > 0 else (1.0 if s[-1] == 0 else math.inf)

    def max_ratio(self, k_min: int = 1) -> float:
        gens = sorted({r.generator for r in self.rows})
        return max(self.ratio(g, k, w) for g in gens for k in range(k_min, self.k_max + 1) for w in ("lam", "commutator"))

    def plateau(self, tol: float = 1.05) -> bool:
        return self.max_ratio() < tol


def group_regularity_sweep(
    length: MatrixLengthFunction,
    group: AbelianGroup,
    generators: Sequence[GroupElement],
    k_max: int,
    radii: Sequence[float],
) -> RegularitySweep:
    """sup norms of delta^k(lambda_g) and delta^k([M_l, lambda_g]) for k = 1..k_max along a radius ladder."""
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    radii = tuple(float(r) for r in radii)
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must increase")
    tech = tech_condition_check(length, enumerate_ball(group, length, min(radii[0], 12)))
    rows = []
    for g in generators:
        for R in radii:
            lam, com = _block_recursion(length, group, g, R, k_max)
            for k in range(1, k_max + 1):
                rows.append(SweepRow(g.coords, k, R, _sup(lam[k]) if lam else 0.0, _sup(com[k]) if com else 0.0))
    flags = () if tech.holds else ("no boundedness guarantee",)
    return RegularitySweep(radii, k_max, rows, tech, flags)


def closed_form_commutator(triple: TruncatedTriple, g: GroupElement, k: int) -> np.ndarray:
    """The block matrix with blocks (|l(g+h)| - |l(h)|)^k (l(g+h) - l(h)) at (g+h, h).

    The power is applied one factor at a time to the right-hand block, as
    the operator composition it denotes.
    """
    ball = triple.meta["ball"]
    length: MatrixLengthFunction = triple.meta["length"]
    d = length.dim
    out = np.zeros((triple.dim, triple.dim), dtype=complex)
    for j, h in enumerate(ball):
        i = ball.index.get(g + h)
        if i is None:
            continue
        Lt, Lb = length(g + h), length(h)
        step = length.abs_matrix(g + h) - length.abs_matrix(h)
        X = Lt - Lb
        for _ in range(k):
            X = step @ X
        out[i * d:(i + 1) * d, j * d:(j + 1) * d] = X
    return out


def closed_form_check(triple: TruncatedTriple, generators: Sequence[GroupElement], k_max: int) -> dict:
    """delta_k([M_l, lambda_g]) against the closed form: exact equality and max deviation."""
    factor = group_abs_factor(triple)
    out = {"exact": True, "max_deviation": 0.0}
    for g in generators:
        C = triple.commutator(g)
        for k in range(1, k_max + 1):
            a, b = delta_k(C, factor, k), closed_form_commutator(triple, g, k)
            out["exact"] = out["exact"] and bool(np.array_equal(a, b))
            out["max_deviation"] = max(out["max_deviation"], float(np.abs(a - b).max()))
    return out


# Sobolev order probes


@dataclass(frozen=True)
class DeltaFactor:
    """Delta = 1 + D^2 = Q diag(values) Q^*, values >= 1."""

    values: np.ndarray
    basis: np.ndarray

    @classmethod
    def from_dirac(cls, D: np.ndarray) -> "DeltaFactor":
        w, Q = np.linalg.eigh(D)
        return cls(1.0 + w ** 2, Q)

    def power(self, s: float) -> np.ndarray:
        return (self.basis * self.values ** s) @ self.basis.conj().T

    def matrix(self) -> np.ndarray:
        return self.power(1.0)


@dataclass
class OrderProbe:
    t: float
    s_grid: tuple[float, ...]
    norms: tuple[float, ...]
    dim: int

    @property
    def max_norm(self) -> float:
        return max(self.norms)


def sobolev_order_probe(P: np.ndarray, delta: DeltaFactor, t: float, s_grid: Sequence[float] = (-2, -1, 0, 1, 2)) -> OrderProbe:
    """||Delta^{s/2} P Delta^{-(s+t)/2}|| for each s, computed in the eigenbasis of Delta."""
    Q = delta.basis
    Pq = Q.conj().T @ np.asarray(P, dtype=complex) @ Q
    w = delta.values
    norms = []
    for s in s_grid:
        M = (w[:, None] ** (s / 2)) * Pq * (w[None, :] ** (-(s + t) / 2))
        norms.append(float(np.linalg.norm(M, 2)))
    return OrderProbe(float(t), tuple(float(s) for s in s_grid), tuple(norms), P.shape[0])


@dataclass(frozen=True)
class LadderEvidence:
    """Max probe norm per truncation and the log-log slope along the ladder."""

    sizes: tuple[float, ...]
    values: tuple[float, ...]
    slope: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.slope <= self.threshold


def ladder_evidence(sizes: Sequence[float], values: Sequence[float], threshold: float = 0.25) -> LadderEvidence:
    """Bounded operators give flat max norms; an order violation grows like a power of the size."""
    x, y = np.log(np.asarray(sizes, float)), np.asarray(values, float)
    if np.any(y <= 0):
        slope = 0.0 if np.all(y <= 1e-12) else math.inf
    else:
        slope = float(np.polyfit(x, np.log(y), 1)[0])
    return LadderEvidence(tuple(map(float, sizes)), tuple(map(float, values)), slope, threshold)


# GDO words


@dataclass(frozen=True)
class GdoWord:
    """Formal word: ("pi", i), ("dpi", i), ("ad", w) for [Delta, w], ("mul", u, v)."""

    op: str
    args: tuple
    degree: int

    def structural_degree(self) -> int:
        if self.op in ("pi", "dpi"):
            return 0
        if self.op == "ad":
            return self.args[0].structural_degree() + 1
        return self.args[0].structural_degree() + self.args[1].structural_degree()

    def __str__(self) -> str:
        if self.op == "pi":
            return f"a{self.args[0]}"
        if self.op == "dpi":
            return f"[D,a{self.args[0]}]"
        if self.op == "ad":
            return f"[L,{self.args[0]}]"
        return f"{self.args[0]}*{self.args[1]}"


def _mul(u: GdoWord, v: GdoWord) -> GdoWord:
    return GdoWord("mul", (u, v), u.degree + v.degree)


def _ad(w: GdoWord) -> GdoWord:
    return GdoWord("ad", (w,), w.degree + 1)


def gdo_generate(n_generators: int, k_max: int, limit: int = 64) -> dict[int, list[GdoWord]]:
    """New words of each degree 0..k_max, following the filtration recursion.

    Degree 0: the letters pi(a_i), [D, pi(a_i)] and their pairwise products.
    Degree k: [Delta, w] and x [Delta, w] for new degree-(k-1) words w and
    letters x, plus products of new words of degrees j and k-j.  Each degree
    keeps at most ``limit`` words, in a fixed order.
    """
    if k_max > KMAX_CAP:
        raise ValueError(f"k_max is capped at {KMAX_CAP}")
    if k_max < 0 or n_generators < 1:
        raise ValueError("need k_max >= 0 and at least one generator")
    letters = [GdoWord("pi", (i,), 0) for i in range(n_generators)] + [GdoWord("dpi", (i,), 0) for i in range(n_generators)]
    seen: set[GdoWord] = set()

    def keep(words):
        out = []
        for w in words:
            if w not in seen:
                seen.add(w)
                out.append(w)
            if len(out) == limit:
                break
        return out

    levels = {0: keep(letters + [_mul(u, v) for u in letters for v in letters])}
    for k in range(1, k_max + 1):
        prev = levels[k - 1]
        cand = [_ad(w) for w in prev] + [_mul(x, _ad(w)) for w in prev for x in letters]
        for j in range(1, k):
            cand += [_mul(u, v) for u in levels[j] for v in levels[k - j]]
        levels[k] = keep(cand)
    return levels


def degree_audit(levels: dict[int, list[GdoWord]]) -> bool:
    return all(w.degree == k == w.structural_degree() for k, ws in levels.items() for w in ws)


class GdoEvaluator:
    """Materializes words at a truncation; sub-words are memoized by structure."""

    def __init__(self, D: np.ndarray, generators: Sequence[np.ndarray]):
        self.D = np.asarray(D, dtype=complex)
        self.Delta = np.eye(self.D.shape[0]) + self.D @ self.D
        self.generators = [np.asarray(a, dtype=complex) for a in generators]
        self._cache: dict[GdoWord, np.ndarray] = {}

    def __call__(self, w: GdoWord) -> np.ndarray:
        if w in self._cache:
            return self._cache[w]
        if w.op == "pi":
            out = self.generators[w.args[0]]
        elif w.op == "dpi":
            a = self.generators[w.args[0]]
            out = self.D @ a - a @ self.D
        elif w.op == "ad":
            x = self(w.args[0])
            out = self.Delta @ x - x @ self.Delta
        else:
            out = self(w.args[0]) @ self(w.args[1])
        self._cache[w] = out
        return out


def gdo_order_probes(D: np.ndarray, generators: Sequence[np.ndarray], k_max: int, s_grid: Sequence[float] = (-1, 0, 1), limit: int = 16) -> list[tuple[GdoWord, OrderProbe]]:
    """Probe every generated word of degree k as an operator of order k."""
    ev = GdoEvaluator(D, generators)
    delta = DeltaFactor.from_dirac(ev.D)
    levels = gdo_generate(len(generators), k_max, limit)
    return [(w, sobolev_order_probe(ev(w), delta, k, s_grid)) for k, ws in levels.items() for w in ws]


# group actions


@dataclass
class ActionCheck:
    name: str
    evidence: LadderEvidence


@dataclass
class ActionOrderReport:
    checks: list[ActionCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.evidence.passed for c in self.checks)

    def failures(self) -> list[str]:
        return [c.name for c in self.checks if not c.evidence.passed]


ActionModel = tuple[float, np.ndarray, dict[str, np.ndarray]]


def group_action_order_check(ladder: Sequence[ActionModel], k_max: int = 2, s_grid: Sequence[float] = (-1, 0, 1), threshold: float = 0.25) -> ActionOrderReport:
    """Order evidence for U_g (order 0), [D, U_g] (order 0) and ad_Delta^k(U_g) (order k).

    ``ladder`` lists (size, D, {name: U}) at increasing truncations; each
    probe's max norm over the s-grid must stay flat along the ladder.
    """
    if k_max > KMAX_CAP:
        raise ValueError(f"k_max is capped at {KMAX_CAP}")
    names = sorted(ladder[0][2])
    series: dict[str, list[float]] = {}
    for size, D, Us in ladder:
        delta = DeltaFactor.from_dirac(D)
        Delta = delta.matrix()
        for n in names:
            U = np.asarray(Us[n], dtype=complex)
            series.setdefault(n, []).append(sobolev_order_probe(U, delta, 0, s_grid).max_norm)
            series.setdefault(f"[D,{n}]", []).append(sobolev_order_probe(D @ U - U @ D, delta, 0, s_grid).max_norm)
            X = U
            for k in range(1, k_max + 1):
                X = Delta @ X - X @ Delta
                series.setdefault(f"ad^{k}({n})", []).append(sobolev_order_probe(X, delta, k, s_grid).max_norm)
    sizes = [m[0] for m in ladder]
    return ActionOrderReport([ActionCheck(name, ladder_evidence(sizes, vals, threshold)) for name, vals in series.items()])


def identity_ladder(sizes: Sequence[int]) -> list[ActionModel]:
    """D = diag(0..n-1) with U = Id."""
    return [(float(n), np.diag(np.arange(n, dtype=float)).astype(complex), {"id": np.eye(n, dtype=complex)}) for n in sizes]


def dilation_ladder(sizes: Sequence[int]) -> list[ActionModel]:
    """D = diag(1..n) with the dilation e_m -> e_{2m} (dropped past the truncation).

    [D, U] sends e_m to m e_{2m}, so its norm grows with the truncation.
    """
    out = []
    for n in sizes:
        U = np.zeros((n, n), dtype=complex)
        for m in range(1, n + 1):
            if 2 * m <= n:
                U[2 * m - 1, m - 1] = 1
        out.append((float(n), np.diag(np.arange(1, n + 1, dtype=float)).astype(complex), {"dilation": U}))
    return out


def rotated_commutator_growth(length: MatrixLengthFunction, group: AbelianGroup, g: GroupElement, radii: Sequence[float], k: int = 2) -> list[float]:
    """sup ||delta^k(lambda_g)|| along the ladder (used for lengths failing the commutation condition)."""
    return [_sup(_block_recursion(length, group, g, R, k)[0][k]) for R in radii]


def torus_action_ladder(config, cutoffs: Sequence[int], coefficients: bool = False) -> list[ActionModel]:
    """(D_B, U(k) = pi_B(W_{s(k)})) on the truncated GNS space of the torus.

    With ``coefficients`` the generators pi_B(W_{M^T e_i}) of A are probed too.
    """
    from .torus import GNSBox, TorusElement, _doubled, _even_dirac, box_modes

    out = []
    for R in cutoffs:
        box = GNSBox(config.theta, box_modes(R))
        D, _ = _even_dirac(box)
        ops = {f"U{k.coords}": _doubled(box.left(TorusElement.w(config.s(k)))) for k in config.dual.elements() if not k.is_identity()}
        if coefficients:
            for e in ((1, 0), (0, 1)):
                ops[f"a{e}"] = _doubled(box.left(TorusElement.w(config.MT(e))))
        out.append((float(R), D, ops))
    return out
