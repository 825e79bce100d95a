"""The quantum 2-torus and its finite coverings Z^2 / M Z^2.

B is spanned by unitaries W_x (x in Z^2) with

    W_x W_y = s(x, y) W_{x+y},   s(x, y) = exp(i pi theta (x2 y1 - x1 y2)),
    W_x^* = W_{-x}.

G = Z^2 / M Z^2 acts by gamma_t(W_x) = exp(2 pi i <M^{-1} t, x>) W_x; the
fixed algebra A is spanned by W_{M^T n}.  The frame mu_k = W_{s(k)} uses the
section s(k) = M^T zeta(k) with zeta(k) in [0, 1)^2.

Elements are finitely supported and multiplied exactly up to floating
phases.  The GNS space of the trace is truncated to modes with
||r||_inf <= R; a padded box is used whenever an identity involves a chain
of shifts, and comparisons are then made on the inner box.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .algebra import Ball, CovariantPair, TwistedElement, verify_covariant
from .coefficients import CoefficientAlgebra
from .coverings import PhiReport, crossed_iso_phi
from .exact import Phase
from .groups import FiniteAbelianGroup, GroupElement, quotient_group, section_s, zeta
from .length import FunctionLength
from .triple import (
    TruncatedTriple,
    TruncationSpec,
    build_even_to_odd,
    equivariant_build,
    intertwining_check,
)
from .twist import Frame, TwistingPair, frame_to_pair

DEFAULT_THETA = math.sqrt(2) - 1

Vec = tuple[int, int]


def _skew(x: Sequence[int], y: Sequence[int]) -> int:
    """x2 y1 - x1 y2, so that s(x, y) = exp(i pi theta * _skew(x, y))."""
    return x[1] * y[0] - x[0] * y[1]


def sigma_theta(theta: float, x: Sequence[int], y: Sequence[int]) -> complex:
    return Phase(Fraction(0), _skew(x, y)).value(theta)


def w_product(theta: float, x: Sequence[int], y: Sequence[int]) -> tuple[complex, Vec]:
    """W_x W_y = phase W_{x+y}."""
    return sigma_theta(theta, x, y), (x[0] + y[0], x[1] + y[1])


@dataclass(frozen=True)
class TorusConfig:
    theta: float = DEFAULT_THETA
    M: tuple[tuple[int, int], tuple[int, int]] = ((2, 0), (0, 2))
    cutoff: int = 3

    def __post_init__(self):
        M = tuple(tuple(int(v) for v in row) for row in self.M)
        object.__setattr__(self, "M", M)
        det = M[0][0] * M[1][1] - M[0][1] * M[1][0]
        if abs(det) <= 1:
            raise ValueError("|det M| must exceed 1")
        if self.cutoff < 1:
            raise ValueError("cutoff must be at least 1")
        q = Fraction(self.theta).limit_denominator(10_000)
        if abs(float(q) - self.theta) < 1e-14:
            warnings.warn(f"theta = {q} is rational; finite-truncation formulas are unaffected", stacklevel=2)

    @property
    def group(self) -> FiniteAbelianGroup:
        return quotient_group(self.M)

    @property
    def dual(self) -> FiniteAbelianGroup:
        return self.group.dual()

    @property
    def det(self) -> int:
        M = self.M
        return M[0][0] * M[1][1] - M[0][1] * M[1][0]

    def MT(self, x: Sequence[int]) -> Vec:
        """M^T x."""
        M = self.M
        return (M[0][0] * x[0] + M[1][0] * x[1], M[0][1] * x[0] + M[1][1] * x[1])

    def Mhat(self, v: Sequence[int]) -> tuple[Fraction, Fraction]:
        """(M^{-1})^T v, exactly."""
        M, d = self.M, self.det
        # M^{-T} = (1/d) [[M11, -M10], [-M01, M00]]
        return (Fraction(M[1][1] * v[0] - M[1][0] * v[1], d), Fraction(-M[0][1] * v[0] + M[0][0] * v[1], d))

    def in_lattice(self, r: Sequence[int]) -> bool:
        """r in M^T Z^2."""
        return all(c.denominator == 1 for c in self.Mhat(r))

    def s(self, k: GroupElement) -> Vec:
        return section_s(k)


# elements and the coefficient algebra


class TorusElement:
    """Finite sum of alpha_r W_r."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict[Vec, complex] | None = None):
        self.terms = {tuple(int(c) for c in r): complex(a) for r, a in (terms or {}).items() if a != 0}

    @classmethod
    def w(cls, r: Sequence[int], coeff: complex = 1.0) -> "TorusElement":
        return cls({tuple(r): coeff})

    @property
    def support(self) -> list[Vec]:
        return sorted(self.terms)

    def __repr__(self) -> str:
        return f"TorusElement({self.terms})"


class TorusAlgebra(CoefficientAlgebra):
    """*-algebra of finite sums of W_r; distances use the l^1 coefficient norm.

    The l^1 norm dominates the C*-norm, so small distances are conclusive.
    """

    def __init__(self, theta: float, test: Sequence[TorusElement] = ()):
        self.theta = theta
        self._test = list(test)

    def one(self):
        return TorusElement.w((0, 0))

    def zero(self):
        return TorusElement()

    def mul(self, a: TorusElement, b: TorusElement) -> TorusElement:
        out: dict[Vec, complex] = {}
        for x, p in a.terms.items():
            for y, q in b.terms.items():
                ph, r = w_product(self.theta, x, y)
                out[r] = out.get(r, 0) + p * q * ph
        return TorusElement(out)

    def add(self, a, b):
        out = dict(a.terms)
        for r, q in b.terms.items():
            out[r] = out.get(r, 0) + q
        return TorusElement(out)

    def scale(self, c, a):
        return TorusElement({r: complex(c) * q for r, q in a.terms.items()})

    def adjoint(self, a):
        return TorusElement({(-r[0], -r[1]): np.conj(q) for r, q in a.terms.items()})

    def norm(self, a) -> float:
        return float(sum(abs(q) for q in a.terms.values()))

    def distance(self, a, b) -> float:
        return self.norm(self.sub(a, b))

    def is_zero(self, a, tol: float = 0.0) -> bool:
        return self.norm(a) <= tol

    def test_elements(self):
        return list(self._test) or [self.one()]

    def random(self, rng: np.random.Generator, support: Sequence[Vec] = ((0, 0),)) -> TorusElement:
        c = rng.normal(size=len(support)) + 1j * rng.normal(size=len(support))
        return TorusElement(dict(zip(map(tuple, support), c)))


def trace_tau(elem: TorusElement) -> complex:
    return elem.terms.get((0, 0), 0j)


def gamma_action(config: TorusConfig, g: GroupElement, elem: TorusElement) -> TorusElement:
    """gamma_t(W_x) = exp(2 pi i <M^{-1} t, x>) W_x for any lift t of g."""
    t = config.group.lift(g)
    out = {}
    for x, a in elem.terms.items():
        # <M^{-1} t, x> = <t, M^{-T} x>
        mx = config.Mhat(x)
        out[x] = a * Phase(t[0] * mx[0] + t[1] * mx[1]).value()
    return TorusElement(out)


def box_modes(R: int) -> list[Vec]:
    return [(a, b) for a in range(-R, R + 1) for b in range(-R, R + 1)]


def torus_spectral_subspace(config: TorusConfig, k: GroupElement, cutoff: int | None = None) -> list[Vec]:
    """Modes s(k) + M^T n inside the cutoff box."""
    R = config.cutoff if cutoff is None else cutoff
    s = config.s(k)
    return [r for r in box_modes(R) if config.in_lattice((r[0] - s[0], r[1] - s[1]))]


def fixed_modes(config: TorusConfig, R: int | None = None) -> list[Vec]:
    R = config.cutoff if R is None else R
    return [r for r in box_modes(R) if config.in_lattice(r)]


def _inner(u: Sequence, v: Sequence) -> float:
    return u[0] * v[0] + u[1] * v[1]


def _theta_apply(theta: float, v: Sequence[int]) -> tuple[float, float]:
    """Theta v with Theta = [[0, theta], [-theta, 0]]."""
    return (theta * v[1], -theta * v[0])


def nu_and_Y(config: TorusConfig, j: GroupElement, g: GroupElement, x: Sequence[int]) -> tuple[float, Vec]:
    """The phase exponent nu(j, g, x) and the lattice vector Y(j, g).

    Every term of nu is <u, Theta v> = theta (u1 v2 - u2 v1), an integer
    multiple of theta; the integer part is accumulated exactly.
    """
    s = config.s
    a, sj, smg = s(-j - g), s(j), s(-g)
    mx = config.MT(x)
    inner = (mx[0] + sj[0] - smg[0], mx[1] + sj[1] - smg[1])
    diff = (sj[0] - smg[0], sj[1] - smg[1])

    def units(u, v) -> int:
        return u[0] * v[1] - u[1] * v[0]

    nu_units = units(a, inner) + units(mx, diff) - units(sj, smg)
    Yq = config.Mhat((a[0] + sj[0] - smg[0], a[1] + sj[1] - smg[1]))
    if any(c.denominator != 1 for c in Yq):
        raise ArithmeticError(f"Y({j}, {g}) = {Yq} is not integral")
    return config.theta * nu_units, (int(Yq[0]), int(Yq[1]))


def nu_units(config: TorusConfig, j: GroupElement, g: GroupElement, x: Sequence[int]) -> int:
    """nu(j, g, x) / theta as an exact integer."""
    nu, _ = nu_and_Y(config, j, g, x)
    return round(nu / config.theta) if config.theta else 0


# frame and twisting pair


def torus_algebra(config: TorusConfig) -> TorusAlgebra:
    test = [TorusElement.w((0, 0)), TorusElement.w(config.MT((1, 0))), TorusElement.w(config.MT((0, 1)))]
    return TorusAlgebra(config.theta, test)


def spectral_projector(config: TorusConfig):
    def proj(k: GroupElement, b: TorusElement) -> TorusElement:
        s = config.s(k)
        return TorusElement({r: a for r, a in b.terms.items() if config.in_lattice((r[0] - s[0], r[1] - s[1]))})

    return proj


def torus_frame(config: TorusConfig) -> Frame:
    """mu_k = W_{s(k)}."""
    D = config.dual
    units = {k.coords: TorusElement.w(config.s(k)) for k in D.elements()}
    return Frame(D, torus_algebra(config), units, projector=spectral_projector(config))


def torus_pair(config: TorusConfig) -> TwistingPair:
    """The frame-induced pair rho_k = Ad(W_{s(k)}), sigma_{j,k} = W_{s(j)} W_{s(k)} W_{-s(j+k)}."""
    return frame_to_pair(torus_frame(config))


def torus_length(config: TorusConfig) -> FunctionLength:
    """l(k) = eps(zeta(k)) with eps(x) = [[0, x1 - i x2], [x1 + i x2, 0]]."""
    D = config.dual

    def fn(c):
        z = zeta(D.element(c))
        x1, x2 = float(z[0]), float(z[1])
        return np.array([[0, x1 - 1j * x2], [x1 + 1j * x2, 0]])

    return FunctionLength(fn, 2)


# truncated GNS spaces


class GNSBox:
    """Truncated L^2 of the trace with orthonormal basis W_r, r in ``modes``."""

    def __init__(self, theta: float, modes: Iterable[Vec]):
        self.theta = theta
        self.modes = list(modes)
        self.index = {r: i for i, r in enumerate(self.modes)}

    def __len__(self) -> int:
        return len(self.modes)

    def left(self, elem: TorusElement) -> sp.csr_matrix:
        """Compression of left multiplication by ``elem``."""
        rows, cols, vals = [], [], []
        for x, a in elem.terms.items():
            for j, m in enumerate(self.modes):
                i = self.index.get((x[0] + m[0], x[1] + m[1]))
                if i is not None:
                    rows.append(i)
                    cols.append(j)
                    vals.append(a * sigma_theta(self.theta, x, m))
        n = len(self.modes)
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, n), dtype=complex)

    def dirac_blocks(self) -> tuple[np.ndarray, np.ndarray]:
        """Mode multipliers of D- = -i delta_1 - delta_2 and D+ = -i delta_1 + delta_2.

        With delta_j(W_r) = 2 pi i r_j W_r these are 2 pi (r1 - i r2) and
        2 pi (r1 + i r2), adjoint to each other.
        """
        r = np.array(self.modes, dtype=float).reshape(-1, 2)
        return 2 * np.pi * (r[:, 0] - 1j * r[:, 1]), 2 * np.pi * (r[:, 0] + 1j * r[:, 1])

    def inner_mask(self, R: int) -> np.ndarray:
        return np.array([max(abs(m[0]), abs(m[1])) <= R for m in self.modes])


def _even_dirac(box: GNSBox) -> tuple[np.ndarray, np.ndarray]:
    dm, dp = box.dirac_blocks()
    n = len(box)
    Z = np.zeros((n, n), dtype=complex)
    D = np.block([[Z, np.diag(dm)], [np.diag(dp), Z]])
    chi = np.diag(np.concatenate([np.ones(n), -np.ones(n)])).astype(complex)
    return D, chi


def _doubled(X) -> np.ndarray:
    X = X.toarray() if sp.issparse(X) else X
    Z = np.zeros_like(X)
    return np.block([[X, Z], [Z, X]])


def build_torus_coefficient_triple(config: TorusConfig, R: int | None = None) -> TruncatedTriple:
    """Even triple on A: H_A = L^2(A) (+) L^2(A) truncated to ||m||_inf <= R."""
    R = config.cutoff if R is None else R
    box = GNSBox(config.theta, fixed_modes(config, R))
    D, chi = _even_dirac(box)
    return TruncatedTriple(
        D,
        lambda a: _doubled(box.left(a)),
        "even",
        chi,
        labels=[(c, m) for c in (0, 1) for m in box.modes],
        trunc=TruncationSpec(R),
        meta={"kind": "torus-A", "box": box},
    )


def build_torus_B_triple(config: TorusConfig, R: int | None = None) -> TruncatedTriple:
    """Even triple on B: H_B = L^2(B) (+) L^2(B) truncated to ||r||_inf <= R."""
    R = config.cutoff if R is None else R
    box = GNSBox(config.theta, box_modes(R))
    D, chi = _even_dirac(box)
    return TruncatedTriple(
        D,
        lambda b: _doubled(box.left(b)),
        "even",
        chi,
        labels=[(c, m) for c in (0, 1) for m in box.modes],
        trunc=TruncationSpec(R),
        meta={"kind": "torus-B", "box": box},
    )


def _dual_ball(config: TorusConfig) -> Ball:
    return Ball(config.dual.elements())


def generic_crossed_triple(config: TorusConfig) -> TruncatedTriple:
    """Generic builder: even coefficient triple on A, frame pair, l = eps(zeta)."""
    coeff = build_torus_coefficient_triple(config)
    return build_even_to_odd(coeff, torus_pair(config), torus_length(config), _dual_ball(config))


def _length_block(config: TorusConfig, ball: Ball) -> np.ndarray:
    L = torus_length(config)
    n = len(ball)
    out = np.zeros((2 * n, 2 * n), dtype=complex)
    for i, g in enumerate(ball):
        out[2 * i:2 * i + 2, 2 * i:2 * i + 2] = L(g)
    return out


def build_torus_crossed_triple(config: TorusConfig) -> TruncatedTriple:
    """The crossed-product triple written out from the explicit formulas.

    Basis (H+ (x) l^2(G^) (x) C^2) (+) (H- (x) l^2(G^) (x) C^2) with
    H+- = L^2(A) truncated.  The element W_{M^T x} d_j acts by

        W_m (x) d_g (x) v  ->  e^{-i pi nu(j,g,x)} s(M^T(x+Y), m) W_{m+M^T(x+Y)} (x) d_{j+g} (x) v

    with Y = Y(j, g), on both summands; D~ has +-1 (x) M_l on the diagonal and
    the Dirac multipliers of A off the diagonal.  ``represent`` accepts a
    :class:`TwistedElement` whose coefficients lie in A (any pair over the
    dual group), or a list of (coefficient, x, j) triples.
    """
    box = GNSBox(config.theta, fixed_modes(config))
    ball = _dual_ball(config)
    n, ng = len(box), len(ball)
    L = _length_block(config, ball)
    dm, dp = box.dirac_blocks()
    I2g = np.eye(2 * ng)
    Dt = np.block([
        [np.kron(np.eye(n), L), np.kron(np.diag(dm), I2g)],
        [np.kron(np.diag(dp), I2g), -np.kron(np.eye(n), L)],
    ])
    theta = config.theta

    def single(terms) -> np.ndarray:
        T = np.zeros((n, ng, n, ng), dtype=complex)
        for coeff, x, j in terms:
            for gi, g in enumerate(ball):
                nu, Y = nu_and_Y(config, j, g, x)
                shift = config.MT((x[0] + Y[0], x[1] + Y[1]))
                ph = coeff * np.exp(-1j * np.pi * nu)
                ti = ball.index[j + g]
                for mi, m in enumerate(box.modes):
                    i = box.index.get((m[0] + shift[0], m[1] + shift[1]))
                    if i is not None:
                        T[i, ti, mi, gi] += ph * sigma_theta(theta, shift, m)
        return np.kron(T.reshape(n * ng, n * ng), np.eye(2))

    def rep(f) -> np.ndarray:
        return _doubled(single(_expand(config, f)))

    return TruncatedTriple(
        Dt,
        rep,
        "odd",
        labels=[(c, m, g.coords, v) for c in "+-" for m in box.modes for g in ball for v in range(2)],
        trunc=TruncationSpec(config.cutoff),
        meta={"kind": "torus-crossed-explicit", "box": box},
    )


def _expand(config: TorusConfig, f) -> list[tuple[complex, Vec, GroupElement]]:
    """(coefficient, x, j) for each W_{M^T x} d_j component."""
    if isinstance(f, TwistedElement):
        out = []
        for j, a in f.terms.items():
            for r, c in a.terms.items():
                q = config.Mhat(r)
                if any(v.denominator != 1 for v in q):
                    raise ValueError(f"coefficient mode {r} is not in A")
                out.append((c, (int(q[0]), int(q[1])), j))
        return out
    return list(f)


def crossed_element(config: TorusConfig, pair: TwistingPair, x: Sequence[int], j: GroupElement, coeff: complex = 1.0) -> TwistedElement:
    """W_{M^T x} d_j as an element over ``pair``."""
    return TwistedElement(pair, {j: TorusElement.w(config.MT(x), coeff)})


@dataclass(frozen=True)
class OracleReport:
    dirac: float
    representation: float
    dim: int
    elements: int

    def ok(self, tol: float = 1e-11) -> bool:
        return max(self.dirac, self.representation) <= tol


def compare_crossed(config: TorusConfig, xs: Sequence[Vec] = ((0, 0), (1, 0), (0, 1), (1, 1), (-1, 2))) -> OracleReport:
    """Entrywise comparison of the explicit and generic crossed-product triples."""
    pair = torus_pair(config)
    explicit = build_torus_crossed_triple(config)
    generic = build_even_to_odd(build_torus_coefficient_triple(config), pair, torus_length(config), _dual_ball(config))
    d = float(np.abs(explicit.dirac - generic.dirac).max())
    r = 0.0
    count = 0
    for j in config.dual.elements():
        for x in xs:
            f = crossed_element(config, pair, x, j, 1.0)
            r = max(r, float(np.abs(explicit.represent(f) - generic.represent(f)).max()))
            count += 1
    return OracleReport(d, r, explicit.dim, count)


# the equivariant construction


COEFFICIENT_SHIFTS: tuple[Vec, ...] = ((0, 0), (1, 0), (0, 1), (1, 1))


def _frame_shift(config: TorusConfig) -> int:
    return max(max(abs(c) for c in config.s(k)) for k in config.dual.elements())


def _coefficient_shift(config: TorusConfig, xs: Sequence[Vec] = COEFFICIENT_SHIFTS) -> int:
    return max(max(abs(c) for c in config.MT(x)) for x in xs)


def default_pad(config: TorusConfig) -> int:
    """Padding that keeps every shift chain of the intertwining checks inside the box.

    The longest chains start on the inner box and pass through eight frame
    shifts, or six frame shifts and two coefficient shifts.
    """
    return 8 * _frame_shift(config) + 2 * _coefficient_shift(config)


def torus_covariant_pair(config: TorusConfig, R: int | None = None, pad: int = 0) -> tuple[CovariantPair, GNSBox]:
    """(pi_B restricted to A, U(k) = pi_B(W_{s(k)})) on H_B, built on the box R + pad.

    The interior mask selects the modes with ||r||_inf <= R in both summands.
    """
    R = config.cutoff if R is None else R
    box = GNSBox(config.theta, box_modes(R + pad))
    mask = np.concatenate([box.inner_mask(R)] * 2)
    cache: dict = {}

    def left2(b: TorusElement):
        key = tuple(sorted(b.terms.items()))
        if key not in cache:
            X = box.left(b)
            cache[key] = sp.block_diag([X, X], format="csr")
        return cache[key]

    U = lambda k: left2(TorusElement.w(config.s(k)))  # noqa: E731
    return CovariantPair(left2, U, 2 * len(box), interior=mask), box


def generic_equivariant_triple(config: TorusConfig, pad: int = 0) -> TruncatedTriple:
    """triple.equivariant_build on the covariant pair (pi_B|_A, U)."""
    R = config.cutoff
    cov, box = torus_covariant_pair(config, R, pad)
    D, chi = _even_dirac(box)
    coeff = TruncatedTriple(D, lambda a: cov.pi(a).toarray(), "even", chi, meta={"box": box})
    return equivariant_build(coeff, cov, torus_pair(config), torus_length(config), _dual_ball(config), check=False)


def build_torus_equivariant_triple(config: TorusConfig, pad: int = 0) -> TruncatedTriple:
    """The equivariant triple written out from the explicit formulas.

    W_{M^T x} d_j sends W_m (x) d_g (x) v to
    exp(-i pi [<M^T x, Theta s(j)> + <M^T x + s(j), Theta m>]) W_{m + M^T x + s(j)} (x) d_{j+g} (x) v
    on both summands, and D~ = [[1 (x) M_l, D- (x) 1], [D+ (x) 1, -1 (x) M_l]]
    with the Dirac multipliers of B.
    """
    R = config.cutoff
    box = GNSBox(config.theta, box_modes(R + pad))
    ball = _dual_ball(config)
    n, ng = len(box), len(ball)
    L = _length_block(config, ball)
    dm, dp = box.dirac_blocks()
    I2g = np.eye(2 * ng)
    Dt = np.block([
        [np.kron(np.eye(n), L), np.kron(np.diag(dm), I2g)],
        [np.kron(np.diag(dp), I2g), -np.kron(np.eye(n), L)],
    ])
    theta = config.theta

    def single(terms) -> np.ndarray:
        T = np.zeros((n, ng, n, ng), dtype=complex)
        for coeff, x, j in terms:
            mx = config.MT(x)
            sj = config.s(j)
            shift = (mx[0] + sj[0], mx[1] + sj[1])
            base = _inner(mx, _theta_apply(theta, sj))
            for gi, g in enumerate(ball):
                ti = ball.index[j + g]
                for mi, m in enumerate(box.modes):
                    i = box.index.get((m[0] + shift[0], m[1] + shift[1]))
                    if i is not None:
                        ph = np.exp(-1j * np.pi * (base + _inner(shift, _theta_apply(theta, m))))
                        T[i, ti, mi, gi] += coeff * ph
        return np.kron(T.reshape(n * ng, n * ng), np.eye(2))

    mask_h = np.concatenate([box.inner_mask(R)] * 2)
    interior = np.repeat(mask_h, 2 * ng)
    return TruncatedTriple(
        Dt,
        lambda f: _doubled(single(_expand(config, f))),
        "odd",
        labels=[(c, m, g.coords, v) for c in "+-" for m in box.modes for g in ball for v in range(2)],
        interior=interior,
        trunc=TruncationSpec(R),
        meta={"kind": "torus-equivariant-explicit", "box": box},
    )


def compare_equivariant(config: TorusConfig, pad: int | None = None, xs: Sequence[Vec] = ((0, 0), (1, 0), (0, 1))) -> OracleReport:
    """Explicit equivariant formulas vs equivariant_build on (pi_B|_A, U).

    The generic representation multiplies compressed operators, so it is
    compared on the inner box of a truncation padded by the largest frame
    shift.
    """
    pad = _frame_shift(config) if pad is None else pad
    pair = torus_pair(config)
    explicit = build_torus_equivariant_triple(config, pad)
    generic = generic_equivariant_triple(config, pad)
    mask = explicit.interior
    d = float(np.abs(explicit.dirac - generic.dirac).max())
    r = 0.0
    count = 0
    for j in config.dual.elements():
        for x in xs:
            f = crossed_element(config, pair, x, j)
            diff = explicit.represent(f) - generic.represent(f)
            r = max(r, float(np.abs(diff[np.ix_(mask, mask)]).max()))
            count += 1
    return OracleReport(d, r, explicit.dim, count)


def torus_intertwining(config: TorusConfig, pad: int | None = None):
    """W-intertwining identities for the torus covariant pair on interior blocks."""
    pad = default_pad(config) if pad is None else pad
    cov, _ = torus_covariant_pair(config, config.cutoff, pad)
    pair = torus_pair(config)
    els = config.dual.elements()
    coeffs = [TorusElement.w(config.MT(x)) for x in COEFFICIENT_SHIFTS]
    return intertwining_check(cov, pair, els, coeffs, els)


def torus_covariance(config: TorusConfig, pad: int | None = None):
    pad = default_pad(config) if pad is None else pad
    cov, _ = torus_covariant_pair(config, config.cutoff, pad)
    return verify_covariant(cov, torus_pair(config), config.dual.elements())


# the isomorphism with B


def torus_phi(config: TorusConfig, window: int = 2, samples: int = 6, seed: int = 0) -> PhiReport:
    """Phi(a_j d_j) = a_j W_{s(j)} on finitely supported elements.

    Products of finite sums are exact, so multiplicativity, the involution
    and equivariance are checked in the algebra itself.  Bijectivity: the map
    (n, j) -> M^T n + s(j) must be a bijection onto Z^2, checked on a box.
    """
    frame = torus_frame(config)
    support = [config.MT((a, b)) for a in range(-window, window + 1) for b in range(-window, window + 1)]
    alg = frame.algebra

    def random_fixed(rng):
        pick = rng.choice(len(support), size=3, replace=False)
        return alg.random(rng, [support[i] for i in pick])

    def bijectivity():
        R = 2 * window + 3
        hits: dict[Vec, int] = {}
        reach = R + max(abs(c) for row in config.M for c in row) * 2
        for n1 in range(-reach, reach + 1):
            for n2 in range(-reach, reach + 1):
                for j in config.dual.elements():
                    s = config.s(j)
                    m = config.MT((n1, n2))
                    r = (m[0] + s[0], m[1] + s[1])
                    if max(abs(r[0]), abs(r[1])) <= R:
                        hits[r] = hits.get(r, 0) + 1
        box = box_modes(R)
        ok = all(hits.get(r, 0) == 1 for r in box) and len(hits) == len(box)
        return ok, len(hits)

    return crossed_iso_phi(
        frame,
        lambda g, b: gamma_action(config, g, b),
        [TorusElement.w(r) for r in support],
        random_fixed,
        samples=samples,
        seed=seed,
        bijectivity=bijectivity,
    )
