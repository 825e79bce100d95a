"""Twisting pairs (rho, sigma) and their verification.

A twisting pair on a coefficient algebra A consists of automorphisms rho_x
and unitaries sigma_{x,y} subject to

    rho_x(sigma_{y,z}) = sigma_{x,y} sigma_{x+y,z} sigma_{x,y+z}^*
    rho_x o rho_y = Ad(sigma_{x,y}) o rho_{x+y}
    sigma_{x,0} = sigma_{0,x} = 1,  rho_0 = id

Groups are abelian and written additively.  Automorphisms are inner: rho_x
is Ad(u_x) for a unitary u_x from an ambient algebra sharing A's operations.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Sequence

import numpy as np

from .coefficients import CoefficientAlgebra, CyclotomicAlgebra, MatrixAlgebra
from .exact import Cyclotomic, Phase
from .groups import AbelianGroup, FiniteAbelianGroup, GroupElement


class PhaseCocycle:
    """Scalar 2-cocycle with a closed-form evaluator.

    ``phase(x, y)`` returns an exact :class:`Phase` when available; calling
    the object returns the complex value.
    """

    def __init__(self, kind: str, params: dict, fn: Callable | None = None, table: dict | None = None):
        self.kind = kind
        self.params = dict(params)
        self._fn = fn
        self._table = table

    @property
    def theta(self) -> float:
        return float(self.params.get("theta", 0.0))

    def phase(self, x: GroupElement, y: GroupElement) -> Phase | None:
        if self._fn is None:
            return None
        return self._fn(x.coords, y.coords)

    def __call__(self, x: GroupElement, y: GroupElement) -> complex:
        if self._table is not None:
            return self._table.get((x.coords, y.coords), 1.0 + 0j)
        return self.phase(x, y).value(self.theta)

    def __repr__(self) -> str:
        return f"PhaseCocycle({self.kind}, {self.params})"


def clifford_cocycle(n: int) -> PhaseCocycle:
    """sigma_n(x, y) = (-1)^(sum_{j<i} x_i y_j) on Z_2^n."""

    def fn(x, y):
        s = sum(x[i] * y[j] for i in range(n) for j in range(i))
        return Phase(Fraction(s % 2, 2))

    return PhaseCocycle("clifford", {"n": n}, fn)


def theta_bicharacter(theta: float) -> PhaseCocycle:
    """exp(i pi theta (x_2 y_1 - x_1 y_2)) on Z^2."""

    def fn(x, y):
        return Phase(0, x[1] * y[0] - x[0] * y[1])

    return PhaseCocycle("theta", {"theta": float(theta)}, fn)


def table_cocycle(table: dict[tuple[tuple[int, ...], tuple[int, ...]], complex]) -> PhaseCocycle:
    """Cocycle from an explicit table; missing entries read as 1."""
    return PhaseCocycle("table", {"entries": len(table)}, table={k: complex(v) for k, v in table.items()})


def load_table_cocycle(path: str) -> PhaseCocycle:
    """Read a table file with lines ``x;y;re;im`` (coordinates comma separated)."""
    table = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(";")
            if len(parts) != 4:
                raise ValueError(f"{path}:{n}: expected x;y;re;im")
            x = tuple(int(c) for c in parts[0].split(","))
            y = tuple(int(c) for c in parts[1].split(","))
            table[(x, y)] = complex(float(parts[2]), float(parts[3]))
    return table_cocycle(table)


def verify_cocycle(cocycle: PhaseCocycle, group: AbelianGroup, triples: Sequence[tuple] | None = None) -> list[tuple]:
    """Exact 2-cocycle identity on phases; returns the violating triples."""
    triples = triples if triples is not None else itertools.product(group.elements(), repeat=3)
    bad = []
    for x, y, z in triples:
        lhs = cocycle.phase(y, z) * cocycle.phase(x, y + z)
        rhs = cocycle.phase(x, y) * cocycle.phase(x + y, z)
        if lhs != rhs:
            bad.append((x, y, z))
    return bad


class TwistingPair:
    """Data (rho, sigma) over a group and a coefficient algebra."""

    def __init__(
        self,
        group: AbelianGroup,
        algebra: CoefficientAlgebra,
        sigma: Callable[[GroupElement, GroupElement], Any],
        rho_unitary: Callable[[GroupElement], Any] | None = None,
        rho: Callable[[GroupElement, Any], Any] | None = None,
        cocycle: PhaseCocycle | None = None,
        name: str = "",
    ):
        self.group = group
        self.algebra = algebra
        self._sigma = sigma
        self.rho_unitary = rho_unitary
        self._rho = rho
        self.cocycle = cocycle
        self.name = name
        self._cache: dict = {}

    @property
    def trivial_rho(self) -> bool:
        return self.rho_unitary is None and self._rho is None

    def sigma(self, x: GroupElement, y: GroupElement):
        key = (x.coords, y.coords)
        val = self._cache.get(key)
        if val is None:
            val = self._sigma(x, y)
            self._cache[key] = val
        return val

    def rho(self, x: GroupElement, a):
        if self._rho is not None:
            return self._rho(x, a)
        if self.rho_unitary is None or x.is_identity():
            return a
        return self.algebra.conjugate(self.rho_unitary(x), a)

    def __repr__(self) -> str:
        return f"TwistingPair({self.name or '?'} on {self.group.name})"


def scalar_pair(group: AbelianGroup, cocycle: PhaseCocycle, exact: bool | None = None, order: int = 4) -> TwistingPair:
    """Trivial rho with a scalar cocycle.

    With ``exact`` (default for finite groups and rational phases) the
    coefficient algebra is Q(zeta_order); otherwise 1x1 complex matrices.
    """
    if exact is None:
        exact = cocycle.kind == "clifford"
    if exact:
        alg = CyclotomicAlgebra(order)
        sig = lambda x, y: Cyclotomic.from_turns(cocycle.phase(x, y).turns, order)  # noqa: E731
    else:
        alg = MatrixAlgebra(1)
        sig = lambda x, y: np.array([[cocycle(x, y)]])  # noqa: E731
    return TwistingPair(group, alg, sig, cocycle=cocycle, name=cocycle.kind)


def trivial_pair(group: AbelianGroup, algebra: CoefficientAlgebra) -> TwistingPair:
    return TwistingPair(group, algebra, lambda x, y: algebra.one(), name="trivial")


@dataclass(frozen=True)
class Violation:
    axiom: str
    elements: tuple
    residual: float


@dataclass
class VerificationReport:
    checked: int
    tol: float
    violations: list[Violation] = field(default_factory=list)
    worst: dict[str, float] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations

    def record(self, axiom: str, elements: tuple, residual: float):
        self.worst[axiom] = max(self.worst.get(axiom, 0.0), residual)
        if residual > self.tol:
            self.violations.append(Violation(axiom, tuple(e.coords if isinstance(e, GroupElement) else e for e in elements), residual))

    def worst_violation(self) -> Violation | None:
        return max(self.violations, key=lambda v: v.residual) if self.violations else None


def _triples(group: AbelianGroup, exhaustive_limit: int, samples: int, seed: int, box: int):
    if group.is_finite and group.order <= exhaustive_limit:
        els = group.elements()
        return list(itertools.product(els, repeat=3))
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(samples):
        trip = []
        for _ in range(3):
            c = [int(rng.integers(0, m)) if m else int(rng.integers(-box, box + 1)) for m in group.moduli]
            trip.append(group.element(c))
        out.append(tuple(trip))
    return out


def verify_twisting_pair(
    pair: TwistingPair,
    tol: float | None = None,
    exhaustive_limit: int = 16,
    samples: int = 10_000,
    seed: int = 0,
    box: int = 16,
    mode: str = "auto",
    triples: Sequence[tuple] | None = None,
) -> VerificationReport:
    """Check the three twisting-pair axioms.

    ``mode="exact"`` uses the cocycle's phase exponents (scalar pairs with
    trivial rho only) and tolerates nothing; ``"numeric"`` evaluates in the
    coefficient algebra.  ``"auto"`` picks exact when possible.
    """
    G, alg = pair.group, pair.algebra
    exact_ok = pair.cocycle is not None and pair.cocycle.phase(G.identity(), G.identity()) is not None and pair.trivial_rho
    if mode == "auto":
        mode = "exact" if exact_ok and (alg.exact or pair.cocycle.kind != "table") else "numeric"
    if mode == "exact" and not exact_ok:
        raise ValueError("exact mode needs a scalar phase cocycle with trivial rho")
    if tol is None:
        tol = 0.0 if (mode == "exact" or alg.exact) else 1e-12
    trip = triples if triples is not None else _triples(G, exhaustive_limit, samples, seed, box)
    report = VerificationReport(len(trip), tol)
    e = G.identity()

    if mode == "exact":
        c = pair.cocycle
        table: dict = {}

        def ph(a, b):
            key = (a.coords, b.coords)
            if key not in table:
                table[key] = c.phase(a, b)
            return table[key]

        # integer numerators over a common denominator keep the check exact and fast
        for x, y, z in trip:
            ph(y, z), ph(x, y + z), ph(x, y), ph(x + y, z)
        L = math.lcm(*(p.turns.denominator for p in table.values()))
        num = {k: (p.turns.numerator * (L // p.turns.denominator), p.theta_units) for k, p in table.items()}
        for x, y, z in trip:
            a, b = num[(y.coords, z.coords)], num[(x.coords, (y + z).coords)]
            u, v = num[(x.coords, y.coords)], num[((x + y).coords, z.coords)]
            same = (a[0] + b[0] - u[0] - v[0]) % L == 0 and a[1] + b[1] == u[1] + v[1]
            report.record("cocycle", (x, y, z), 0.0 if same else 1.0)
        for x in {t[0] for t in trip}:
            report.record("normalization", (x,), 0.0 if c.phase(x, e).is_one() and c.phase(e, x).is_one() else 1.0)
        return report

    one = alg.one()
    tests = alg.test_elements()
    seen = set()
    for x, y, z in trip:
        syz = pair.sigma(y, z)
        rhs = alg.mul(alg.mul(pair.sigma(x, y), pair.sigma(x + y, z)), alg.adjoint(pair.sigma(x, y + z)))
        report.record("cocycle", (x, y, z), alg.distance(pair.rho(x, syz), rhs))
        key = (x.coords, y.coords)
        if key in seen:
            continue
        seen.add(key)
        sxy = pair.sigma(x, y)
        u = alg.unitarity_residual(sxy)
        if u > tol:
            report.record("non-unitary", (x, y), u)
        for a in tests:
            lhs = pair.rho(x, pair.rho(y, a))
            rhs = alg.conjugate(sxy, pair.rho(x + y, a))
            report.record("composition", (x, y), alg.distance(lhs, rhs))
    for x in {t[0] for t in trip} | {e}:
        report.record("normalization", (x,), max(alg.distance(pair.sigma(x, e), one), alg.distance(pair.sigma(e, x), one)))
    for a in tests:
        report.record("normalization", (e,), alg.distance(pair.rho(e, a), a))
    return report


def act_by_p(pair: TwistingPair, p: Callable[[GroupElement], Any]) -> TwistingPair:
    """The pair (Ad(p(j)) o rho_j, p(j) rho_j(p(k)) sigma_{j,k} p(j+k)^*)."""
    alg = pair.algebra
    e = pair.group.identity()
    if alg.distance(p(e), alg.one()) > 1e-12:
        raise ValueError("p(e) must be the unit")

    def rho(x, a):
        return alg.conjugate(p(x), pair.rho(x, a))

    def sigma(j, k):
        return alg.mul(alg.mul(alg.mul(p(j), pair.rho(j, p(k))), pair.sigma(j, k)), alg.adjoint(p(j + k)))

    return TwistingPair(pair.group, alg, sigma, rho=rho, name=f"{pair.name}^p")


@dataclass
class Frame:
    """Unitaries mu_k in the spectral subspaces B_k, with mu_0 = 1.

    ``group`` is the dual group indexing the subspaces; ``algebra`` supplies
    the ambient *-operations; ``projector`` (optional) maps an element onto
    B_k and is used for membership checks.
    """

    group: FiniteAbelianGroup
    algebra: CoefficientAlgebra
    unitaries: dict[tuple[int, ...], Any]
    projector: Callable[[GroupElement, Any], Any] | None = None

    def __call__(self, k: GroupElement):
        return self.unitaries[k.coords]

    def validate(self, tol: float = 1e-10) -> dict[str, float]:
        alg = self.algebra
        out = {"unitary": 0.0, "membership": 0.0, "unit": alg.distance(self(self.group.identity()), alg.one())}
        for k in self.group.elements():
            mu = self(k)
            out["unitary"] = max(out["unitary"], alg.unitarity_residual(mu))
            if self.projector is not None:
                out["membership"] = max(out["membership"], alg.distance(self.projector(k, mu), mu))
        return out


def frame_to_pair(frame: Frame, tol: float = 1e-10) -> TwistingPair:
    """rho_j = Ad(mu_j), sigma_{j,k} = mu_j mu_k mu_{j+k}^*."""
    checks = frame.validate()
    if checks["unitary"] > tol:
        raise ValueError(f"frame element not unitary ({checks['unitary']:.3g})")
    if checks["membership"] > tol:
        raise ValueError(f"frame element outside its spectral subspace ({checks['membership']:.3g})")
    if checks["unit"] > tol:
        raise ValueError("frame must send the neutral element to the unit")
    alg = frame.algebra

    def sigma(j, k):
        return alg.mul(alg.mul(frame(j), frame(k)), alg.adjoint(frame(j + k)))

    return TwistingPair(frame.group, alg, sigma, rho_unitary=frame, name="frame")

