import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from models import SMALL_GROUPS, identity_pi, matrix_pair

from twistedtriples.algebra import (
    CovariantPair,
    TwistedElement,
    delta,
    from_json,
    integrated_form,
    involution,
    left_regular_matrix,
    random_element,
    restricted,
    star_product,
    to_json,
    unit,
    verify_covariant,
)
from twistedtriples.coefficients import CyclotomicAlgebra, MatrixAlgebra
from twistedtriples.coverings import covering_covariant_pair, m2_example, rank1_regular_check
from twistedtriples.exact import Cyclotomic
from twistedtriples.groups import FiniteAbelianGroup, free_abelian, z2n
from twistedtriples.torus import (
    DEFAULT_THETA,
    TorusAlgebra,
    TorusConfig,
    TorusElement,
    crossed_element,
    torus_covariant_pair,
    torus_pair,
)
from twistedtriples.twist import (
    TwistingPair,
    clifford_cocycle,
    frame_to_pair,
    scalar_pair,
    theta_bicharacter,
    trivial_pair,
    verify_twisting_pair,
)


def clifford_generators(n):
    pair = scalar_pair(z2n(n), clifford_cocycle(n))
    i = pair.algebra.root(1)
    return pair, [delta(pair, g, i) for g in pair.group.generators()]


def exactly_equal(f, g):
    keys = set(f.terms) | set(g.terms)
    return all(f[k] == g[k] for k in keys)


def test_point_mass_product():
    pair = matrix_pair(FiniteAbelianGroup((2, 4)), 2, seed=1)
    alg = pair.algebra
    rng = np.random.default_rng(0)
    a, b = alg.random(rng), alg.random(rng)
    x, y = pair.group.element((1, 3)), pair.group.element((1, 2))
    got = star_product(delta(pair, x, a), delta(pair, y, b))
    assert got.support == [x + y]
    expect = a @ pair.rho(x, b) @ pair.sigma(x, y)
    assert np.abs(got[x + y] - expect).max() < 1e-14


def test_unit_is_two_sided():
    pair, gens = clifford_generators(3)
    f = gens[0] + gens[2].scale(3)
    assert exactly_equal(f * unit(pair), f)
    assert exactly_equal(unit(pair) * f, f)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_clifford_relations(n):
    pair, e = clifford_generators(n)
    minus_one = unit(pair).scale(-1)
    for i in range(n):
        assert exactly_equal(e[i] * e[i], minus_one)
        for j in range(i + 1, n):
            assert exactly_equal(e[i] * e[j], (e[j] * e[i]).scale(-1))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_clifford_generators_skew_adjoint(n):
    pair, e = clifford_generators(n)
    for g in e:
        assert exactly_equal(involution(g), g.scale(-1))


def test_involution_of_unit():
    pair, _ = clifford_generators(2)
    assert exactly_equal(involution(unit(pair)), unit(pair))


def test_involution_point_mass_rule():
    pair = matrix_pair(FiniteAbelianGroup((3, 3)), 2, seed=4)
    alg = pair.algebra
    a = alg.random(np.random.default_rng(2))
    x = pair.group.element((1, 2))
    got = involution(delta(pair, x, a))
    expect = alg.adjoint(pair.sigma(-x, x)) @ pair.rho(-x, alg.adjoint(a))
    assert got.support == [-x]
    assert np.abs(got[-x] - expect).max() < 1e-14


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(SMALL_GROUPS), st.integers(1, 3), st.integers(0, 10_000))
def test_involution_properties(moduli, d, seed):
    G = FiniteAbelianGroup(moduli)
    pair = matrix_pair(G, d, seed)
    rng = np.random.default_rng(seed)
    f = random_element(pair, G.elements()[:3], rng)
    g = random_element(pair, G.elements()[-3:], rng)
    assert involution(involution(f)).distance(f) < 1e-12
    assert involution(f * g).distance(involution(g) * involution(f)) < 1e-11


@pytest.mark.parametrize("moduli", [(4,), (2, 2), (2, 4), (4, 4), (2, 2, 2, 2)])
def test_associativity_exact(moduli):
    G = FiniteAbelianGroup(moduli)
    pair = scalar_pair(G, clifford_cocycle(len(moduli)) if set(moduli) == {2} else _cyclic_cocycle(G), exact=True, order=4)
    rng = np.random.default_rng(len(moduli))
    els = G.elements()
    for _ in range(50):
        f, g, h = (random_element(pair, [els[i] for i in rng.choice(len(els), 3, replace=False)], rng) for _ in range(3))
        assert exactly_equal((f * g) * h, f * (g * h))


def _cyclic_cocycle(G):
    # exp(2 pi i x_last y_first / 4) for moduli dividing 4
    from fractions import Fraction

    from twistedtriples.exact import Phase
    from twistedtriples.twist import PhaseCocycle

    m = G.moduli[0]
    return PhaseCocycle("bichar", {}, lambda x, y: Phase(Fraction(x[-1] * y[0], m)))


def test_associativity_torus_phases():
    cfg = TorusConfig(DEFAULT_THETA, ((2, 1), (0, 3)), 3)
    pair = torus_pair(cfg)
    alg = pair.algebra
    rng = np.random.default_rng(7)
    els = cfg.dual.elements()
    support = [cfg.MT((a, b)) for a in (-1, 0, 1) for b in (-1, 0, 1)]
    worst = 0.0
    for _ in range(1000):
        f, g, h = (
            TwistedElement(pair, {els[int(rng.integers(len(els)))]: alg.random(rng, [support[int(rng.integers(9))]])})
            for _ in range(3)
        )
        worst = max(worst, ((f * g) * h).distance(f * (g * h)))
    assert worst <= 1e-11


def _twisted_group_ring(c, G, f: dict, g: dict) -> dict:
    """Independent product: apply the matrix of left multiplication by f to the vector g."""
    els = G.elements()
    idx = {x: i for i, x in enumerate(els)}
    L = np.zeros((len(els), len(els)), dtype=complex)
    for y, fy in f.items():
        for z in els:
            L[idx[y + z], idx[z]] += fy * c(y, z)
    v = np.array([g.get(z, 0) for z in els])
    return dict(zip(els, L @ v))


@pytest.mark.parametrize("n", [2, 3])
def test_scalar_case_matches_twisted_group_ring(n):
    G = z2n(n)
    c = clifford_cocycle(n)
    pair = scalar_pair(G, c, exact=False)
    rng = np.random.default_rng(n)
    fv = {x: complex(*rng.normal(size=2)) for x in G.elements()}
    gv = {x: complex(*rng.normal(size=2)) for x in G.elements()}
    f = TwistedElement(pair, {x: np.array([[v]]) for x, v in fv.items()})
    g = TwistedElement(pair, {x: np.array([[v]]) for x, v in gv.items()})
    oracle = _twisted_group_ring(c, G, fv, gv)
    prod = f * g
    for x in G.elements():
        assert abs(prod[x][0, 0] - oracle[x]) < 1e-12


# regular representation


def test_left_regular_untwisted_is_permutation():
    G = FiniteAbelianGroup((2, 4))
    pair = trivial_pair(G, MatrixAlgebra(2))
    a = np.array([[1, 2j], [3, 4]], dtype=complex)
    x = G.element((1, 1))
    op = left_regular_matrix(pair, identity_pi, delta(pair, x, a), G.elements())
    els = G.elements()
    P = np.zeros((len(els), len(els)))
    for j, y in enumerate(els):
        P[els.index(x + y), j] = 1
    assert np.array_equal(op.matrix, np.kron(a, P))
    assert op.interior.all()


def test_left_regular_boundary_mask():
    G = free_abelian(1)
    pair = trivial_pair(G, MatrixAlgebra(1))
    ball = [G.element((k,)) for k in range(-3, 4)]
    op = left_regular_matrix(pair, identity_pi, delta(pair, G.element((1,))), ball)
    assert op.interior.tolist() == [True] * 6 + [False]
    assert op.matrix[:, 6].sum() == 0


def test_left_regular_empty_ball():
    pair = trivial_pair(z2n(1), MatrixAlgebra(1))
    with pytest.raises(ValueError):
        left_regular_matrix(pair, identity_pi, unit(pair), [])


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(SMALL_GROUPS), st.integers(1, 4), st.integers(0, 10_000))
def test_regular_representation_homomorphism(moduli, d, seed):
    G = FiniteAbelianGroup(moduli)
    pair = matrix_pair(G, d, seed)
    rng = np.random.default_rng(seed)
    els = G.elements()
    f, g = random_element(pair, els, rng), random_element(pair, els, rng)
    P = lambda h: left_regular_matrix(pair, identity_pi, h, els, d).matrix  # noqa: E731
    assert np.linalg.norm(P(f * g) - P(f) @ P(g), 2) <= 1e-12 * max(1, np.linalg.norm(P(f), 2) * np.linalg.norm(P(g), 2))
    assert np.linalg.norm(P(involution(f)) - P(f).conj().T, 2) <= 1e-12 * max(1, np.linalg.norm(P(f), 2))


def test_matrix_pairs_verify():
    for moduli in SMALL_GROUPS[:4]:
        assert verify_twisting_pair(matrix_pair(FiniteAbelianGroup(moduli), 3, 5), exhaustive_limit=64).ok


@pytest.mark.parametrize("moduli, d", [((2, 2), 2), ((6,), 1), ((3, 3), 2)])
def test_regular_representation_faithful(moduli, d):
    G = FiniteAbelianGroup(moduli)
    pair = matrix_pair(G, d, 3)
    els = G.elements()
    rows = []
    for x in els:
        for e in MatrixAlgebra(d).test_elements():
            rows.append(left_regular_matrix(pair, identity_pi, delta(pair, x, e), els, d).matrix.ravel())
    gram = np.array(rows) @ np.array(rows).conj().T
    assert np.linalg.matrix_rank(gram) == len(els) * d * d


# covariant pairs and the integrated form


def _m2_cov():
    action = m2_example()
    frame = rank1_regular_check(action).frame
    return covering_covariant_pair(action, frame), frame_to_pair(frame)


def test_integrated_form_of_point_masses():
    cov, pair = _m2_cov()
    e = pair.group.identity()
    assert np.array_equal(integrated_form(cov, unit(pair)), np.eye(2))
    a = np.diag([2.0, -1j])
    assert np.array_equal(integrated_form(cov, delta(pair, e, a)), a)


def test_integrated_form_multiplicative_on_finite_cov():
    cov, pair = _m2_cov()
    rng = np.random.default_rng(1)
    els = pair.group.elements()
    for _ in range(20):
        f, g = random_element(pair, els, rng), random_element(pair, els, rng)
        assert np.abs(integrated_form(cov, f * g) - integrated_form(cov, f) @ integrated_form(cov, g)).max() < 1e-12
        assert np.abs(integrated_form(cov, involution(f)) - integrated_form(cov, f).conj().T).max() < 1e-12


def test_verify_covariant_frame_pair_clean():
    cov, pair = _m2_cov()
    assert verify_covariant(cov, pair).ok


def test_verify_covariant_detects_bad_unit():
    cov, pair = _m2_cov()
    bad = CovariantPair(cov.pi, lambda x: -np.eye(2) if x.is_identity() else cov.U(x), cov.dim)
    rep = verify_covariant(bad, pair)
    assert "unit" in {v.axiom for v in rep.violations}
    f = delta(pair, pair.group.element((1,)))
    with pytest.raises(ValueError):
        integrated_form(bad, f)


def test_integrated_form_torus_matches_frame_product():
    cfg = TorusConfig(DEFAULT_THETA, ((2, 0), (0, 2)), 3)
    pair = torus_pair(cfg)
    cov, _ = torus_covariant_pair(cfg, 3, pad=6)
    assert verify_covariant(cov, pair).ok
    alg = pair.algebra
    for j in cfg.dual.elements():
        for x in ((0, 0), (1, 0), (-1, 1)):
            f = crossed_element(cfg, pair, x, j, 0.5 - 1j)
            a = f[j]
            lhs = integrated_form(cov, f)
            rhs = cov.pi(alg.mul(a, TorusElement.w(cfg.s(j))))
            assert np.abs(restricted(lhs, cov.interior) - restricted(rhs, cov.interior)).max() < 1e-13


def test_torus_algebra_unit_and_adjoint():
    alg = TorusAlgebra(DEFAULT_THETA)
    w = TorusElement.w((2, -1), 1.5j)
    assert alg.distance(alg.mul(alg.one(), w), w) == 0
    ww = alg.mul(TorusElement.w((2, -1)), alg.adjoint(TorusElement.w((2, -1))))
    assert alg.distance(ww, alg.one()) < 1e-15


def test_json_round_trip():
    pair = matrix_pair(FiniteAbelianGroup((2, 2)), 2, 0)
    f = random_element(pair, pair.group.elements(), np.random.default_rng(0))
    g = from_json(pair, to_json(f))
    assert g.distance(f) == 0


def test_pair_mismatch_rejected():
    p1, p2 = trivial_pair(z2n(1), MatrixAlgebra(1)), trivial_pair(z2n(1), MatrixAlgebra(1))
    with pytest.raises(ValueError):
        star_product(unit(p1), unit(p2))


def test_theta_twisted_ring_on_ball():
    # the scalar theta pair on Z^2: delta_x * delta_y = s(x, y) delta_{x+y}
    Z2 = free_abelian(2)
    c = theta_bicharacter(DEFAULT_THETA)
    pair = scalar_pair(Z2, c, exact=False)
    x, y = Z2.element((1, 0)), Z2.element((0, 1))
    prod = delta(pair, x) * delta(pair, y)
    assert abs(prod[x + y][0, 0] - cmath.exp(-1j * math.pi * DEFAULT_THETA)) < 1e-15


def test_cyclotomic_scalar_pair_is_exact():
    pair = scalar_pair(z2n(2), clifford_cocycle(2))
    assert isinstance(pair.algebra, CyclotomicAlgebra)
    assert isinstance(pair.sigma(*z2n(2).generators()), Cyclotomic)
    assert isinstance(TwistingPair, type)
