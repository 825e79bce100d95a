import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from models import matrix_pair

from twistedtriples.algebra import CovariantPair, delta, random_element
from twistedtriples.coefficients import MatrixAlgebra
from twistedtriples.coverings import EXAMPLES, covering_covariant_pair, rank1_regular_check
from twistedtriples.groups import FiniteAbelianGroup, cyclic, enumerate_ball, free_abelian, z2n
from twistedtriples.length import WordLength, clifford_length, m_ell_matrix, scalar_clifford_length
from twistedtriples.order import singular_sequence_from_spectrum
from twistedtriples.triple import (
    MAX_DIM,
    SizeError,
    TruncatedTriple,
    TruncationSpec,
    block_structure_ok,
    build_even_to_odd,
    build_group_triple,
    build_odd_to_even,
    conjugator_W,
    counting_sandwich,
    equicontinuity_sweep,
    equivariant_build,
    exterior_product,
    group_crossed_rung,
    intertwining_check,
    intertwining_check_full,
    matrix_triple,
    mode_cutoff,
    nondegeneracy_check,
    perturbation_gap,
    summability_report,
)
from twistedtriples.twist import frame_to_pair, trivial_pair

SZ = np.diag([1.0, -1.0]).astype(complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)


def crossed_abs_oracle(coeff_eigs, length_eigs):
    # (D~)^2 = D^2 (x) 1 + 1 (x) M^2 on each copy, eigenvalues come in +- pairs
    v = np.sqrt(np.add.outer(np.square(coeff_eigs), np.square(length_eigs)).ravel())
    return np.sort(np.concatenate([v, v]))


# truncation spec and matrix triples


def test_truncation_spec_validation():
    with pytest.raises(ValueError):
        TruncationSpec(-1)
    with pytest.raises(ValueError):
        TruncationSpec(1, 0)


def test_even_triple_needs_grading():
    with pytest.raises(ValueError):
        TruncatedTriple(np.eye(2), lambda a: a, "even")
    with pytest.raises(ValueError):
        TruncatedTriple(np.eye(2), lambda a: a, "neither")


def test_size_cap():
    G = free_abelian(2)
    with pytest.raises(SizeError):
        build_group_triple(clifford_length(2), 80, G)
    assert MAX_DIM == 8192


def test_matrix_triple_invariants():
    t = matrix_triple(SX, SZ)
    inv = t.invariants([np.diag([1.0, 2.0])])
    assert inv["hermitian"] == 0 and inv["grading_square"] == 0 and inv["anticommute"] == 0
    assert inv["grading_commutes"] == 0
    assert matrix_triple(SX, SZ).invariants([SX])["grading_commutes"] == 2


def test_mode_cutoff_odd():
    t = matrix_triple(np.diag([0.0, 1.0, -3.0, 5.0]))
    c = mode_cutoff(t, 3.0)
    assert sorted(c.eigenvalues().round(12).tolist()) == [-3.0, 0.0, 1.0]


def test_mode_cutoff_even_keeps_grading():
    D = np.kron(SX, np.diag([1.0, 4.0]))
    chi = np.kron(SZ, np.eye(2))
    c = mode_cutoff(matrix_triple(D, chi), 2.0)
    assert c.dim == 2
    inv = c.invariants()
    assert inv["anticommute"] < 1e-14 and inv["grading_square"] < 1e-14


# group triples


def test_group_triple_trivial_ball():
    G = free_abelian(2)
    t = build_group_triple(clifford_length(2), [G.identity()], G)
    assert not t.dirac.any()


def test_group_triple_integer_spectrum():
    G = free_abelian(1)
    t = build_group_triple(scalar_clifford_length(), 3, G)
    assert np.allclose(np.sort(t.eigenvalues()), np.arange(-3, 4))


@pytest.mark.parametrize("g", [(1, 0), (0, 1), (2, -1)])
def test_group_triple_commutator_is_length(g):
    # ([M, lambda_g] xi)(x) = (l(x) - l(x - g)) xi(x - g) = l(g) xi(x - g)
    G = free_abelian(2)
    L = clifford_length(2)
    t = build_group_triple(L, 4, G)
    op = t.represent_op(G.element(g))
    C = t.commutator(G.element(g))
    mask = op.interior_mask()
    expect = op.matrix @ np.kron(np.eye(len(t.meta["ball"])), L.matrix(g))
    assert np.abs((C - expect)[:, mask]).max() < 1e-12
    assert np.linalg.norm(C[:, mask], 2) == pytest.approx(math.hypot(*g))


def test_group_triple_nondegenerate():
    G = free_abelian(1)
    t = build_group_triple(scalar_clifford_length(), 5, G)
    elements = [G.element((k,)) for k in range(-2, 3)]
    rep = nondegeneracy_check(t, elements)
    assert rep["ok"]
    assert [g.coords for g in rep["commuting"]] == [(0,)]


def test_group_triple_rejects_improper_length():
    from twistedtriples.length import TableLength

    G = free_abelian(1)
    T = TableLength({(0,): [[0.0]], (1,): [[0.0]], (-1,): [[1.0]]})
    with pytest.raises(ValueError):
        build_group_triple(T, [G.element((k,)) for k in (-1, 0, 1)], G)


# odd -> even


def test_odd_to_even_trivial_group():
    G = cyclic(1)
    pair = trivial_pair(G, MatrixAlgebra(2))
    coeff = matrix_triple(np.diag([1.5, -2.0]))
    t = build_odd_to_even(coeff, pair, WordLength(G), G.elements())
    assert np.allclose(np.sort(t.eigenvalues()), [-2, -1.5, 1.5, 2])


def test_odd_to_even_z2_word_length():
    G = z2n(1)
    pair = trivial_pair(G, MatrixAlgebra(1))
    t = build_odd_to_even(matrix_triple(np.zeros((1, 1))), pair, WordLength(G), G.elements())
    assert np.allclose(np.sort(t.eigenvalues()), [-1, 0, 0, 1])


@pytest.mark.parametrize("R", [2, 3])
def test_odd_to_even_spectrum_and_invariants(R):
    G = free_abelian(2)
    L = clifford_length(2)
    pair = trivial_pair(G, MatrixAlgebra(2))
    coeff = matrix_triple(np.array([[0.5, 1j], [-1j, 2.0]]))
    ball = enumerate_ball(G, L, R)
    t = build_odd_to_even(coeff, pair, L, ball)
    D2 = t.dirac @ t.dirac
    M = m_ell_matrix(L, ball)
    block = np.kron(coeff.dirac @ coeff.dirac, np.eye(M.shape[0])) + np.kron(np.eye(2), M @ M)
    assert np.abs(D2 - np.kron(np.eye(2), block)).max() < 1e-12
    assert np.allclose(np.abs(np.sort(np.abs(t.eigenvalues()))), crossed_abs_oracle(coeff.eigenvalues(), np.linalg.eigvalsh(M)))
    inv = t.invariants([delta(pair, G.element((1, 0)), np.diag([1.0, 2.0]))])
    assert max(inv.values()) < 1e-14


def test_odd_to_even_representation_is_doubled():
    G = FiniteAbelianGroup((2, 2))
    pair = matrix_pair(G, 2, 1)
    coeff = matrix_triple(np.diag([1.0, -1.0]))
    t = build_odd_to_even(coeff, pair, WordLength(G), G.elements())
    f = random_element(pair, G.elements(), np.random.default_rng(0))
    P = t.represent(f)
    single = t.meta["single"](f).matrix
    n = single.shape[0]
    assert np.array_equal(P[:n, :n], single) and np.array_equal(P[n:, n:], single)
    assert not P[:n, n:].any()


def test_odd_to_even_homomorphism_on_finite_group():
    G = FiniteAbelianGroup((4,))
    pair = matrix_pair(G, 2, 2)
    t = build_odd_to_even(matrix_triple(np.diag([1.0, 3.0])), pair, WordLength(G), G.elements())
    rng = np.random.default_rng(3)
    f, g = random_element(pair, G.elements(), rng), random_element(pair, G.elements(), rng)
    assert np.abs(t.represent(f * g) - t.represent(f) @ t.represent(g)).max() < 1e-12


def test_parity_mismatch():
    G = z2n(1)
    pair = trivial_pair(G, MatrixAlgebra(2))
    with pytest.raises(ValueError):
        build_odd_to_even(matrix_triple(SX, SZ), pair, WordLength(G), G.elements())
    with pytest.raises(ValueError):
        build_even_to_odd(matrix_triple(SX), pair, WordLength(G), G.elements())


# even -> odd


def test_even_to_odd_block_structure():
    G = free_abelian(1)
    L = scalar_clifford_length()
    pair = trivial_pair(G, MatrixAlgebra(2))
    ball = enumerate_ball(G, L, 3)
    t = build_even_to_odd(matrix_triple(SX, SZ), pair, L, ball)
    M = m_ell_matrix(L, ball)
    assert block_structure_ok(t, M)
    # D~^2 = (D^2 + M^2) blockwise since chi anticommutes with D
    D2 = t.dirac @ t.dirac
    assert np.abs(D2 - np.kron(np.eye(2), np.eye(7) + M @ M)).max() < 1e-12


def test_even_to_odd_nondiagonal_grading():
    G = free_abelian(1)
    L = scalar_clifford_length()
    pair = trivial_pair(G, MatrixAlgebra(2))
    Q = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    chi = Q @ SZ @ Q.T
    D = Q @ SX @ Q.T
    ball = enumerate_ball(G, L, 2)
    t = build_even_to_odd(matrix_triple(D, chi), pair, L, ball)
    assert block_structure_ok(t, m_ell_matrix(L, ball))
    assert np.allclose(np.sort(np.abs(t.eigenvalues())), np.sort(np.sqrt(1 + np.repeat(np.arange(-2, 3) ** 2, 2))))


def test_block_structure_detects_fault():
    G = free_abelian(1)
    L = scalar_clifford_length()
    pair = trivial_pair(G, MatrixAlgebra(2))
    ball = enumerate_ball(G, L, 2)
    t = build_even_to_odd(matrix_triple(SX, SZ), pair, L, ball)
    t.dirac[0, 1] += 0.5
    assert not block_structure_ok(t, m_ell_matrix(L, ball))


# exterior product


def test_exterior_product_scalars():
    t = exterior_product(matrix_triple([[1.0]]), matrix_triple([[2.0]]))
    assert np.allclose(np.sort(t.eigenvalues()), [-math.sqrt(5), math.sqrt(5)])
    assert max(t.invariants([(np.eye(1), np.eye(1))]).values()) == 0


def test_exterior_product_with_zero():
    t = exterior_product(matrix_triple(np.diag([1.0, -2.0])), matrix_triple(np.zeros((1, 1))))
    assert np.allclose(np.sort(t.eigenvalues()), [-2, -1, 1, 2])


def test_exterior_product_square():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    B = rng.normal(size=(2, 2))
    D1, D2 = A + A.conj().T, B + B.T
    t = exterior_product(matrix_triple(D1), matrix_triple(D2))
    S = np.kron(D1 @ D1, np.eye(2)) + np.kron(np.eye(3), D2 @ D2)
    assert np.abs(t.dirac @ t.dirac - np.kron(np.eye(2), S)).max() < 1e-12


def test_exterior_product_needs_odd():
    with pytest.raises(ValueError):
        exterior_product(matrix_triple(SX, SZ), matrix_triple(SX))


# equivariant construction and W


def test_equivariant_with_trivial_action_matches_crossed():
    G = free_abelian(1)
    L = scalar_clifford_length()
    pair = trivial_pair(G, MatrixAlgebra(2))
    coeff = matrix_triple(np.diag([1.0, -1.0]))
    cov = CovariantPair(coeff.represent, lambda x: np.eye(2, dtype=complex), 2)
    ball = enumerate_ball(G, L, 3)
    t1 = equivariant_build(coeff, cov, pair, L, ball)
    t2 = build_odd_to_even(coeff, pair, L, ball)
    assert np.array_equal(t1.dirac, t2.dirac)
    f = delta(pair, G.element((1,)), np.array([[1, 2], [3, 4]]))
    assert np.abs(t1.represent(f) - t2.represent(f)).max() == 0


def test_equivariant_rejects_bad_cov():
    G = z2n(1)
    pair = trivial_pair(G, MatrixAlgebra(2))
    coeff = matrix_triple(np.diag([1.0, -1.0]))
    bad = CovariantPair(coeff.represent, lambda x: 2 * np.eye(2, dtype=complex), 2)
    with pytest.raises(ValueError):
        equivariant_build(coeff, bad, pair, WordLength(G), G.elements())


def test_conjugator_identity_case():
    G = free_abelian(1)
    pair = trivial_pair(G, MatrixAlgebra(2))
    cov = CovariantPair(lambda a: np.asarray(a, dtype=complex), lambda x: np.eye(2, dtype=complex), 2)
    ball = enumerate_ball(G, scalar_clifford_length(), 2)
    assert np.array_equal(conjugator_W(cov, pair, ball), np.eye(10))


@pytest.mark.parametrize("name", ["m2", "clock-shift"])
def test_intertwining_finite_models(name):
    action = EXAMPLES[name]()
    frame = rank1_regular_check(action).frame
    cov = covering_covariant_pair(action, frame)
    pair = frame_to_pair(frame)
    G = pair.group
    tests = pair.algebra.test_elements()
    assert intertwining_check(cov, pair, G.elements(), tests, G.elements()).ok(1e-11)
    assert intertwining_check_full(cov, pair, G.elements(), tests, G.elements()).ok(1e-11)


def test_intertwining_detects_wrong_U():
    action = EXAMPLES["m2"]()
    frame = rank1_regular_check(action).frame
    cov = covering_covariant_pair(action, frame)
    pair = frame_to_pair(frame)
    G = pair.group
    bad = CovariantPair(cov.pi, lambda x: np.eye(cov.dim, dtype=complex), cov.dim)
    rep = intertwining_check(bad, pair, G.elements(), pair.algebra.test_elements(), G.elements())
    assert not rep.ok(1e-6)


def test_perturbation_gap_zero_when_commuting():
    G = z2n(1)
    pair = trivial_pair(G, MatrixAlgebra(2))
    coeff = matrix_triple(np.diag([1.0, -1.0]))
    U = {0: np.eye(2), 1: SZ}
    cov = CovariantPair(coeff.represent, lambda x: U[x.coords[0]], 2)
    rep = perturbation_gap(cov, pair, coeff, G.elements())
    assert rep.gap == 0 and rep.sup_commutator_U == 0 and rep.bounded_evidence


def test_perturbation_gap_bounded_by_commutators():
    G = z2n(1)
    pair = trivial_pair(G, MatrixAlgebra(2))
    coeff = matrix_triple(np.diag([1.0, -1.0]))
    U = {0: np.eye(2), 1: SX}
    cov = CovariantPair(coeff.represent, lambda x: U[x.coords[0]], 2)
    rep = perturbation_gap(cov, pair, coeff, G.elements())
    # sx D sx - D = diag(-2, 2)
    assert rep.gap == pytest.approx(2.0) and rep.sup_commutator_U == pytest.approx(2.0)
    assert rep.bounded_evidence


def test_equicontinuity_finite_exact():
    G = FiniteAbelianGroup((2, 2))
    pair = matrix_pair(G, 2, 0)
    coeff = matrix_triple(np.diag([1.0, -1.0]))
    rep = equicontinuity_sweep(coeff, pair, np.eye(2), G.element((1, 0)), [1, 2])
    assert rep.exact and rep.plateau


def test_equicontinuity_infinite_needs_length():
    G = free_abelian(1)
    pair = trivial_pair(G, MatrixAlgebra(2))
    coeff = matrix_triple(np.diag([1.0, -1.0]))
    with pytest.raises(ValueError):
        equicontinuity_sweep(coeff, pair, np.eye(2), G.element((1,)), [1, 2])
    rep = equicontinuity_sweep(coeff, pair, SX, G.element((1,)), [2, 4, 8], scalar_clifford_length())
    assert rep.plateau and rep.values[-1] == pytest.approx(2.0)


# summability


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.floats(-20, 20), min_size=1, max_size=12),
    st.lists(st.floats(-20, 20), min_size=1, max_size=12),
    st.floats(0.5, 40),
)
def test_counting_sandwich_holds(ce, le, t):
    assert counting_sandwich(ce, le, [t]).holds


def test_summability_finite_group():
    # finite G: the product abscissa is that of the coefficient
    def rung(R):
        ce = np.arange(-int(R), int(R) + 1, dtype=float)
        return ce, np.array([0.0, 1.0, 1.0, 2.0]), float(R)

    rep = summability_report(rung, [2000, 4000, 8000], growth=0.0)
    assert abs(rep.coefficient_abscissa - 1) < 0.1
    assert abs(rep.product_abscissa - 1) < 0.1 and rep.bound_holds


def test_summability_ladder_length():
    with pytest.raises(ValueError):
        summability_report(lambda R: (np.ones(3), np.ones(3), 1.0), [1, 2])


def test_group_crossed_rung_sandwich():
    G = free_abelian(1)
    build = group_crossed_rung(WordLength(G), G, scalar_clifford_length(), G)
    rep = summability_report(build, [20, 30, 40], growth=1.0)
    assert all(r.sandwich.holds for r in rep.rungs)
    assert 1.6 <= rep.product_abscissa <= 2.4


def test_singular_sequence_ordering():
    mu = singular_sequence_from_spectrum([3.0, 0.0, -1.0])
    assert np.all(np.diff(mu) <= 0)
