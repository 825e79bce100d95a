import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import sqrtm

from twistedtriples.groups import enumerate_ball, free_abelian
from twistedtriples.length import WordLength, clifford_length, rotated_frame_length, scalar_clifford_length
from twistedtriples.regularity import (
    KMAX_CAP,
    AbsFactor,
    DeltaFactor,
    GdoEvaluator,
    abs_discrepancy,
    closed_form_check,
    degree_audit,
    delta_k,
    dilation_ladder,
    gdo_generate,
    gdo_order_probes,
    group_abs_factor,
    group_action_order_check,
    group_regularity_sweep,
    identity_ladder,
    ladder_evidence,
    lipschitz_abs_check,
    rotated_commutator_growth,
    sobolev_order_probe,
    tech_condition_check,
    torus_action_ladder,
)
from twistedtriples.torus import TorusConfig
from twistedtriples.triple import build_group_triple


def hermitian(rng, n):
    X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (X + X.conj().T) / 2


def abs_oracle(D):
    return sqrtm(D @ D)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 3))
def test_delta_k_matches_nested_commutators(seed, k):
    rng = np.random.default_rng(seed)
    D = hermitian(rng, 5)
    T = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    A = abs_oracle(D)
    X = T
    for _ in range(k):
        X = A @ X - X @ A
    got = delta_k(T, AbsFactor.from_dirac(D), k)
    assert np.abs(got - X).max() < 1e-9 * max(1.0, np.abs(X).max())


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_delta_leibniz(seed):
    rng = np.random.default_rng(seed)
    F = AbsFactor.from_dirac(hermitian(rng, 4))
    S, T = (rng.normal(size=(4, 4)) for _ in range(2))
    lhs = delta_k(S @ T, F, 1)
    rhs = delta_k(S, F, 1) @ T + S @ delta_k(T, F, 1)
    assert np.abs(lhs - rhs).max() < 1e-10


def test_delta_vanishes_on_functions_of_abs():
    rng = np.random.default_rng(0)
    D = hermitian(rng, 4)
    F = AbsFactor.from_dirac(D)
    assert np.abs(delta_k(F.matrix @ F.matrix, F, 1)).max() < 1e-10
    with pytest.raises(ValueError):
        delta_k(D, F, 0)


def test_abs_factor_from_blocks():
    blocks = [np.array([[0, 2], [2, 0]]), np.array([[-3.0]])]
    F = AbsFactor.from_blocks(blocks)
    assert np.allclose(F.matrix, np.diag([2, 2, 3]))
    F = AbsFactor.from_blocks([np.diag([1.0, -2.0])])
    assert F.basis is None and F.values.tolist() == [1, 2]


def test_group_abs_factor_agrees_with_eigh():
    G = free_abelian(2)
    t = build_group_triple(clifford_length(2), 4, G)
    assert abs_discrepancy(t) < 1e-12
    assert group_abs_factor(t).matrix.shape == t.dirac.shape


def test_closed_form_exact():
    G = free_abelian(2)
    t = build_group_triple(clifford_length(2), 6, G)
    rep = closed_form_check(t, G.generators(), 3)
    assert rep["exact"] and rep["max_deviation"] == 0


def test_tech_condition():
    G2 = free_abelian(2)
    assert tech_condition_check(clifford_length(2), enumerate_ball(G2, clifford_length(2), 5)).max_commutator == 0
    G1 = free_abelian(1)
    assert tech_condition_check(scalar_clifford_length(), enumerate_ball(G1, scalar_clifford_length(), 5)).holds
    rep = tech_condition_check(rotated_frame_length(), enumerate_ball(G2, rotated_frame_length(), 4))
    assert not rep.holds and rep.worst is not None


def test_clifford_sweep_plateau():
    G = free_abelian(2)
    rep = group_regularity_sweep(clifford_length(2), G, G.generators(), 3, [20, 40])
    assert rep.tech.holds and not rep.flags
    assert rep.max_ratio() < 1.05 and rep.plateau()


def test_word_length_delta_bounded_by_one():
    G = free_abelian(1)
    rep = group_regularity_sweep(WordLength(G), G, G.generators(), 1, [10, 40])
    assert max(rep.series((1,), 1)) <= 1


def test_rotated_frame_flagged_and_grows():
    G = free_abelian(2)
    L = rotated_frame_length()
    rep = group_regularity_sweep(L, G, G.generators(), 1, [5, 10])
    assert "no boundedness guarantee" in rep.flags
    vals = rotated_commutator_growth(L, G, G.element((1, 0)), [5, 10, 20], k=2)
    assert vals[-1] > 1.5 * vals[0]


def test_sweep_validation():
    G = free_abelian(1)
    with pytest.raises(ValueError):
        group_regularity_sweep(WordLength(G), G, G.generators(), 0, [1, 2])
    with pytest.raises(ValueError):
        group_regularity_sweep(WordLength(G), G, G.generators(), 1, [2, 1])


# order probes


def test_probe_delta_half_has_order_one():
    rng = np.random.default_rng(1)
    D = hermitian(rng, 6)
    F = DeltaFactor.from_dirac(D)
    probe = sobolev_order_probe(F.power(0.5), F, 1.0)
    assert np.allclose(probe.norms, 1.0)
    assert sobolev_order_probe(D, F, 1.0).max_norm <= 1 + 1e-12


def test_probe_bounded_operator_order_zero():
    D = np.diag(np.arange(8.0))
    F = DeltaFactor.from_dirac(D)
    probe = sobolev_order_probe(np.eye(8), F, 0.0)
    assert probe.max_norm == pytest.approx(1.0)
    assert np.allclose(F.matrix(), np.eye(8) + D @ D)


def test_ladder_evidence():
    assert ladder_evidence([10, 20, 40], [1.0, 1.0, 1.0]).passed
    assert not ladder_evidence([10, 20, 40], [10, 20, 40]).passed
    assert ladder_evidence([10, 20], [0.0, 0.0]).passed


# GDO words


def test_gdo_degree_zero_and_one():
    levels = gdo_generate(1, 1)
    assert [str(w) for w in levels[0][:2]] == ["a0", "[D,a0]"]
    assert len(levels[0]) == 2 + 4
    assert all(w.degree == 1 for w in levels[1])
    assert str(levels[1][0]) == "[L,a0]"
    assert degree_audit(levels)


def test_gdo_cap_and_limit():
    with pytest.raises(ValueError):
        gdo_generate(1, KMAX_CAP + 1)
    levels = gdo_generate(2, 3, limit=5)
    assert all(len(ws) <= 5 for ws in levels.values())
    assert degree_audit(levels)


def test_gdo_evaluator():
    D = np.diag([0.0, 1.0, 2.0])
    a = np.roll(np.eye(3), 1, axis=0)
    ev = GdoEvaluator(D, [a])
    levels = gdo_generate(1, 1)
    w = levels[1][0]
    Delta = np.eye(3) + D @ D
    assert np.allclose(ev(w), Delta @ a - a @ Delta)


def test_gdo_order_probes_flat_on_commuting_generator():
    D = np.diag(np.arange(6.0))
    probes = gdo_order_probes(D, [np.diag(np.linspace(1, 2, 6))], 2)
    # the generator commutes with D, so only pi-words survive, with norm at most ||a||^2
    assert all(p.max_norm <= 4 + 1e-12 for _, p in probes)
    assert all(p.max_norm == 0 for w, p in probes if w.degree > 0)


# group actions


def test_identity_action_passes():
    assert group_action_order_check(identity_ladder([8, 16, 32])).passed


def test_dilation_action_fails():
    rep = group_action_order_check(dilation_ladder([8, 16, 32]))
    assert not rep.passed and "[D,dilation]" in rep.failures()


def test_action_cap():
    with pytest.raises(ValueError):
        group_action_order_check(identity_ladder([4, 8]), k_max=4)


def test_torus_action_passes():
    cfg = TorusConfig(M=((2, 0), (0, 2)), cutoff=3)
    rep = group_action_order_check(torus_action_ladder(cfg, [3, 5, 7], coefficients=True), k_max=2)
    assert rep.passed, rep.failures()


# Lipschitz


def test_lipschitz_dim_one_contractive():
    rep = lipschitz_abs_check(1, 2000)
    assert rep.contractive and rep.per_log_dim is None


@pytest.mark.parametrize("dim", [2, 4])
def test_lipschitz_higher_dim_exceeds_one(dim):
    rep = lipschitz_abs_check(dim, 2000)
    assert rep.max_ratio > 1


def test_lipschitz_validation():
    with pytest.raises(ValueError):
        lipschitz_abs_check(0)
