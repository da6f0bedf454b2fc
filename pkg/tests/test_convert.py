import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vnlocc.algebra import AlgElement, StdVector, act, densities, make_algebra, modular_conjugation
from vnlocc.channels import (
    apply_schrodinger,
    identity_protocol,
    link,
    validate_instrument,
    vector_state,
)
from vnlocc.convert import (
    DoublyStochastic,
    abelian_protocol,
    birkhoff,
    correction_operators,
    decide_convertible,
    decide_convertible_abelian,
    measurement_operators,
    mixing_decomposition,
    output_state,
    reduce_to_one_way,
    synthesize_protocol,
    transfer_matrix,
    verify_protocol,
)
from vnlocc.exceptions import MatchingError, NotConvertibleError, UnsupportedError, ValidationError
from vnlocc._linalg import trace_norm_hermitian
from vnlocc.sampling import (
    random_factor,
    random_majorised_pair,
    random_one_way,
    random_state,
    random_unitary,
    state_with_density,
)
from vnlocc.spectral import majorises


def diag_state(A, probs, rng=None):
    """Vector with eigenvalues ``probs`` of rho (relative to Tr), in a random basis."""
    n = A.dims[0]
    w = A.weights[0]
    root = np.diag(np.sqrt(np.asarray(probs, float) / w))
    if rng is not None:
        u, v = random_unitary(n, rng), random_unitary(n, rng)
        root = u @ root @ v
    return StdVector(A, [root])


def partial_sum_oracle(psi, phi, tol=1e-9):
    a = np.sort(np.linalg.eigvalsh(psi.data[0] @ psi.data[0].conj().T))[::-1]
    b = np.sort(np.linalg.eigvalsh(phi.data[0] @ phi.data[0].conj().T))[::-1]
    return bool(np.all(np.cumsum(a) <= np.cumsum(b) + tol))


# -- decisions -------------------------------------------------------------------


def test_trace_vector_converts_to_anything(rng):
    for n in (2, 3, 5):
        A = random_factor(n)
        psi = StdVector(A, [np.eye(n)])
        for _ in range(10):
            assert decide_convertible(A, psi, random_state(A, rng))


def test_decide_examples(rng):
    A = random_factor(2, normalised=False)
    psi = diag_state(A, [0.9, 0.1], rng)
    phi = diag_state(A, [0.7, 0.3], rng)
    assert decide_convertible(A, psi, psi)
    assert not decide_convertible(A, psi, phi)
    assert decide_convertible(A, phi, psi)


def test_separable_sink(rng):
    A = random_factor(4)
    phi = diag_state(A, [1.0, 0, 0, 0], rng)
    for _ in range(20):
        assert decide_convertible(A, random_state(A, rng), phi)


def test_decide_rejects_bad_input(rng):
    B = make_algebra([(2, 0.25), (1, 0.5)])
    with pytest.raises(UnsupportedError):
        decide_convertible(B, random_state(B, rng), random_state(B, rng))
    A = random_factor(2)
    psi = random_state(A, rng)
    with pytest.raises(ValidationError):
        decide_convertible(A, 2 * psi, psi)
    with pytest.raises(ValidationError):
        decide_convertible(A, 0 * psi, psi)


def test_decision_matches_oracle(rng):
    for n in range(2, 7):
        A = random_factor(n)
        for _ in range(40):
            psi, phi = random_state(A, rng), random_state(A, rng)
            assert decide_convertible(A, psi, phi) == partial_sum_oracle(psi, phi)


# -- abelian ---------------------------------------------------------------------


def _abelian_unit(weights, rng):
    x = rng.standard_normal(len(weights)) + 1j * rng.standard_normal(len(weights))
    return x / np.sqrt(np.dot(weights, np.abs(x) ** 2))


def test_abelian_criterion(rng):
    weights = rng.uniform(0.2, 2.0, 5)
    psi = _abelian_unit(weights, rng)
    rotated = psi * np.exp(1j * rng.uniform(0, 2 * np.pi, 5))
    assert decide_convertible_abelian(weights, psi, rotated)
    assert decide_convertible_abelian(weights, psi, psi)
    bumped = np.abs(psi).astype(complex)
    bumped[[1, 2]] = bumped[[2, 1]] * np.sqrt(weights[[2, 1]] / weights[[1, 2]])
    assert not decide_convertible_abelian(weights, psi, bumped)
    with pytest.raises(ValidationError):
        decide_convertible_abelian(weights[:4], psi, psi)
    with pytest.raises(ValidationError):
        decide_convertible_abelian(weights, 2 * psi, psi)


def test_abelian_protocol_is_exact(rng):
    weights = rng.uniform(0.2, 2.0, 4)
    psi = _abelian_unit(weights, rng)
    psi[1] = 0
    psi /= np.sqrt(np.dot(weights, np.abs(psi) ** 2))
    phi = psi * np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
    theta = abelian_protocol(weights, psi, phi)
    A = theta.parent
    as_vec = lambda x: StdVector(A, [[[z]] for z in x])
    assert verify_protocol(theta, as_vec(psi), as_vec(phi)) < 1e-12
    with pytest.raises(NotConvertibleError):
        abelian_protocol(weights, psi, _abelian_unit(weights, rng))


# -- T-transforms and Birkhoff ---------------------------------------------------


def test_transfer_identity():
    d = transfer_matrix([0.5, 0.3, 0.2], [0.5, 0.3, 0.2])
    assert np.array_equal(d.matrix, np.eye(3))


def test_transfer_two_by_two():
    d = transfer_matrix([0.5, 0.5], [1.0, 0.0])
    assert np.allclose(d.matrix, [[0.5, 0.5], [0.5, 0.5]], atol=1e-15)


def test_transfer_three():
    src, tgt = np.array([0.4, 0.35, 0.25]), np.array([0.6, 0.3, 0.1])
    d = transfer_matrix(src, tgt)
    assert np.abs(d.matrix @ tgt - src).max() <= 1e-12


def test_transfer_rejects_violation():
    with pytest.raises(NotConvertibleError):
        transfer_matrix([0.6, 0.4], [0.5, 0.5])
    with pytest.raises(NotConvertibleError):
        transfer_matrix([0.6, 0.4], [0.7, 0.4])
    with pytest.raises(ValidationError):
        transfer_matrix([0.4, 0.6], [1.0, 0.0])


@st.composite
def majorised_vectors(draw):
    n = draw(st.integers(1, 7))
    seed = draw(st.integers(0, 2**31))
    rng = np.random.default_rng(seed)
    tgt = np.sort(rng.dirichlet(np.ones(n) * draw(st.floats(0.1, 3))))[::-1]
    # src = convex mix of permutations of tgt
    k = draw(st.integers(1, 4))
    p = rng.dirichlet(np.ones(k))
    src = sum(pi * tgt[rng.permutation(n)] for pi in p)
    return np.sort(src)[::-1], tgt


@settings(max_examples=80, deadline=None)
@given(majorised_vectors())
def test_transfer_and_birkhoff_roundtrip(pair):
    src, tgt = pair
    d = transfer_matrix(src, tgt)
    assert np.abs(d.matrix @ tgt - src).max() <= 1e-10
    assert np.abs(d.matrix.sum(0) - 1).max() <= 1e-12 and np.abs(d.matrix.sum(1) - 1).max() <= 1e-12
    terms = birkhoff(d)
    n = src.size
    assert len(terms) <= (n - 1) ** 2 + 1
    assert sum(p for p, _ in terms) == pytest.approx(1.0, abs=1e-12)
    assert np.abs(sum(p * m for p, m in terms) - d.matrix).max() <= 1e-10


def test_birkhoff_permutation():
    perm = np.eye(4)[[2, 0, 3, 1]]
    terms = birkhoff(perm)
    assert len(terms) == 1 and terms[0][0] == pytest.approx(1.0)
    assert np.array_equal(terms[0][1], perm)


def test_birkhoff_two_by_two():
    terms = birkhoff(np.full((2, 2), 0.5))
    assert len(terms) == 2
    got = sorted((p, tuple(np.argmax(m, axis=1))) for p, m in terms)
    assert got[0][0] == pytest.approx(0.5) and got[1][0] == pytest.approx(0.5)
    assert {g[1] for g in got} == {(0, 1), (1, 0)}


def test_birkhoff_reduces_term_count(rng):
    n = 4
    perms = [np.eye(n)[list(p)] for p in itertools.permutations(range(n))]
    weights = rng.dirichlet(np.ones(len(perms)))
    d = sum(w * p for w, p in zip(weights, perms))
    terms = birkhoff(d)
    assert len(terms) <= (n - 1) ** 2 + 1
    assert np.abs(sum(p * m for p, m in terms) - d).max() <= 1e-10
    assert all(p > 0 for p, _ in terms)
    for _, m in terms:
        assert np.array_equal(np.sort(m, axis=None), np.r_[np.zeros(n * n - n), np.ones(n)])


def test_birkhoff_from_transfer_matrix(rng):
    for _ in range(20):
        tgt = np.sort(rng.dirichlet(np.ones(4)))[::-1]
        src = np.sort(0.3 * tgt + 0.7 * tgt[rng.permutation(4)])[::-1]
        d = transfer_matrix(src, tgt)
        assert np.abs(sum(p * m for p, m in birkhoff(d)) - d.matrix).max() <= 1e-10


def test_doubly_stochastic_validation():
    with pytest.raises(ValidationError):
        DoublyStochastic(np.array([[0.5, 0.6], [0.5, 0.4]]))
    with pytest.raises(ValidationError):
        DoublyStochastic(np.array([[1.5, -0.5], [-0.5, 1.5]]))


# -- mixing, measurement, correction ---------------------------------------------


def test_mixing_same_density(rng):
    A = random_factor(3)
    psi = random_state(A, rng)
    rho, _ = densities(psi)
    mix = mixing_decomposition(A, rho, rho)
    assert len(mix.weights) == 1 and mix.weights[0] == pytest.approx(1.0)
    u = mix.unitaries[0].data[0]
    assert np.allclose(u @ u.conj().T, np.eye(3))
    assert mix.residual() <= 1e-12


def test_mixing_maximally_mixed(rng):
    for n in (2, 3, 5):
        A = random_factor(n)
        rho_phi = densities(random_state(A, rng))[0]
        mix = mixing_decomposition(A, AlgElement.identity(A), rho_phi)
        assert mix.residual() <= 1e-10
        # oracle: average over the cyclic shifts in the eigenbasis of rho_phi
        vals, vecs = np.linalg.eigh(rho_phi.data[0])
        shift = np.roll(np.eye(n), 1, axis=0)
        avg = sum(
            np.linalg.matrix_power(shift, k) @ np.diag(vals) @ np.linalg.matrix_power(shift, k).T for k in range(n)
        ) / n
        assert np.allclose(vecs @ avg @ vecs.conj().T, np.eye(n), atol=1e-12)


def test_mixing_random_pairs(rng):
    worst = 0.0
    for trial in range(1000):
        n = 2 + trial % 5
        A = random_factor(n)
        psi, phi = random_majorised_pair(A, rng, terms=1 + trial % 4)
        mix = mixing_decomposition(A, densities(psi)[0], densities(phi)[0])
        assert sum(mix.weights) == pytest.approx(1.0, abs=1e-12)
        for u in mix.unitaries:
            assert np.abs(u.data[0] @ u.data[0].conj().T - np.eye(n)).max() <= 1e-10
        worst = max(worst, mix.residual())
    assert worst <= 1e-9


def test_mixing_rejects_non_majorised(rng):
    A = random_factor(2, normalised=False)
    with pytest.raises(NotConvertibleError):
        mixing_decomposition(A, densities(diag_state(A, [0.9, 0.1]))[0], densities(diag_state(A, [0.7, 0.3]))[0])


def _contracts(rho, mix, ops, m0):
    n = rho.data[0].shape[0]
    worst_rho = max(
        np.abs(m.data[0] @ rho.data[0] @ m.data[0].conj().T - p * u.data[0] @ mix.target.data[0] @ u.data[0].conj().T).max()
        for m, p, u in zip(ops, mix.weights, mix.unitaries)
    )
    total = sum(m.data[0].conj().T @ m.data[0] for m in ops) + m0.data[0].conj().T @ m0.data[0]
    return worst_rho, np.abs(total - np.eye(n)).max()


def test_measurement_single_term(rng):
    A = random_factor(3)
    psi = diag_state(A, [0.5, 0.5, 0.0], rng)
    rho, _ = densities(psi)
    mix = mixing_decomposition(A, rho, rho)
    ops, m0 = measurement_operators(rho, mix)
    supp = ops[0].data[0]
    assert np.allclose(supp @ supp, supp, atol=1e-12)
    assert np.allclose(supp + m0.data[0], np.eye(3), atol=1e-12)
    assert np.linalg.matrix_rank(m0.data[0], tol=1e-8) == 1


def test_measurement_full_rank_and_random(rng):
    for n in (3, 4):
        A = random_factor(n)
        for _ in range(10):
            psi, phi = random_majorised_pair(A, rng)
            rho = densities(psi)[0]
            mix = mixing_decomposition(A, rho, densities(phi)[0])
            ops, m0 = measurement_operators(rho, mix)
            assert np.abs(m0.data[0]).max() <= 1e-12
            a, b = _contracts(rho, mix, ops, m0)
            assert a <= 1e-9 and b <= 1e-9


def test_measurement_rank_deficient(rng):
    A = random_factor(4)
    phi = diag_state(A, [0.25 * 0.7, 0.25 * 0.3, 0, 0], rng)
    psi = diag_state(A, [0.25 * 0.5, 0.25 * 0.5, 0, 0], rng)
    rho = densities(psi)[0]
    mix = mixing_decomposition(A, rho, densities(phi)[0])
    ops, m0 = measurement_operators(rho, mix)
    a, b = _contracts(rho, mix, ops, m0)
    assert a <= 1e-9 and b <= 1e-9
    assert np.linalg.matrix_rank(m0.data[0], tol=1e-8) == 2


def _branch_residuals(psi, phi):
    A = psi.parent
    rho = densities(psi)[0]
    mix = mixing_decomposition(A, rho, densities(phi)[0])
    ops, _ = measurement_operators(rho, mix)
    res = []
    for (a, c), p in zip(correction_operators(psi, phi, ops, mix), mix.weights):
        from vnlocc.algebra import commutant_act

        res.append((commutant_act(c, act("left", a, psi)) - np.sqrt(p) * phi).norm())
    return mix, res


def test_correction_identity_target(rng):
    A = random_factor(3)
    psi = random_state(A, rng)
    mix, res = _branch_residuals(psi, psi)
    assert len(res) == 1 and res[0] <= 1e-10


def test_correction_from_trace_vector(rng):
    A = random_factor(2)
    psi = StdVector(A, [np.eye(2)])
    mix, res = _branch_residuals(psi, random_state(A, rng))
    assert len(res) == 2
    assert max(res) <= 1e-10


def test_correction_random(rng):
    A = random_factor(3)
    for _ in range(10):
        psi, phi = random_majorised_pair(A, rng)
        _, res = _branch_residuals(psi, phi)
        assert max(res) <= 1e-9


# -- synthesis and verification --------------------------------------------------


def test_synthesize_identity(rng):
    A = random_factor(3)
    psi = random_state(A, rng)
    theta = synthesize_protocol(A, psi, psi)
    assert verify_protocol(theta, psi, psi) <= 1e-10


def test_synthesize_from_maximally_entangled(rng):
    A = random_factor(2)
    psi = StdVector(A, [np.eye(2)])
    for _ in range(10):
        phi = random_state(A, rng)
        assert verify_protocol(synthesize_protocol(A, psi, phi), psi, phi) <= 1e-9


@pytest.mark.parametrize("direction", ["right", "left"])
def test_synthesize_random(direction, rng):
    A = random_factor(5)
    for _ in range(10):
        psi, phi = random_majorised_pair(A, rng)
        theta = synthesize_protocol(A, psi, phi, direction)
        assert theta.direction == direction
        assert verify_protocol(theta, psi, phi) <= 1e-8
        assert verify_protocol(theta, psi, phi, "lowrank") <= 1e-8
        assert validate_instrument(theta).unital
        assert theta.measurement_defect() <= 1e-9
        assert max(theta.correction_defects()) <= 1e-9


def test_synthesize_refuses(rng):
    A = random_factor(2, normalised=False)
    with pytest.raises(NotConvertibleError):
        synthesize_protocol(A, diag_state(A, [0.9, 0.1], rng), diag_state(A, [0.7, 0.3], rng))
    with pytest.raises(ValidationError):
        synthesize_protocol(A, diag_state(A, [0.5, 0.5]), diag_state(A, [0.7, 0.3]), direction="up")


def test_round_trip(rng):
    for n in range(2, 7):
        A = random_factor(n)
        for _ in range(15):
            psi, phi = random_state(A, rng), random_state(A, rng)
            if decide_convertible(A, psi, phi):
                theta = synthesize_protocol(A, psi, phi)
                assert verify_protocol(theta, psi, phi) <= 1e-8
                # (i) => (ii) on the constructed protocol: each branch output has rho <= ...
                assert majorises(A, densities(psi)[0], densities(phi)[0])
            else:
                with pytest.raises(NotConvertibleError):
                    synthesize_protocol(A, psi, phi)


def test_verify_lowrank_agrees_with_full(rng):
    A = random_factor(3)
    theta = random_one_way(A, rng, 3, 2)
    psi, phi = random_state(A, rng), random_state(A, rng)
    assert verify_protocol(theta, psi, phi, "lowrank") == pytest.approx(verify_protocol(theta, psi, phi), abs=1e-12)
    with pytest.raises(ValidationError):
        verify_protocol(theta, psi, phi, "other")


def test_verify_identity_and_unreachable(rng):
    A = random_factor(2, normalised=False)
    psi = diag_state(A, [0.9, 0.1])
    phi = diag_state(A, [0.7, 0.3])
    one = identity_protocol(A)
    assert verify_protocol(one, psi, psi) == pytest.approx(0, abs=1e-15)
    # the A-restriction is contractive, and ||rho_psi - rho_phi||_1 >= sum |lambda_psi - lambda_phi| = 0.4
    d = verify_protocol(one, psi, phi)
    assert d >= 0.4
    overlap = abs(np.vdot(psi.data[0].ravel(), phi.data[0].ravel())) ** 2
    assert d == pytest.approx(2 * np.sqrt(1 - overlap), rel=1e-12)


# -- reduction to one-way ----------------------------------------------------------


def test_reduce_one_round(rng):
    A = random_factor(3)
    psi, phi = random_majorised_pair(A, rng)
    theta = synthesize_protocol(A, psi, phi)
    reduced = reduce_to_one_way([theta], psi)
    assert reduced.direction == "right"
    diff = output_state(reduced, psi) - output_state(theta, psi)
    assert trace_norm_hermitian(diff) <= 1e-8


def _two_round(A, rng):
    """Right protocol psi -> chi, then a left protocol chi -> phi linked to every branch."""
    phi = random_state(A, rng)
    chi_rho = densities(phi)[0]
    from vnlocc.sampling import random_mixture

    chi = state_with_density(random_mixture(chi_rho, rng), rng)
    # chi must have the same eigen-data as the mixture, phi majorises it
    psi = state_with_density(random_mixture(densities(chi)[0], rng), rng)
    first = synthesize_protocol(A, psi, chi, "right").to_instrument()
    second = synthesize_protocol(A, chi, phi, "left")
    return psi, phi, link(first, [second] * len(first.branches))


def test_reduce_two_rounds(rng):
    A = random_factor(3)
    psi, phi, linked = _two_round(A, rng)
    reduced = reduce_to_one_way([linked], psi)
    assert reduced.direction == "right"
    assert trace_norm_hermitian(output_state(reduced, psi) - output_state(linked, psi)) <= 1e-8
    assert verify_protocol(reduced, psi, phi) <= 1e-8


def test_reduce_sequence_of_rounds(rng):
    A = random_factor(2)
    psi, phi = random_majorised_pair(A, rng)
    theta = synthesize_protocol(A, psi, phi, "left")
    reduced = reduce_to_one_way([identity_protocol(A), theta], psi)
    assert verify_protocol(reduced, psi, phi) <= 1e-8


def test_reduce_rejects_mixed_output(rng):
    A = random_factor(2)
    psi = random_state(A, rng)
    with pytest.raises(ValidationError):
        reduce_to_one_way([random_one_way(A, rng, 2, 2)], psi)
    with pytest.raises(ValidationError):
        reduce_to_one_way([], psi)
    B = make_algebra([(1, 1.0), (1, 1.0)])
    with pytest.raises(UnsupportedError):
        reduce_to_one_way([identity_protocol(B)], random_state(B, rng))
