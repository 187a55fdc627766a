import numpy as np
import pytest

from amnm.algebra import (
    build_commutative_algebra,
    build_full_matrix_algebra,
    direct_sum,
    generated_subalgebra,
    identity_embedding,
    opposite,
    unitize,
)
from amnm.diagonal import (
    NoLibraryDiagonal,
    TensorRep,
    average,
    library_diagonal,
    split,
    verify_diagonal,
)
from amnm.errors import PreconditionError
from amnm.multilinear import Cochain, LinearMap, defect_cochain, identity_map
from amnm.rng import complex_gaussian, stream


def test_m2_diagonal_by_direct_computation():
    # Delta = (1/2)(e11 x e11 + e12 x e21 + e21 x e12 + e22 x e22)
    m2 = build_full_matrix_algebra(2)
    cert = library_diagonal(m2)
    assert cert.valid
    assert cert.residual_commute == 0.0 and cert.residual_unit == 0.0
    w = cert.rep.dense()
    expected = np.zeros((4, 4), dtype=complex)
    for i, j in ((0, 0), (1, 2), (2, 1), (3, 3)):
        expected[i, j] = 0.5
    assert np.allclose(w, expected)
    # under the Frobenius norm each leg has norm 1, so the bound is 2
    m2f = build_full_matrix_algebra(2, norm_mode="frobenius")
    assert library_diagonal(m2f).K == pytest.approx(2.0)


def test_commutative_diagonal():
    c2 = build_commutative_algebra(2)
    cert = library_diagonal(c2)
    assert cert.valid and cert.residual_commute == 0.0 and cert.residual_unit == 0.0
    assert np.allclose(cert.rep.dense(), np.eye(2))
    # under Euclidean coordinates the representation bound k is tight
    cf = library_diagonal(build_commutative_algebra(3, norm_mode="frobenius"))
    assert cf.K == pytest.approx(3.0)


def test_direct_sum_diagonal_concatenates():
    m2 = build_full_matrix_algebra(2)
    c1 = build_commutative_algebra(1)
    s = direct_sum(m2, c1)
    cert = library_diagonal(s)
    assert cert.valid
    assert cert.K == pytest.approx(library_diagonal(m2).K + library_diagonal(c1).K)


def test_unitization_diagonal():
    d0 = build_commutative_algebra(2)
    du = unitize(d0)
    cert = library_diagonal(du)
    assert cert.valid
    # scalar head plus the base diagonal
    assert cert.K == pytest.approx((1 + 1) ** 2 + 2.0)


def test_generated_subalgebra_diagonal_via_idempotents():
    m2 = build_full_matrix_algebra(2)
    d, _ = generated_subalgebra(m2, [m2.basis_element(0)], unital=True)
    cert = library_diagonal(d)
    assert cert.valid
    assert cert.K == pytest.approx(2.0)


def test_full_span_pullback_diagonal():
    m2 = build_full_matrix_algebra(2)
    d, _ = generated_subalgebra(m2, [m2.basis_element(1), m2.basis_element(2)], unital=False)
    assert d.dim == 4
    cert = library_diagonal(d)
    assert cert.valid


def test_unsupported_algebra_refused():
    # upper triangular matrices: no library diagonal on offer
    m2 = build_full_matrix_algebra(2)
    d, _ = generated_subalgebra(m2, [m2.basis_element(0), m2.basis_element(1)], unital=True)
    assert d.dim == 3
    with pytest.raises(NoLibraryDiagonal):
        library_diagonal(d)


def test_verify_flags_bad_representations():
    m2 = build_full_matrix_algebra(2)
    one_one = TensorRep(m2, [(m2.unit_coords, m2.unit_coords)])
    cert = verify_diagonal(m2, one_one)
    assert not cert.valid
    assert cert.residual_commute > 0.1  # witnessed by e12
    zero = TensorRep(m2, [])
    zcert = verify_diagonal(m2, zero)
    assert not zcert.valid
    assert zcert.residual_unit == pytest.approx(1.0)  # max ||a|| over the basis


def test_flip_carries_diagonal_to_opposite():
    for alg in (build_full_matrix_algebra(2), build_commutative_algebra(3)):
        cert = library_diagonal(alg)
        op = opposite(alg)
        flipped = cert.rep.flip(op)
        cert_op = verify_diagonal(op, flipped)
        assert cert_op.valid
        assert cert_op.K == pytest.approx(cert.K)


def test_average_single_pair_matches_direct_formula():
    m2 = build_full_matrix_algebra(2)
    emb = identity_embedding(m2)
    rng = stream(41, 0)
    phi = LinearMap(m2, m2, complex_gaussian(rng, (4, 4)))
    psi = Cochain((m2, m2), m2, complex_gaussian(rng, (4, 4, 4)))
    c, d = complex_gaussian(rng, 4), complex_gaussian(rng, 4)
    avg = average(phi, emb, TensorRep(m2, [(c, d)]), psi)
    for i in range(4):
        a = np.eye(4)[i]
        expected = m2.multiply_coords(phi.apply(c), psi.evaluate(d, a))
        assert np.allclose(avg.evaluate(a), expected)


def test_average_zero_rep_gives_zero():
    m2 = build_full_matrix_algebra(2)
    emb = identity_embedding(m2)
    phi = identity_map(m2)
    psi = Cochain((m2, m2), m2, complex_gaussian(stream(42, 0), (4, 4, 4)))
    avg = average(phi, emb, TensorRep(m2, []), psi)
    assert np.abs(avg.tensor).max() == 0.0


def test_average_representation_independent():
    # the operator depends only on the tensor the pairs define
    m2 = build_full_matrix_algebra(2)
    emb = identity_embedding(m2)
    rng = stream(43, 0)
    phi = LinearMap(m2, m2, complex_gaussian(rng, (4, 4)))
    psi = Cochain((m2, m2), m2, complex_gaussian(rng, (4, 4, 4)))
    c, d = complex_gaussian(rng, 4), complex_gaussian(rng, 4)
    rep1 = TensorRep(m2, [(c, d)])
    rep2 = TensorRep(m2, [(0.5 * c, d), (0.5 * c, d)])
    a1 = average(phi, emb, rep1, psi)
    a2 = average(phi, emb, rep2, psi)
    assert np.allclose(a1.tensor, a2.tensor)


def test_split_requires_valid_cert():
    m2 = build_full_matrix_algebra(2)
    emb = identity_embedding(m2)
    bad = verify_diagonal(m2, TensorRep(m2, [(m2.unit_coords, m2.unit_coords)]))
    psi = Cochain((m2, m2), m2, np.zeros((4, 4, 4)))
    with pytest.raises(PreconditionError):
        split(identity_map(m2), emb, bad, psi)


def test_split_hand_expanded_m2():
    # D = M2: the sum runs over the four matrix-unit pairs
    m2 = build_full_matrix_algebra(2)
    emb = identity_embedding(m2)
    cert = library_diagonal(m2)
    rng = stream(44, 0)
    phi = LinearMap(m2, m2, complex_gaussian(rng, (4, 4)))
    chain = defect_cochain(phi)
    out = split(phi, emb, cert, chain)
    k = 2
    idx = lambda i, j: i * k + j
    hand = np.zeros((4, 4), dtype=complex)
    for i in range(k):
        for j in range(k):
            c = np.zeros(4)
            c[idx(i, j)] = 1.0 / k
            d = np.zeros(4)
            d[idx(j, i)] = 1.0
            for a_i in range(4):
                hand[:, a_i] += m2.multiply_coords(
                    phi.apply(c), chain.evaluate(d, np.eye(4)[a_i])
                )
    assert np.allclose(out.tensor, hand)


def test_split_scalar_subalgebra_fixes_unit_preserving_maps():
    # D = span(1): the defect cochain vanishes on D so the correction is zero
    m2 = build_full_matrix_algebra(2)
    d, emb = generated_subalgebra(m2, [m2.unit()], unital=True)
    cert = library_diagonal(d)
    gamma = complex_gaussian(stream(45, 0), (4, 4))
    unit = m2.unit_coords
    gamma -= np.outer(gamma @ unit, unit.conj()) / np.vdot(unit, unit)
    phi = LinearMap(m2, m2, np.eye(4) + gamma)
    out = split(phi, emb, cert, defect_cochain(phi))
    assert np.abs(out.tensor).max() < 1e-12


def test_split_multiplicative_map_is_fixed():
    m2 = build_full_matrix_algebra(2)
    emb = identity_embedding(m2)
    cert = library_diagonal(m2)
    out = split(identity_map(m2), emb, cert, defect_cochain(identity_map(m2)))
    assert np.abs(out.tensor).max() == 0.0
